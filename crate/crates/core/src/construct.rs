//! Closed-form nonspreading packets Ψ = f(x − d(t)) e^{iφ(x,t)} and the
//! time-dependent potential that supports them.
//!
//! Given a static potential V with a bound or Airy mode f of energy E_f, any
//! designed motion d(t) and any gauge G(t), the packet solves the TDSE in
//! `V_nswp(x,t) = V(x − d) − m d̈ x + G` provided the phase is
//! `φ = (m ḋ/ħ) x + φ₀(t)` with `φ₀ = −(1/ħ)∫₀ᵗ (E_f + G + m ḋ²/2)`.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::eigen::{linear_mode_value, EigenPair, PotentialDescriptor, StaticPotential};
use crate::error::{Error, Result};
use crate::field::{
    interpolate_at, second_derivative_5pt, shift_field, Grid1D, PhysicalConstants, WaveField,
};
use crate::io::{fmt_g17, write_json};
use crate::specfun::{integrate_time, CumulativeIntegral, RealFn};
use crate::trajectory::{Kinematics, Trajectory, TrajectoryDescriptor};

/// Absolute tolerance of the φ₀ quadrature.
pub const PHI0_TOL: f64 = 1e-11;
/// Time step of the finite-difference ∂ₜ in [`NswpSolution::tdse_residual`].
pub const RESIDUAL_DT: f64 = 1e-5;
/// Shape samples below this fraction of the peak count as outside the support.
const SUPPORT_CUTOFF: f64 = 1e-8;

/// The x-independent term G(t) of the supporting potential.
#[derive(Debug, Clone)]
pub enum GaugeFunction {
    Zero,
    /// G = A·d(t): cancels the static part of a linear potential A x.
    LinearCompensation {
        force: f64,
    },
    /// G = −m ω² d(t)² / 2: leaves a static oscillator potential.
    HarmonicCompensation {
        omega: f64,
    },
    Custom {
        label: String,
        g: RealFn,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GaugeDescriptor {
    Zero,
    LinearCompensation { force: f64 },
    HarmonicCompensation { omega: f64 },
    Custom { label: String },
}

impl GaugeFunction {
    /// The gauge that makes the supporting potential of `v` as simple as
    /// possible: free space for a linear potential, a static well for the
    /// oscillator, nothing otherwise.
    pub fn default_for(v: &StaticPotential) -> Self {
        match *v {
            StaticPotential::Linear { force } => GaugeFunction::LinearCompensation { force },
            StaticPotential::Harmonic { omega } => GaugeFunction::HarmonicCompensation { omega },
            _ => GaugeFunction::Zero,
        }
    }

    pub fn eval(&self, t: f64, k: &Kinematics, consts: &PhysicalConstants) -> f64 {
        match self {
            GaugeFunction::Zero => 0.0,
            GaugeFunction::LinearCompensation { force } => force * k.d,
            GaugeFunction::HarmonicCompensation { omega } => {
                -0.5 * consts.mass * omega * omega * k.d * k.d
            }
            GaugeFunction::Custom { g, .. } => g.eval(t),
        }
    }

    pub fn descriptor(&self) -> GaugeDescriptor {
        match self {
            GaugeFunction::Zero => GaugeDescriptor::Zero,
            GaugeFunction::LinearCompensation { force } => {
                GaugeDescriptor::LinearCompensation { force: *force }
            }
            GaugeFunction::HarmonicCompensation { omega } => {
                GaugeDescriptor::HarmonicCompensation { omega: *omega }
            }
            GaugeFunction::Custom { label, .. } => GaugeDescriptor::Custom {
                label: label.clone(),
            },
        }
    }
}

/// The profile f and its energy E_f.
#[derive(Debug, Clone)]
pub enum Shape {
    /// grid samples from the eigensolver, moved by band-limited interpolation
    Sampled(EigenPair),
    /// Ai[(2Am/ħ²)^{1/3}(q − E_f/A)], evaluated pointwise
    Airy { force: f64, energy: f64 },
    /// any closed-form profile
    Function {
        label: String,
        f: RealFn,
        energy: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ShapeDescriptor {
    Sampled {
        index: usize,
        x_min: f64,
        x_max: f64,
        points: usize,
    },
    Airy {
        force: f64,
    },
    Function {
        label: String,
    },
}

impl Shape {
    pub fn energy(&self) -> f64 {
        match self {
            Shape::Sampled(p) => p.energy,
            Shape::Airy { energy, .. } | Shape::Function { energy, .. } => *energy,
        }
    }

    pub fn descriptor(&self) -> ShapeDescriptor {
        match self {
            Shape::Sampled(p) => ShapeDescriptor::Sampled {
                index: p.index,
                x_min: p.shape.grid().x_min(),
                x_max: p.shape.grid().x_max(),
                points: p.shape.grid().len(),
            },
            Shape::Airy { force, .. } => ShapeDescriptor::Airy { force: *force },
            Shape::Function { label, .. } => ShapeDescriptor::Function {
                label: label.clone(),
            },
        }
    }
}

/// Everything needed to re-create a solution, written next to its outputs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NswpManifest {
    pub energy: f64,
    pub shape: ShapeDescriptor,
    pub potential: PotentialDescriptor,
    pub trajectory: TrajectoryDescriptor,
    pub gauge: GaugeDescriptor,
    pub constants: PhysicalConstants,
    pub horizon: f64,
}

#[derive(Debug, Clone)]
pub struct NswpSolution {
    shape: Shape,
    potential: StaticPotential,
    trajectory: Trajectory,
    gauge: GaugeFunction,
    consts: PhysicalConstants,
    /// ∫₀ᵗ (E_f + G + m ḋ²/2) on [0, horizon]
    phi0_table: CumulativeIntegral,
    horizon: f64,
    /// support of a sampled shape, used to reject shifts that leave the grid
    support: Option<(f64, f64)>,
    drop_phi0: bool,
}

impl NswpSolution {
    /// Builds the solution and tabulates φ₀ on `[0, horizon]`.
    pub fn new(
        shape: Shape,
        potential: StaticPotential,
        trajectory: Trajectory,
        gauge: GaugeFunction,
        consts: PhysicalConstants,
        horizon: f64,
    ) -> Result<Self> {
        if let (Shape::Airy { force, .. }, StaticPotential::Linear { force: v_force }) =
            (&shape, &potential)
        {
            if force != v_force {
                return Err(Error::InvalidParameter(format!(
                    "Airy shape built for force {force} but the potential has force {v_force}"
                )));
            }
        }
        if let Shape::Airy { force, .. } = shape {
            if !(force > 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "Airy shape needs a positive force, got {force}"
                )));
            }
        }
        if !shape.energy().is_finite() {
            return Err(Error::InvalidParameter(
                "shape energy must be finite".into(),
            ));
        }
        let support = match &shape {
            Shape::Sampled(p) => Some(support_of(&p.shape)?),
            _ => None,
        };
        let integrand = phi0_integrand(shape.energy(), trajectory.clone(), gauge.clone(), consts);
        let phi0_table = CumulativeIntegral::new(integrand, horizon, PHI0_TOL)?;
        Ok(NswpSolution {
            shape,
            potential,
            trajectory,
            gauge,
            consts,
            phi0_table,
            horizon,
            support,
            drop_phi0: false,
        })
    }

    /// The same packet with its global phase φ₀ removed. No longer a TDSE
    /// solution; used to show the residual checks can fail.
    pub fn with_phi0_dropped(mut self) -> Self {
        self.drop_phi0 = true;
        self
    }

    pub fn shape(&self) -> &Shape {
        &self.shape
    }

    pub fn potential(&self) -> &StaticPotential {
        &self.potential
    }

    pub fn trajectory(&self) -> &Trajectory {
        &self.trajectory
    }

    pub fn gauge(&self) -> &GaugeFunction {
        &self.gauge
    }

    pub fn consts(&self) -> &PhysicalConstants {
        &self.consts
    }

    pub fn energy(&self) -> f64 {
        self.shape.energy()
    }

    pub fn horizon(&self) -> f64 {
        self.horizon
    }

    pub fn gauge_at(&self, t: f64) -> Result<f64> {
        let k = self.trajectory.eval(t)?;
        Ok(self.gauge.eval(t, &k, &self.consts))
    }

    /// V(x − d) − m d̈ x + G.
    pub fn v_nswp(&self, x: f64, t: f64) -> Result<f64> {
        let k = self.trajectory.eval(t)?;
        Ok(self.v_nswp_with(x, t, &k))
    }

    fn v_nswp_with(&self, x: f64, t: f64, k: &Kinematics) -> f64 {
        self.potential.value(x - k.d, &self.consts) - self.consts.mass * k.d_ddot * x
            + self.gauge.eval(t, k, &self.consts)
    }

    /// V_nswp sampled on `grid` at time `t`.
    pub fn v_nswp_samples(&self, grid: &Grid1D, t: f64) -> Result<Vec<f64>> {
        let k = self.trajectory.eval(t)?;
        Ok(grid.points().map(|x| self.v_nswp_with(x, t, &k)).collect())
    }

    /// φ₁ = m ḋ / ħ.
    pub fn phi1(&self, t: f64) -> Result<f64> {
        Ok(self.consts.mass * self.trajectory.eval(t)?.d_dot / self.consts.hbar)
    }

    /// φ₀(t) from the cached table; times outside `[0, horizon]` are integrated
    /// directly.
    pub fn phi0(&self, t: f64) -> Result<f64> {
        if self.drop_phi0 {
            return Ok(0.0);
        }
        let integral = if (0.0..=self.horizon).contains(&t) {
            self.phi0_table.eval(t)?
        } else if t > self.horizon {
            self.phi0_table.eval(self.horizon)? + self.integrate_phi0(self.horizon, t, PHI0_TOL)?
        } else {
            self.integrate_phi0(0.0, t, PHI0_TOL)?
        };
        Ok(-integral / self.consts.hbar)
    }

    /// φ₀(t) by one adaptive quadrature from 0, bypassing the table.
    pub fn phi0_direct(&self, t: f64, tol: f64) -> Result<f64> {
        Ok(-self.integrate_phi0(0.0, t, tol)? / self.consts.hbar)
    }

    fn integrate_phi0(&self, t0: f64, t1: f64, tol: f64) -> Result<f64> {
        let g = phi0_integrand(
            self.energy(),
            self.trajectory.clone(),
            self.gauge.clone(),
            self.consts,
        );
        integrate_time(|s| g.eval(s), t0, t1, tol)
    }

    /// φ(x, t) = φ₁(t) x + φ₀(t).
    pub fn phase(&self, x: f64, t: f64) -> Result<f64> {
        Ok(self.phi1(t)? * x + self.phi0(t)?)
    }

    /// f(x − d) sampled on `grid`.
    pub fn shape_samples(&self, grid: &Grid1D, d: f64) -> Result<Vec<f64>> {
        match &self.shape {
            Shape::Sampled(pair) => {
                let (lo, hi) = self
                    .support
                    .expect("support is computed for sampled shapes");
                if lo + d < grid.x_min() || hi + d > grid.x_max() {
                    return Err(Error::Range(format!(
                        "shape support [{lo}, {hi}] shifted by {d} leaves the grid [{}, {}]",
                        grid.x_min(),
                        grid.x_max()
                    )));
                }
                let own = pair.shape.grid();
                if own == grid {
                    Ok(shift_field(&pair.shape, d)?
                        .values()
                        .iter()
                        .map(|z| z.re)
                        .collect())
                } else {
                    let (a, b) = (own.x_min(), own.x_max());
                    let inside: Vec<f64> = grid.points().map(|x| (x - d).clamp(a, b)).collect();
                    let vals = interpolate_at(&pair.shape, &inside);
                    Ok(grid
                        .points()
                        .zip(vals)
                        .map(|(x, z)| {
                            if (a..=b).contains(&(x - d)) {
                                z.re
                            } else {
                                0.0
                            }
                        })
                        .collect())
                }
            }
            Shape::Airy { force, energy } => grid
                .points()
                .map(|x| linear_mode_value(x - d, *force, *energy, &self.consts))
                .collect(),
            Shape::Function { f, .. } => Ok(grid.points().map(|x| f.eval(x - d)).collect()),
        }
    }

    /// Ψ(x, t) = f(x − d(t)) e^{iφ(x,t)} on `grid`.
    pub fn analytic_psi(&self, grid: &Grid1D, t: f64) -> Result<WaveField> {
        let k = self.trajectory.eval(t)?;
        let f = self.shape_samples(grid, k.d)?;
        let phi1 = self.consts.mass * k.d_dot / self.consts.hbar;
        let phi0 = self.phi0(t)?;
        let values = grid
            .points()
            .zip(f)
            .map(|(x, fx)| Complex64::from_polar(fx, phi1 * x + phi0))
            .collect();
        WaveField::new(*grid, values, t)
    }

    /// max over interior points of |iħ ∂ₜΨ − (−ħ²/2m ∂ₓ² + V_nswp) Ψ| with
    /// five-point differences in both variables.
    pub fn tdse_residual(&self, grid: &Grid1D, t: f64) -> Result<f64> {
        let h = RESIDUAL_DT;
        // forward stencil when the central one would reach before t = 0
        let (offsets, weights): ([f64; 5], [f64; 5]) = if t - 2.0 * h < 0.0 {
            ([0.0, 1.0, 2.0, 3.0, 4.0], [-25.0, 48.0, -36.0, 16.0, -3.0])
        } else {
            ([-2.0, -1.0, 0.0, 1.0, 2.0], [1.0, -8.0, 0.0, 8.0, -1.0])
        };
        let mut dt_psi = vec![Complex64::default(); grid.len()];
        for (o, w) in offsets.iter().zip(weights) {
            if w == 0.0 {
                continue;
            }
            let psi = self.analytic_psi(grid, t + o * h)?;
            for (acc, z) in dt_psi.iter_mut().zip(psi.values()) {
                *acc += z * (w / (12.0 * h));
            }
        }
        let psi = self.analytic_psi(grid, t)?;
        let lap = second_derivative_5pt(psi.values(), grid.dx());
        let v = self.v_nswp_samples(grid, t)?;
        let (hbar, kin) = (self.consts.hbar, self.consts.kinetic_coeff());
        let i = Complex64::i();
        let n = grid.len();
        Ok((2..n - 2)
            .map(|j| (i * hbar * dt_psi[j] - (-kin * lap[j] + v[j] * psi.values()[j])).norm())
            .fold(0.0, f64::max))
    }

    pub fn manifest(&self) -> NswpManifest {
        NswpManifest {
            energy: self.energy(),
            shape: self.shape.descriptor(),
            potential: self.potential.descriptor(),
            trajectory: self.trajectory.descriptor(),
            gauge: self.gauge.descriptor(),
            constants: self.consts,
            horizon: self.horizon,
        }
    }

    pub fn write_manifest(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, &self.manifest())
    }

    /// Writes `t,d,d_dot,d_ddot,gauge,phi1,phi0` rows at the given times.
    pub fn write_phase_table(&self, path: impl AsRef<Path>, times: &[f64]) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["t", "d", "d_dot", "d_ddot", "gauge", "phi1", "phi0"])?;
        for &t in times {
            let k = self.trajectory.eval(t)?;
            let row = [
                t,
                k.d,
                k.d_dot,
                k.d_ddot,
                self.gauge.eval(t, &k, &self.consts),
                self.consts.mass * k.d_dot / self.consts.hbar,
                self.phi0(t)?,
            ];
            w.write_record(row.iter().map(|&v| fmt_g17(v)))?;
        }
        w.flush()?;
        Ok(())
    }
}

/// E_f + G(t) + m ḋ²/2. Trajectory failures surface as NaN, which the
/// quadrature rejects.
fn phi0_integrand(
    energy: f64,
    traj: Trajectory,
    gauge: GaugeFunction,
    consts: PhysicalConstants,
) -> RealFn {
    RealFn::new(move |t| match traj.eval(t) {
        Ok(k) => energy + gauge.eval(t, &k, &consts) + 0.5 * consts.mass * k.d_dot * k.d_dot,
        Err(_) => f64::NAN,
    })
}

fn support_of(shape: &WaveField) -> Result<(f64, f64)> {
    let peak = shape.max_abs();
    if peak == 0.0 {
        return Err(Error::DegenerateInput(
            "shape samples are identically zero".into(),
        ));
    }
    let vals = shape.values();
    let above = |z: &Complex64| z.norm() > SUPPORT_CUTOFF * peak;
    let first = vals.iter().position(above).unwrap_or(0);
    let last = vals.iter().rposition(above).unwrap_or(vals.len() - 1);
    Ok((shape.grid().x(first), shape.grid().x(last)))
}

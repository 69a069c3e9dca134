//! Crank–Nicolson time stepping under an arbitrary potential V(x, t), and the
//! bookkeeping that compares the numerical state against a constructed packet.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::construct::NswpSolution;
use crate::error::{Error, Result};
use crate::field::{observables, Grid1D, PhysicalConstants, WaveField};
use crate::io::write_json;
use crate::verify::htilde_residual;

/// Largest allowed dt·max|V|/ħ for one step.
pub const STABILITY_GUARD: f64 = 0.5;
/// Fraction of the norm inside the edge bands that signals a Dirichlet wall
/// was reached. Crank–Nicolson conserves the norm exactly, so the packet
/// reflects instead of losing weight; what is monitored is the weight that an
/// open boundary would have let through.
pub const BOUNDARY_NORM_LOSS: f64 = 1e-3;
/// Width of each edge band as a fraction of the domain.
const EDGE_BAND: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundary {
    Dirichlet,
    /// After every step the field is multiplied by
    /// `exp(-strength·dt·cos²(π s / 2·width))` inside the last `width` of
    /// each edge, `s` being the distance from the edge.
    /// The initial field is also tapered by sin²(π s / 2·width) there, so the
    /// cut at the wall does not launch short waves into the domain.
    AbsorbingMask {
        width: f64,
        strength: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropagationConfig {
    pub dt: f64,
    pub t_end: f64,
    pub grid: Grid1D,
    pub snapshot_stride: usize,
    pub boundary: Boundary,
    /// Region in which shape deviation and the H̃ residual are measured.
    /// Defaults to the whole grid (Dirichlet) or the grid minus mask width + 5
    /// on each side (absorbing mask).
    #[serde(default)]
    pub comparison_window: Option<(f64, f64)>,
    /// Keep every recorded field in the report (not serialized).
    #[serde(default)]
    pub keep_snapshots: bool,
}

impl PropagationConfig {
    pub fn new(grid: Grid1D, dt: f64, t_end: f64) -> Self {
        PropagationConfig {
            dt,
            t_end,
            grid,
            snapshot_stride: 1,
            boundary: Boundary::Dirichlet,
            comparison_window: None,
            keep_snapshots: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_end > 0.0 && self.t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "t_end must be positive, got {}",
                self.t_end
            )));
        }
        if self.snapshot_stride == 0 {
            return Err(Error::InvalidParameter(
                "snapshot stride must be at least 1".into(),
            ));
        }
        if let Boundary::AbsorbingMask { width, strength } = self.boundary {
            if !(width > 0.0 && width < 0.5 * self.grid.width()) {
                return Err(Error::InvalidParameter(format!(
                    "mask width {width} must lie in (0, half the domain)"
                )));
            }
            if !(strength >= 0.0 && strength.is_finite()) {
                return Err(Error::InvalidParameter(format!("mask strength {strength}")));
            }
        }
        if let Some((lo, hi)) = self.comparison_window {
            if !(lo < hi && lo >= self.grid.x_min() && hi <= self.grid.x_max()) {
                return Err(Error::InvalidParameter(format!(
                    "comparison window [{lo}, {hi}] is not inside the grid"
                )));
            }
        }
        Ok(())
    }

    /// Number of steps; the last one is shortened if dt does not divide t_end.
    pub fn steps(&self) -> usize {
        (self.t_end / self.dt - 1e-9).ceil() as usize
    }

    pub fn window(&self) -> (f64, f64) {
        if let Some(w) = self.comparison_window {
            return w;
        }
        match self.boundary {
            Boundary::Dirichlet => (self.grid.x_min(), self.grid.x_max()),
            Boundary::AbsorbingMask { width, .. } => (
                self.grid.x_min() + width + 5.0,
                self.grid.x_max() - width - 5.0,
            ),
        }
    }
}

/// Metric series of one run, one entry per recorded instant.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub times: Vec<f64>,
    pub norm: Vec<f64>,
    pub centroid: Vec<f64>,
    pub momentum_mean: Vec<f64>,
    pub energy_mean: Vec<f64>,
    /// sup |ρ_num − |f(x − d)|²| / sup |f|² over the comparison window
    pub shape_deviation: Vec<f64>,
    pub htilde_residual: Vec<f64>,
    #[serde(skip)]
    pub snapshots: Vec<WaveField>,
    /// the state at the end of the run
    #[serde(skip)]
    pub final_field: Option<WaveField>,
}

impl RunReport {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn max_shape_deviation(&self) -> f64 {
        self.shape_deviation.iter().copied().fold(0.0, f64::max)
    }

    pub fn write_json(&self, path: impl AsRef<Path>) -> Result<()> {
        write_json(path, self)
    }

    /// Writes each kept snapshot as `snap_<index>.csv` into `dir`.
    pub fn write_snapshots(&self, dir: impl AsRef<Path>) -> Result<()> {
        std::fs::create_dir_all(&dir)?;
        for (k, psi) in self.snapshots.iter().enumerate() {
            psi.write_csv(dir.as_ref().join(format!("snap_{k:05}.csv")))?;
        }
        Ok(())
    }
}

/// One Crank–Nicolson step `(1 + iτH)ψ' = (1 − iτH)ψ`, τ = dt/2ħ, with
/// the three-point Hamiltonian built from `v_mid` (the potential at the
/// midpoint time) and Dirichlet walls outside the grid.
pub fn crank_nicolson_step(
    psi: &WaveField,
    v_mid: &[f64],
    dt: f64,
    consts: &PhysicalConstants,
) -> Result<WaveField> {
    let grid = *psi.grid();
    let mut out = psi.values().to_vec();
    let mut scratch = Vec::new();
    cn_in_place(&mut out, &mut scratch, v_mid, grid.dx(), dt, consts)?;
    WaveField::new(grid, out, psi.time() + dt)
}

fn cn_in_place(
    psi: &mut [Complex64],
    scratch: &mut Vec<Complex64>,
    v: &[f64],
    dx: f64,
    dt: f64,
    consts: &PhysicalConstants,
) -> Result<()> {
    let n = psi.len();
    if v.len() != n {
        return Err(Error::GridMismatch(format!(
            "{} potential samples for {n} points",
            v.len()
        )));
    }
    let vmax = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if !(dt.abs() * vmax / consts.hbar < STABILITY_GUARD) {
        return Err(Error::InvalidParameter(format!(
            "dt·max|V|/ħ = {:e} exceeds {STABILITY_GUARD}; reduce dt",
            dt.abs() * vmax / consts.hbar
        )));
    }
    let kin = consts.kinetic_coeff() / (dx * dx);
    let tau = Complex64::new(0.0, 0.5 * dt / consts.hbar);
    // H = tridiag(−kin, 2 kin + V, −kin)
    let off = tau * (-kin);
    let diag = |i: usize| tau * (2.0 * kin + v[i]);

    // right-hand side (1 − iτH)ψ
    let mut rhs_prev = psi[0];
    for i in 0..n {
        let cur = psi[i];
        let mut r = cur - diag(i) * cur;
        if i > 0 {
            r -= off * rhs_prev;
        }
        if i + 1 < n {
            r -= off * psi[i + 1];
        }
        rhs_prev = cur;
        psi[i] = r;
    }

    // Thomas sweep on (1 + iτH); |diag| ≥ 1 and the system is well conditioned
    scratch.clear();
    scratch.resize(n, Complex64::default());
    let c_prime = scratch;
    let one = Complex64::new(1.0, 0.0);
    let mut denom = one + diag(0);
    c_prime[0] = off / denom;
    psi[0] /= denom;
    for i in 1..n {
        denom = one + diag(i) - off * c_prime[i - 1];
        c_prime[i] = off / denom;
        let prev = psi[i - 1];
        psi[i] = (psi[i] - off * prev) / denom;
    }
    for i in (0..n - 1).rev() {
        let next = psi[i + 1];
        psi[i] -= c_prime[i] * next;
    }
    Ok(())
}

fn mask_factors(grid: &Grid1D, boundary: &Boundary, dt: f64) -> Option<Vec<f64>> {
    match *boundary {
        Boundary::Dirichlet => None,
        Boundary::AbsorbingMask { width, strength } => Some(
            grid.points()
                .map(|x| {
                    let s = (x - grid.x_min()).min(grid.x_max() - x);
                    if s >= width {
                        1.0
                    } else {
                        let c = (0.5 * std::f64::consts::PI * s / width).cos();
                        (-strength * dt * c * c).exp()
                    }
                })
                .collect(),
        ),
    }
}

/// Propagates `initial` under `potential(grid, t)` with Crank–Nicolson and
/// records observables every `snapshot_stride` steps (and at the end).
/// Shape deviation and the H̃ residual are measured against `reference`.
pub fn propagate(
    initial: &WaveField,
    potential: &dyn Fn(&Grid1D, f64) -> Result<Vec<f64>>,
    reference: &NswpSolution,
    config: &PropagationConfig,
) -> Result<RunReport> {
    config.validate()?;
    let grid = config.grid;
    if initial.grid() != &grid {
        return Err(Error::GridMismatch(
            "initial field is not on the configured grid".into(),
        ));
    }
    let consts = *reference.consts();
    let mask = mask_factors(&grid, &config.boundary, config.dt);
    let window = config.window();
    let win = grid.index_range(window.0, window.1);

    let mut report = RunReport::default();
    let mut psi = initial.values().to_vec();
    if let Boundary::AbsorbingMask { width, .. } = config.boundary {
        for (i, z) in psi.iter_mut().enumerate() {
            let x = grid.x(i);
            let s = (x - grid.x_min()).min(grid.x_max() - x);
            if s < width {
                *z *= (0.5 * std::f64::consts::PI * s / width).sin().powi(2);
            }
        }
    }
    let mut scratch = Vec::new();
    let t0 = initial.time();
    let steps = config.steps();
    let band = ((EDGE_BAND * grid.len() as f64).ceil() as usize).max(2);

    for step in 0..=steps {
        let t = if step == steps {
            t0 + config.t_end
        } else {
            t0 + step as f64 * config.dt
        };
        if step % config.snapshot_stride == 0 || step == steps {
            let field = WaveField::new(grid, psi.clone(), t)?;
            record(
                &mut report,
                &field,
                potential,
                reference,
                &win,
                &consts,
                config.keep_snapshots,
            )?;
            if matches!(config.boundary, Boundary::Dirichlet) {
                let norm = *report.norm.last().expect("just recorded");
                let n = grid.len();
                let edge: f64 = (0..band)
                    .chain(n - band..n)
                    .map(|i| grid.weight(i) * psi[i].norm_sqr())
                    .sum();
                if edge / norm > BOUNDARY_NORM_LOSS {
                    return Err(Error::Boundary {
                        norm_loss: edge / norm,
                        time: t,
                        report: Box::new(report),
                    });
                }
            }
        }
        if step == steps {
            report.final_field = Some(WaveField::new(grid, psi, t)?);
            break;
        }
        let t_next = if step + 1 == steps {
            t0 + config.t_end
        } else {
            t0 + (step + 1) as f64 * config.dt
        };
        let h = t_next - t;
        let v = potential(&grid, t + 0.5 * h)?;
        cn_in_place(&mut psi, &mut scratch, &v, grid.dx(), h, &consts)?;
        if let Some(m) = &mask {
            if h == config.dt {
                psi.iter_mut().zip(m).for_each(|(z, f)| *z *= f);
            } else {
                let frac = h / config.dt;
                psi.iter_mut().zip(m).for_each(|(z, f)| *z *= f.powf(frac));
            }
        }
    }
    Ok(report)
}

fn record(
    report: &mut RunReport,
    field: &WaveField,
    potential: &dyn Fn(&Grid1D, f64) -> Result<Vec<f64>>,
    reference: &NswpSolution,
    win: &std::ops::Range<usize>,
    consts: &PhysicalConstants,
    keep: bool,
) -> Result<()> {
    let t = field.time();
    let grid = field.grid();
    let v = potential(grid, t)?;
    let obs = observables(field, &v, consts)?;
    let k = reference.trajectory().eval(t)?;
    let f = reference.shape_samples(grid, k.d)?;
    let (mut dev, mut peak) = (0.0f64, 0.0f64);
    for i in win.clone() {
        let expect = f[i] * f[i];
        peak = peak.max(expect);
        dev = dev.max((field.values()[i].norm_sqr() - expect).abs());
    }
    let shape_deviation = if peak > 0.0 {
        dev / peak
    } else {
        f64::INFINITY
    };
    let residual = htilde_residual(
        field,
        reference.potential(),
        reference.trajectory(),
        consts,
        reference.energy(),
        t,
        Some(win.clone()),
    )?;
    report.times.push(t);
    report.norm.push(obs.norm);
    report.centroid.push(obs.centroid);
    report.momentum_mean.push(obs.momentum_mean);
    report.energy_mean.push(obs.energy_mean);
    report.shape_deviation.push(shape_deviation);
    report.htilde_residual.push(residual);
    if keep {
        report.snapshots.push(field.clone());
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::construct::{GaugeFunction, Shape};
    use crate::eigen::{lowest_eigenpairs, StaticPotential};
    use crate::field::inner_product;
    use crate::trajectory::Trajectory;

    fn gaussian(grid: Grid1D) -> WaveField {
        WaveField::from_fn(grid, 0.0, |x| {
            Complex64::new((-x * x / 2.0).exp() / std::f64::consts::PI.powf(0.25), 0.0)
        })
        .unwrap()
    }

    #[test]
    fn step_is_unitary() {
        let g = Grid1D::new(-15.0, 15.0, 1024).unwrap();
        let psi = gaussian(g);
        let v = vec![0.0; 1024];
        let next = crank_nicolson_step(&psi, &v, 1e-3, &PhysicalConstants::default()).unwrap();
        assert!((next.norm_sqr() - psi.norm_sqr()).abs() < 1e-12);
        assert!((next.time() - 1e-3).abs() < 1e-18);
    }

    #[test]
    fn time_reversal() {
        let g = Grid1D::new(-15.0, 15.0, 1024).unwrap();
        let psi = WaveField::from_fn(g, 0.0, |x| {
            Complex64::from_polar((-(x - 1.0) * (x - 1.0)).exp(), 1.5 * x)
        })
        .unwrap();
        let c = PhysicalConstants::default();
        let v: Vec<f64> = g.points().map(|x| 0.5 * x * x).collect();
        let fwd = crank_nicolson_step(&psi, &v, 1e-3, &c).unwrap();
        let back = crank_nicolson_step(&fwd, &v, -1e-3, &c).unwrap();
        assert!(back.max_abs_diff(&psi).unwrap() < 1e-10);
    }

    #[test]
    fn guard_rejects_large_steps() {
        let g = Grid1D::new(-15.0, 15.0, 256).unwrap();
        let v: Vec<f64> = g.points().map(|x| 0.5 * x * x).collect();
        let err = crank_nicolson_step(&gaussian(g), &v, 0.01, &PhysicalConstants::default());
        assert!(matches!(err, Err(Error::InvalidParameter(_))));
    }

    #[test]
    fn stationary_state_phase() {
        let g = Grid1D::new(-12.0, 12.0, 2048).unwrap();
        let c = PhysicalConstants::default();
        let v = StaticPotential::harmonic(1.0).unwrap();
        let pair = lowest_eigenpairs(&v, &g, &c, 1).unwrap().pop().unwrap();
        let vs: Vec<f64> = g.points().map(|x| v.value(x, &c)).collect();
        let mut psi = pair.shape.clone();
        for _ in 0..1000 {
            psi = crank_nicolson_step(&psi, &vs, 1e-3, &c).unwrap();
        }
        let ov = inner_product(&pair.shape, &psi).unwrap();
        assert!((ov.norm() - 1.0).abs() < 1e-6);
        // CN phase per step is 2 atan(E dt / 2), i.e. E t up to O(dt²)
        let want = -pair.energy * 1.0;
        let got = ov.arg();
        assert!((got - want).abs() < 1e-4, "{got} vs {want}");
    }

    #[test]
    fn rest_run_keeps_centroid() {
        let g = Grid1D::new(-10.0, 10.0, 512).unwrap();
        let c = PhysicalConstants::default();
        let v = StaticPotential::harmonic(1.0).unwrap();
        let pair = lowest_eigenpairs(&v, &g, &c, 2).unwrap().pop().unwrap();
        let sol = NswpSolution::new(
            Shape::Sampled(pair),
            v.clone(),
            Trajectory::Rest,
            GaugeFunction::Zero,
            c,
            1.0,
        )
        .unwrap();
        let pot = |grid: &Grid1D, t: f64| sol.v_nswp_samples(grid, t);
        let mut cfg = PropagationConfig::new(g, 1e-3, 1.0);
        cfg.snapshot_stride = 100;
        let initial = sol.analytic_psi(&g, 0.0).unwrap();
        let rep = propagate(&initial, &pot, &sol, &cfg).unwrap();
        assert_eq!(rep.len(), 11);
        for (&x, &p) in rep.centroid.iter().zip(&rep.momentum_mean) {
            assert!(x.abs() < 1e-8 && p.abs() < 1e-8);
        }
        assert!(rep.max_shape_deviation() < 1e-8);
    }

    #[test]
    fn dirichlet_wall_is_reported() {
        let g = Grid1D::new(-6.0, 6.0, 512).unwrap();
        let c = PhysicalConstants::default();
        let v = StaticPotential::harmonic(1.0).unwrap();
        let shape = Shape::Function {
            label: "gauss".into(),
            f: crate::specfun::RealFn::new(|x| {
                (-x * x / 2.0).exp() / std::f64::consts::PI.powf(0.25)
            }),
            energy: 0.5,
        };
        let sol =
            NswpSolution::new(shape, v, Trajectory::Rest, GaugeFunction::Zero, c, 1.0).unwrap();
        // a fast packet in free space runs into the wall
        let initial = WaveField::from_fn(g, 0.0, |x| {
            Complex64::from_polar(
                (-x * x / 2.0).exp() / std::f64::consts::PI.powf(0.25),
                8.0 * x,
            )
        })
        .unwrap();
        let free = |grid: &Grid1D, _t: f64| Ok(vec![0.0; grid.len()]);
        let mut cfg = PropagationConfig::new(g, 2e-3, 2.0);
        cfg.snapshot_stride = 10;
        match propagate(&initial, &free, &sol, &cfg) {
            Err(Error::Boundary {
                norm_loss, report, ..
            }) => {
                assert!(norm_loss > BOUNDARY_NORM_LOSS);
                assert!(!report.is_empty());
            }
            other => panic!("expected a boundary error, got {other:?}"),
        }
    }
}

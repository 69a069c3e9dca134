//! Bound states of `-ħ²/2m ∂² + V(x)` on a uniform grid.
//!
//! The Hamiltonian is the three-point finite-difference operator with
//! Dirichlet walls just outside the grid. The `k` lowest eigenvalues are
//! isolated by Sturm-sequence bisection and their vectors by inverse
//! iteration, so memory stays O(n) and results are deterministic.
//!
//! The linear potential has a continuous spectrum; its modes come from the
//! closed-form Airy solution in [`linear_potential_mode`] instead.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::{Grid1D, PhysicalConstants, WaveField};
use crate::io::{fmt_g17, write_json};
use crate::specfun::{airy_ai, RealFn, MAX_ARGUMENT};
use crate::spline::CubicSpline;

/// A time-independent potential V(x).
#[derive(Debug, Clone)]
pub enum StaticPotential {
    /// V = A x
    Linear {
        force: f64,
    },
    /// V = m ω² x² / 2
    Harmonic {
        omega: f64,
    },
    /// V = λ x⁴
    Quartic {
        lambda: f64,
    },
    /// natural cubic spline through tabulated samples
    Sampled {
        label: String,
        spline: CubicSpline,
    },
    Callable {
        label: String,
        f: RealFn,
    },
}

/// Serializable summary of a [`StaticPotential`] for manifests.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PotentialDescriptor {
    Linear { force: f64 },
    Harmonic { omega: f64 },
    Quartic { lambda: f64 },
    Sampled { label: String },
    Callable { label: String },
}

impl StaticPotential {
    pub fn linear(force: f64) -> Result<Self> {
        if !force.is_finite() {
            return Err(Error::InvalidParameter(format!("linear force {force}")));
        }
        Ok(StaticPotential::Linear { force })
    }

    pub fn harmonic(omega: f64) -> Result<Self> {
        if !(omega > 0.0 && omega.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "harmonic frequency must be positive, got {omega}"
            )));
        }
        Ok(StaticPotential::Harmonic { omega })
    }

    pub fn quartic(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "quartic coupling must be positive, got {lambda}"
            )));
        }
        Ok(StaticPotential::Quartic { lambda })
    }

    pub fn sampled(label: impl Into<String>, xs: Vec<f64>, vs: Vec<f64>) -> Result<Self> {
        Ok(StaticPotential::Sampled {
            label: label.into(),
            spline: CubicSpline::natural(xs, vs)?,
        })
    }

    pub fn callable(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    ) -> Self {
        StaticPotential::Callable {
            label: label.into(),
            f: RealFn::new(f),
        }
    }

    #[inline]
    pub fn value(&self, x: f64, consts: &PhysicalConstants) -> f64 {
        match self {
            StaticPotential::Linear { force } => force * x,
            StaticPotential::Harmonic { omega } => 0.5 * consts.mass * omega * omega * x * x,
            StaticPotential::Quartic { lambda } => {
                let x2 = x * x;
                lambda * x2 * x2
            }
            StaticPotential::Sampled { spline, .. } => spline.eval(x).0,
            StaticPotential::Callable { f, .. } => f.eval(x),
        }
    }

    pub fn descriptor(&self) -> PotentialDescriptor {
        match self {
            StaticPotential::Linear { force } => PotentialDescriptor::Linear { force: *force },
            StaticPotential::Harmonic { omega } => PotentialDescriptor::Harmonic { omega: *omega },
            StaticPotential::Quartic { lambda } => PotentialDescriptor::Quartic { lambda: *lambda },
            StaticPotential::Sampled { label, .. } => PotentialDescriptor::Sampled {
                label: label.clone(),
            },
            StaticPotential::Callable { label, .. } => PotentialDescriptor::Callable {
                label: label.clone(),
            },
        }
    }
}

/// Real symmetric tridiagonal matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SymTridiagonal {
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
}

impl SymTridiagonal {
    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn matvec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut acc = self.diag[i] * v[i];
                if i > 0 {
                    acc += self.off[i - 1] * v[i - 1];
                }
                if i + 1 < n {
                    acc += self.off[i] * v[i + 1];
                }
                acc
            })
            .collect()
    }

    /// Number of eigenvalues strictly below `lambda`.
    pub fn sturm_count(&self, lambda: f64) -> usize {
        let guard = f64::MIN_POSITIVE.sqrt();
        let mut count = 0;
        let mut q = self.diag[0] - lambda;
        for i in 0..self.len() {
            if i > 0 {
                let prev = if q.abs() < guard {
                    guard.copysign(q)
                } else {
                    q
                };
                q = self.diag[i] - lambda - self.off[i - 1] * self.off[i - 1] / prev;
            }
            if q < 0.0 {
                count += 1;
            }
        }
        count
    }

    fn gershgorin(&self) -> (f64, f64) {
        let n = self.len();
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for i in 0..n {
            let r = if i > 0 { self.off[i - 1].abs() } else { 0.0 }
                + if i + 1 < n { self.off[i].abs() } else { 0.0 };
            lo = lo.min(self.diag[i] - r);
            hi = hi.max(self.diag[i] + r);
        }
        (lo, hi)
    }

    /// The `index`-th smallest eigenvalue, to full precision.
    pub fn eigenvalue(&self, index: usize) -> f64 {
        let (mut lo, mut hi) = self.gershgorin();
        let pad = 1e-12 * (hi - lo).abs().max(1.0);
        lo -= pad;
        hi += pad;
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.sturm_count(mid) > index {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        0.5 * (lo + hi)
    }

    /// Solves `(self - shift) x = rhs` by Gaussian elimination with partial
    /// pivoting. Zero pivots are nudged so near-singular shifts still work.
    fn solve_shifted(&self, shift: f64, rhs: &mut [f64]) {
        let n = self.len();
        let tiny = f64::EPSILON * self.gershgorin().1.abs().max(1.0);
        let mut d: Vec<f64> = self.diag.iter().map(|v| v - shift).collect();
        let dl = &self.off;
        let mut du = self.off.clone();
        let mut du2 = vec![0.0; n.saturating_sub(2)];
        for i in 0..n - 1 {
            if d[i].abs() >= dl[i].abs() {
                if d[i] == 0.0 {
                    d[i] = tiny;
                }
                let fact = dl[i] / d[i];
                d[i + 1] -= fact * du[i];
                rhs[i + 1] -= fact * rhs[i];
            } else {
                let fact = d[i] / dl[i];
                d[i] = dl[i];
                let temp = d[i + 1];
                d[i + 1] = du[i] - fact * temp;
                if i + 2 < n {
                    du2[i] = du[i + 1];
                    du[i + 1] = -fact * du2[i];
                }
                du[i] = temp;
                rhs.swap(i, i + 1);
                rhs[i + 1] -= fact * rhs[i];
            }
        }
        if d[n - 1] == 0.0 {
            d[n - 1] = tiny;
        }
        rhs[n - 1] /= d[n - 1];
        if n > 1 {
            rhs[n - 2] = (rhs[n - 2] - du[n - 2] * rhs[n - 1]) / d[n - 2];
        }
        for i in (0..n.saturating_sub(2)).rev() {
            rhs[i] = (rhs[i] - du[i] * rhs[i + 1] - du2[i] * rhs[i + 2]) / d[i];
        }
    }
}

/// Three-point finite-difference Hamiltonian with Dirichlet boundaries.
pub fn build_hamiltonian(
    v: &StaticPotential,
    grid: &Grid1D,
    consts: &PhysicalConstants,
) -> SymTridiagonal {
    let kinetic = consts.hbar * consts.hbar / (consts.mass * grid.dx() * grid.dx());
    SymTridiagonal {
        diag: grid
            .points()
            .map(|x| kinetic + v.value(x, consts))
            .collect(),
        off: vec![-0.5 * kinetic; grid.len() - 1],
    }
}

/// A normalized bound state and its energy.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPair {
    pub energy: f64,
    /// real samples, ‖f‖ = 1 under the trapezoidal rule, time 0
    pub shape: WaveField,
    pub index: usize,
    /// ‖H f − E f‖ / ‖f‖
    pub residual: f64,
}

#[derive(Serialize)]
struct EigenSidecar {
    energy: f64,
    index: usize,
    residual: f64,
}

impl EigenPair {
    pub fn samples(&self) -> Vec<f64> {
        self.shape.values().iter().map(|z| z.re).collect()
    }

    /// Writes `x,f` to `csv_path` and `{energy, index, residual}` to `json_path`.
    pub fn export(&self, csv_path: impl AsRef<Path>, json_path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(csv_path)?;
        w.write_record(["x", "f"])?;
        let grid = self.shape.grid();
        for (i, z) in self.shape.values().iter().enumerate() {
            w.write_record([fmt_g17(grid.x(i)), fmt_g17(z.re)])?;
        }
        w.flush()?;
        write_json(
            json_path,
            &EigenSidecar {
                energy: self.energy,
                index: self.index,
                residual: self.residual,
            },
        )
    }
}

const LEAKAGE_LIMIT: f64 = 1e-6;
const INVERSE_ITERATIONS: usize = 4;

/// The `k` lowest bound states, ascending in energy.
pub fn lowest_eigenpairs(
    v: &StaticPotential,
    grid: &Grid1D,
    consts: &PhysicalConstants,
    k: usize,
) -> Result<Vec<EigenPair>> {
    if k == 0 || k > grid.len() {
        return Err(Error::InvalidParameter(format!(
            "requested {k} eigenpairs on a {}-point grid",
            grid.len()
        )));
    }
    let h = build_hamiltonian(v, grid, consts);
    let n = grid.len();
    let scale = h.gershgorin().1.abs().max(1.0);
    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(k);
    let mut pairs = Vec::with_capacity(k);

    for index in 0..k {
        let energy = h.eigenvalue(index);
        let shift = energy + 4.0 * f64::EPSILON * scale;
        // deterministic start vector with components along every mode
        let mut y: Vec<f64> = (0..n)
            .map(|i| 1.0 + 0.5 * ((i as f64) * 0.7).sin())
            .collect();
        for _ in 0..INVERSE_ITERATIONS {
            h.solve_shifted(shift, &mut y);
            for prev in &vectors {
                let proj: f64 = prev.iter().zip(&y).map(|(a, b)| a * b).sum();
                y.iter_mut().zip(prev).for_each(|(a, b)| *a -= proj * b);
            }
            let norm = y.iter().map(|a| a * a).sum::<f64>().sqrt();
            if !(norm > 0.0 && norm.is_finite()) {
                return Err(Error::Convergence(format!(
                    "inverse iteration for eigenvalue {index} broke down"
                )));
            }
            y.iter_mut().for_each(|a| *a /= norm);
        }

        let hy = h.matvec(&y);
        let residual = hy
            .iter()
            .zip(&y)
            .map(|(a, b)| (a - energy * b).powi(2))
            .sum::<f64>()
            .sqrt();
        if residual > 1e-8 * scale {
            return Err(Error::Convergence(format!(
                "eigenpair {index}: residual {residual:e} after inverse iteration"
            )));
        }

        let peak = y.iter().fold(0.0f64, |m, a| m.max(a.abs()));
        let edge = y[0].abs().max(y[n - 1].abs());
        if edge > LEAKAGE_LIMIT * peak {
            return Err(Error::BoundaryLeakage {
                index,
                ratio: edge / peak,
            });
        }
        // first lobe positive
        let first = y
            .iter()
            .find(|a| a.abs() > 1e-3 * peak)
            .copied()
            .unwrap_or(1.0);
        if first < 0.0 {
            y.iter_mut().for_each(|a| *a = -*a);
        }
        vectors.push(y.clone());

        let norm = (0..n)
            .map(|i| grid.weight(i) * y[i] * y[i])
            .sum::<f64>()
            .sqrt();
        let samples: Vec<f64> = y.iter().map(|a| a / norm).collect();
        pairs.push(EigenPair {
            energy,
            shape: WaveField::from_real(*grid, 0.0, &samples)?,
            index,
            residual,
        });
    }
    Ok(pairs)
}

/// f(x) = Ai[(2Am/ħ²)^{1/3} (x − E_f/A)], the (non-normalizable) mode of the
/// linear potential V = A x. Arguments beyond the range of [`airy_ai`] on the
/// decaying side are taken as zero.
pub fn linear_mode_value(
    x: f64,
    force: f64,
    energy: f64,
    consts: &PhysicalConstants,
) -> Result<f64> {
    let kappa = (2.0 * force * consts.mass / (consts.hbar * consts.hbar)).cbrt();
    let arg = kappa * (x - energy / force);
    if arg > MAX_ARGUMENT {
        return Ok(0.0);
    }
    Ok(airy_ai(arg)?.value)
}

pub fn linear_potential_mode(
    force: f64,
    energy: f64,
    grid: &Grid1D,
    consts: &PhysicalConstants,
) -> Result<WaveField> {
    if !(force > 0.0 && force.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "linear potential mode needs a positive force, got {force}"
        )));
    }
    let samples = grid
        .points()
        .map(|x| linear_mode_value(x, force, energy, consts))
        .collect::<Result<Vec<_>>>()?;
    WaveField::new(
        *grid,
        samples
            .into_iter()
            .map(|v| Complex64::new(v, 0.0))
            .collect(),
        0.0,
    )
}

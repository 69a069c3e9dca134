//! Grid, wavefield and observable primitives shared by every other module.
//!
//! All spatial integrals use the trapezoidal rule on a uniform grid; all
//! derivatives are central finite differences with one-sided stencils at the
//! two endpoints.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::io::fmt_g17;

/// Uniform grid on `[x_min, x_max]` with `n` points, endpoints included.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "GridParams", into = "GridParams")]
pub struct Grid1D {
    x_min: f64,
    x_max: f64,
    n: usize,
    dx: f64,
}

#[derive(Serialize, Deserialize)]
struct GridParams {
    x_min: f64,
    x_max: f64,
    n: usize,
}

impl TryFrom<GridParams> for Grid1D {
    type Error = Error;

    fn try_from(p: GridParams) -> Result<Self> {
        Grid1D::new(p.x_min, p.x_max, p.n)
    }
}

impl From<Grid1D> for GridParams {
    fn from(g: Grid1D) -> Self {
        GridParams {
            x_min: g.x_min,
            x_max: g.x_max,
            n: g.n,
        }
    }
}

impl Grid1D {
    pub const MIN_POINTS: usize = 8;

    pub fn new(x_min: f64, x_max: f64, n: usize) -> Result<Self> {
        if !(x_min.is_finite() && x_max.is_finite()) || x_max <= x_min {
            return Err(Error::InvalidParameter(format!(
                "grid bounds must satisfy x_min < x_max, got [{x_min}, {x_max}]"
            )));
        }
        if n < Self::MIN_POINTS {
            return Err(Error::InvalidParameter(format!(
                "grid needs at least {} points, got {n}",
                Self::MIN_POINTS
            )));
        }
        let dx = (x_max - x_min) / (n - 1) as f64;
        Ok(Grid1D {
            x_min,
            x_max,
            n,
            dx,
        })
    }

    pub fn x_min(&self) -> f64 {
        self.x_min
    }

    pub fn x_max(&self) -> f64 {
        self.x_max
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn width(&self) -> f64 {
        self.x_max - self.x_min
    }

    /// Coordinate of point `i`, computed directly so there is no drift.
    #[inline]
    pub fn x(&self, i: usize) -> f64 {
        self.x_min + i as f64 * self.dx
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.n).map(move |i| self.x(i))
    }

    /// Trapezoidal weight of point `i`.
    #[inline]
    pub fn weight(&self, i: usize) -> f64 {
        if i == 0 || i == self.n - 1 {
            0.5 * self.dx
        } else {
            self.dx
        }
    }

    /// Index range of the points lying inside `[lo, hi]`.
    pub fn index_range(&self, lo: f64, hi: f64) -> std::ops::Range<usize> {
        let start = ((lo - self.x_min) / self.dx).ceil().max(0.0) as usize;
        let end = (((hi - self.x_min) / self.dx).floor() + 1.0).clamp(0.0, self.n as f64) as usize;
        start.min(end)..end
    }
}

/// Reduced Planck constant and particle mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub hbar: f64,
    pub mass: f64,
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        PhysicalConstants {
            hbar: 1.0,
            mass: 1.0,
        }
    }
}

impl PhysicalConstants {
    pub fn new(hbar: f64, mass: f64) -> Result<Self> {
        if !(hbar > 0.0 && hbar.is_finite() && mass > 0.0 && mass.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "hbar and mass must be positive, got hbar={hbar}, mass={mass}"
            )));
        }
        Ok(PhysicalConstants { hbar, mass })
    }

    /// ħ²/2m, the coefficient of the kinetic operator.
    pub fn kinetic_coeff(&self) -> f64 {
        self.hbar * self.hbar / (2.0 * self.mass)
    }
}

/// Complex samples of a wavefunction on a grid at one instant.
#[derive(Debug, Clone, PartialEq)]
pub struct WaveField {
    grid: Grid1D,
    values: Vec<Complex64>,
    time: f64,
}

impl WaveField {
    pub fn new(grid: Grid1D, values: Vec<Complex64>, time: f64) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(Error::GridMismatch(format!(
                "{} samples for a {}-point grid",
                values.len(),
                grid.len()
            )));
        }
        if let Some(i) = values
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(Error::DegenerateInput(format!(
                "non-finite sample at index {i} (x = {})",
                grid.x(i)
            )));
        }
        Ok(WaveField { grid, values, time })
    }

    pub fn from_fn(grid: Grid1D, time: f64, f: impl Fn(f64) -> Complex64) -> Result<Self> {
        let values = grid.points().map(f).collect();
        Self::new(grid, values, time)
    }

    pub fn from_real(grid: Grid1D, time: f64, samples: &[f64]) -> Result<Self> {
        Self::new(
            grid,
            samples.iter().map(|&v| Complex64::new(v, 0.0)).collect(),
            time,
        )
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn time(&self) -> f64 {
        self.time
    }

    pub fn into_values(self) -> Vec<Complex64> {
        self.values
    }

    pub fn with_time(mut self, time: f64) -> Self {
        self.time = time;
        self
    }

    pub fn density(&self) -> Vec<f64> {
        self.values.iter().map(|z| z.norm_sqr()).collect()
    }

    /// Trapezoidal ‖ψ‖².
    pub fn norm_sqr(&self) -> f64 {
        self.values
            .iter()
            .enumerate()
            .map(|(i, z)| self.grid.weight(i) * z.norm_sqr())
            .sum()
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: Complex64) -> WaveField {
        WaveField {
            grid: self.grid,
            values: self.values.iter().map(|z| z * factor).collect(),
            time: self.time,
        }
    }

    pub fn normalized(&self) -> Result<WaveField> {
        let norm = self.norm_sqr();
        if norm < 1e-12 {
            return Err(Error::DegenerateInput(format!(
                "cannot normalize a field with norm² {norm:e}"
            )));
        }
        Ok(self.scaled(Complex64::new(1.0 / norm.sqrt(), 0.0)))
    }

    pub fn max_abs_diff(&self, other: &WaveField) -> Result<f64> {
        check_same_grid(&self.grid, &other.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max))
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["x", "re", "im"])?;
        for (i, z) in self.values.iter().enumerate() {
            w.write_record([fmt_g17(self.grid.x(i)), fmt_g17(z.re), fmt_g17(z.im)])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads the `x,re,im` layout written by [`WaveField::write_csv`]. The
    /// grid is rebuilt from the first and last abscissae.
    pub fn read_csv(path: impl AsRef<Path>, time: f64) -> Result<WaveField> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["x", "re", "im"] {
            return Err(Error::Parse(format!(
                "expected header x,re,im, found {}",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut xs = Vec::new();
        let mut values = Vec::new();
        for record in r.records() {
            let record = record?;
            let parse = |k: usize| -> Result<f64> {
                record
                    .get(k)
                    .ok_or_else(|| Error::Parse("short row".into()))?
                    .trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(e.to_string()))
            };
            xs.push(parse(0)?);
            values.push(Complex64::new(parse(1)?, parse(2)?));
        }
        if xs.len() < Grid1D::MIN_POINTS {
            return Err(Error::Parse(format!("only {} rows", xs.len())));
        }
        let grid = Grid1D::new(xs[0], xs[xs.len() - 1], xs.len())?;
        for (i, &x) in xs.iter().enumerate() {
            if (x - grid.x(i)).abs() > 1e-9 * grid.dx() {
                return Err(Error::Parse(format!(
                    "row {i}: abscissa {x} is off the uniform grid"
                )));
            }
        }
        WaveField::new(grid, values, time)
    }
}

fn check_same_grid(a: &Grid1D, b: &Grid1D) -> Result<()> {
    if a != b {
        return Err(Error::GridMismatch(format!("{a:?} vs {b:?}")));
    }
    Ok(())
}

/// Trapezoidal ∫ a*·b dx.
pub fn inner_product(a: &WaveField, b: &WaveField) -> Result<Complex64> {
    check_same_grid(&a.grid, &b.grid)?;
    Ok(a.values
        .iter()
        .zip(&b.values)
        .enumerate()
        .map(|(i, (u, v))| u.conj() * v * a.grid.weight(i))
        .sum())
}

/// First derivative by second-order central differences, one-sided at the ends.
pub fn first_derivative(values: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut out = vec![Complex64::default(); n];
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - values[i - 1]) / (2.0 * dx);
    }
    out[0] = (-3.0 * values[0] + 4.0 * values[1] - values[2]) / (2.0 * dx);
    out[n - 1] = (3.0 * values[n - 1] - 4.0 * values[n - 2] + values[n - 3]) / (2.0 * dx);
    out
}

/// Second derivative by the three-point stencil, one-sided at the ends.
pub fn second_derivative(values: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = values.len();
    let h2 = dx * dx;
    let mut out = vec![Complex64::default(); n];
    for i in 1..n - 1 {
        out[i] = (values[i + 1] - 2.0 * values[i] + values[i - 1]) / h2;
    }
    out[0] = (2.0 * values[0] - 5.0 * values[1] + 4.0 * values[2] - values[3]) / h2;
    out[n - 1] =
        (2.0 * values[n - 1] - 5.0 * values[n - 2] + 4.0 * values[n - 3] - values[n - 4]) / h2;
    out
}

/// Fourth-order (five-point) central first derivative. Only indices
/// `2..n-2` are meaningful; the two outermost points on each side are zero.
pub fn first_derivative_5pt(values: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut out = vec![Complex64::default(); n];
    for i in 2..n - 2 {
        out[i] = (values[i - 2] - 8.0 * values[i - 1] + 8.0 * values[i + 1] - values[i + 2])
            / (12.0 * dx);
    }
    out
}

/// Fourth-order (five-point) central second derivative, same layout as
/// [`first_derivative_5pt`].
pub fn second_derivative_5pt(values: &[Complex64], dx: f64) -> Vec<Complex64> {
    let n = values.len();
    let mut out = vec![Complex64::default(); n];
    for i in 2..n - 2 {
        out[i] = (-values[i - 2] + 16.0 * values[i - 1] - 30.0 * values[i] + 16.0 * values[i + 1]
            - values[i + 2])
            / (12.0 * dx * dx);
    }
    out
}

/// Expectation values of a field. All means are divided by the norm.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Observables {
    pub norm: f64,
    pub centroid: f64,
    pub momentum_mean: f64,
    pub energy_mean: f64,
    pub variance: f64,
}

/// ⟨x⟩, ⟨P⟩ and ⟨H⟩ with `H = -ħ²/2m ∂² + V`, `v` sampled on the field's grid.
pub fn observables(psi: &WaveField, v: &[f64], consts: &PhysicalConstants) -> Result<Observables> {
    let grid = psi.grid;
    if v.len() != grid.len() {
        return Err(Error::GridMismatch(format!(
            "{} potential samples for a {}-point grid",
            v.len(),
            grid.len()
        )));
    }
    let norm = psi.norm_sqr();
    if norm < 1e-12 {
        return Err(Error::DegenerateInput(format!(
            "field is not normalizable (norm² = {norm:e})"
        )));
    }
    let dx = grid.dx();
    let dpsi = first_derivative(&psi.values, dx);
    let d2psi = second_derivative(&psi.values, dx);
    let kin = consts.kinetic_coeff();

    let (mut sx, mut sx2, mut sp, mut sh) = (0.0, 0.0, 0.0, 0.0);
    for (i, z) in psi.values.iter().enumerate() {
        let w = grid.weight(i);
        let x = grid.x(i);
        let rho = z.norm_sqr();
        sx += w * x * rho;
        sx2 += w * x * x * rho;
        // Re[ψ* (-iħ ψ')]
        sp += w * (z.conj() * dpsi[i] * Complex64::new(0.0, -consts.hbar)).re;
        sh += w * (z.conj() * (-kin * d2psi[i] + v[i] * z)).re;
    }
    let centroid = sx / norm;
    Ok(Observables {
        norm,
        centroid,
        momentum_mean: sp / norm,
        energy_mean: sh / norm,
        variance: (sx2 / norm - centroid * centroid).max(0.0),
    })
}

/// Angular wavenumbers of the DFT bins for a periodic extension of length `n·dx`.
fn wavenumbers(n: usize, dx: f64) -> Vec<f64> {
    let period = n as f64 * dx;
    (0..n)
        .map(|j| {
            let j = if j <= n / 2 {
                j as i64
            } else {
                j as i64 - n as i64
            };
            2.0 * PI * j as f64 / period
        })
        .collect()
}

fn fft(values: &[Complex64], inverse: bool) -> Vec<Complex64> {
    let mut buf = values.to_vec();
    let mut planner = FftPlanner::new();
    let plan = if inverse {
        planner.plan_fft_inverse(buf.len())
    } else {
        planner.plan_fft_forward(buf.len())
    };
    plan.process(&mut buf);
    buf
}

/// Samples of ψ(x − a), by band-limited interpolation of the periodic
/// extension of the field. Support near the edges wraps around.
pub fn shift_field(psi: &WaveField, a: f64) -> Result<WaveField> {
    let grid = psi.grid;
    if !a.is_finite() || a.abs() >= grid.width() {
        return Err(Error::Range(format!(
            "shift {a} exceeds the domain width {}",
            grid.width()
        )));
    }
    if a == 0.0 {
        return Ok(psi.clone());
    }
    let n = grid.len();
    let mut spec = fft(&psi.values, false);
    let kappa = wavenumbers(n, grid.dx());
    for (j, c) in spec.iter_mut().enumerate() {
        if n.is_multiple_of(2) && j == n / 2 {
            // Nyquist bin: take the real part of the phase so real input stays real.
            *c *= (kappa[j] * a).cos();
        } else {
            *c *= Complex64::from_polar(1.0, -kappa[j] * a);
        }
    }
    let inv = fft(&spec, true);
    let scale = 1.0 / n as f64;
    WaveField::new(grid, inv.into_iter().map(|z| z * scale).collect(), psi.time)
}

/// Band-limited interpolant of `psi` evaluated at arbitrary abscissae.
/// Costs O(n·m); use [`shift_field`] when the target is the field's own grid.
pub fn interpolate_at(psi: &WaveField, xs: &[f64]) -> Vec<Complex64> {
    let grid = psi.grid;
    let n = grid.len();
    let spec = fft(&psi.values, false);
    let kappa = wavenumbers(n, grid.dx());
    xs.iter()
        .map(|&x| {
            let s = x - grid.x_min();
            let mut acc = Complex64::default();
            for (j, c) in spec.iter().enumerate() {
                if n.is_multiple_of(2) && j == n / 2 {
                    acc += c * (kappa[j] * s).cos();
                } else {
                    acc += c * Complex64::from_polar(1.0, kappa[j] * s);
                }
            }
            acc / n as f64
        })
        .collect()
}

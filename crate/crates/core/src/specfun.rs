//! Airy function of the first kind for real argument, and the adaptive
//! quadrature used for every time integral in the crate.
//!
//! `Ai` is evaluated by
//!
//! * its Maclaurin series for `|x| <= 5`,
//! * Taylor re-expansion of the Airy equation `y'' = x y` around tabulated
//!   centres for `5 < |x| < 9`, where the Maclaurin series loses digits to
//!   cancellation and the asymptotic series has not yet reached 1e-10,
//! * the asymptotic expansions (exponential for `x >= 9`, oscillatory for
//!   `x <= -9`) beyond that.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value of `Ai(x)` with an estimate of its absolute error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AiryEval {
    pub value: f64,
    pub abs_err_estimate: f64,
}

/// Ai(0) = 3^(-2/3) / Γ(2/3)
const AI0: f64 = 0.355_028_053_887_817_239_26;
/// -Ai'(0) = 3^(-1/3) / Γ(1/3)
const MINUS_AIP0: f64 = 0.258_819_403_792_806_798_41;

pub const SERIES_LIMIT: f64 = 5.0;
pub const ASYMPTOTIC_LIMIT: f64 = 9.0;
pub const MAX_ARGUMENT: f64 = 200.0;

/// (centre, Ai(centre), Ai'(centre)) to 20 significant digits.
const TAYLOR_CENTRES: [(f64, f64, f64); 8] = [
    (
        -8.5,
        -0.330_290_237_630_208_879_02,
        -0.032_313_348_284_639_135_873,
    ),
    (
        -7.5,
        0.321_775_716_380_647_875_27,
        0.318_809_506_698_554_596_21,
    ),
    (
        -6.5,
        -0.238_020_301_997_115_803_59,
        -0.674_952_492_513_202_173,
    ),
    (
        -5.5,
        0.017_781_541_276_574_975_603,
        0.864_197_217_771_398_390_77,
    ),
    (
        5.5,
        3.368_531_190_859_981_442_5e-5,
        -8.046_339_130_556_514_338e-5,
    ),
    (
        6.5,
        2.795_882_343_204_913_585_5e-6,
        -7.231_931_466_601_792_559_8e-6,
    ),
    (
        7.5,
        1.917_256_067_513_430_751_6e-7,
        -5.312_713_959_720_568_484_8e-7,
    ),
    (
        8.5,
        1.099_700_975_519_550_650_9e-8,
        -3.237_725_440_447_602_255_9e-8,
    ),
];

pub fn airy_ai(x: f64) -> Result<AiryEval> {
    if !x.is_finite() || x.abs() > MAX_ARGUMENT {
        return Err(Error::Range(format!(
            "Ai({x}) is outside |x| <= {MAX_ARGUMENT}"
        )));
    }
    let eval = if x.abs() <= SERIES_LIMIT {
        maclaurin(x)
    } else if x.abs() < ASYMPTOTIC_LIMIT {
        recentred(x)
    } else if x > 0.0 {
        asymptotic_decaying(x)
    } else {
        asymptotic_oscillating(-x)
    };
    Ok(eval)
}

/// Ai(x) = Ai(0)·f(x) + Ai'(0)·g(x) with
/// f = Σ 3^k (1/3)_k x^{3k}/(3k)!, g = Σ 3^k (2/3)_k x^{3k+1}/(3k+1)!.
fn maclaurin(x: f64) -> AiryEval {
    let x3 = x * x * x;
    let mut f_term = 1.0f64;
    let mut g_term = x;
    let mut f = f_term;
    let mut g = g_term;
    let mut magnitude = f_term.abs() * AI0 + g_term.abs() * MINUS_AIP0;
    for k in 0..200 {
        let k = k as f64;
        f_term *= x3 / ((3.0 * k + 2.0) * (3.0 * k + 3.0));
        g_term *= x3 / ((3.0 * k + 3.0) * (3.0 * k + 4.0));
        f += f_term;
        g += g_term;
        let step = f_term.abs() * AI0 + g_term.abs() * MINUS_AIP0;
        magnitude += step;
        if step < 1e-18 * magnitude {
            break;
        }
    }
    AiryEval {
        value: AI0 * f - MINUS_AIP0 * g,
        abs_err_estimate: 4.0 * f64::EPSILON * magnitude,
    }
}

/// Taylor series of the Airy equation around the nearest tabulated centre
/// (distance at most 1/2).
fn recentred(x: f64) -> AiryEval {
    let &(x0, a0, a1) = TAYLOR_CENTRES
        .iter()
        .min_by(|a, b| (a.0 - x).abs().total_cmp(&(b.0 - x).abs()))
        .expect("non-empty table");
    let h = x - x0;
    // coefficients a_n of Σ a_n h^n; (n+2)(n+1) a_{n+2} = x0 a_n + a_{n-1}
    let mut prev2 = a0; // a_{n-1}
    let mut prev1 = a1; // a_n
    let mut a2 = x0 * a0 / 2.0;
    let mut hp = h; // h^n for n = 1
    let mut sum = a0 + a1 * h;
    let mut magnitude = a0.abs() + (a1 * h).abs();
    let mut n = 1usize;
    loop {
        // a2 holds a_{n+1}
        hp *= h;
        let term = a2 * hp;
        sum += term;
        magnitude += term.abs();
        let next = (x0 * prev1 + prev2) / ((n + 2) as f64 * (n + 1) as f64);
        prev2 = prev1;
        prev1 = a2;
        a2 = next;
        n += 1;
        if (term.abs() < 1e-18 * magnitude && (a2 * hp * h).abs() < 1e-18 * magnitude) || n > 80 {
            break;
        }
    }
    AiryEval {
        value: sum,
        abs_err_estimate: 4.0 * f64::EPSILON * magnitude + 1e-19,
    }
}

/// u_k of the Airy asymptotic expansions: u_0 = 1,
/// u_k = (6k-5)(6k-3)(6k-1) / ((2k-1)·216·k) · u_{k-1}.
fn u_coeff_next(u: f64, k: usize) -> f64 {
    let k = k as f64;
    u * (6.0 * k - 5.0) * (6.0 * k - 3.0) * (6.0 * k - 1.0) / ((2.0 * k - 1.0) * 216.0 * k)
}

fn asymptotic_decaying(x: f64) -> AiryEval {
    let zeta = 2.0 / 3.0 * x.powf(1.5);
    let mut u = 1.0;
    let mut term = 1.0f64;
    let mut sum = 1.0;
    let mut last = 1.0;
    for k in 1..60 {
        u = u_coeff_next(u, k);
        let next = (if k % 2 == 0 { u } else { -u }) / zeta.powi(k as i32);
        if next.abs() > term.abs() {
            break;
        }
        term = next;
        sum += term;
        last = term.abs();
        if last < 1e-17 {
            break;
        }
    }
    let prefactor = (-zeta).exp() / (2.0 * PI.sqrt() * x.powf(0.25));
    AiryEval {
        value: prefactor * sum,
        abs_err_estimate: prefactor * (last + 4.0 * f64::EPSILON),
    }
}

fn asymptotic_oscillating(y: f64) -> AiryEval {
    let zeta = 2.0 / 3.0 * y.powf(1.5);
    let mut u = 1.0;
    let mut p = 1.0;
    let mut q = 0.0;
    let mut last = 1.0f64;
    for k in 1..60 {
        u = u_coeff_next(u, k);
        // sign (-1)^{floor(k/2)} for both the even (P) and odd (Q) subseries
        let sign = if (k / 2) % 2 == 0 { 1.0 } else { -1.0 };
        let term = sign * u / zeta.powi(k as i32);
        if term.abs() > last {
            break;
        }
        last = term.abs();
        if k % 2 == 0 {
            p += term;
        } else {
            q += term;
        }
        if last < 1e-17 {
            break;
        }
    }
    let prefactor = 1.0 / (PI.sqrt() * y.powf(0.25));
    let theta = zeta + PI / 4.0;
    AiryEval {
        value: prefactor * (theta.sin() * p - theta.cos() * q),
        abs_err_estimate: prefactor * (last + 8.0 * f64::EPSILON * zeta.max(1.0)),
    }
}

/// Shared, thread-safe real function of one real variable (time or position).
#[derive(Clone)]
pub struct RealFn(Arc<dyn Fn(f64) -> f64 + Send + Sync>);

impl RealFn {
    pub fn new(f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        RealFn(Arc::new(f))
    }

    pub fn constant(c: f64) -> Self {
        Self::new(move |_| c)
    }

    #[inline]
    pub fn eval(&self, t: f64) -> f64 {
        (self.0)(t)
    }
}

impl std::fmt::Debug for RealFn {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str("RealFn(..)")
    }
}

const MAX_DEPTH: u32 = 48;
const INITIAL_PANELS: usize = 8;
const MAX_EVALS: usize = 4_000_000;

struct Simpson<'a, F: Fn(f64) -> f64> {
    f: &'a F,
    converged: bool,
    err: f64,
    evals: usize,
}

impl<F: Fn(f64) -> f64> Simpson<'_, F> {
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        &mut self,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = (self.f)(lm);
        let frm = (self.f)(rm);
        self.evals += 2;
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        // differences below a few ulps of the panel sums are round-off, not
        // truncation error, and can never be refined away
        let floor = 32.0 * f64::EPSILON * (left.abs() + right.abs());
        let accepted = delta.abs() <= 15.0 * tol || delta.abs() <= floor;
        if accepted
            || depth >= MAX_DEPTH
            || self.evals >= MAX_EVALS
            || (m - a) <= f64::EPSILON * m.abs()
        {
            if !accepted {
                self.converged = false;
            }
            self.err += delta.abs() / 15.0;
            return left + right + delta / 15.0;
        }
        self.recurse(a, m, fa, flm, fm, left, 0.5 * tol, depth + 1)
            + self.recurse(m, b, fm, frm, fb, right, 0.5 * tol, depth + 1)
    }
}

/// Adaptive Simpson quadrature; returns the integral and its error estimate.
/// `t1 < t0` integrates backwards (negated result).
pub fn integrate_time_with_error(
    f: impl Fn(f64) -> f64,
    t0: f64,
    t1: f64,
    tol: f64,
) -> Result<(f64, f64)> {
    if !(t0.is_finite() && t1.is_finite()) || !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "integration over [{t0}, {t1}] with tolerance {tol}"
        )));
    }
    if t0 == t1 {
        return Ok((0.0, 0.0));
    }
    if t1 < t0 {
        let (v, e) = integrate_time_with_error(f, t1, t0, tol)?;
        return Ok((-v, e));
    }
    let mut s = Simpson {
        f: &f,
        converged: true,
        err: 0.0,
        evals: 0,
    };
    let h = (t1 - t0) / INITIAL_PANELS as f64;
    let panel_tol = tol / INITIAL_PANELS as f64;
    let mut total = 0.0;
    let mut fa = f(t0);
    for k in 0..INITIAL_PANELS {
        let a = t0 + k as f64 * h;
        let b = if k + 1 == INITIAL_PANELS {
            t1
        } else {
            t0 + (k + 1) as f64 * h
        };
        let m = 0.5 * (a + b);
        let fm = f(m);
        let fb = f(b);
        let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
        total += s.recurse(a, b, fa, fm, fb, whole, panel_tol, 0);
        fa = fb;
    }
    if !total.is_finite() {
        return Err(Error::DegenerateInput(format!(
            "integrand is not finite on [{t0}, {t1}]"
        )));
    }
    if !s.converged {
        return Err(Error::Accuracy {
            message: format!("adaptive Simpson exhausted its refinement budget on [{t0}, {t1}]"),
            best_estimate: total,
        });
    }
    Ok((total, s.err))
}

/// Adaptive composite Simpson integral of `f` over `[t0, t1]` to absolute
/// tolerance `tol`.
pub fn integrate_time(f: impl Fn(f64) -> f64, t0: f64, t1: f64, tol: f64) -> Result<f64> {
    integrate_time_with_error(f, t0, t1, tol).map(|(v, _)| v)
}

/// Running integral `I(t) = ∫_0^t f` backed by a table of node values, so
/// each evaluation only integrates from the nearest node.
#[derive(Clone)]
pub struct CumulativeIntegral {
    f: RealFn,
    step: f64,
    t_end: f64,
    values: Vec<f64>,
    tol: f64,
}

impl std::fmt::Debug for CumulativeIntegral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CumulativeIntegral")
            .field("t_end", &self.t_end)
            .field("nodes", &self.values.len())
            .finish()
    }
}

impl CumulativeIntegral {
    const PANELS: usize = 64;

    /// Tabulates `∫_0^t f` on `[0, t_end]`; evaluations are accurate to `tol`.
    pub fn new(f: RealFn, t_end: f64, tol: f64) -> Result<Self> {
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "cumulative integral horizon must be positive, got {t_end}"
            )));
        }
        let step = t_end / Self::PANELS as f64;
        let panel_tol = tol / Self::PANELS as f64;
        let mut values = Vec::with_capacity(Self::PANELS + 1);
        values.push(0.0);
        let mut acc = 0.0;
        for k in 0..Self::PANELS {
            let a = k as f64 * step;
            let b = if k + 1 == Self::PANELS {
                t_end
            } else {
                (k + 1) as f64 * step
            };
            acc += integrate_time(|t| f.eval(t), a, b, panel_tol)?;
            values.push(acc);
        }
        Ok(CumulativeIntegral {
            f,
            step,
            t_end,
            values,
            tol,
        })
    }

    pub fn t_end(&self) -> f64 {
        self.t_end
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.t_end * (1.0 + 1e-12)).contains(&t) {
            return Err(Error::Range(format!(
                "t = {t} outside the tabulated range [0, {}]",
                self.t_end
            )));
        }
        let k = ((t / self.step).round() as usize).min(self.values.len() - 1);
        let node = k as f64 * self.step;
        let rest = integrate_time(|s| self.f.eval(s), node, t, 0.5 * self.tol)?;
        Ok(self.values[k] + rest)
    }
}

/// ∫_0^t ∫_0^τ F(s) ds dτ via a tabulated inner antiderivative.
pub fn nested_double_integral(
    f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    t: f64,
    tol: f64,
) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let inner = CumulativeIntegral::new(RealFn::new(f), t, 1e-2 * tol)?;
    integrate_inner(&inner, t, tol)
}

/// ∫_0^t ∫_0^τ ∫_0^η F(ζ) dζ dη dτ via two tabulated antiderivatives.
pub fn nested_triple_integral(
    f: impl Fn(f64) -> f64 + Send + Sync + 'static,
    t: f64,
    tol: f64,
) -> Result<f64> {
    if t == 0.0 {
        return Ok(0.0);
    }
    let first = CumulativeIntegral::new(RealFn::new(f), t, 1e-4 * tol)?;
    let second = {
        let first = first.clone();
        CumulativeIntegral::new(
            RealFn::new(move |s| first.eval(s).unwrap_or(f64::NAN)),
            t,
            1e-2 * tol,
        )?
    };
    integrate_inner(&second, t, tol)
}

fn integrate_inner(inner: &CumulativeIntegral, t: f64, tol: f64) -> Result<f64> {
    // A failed inner evaluation surfaces as NaN, which the outer quadrature
    // reports as a degenerate integrand.
    integrate_time(|s| inner.eval(s).unwrap_or(f64::NAN), 0.0, t, tol)
}

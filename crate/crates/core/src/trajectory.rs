//! Designed packet motion d(t) with its first two derivatives.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::field::PhysicalConstants;
use crate::specfun::{CumulativeIntegral, RealFn};
use crate::spline::CubicSpline;

/// Position, velocity and acceleration at one instant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Kinematics {
    pub d: f64,
    pub d_dot: f64,
    pub d_ddot: f64,
}

/// Time-dependent external force F(t) in a form that can be written to a
/// manifest and rebuilt from a config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ForceSpec {
    Zero,
    Constant {
        value: f64,
    },
    /// F = amplitude · sin(omega t)
    Sine {
        amplitude: f64,
        omega: f64,
    },
}

impl ForceSpec {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            ForceSpec::Zero => true,
            ForceSpec::Constant { value } => value.is_finite(),
            ForceSpec::Sine { amplitude, omega } => amplitude.is_finite() && omega.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidParameter(format!(
                "force {self:?} is not finite"
            )))
        }
    }

    pub fn eval(&self, t: f64) -> f64 {
        match *self {
            ForceSpec::Zero => 0.0,
            ForceSpec::Constant { value } => value,
            ForceSpec::Sine { amplitude, omega } => amplitude * (omega * t).sin(),
        }
    }

    pub fn to_fn(self) -> RealFn {
        RealFn::new(move |t| self.eval(t))
    }

    pub fn label(&self) -> String {
        match *self {
            ForceSpec::Zero => "0".into(),
            ForceSpec::Constant { value } => format!("{value}"),
            ForceSpec::Sine { amplitude, omega } => format!("{amplitude}*sin({omega}*t)"),
        }
    }
}

/// Motion driven by `m d̈ = A + F(t)` from rest at the origin.
#[derive(Debug, Clone)]
pub struct ForcedMotion {
    pub force_a: f64,
    pub force: RealFn,
    pub label: String,
    mass: f64,
    /// ∫_0^t F
    impulse: CumulativeIntegral,
    /// ∫_0^t s F(s) ds
    moment: CumulativeIntegral,
}

impl ForcedMotion {
    pub fn horizon(&self) -> f64 {
        self.impulse.t_end()
    }
}

#[derive(Debug, Clone)]
pub enum Trajectory {
    Rest,
    /// d = Σ c_k t^k with c_0 = 0
    Polynomial {
        coeffs: Vec<f64>,
    },
    /// d = A [sin(ωt + phase) − sin(phase)]
    Sinusoid {
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
    /// d = a t² / 2
    UniformAcceleration {
        accel: f64,
    },
    TabulatedSpline {
        spline: CubicSpline,
    },
    Forced(ForcedMotion),
}

/// Manifest form of a [`Trajectory`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TrajectoryDescriptor {
    Rest,
    Polynomial {
        coeffs: Vec<f64>,
    },
    Sinusoid {
        amplitude: f64,
        omega: f64,
        phase: f64,
    },
    UniformAcceleration {
        accel: f64,
    },
    TabulatedSpline {
        t_min: f64,
        t_max: f64,
    },
    Forced {
        force_a: f64,
        force: String,
        horizon: f64,
    },
}

fn finite(name: &str, v: f64) -> Result<()> {
    if v.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "{name} must be finite, got {v}"
        )))
    }
}

impl Trajectory {
    pub fn polynomial(coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(
                "polynomial coefficients must be finite".into(),
            ));
        }
        if coeffs.first().is_some_and(|&c| c != 0.0) {
            return Err(Error::InvalidParameter(
                "polynomial trajectory must start at d(0) = 0".into(),
            ));
        }
        Ok(Trajectory::Polynomial { coeffs })
    }

    pub fn sinusoid(amplitude: f64, omega: f64, phase: f64) -> Result<Self> {
        finite("amplitude", amplitude)?;
        finite("omega", omega)?;
        finite("phase", phase)?;
        Ok(Trajectory::Sinusoid {
            amplitude,
            omega,
            phase,
        })
    }

    pub fn uniform_acceleration(accel: f64) -> Result<Self> {
        finite("acceleration", accel)?;
        Ok(Trajectory::UniformAcceleration { accel })
    }

    /// Clamped cubic through `(t, d)` knots with the given end velocities.
    pub fn spline(ts: Vec<f64>, ds: Vec<f64>, v_start: f64, v_end: f64) -> Result<Self> {
        Ok(Trajectory::TabulatedSpline {
            spline: CubicSpline::clamped(ts, ds, v_start, v_end)?,
        })
    }

    /// Reads knots from a CSV with columns `t,d`.
    pub fn spline_from_csv(path: impl AsRef<Path>, v_start: f64, v_end: f64) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let headers = r.headers()?.clone();
        let col = |name: &str| {
            headers
                .iter()
                .position(|h| h.trim() == name)
                .ok_or_else(|| Error::Parse(format!("trajectory CSV lacks a `{name}` column")))
        };
        let (ti, di) = (col("t")?, col("d")?);
        let mut ts = Vec::new();
        let mut ds = Vec::new();
        for (line, rec) in r.records().enumerate() {
            let rec = rec?;
            let get = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.trim().parse().ok())
                    .ok_or_else(|| Error::Parse(format!("bad number on data row {}", line + 1)))
            };
            ts.push(get(ti)?);
            ds.push(get(di)?);
        }
        Self::spline(ts, ds, v_start, v_end)
    }

    pub fn eval(&self, t: f64) -> Result<Kinematics> {
        if !t.is_finite() {
            return Err(Error::Range(format!("trajectory evaluated at t = {t}")));
        }
        let k = match self {
            Trajectory::Rest => Kinematics {
                d: 0.0,
                d_dot: 0.0,
                d_ddot: 0.0,
            },
            Trajectory::Polynomial { coeffs } => {
                // Horner for the value and both derivatives at once
                let (mut p, mut dp, mut ddp) = (0.0, 0.0, 0.0);
                for &c in coeffs.iter().rev() {
                    ddp = ddp * t + 2.0 * dp;
                    dp = dp * t + p;
                    p = p * t + c;
                }
                Kinematics {
                    d: p,
                    d_dot: dp,
                    d_ddot: ddp,
                }
            }
            Trajectory::Sinusoid {
                amplitude,
                omega,
                phase,
            } => {
                let arg = omega * t + phase;
                Kinematics {
                    d: amplitude * (arg.sin() - phase.sin()),
                    d_dot: amplitude * omega * arg.cos(),
                    d_ddot: -amplitude * omega * omega * arg.sin(),
                }
            }
            Trajectory::UniformAcceleration { accel } => Kinematics {
                d: 0.5 * accel * t * t,
                d_dot: accel * t,
                d_ddot: *accel,
            },
            Trajectory::TabulatedSpline { spline } => {
                if !spline.contains(t) {
                    let (a, b) = spline.range();
                    return Err(Error::Range(format!(
                        "t = {t} outside spline range [{a}, {b}]"
                    )));
                }
                let (d, d_dot, d_ddot) = spline.eval(t);
                Kinematics { d, d_dot, d_ddot }
            }
            Trajectory::Forced(fm) => {
                if t < 0.0 {
                    return Err(Error::Range(format!(
                        "forced trajectory starts at t = 0, got {t}"
                    )));
                }
                let m = fm.mass;
                // ∫_0^t ∫_0^τ F = t ∫_0^t F − ∫_0^t s F(s) ds
                let impulse = fm.impulse.eval(t)?;
                let displacement = t * impulse - fm.moment.eval(t)?;
                Kinematics {
                    d: (0.5 * fm.force_a * t * t + displacement) / m,
                    d_dot: (fm.force_a * t + impulse) / m,
                    d_ddot: (fm.force_a + fm.force.eval(t)) / m,
                }
            }
        };
        Ok(k)
    }

    /// Acceleration only; cheap for every kind, so safe inside stepping loops.
    pub fn accel(&self, t: f64) -> Result<f64> {
        match self {
            Trajectory::Forced(fm) => Ok((fm.force_a + fm.force.eval(t)) / fm.mass),
            _ => self.eval(t).map(|k| k.d_ddot),
        }
    }

    pub fn descriptor(&self) -> TrajectoryDescriptor {
        match self {
            Trajectory::Rest => TrajectoryDescriptor::Rest,
            Trajectory::Polynomial { coeffs } => TrajectoryDescriptor::Polynomial {
                coeffs: coeffs.clone(),
            },
            Trajectory::Sinusoid {
                amplitude,
                omega,
                phase,
            } => TrajectoryDescriptor::Sinusoid {
                amplitude: *amplitude,
                omega: *omega,
                phase: *phase,
            },
            Trajectory::UniformAcceleration { accel } => {
                TrajectoryDescriptor::UniformAcceleration { accel: *accel }
            }
            Trajectory::TabulatedSpline { spline } => {
                let (t_min, t_max) = spline.range();
                TrajectoryDescriptor::TabulatedSpline { t_min, t_max }
            }
            Trajectory::Forced(fm) => TrajectoryDescriptor::Forced {
                force_a: fm.force_a,
                force: fm.label.clone(),
                horizon: fm.horizon(),
            },
        }
    }
}

/// Builds the motion obeying `m d̈ = A + F(t)` with d(0) = ḋ(0) = 0, valid on
/// `[0, horizon]`.
pub fn trajectory_from_force(
    force_a: f64,
    force: RealFn,
    label: impl Into<String>,
    consts: &PhysicalConstants,
    horizon: f64,
    tol: f64,
) -> Result<Trajectory> {
    finite("force constant", force_a)?;
    if !(tol > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "tolerance must be positive, got {tol}"
        )));
    }
    for t in [0.0, horizon] {
        if !force.eval(t).is_finite() {
            return Err(Error::DegenerateInput(format!(
                "force is not finite at t = {t}"
            )));
        }
    }
    // The double integral is carried as two single running integrals (Cauchy's
    // repeated-integration identity) so each evaluation is one short adaptive
    // quadrature rather than a quadrature of a quadrature.
    let scale = horizon.max(1.0);
    let impulse = CumulativeIntegral::new(force.clone(), horizon, tol / scale)?;
    let moment = {
        let f = force.clone();
        CumulativeIntegral::new(RealFn::new(move |s| s * f.eval(s)), horizon, tol)?
    };
    Ok(Trajectory::Forced(ForcedMotion {
        force_a,
        force,
        label: label.into(),
        mass: consts.mass,
        impulse,
        moment,
    }))
}

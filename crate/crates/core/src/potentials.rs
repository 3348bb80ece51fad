//! Solutions of the one-dimensional backward heat equation
//! `∂ₜV = −½ ∂ₛₛV`, used as potentials for betting and OLO.
//!
//! Three stock solutions are provided, plus a linear one:
//!
//! | kind     | value                                   |
//! |----------|-----------------------------------------|
//! | `Ogd`    | `C(S² − t)`                             |
//! | `Exp`    | `C t^{−1/2} exp(S²/2t)`                 |
//! | `Erfi`   | `C √t [2 G(S/√(2t)) − 1]`               |
//! | `Linear` | `C S`                                   |
//!
//! where `G` is [`specfun::double_exp_integral`]. Every potential carries
//! shifts `(C₀, τ, S₀)` and evaluates `C₀ + V(t + τ, S + S₀)`. Nonnegative
//! combinations of solutions are solutions; negative weights are accepted only
//! on parts that are affine in `S`.
//!
//! At `t + τ = 0` the `Exp` and `Erfi` kinds are defined only at the anchor
//! `S + S₀ = 0`, where they take the value 0.

use crate::error::{Error, Result};
use crate::specfun::{self, ScaledValue};

/// Finite-difference step in `S` for residual checks: `2⁻¹³ ≈ 1.22e−4`.
/// A dyadic step keeps `S ± h` exact, so polynomial potentials difference
/// without rounding.
pub const FD_STEP_S: f64 = 1.0 / 8192.0;

/// Maximum number of bracketing plus bisection steps in [`fenchel_conjugate`].
pub const MAX_BISECTION_STEPS: usize = 200;

/// Scale and shift constants of a potential.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PotentialParams {
    /// Scale `C > 0`.
    pub c: f64,
    /// Value shift `C₀`.
    pub c0: f64,
    /// Time shift `τ ≥ 0`.
    pub tau: f64,
    /// Space shift `S₀`.
    pub s0: f64,
}

impl PotentialParams {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::Domain(format!("scale C must be positive, got {c}")));
        }
        Ok(PotentialParams {
            c,
            c0: 0.0,
            tau: 0.0,
            s0: 0.0,
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum PotentialKind {
    /// `C(S² − t)`, the exact value function behind gradient descent.
    Ogd,
    /// `C t^{−1/2} exp(S²/2t)`.
    Exp,
    /// `C √t [2 G(S/√(2t)) − 1]`.
    Erfi,
    /// `C S`.
    Linear,
    /// `a·first + b·second`; the scale `C` of the outer params is unused.
    Combination {
        a: f64,
        first: Box<Potential>,
        b: f64,
        second: Box<Potential>,
    },
}

/// Analytic partial derivatives at a point.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Derivatives {
    pub d_t: f64,
    pub d_tt: f64,
    pub d_s: f64,
    pub d_ss: f64,
    pub d_sss: f64,
    pub d_ssss: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Potential {
    kind: PotentialKind,
    params: PotentialParams,
}

impl Potential {
    fn stock(kind: PotentialKind, c: f64) -> Result<Self> {
        Ok(Potential {
            kind,
            params: PotentialParams::new(c)?,
        })
    }

    pub fn ogd(c: f64) -> Result<Self> {
        Self::stock(PotentialKind::Ogd, c)
    }

    pub fn exp(c: f64) -> Result<Self> {
        Self::stock(PotentialKind::Exp, c)
    }

    pub fn erfi(c: f64) -> Result<Self> {
        Self::stock(PotentialKind::Erfi, c)
    }

    pub fn linear(c: f64) -> Result<Self> {
        Self::stock(PotentialKind::Linear, c)
    }

    pub fn kind(&self) -> &PotentialKind {
        &self.kind
    }

    pub fn params(&self) -> &PotentialParams {
        &self.params
    }

    pub fn is_shifted(&self) -> bool {
        let p = &self.params;
        p.c0 != 0.0 || p.tau != 0.0 || p.s0 != 0.0
    }

    fn is_affine_in_s(&self) -> bool {
        match &self.kind {
            PotentialKind::Linear => true,
            PotentialKind::Combination { first, second, .. } => {
                first.is_affine_in_s() && second.is_affine_in_s()
            }
            _ => false,
        }
    }

    fn shifted_point(&self, t: f64, s: f64) -> Result<(f64, f64)> {
        if !(t >= 0.0) || !t.is_finite() || !s.is_finite() {
            return Err(Error::Domain(format!("evaluation at (t={t}, S={s})")));
        }
        Ok((t + self.params.tau, s + self.params.s0))
    }

    /// `V(t, S)`. Signals [`Error::Overflow`] when the value leaves the
    /// `f64` range; [`Potential::value_scaled`] never does.
    pub fn value(&self, t: f64, s: f64) -> Result<f64> {
        let (t, s) = self.shifted_point(t, s)?;
        let c = self.params.c;
        let base = match &self.kind {
            PotentialKind::Ogd => c * (s * s - t),
            PotentialKind::Linear => c * s,
            PotentialKind::Exp => {
                if t == 0.0 {
                    anchor(s)?
                } else {
                    c / t.sqrt() * (s * s / (2.0 * t)).exp()
                }
            }
            PotentialKind::Erfi => {
                if t == 0.0 {
                    anchor(s)?
                } else {
                    c * t.sqrt() * specfun::erfi_profile(s / (2.0 * t).sqrt())?
                }
            }
            PotentialKind::Combination {
                a,
                first,
                b,
                second,
            } => a * first.value(t, s)? + b * second.value(t, s)?,
        };
        let v = self.params.c0 + base;
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::Overflow(format!("potential value at (t={t}, S={s})")))
        }
    }

    /// `V(t, S)` in log-magnitude form.
    pub fn value_scaled(&self, t: f64, s: f64) -> Result<ScaledValue> {
        let (t, s) = self.shifted_point(t, s)?;
        let c = self.params.c;
        let base = match &self.kind {
            PotentialKind::Ogd => ScaledValue::from_f64(c * (s * s - t)),
            PotentialKind::Linear => ScaledValue::from_f64(c * s),
            PotentialKind::Exp => {
                if t == 0.0 {
                    ScaledValue::from_f64(anchor(s)?)
                } else {
                    ScaledValue::new(1, c.ln() - 0.5 * t.ln() + s * s / (2.0 * t))
                }
            }
            PotentialKind::Erfi => {
                if t == 0.0 {
                    ScaledValue::from_f64(anchor(s)?)
                } else {
                    specfun::erfi_profile_scaled(s / (2.0 * t).sqrt()).scale(c * t.sqrt())
                }
            }
            PotentialKind::Combination {
                a,
                first,
                b,
                second,
            } => first
                .value_scaled(t, s)?
                .scale(*a)
                .add(second.value_scaled(t, s)?.scale(*b)),
        };
        Ok(base.add(ScaledValue::from_f64(self.params.c0)))
    }

    /// Analytic `∂V/∂S`.
    pub fn d_s(&self, t: f64, s: f64) -> Result<f64> {
        let (t, s) = self.shifted_point(t, s)?;
        let c = self.params.c;
        let d = match &self.kind {
            PotentialKind::Ogd => 2.0 * c * s,
            PotentialKind::Linear => c,
            PotentialKind::Exp | PotentialKind::Erfi if t == 0.0 => {
                return Err(Error::Domain("S-derivative at t = 0".into()))
            }
            PotentialKind::Exp => c * s * t.powf(-1.5) * (s * s / (2.0 * t)).exp(),
            PotentialKind::Erfi => {
                std::f64::consts::SQRT_2 * c * specfun::exp_integral(s / (2.0 * t).sqrt())?
            }
            PotentialKind::Combination {
                a,
                first,
                b,
                second,
            } => a * first.d_s(t, s)? + b * second.d_s(t, s)?,
        };
        if d.is_finite() {
            Ok(d)
        } else {
            Err(Error::Overflow(format!("S-derivative at (t={t}, S={s})")))
        }
    }
}

fn anchor(s: f64) -> Result<f64> {
    if s == 0.0 {
        Ok(0.0)
    } else {
        Err(Error::Domain(format!(
            "only the anchor (0, 0) is defined at t = 0, got S = {s}"
        )))
    }
}

/// Returns the potential evaluating `C₀ + p(t + τ, S + S₀)`.
pub fn shift(p: &Potential, c0: f64, tau: f64, s0: f64) -> Result<Potential> {
    if !(tau >= 0.0) {
        return Err(Error::Domain(format!("time shift must be nonnegative, got {tau}")));
    }
    let mut out = p.clone();
    out.params.c0 += c0;
    out.params.tau += tau;
    out.params.s0 += s0;
    Ok(out)
}

/// `a·p1 + b·p2`. A negative weight on a part that is not affine in `S`
/// would break convexity and is rejected.
pub fn combine(a: f64, p1: &Potential, b: f64, p2: &Potential) -> Result<Potential> {
    for (w, p) in [(a, p1), (b, p2)] {
        if !w.is_finite() {
            return Err(Error::Domain(format!("weight {w} is not finite")));
        }
        if w < 0.0 && !p.is_affine_in_s() {
            return Err(Error::NotConvex(format!(
                "negative weight {w} on a potential that is not affine in S"
            )));
        }
    }
    Ok(Potential {
        kind: PotentialKind::Combination {
            a,
            first: Box::new(p1.clone()),
            b,
            second: Box::new(p2.clone()),
        },
        params: PotentialParams {
            c: 1.0,
            c0: 0.0,
            tau: 0.0,
            s0: 0.0,
        },
    })
}

/// `(V(t,S) − V(t−1,S), V(t,S+1) + V(t,S−1) − 2V(t,S))`.
pub fn discrete_derivatives(p: &Potential, t: f64, s: f64) -> Result<(f64, f64)> {
    if !(t >= 1.0) {
        return Err(Error::Domain(format!("discrete derivatives need t ≥ 1, got {t}")));
    }
    let here = p.value(t, s)?;
    let dbar_t = here - p.value(t - 1.0, s)?;
    let dbar_ss = p.value(t, s + 1.0)? + p.value(t, s - 1.0)? - 2.0 * here;
    Ok((dbar_t, dbar_ss))
}

/// The discrete Itô perturbation `½V(t,S+1) + ½V(t,S−1) − V(t−1,S)`.
pub fn perturbation(p: &Potential, t: f64, s: f64) -> Result<f64> {
    if !(t >= 1.0) {
        return Err(Error::Domain(format!("perturbation needs t ≥ 1, got {t}")));
    }
    Ok(0.5 * p.value(t, s + 1.0)? + 0.5 * p.value(t, s - 1.0)? - p.value(t - 1.0, s)?)
}

/// `∂ₜV + ½∂ₛₛV` by central differences.
pub fn pde_residual(p: &Potential, t: f64, s: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::Domain(format!("residual needs t > 0, got {t}")));
    }
    let ht = FD_STEP_S * t.min(1.0);
    let hs = FD_STEP_S;
    let d_t = (p.value(t + ht, s)? - p.value(t - ht, s)?) / (2.0 * ht);
    let d_ss = (p.value(t, s + hs)? - 2.0 * p.value(t, s)? + p.value(t, s - hs)?) / (hs * hs);
    Ok(d_t + 0.5 * d_ss)
}

/// `g″(z) − 2z g′(z) + 4α g(z)` by five-point central differences.
pub fn hermite_residual<G: Fn(f64) -> f64>(alpha: f64, g: G, z: f64) -> f64 {
    let h = 1.0 / 1024.0;
    let (gm2, gm1, g0, gp1, gp2) = (g(z - 2.0 * h), g(z - h), g(z), g(z + h), g(z + 2.0 * h));
    let d1 = (gm2 - 8.0 * gm1 + 8.0 * gp1 - gp2) / (12.0 * h);
    let d2 = (-gm2 + 16.0 * gm1 - 30.0 * g0 + 16.0 * gp1 - gp2) / (12.0 * h * h);
    d2 - 2.0 * z * d1 + 4.0 * alpha * g0
}

/// Closed-form derivatives of the `Exp` and `Erfi` kinds (shifts honored).
pub fn analytic_derivatives(p: &Potential, t: f64, s: f64) -> Result<Derivatives> {
    let (t, s) = p.shifted_point(t, s)?;
    if !(t > 0.0) {
        return Err(Error::Domain(format!("analytic derivatives need t > 0, got {t}")));
    }
    let c = p.params.c;
    let x = s * s / t;
    let e = (x / 2.0).exp();
    let t32 = t.powf(1.5);
    let d = match p.kind {
        PotentialKind::Erfi => Derivatives {
            d_t: -c / (2.0 * t.sqrt()) * e,
            d_tt: c / (4.0 * t32) * e * (x + 1.0),
            d_s: std::f64::consts::SQRT_2 * c * specfun::exp_integral(s / (2.0 * t).sqrt())?,
            d_ss: c / t.sqrt() * e,
            d_sss: c * s / t32 * e,
            d_ssss: c / t32 * e * (x + 1.0),
        },
        PotentialKind::Exp => {
            let t52 = t.powf(2.5);
            let quartic = x * x + 6.0 * x + 3.0;
            Derivatives {
                d_t: -c / (2.0 * t32) * e * (x + 1.0),
                d_tt: c / (4.0 * t52) * e * quartic,
                d_s: c * s / t32 * e,
                d_ss: c / t32 * e * (x + 1.0),
                d_sss: c / t32 * e * (s * x / t + 3.0 * s / t),
                d_ssss: c / t52 * e * quartic,
            }
        }
        _ => {
            return Err(Error::Domain(
                "analytic derivatives are tabulated for Exp and Erfi only".into(),
            ))
        }
    };
    Ok(d)
}

/// `sup_S [S w − V(T, S)]`, found by bisection on the monotone analytic
/// `∂V/∂S` and evaluated at the stationary point.
pub fn fenchel_conjugate(p: &Potential, horizon: f64, w: f64) -> Result<f64> {
    if !w.is_finite() || !(horizon > 0.0) {
        return Err(Error::Domain(format!("conjugate at T={horizon}, w={w}")));
    }
    let grad = |s: f64| p.d_s(horizon, s);
    let c = p.params.c;
    let cap = (2.0 * horizon).sqrt()
        * ((w.abs() / (std::f64::consts::SQRT_2 * c)).ln_1p().sqrt() + 1.0)
        + 1.0;
    let mut steps = 0;
    let (mut lo, mut hi);
    if grad(0.0)? <= w {
        lo = 0.0;
        hi = cap;
        while grad(hi)? < w {
            steps += 1;
            if steps >= MAX_BISECTION_STEPS {
                return Err(Error::NoConvergence(steps));
            }
            lo = hi;
            hi *= 2.0;
        }
    } else {
        hi = 0.0;
        lo = -cap;
        while grad(lo)? > w {
            steps += 1;
            if steps >= MAX_BISECTION_STEPS {
                return Err(Error::NoConvergence(steps));
            }
            hi = lo;
            lo *= 2.0;
        }
    }
    loop {
        let mid = 0.5 * (lo + hi);
        if hi - lo <= 1e-14 * (1.0 + lo.abs() + hi.abs()) || mid == lo || mid == hi {
            break;
        }
        steps += 1;
        if steps >= MAX_BISECTION_STEPS {
            return Err(Error::NoConvergence(steps));
        }
        let g = grad(mid)?;
        if g < w {
            lo = mid;
        } else if g > w {
            hi = mid;
        } else {
            lo = mid;
            hi = mid;
        }
    }
    let s_star = 0.5 * (lo + hi);
    Ok(s_star * w - p.value(horizon, s_star)?)
}

//! Overflow-aware evaluation of the integrals behind the erfi-type potential.
//!
//! Three quantities are needed:
//!
//! * `E(z) = ∫₀ᶻ e^{x²} dx` (the imaginary error function up to a factor `√π/2`),
//! * the Dawson function `D(z) = e^{−z²} E(z)`,
//! * `G(z) = ∫₀ᶻ E(u) du = ½[2z E(z) − e^{z²} + 1]`.
//!
//! For `|z| ≤ 6` all three are summed from Maclaurin series whose terms are
//! all positive, so no digits are lost to cancellation. Beyond that the
//! asymptotic expansion of the Dawson function is accurate to machine
//! precision and the results are carried in log-magnitude form
//! ([`ScaledValue`]) because `e^{z²}` leaves the `f64` range near `z ≈ 26.6`.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Div, Mul, Neg};

use crate::error::{Error, Result};

/// Largest `|z|` handled by the power series.
pub const SERIES_LIMIT: f64 = 6.0;

const MAX_SERIES_TERMS: usize = 2000;

/// A real number stored as a sign and the natural log of its magnitude.
///
/// Zero is `(0, −∞)`. Only multiplication, division, comparison and a
/// guarded log-sum-exp addition are provided.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScaledValue {
    sign: i8,
    log_magnitude: f64,
}

impl ScaledValue {
    pub const ZERO: ScaledValue = ScaledValue {
        sign: 0,
        log_magnitude: f64::NEG_INFINITY,
    };

    /// Builds a value from its parts. A zero sign or a `−∞` log magnitude
    /// both collapse to [`ScaledValue::ZERO`].
    pub fn new(sign: i8, log_magnitude: f64) -> Self {
        if sign == 0 || log_magnitude == f64::NEG_INFINITY {
            Self::ZERO
        } else {
            ScaledValue {
                sign: sign.signum(),
                log_magnitude,
            }
        }
    }

    pub fn from_f64(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            ScaledValue {
                sign: if x > 0.0 { 1 } else { -1 },
                log_magnitude: x.abs().ln(),
            }
        }
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    pub fn log_magnitude(self) -> f64 {
        self.log_magnitude
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    /// Converts to `f64`; values beyond range become `±∞`.
    pub fn to_f64(self) -> f64 {
        f64::from(self.sign) * self.log_magnitude.exp()
    }

    /// Converts to `f64`, clamping to `±f64::MAX`. The flag reports whether
    /// clamping happened.
    pub fn to_f64_saturating(self) -> (f64, bool) {
        let x = self.to_f64();
        if x.is_finite() {
            (x, false)
        } else {
            (f64::from(self.sign) * f64::MAX, true)
        }
    }

    /// Multiplies by a plain real.
    pub fn scale(self, factor: f64) -> Self {
        self * ScaledValue::from_f64(factor)
    }

    /// Sum via log-sum-exp. Exact cancellation yields zero.
    pub fn add(self, other: Self) -> Self {
        if self.is_zero() {
            return other;
        }
        if other.is_zero() {
            return self;
        }
        let (big, small) = if self.log_magnitude >= other.log_magnitude {
            (self, other)
        } else {
            (other, self)
        };
        let ratio = (small.log_magnitude - big.log_magnitude).exp();
        if big.sign == small.sign {
            ScaledValue::new(big.sign, big.log_magnitude + ratio.ln_1p())
        } else if ratio == 1.0 {
            Self::ZERO
        } else {
            ScaledValue::new(big.sign, big.log_magnitude + (-ratio).ln_1p())
        }
    }

    pub fn sub(self, other: Self) -> Self {
        self.add(-other)
    }
}

impl Neg for ScaledValue {
    type Output = ScaledValue;

    fn neg(self) -> ScaledValue {
        ScaledValue {
            sign: -self.sign,
            log_magnitude: self.log_magnitude,
        }
    }
}

impl Mul for ScaledValue {
    type Output = ScaledValue;

    fn mul(self, rhs: ScaledValue) -> ScaledValue {
        ScaledValue::new(self.sign * rhs.sign, self.log_magnitude + rhs.log_magnitude)
    }
}

impl Div for ScaledValue {
    type Output = ScaledValue;

    fn div(self, rhs: ScaledValue) -> ScaledValue {
        assert!(!rhs.is_zero(), "division of ScaledValue by zero");
        ScaledValue::new(self.sign * rhs.sign, self.log_magnitude - rhs.log_magnitude)
    }
}

impl PartialOrd for ScaledValue {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match self.sign.cmp(&other.sign) {
            Ordering::Equal => {}
            ord => return Some(ord),
        }
        match self.sign {
            0 => Some(Ordering::Equal),
            1 => self.log_magnitude.partial_cmp(&other.log_magnitude),
            _ => other.log_magnitude.partial_cmp(&self.log_magnitude),
        }
    }
}

impl fmt::Display for ScaledValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "0"),
            s => write!(f, "{}exp({})", if s > 0 { "" } else { "-" }, self.log_magnitude),
        }
    }
}

fn check_finite(z: f64) -> Result<()> {
    if z.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!("argument must be finite, got {z}")))
    }
}

/// `Σ_{k≥0} z^{2k+1} / (k! (2k+1))` for `z ≥ 0`.
fn exp_integral_series(z: f64) -> f64 {
    let z2 = z * z;
    let mut power = z; // z^{2k+1} / k!
    let mut sum = z;
    for k in 1..MAX_SERIES_TERMS {
        power *= z2 / k as f64;
        let term = power / (2 * k + 1) as f64;
        sum += term;
        if term <= f64::EPSILON * 0.25 * sum {
            break;
        }
    }
    sum
}

/// `2G(z) = Σ_{j≥1} z^{2j} / (j! (2j−1))` for `z ≥ 0`.
fn twice_double_series(z: f64) -> f64 {
    let z2 = z * z;
    let mut power = 1.0; // z^{2j} / j!
    let mut sum = 0.0;
    for j in 1..MAX_SERIES_TERMS {
        power *= z2 / j as f64;
        let term = power / (2 * j - 1) as f64;
        sum += term;
        if term <= f64::EPSILON * 0.25 * sum {
            break;
        }
    }
    sum
}

/// `Σ_{k≥1} (2k−1)!! / (2z²)^k`, the asymptotic series of `2zD(z) − 1`,
/// truncated at its smallest term. Requires `z > SERIES_LIMIT`.
fn dawson_tail(z: f64) -> f64 {
    let inv = 1.0 / (2.0 * z * z);
    let mut term = 1.0;
    let mut sum = 0.0;
    for k in 1..MAX_SERIES_TERMS {
        let next = term * (2 * k - 1) as f64 * inv;
        if next >= term {
            break;
        }
        term = next;
        sum += term;
        if term <= f64::EPSILON * 0.25 * sum {
            break;
        }
    }
    sum
}

/// Dawson function `D(z) = e^{−z²} ∫₀ᶻ e^{x²} dx`.
pub fn dawson(z: f64) -> f64 {
    if z.is_nan() {
        return f64::NAN;
    }
    let a = z.abs();
    let d = if a == 0.0 {
        0.0
    } else if a <= SERIES_LIMIT {
        (-a * a).exp() * exp_integral_series(a)
    } else if a.is_infinite() {
        0.0
    } else {
        (1.0 + dawson_tail(a)) / (2.0 * a)
    };
    d.copysign(z)
}

/// `∫₀ᶻ e^{x²} dx` in overflow-safe form.
pub fn exp_integral_scaled(z: f64) -> ScaledValue {
    let a = z.abs();
    let sign = if z > 0.0 {
        1
    } else if z < 0.0 {
        -1
    } else {
        0
    };
    if sign == 0 {
        return ScaledValue::ZERO;
    }
    if a <= SERIES_LIMIT {
        ScaledValue::new(sign, exp_integral_series(a).ln())
    } else {
        ScaledValue::new(sign, a * a + dawson(a).ln())
    }
}

/// `∫₀ᶻ e^{x²} dx`. Signals [`Error::Overflow`] when the result is outside
/// the `f64` range (`|z| ≳ 26.6`).
pub fn exp_integral(z: f64) -> Result<f64> {
    check_finite(z)?;
    let a = z.abs();
    let value = if a <= SERIES_LIMIT {
        exp_integral_series(a)
    } else {
        (a * a + dawson(a).ln()).exp()
    };
    if value.is_finite() {
        Ok(value.copysign(z))
    } else {
        Err(Error::Overflow(format!("exp_integral({z})")))
    }
}

/// `∫₀ᶻ ∫₀ᵘ e^{x²} dx du` in overflow-safe form. Even in `z`.
pub fn double_exp_integral_scaled(z: f64) -> ScaledValue {
    let a = z.abs();
    if a == 0.0 {
        return ScaledValue::ZERO;
    }
    if a <= SERIES_LIMIT {
        ScaledValue::new(1, (0.5 * twice_double_series(a)).ln())
    } else {
        // ½[e^{z²}(2zD − 1) + 1]
        let inner = 0.5 * (dawson_tail(a) + (-a * a).exp());
        ScaledValue::new(1, a * a + inner.ln())
    }
}

/// `∫₀ᶻ ∫₀ᵘ e^{x²} dx du = ½[2z E(z) − e^{z²} + 1]`.
pub fn double_exp_integral(z: f64) -> Result<f64> {
    check_finite(z)?;
    let a = z.abs();
    let value = if a <= SERIES_LIMIT {
        0.5 * twice_double_series(a)
    } else {
        double_exp_integral_scaled(a).to_f64()
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Overflow(format!("double_exp_integral({z})")))
    }
}

/// `2z E(z) − e^{z²} = 2G(z) − 1`, the profile of the erfi potential,
/// overflow-safe. Even in `z`, equal to `−1` at the origin.
pub fn erfi_profile_scaled(z: f64) -> ScaledValue {
    let a = z.abs();
    if a <= SERIES_LIMIT {
        ScaledValue::from_f64(twice_double_series(a) - 1.0)
    } else {
        ScaledValue::new(1, a * a + dawson_tail(a).ln())
    }
}

/// Plain-real version of [`erfi_profile_scaled`].
pub fn erfi_profile(z: f64) -> Result<f64> {
    check_finite(z)?;
    let a = z.abs();
    let value = if a <= SERIES_LIMIT {
        twice_double_series(a) - 1.0
    } else {
        erfi_profile_scaled(a).to_f64()
    };
    if value.is_finite() {
        Ok(value)
    } else {
        Err(Error::Overflow(format!("erfi_profile({z})")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    #[test]
    fn zero_arguments() {
        assert_eq!(exp_integral(0.0).unwrap(), 0.0);
        assert_eq!(dawson(0.0), 0.0);
        assert_eq!(double_exp_integral(0.0).unwrap(), 0.0);
        assert_eq!(exp_integral_scaled(0.0), ScaledValue::ZERO);
        assert_eq!(erfi_profile(0.0).unwrap(), -1.0);
    }

    #[test]
    fn reference_values_at_one() {
        // 80-digit quadrature
        assert!(rel(exp_integral(1.0).unwrap(), 1.462_651_745_907_181_6) < 1e-14);
        assert!(rel(dawson(1.0), 0.538_079_506_912_768_4) < 1e-14);
        assert!(rel(double_exp_integral(1.0).unwrap(), 0.603_510_831_677_659) < 1e-14);
        assert!(rel(exp_integral_scaled(1.0).to_f64(), 1.462_651_745_907_181_6) < 1e-14);
    }

    #[test]
    fn symmetry() {
        assert_eq!(exp_integral(-1.0).unwrap(), -exp_integral(1.0).unwrap());
        assert_eq!(double_exp_integral(-1.0).unwrap(), double_exp_integral(1.0).unwrap());
        assert_eq!(dawson(-7.5), -dawson(7.5));
    }

    #[test]
    fn dawson_large_argument() {
        assert!((dawson(1000.0) - 0.0005).abs() < 1e-9);
        assert!(rel(dawson(10.0), 0.050_253_847_187_598_53) < 1e-14);
    }

    #[test]
    fn scaled_far_tail() {
        let s = exp_integral_scaled(40.0);
        assert_eq!(s.sign(), 1);
        assert!((s.log_magnitude() - (1600.0 + dawson(40.0).ln())).abs() < 1e-12);
        // log E(40) from 80-digit quadrature
        assert!(rel(s.log_magnitude(), 1_595.618_286_109_844) < 1e-14);
        assert!(matches!(exp_integral(40.0), Err(Error::Overflow(_))));
    }

    #[test]
    fn series_and_asymptotic_agree_at_switch() {
        // d log E / dz ≈ 2z, so a 1e-14 nudge moves E by ~1.2e-13
        let above_arg = SERIES_LIMIT + 1e-14;
        let below = exp_integral(SERIES_LIMIT).unwrap();
        let above = exp_integral(above_arg).unwrap();
        assert!(rel(above, below) < 1e-12);
        let below = double_exp_integral(SERIES_LIMIT).unwrap();
        let above = double_exp_integral(above_arg).unwrap();
        assert!(rel(above, below) < 1e-12);
        assert!(rel(dawson(above_arg), 0.084_542_688_974_543_85) < 1e-14);
    }

    #[test]
    fn derivative_of_exp_integral() {
        let h = 1e-5;
        for i in 0..=50 {
            let z = i as f64 * 0.1;
            let fd = (exp_integral(z + h).unwrap() - exp_integral(z - h).unwrap()) / (2.0 * h);
            assert!(rel(fd, (z * z).exp()) <= 1e-6, "z={z}");
        }
    }

    #[test]
    fn closed_form_consistency() {
        for i in 0..=80 {
            let z = i as f64 * 0.1;
            let closed = 0.5 * (2.0 * z * exp_integral(z).unwrap() - (z * z).exp() + 1.0);
            let diff = (double_exp_integral(z).unwrap() - closed).abs();
            assert!(diff <= 1e-11 * (z * z).exp(), "z={z} diff={diff}");
        }
    }

    #[test]
    fn scaled_arithmetic() {
        let a = ScaledValue::from_f64(3.0);
        let b = ScaledValue::from_f64(-5.0);
        assert!((a.add(b).to_f64() + 2.0).abs() < 1e-15);
        assert!((a.sub(b).to_f64() - 8.0).abs() < 1e-14);
        assert!(((a * b).to_f64() + 15.0).abs() < 1e-13);
        assert!(((b / a).to_f64() + 5.0 / 3.0).abs() < 1e-15);
        assert!(a.sub(a).is_zero());
        assert!(b < a && ScaledValue::ZERO < a && b < ScaledValue::ZERO);
        let huge = ScaledValue::new(-1, 1000.0);
        assert_eq!(huge.to_f64_saturating(), (-f64::MAX, true));
    }

    proptest! {
        #[test]
        fn odd_symmetry(z in -20.0f64..20.0) {
            let p = exp_integral(z).unwrap();
            let m = exp_integral(-z).unwrap();
            prop_assert!((p + m).abs() <= 1e-14 * p.abs().max(1e-300));
        }

        #[test]
        fn scaled_matches_plain(z in -26.0f64..26.0) {
            let plain = exp_integral(z).unwrap();
            let scaled = exp_integral_scaled(z).to_f64();
            if plain != 0.0 {
                prop_assert!(rel(scaled, plain) <= 1e-10);
            }
            let plain = double_exp_integral(z).unwrap();
            let scaled = double_exp_integral_scaled(z).to_f64();
            if plain != 0.0 {
                prop_assert!(rel(scaled, plain) <= 1e-10);
            }
        }

        #[test]
        fn plain_scaled_roundtrip(x in -1e300f64..1e300) {
            let back = ScaledValue::from_f64(x).to_f64();
            prop_assert!((back - x).abs() <= 2e-13 * x.abs());
        }
    }
}

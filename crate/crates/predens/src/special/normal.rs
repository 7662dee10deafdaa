//! Standard normal density, distribution function, log tails and the inverse
//! Mills ratio.
//!
//! The unchecked kernels (`pdf`, `cdf`, ...) accept infinities and propagate
//! NaN; the `std_normal_*` wrappers reject non-finite input.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::error::{finite, Result};

pub(crate) const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;
pub(crate) const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const INV_SQRT_PI: f64 = 0.564_189_583_547_756_3;

/// Below this point `log_cdf` switches to the asymptotic series.
const ASYMPTOTIC_BELOW: f64 = -37.0;
/// `erfcx` uses the continued fraction from here on.
const ERFCX_CF_FROM: f64 = 4.0;
const ERFCX_CF_DEPTH: usize = 80;
/// `mills_ratio` works through `erfcx` below this point.
const MILLS_SCALED_BELOW: f64 = -8.0;

/// Scaled complementary error function `exp(x^2) erfc(x)` for `x >= 0`.
pub fn erfcx(x: f64) -> f64 {
    debug_assert!(x >= 0.0 || x.is_nan());
    if x < ERFCX_CF_FROM {
        return (x * x).exp() * libm::erfc(x);
    }
    // Laplace continued fraction, evaluated from the tail.
    let mut t = x;
    for k in (1..=ERFCX_CF_DEPTH).rev() {
        t = x + (k as f64 * 0.5) / t;
    }
    INV_SQRT_PI / t
}

pub fn pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

pub fn log_pdf(z: f64) -> f64 {
    -LN_SQRT_2PI - 0.5 * z * z
}

pub fn cdf(z: f64) -> f64 {
    0.5 * libm::erfc(-z * FRAC_1_SQRT_2)
}

pub fn log_cdf(z: f64) -> f64 {
    if z.is_nan() {
        return z;
    }
    if z < ASYMPTOTIC_BELOW {
        if z == f64::NEG_INFINITY {
            return z;
        }
        let w = 1.0 / (z * z);
        let series = 1.0 - w * (1.0 - 3.0 * w * (1.0 - 5.0 * w * (1.0 - 7.0 * w * (1.0 - 9.0 * w))));
        return log_pdf(z) - (-z).ln() + series.ln();
    }
    let x = -z * FRAC_1_SQRT_2;
    if x >= ERFCX_CF_FROM {
        (0.5 * erfcx(x)).ln() - x * x
    } else if z < 0.0 {
        cdf(z).ln()
    } else {
        (-cdf(-z)).ln_1p()
    }
}

/// `phi(z) / Phi(z)`.
pub fn mills_ratio(z: f64) -> f64 {
    if z >= MILLS_SCALED_BELOW {
        pdf(z) / cdf(z)
    } else {
        // phi(z) = INV_SQRT_2PI exp(-x^2) and Phi(z) = erfcx(x) exp(-x^2) / 2
        INV_SQRT_2PI / (0.5 * erfcx(-z * FRAC_1_SQRT_2))
    }
}

/// `log(Phi(b) - Phi(a))` for `a < b`, stable in both tails.
pub fn log_cdf_diff(a: f64, b: f64) -> f64 {
    debug_assert!(!(a > b));
    if a >= 0.0 {
        return log_cdf_diff(-b, -a);
    }
    if b > 0.0 {
        // the two erf terms have opposite signs, so nothing cancels
        let mass = 0.5 * (libm::erf(b * FRAC_1_SQRT_2) - libm::erf(a * FRAC_1_SQRT_2));
        return mass.ln();
    }
    let lb = log_cdf(b);
    let la = log_cdf(a);
    lb + (-(la - lb).exp_m1()).ln()
}

/// `Phi(b) - Phi(a)` for `a < b`.
pub fn cdf_diff(a: f64, b: f64) -> f64 {
    log_cdf_diff(a, b).exp()
}

pub fn std_normal_pdf(z: f64) -> Result<f64> {
    Ok(pdf(finite("z", z)?))
}

pub fn std_normal_cdf(z: f64) -> Result<f64> {
    Ok(cdf(finite("z", z)?))
}

pub fn log_std_normal_cdf(z: f64) -> Result<f64> {
    Ok(log_cdf(finite("z", z)?))
}

pub fn inverse_mills(z: f64) -> Result<f64> {
    Ok(mills_ratio(finite("z", z)?))
}

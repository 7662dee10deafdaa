//! Normalizing constants of the skew-normal families: equicorrelated orthant
//! probabilities written as one-dimensional Gaussian expectations.

use super::normal::{cdf, log_cdf, log_cdf_diff};
use super::quadrature::gaussian_expectation;
use crate::error::{finite, Error, Result};

/// `K_n(a0, a1) = E[Phi(a0 + a1 Z)^n]`.
pub fn k_n(n: u32, a0: f64, a1: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("power n must be at least 1".into()));
    }
    finite("a0", a0)?;
    finite("a1", a1)?;
    let nf = n as f64;
    let slope = a1.abs();
    let e = if slope <= 1.0 {
        gaussian_expectation(|z| (nf * log_cdf(a0 + a1 * z)).exp())?
    } else {
        // Steep integrand: condition on the maximum M of n standard normals
        // instead, K_n = E[Phi((a0 - M) / |a1|)], M with density n phi Phi^(n-1).
        let ln_n = nf.ln();
        gaussian_expectation(|m| (ln_n + (nf - 1.0) * log_cdf(m) + log_cdf((a0 - m) / slope)).exp())?
    };
    Ok(e.value)
}

/// `K_1` in closed form: `Phi(a0 / sqrt(1 + a1^2))`.
pub fn k_1(a0: f64, a1: f64) -> f64 {
    cdf(a0 / (1.0 + a1 * a1).sqrt())
}

/// `log K_1`.
pub fn log_k_1(a0: f64, a1: f64) -> f64 {
    log_cdf(a0 / (1.0 + a1 * a1).sqrt())
}

/// `J_n(a0, a1, a2) = E[(Phi(a0 + a1 Z) - Phi(a2 + a1 Z))^n]`, `a0 > a2`.
pub fn j_n(n: u32, a0: f64, a1: f64, a2: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::InvalidArgument("power n must be at least 1".into()));
    }
    finite("a0", a0)?;
    finite("a1", a1)?;
    finite("a2", a2)?;
    if a0 <= a2 {
        return Err(Error::InvalidArgument(format!("need a0 > a2, got a0 = {a0}, a2 = {a2}")));
    }
    let nf = n as f64;
    let e = gaussian_expectation(|z| {
        let shift = a1 * z;
        (nf * log_cdf_diff(a2 + shift, a0 + shift)).exp()
    })?;
    Ok(e.value)
}

/// `log J_1`.
pub fn log_j_1(a0: f64, a1: f64, a2: f64) -> f64 {
    let s = (1.0 + a1 * a1).sqrt();
    log_cdf_diff(a2 / s, a0 / s)
}

//! Bivariate standard normal CDF, following Genz's BVND scheme: Gauss–Legendre
//! on the Plackett integral for moderate correlation, and Drezner–Wesolowsky
//! style asymptotic corrections near `|rho| = 1`.

use std::f64::consts::PI;

use super::normal::cdf;
use super::quadrature::legendre_rule;
use crate::error::{finite, Error, Result};

/// `P(X <= h, Y <= k)` for standard normals with correlation `rho`.
///
/// Infinite limits are accepted.
pub fn bivariate_normal_cdf(h: f64, k: f64, rho: f64) -> Result<f64> {
    finite("rho", rho)?;
    if h.is_nan() || k.is_nan() {
        return Err(Error::NonFinite { name: "limit", value: f64::NAN });
    }
    if rho.abs() >= 1.0 {
        return Err(Error::InvalidArgument(format!("correlation must lie in (-1, 1), got {rho}")));
    }
    if h == f64::NEG_INFINITY || k == f64::NEG_INFINITY {
        return Ok(0.0);
    }
    if h == f64::INFINITY {
        return Ok(cdf(k));
    }
    if k == f64::INFINITY {
        return Ok(cdf(h));
    }
    Ok(upper_orthant(-h, -k, rho).clamp(0.0, 1.0))
}

/// `P(X > dh, Y > dk)`.
fn upper_orthant(dh: f64, dk: f64, r: f64) -> f64 {
    let rule = legendre_rule(20);
    let two_pi = 2.0 * PI;
    let h = dh;
    let mut k = dk;
    let mut hk = h * k;

    if r.abs() < 0.925 {
        let hs = 0.5 * (h * h + k * k);
        let asr = r.asin();
        let sum = rule.integrate(|t| {
            let sn = (0.5 * asr * (t + 1.0)).sin();
            ((sn * hk - hs) / (1.0 - sn * sn)).exp()
        });
        return sum * asr / (2.0 * two_pi) + cdf(-h) * cdf(-k);
    }

    if r < 0.0 {
        k = -k;
        hk = -hk;
    }
    let mut bvn = 0.0;
    if r.abs() < 1.0 {
        let a2 = (1.0 - r) * (1.0 + r);
        let a = a2.sqrt();
        let bs = (h - k) * (h - k);
        let c = (4.0 - hk) / 8.0;
        let d = (12.0 - hk) / 16.0;
        let asr = -0.5 * (bs / a2 + hk);
        if asr > -100.0 {
            bvn = a * asr.exp() * (1.0 - c * (bs - a2) * (1.0 - d * bs / 5.0) / 3.0 + c * d * a2 * a2 / 5.0);
        }
        if -hk < 100.0 {
            let b = bs.sqrt();
            bvn -= (-hk / 2.0).exp() * two_pi.sqrt() * cdf(-b / a) * b * (1.0 - c * bs * (1.0 - d * bs / 5.0) / 3.0);
        }
        let half = a / 2.0;
        bvn += rule.integrate(|t| {
            let xs = (half * (t + 1.0)).powi(2);
            let rs = (1.0 - xs).sqrt();
            let asr = -0.5 * (bs / xs + hk);
            if asr > -100.0 {
                half * asr.exp()
                    * ((-hk * (1.0 - rs) / (2.0 * (1.0 + rs))).exp() / rs - (1.0 + c * xs * (1.0 + d * xs)))
            } else {
                0.0
            }
        });
        bvn = -bvn / two_pi;
    }
    if r > 0.0 {
        bvn + cdf(-h.max(k))
    } else {
        let mut out = -bvn;
        if k > h {
            out += cdf(k) - cdf(h);
        }
        out
    }
}

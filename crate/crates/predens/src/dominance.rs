//! Variance expansion of Gaussian plug-in densities and the parameter maps
//! between losses.
//!
//! A plug-in `N(theta_hat, c sY I)` whose point estimate has normalized
//! squared-error risk `MSE / (p sY)` in `[r_lower, r_upper]` is dominated
//! under Kullback–Leibler loss by every expansion `c` in `(1, c0(1 + r_lower))`.

use std::fmt;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{finite, positive, Error, Result};
use crate::model::{ConstraintSet, MisspecScheme, ProblemSpec};
use crate::risk::misspec_sigmas;
use crate::rng::stream;

/// Bisection stops once `|G_s(c)|` drops below this.
const ROOT_TOLERANCE: f64 = 1e-12;

/// Relative slack when comparing the misspecified variances.
const PERSISTENCE_SLACK: f64 = 1e-12;

/// `G_s(c) = (1 - 1/c) s - ln c`.
pub fn expansion_gap(s: f64, c: f64) -> f64 {
    (1.0 - 1.0 / c) * s - c.ln()
}

/// Largest admissible expansion: the root of `G_s` above `s`, bracketed by
/// `s^2 < c0(s) < e^s`.
pub fn c0(s: f64) -> Result<f64> {
    finite("s", s)?;
    if s <= 1.0 {
        return Err(Error::InvalidArgument(format!("c0 needs s > 1, got {s}")));
    }
    let (mut lo, mut hi) = (s * s, s.exp());
    // G_s is positive below the root and negative above it.
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let g = expansion_gap(s, mid);
        if g.abs() < ROOT_TOLERANCE || hi - lo <= f64::EPSILON * hi {
            return Ok(mid);
        }
        if g > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Real interval with open or closed ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Span {
    pub lower: f64,
    pub upper: f64,
    pub lower_closed: bool,
    pub upper_closed: bool,
}

impl Span {
    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lower_closed { x >= self.lower } else { x > self.lower };
        let below = if self.upper_closed { x <= self.upper } else { x < self.upper };
        above && below
    }
}

impl fmt::Display for Span {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}{}, {}{}",
            if self.lower_closed { '[' } else { '(' },
            self.lower,
            self.upper,
            if self.upper_closed { ']' } else { ')' }
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpansionReport {
    pub r_lower: f64,
    pub r_upper: f64,
    pub c0_value: f64,
    /// Expansions that improve on `c = 1`.
    pub dominance_interval: Span,
    /// Expansions not dominated by another expansion.
    pub complete_subclass: Span,
    pub minimal_complete: Span,
}

impl ExpansionReport {
    pub fn from_bounds(r_lower: f64, r_upper: f64) -> Result<Self> {
        positive("r_lower", r_lower)?;
        finite("r_upper", r_upper)?;
        if r_upper < r_lower {
            return Err(Error::InvalidArgument(format!("r_upper {r_upper} below r_lower {r_lower}")));
        }
        let s = 1.0 + r_lower;
        let c0_value = c0(s)?;
        Ok(Self {
            r_lower,
            r_upper,
            c0_value,
            dominance_interval: Span { lower: 1.0, upper: c0_value, lower_closed: false, upper_closed: false },
            complete_subclass: Span { lower: s, upper: c0_value, lower_closed: true, upper_closed: false },
            minimal_complete: Span { lower: s, upper: 1.0 + r_upper, lower_closed: true, upper_closed: true },
        })
    }
}

/// Closed-form normalized MSE range of the restricted MLE for a half-line
/// constraint in one dimension.
pub fn r_bounds_order(spec: &ProblemSpec) -> Result<(f64, f64)> {
    match spec.constraint() {
        ConstraintSet::HalfLineProduct { lower } if lower.len() == 1 && lower[0].is_finite() => {
            let (s1, s2, sy) = (spec.sigma1_sq(), spec.sigma2_sq(), spec.sigma_y_sq());
            Ok((s1 * (s2 + 0.5 * s1) / (sy * (s1 + s2)), s1 / sy))
        }
        _ => Err(Error::Unsupported(
            "closed-form bounds need p = 1 and a half-line constraint; use r_bounds_numeric".into(),
        )),
    }
}

/// Lower limit that holds for every estimator `W2 + psi(W1)`.
pub fn r_floor(spec: &ProblemSpec) -> f64 {
    let (s1, s2) = (spec.sigma1_sq(), spec.sigma2_sq());
    s1 * s2 / ((s1 + s2) * spec.sigma_y_sq())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NumericOptions {
    pub draws: usize,
    pub seed: u64,
}

impl Default for NumericOptions {
    fn default() -> Self {
        Self { draws: 100_000, seed: 0xd0_5e }
    }
}

/// Monte Carlo bracket of the normalized MSE of `W2 + psi(W1)` over a grid of
/// `mu1` values. The lower end is `min - 3 SE` floored at [`r_floor`], the
/// upper end `max + 3 SE`.
pub fn r_bounds_numeric(
    spec: &ProblemSpec,
    psi: impl Fn(&[f64]) -> Vec<f64> + Sync,
    grid: &[Vec<f64>],
    opts: NumericOptions,
) -> Result<(f64, f64)> {
    if grid.is_empty() {
        return Err(Error::InvalidArgument("mu1 grid is empty".into()));
    }
    if opts.draws < 2 {
        return Err(Error::InvalidArgument("need at least two draws per grid point".into()));
    }
    let p = spec.p() as f64;
    let scale = p * spec.sigma_y_sq();
    let offset = p * spec.sigma2_sq() / (1.0 + spec.r());
    let sd = spec.var_w1().sqrt();
    let points = grid
        .par_iter()
        .enumerate()
        .map(|(i, mu1)| -> Result<(f64, f64)> {
            spec.check_dim(mu1)?;
            let mut rng = stream(opts.seed.wrapping_add(i as u64), 0);
            let (mut s, mut ss) = (0.0, 0.0);
            let mut w1 = vec![0.0; mu1.len()];
            for _ in 0..opts.draws {
                for (w, m) in w1.iter_mut().zip(mu1) {
                    *w = m + sd * rng.sample::<f64, _>(StandardNormal);
                }
                let est = psi(&w1);
                let loss: f64 = est.iter().zip(mu1).map(|(e, m)| (e - m) * (e - m)).sum();
                s += loss;
                ss += loss * loss;
            }
            let m = opts.draws as f64;
            let mean = s / m;
            let var = ((ss / m - mean * mean) * m / (m - 1.0)).max(0.0);
            Ok(((mean + offset) / scale, (var / m).sqrt() / scale))
        })
        .collect::<Result<Vec<_>>>()?;
    let lower = points.iter().map(|(v, se)| v - 3.0 * se).fold(f64::INFINITY, f64::min);
    let upper = points.iter().map(|(v, se)| v + 3.0 * se).fold(f64::NEG_INFINITY, f64::max);
    Ok((lower.max(r_floor(spec)), upper))
}

/// Point estimator whose plug-in is being expanded.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointEstimator {
    /// `X1` itself.
    Unrestricted,
    /// Projection onto the constraint in the rotated frame.
    RestrictedMle,
}

/// Default `mu1` grid: 25 points along the diagonal, covering the boundary of
/// `A/(1+r)` and four standard deviations beyond it.
fn default_grid(spec: &ProblemSpec) -> Vec<Vec<f64>> {
    let sd = spec.var_w1().sqrt();
    let scaled = spec.constraint().shrink(1.0 + spec.r());
    let (lo, hi) = match &scaled {
        ConstraintSet::HalfLineProduct { lower } => {
            let l = lower.iter().copied().filter(|v| v.is_finite()).fold(f64::NEG_INFINITY, f64::max);
            let l = if l.is_finite() { l } else { 0.0 };
            (l, l + 6.0 * sd)
        }
        ConstraintSet::Interval { half_width } => (-half_width, *half_width),
        ConstraintSet::Rectangle { half_widths } => {
            let w = half_widths.iter().copied().fold(f64::INFINITY, f64::min);
            (-w, w)
        }
        ConstraintSet::Ball { radius, dim } => {
            let r = radius / (*dim as f64).sqrt();
            (-r, r)
        }
    };
    (0..25).map(|k| vec![lo + (hi - lo) * k as f64 / 24.0; spec.p()]).collect()
}

/// Dominance, complete-class and minimal-complete expansion ranges.
pub fn expansion_report(spec: &ProblemSpec, estimator: PointEstimator) -> Result<ExpansionReport> {
    let (lower, upper) = match estimator {
        PointEstimator::Unrestricted => {
            let r = spec.sigma1_sq() / spec.sigma_y_sq();
            (r, r)
        }
        PointEstimator::RestrictedMle => match r_bounds_order(spec) {
            Ok(b) => b,
            Err(_) => {
                let a = spec.constraint().shrink(1.0 + spec.r());
                r_bounds_numeric(
                    spec,
                    |w| crate::model::project_onto(&a, w).expect("dimension checked"),
                    &default_grid(spec),
                    NumericOptions::default(),
                )?
            }
        },
    };
    ExpansionReport::from_bounds(lower, upper)
}

/// Reflected-normal scale `(c/(1+alpha) + 1/(1-alpha)) sY` matching the
/// alpha-divergence risk ordering of two plug-ins with expansion `c`.
pub fn gamma0(alpha: f64, c: f64, spec: &ProblemSpec) -> Result<f64> {
    finite("alpha", alpha)?;
    positive("c", c)?;
    if alpha.abs() >= 1.0 {
        return Err(Error::InvalidArgument(format!("gamma0 needs |alpha| < 1, got {alpha}")));
    }
    Ok((c / (1.0 + alpha) + 1.0 / (1.0 - alpha)) * spec.sigma_y_sq())
}

/// Variance of the first coordinate of the working model in which a
/// squared-error improvement of `psi` carries over to alpha-divergence risk.
pub fn sigma_z1(alpha: f64, c: f64, spec: &ProblemSpec) -> Result<f64> {
    finite("alpha", alpha)?;
    positive("c", c)?;
    if alpha.abs() > 1.0 {
        return Err(Error::InvalidArgument(format!("alpha must lie in [-1, 1], got {alpha}")));
    }
    let s1 = spec.sigma1_sq();
    if alpha.abs() == 1.0 {
        return Ok(s1);
    }
    let k = (1.0 + alpha) + c * (1.0 - alpha);
    Ok(k * s1 / (k + (1.0 - alpha * alpha) * s1 / spec.sigma_y_sq()))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Persistence {
    pub holds: bool,
    pub sigma_u_sq: f64,
    pub sigma_v_sq: f64,
}

/// Whether the Kullback–Leibler dominance of the uniform-prior Bayes density
/// over the MRE survives variance misspecification `a`.
pub fn persistence_check(spec: &ProblemSpec, a: MisspecScheme) -> Result<Persistence> {
    let (sigma_u_sq, sigma_v_sq) = misspec_sigmas(spec, a)?;
    Ok(Persistence { holds: sigma_u_sq <= sigma_v_sq * (1.0 + PERSISTENCE_SLACK), sigma_u_sq, sigma_v_sq })
}

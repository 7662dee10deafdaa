//! The two-population Gaussian model, the constraint set on the mean
//! difference, rotated coordinates and linear reductions.

use crate::error::{finite, positive, same_dim, Error, Result};
use crate::special::noncentral_chi2_cdf;
use crate::special::normal::{log_cdf, log_cdf_diff, log_pdf, mills_ratio};

/// Closed convex set containing `theta1 - theta2`.
#[derive(Debug, Clone, PartialEq)]
pub enum ConstraintSet {
    /// `theta1_i - theta2_i >= lower_i`; `-inf` leaves a coordinate free.
    HalfLineProduct { lower: Vec<f64> },
    /// `|theta1 - theta2| <= half_width`, one-dimensional.
    Interval { half_width: f64 },
    /// `|theta1_i - theta2_i| <= half_widths_i`.
    Rectangle { half_widths: Vec<f64> },
    /// `||theta1 - theta2|| <= radius`.
    Ball { dim: usize, radius: f64 },
}

impl ConstraintSet {
    /// `theta1 >= theta2` coordinatewise.
    pub fn order(p: usize) -> Self {
        Self::HalfLineProduct { lower: vec![0.0; p] }
    }

    /// No restriction at all.
    pub fn unconstrained(p: usize) -> Self {
        Self::HalfLineProduct { lower: vec![f64::NEG_INFINITY; p] }
    }

    pub fn half_lines(lower: Vec<f64>) -> Result<Self> {
        let set = Self::HalfLineProduct { lower };
        set.validate()?;
        Ok(set)
    }

    pub fn interval(half_width: f64) -> Result<Self> {
        let set = Self::Interval { half_width };
        set.validate()?;
        Ok(set)
    }

    pub fn rectangle(half_widths: Vec<f64>) -> Result<Self> {
        let set = Self::Rectangle { half_widths };
        set.validate()?;
        Ok(set)
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        let set = Self::Ball { dim, radius };
        set.validate()?;
        Ok(set)
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim() == 0 {
            return Err(Error::InvalidArgument("constraint dimension must be positive".into()));
        }
        match self {
            Self::HalfLineProduct { lower } => {
                if lower.iter().any(|l| l.is_nan() || *l == f64::INFINITY) {
                    return Err(Error::InvalidArgument("lower bounds must be finite or -inf".into()));
                }
            }
            Self::Interval { half_width } => {
                positive("half_width", *half_width)?;
            }
            Self::Rectangle { half_widths } => {
                for &m in half_widths {
                    positive("half_width", m)?;
                }
            }
            Self::Ball { radius, .. } => {
                positive("radius", *radius)?;
            }
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        match self {
            Self::HalfLineProduct { lower } => lower.len(),
            Self::Interval { .. } => 1,
            Self::Rectangle { half_widths } => half_widths.len(),
            Self::Ball { dim, .. } => *dim,
        }
    }

    pub fn is_unconstrained(&self) -> bool {
        matches!(self, Self::HalfLineProduct { lower } if lower.iter().all(|l| *l == f64::NEG_INFINITY))
    }

    /// Per-coordinate `[lo, hi]` bounds for the box-shaped variants.
    pub fn coordinate_bounds(&self) -> Option<Vec<(f64, f64)>> {
        match self {
            Self::HalfLineProduct { lower } => Some(lower.iter().map(|&l| (l, f64::INFINITY)).collect()),
            Self::Interval { half_width } => Some(vec![(-half_width, *half_width)]),
            Self::Rectangle { half_widths } => Some(half_widths.iter().map(|&m| (-m, m)).collect()),
            Self::Ball { .. } => None,
        }
    }

    pub fn contains(&self, v: &[f64]) -> bool {
        if v.len() != self.dim() {
            return false;
        }
        match self {
            // Radial projections land on the sphere only up to rounding.
            Self::Ball { radius, .. } => norm_sq(v) <= radius * radius * (1.0 + 8.0 * f64::EPSILON),
            _ => self.coordinate_bounds().expect("box variant").iter().zip(v).all(|(&(lo, hi), &x)| lo <= x && x <= hi),
        }
    }

    /// The set `A / factor`.
    pub fn shrink(&self, factor: f64) -> ConstraintSet {
        match self {
            Self::HalfLineProduct { lower } => {
                Self::HalfLineProduct { lower: lower.iter().map(|l| l / factor).collect() }
            }
            Self::Interval { half_width } => Self::Interval { half_width: half_width / factor },
            Self::Rectangle { half_widths } => {
                Self::Rectangle { half_widths: half_widths.iter().map(|m| m / factor).collect() }
            }
            Self::Ball { dim, radius } => Self::Ball { dim: *dim, radius: radius / factor },
        }
    }
}

/// Dimension, the three variances and the constraint set.
#[derive(Debug, Clone, PartialEq)]
pub struct ProblemSpec {
    p: usize,
    sigma1_sq: f64,
    sigma2_sq: f64,
    sigma_y_sq: f64,
    constraint: ConstraintSet,
}

impl ProblemSpec {
    pub fn new(sigma1_sq: f64, sigma2_sq: f64, sigma_y_sq: f64, constraint: ConstraintSet) -> Result<Self> {
        positive("sigma1_sq", sigma1_sq)?;
        positive("sigma2_sq", sigma2_sq)?;
        positive("sigma_y_sq", sigma_y_sq)?;
        constraint.validate()?;
        Ok(Self { p: constraint.dim(), sigma1_sq, sigma2_sq, sigma_y_sq, constraint })
    }

    /// Unit variances in every population.
    pub fn unit(constraint: ConstraintSet) -> Result<Self> {
        Self::new(1.0, 1.0, 1.0, constraint)
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn sigma1_sq(&self) -> f64 {
        self.sigma1_sq
    }

    pub fn sigma2_sq(&self) -> f64 {
        self.sigma2_sq
    }

    pub fn sigma_y_sq(&self) -> f64 {
        self.sigma_y_sq
    }

    pub fn constraint(&self) -> &ConstraintSet {
        &self.constraint
    }

    pub fn with_constraint(&self, constraint: ConstraintSet) -> Result<Self> {
        Self::new(self.sigma1_sq, self.sigma2_sq, self.sigma_y_sq, constraint)
    }

    /// `sigma2^2 / sigma1^2`.
    pub fn r(&self) -> f64 {
        self.sigma2_sq / self.sigma1_sq
    }

    pub fn var_w1(&self) -> f64 {
        self.sigma1_sq / (1.0 + self.r())
    }

    pub fn var_w2(&self) -> f64 {
        self.sigma2_sq / (1.0 + self.r())
    }

    /// Variance of `X1 - X2` per coordinate.
    pub fn diff_var(&self) -> f64 {
        self.sigma1_sq + self.sigma2_sq
    }

    pub(crate) fn check_dim(&self, v: &[f64]) -> Result<()> {
        same_dim(self.p, v.len())
    }
}

/// Data and (optionally) parameters in the rotated coordinates
/// `W1 = (X1 - X2)/(1+r)`, `W2 = (r X1 + X2)/(1+r)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RotatedFrame {
    pub r: f64,
    pub w1: Vec<f64>,
    pub w2: Vec<f64>,
    pub mu1: Option<Vec<f64>>,
    pub mu2: Option<Vec<f64>>,
    pub var_w1: f64,
    pub var_w2: f64,
}

impl RotatedFrame {
    /// Attach the rotated parameters `mu1 = (theta1 - theta2)/(1+r)`,
    /// `mu2 = (r theta1 + theta2)/(1+r)`.
    pub fn with_parameters(mut self, theta1: &[f64], theta2: &[f64]) -> Result<Self> {
        same_dim(self.w1.len(), theta1.len())?;
        same_dim(self.w1.len(), theta2.len())?;
        let (mu1, mu2) = rotate_pair(theta1, theta2, self.r);
        self.mu1 = Some(mu1);
        self.mu2 = Some(mu2);
        Ok(self)
    }

    /// Recover `(x1, x2)`.
    pub fn reconstruct(&self) -> (Vec<f64>, Vec<f64>) {
        let x1: Vec<f64> = self.w1.iter().zip(&self.w2).map(|(a, b)| a + b).collect();
        let x2 = self.w1.iter().zip(&x1).map(|(w, x)| x - (1.0 + self.r) * w).collect();
        (x1, x2)
    }
}

fn rotate_pair(a: &[f64], b: &[f64], r: f64) -> (Vec<f64>, Vec<f64>) {
    let first: Vec<f64> = a.iter().zip(b).map(|(x, y)| (x - y) / (1.0 + r)).collect();
    let second = a.iter().zip(&first).map(|(x, d)| x - d).collect();
    (first, second)
}

pub fn rotate(x1: &[f64], x2: &[f64], spec: &ProblemSpec) -> Result<RotatedFrame> {
    spec.check_dim(x1)?;
    spec.check_dim(x2)?;
    let r = spec.r();
    let (w1, w2) = rotate_pair(x1, x2, r);
    Ok(RotatedFrame { r, w1, w2, mu1: None, mu2: None, var_w1: spec.var_w1(), var_w2: spec.var_w2() })
}

/// True variances are the nominal ones times these multipliers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MisspecScheme {
    pub a1_sq: f64,
    pub a2_sq: f64,
    pub ay_sq: f64,
}

impl MisspecScheme {
    pub fn new(a1_sq: f64, a2_sq: f64, ay_sq: f64) -> Result<Self> {
        positive("a1_sq", a1_sq)?;
        positive("a2_sq", a2_sq)?;
        positive("ay_sq", ay_sq)?;
        Ok(Self { a1_sq, a2_sq, ay_sq })
    }

    pub const fn identity() -> Self {
        Self { a1_sq: 1.0, a2_sq: 1.0, ay_sq: 1.0 }
    }
}

impl Default for MisspecScheme {
    fn default() -> Self {
        Self::identity()
    }
}

/// Data map `(x1, x2, y1) -> (c1 x1, c2 x2 - d, c1 y1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearMap {
    pub c1: f64,
    pub c2: f64,
    pub d: Vec<f64>,
}

impl LinearMap {
    pub fn apply(&self, x1: &[f64], x2: &[f64], y1: &[f64]) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
        (
            x1.iter().map(|v| self.c1 * v).collect(),
            x2.iter().zip(&self.d).map(|(v, d)| self.c2 * v - d).collect(),
            y1.iter().map(|v| self.c1 * v).collect(),
        )
    }
}

/// Reduce a model with constraint `c1 theta1 - (c2 theta2 - d) in A` to the
/// standard form `theta1' - theta2' in A`.
pub fn reduce_linear(c1: f64, c2: f64, d: &[f64], spec: &ProblemSpec) -> Result<(ProblemSpec, LinearMap)> {
    finite("c1", c1)?;
    finite("c2", c2)?;
    if c1 == 0.0 || c2 == 0.0 {
        return Err(Error::InvalidArgument("multipliers c1 and c2 must be nonzero".into()));
    }
    spec.check_dim(d)?;
    for &v in d {
        finite("d", v)?;
    }
    let reduced = ProblemSpec::new(
        c1 * c1 * spec.sigma1_sq,
        c2 * c2 * spec.sigma2_sq,
        c1 * c1 * spec.sigma_y_sq,
        spec.constraint.clone(),
    )?;
    Ok((reduced, LinearMap { c1, c2, d: d.to_vec() }))
}

/// Decorrelation of a univariate pair with correlation `rho`:
/// `X2' = (X2 - slope X1) / c2`, `slope = rho sigma2 / sigma1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelatedReduction {
    pub c1: f64,
    pub c2: f64,
    pub d: f64,
    pub slope: f64,
}

impl CorrelatedReduction {
    pub fn apply(&self, x1: f64, x2: f64) -> (f64, f64) {
        (x1, (x2 - self.slope * x1) / self.c2)
    }
}

/// Independent-coordinate form of `(X1, X2)` with correlation `rho`. The
/// constraint `theta1 - theta2 in A` becomes `c1 theta1 - c2 theta2' in A`,
/// ready for [`reduce_linear`].
pub fn reduce_bivariate_correlated(rho: f64, spec: &ProblemSpec) -> Result<(ProblemSpec, CorrelatedReduction)> {
    finite("rho", rho)?;
    if spec.p != 1 {
        return Err(Error::Unsupported("correlated reduction is univariate".into()));
    }
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::InvalidArgument(format!("rho must lie in (0, 1), got {rho}")));
    }
    let slope = rho * (spec.sigma2_sq / spec.sigma1_sq).sqrt();
    let c2 = (1.0 + rho * rho).sqrt();
    let var2 = spec.sigma2_sq * (1.0 - rho * rho) / (1.0 + rho * rho);
    let independent = ProblemSpec::new(spec.sigma1_sq, var2, spec.sigma_y_sq, spec.constraint.clone())?;
    Ok((independent, CorrelatedReduction { c1: 1.0 - slope, c2, d: 0.0, slope }))
}

/// `P(T in A)` for `T ~ N_p(mu, var I)`.
pub fn constraint_probability(a: &ConstraintSet, mu: &[f64], var: f64) -> Result<f64> {
    Ok(log_constraint_probability(a, mu, var)?.exp())
}

pub fn log_constraint_probability(a: &ConstraintSet, mu: &[f64], var: f64) -> Result<f64> {
    positive("var", var)?;
    same_dim(a.dim(), mu.len())?;
    let sd = var.sqrt();
    match a {
        ConstraintSet::Ball { radius, .. } => {
            let lambda = norm_sq(mu) / var;
            Ok(noncentral_chi2_cdf(mu.len() as u32, lambda, radius * radius / var)?.ln())
        }
        _ => Ok(a
            .coordinate_bounds()
            .expect("box variant")
            .iter()
            .zip(mu)
            .map(|(&(lo, hi), &m)| log_box_mass(lo, hi, m, sd))
            .sum()),
    }
}

fn log_box_mass(lo: f64, hi: f64, mean: f64, sd: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (false, false) => 0.0,
        (true, false) => log_cdf((mean - lo) / sd),
        (false, true) => log_cdf((hi - mean) / sd),
        (true, true) => log_cdf_diff((lo - mean) / sd, (hi - mean) / sd),
    }
}

/// Euclidean projection onto `A`.
pub fn project_onto(a: &ConstraintSet, v: &[f64]) -> Result<Vec<f64>> {
    same_dim(a.dim(), v.len())?;
    Ok(match a {
        ConstraintSet::Ball { radius, .. } => {
            let norm = norm_sq(v).sqrt();
            let factor = if norm > *radius { radius / norm } else { 1.0 };
            v.iter().map(|x| x * factor).collect()
        }
        _ => a.coordinate_bounds().expect("box variant").iter().zip(v).map(|(&(lo, hi), &x)| x.clamp(lo, hi)).collect(),
    })
}

/// `E[T | T in A]` for `T ~ N_p(mu, var I)`.
pub fn truncated_mean(a: &ConstraintSet, mu: &[f64], var: f64) -> Result<Vec<f64>> {
    positive("var", var)?;
    same_dim(a.dim(), mu.len())?;
    let sd = var.sqrt();
    match a {
        ConstraintSet::Ball { radius, .. } => {
            let p = mu.len() as u32;
            let lambda = norm_sq(mu) / var;
            let x = radius * radius / var;
            let ratio = noncentral_chi2_cdf(p + 2, lambda, x)? / noncentral_chi2_cdf(p, lambda, x)?;
            Ok(mu.iter().map(|m| m * ratio).collect())
        }
        _ => Ok(a
            .coordinate_bounds()
            .expect("box variant")
            .iter()
            .zip(mu)
            .map(|(&(lo, hi), &m)| truncated_mean_1d(lo, hi, m, sd))
            .collect()),
    }
}

pub(crate) fn truncated_mean_1d(lo: f64, hi: f64, mean: f64, sd: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (false, false) => mean,
        (true, false) => mean + sd * mills_ratio((mean - lo) / sd),
        (false, true) => mean - sd * mills_ratio((hi - mean) / sd),
        (true, true) => {
            let a = (lo - mean) / sd;
            let b = (hi - mean) / sd;
            let log_mass = log_cdf_diff(a, b);
            mean + sd * ((log_pdf(a) - log_mass).exp() - (log_pdf(b) - log_mass).exp())
        }
    }
}

pub(crate) fn norm_sq(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum()
}

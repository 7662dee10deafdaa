//! Predictive density estimators for `Y1 ~ N_p(theta1, sY I)`.
//!
//! Every constructor returns a [`PredictiveDensity`], whose primitive is the
//! log-density. Gaussian plug-ins carry their center and expansion factor so
//! losses can use closed forms.

use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::dominance::c0;
use crate::error::{finite, positive, Error, Result};
use crate::model::{norm_sq, project_onto, rotate, truncated_mean, ConstraintSet, ProblemSpec};
use crate::rng::stream;
use crate::skewnormal::{SkewNormalGB, SkewNormalInterval};
use crate::special::noncentral_chi2_cdf;
use crate::special::normal::LN_SQRT_2PI;

/// Alpha-divergence loss index: `-1` is Kullback–Leibler, `+1` reverse KL.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossSpec {
    alpha: f64,
}

impl LossSpec {
    pub fn new(alpha: f64) -> Result<Self> {
        finite("alpha", alpha)?;
        if !(-1.0..=1.0).contains(&alpha) {
            return Err(Error::InvalidArgument(format!("alpha must lie in [-1, 1], got {alpha}")));
        }
        Ok(Self { alpha })
    }

    pub const fn kl() -> Self {
        Self { alpha: -1.0 }
    }

    pub const fn reverse_kl() -> Self {
        Self { alpha: 1.0 }
    }

    pub const fn hellinger() -> Self {
        Self { alpha: 0.0 }
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn is_kl(&self) -> bool {
        self.alpha == -1.0
    }

    pub fn is_reverse_kl(&self) -> bool {
        self.alpha == 1.0
    }

    /// `2 / (1 - alpha)`, undefined at `alpha = 1`.
    pub fn n(&self) -> Option<f64> {
        (self.alpha < 1.0).then(|| 2.0 / (1.0 - self.alpha))
    }

    /// `n` when it is a positive integer, as the uniform-prior Bayes density
    /// requires.
    pub fn integer_n(&self) -> Result<u32> {
        let n =
            self.n().ok_or_else(|| Error::Unsupported("alpha = 1 has no uniform-prior power; use bayes_rkl".into()))?;
        let rounded = n.round();
        if (n - rounded).abs() > 1e-9 * n {
            return Err(Error::Unsupported(format!(
                "alpha = {} gives non-integer n = {n}; the uniform-prior Bayes density needs integer n, \
                 compare plug-in and expanded plug-in densities instead",
                self.alpha
            )));
        }
        Ok(rounded as u32)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityKind {
    GaussianPlugin,
    BayesUniform,
    Mre,
}

/// Univariate factor of a product-form density.
#[derive(Debug, Clone, PartialEq)]
pub enum Marginal {
    Normal { mean: f64, var: f64 },
    Skew(SkewNormalGB),
    SkewInterval(SkewNormalInterval),
}

impl Marginal {
    pub fn log_pdf(&self, t: f64) -> f64 {
        match self {
            Self::Normal { mean, var } => gaussian_log_pdf_1d(t, *mean, *var),
            Self::Skew(d) => d.log_pdf(t),
            Self::SkewInterval(d) => d.log_pdf(t),
        }
    }

    /// Gaussian whose density dominates this factor up to a constant.
    pub fn envelope(&self) -> (f64, f64) {
        match self {
            Self::Normal { mean, var } => (*mean, *var),
            Self::Skew(d) => (d.xi(), d.tau() * d.tau()),
            Self::SkewInterval(d) => (d.xi(), d.tau() * d.tau()),
        }
    }

    pub fn mean(&self) -> Result<f64> {
        match self {
            Self::Normal { mean, .. } => Ok(*mean),
            Self::Skew(d) => d.mean(),
            Self::SkewInterval(d) => d.mean(),
        }
    }

    fn sample(&self, count: usize, seed: u64) -> Result<Vec<f64>> {
        match self {
            Self::Normal { mean, var } => {
                let sd = var.sqrt();
                let mut rng = stream(seed, 0);
                Ok((0..count).map(|_| mean + sd * rng.sample::<f64, _>(StandardNormal)).collect())
            }
            Self::Skew(d) => d.sample(count, seed),
            Self::SkewInterval(d) => d.sample(count, seed),
        }
    }
}

/// Uniform-prior Bayes density for a ball constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct BallBayes {
    x1: Vec<f64>,
    diff: Vec<f64>,
    n: u32,
    beta: f64,
    mre_var: f64,
    t_var: f64,
    radius: f64,
    log_norm: f64,
    norm_std_error: f64,
}

impl BallBayes {
    fn log_weight(&self, y: &[f64]) -> f64 {
        let lambda = y
            .iter()
            .zip(&self.x1)
            .zip(&self.diff)
            .map(|((y, x), d)| {
                let m = self.beta * (y - x) + d;
                m * m
            })
            .sum::<f64>()
            / self.t_var;
        let p = noncentral_chi2_cdf(self.x1.len() as u32, lambda, self.radius * self.radius / self.t_var)
            .expect("validated arguments");
        self.n as f64 * p.ln()
    }

    /// Normalizing constant and its Monte Carlo standard error (zero when exact).
    pub fn normalizer(&self) -> (f64, f64) {
        (self.log_norm.exp(), self.norm_std_error)
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Shape {
    Gaussian { center: Vec<f64>, c: f64, var: f64 },
    Product(Vec<Marginal>),
    Ball(BallBayes),
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveDensity {
    kind: DensityKind,
    shape: Shape,
}

/// Center and variance of a Gaussian predictive density.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianForm<'a> {
    pub center: &'a [f64],
    pub c: f64,
    pub var: f64,
}

impl PredictiveDensity {
    pub fn kind(&self) -> DensityKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        match &self.shape {
            Shape::Gaussian { center, .. } => center.len(),
            Shape::Product(m) => m.len(),
            Shape::Ball(b) => b.x1.len(),
        }
    }

    /// Center, expansion factor and variance when the density is Gaussian.
    pub fn gaussian(&self) -> Option<GaussianForm<'_>> {
        match &self.shape {
            Shape::Gaussian { center, c, var } => Some(GaussianForm { center, c: *c, var: *var }),
            _ => None,
        }
    }

    /// Univariate factors when the density has product form.
    pub fn marginals(&self) -> Option<&[Marginal]> {
        match &self.shape {
            Shape::Product(m) => Some(m),
            _ => None,
        }
    }

    pub fn ball(&self) -> Option<&BallBayes> {
        match &self.shape {
            Shape::Ball(b) => Some(b),
            _ => None,
        }
    }

    /// Per-coordinate Gaussian dominating the density up to a constant.
    pub fn envelope(&self) -> (Vec<f64>, Vec<f64>) {
        match &self.shape {
            Shape::Gaussian { center, var, .. } => (center.clone(), vec![*var; center.len()]),
            Shape::Product(m) => m.iter().map(Marginal::envelope).unzip(),
            Shape::Ball(b) => (b.x1.clone(), vec![b.mre_var; b.x1.len()]),
        }
    }

    pub fn log_density(&self, y: &[f64]) -> f64 {
        debug_assert_eq!(y.len(), self.dim());
        match &self.shape {
            Shape::Gaussian { center, var, .. } => {
                y.iter().zip(center).map(|(y, m)| gaussian_log_pdf_1d(*y, *m, *var)).sum()
            }
            Shape::Product(m) => y.iter().zip(m).map(|(y, f)| f.log_pdf(*y)).sum(),
            Shape::Ball(b) => {
                let base: f64 = y.iter().zip(&b.x1).map(|(y, m)| gaussian_log_pdf_1d(*y, *m, b.mre_var)).sum();
                base + b.log_weight(y) - b.log_norm
            }
        }
    }

    pub fn density(&self, y: &[f64]) -> f64 {
        self.log_density(y).exp()
    }

    /// `count` independent draws, deterministic in `seed`.
    pub fn sample(&self, count: usize, seed: u64) -> Result<Vec<Vec<f64>>> {
        match &self.shape {
            Shape::Gaussian { center, var, .. } => {
                let sd = var.sqrt();
                let mut rng = stream(seed, 0);
                Ok((0..count)
                    .map(|_| center.iter().map(|m| m + sd * rng.sample::<f64, _>(StandardNormal)).collect())
                    .collect())
            }
            Shape::Product(factors) => {
                let columns = factors
                    .iter()
                    .enumerate()
                    .map(|(i, f)| f.sample(count, seed.wrapping_add(i as u64 * 0x9E37_79B9)))
                    .collect::<Result<Vec<_>>>()?;
                Ok((0..count).map(|k| columns.iter().map(|c| c[k]).collect()).collect())
            }
            Shape::Ball(b) => {
                let (norm, _) = b.normalizer();
                if norm < 1e-7 {
                    return Err(Error::InvalidArgument("ball density too concentrated to sample".into()));
                }
                let sd = b.mre_var.sqrt();
                let mut rng = stream(seed, 0);
                let mut out = Vec::with_capacity(count);
                while out.len() < count {
                    let y: Vec<f64> = b.x1.iter().map(|m| m + sd * rng.sample::<f64, _>(StandardNormal)).collect();
                    let u: f64 = rng.random();
                    if u.ln() < b.log_weight(&y) {
                        out.push(y);
                    }
                }
                Ok(out)
            }
        }
    }
}

fn gaussian_log_pdf_1d(y: f64, mean: f64, var: f64) -> f64 {
    let d = y - mean;
    -LN_SQRT_2PI - 0.5 * var.ln() - 0.5 * d * d / var
}

fn check_pair(x1: &[f64], x2: &[f64], spec: &ProblemSpec) -> Result<()> {
    spec.check_dim(x1)?;
    spec.check_dim(x2)?;
    for &v in x1.iter().chain(x2) {
        finite("observation", v)?;
    }
    Ok(())
}

/// Minimum risk equivariant density `N_p(x1, (s1 (1-alpha)/2 + sY) I)`.
pub fn mre(x1: &[f64], spec: &ProblemSpec, loss: LossSpec) -> Result<PredictiveDensity> {
    let c = 1.0 + (1.0 - loss.alpha()) * spec.sigma1_sq() / (2.0 * spec.sigma_y_sq());
    let mut q = plugin(x1, c, spec)?;
    q.kind = DensityKind::Mre;
    Ok(q)
}

/// `N_p(center, c sY I)`.
pub fn plugin(center: &[f64], c: f64, spec: &ProblemSpec) -> Result<PredictiveDensity> {
    spec.check_dim(center)?;
    for &v in center {
        finite("center", v)?;
    }
    positive("c", c)?;
    Ok(PredictiveDensity {
        kind: DensityKind::GaussianPlugin,
        shape: Shape::Gaussian { center: center.to_vec(), c, var: c * spec.sigma_y_sq() },
    })
}

/// Restricted maximum likelihood estimate of `mu1 = (theta1 - theta2)/(1+r)`
/// from `W1`: the projection onto `A/(1+r)`.
pub fn restricted_mle_mu1(w1: &[f64], spec: &ProblemSpec) -> Result<Vec<f64>> {
    project_onto(&spec.constraint().shrink(1.0 + spec.r()), w1)
}

/// Restricted maximum likelihood estimate of `theta1`.
pub fn mle_center(x1: &[f64], x2: &[f64], spec: &ProblemSpec) -> Result<Vec<f64>> {
    check_pair(x1, x2, spec)?;
    let frame = rotate(x1, x2, spec)?;
    let mu1 = restricted_mle_mu1(&frame.w1, spec)?;
    Ok(frame.w2.iter().zip(&mu1).map(|(a, b)| a + b).collect())
}

/// Plug-in at the restricted MLE with expansion `c`.
pub fn mle(x1: &[f64], x2: &[f64], spec: &ProblemSpec, c: f64) -> Result<PredictiveDensity> {
    plugin(&mle_center(x1, x2, spec)?, c, spec)
}

/// Quantities shared by the uniform-prior Bayes densities with power `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BayesWeights {
    pub n: u32,
    /// Weight of `y1 - x1` in the mean of `T`.
    pub beta: f64,
    /// Variance of `T` given `y1`.
    pub t_var: f64,
    /// Standard deviation of the MRE part.
    pub tau: f64,
}

pub fn bayes_weights(spec: &ProblemSpec, n: u32) -> BayesWeights {
    let nf = n as f64;
    let (s1, s2, sy) = (spec.sigma1_sq(), spec.sigma2_sq(), spec.sigma_y_sq());
    let beta = s1 / (s1 + nf * sy);
    BayesWeights { n, beta, t_var: s2 + nf * sy * beta, tau: (s1 / nf + sy).sqrt() }
}

/// Monte Carlo settings for the ball normalizer when `n >= 2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BallOptions {
    pub draws: usize,
    pub seed: u64,
}

impl Default for BallOptions {
    fn default() -> Self {
        Self { draws: 1_000_000, seed: 0x5eed_ba11 }
    }
}

/// Bayes predictive density under the uniform prior on `theta1 - theta2 in A`.
pub fn bayes_uniform(x1: &[f64], x2: &[f64], spec: &ProblemSpec, loss: LossSpec) -> Result<PredictiveDensity> {
    bayes_uniform_with(x1, x2, spec, loss, BallOptions::default())
}

pub fn bayes_uniform_with(
    x1: &[f64],
    x2: &[f64],
    spec: &ProblemSpec,
    loss: LossSpec,
    ball: BallOptions,
) -> Result<PredictiveDensity> {
    check_pair(x1, x2, spec)?;
    let n = loss.integer_n()?;
    if spec.constraint().is_unconstrained() {
        return mre(x1, spec, loss);
    }
    let w = bayes_weights(spec, n);
    let t_sd = w.t_var.sqrt();
    let slope = w.beta * w.tau / t_sd;
    let diff: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a - b).collect();

    let shape = match spec.constraint() {
        ConstraintSet::Ball { radius, .. } => Shape::Ball(ball_bayes(x1, diff, *radius, spec, w, ball)?),
        a => {
            let bounds = a.coordinate_bounds().expect("box variant");
            let factors = bounds
                .iter()
                .zip(x1)
                .zip(&diff)
                .map(|((&(lo, hi), &xi), &d)| -> Result<Marginal> {
                    Ok(match (lo.is_finite(), hi.is_finite()) {
                        (false, false) => Marginal::Normal { mean: xi, var: w.tau * w.tau },
                        (true, false) => Marginal::Skew(SkewNormalGB::new(n, (d - lo) / t_sd, slope, xi, w.tau)?),
                        (true, true) => Marginal::SkewInterval(SkewNormalInterval::new(
                            n,
                            (d - lo) / t_sd,
                            slope,
                            (d - hi) / t_sd,
                            xi,
                            w.tau,
                        )?),
                        (false, true) => unreachable!("no variant has only an upper bound"),
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            Shape::Product(factors)
        }
    };
    Ok(PredictiveDensity { kind: DensityKind::BayesUniform, shape })
}

fn ball_bayes(
    x1: &[f64],
    diff: Vec<f64>,
    radius: f64,
    spec: &ProblemSpec,
    w: BayesWeights,
    opts: BallOptions,
) -> Result<BallBayes> {
    let p = x1.len() as u32;
    let (log_norm, norm_std_error) = if w.n == 1 {
        let s = spec.diff_var();
        let exact = noncentral_chi2_cdf(p, norm_sq(&diff) / s, radius * radius / s)?;
        (exact.ln(), 0.0)
    } else {
        let (mean, se) = ball_normalizer_mc(&diff, radius, w, opts)?;
        (mean.ln(), se)
    };
    if !log_norm.is_finite() {
        return Err(Error::InvalidArgument("ball normalizer underflowed".into()));
    }
    Ok(BallBayes {
        x1: x1.to_vec(),
        diff,
        n: w.n,
        beta: w.beta,
        mre_var: w.tau * w.tau,
        t_var: w.t_var,
        radius,
        log_norm,
        norm_std_error,
    })
}

/// `E[F(U)^n]` with the mean of `T` driven by `U ~ N_p(0, I)`: the
/// probability that all `n` equicorrelated copies land in the ball, averaged
/// over their shared component.
fn ball_normalizer_mc(diff: &[f64], radius: f64, w: BayesWeights, opts: BallOptions) -> Result<(f64, f64)> {
    if opts.draws < 2 {
        return Err(Error::InvalidArgument("ball normalizer needs at least two draws".into()));
    }
    const CHUNK: usize = 4096;
    let p = diff.len() as u32;
    let scale = w.beta * w.tau;
    let x = radius * radius / w.t_var;
    let chunks = opts.draws.div_ceil(CHUNK);
    let sums: Vec<(f64, f64)> = (0..chunks)
        .into_par_iter()
        .map(|k| {
            let mut rng = stream(opts.seed, k as u64);
            let len = CHUNK.min(opts.draws - k * CHUNK);
            let mut acc = (0.0, 0.0);
            for _ in 0..len {
                let lambda = diff
                    .iter()
                    .map(|d| {
                        let m = scale * rng.sample::<f64, _>(StandardNormal) + d;
                        m * m
                    })
                    .sum::<f64>()
                    / w.t_var;
                let v = noncentral_chi2_cdf(p, lambda, x).expect("validated").powi(w.n as i32);
                acc.0 += v;
                acc.1 += v * v;
            }
            acc
        })
        .collect();
    let (s, ss) = sums.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1));
    let m = opts.draws as f64;
    let mean = s / m;
    let var = ((ss / m - mean * mean) * m / (m - 1.0)).max(0.0);
    Ok((mean, (var / m).sqrt()))
}

/// `E(theta1 | x)` under the uniform prior on `theta1 - theta2 in A`.
pub fn posterior_mean_theta1(x1: &[f64], x2: &[f64], spec: &ProblemSpec) -> Result<Vec<f64>> {
    check_pair(x1, x2, spec)?;
    let r = spec.r();
    let diff: Vec<f64> = x1.iter().zip(x2).map(|(a, b)| a - b).collect();
    let omega = truncated_mean(spec.constraint(), &diff, spec.diff_var())?;
    Ok(omega.iter().zip(x1.iter().zip(x2)).map(|(w, (a, b))| (w + r * a + b) / (1.0 + r)).collect())
}

/// Reverse-KL Bayes density: the plug-in at the posterior mean.
pub fn bayes_rkl(x1: &[f64], x2: &[f64], spec: &ProblemSpec) -> Result<PredictiveDensity> {
    plugin(&posterior_mean_theta1(x1, x2, spec)?, 1.0, spec)
}

/// Uniform-prior posterior mean of `mu1` from `W1 ~ N_p(mu1, var I)` when
/// `scale * mu1 in A`.
pub fn psi_uniform(w1: &[f64], var: f64, a: &ConstraintSet, scale: f64) -> Result<Vec<f64>> {
    positive("scale", scale)?;
    truncated_mean(&a.shrink(scale), w1, var)
}

/// Lower bound on the normalized risk ratio that holds for every estimator in
/// the rotated class.
pub fn r_lower_floor(spec: &ProblemSpec) -> f64 {
    let (s1, s2) = (spec.sigma1_sq(), spec.sigma2_sq());
    s1 * s2 / ((s1 + s2) * spec.sigma_y_sq())
}

/// Expansion factor in the middle of `[1 + r_lower, c0(1 + r_lower))`.
pub fn two_step_factor(r_lower: f64) -> Result<f64> {
    positive("r_lower", r_lower)?;
    let s = 1.0 + r_lower;
    Ok(0.5 * (s + c0(s)?))
}

/// Plug-in at `W2 + psi_star(W1)`, expanded by the midpoint factor.
pub fn two_step_improve(
    x1: &[f64],
    x2: &[f64],
    spec: &ProblemSpec,
    psi_star: impl Fn(&[f64]) -> Vec<f64>,
    r_lower_hint: Option<f64>,
) -> Result<PredictiveDensity> {
    check_pair(x1, x2, spec)?;
    let frame = rotate(x1, x2, spec)?;
    let mu1 = psi_star(&frame.w1);
    spec.check_dim(&mu1)?;
    let center: Vec<f64> = frame.w2.iter().zip(&mu1).map(|(a, b)| a + b).collect();
    let c = two_step_factor(r_lower_hint.unwrap_or_else(|| r_lower_floor(spec)))?;
    plugin(&center, c, spec)
}

/// Estimators selectable by name.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Estimator {
    Mre,
    Plugin(f64),
    Mle(f64),
    BayesUniform,
    BayesRkl,
    TwoStep,
}

impl Estimator {
    pub fn build(&self, x1: &[f64], x2: &[f64], spec: &ProblemSpec, loss: LossSpec) -> Result<PredictiveDensity> {
        match *self {
            Self::Mre => mre(x1, spec, loss),
            Self::Plugin(c) => plugin(x1, c, spec),
            Self::Mle(c) => mle(x1, x2, spec, c),
            Self::BayesUniform => bayes_uniform(x1, x2, spec, loss),
            Self::BayesRkl => bayes_rkl(x1, x2, spec),
            Self::TwoStep => {
                let scale = 1.0 + spec.r();
                let var = spec.var_w1();
                two_step_improve(
                    x1,
                    x2,
                    spec,
                    |w1| psi_uniform(w1, var, spec.constraint(), scale).unwrap_or_else(|_| w1.to_vec()),
                    None,
                )
            }
        }
    }
}

impl fmt::Display for Estimator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Mre => f.write_str("mre"),
            Self::Plugin(c) => write!(f, "plugin:{c}"),
            Self::Mle(c) if *c == 1.0 => f.write_str("mle"),
            Self::Mle(c) => write!(f, "mle:{c}"),
            Self::BayesUniform => f.write_str("bayes-uniform"),
            Self::BayesRkl => f.write_str("bayes-rkl"),
            Self::TwoStep => f.write_str("two-step"),
        }
    }
}

impl FromStr for Estimator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let factor = |v: &str| -> Result<f64> {
            let c: f64 =
                v.parse().map_err(|_| Error::InvalidArgument(format!("bad expansion factor '{v}' in '{s}'")))?;
            positive("c", c)
        };
        match s.trim() {
            "mre" => Ok(Self::Mre),
            "mle" => Ok(Self::Mle(1.0)),
            "bayes-uniform" => Ok(Self::BayesUniform),
            "bayes-rkl" => Ok(Self::BayesRkl),
            "two-step" => Ok(Self::TwoStep),
            other => match other.split_once(':') {
                Some(("plugin", c)) => Ok(Self::Plugin(factor(c)?)),
                Some(("mle", c)) => Ok(Self::Mle(factor(c)?)),
                _ => Err(Error::InvalidArgument(format!(
                    "unknown estimator '{other}' (expected mre, mle, mle:c, plugin:c, bayes-uniform, bayes-rkl, two-step)"
                ))),
            },
        }
    }
}

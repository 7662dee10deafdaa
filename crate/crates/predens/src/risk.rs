//! Alpha-divergence losses and frequentist risk.
//!
//! Gaussian plug-ins have closed-form losses. Product-form densities reduce
//! to one-dimensional Gauss–Hermite integrals per coordinate. Ball densities
//! in more than one dimension fall back to Monte Carlo over `Y1`.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{finite, positive, same_dim, Error, Result};
use crate::estimators::{r_lower_floor, two_step_factor, Estimator, LossSpec, Marginal, PredictiveDensity};
use crate::model::{truncated_mean_1d, ConstraintSet, MisspecScheme, ProblemSpec};
use crate::rng::stream;
use crate::special::normal::{cdf, log_cdf, log_cdf_diff, pdf, LN_SQRT_2PI};
use crate::special::quadrature::{gaussian_expectation, gaussian_expectation_tol, hermite, legendre_rule};

/// Target accuracy of loss integrals inside risk loops.
const LOSS_TOLERANCE: f64 = 1e-9;

/// Draws per Monte Carlo chunk; each chunk has its own random stream.
const CHUNK: usize = 1024;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiskMethod {
    ClosedForm,
    Quadrature,
    MonteCarlo,
}

impl RiskMethod {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::ClosedForm => "closed-form",
            Self::Quadrature => "quadrature",
            Self::MonteCarlo => "monte-carlo",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RiskEstimate {
    pub value: f64,
    /// Zero unless the method is Monte Carlo.
    pub std_error: f64,
    pub method: RiskMethod,
    pub sample_count: usize,
}

impl RiskEstimate {
    pub fn closed(value: f64) -> Self {
        Self { value, std_error: 0.0, method: RiskMethod::ClosedForm, sample_count: 0 }
    }

    pub fn quadrature(value: f64) -> Self {
        Self { value, std_error: 0.0, method: RiskMethod::Quadrature, sample_count: 0 }
    }
}

/// True parameter pair. Membership in the constraint is not enforced.
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaPoint {
    pub theta1: Vec<f64>,
    pub theta2: Vec<f64>,
}

impl ThetaPoint {
    pub fn new(theta1: Vec<f64>, theta2: Vec<f64>) -> Result<Self> {
        same_dim(theta1.len(), theta2.len())?;
        for &v in theta1.iter().chain(&theta2) {
            finite("theta", v)?;
        }
        Ok(Self { theta1, theta2 })
    }

    /// `theta1 = (delta, 0, ..., 0)`, `theta2 = 0`.
    pub fn along_first(p: usize, delta: f64) -> Self {
        let mut theta1 = vec![0.0; p];
        if let Some(first) = theta1.first_mut() {
            *first = delta;
        }
        Self { theta1, theta2: vec![0.0; p] }
    }

    pub fn difference(&self) -> Vec<f64> {
        self.theta1.iter().zip(&self.theta2).map(|(a, b)| a - b).collect()
    }

    pub fn in_constraint(&self, a: &ConstraintSet) -> bool {
        a.contains(&self.difference())
    }

    /// Mean of `W1`.
    pub fn mu1(&self, spec: &ProblemSpec) -> Vec<f64> {
        let scale = 1.0 + spec.r();
        self.difference().iter().map(|d| d / scale).collect()
    }
}

/// Settings for Monte Carlo over `Y1` when a loss has no quadrature form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LossOptions {
    pub draws: usize,
    pub seed: u64,
}

impl Default for LossOptions {
    fn default() -> Self {
        Self { draws: 20_000, seed: 0x1055 }
    }
}

fn glog(y: f64, mean: f64, var: f64) -> f64 {
    let d = y - mean;
    -LN_SQRT_2PI - 0.5 * var.ln() - 0.5 * d * d / var
}

/// `E f(Z)` to loss accuracy, settling for the largest rule if the
/// escalation does not meet the tolerance.
fn gauss_mean(f: impl Fn(f64) -> f64) -> f64 {
    match gaussian_expectation_tol(&f, LOSS_TOLERANCE) {
        Ok(e) => e.value,
        Err(_) => hermite(256).integrate(&f),
    }
}

/// `KL(N(m0, v0) || N(m1, v1))` in one coordinate.
fn gauss_kl(m0: f64, v0: f64, m1: f64, v1: f64) -> f64 {
    let d = m0 - m1;
    0.5 * ((v1 / v0).ln() + v0 / v1 - 1.0) + 0.5 * d * d / v1
}

/// `∫ N(m1, v1)^a N(m2, v2)^b` in one coordinate, `a + b = 1`.
fn gauss_affinity(m1: f64, v1: f64, m2: f64, v2: f64, a: f64, b: f64) -> f64 {
    let s = a * v2 + b * v1;
    let d = m1 - m2;
    v1.powf(0.5 * b) * v2.powf(0.5 * a) / s.sqrt() * (-a * b * d * d / (2.0 * s)).exp()
}

fn affinity_weights(alpha: f64) -> (f64, f64) {
    (0.5 * (1.0 + alpha), 0.5 * (1.0 - alpha))
}

fn loss_from_affinity(alpha: f64, affinity: f64) -> f64 {
    4.0 / (1.0 - alpha * alpha) * (1.0 - affinity)
}

/// Alpha-divergence loss of `qhat` when `Y1 ~ N_p(theta1, sY I)`.
pub fn alpha_loss(qhat: &PredictiveDensity, theta1: &[f64], loss: LossSpec, spec: &ProblemSpec) -> Result<f64> {
    alpha_loss_against(qhat, theta1, spec.sigma_y_sq(), loss, LossOptions::default())
}

/// Alpha-divergence loss against `N_p(theta1, true_var I)`.
pub fn alpha_loss_against(
    qhat: &PredictiveDensity,
    theta1: &[f64],
    true_var: f64,
    loss: LossSpec,
    opts: LossOptions,
) -> Result<f64> {
    same_dim(qhat.dim(), theta1.len())?;
    positive("true_var", true_var)?;
    let alpha = loss.alpha();
    let (a, b) = affinity_weights(alpha);
    if let Some(g) = qhat.gaussian() {
        let pairs = g.center.iter().zip(theta1);
        return Ok(if loss.is_kl() {
            pairs.map(|(m, t)| gauss_kl(*t, true_var, *m, g.var)).sum()
        } else if loss.is_reverse_kl() {
            pairs.map(|(m, t)| gauss_kl(*m, g.var, *t, true_var)).sum()
        } else {
            loss_from_affinity(alpha, pairs.map(|(m, t)| gauss_affinity(*m, g.var, *t, true_var, a, b)).product())
        });
    }
    if let Some(factors) = qhat.marginals() {
        let pairs = factors.iter().zip(theta1);
        return Ok(if loss.is_kl() {
            pairs.map(|(f, t)| marginal_kl(f, *t, true_var)).sum()
        } else if loss.is_reverse_kl() {
            pairs.map(|(f, t)| marginal_rkl(f, *t, true_var)).sum()
        } else {
            loss_from_affinity(alpha, pairs.map(|(f, t)| marginal_affinity(f, *t, true_var, a, b)).product())
        });
    }
    Ok(joint_loss(qhat, theta1, true_var, loss, opts))
}

fn marginal_kl(f: &Marginal, theta: f64, v: f64) -> f64 {
    if let Marginal::Normal { mean, var } = f {
        return gauss_kl(theta, v, *mean, *var);
    }
    let sd = v.sqrt();
    gauss_mean(|z| {
        let y = theta + sd * z;
        glog(y, theta, v) - f.log_pdf(y)
    })
}

fn marginal_rkl(f: &Marginal, theta: f64, v: f64) -> f64 {
    if let Marginal::Normal { mean, var } = f {
        return gauss_kl(*mean, *var, theta, v);
    }
    let (m, s2) = f.envelope();
    let sd = s2.sqrt();
    gauss_mean(|z| {
        let y = m + sd * z;
        let lq = f.log_pdf(y);
        (lq - glog(y, m, s2)).exp() * (lq - glog(y, theta, v))
    })
}

fn marginal_affinity(f: &Marginal, theta: f64, v: f64, a: f64, b: f64) -> f64 {
    let (m, s2) = f.envelope();
    let base = gauss_affinity(m, s2, theta, v, a, b);
    if matches!(f, Marginal::Normal { .. }) {
        return base;
    }
    // Integrate the bounded ratio f / envelope against the normalized
    // geometric mixture of the envelope and the true density.
    let precision = a / s2 + b / v;
    let center = (a * m / s2 + b * theta / v) / precision;
    let sd = precision.recip().sqrt();
    base * gauss_mean(|z| {
        let y = center + sd * z;
        (a * (f.log_pdf(y) - glog(y, m, s2))).exp()
    })
}

/// Losses of non-product densities, by quadrature in one dimension and
/// Monte Carlo otherwise.
fn joint_loss(qhat: &PredictiveDensity, theta1: &[f64], v: f64, loss: LossSpec, opts: LossOptions) -> f64 {
    let (env_mean, env_var) = qhat.envelope();
    let env_log =
        |y: &[f64]| -> f64 { y.iter().zip(&env_mean).zip(&env_var).map(|((y, m), s)| glog(*y, *m, *s)).sum() };
    let truth_log = |y: &[f64]| -> f64 { y.iter().zip(theta1).map(|(y, t)| glog(*y, *t, v)).sum() };
    if loss.is_kl() {
        let sd = vec![v.sqrt(); theta1.len()];
        return average(theta1, &sd, opts, |y| truth_log(y) - qhat.log_density(y));
    }
    if loss.is_reverse_kl() {
        let sd: Vec<f64> = env_var.iter().map(|s| s.sqrt()).collect();
        return average(&env_mean, &sd, opts, |y| {
            let lq = qhat.log_density(y);
            (lq - env_log(y)).exp() * (lq - truth_log(y))
        });
    }
    let alpha = loss.alpha();
    let (a, b) = affinity_weights(alpha);
    let mut base = 1.0;
    let mut center = Vec::with_capacity(theta1.len());
    let mut sd = Vec::with_capacity(theta1.len());
    for ((m, s2), t) in env_mean.iter().zip(&env_var).zip(theta1) {
        base *= gauss_affinity(*m, *s2, *t, v, a, b);
        let precision = a / s2 + b / v;
        center.push((a * m / s2 + b * t / v) / precision);
        sd.push(precision.recip().sqrt());
    }
    let ratio = average(&center, &sd, opts, |y| (a * (qhat.log_density(y) - env_log(y))).exp());
    loss_from_affinity(alpha, base * ratio)
}

/// `E f(center + sd * Z)` with independent coordinates.
fn average(center: &[f64], sd: &[f64], opts: LossOptions, f: impl Fn(&[f64]) -> f64) -> f64 {
    if center.len() == 1 {
        return gauss_mean(|z| f(&[center[0] + sd[0] * z]));
    }
    let mut rng = stream(opts.seed, 0);
    let mut y = vec![0.0; center.len()];
    let mut total = 0.0;
    for _ in 0..opts.draws {
        for ((y, m), s) in y.iter_mut().zip(center).zip(sd) {
            *y = m + s * rng.sample::<f64, _>(StandardNormal);
        }
        total += f(&y);
    }
    total / opts.draws as f64
}

/// Monte Carlo settings for frequentist risk.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McOptions {
    pub samples: usize,
    pub seed: u64,
    /// Variance multipliers of the data-generating process; estimators keep
    /// the nominal variances.
    pub misspec: MisspecScheme,
    /// Draws per loss evaluation for densities without a quadrature form.
    pub loss_draws: usize,
}

impl Default for McOptions {
    fn default() -> Self {
        Self { samples: 100_000, seed: 0x00c0_ffee, misspec: MisspecScheme::identity(), loss_draws: 20_000 }
    }
}

impl McOptions {
    pub fn with_samples(samples: usize, seed: u64) -> Self {
        Self { samples, seed, ..Self::default() }
    }
}

/// Running mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    count: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.count += 1.0;
        let d = x - self.mean;
        self.mean += d / self.count;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Self) -> Self {
        if other.count == 0.0 {
            return self;
        }
        let count = self.count + other.count;
        let d = other.mean - self.mean;
        Self {
            count,
            mean: self.mean + d * other.count / count,
            m2: self.m2 + other.m2 + d * d * self.count * other.count / count,
        }
    }

    fn std_error(&self) -> f64 {
        (self.m2 / (self.count - 1.0) / self.count).sqrt()
    }
}

/// Mean of `f(index, rng)` over `samples` draws. Chunks run in parallel and
/// merge in a fixed order, so the result depends only on `seed`.
fn mc_mean(samples: usize, seed: u64, f: impl Fn(usize, &mut ChaCha8Rng) -> Result<f64> + Sync) -> Result<Moments> {
    let chunks = samples.div_ceil(CHUNK);
    let parts = (0..chunks)
        .into_par_iter()
        .map(|k| -> Result<Moments> {
            let mut rng = stream(seed, k as u64);
            let mut m = Moments::default();
            for i in k * CHUNK..samples.min((k + 1) * CHUNK) {
                let v = f(i, &mut rng).map_err(|e| Error::DrawFailed { index: i, source: Box::new(e) })?;
                m.push(v);
            }
            Ok(m)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(parts.into_iter().fold(Moments::default(), Moments::merge))
}

fn draw_data(theta: &ThetaPoint, sd1: f64, sd2: f64, rng: &mut ChaCha8Rng) -> (Vec<f64>, Vec<f64>) {
    let x1 = theta.theta1.iter().map(|t| t + sd1 * rng.sample::<f64, _>(StandardNormal)).collect();
    let x2 = theta.theta2.iter().map(|t| t + sd2 * rng.sample::<f64, _>(StandardNormal)).collect();
    (x1, x2)
}

fn loss_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64).wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
}

struct Frame {
    sd1: f64,
    sd2: f64,
    true_var: f64,
}

fn frame(theta: &ThetaPoint, spec: &ProblemSpec, opts: &McOptions) -> Result<Frame> {
    spec.check_dim(&theta.theta1)?;
    spec.check_dim(&theta.theta2)?;
    if opts.samples < 100 {
        return Err(Error::InvalidArgument(format!("risk_mc needs at least 100 samples, got {}", opts.samples)));
    }
    let a = opts.misspec;
    Ok(Frame {
        sd1: (a.a1_sq * spec.sigma1_sq()).sqrt(),
        sd2: (a.a2_sq * spec.sigma2_sq()).sqrt(),
        true_var: a.ay_sq * spec.sigma_y_sq(),
    })
}

/// Frequentist risk by Monte Carlo over `(X1, X2)`.
pub fn risk_mc<F>(
    make_qhat: F,
    theta: &ThetaPoint,
    loss: LossSpec,
    spec: &ProblemSpec,
    opts: &McOptions,
) -> Result<RiskEstimate>
where
    F: Fn(&[f64], &[f64]) -> Result<PredictiveDensity> + Sync,
{
    let fr = frame(theta, spec, opts)?;
    let lopts = |i| LossOptions { draws: opts.loss_draws, seed: loss_seed(opts.seed, i) };
    let m = mc_mean(opts.samples, opts.seed, |i, rng| {
        let (x1, x2) = draw_data(theta, fr.sd1, fr.sd2, rng);
        alpha_loss_against(&make_qhat(&x1, &x2)?, &theta.theta1, fr.true_var, loss, lopts(i))
    })?;
    Ok(RiskEstimate {
        value: m.mean,
        std_error: m.std_error(),
        method: RiskMethod::MonteCarlo,
        sample_count: opts.samples,
    })
}

/// `R(first) - R(second)` from paired draws.
pub fn risk_diff_mc<F, G>(
    first: F,
    second: G,
    theta: &ThetaPoint,
    loss: LossSpec,
    spec: &ProblemSpec,
    opts: &McOptions,
) -> Result<RiskEstimate>
where
    F: Fn(&[f64], &[f64]) -> Result<PredictiveDensity> + Sync,
    G: Fn(&[f64], &[f64]) -> Result<PredictiveDensity> + Sync,
{
    let fr = frame(theta, spec, opts)?;
    let m = mc_mean(opts.samples, opts.seed, |i, rng| {
        let (x1, x2) = draw_data(theta, fr.sd1, fr.sd2, rng);
        let lo = LossOptions { draws: opts.loss_draws, seed: loss_seed(opts.seed, i) };
        let a = alpha_loss_against(&first(&x1, &x2)?, &theta.theta1, fr.true_var, loss, lo)?;
        let b = alpha_loss_against(&second(&x1, &x2)?, &theta.theta1, fr.true_var, loss, lo)?;
        Ok(a - b)
    })?;
    Ok(RiskEstimate {
        value: m.mean,
        std_error: m.std_error(),
        method: RiskMethod::MonteCarlo,
        sample_count: opts.samples,
    })
}

/// KL risk of a Gaussian plug-in with expansion `c` whose center has mean
/// squared error `mse`.
pub fn kl_risk_plugin_closed(mse: f64, c: f64, spec: &ProblemSpec) -> Result<RiskEstimate> {
    positive("c", c)?;
    finite("mse", mse)?;
    let p = spec.p() as f64;
    Ok(RiskEstimate::closed(0.5 * p * (c.ln() + 1.0 / c - 1.0) + mse / (2.0 * c * spec.sigma_y_sq())))
}

/// Reverse-KL counterpart of [`kl_risk_plugin_closed`].
pub fn rkl_risk_plugin_closed(mse: f64, c: f64, spec: &ProblemSpec) -> Result<RiskEstimate> {
    positive("c", c)?;
    finite("mse", mse)?;
    let p = spec.p() as f64;
    Ok(RiskEstimate::closed(0.5 * p * (c - 1.0 - c.ln()) + mse / (2.0 * spec.sigma_y_sq())))
}

/// Risk of `N(X1, c sY I)` under any alpha. The loss depends on `X1 - theta1`
/// only through a Gaussian quadratic form, so the expectation is explicit.
pub fn plugin_x1_risk_closed(c: f64, loss: LossSpec, spec: &ProblemSpec) -> Result<RiskEstimate> {
    let (s1, sy) = (spec.sigma1_sq(), spec.sigma_y_sq());
    let p = spec.p() as f64;
    if loss.is_kl() {
        return kl_risk_plugin_closed(p * s1, c, spec);
    }
    if loss.is_reverse_kl() {
        return rkl_risk_plugin_closed(p * s1, c, spec);
    }
    positive("c", c)?;
    let alpha = loss.alpha();
    let (a, b) = affinity_weights(alpha);
    let v1 = c * sy;
    let s = a * sy + b * v1;
    let scale = v1.powf(0.5 * b) * sy.powf(0.5 * a) / s.sqrt();
    let k = a * b / (2.0 * s);
    let expected = scale.powf(p) * (1.0 + 2.0 * k * s1).powf(-0.5 * p);
    Ok(RiskEstimate::closed(loss_from_affinity(alpha, expected)))
}

/// Risk of the minimum risk equivariant density; constant in theta.
pub fn mre_risk_closed(loss: LossSpec, spec: &ProblemSpec) -> Result<RiskEstimate> {
    let c = 1.0 + (1.0 - loss.alpha()) * spec.sigma1_sq() / (2.0 * spec.sigma_y_sq());
    plugin_x1_risk_closed(c, loss, spec)
}

/// `E(max(W, lo) ∧ hi - mu)^2` for `W ~ N(mu, var)`.
fn mse_clamp(mu: f64, var: f64, lo: f64, hi: f64) -> f64 {
    let sd = var.sqrt();
    let g = |t: f64| {
        if t.is_finite() {
            cdf(t) - t * pdf(t)
        } else if t > 0.0 {
            1.0
        } else {
            0.0
        }
    };
    let (zl, zh) = ((lo - mu) / sd, (hi - mu) / sd);
    let below = if lo.is_finite() { (lo - mu).powi(2) * cdf(zl) } else { 0.0 };
    let above = if hi.is_finite() { (hi - mu).powi(2) * cdf(-zh) } else { 0.0 };
    below + above + var * (g(zh) - g(zl))
}

/// MSE of the projection of `W1 ~ N(mu1, var_w1)` onto `[0, ∞)`.
pub fn mse_mle_order(mu1: f64, var_w1: f64) -> Result<f64> {
    finite("mu1", mu1)?;
    positive("var_w1", var_w1)?;
    if mu1 < 0.0 {
        return Err(Error::InvalidArgument(format!("mu1 must be nonnegative, got {mu1}")));
    }
    Ok(mse_clamp(mu1, var_w1, 0.0, f64::INFINITY))
}

/// MSE of the projection of `W1 ~ N(mu1, var_w1)` onto `[-b, b]`.
pub fn mse_mle_interval(mu1: f64, var_w1: f64, b: f64) -> Result<f64> {
    finite("mu1", mu1)?;
    positive("var_w1", var_w1)?;
    positive("b", b)?;
    Ok(mse_clamp(mu1, var_w1, -b, b))
}

/// MSE of `W2 + psi(W1)` for `theta1` from the MSE of `psi` at `mu1`.
pub fn mse_decomposed(psi_mse: impl Fn(&[f64]) -> f64, spec: &ProblemSpec, theta: &ThetaPoint) -> Result<f64> {
    spec.check_dim(&theta.theta1)?;
    let offset = spec.p() as f64 * spec.sigma2_sq() / (1.0 + spec.r());
    Ok(psi_mse(&theta.mu1(spec)) + offset)
}

fn scaled_bounds(spec: &ProblemSpec) -> Result<Vec<(f64, f64)>> {
    let scale = 1.0 + spec.r();
    spec.constraint()
        .coordinate_bounds()
        .map(|b| b.into_iter().map(|(lo, hi)| (lo / scale, hi / scale)).collect())
        .ok_or_else(|| Error::Unsupported("coordinate-wise MSE needs a box constraint".into()))
}

/// MSE of the restricted MLE of `theta1` for box constraints.
pub fn mse_mle(spec: &ProblemSpec, theta: &ThetaPoint) -> Result<f64> {
    let bounds = scaled_bounds(spec)?;
    let var = spec.var_w1();
    mse_decomposed(|mu1| mu1.iter().zip(&bounds).map(|(m, (lo, hi))| mse_clamp(*m, var, *lo, *hi)).sum(), spec, theta)
}

/// MSE of `W2 + psi_U(W1)`, the uniform-prior posterior mean, for box
/// constraints. One Gauss–Hermite integral per coordinate.
pub fn mse_posterior_mean(spec: &ProblemSpec, theta: &ThetaPoint) -> Result<f64> {
    let bounds = scaled_bounds(spec)?;
    let var = spec.var_w1();
    let sd = var.sqrt();
    let mut total = 0.0;
    for (m, (lo, hi)) in theta.mu1(spec).iter().zip(&bounds) {
        let e = gaussian_expectation(|z| {
            let w = m + sd * z;
            (truncated_mean_1d(*lo, *hi, w, sd) - m).powi(2)
        })?;
        total += e.value;
    }
    Ok(total + spec.p() as f64 * spec.sigma2_sq() / (1.0 + spec.r()))
}

/// `1 - exp(-|est - theta1|^2 / (2 gamma0))`.
pub fn reflected_normal_loss(est: &[f64], theta1: &[f64], gamma0: f64) -> Result<f64> {
    same_dim(est.len(), theta1.len())?;
    positive("gamma0", gamma0)?;
    let d2: f64 = est.iter().zip(theta1).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok(-(-d2 / (2.0 * gamma0)).exp_m1())
}

fn beta_one(spec: &ProblemSpec) -> f64 {
    spec.sigma1_sq() / (spec.sigma1_sq() + spec.sigma_y_sq())
}

/// Variances of the two standardized arguments in the KL risk difference
/// between the MRE and the uniform-prior Bayes density when the true
/// variances are the nominal ones times `a`. Both equal one when `a` is the
/// identity.
pub fn misspec_sigmas(spec: &ProblemSpec, a: MisspecScheme) -> Result<(f64, f64)> {
    let (s1, s2, sy) = (spec.sigma1_sq(), spec.sigma2_sq(), spec.sigma_y_sq());
    let beta = beta_one(spec);
    // Written as one plus a deviation so the identity scheme is exact.
    let u = 1.0
        + ((a.a2_sq - 1.0) * s2 + (1.0 - beta).powi(2) * (a.a1_sq - 1.0) * s1 + beta * beta * (a.ay_sq - 1.0) * sy)
            / (s2 + beta * sy);
    let v = 1.0 + ((a.a1_sq - 1.0) * s1 + (a.a2_sq - 1.0) * s2) / (s1 + s2);
    Ok((u, v))
}

fn order_gap(delta: f64, spec: &ProblemSpec, a: MisspecScheme) -> Result<f64> {
    let beta = beta_one(spec);
    let t_sd = (spec.sigma2_sq() + beta * spec.sigma_y_sq()).sqrt();
    let d_sd = spec.diff_var().sqrt();
    let (u, v) = misspec_sigmas(spec, a)?;
    let (mu_u, sd_u) = (delta / t_sd, u.sqrt());
    let (mu_v, sd_v) = (delta / d_sd, v.sqrt());
    Ok(log_phi_expectation(|z| log_cdf(mu_u + sd_u * z) - log_cdf(mu_v + sd_v * z)))
}

fn interval_gap(delta: f64, m: f64, spec: &ProblemSpec) -> Result<f64> {
    let beta = beta_one(spec);
    let t_sd = (spec.sigma2_sq() + beta * spec.sigma_y_sq()).sqrt();
    let d_sd = spec.diff_var().sqrt();
    let (d0, d2) = ((m + delta) / t_sd, (delta - m) / t_sd);
    let (e0, e2) = ((m + delta) / d_sd, (delta - m) / d_sd);
    Ok(log_phi_expectation(|z| log_cdf_diff(z + d2, z + d0) - log_cdf_diff(z + e2, z + e0)))
}

/// `R_KL(mre) - R_KL(bayes_uniform)` for a one-dimensional half-line
/// constraint, by quadrature.
pub fn risk_diff_order(theta: &ThetaPoint, spec: &ProblemSpec, misspec: Option<MisspecScheme>) -> Result<f64> {
    let lower = match spec.constraint() {
        ConstraintSet::HalfLineProduct { lower } if lower.len() == 1 && lower[0].is_finite() => lower[0],
        _ => return Err(Error::Unsupported("risk_diff_order needs p = 1 and a half-line constraint".into())),
    };
    spec.check_dim(&theta.theta1)?;
    order_gap(theta.difference()[0] - lower, spec, misspec.unwrap_or_default())
}

/// `R_KL(mre) - R_KL(bayes_uniform)` for an interval constraint, by
/// quadrature.
pub fn risk_diff_interval(theta: &ThetaPoint, spec: &ProblemSpec) -> Result<f64> {
    let m = match spec.constraint() {
        ConstraintSet::Interval { half_width } => *half_width,
        _ => return Err(Error::Unsupported("risk_diff_interval needs an interval constraint".into())),
    };
    spec.check_dim(&theta.theta1)?;
    interval_gap(theta.difference()[0], m, spec)
}

/// KL risk of the uniform-prior Bayes density for box constraints. The loss
/// splits over coordinates, so the risk is the MRE risk minus one
/// one-dimensional risk difference per bounded coordinate.
pub fn kl_risk_bayes_uniform(theta: &ThetaPoint, spec: &ProblemSpec) -> Result<RiskEstimate> {
    spec.check_dim(&theta.theta1)?;
    let bounds = spec
        .constraint()
        .coordinate_bounds()
        .ok_or_else(|| Error::Unsupported("quadrature Bayes risk needs a box constraint".into()))?;
    let base = mre_risk_closed(LossSpec::kl(), spec)?.value;
    let mut gain = 0.0;
    for (d, (lo, hi)) in theta.difference().iter().zip(bounds) {
        gain += match (lo.is_finite(), hi.is_finite()) {
            (false, false) => 0.0,
            (true, false) => order_gap(d - lo, spec, MisspecScheme::identity())?,
            (true, true) => interval_gap(d - 0.5 * (lo + hi), 0.5 * (hi - lo), spec)?,
            (false, true) => unreachable!("no variant has only an upper bound"),
        };
    }
    Ok(RiskEstimate::quadrature(base - gain))
}

/// Risk without sampling when a closed form or quadrature representation
/// exists; `None` otherwise.
pub fn risk_deterministic(
    estimator: Estimator,
    theta: &ThetaPoint,
    loss: LossSpec,
    spec: &ProblemSpec,
) -> Result<Option<RiskEstimate>> {
    spec.check_dim(&theta.theta1)?;
    spec.check_dim(&theta.theta2)?;
    let boxed = spec.constraint().coordinate_bounds().is_some();
    let plugin = |mse: f64, c: f64| -> Result<Option<RiskEstimate>> {
        if loss.is_kl() {
            kl_risk_plugin_closed(mse, c, spec).map(Some)
        } else {
            rkl_risk_plugin_closed(mse, c, spec).map(Some)
        }
    };
    let kl_or_rkl = loss.is_kl() || loss.is_reverse_kl();
    match estimator {
        Estimator::Mre => mre_risk_closed(loss, spec).map(Some),
        Estimator::Plugin(c) => plugin_x1_risk_closed(c, loss, spec).map(Some),
        Estimator::Mle(c) if kl_or_rkl && boxed => plugin(mse_mle(spec, theta)?, c),
        Estimator::BayesRkl if kl_or_rkl && boxed => {
            Ok(plugin(mse_posterior_mean(spec, theta)?, 1.0)?.map(as_quadrature))
        }
        Estimator::TwoStep if kl_or_rkl && boxed => {
            let c = two_step_factor(r_lower_floor(spec))?;
            Ok(plugin(mse_posterior_mean(spec, theta)?, c)?.map(as_quadrature))
        }
        Estimator::BayesUniform if loss.is_kl() && boxed => kl_risk_bayes_uniform(theta, spec).map(Some),
        Estimator::BayesUniform if boxed && spec.constraint().is_unconstrained() && loss.integer_n().is_ok() => {
            mre_risk_closed(loss, spec).map(Some)
        }
        _ => Ok(None),
    }
}

fn as_quadrature(r: RiskEstimate) -> RiskEstimate {
    RiskEstimate { method: RiskMethod::Quadrature, ..r }
}

/// `E f(Z)` by composite Gauss–Legendre on `[-12, 12]`. Log-CDF integrands
/// have complex singularities close to the real axis, which stalls Hermite
/// rules once the argument is spread wide.
fn log_phi_expectation(f: impl Fn(f64) -> f64) -> f64 {
    const PANELS: usize = 24;
    let rule = legendre_rule(64);
    (0..PANELS)
        .map(|k| {
            let a = -12.0 + k as f64;
            rule.integrate_on(a, a + 1.0, |z| f(z) * pdf(z))
        })
        .sum()
}

/// `(E log Phi(U), E log Phi(V))` for `U ~ N(mu_u, sd_u^2)`,
/// `V ~ N(mu_v, sd_v^2)`. When `U` has the larger mean and the smaller spread
/// the first value is at least the second.
pub fn monotone_expectation_check(mu_u: f64, sd_u: f64, mu_v: f64, sd_v: f64) -> Result<(f64, f64)> {
    for (name, v) in [("mu_u", mu_u), ("mu_v", mu_v)] {
        finite(name, v)?;
    }
    positive("sd_u", sd_u)?;
    positive("sd_v", sd_v)?;
    if mu_u < mu_v || sd_u > sd_v {
        return Err(Error::InvalidArgument(format!(
            "need mu_u >= mu_v and sd_u <= sd_v, got ({mu_u}, {sd_u}) vs ({mu_v}, {sd_v})"
        )));
    }
    let eu = log_phi_expectation(|z| log_cdf(mu_u + sd_u * z));
    let ev = log_phi_expectation(|z| log_cdf(mu_v + sd_v * z));
    Ok((eu, ev))
}

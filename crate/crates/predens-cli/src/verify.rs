//! Self-checks behind `predens verify`.
//!
//! The fast level runs deterministic checks only. The full level adds Monte
//! Carlo cross-checks at 3 standard errors, each with its own stream derived
//! from the run seed.

use std::fmt;
use std::time::Instant;

use predens::dominance::{c0, expansion_gap, expansion_report, gamma0, persistence_check, PointEstimator};
use predens::estimators::Estimator;
use predens::estimators::{bayes_rkl, bayes_uniform, bayes_weights, mle, mle_center, mre, plugin, LossSpec};
use predens::model::{ConstraintSet, MisspecScheme, ProblemSpec};
use predens::risk::{
    alpha_loss, kl_risk_plugin_closed, mse_mle, reflected_normal_loss, risk_deterministic, risk_diff_interval,
    risk_diff_mc, risk_diff_order, risk_mc, McOptions, ThetaPoint,
};
use predens::skewnormal::SkewNormalGB;
use predens::special::{k_n, noncentral_chi2_cdf, std_normal_cdf, QuadratureRule};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Level {
    Fast,
    Full,
}

impl std::str::FromStr for Level {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "fast" => Ok(Self::Fast),
            "full" => Ok(Self::Full),
            other => Err(format!("unknown level `{other}` (expected fast or full)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl fmt::Display for CheckResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "PASS" } else { "FAIL" };
        write!(f, "{tag} {:<22} {:>7.2}s  {}", self.name, self.seconds, self.detail)
    }
}

/// Outcome of a check body: pass flag and a one-line diagnostic.
type Outcome = (bool, String);

fn timed(name: &'static str, body: impl FnOnce() -> Outcome) -> CheckResult {
    let start = Instant::now();
    // A panic or library error inside a check counts as a failure of that
    // check only.
    let (passed, detail) = std::panic::catch_unwind(std::panic::AssertUnwindSafe(body))
        .unwrap_or_else(|_| (false, "check panicked".to_string()));
    CheckResult { name, passed, detail, seconds: start.elapsed().as_secs_f64() }
}

fn err(e: impl fmt::Display) -> Outcome {
    (false, format!("error: {e}"))
}

macro_rules! tryc {
    ($e:expr) => {
        match $e {
            Ok(v) => v,
            Err(e) => return err(e),
        }
    };
}

fn unit(a: ConstraintSet) -> ProblemSpec {
    ProblemSpec::unit(a).expect("unit variances are valid")
}

pub fn run(level: Level, seed: u64) -> Vec<CheckResult> {
    let mut out = vec![
        timed("c0-root", check_c0),
        timed("expansion-intervals", check_expansion_intervals),
        timed("orthant-constants", check_orthant),
        timed("skew-normal-means", check_skew_means),
        timed("order-risk-gap", check_order_gap),
        timed("interval-risk-gap", check_interval_gap),
        timed("diagonal-identity", || diagonal_identity(|s| bayes_weights(s, 1).t_var)),
        timed("persistence", || check_persistence(seed)),
        timed("figure-1-shape", check_figure_one),
        timed("figure-3-4-ordering", check_interval_ordering),
        timed("rkl-posterior-mean", || check_rkl_bayes(seed)),
    ];
    if level == Level::Full {
        out.extend([
            timed("order-risk-gap-mc", || check_order_gap_mc(seed)),
            timed("figure-1-mc", || check_figure_one_mc(seed)),
            timed("kl-plugin-mc", || check_kl_plugin_mc(seed)),
            timed("reflected-normal-sign", || check_reflected_sign(seed)),
            timed("interval-ordering-mc", || check_interval_ordering_mc(seed)),
            timed("noncentral-chi2-mc", || check_chi2_mc(seed)),
            timed("skew-normal-sampler", || check_sampler(seed)),
        ]);
    }
    out
}

fn sub_seed(seed: u64, tag: u64) -> u64 {
    seed ^ tag.wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

fn check_c0() -> Outcome {
    let c = tryc!(c0(1.75));
    if (c - 3.48066).abs() > 1e-3 {
        return (false, format!("c0(1.75) = {c}"));
    }
    for s in [1.2, 1.75, 2.0, 3.0, 5.0] {
        let c = tryc!(c0(s));
        if !(s * s < c && c < s.exp()) || expansion_gap(s, c).abs() >= 1e-12 {
            return (false, format!("s = {s}: c0 = {c}, G = {:e}", expansion_gap(s, c)));
        }
    }
    (true, format!("c0(1.75) = {c:.6}; bracket and root hold on 5 points"))
}

fn check_expansion_intervals() -> Outcome {
    let rep = tryc!(expansion_report(&unit(ConstraintSet::order(1)), PointEstimator::RestrictedMle));
    let c = rep.c0_value;
    let ok = (rep.r_lower, rep.r_upper) == (0.75, 1.0)
        && rep.dominance_interval.to_string() == format!("(1, {c})")
        && rep.complete_subclass.to_string() == format!("[1.75, {c})")
        && rep.minimal_complete.to_string() == "[1.75, 2]";
    (
        ok,
        format!(
            "dominance {} complete {} minimal {}",
            rep.dominance_interval, rep.complete_subclass, rep.minimal_complete
        ),
    )
}

fn check_orthant() -> Outcome {
    let k2 = tryc!(k_n(2, 0.0, 1.0));
    if (k2 - 1.0 / 3.0).abs() > 1e-6 {
        return (false, format!("k_2(0, 1) = {k2}"));
    }
    let mut worst: f64 = 0.0;
    for a0 in [-3.0, -1.0, 0.0, 0.5, 2.0] {
        for a1 in [-2.0, -0.5, 0.0, 0.7, 3.0] {
            let closed = tryc!(std_normal_cdf(a0 / (1.0f64 + a1 * a1).sqrt()));
            worst = worst.max((tryc!(k_n(1, a0, a1)) - closed).abs());
        }
    }
    (worst < 1e-12, format!("k_2(0, 1) = {k2:.10}; max K_1 error {worst:.1e}"))
}

fn legendre(a: f64, b: f64, pieces: usize, f: impl Fn(f64) -> f64) -> f64 {
    let rule = QuadratureRule::gauss_legendre(64).expect("positive order");
    let h = (b - a) / pieces as f64;
    (0..pieces).map(|k| rule.integrate_on(a + k as f64 * h, a + (k + 1) as f64 * h, &f)).sum()
}

fn check_skew_means() -> Outcome {
    let mut worst: f64 = 0.0;
    for (n, a0, a1, xi, tau) in
        [(1, 0.5, 2.0, 0.0, 1.0), (2, 1.0, 1.0, 0.0, 1.0), (3, 0.5, -1.5, 1.0, 0.5), (4, 2.0, 1.2, -3.0, 1.1)]
    {
        let d = tryc!(SkewNormalGB::new(n, a0, a1, xi, tau));
        let (lo, hi) = (xi - 40.0 * tau, xi + 40.0 * tau);
        let mass = legendre(lo, hi, 160, |t| d.pdf(t));
        let first = legendre(lo, hi, 160, |t| t * d.pdf(t));
        worst = worst.max((tryc!(d.mean()) - first / mass).abs());
    }
    (worst < 1e-9, format!("max mean error {worst:.1e} over 4 cases"))
}

fn check_order_gap() -> Outcome {
    let s = unit(ConstraintSet::order(1));
    let at = |d: f64| risk_diff_order(&ThetaPoint::along_first(1, d), &s, None);
    let zero = tryc!(at(0.0));
    let one = tryc!(at(1.0));
    let mut min = f64::INFINITY;
    for k in 0..25 {
        min = min.min(tryc!(at(6.0 * k as f64 / 24.0)));
    }
    let ok = zero.abs() < 1e-10 && one > 1e-6 && min >= -1e-10;
    (ok, format!("gap(0) = {zero:.1e}, gap(1) = {one:.6}, min on [0, 6] = {min:.1e}"))
}

fn check_interval_gap() -> Outcome {
    for m in [1.0, 2.0] {
        let s = unit(tryc!(ConstraintSet::interval(m)));
        for k in 1..20 {
            let d = -m + 2.0 * m * k as f64 / 20.0;
            let g = tryc!(risk_diff_interval(&ThetaPoint::along_first(1, d), &s));
            let mirror = tryc!(risk_diff_interval(&ThetaPoint::along_first(1, -d), &s));
            if !(g > 0.0) || (g - mirror).abs() > 1e-10 {
                return (false, format!("m = {m}, delta = {d}: gap {g}, mirrored {mirror}"));
            }
        }
    }
    (true, "positive and symmetric at 19 interior points for m = 1, 2".into())
}

/// For the Kullback–Leibler Bayes density the truncation scale `t_var`, the
/// shrinkage weight and `sigma1_sq` recombine to `sigma1_sq + sigma2_sq`:
/// `t_var + beta^2 (sigma_y_sq + sigma1_sq) = sigma1_sq + sigma2_sq`.
/// `t_var` is a parameter so that a corrupted formula can be fed in.
pub fn diagonal_identity(t_var: impl Fn(&ProblemSpec) -> f64) -> Outcome {
    let mut worst: f64 = 0.0;
    for s1 in [0.1, 0.5, 1.0, 2.0, 7.0] {
        for s2 in [0.2, 1.0, 3.0] {
            for sy in [0.3, 1.0, 4.0] {
                let spec = tryc!(ProblemSpec::new(s1, s2, sy, ConstraintSet::order(1)));
                let beta = s1 / (s1 + sy);
                let lhs = t_var(&spec) + beta * beta * (sy + s1);
                worst = worst.max((lhs - (s1 + s2)).abs() / (s1 + s2));
            }
        }
    }
    (worst < 1e-12, format!("max relative error {worst:.1e} over 45 variance triples"))
}

fn check_persistence(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 1));
    let s = unit(ConstraintSet::order(1));
    let id = tryc!(persistence_check(&s, MisspecScheme::identity()));
    if !(id.holds && id.sigma_u_sq == id.sigma_v_sq) {
        return (false, format!("identity scheme: {id:?}"));
    }
    let mut log_uniform = || 10f64.powf(rng.random_range(-1.0..1.0));
    for case in 0..3 {
        for _ in 0..100 {
            let (spec, a) = match case {
                0 => {
                    let k = log_uniform();
                    let spec =
                        tryc!(ProblemSpec::new(log_uniform(), log_uniform(), log_uniform(), ConstraintSet::order(1)));
                    (spec, (k, k, k))
                }
                1 => {
                    let k = log_uniform();
                    let ay = k * log_uniform().min(1.0);
                    let spec =
                        tryc!(ProblemSpec::new(log_uniform(), log_uniform(), log_uniform(), ConstraintSet::order(1)));
                    (spec, (k, k, ay))
                }
                _ => {
                    let (a2, ay) = (log_uniform(), log_uniform());
                    (s.clone(), (0.5 * (a2 + ay) * (1.0 + log_uniform() / 10.0), a2, ay))
                }
            };
            let scheme = tryc!(MisspecScheme::new(a.0, a.1, a.2));
            let v = tryc!(persistence_check(&spec, scheme));
            if !v.holds {
                return (false, format!("case {} fails at {a:?}: {v:?}", case + 1));
            }
        }
    }
    (true, "identity exact; 100 random schemes hold in each of cases (i)-(iii)".into())
}

/// Figure 1 shape: the Bayes density never loses to the MRE density and
/// ties only at the boundary; the Bayes and `mle:2` curves cross once.
fn check_figure_one() -> Outcome {
    let s = unit(ConstraintSet::order(1));
    let kl = LossSpec::kl();
    let risk = |e: Estimator, d: f64| risk_deterministic(e, &ThetaPoint::along_first(1, d), kl, &s);
    let bench = tryc!(risk(Estimator::Mre, 0.0)).expect("closed form").value;
    let mut worst_tie: f64 = 0.0;
    for k in 0..31 {
        let d = 5.0 * k as f64 / 30.0;
        let b = tryc!(risk(Estimator::BayesUniform, d)).expect("quadrature").value / bench;
        if k == 0 {
            worst_tie = (b - 1.0).abs();
        } else if !(b < 1.0) {
            return (false, format!("bayes/mre = {b} at delta = {d}"));
        }
    }
    let gap = |d: f64| -> predens::Result<f64> {
        Ok(risk(Estimator::BayesUniform, d)?.expect("quadrature").value
            - risk(Estimator::Mle(2.0), d)?.expect("closed").value)
    };
    let (mut lo, mut hi) = (0.0, 2.0);
    if !(tryc!(gap(lo)) > 0.0 && tryc!(gap(hi)) < 0.0) {
        return (false, "bayes and mle:2 curves do not cross on [0, 2]".into());
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if tryc!(gap(mid)) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let cross = 0.5 * (lo + hi);
    let closed = |e: Estimator| -> predens::Result<f64> { Ok(risk(e, 5.0)?.expect("closed").value) };
    let gain = (tryc!(closed(Estimator::Mle(1.0))) - tryc!(closed(Estimator::Mle(2.0)))) / bench;
    let ok = worst_tie < 1e-10 && (cross - 0.76).abs() <= 0.05 && (gain - 0.44).abs() <= 0.02;
    (
        ok,
        format!(
            "bayes/mre < 1 for delta > 0 (|ratio - 1| = {worst_tie:.1e} at 0); crossing at {cross:.5}; \
             mle:2 gain at 5 = {:.1}%",
            100.0 * gain
        ),
    )
}

/// Monte Carlo side of Figure 1 at 10^5 draws: the Bayes density never loses
/// to the MRE density beyond 3 SE, and the `mle` vs `mle:2` gap at the ends
/// of the grid matches its closed form.
fn check_figure_one_mc(seed: u64) -> Outcome {
    let s = unit(ConstraintSet::order(1));
    let kl = LossSpec::kl();
    let mut worst: f64 = f64::NEG_INFINITY;
    for (i, d) in [0.0, 0.5, 1.0, 2.0, 3.5, 5.0].into_iter().enumerate() {
        let t = ThetaPoint::along_first(1, d);
        let opts = McOptions::with_samples(100_000, sub_seed(seed, 80 + i as u64));
        let diff =
            tryc!(risk_diff_mc(|x1, x2| bayes_uniform(x1, x2, &s, kl), |x1, _| mre(x1, &s, kl), &t, kl, &s, &opts));
        let z = diff.value / diff.std_error.max(f64::MIN_POSITIVE);
        worst = worst.max(z);
        if z > 3.0 {
            return (false, format!("delta = {d}: bayes - mre = {} ± {}", diff.value, diff.std_error));
        }
    }
    for (i, d) in [0.0, 5.0].into_iter().enumerate() {
        let t = ThetaPoint::along_first(1, d);
        let mse = tryc!(mse_mle(&s, &t));
        let exact = tryc!(kl_risk_plugin_closed(mse, 1.0, &s)).value - tryc!(kl_risk_plugin_closed(mse, 2.0, &s)).value;
        let opts = McOptions::with_samples(100_000, sub_seed(seed, 90 + i as u64));
        let diff = tryc!(risk_diff_mc(|x1, x2| mle(x1, x2, &s, 1.0), |x1, x2| mle(x1, x2, &s, 2.0), &t, kl, &s, &opts));
        if (diff.value - exact).abs() > 3.0 * diff.std_error {
            return (false, format!("delta = {d}: mle - mle:2 = {} ± {} vs {exact}", diff.value, diff.std_error));
        }
    }
    (true, format!("bayes - mre max z = {worst:+.2} on 6 points; mle gain matches closed form at 0 and 5"))
}

fn interior(m: f64) -> [f64; 5] {
    [-0.8 * m, -0.4 * m, 0.0, 0.4 * m, 0.8 * m]
}

fn check_interval_ordering() -> Outcome {
    let kl = LossSpec::kl();
    let mut detail = Vec::new();
    for (m, mre_better) in [(2.0, true), (1.0, false)] {
        let s = unit(tryc!(ConstraintSet::interval(m)));
        for d in interior(m) {
            let t = ThetaPoint::along_first(1, d);
            let r_mre = tryc!(risk_deterministic(Estimator::Mre, &t, kl, &s)).expect("closed").value;
            let r_mle = tryc!(risk_deterministic(Estimator::Mle(1.0), &t, kl, &s)).expect("closed").value;
            if (r_mre < r_mle) != mre_better {
                return (false, format!("m = {m}, delta = {d}: mre {r_mre}, mle {r_mle}"));
            }
            if d == 0.0 {
                detail.push(format!("m = {m}: mle/mre = {:.4} at 0", r_mle / r_mre));
            }
        }
    }
    (true, detail.join("; "))
}

/// Posterior expected reverse-KL loss over 5 random problems: the Bayes
/// plug-in beats shifted and expanded rivals.
fn check_rkl_bayes(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 2));
    for trial in 0..5 {
        let (s1, s2, sy): (f64, f64, f64) =
            (rng.random_range(0.3..2.0), rng.random_range(0.3..2.0), rng.random_range(0.3..2.0));
        let a = if trial % 2 == 0 { ConstraintSet::order(1) } else { tryc!(ConstraintSet::interval(1.0)) };
        let s = tryc!(ProblemSpec::new(s1, s2, sy, a.clone()));
        let (x1, x2): (f64, f64) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let sd2 = s2.sqrt();
        let cdf = |z: f64| std_normal_cdf(z).unwrap_or(f64::NAN);
        let kernel = |t: f64| {
            let mass = match &a {
                ConstraintSet::Interval { half_width } => {
                    cdf((t - x2 + half_width) / sd2) - cdf((t - x2 - half_width) / sd2)
                }
                _ => cdf((t - x2) / sd2),
            };
            (-(x1 - t).powi(2) / (2.0 * s1)).exp() * mass
        };
        let (lo, hi) = (x1 - 14.0 * s1.sqrt(), x1 + 14.0 * s1.sqrt());
        let z = legendre(lo, hi, 40, kernel);
        let expected = |q: &predens::estimators::PredictiveDensity| {
            legendre(lo, hi, 40, |t| kernel(t) * alpha_loss(q, &[t], LossSpec::reverse_kl(), &s).unwrap_or(f64::NAN))
                / z
        };
        let best = tryc!(bayes_rkl(&[x1], &[x2], &s));
        let center = best.gaussian().expect("plug-in").center[0];
        let base = expected(&best);
        for (shift, c) in [(0.1, 1.0), (-0.1, 1.0), (0.0, 1.2)] {
            let rival = tryc!(plugin(&[center + shift], c, &s));
            let r = expected(&rival);
            if !(base < r) {
                return (false, format!("trial {trial}: bayes {base} vs rival ({shift}, {c}) {r}"));
            }
        }
    }
    (true, "Bayes plug-in wins against 3 rivals on 5 random problems".into())
}

fn check_order_gap_mc(seed: u64) -> Outcome {
    let s = unit(ConstraintSet::order(1));
    let kl = LossSpec::kl();
    let mut detail = Vec::new();
    for (i, d) in [0.5, 1.0, 2.0].into_iter().enumerate() {
        let t = ThetaPoint::along_first(1, d);
        let quad = tryc!(risk_diff_order(&t, &s, None));
        let opts = McOptions::with_samples(1_000_000, sub_seed(seed, 10 + i as u64));
        let mc =
            tryc!(risk_diff_mc(|x1, _| mre(x1, &s, kl), |x1, x2| bayes_uniform(x1, x2, &s, kl), &t, kl, &s, &opts));
        let z = (mc.value - quad) / mc.std_error;
        detail.push(format!("{d}: z = {z:+.2}"));
        if z.abs() > 3.0 {
            return (false, format!("delta = {d}: mc {} ± {} vs quadrature {quad}", mc.value, mc.std_error));
        }
    }
    (true, detail.join(", "))
}

fn check_kl_plugin_mc(seed: u64) -> Outcome {
    let s = unit(ConstraintSet::order(1));
    let mut worst: f64 = 0.0;
    for (i, (d, c)) in [(0.0, 1.0), (0.0, 2.0), (1.0, 1.5), (2.5, 1.2), (0.5, 3.0), (4.0, 1.75)].into_iter().enumerate()
    {
        let t = ThetaPoint::along_first(1, d);
        let closed = tryc!(kl_risk_plugin_closed(tryc!(mse_mle(&s, &t)), c, &s)).value;
        let opts = McOptions::with_samples(100_000, sub_seed(seed, 20 + i as u64));
        let mc = tryc!(risk_mc(|x1, x2| mle(x1, x2, &s, c), &t, LossSpec::kl(), &s, &opts));
        let z = (mc.value - closed) / mc.std_error;
        worst = worst.max(z.abs());
        if z.abs() > 3.0 {
            return (false, format!("delta = {d}, c = {c}: mc {} ± {} vs {closed}", mc.value, mc.std_error));
        }
    }
    (true, format!("6 combinations, max |z| = {worst:.2}"))
}

/// Signs of the Hellinger risk difference between `mle:1.5` and the
/// `X1` plug-in agree with the reflected-normal risk difference at `gamma0`.
fn check_reflected_sign(seed: u64) -> Outcome {
    let s = unit(ConstraintSet::order(1));
    let (alpha, c) = (0.0, 1.5);
    let loss = tryc!(LossSpec::new(alpha));
    let g0 = tryc!(gamma0(alpha, c, &s));
    let n = 1_000_000;
    let mut detail = Vec::new();
    for (i, d) in [0.0, 0.5, 1.0].into_iter().enumerate() {
        let t = ThetaPoint::along_first(1, d);
        let opts = McOptions::with_samples(n, sub_seed(seed, 30 + i as u64));
        let a = tryc!(risk_diff_mc(|x1, x2| mle(x1, x2, &s, c), |x1, _| plugin(x1, c, &s), &t, loss, &s, &opts));
        let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 40 + i as u64));
        let (mut sum, mut sum_sq) = (0.0, 0.0);
        for _ in 0..n {
            let x1 = [d + rng.sample::<f64, _>(StandardNormal)];
            let x2 = [rng.sample::<f64, _>(StandardNormal)];
            let center = tryc!(mle_center(&x1, &x2, &s));
            let v =
                tryc!(reflected_normal_loss(&center, &t.theta1, g0)) - tryc!(reflected_normal_loss(&x1, &t.theta1, g0));
            sum += v;
            sum_sq += v * v;
        }
        let m = sum / n as f64;
        let se = ((sum_sq / n as f64 - m * m) / n as f64).sqrt();
        let resolved = a.value.abs() > 3.0 * a.std_error && m.abs() > 3.0 * se;
        if resolved && (a.value < 0.0) != (m < 0.0) {
            return (false, format!("delta = {d}: alpha diff {} ± {}, reflected {m} ± {se}", a.value, a.std_error));
        }
        detail.push(format!("{d}: {}", if resolved { "same sign" } else { "unresolved" }));
    }
    (true, detail.join(", "))
}

fn check_interval_ordering_mc(seed: u64) -> Outcome {
    let kl = LossSpec::kl();
    for (m, mre_better) in [(2.0, true), (1.0, false)] {
        let s = unit(tryc!(ConstraintSet::interval(m)));
        for (i, d) in interior(m).into_iter().enumerate() {
            let t = ThetaPoint::along_first(1, d);
            let opts = McOptions::with_samples(100_000, sub_seed(seed, 50 + i as u64 + 10 * m as u64));
            let diff = tryc!(risk_diff_mc(|x1, _| mre(x1, &s, kl), |x1, x2| mle(x1, x2, &s, 1.0), &t, kl, &s, &opts));
            let clear = if mre_better { diff.value < -3.0 * diff.std_error } else { diff.value > 3.0 * diff.std_error };
            if !clear {
                return (false, format!("m = {m}, delta = {d}: mre - mle = {} ± {}", diff.value, diff.std_error));
            }
        }
    }
    (true, "m = 2: mre ahead at 5 points; m = 1: mle ahead at 5 points (3 SE)".into())
}

fn check_chi2_mc(seed: u64) -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(sub_seed(seed, 60));
    let n = 1_000_000;
    for (p, lambda, x) in [(1u32, 0.5f64, 1.2), (3, 2.0, 4.0), (5, 10.0, 12.0)] {
        let shift = lambda.sqrt();
        let hits = (0..n)
            .filter(|_| {
                let mut q = 0.0;
                for j in 0..p {
                    let z: f64 = rng.sample(StandardNormal);
                    let v = if j == 0 { z + shift } else { z };
                    q += v * v;
                }
                q <= x
            })
            .count();
        let f = hits as f64 / n as f64;
        let se = (f * (1.0 - f) / n as f64).sqrt();
        let exact = tryc!(noncentral_chi2_cdf(p, lambda, x));
        if (f - exact).abs() > 4.0 * se {
            return (false, format!("p = {p}, lambda = {lambda}, x = {x}: mc {f} ± {se} vs {exact}"));
        }
    }
    (true, "3 cases within 4 SE".into())
}

fn check_sampler(seed: u64) -> Outcome {
    let d = tryc!(SkewNormalGB::new(2, 0.5, 1.0, 0.3, 1.2));
    let draws = tryc!(d.sample(200_000, sub_seed(seed, 70)));
    let n = draws.len() as f64;
    let mean = draws.iter().sum::<f64>() / n;
    let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let exact = tryc!(d.mean());
    let z = (mean - exact) / (var / n).sqrt();
    (z.abs() < 3.0, format!("sample mean z = {z:+.2}"))
}

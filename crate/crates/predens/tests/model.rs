use predens::estimators::{bayes_uniform, LossSpec};
use predens::model::{
    constraint_probability, project_onto, reduce_bivariate_correlated, reduce_linear, rotate, truncated_mean,
    ConstraintSet, ProblemSpec,
};
use predens::risk::{risk_mc, McOptions, ThetaPoint};
use predens::special::QuadratureRule;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn mc_probability(a: &ConstraintSet, mu: &[f64], var: f64, draws: usize, seed: u64) -> (f64, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sd = var.sqrt();
    let hits = (0..draws)
        .filter(|_| {
            let t: Vec<f64> = mu.iter().map(|m| m + sd * rng.sample::<f64, _>(StandardNormal)).collect();
            a.contains(&t)
        })
        .count();
    let p = hits as f64 / draws as f64;
    (p, (p * (1.0 - p) / draws as f64).sqrt())
}

#[test]
fn constraint_probability_reference_points() {
    let ball = ConstraintSet::ball(2, 1.0).unwrap();
    let v = constraint_probability(&ball, &[0.0, 0.0], 1.0).unwrap();
    assert!((v - (1.0 - (-0.5f64).exp())).abs() < 1e-12);
    assert!((constraint_probability(&ConstraintSet::order(1), &[0.0], 3.0).unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(constraint_probability(&ConstraintSet::unconstrained(2), &[1.0, 2.0], 1.0).unwrap(), 1.0);
}

#[test]
fn constraint_probability_matches_monte_carlo() {
    let cases = [
        (ConstraintSet::half_lines(vec![0.0, -1.0, f64::NEG_INFINITY]).unwrap(), vec![0.3, -0.5, 2.0], 1.3),
        (ConstraintSet::interval(0.8).unwrap(), vec![0.4], 0.7),
        (ConstraintSet::rectangle(vec![1.0, 0.5]).unwrap(), vec![-0.2, 0.6], 0.9),
        (ConstraintSet::ball(3, 1.5).unwrap(), vec![0.5, -0.4, 1.0], 0.6),
    ];
    for (i, (a, mu, var)) in cases.iter().enumerate() {
        let exact = constraint_probability(a, mu, *var).unwrap();
        let (mc, se) = mc_probability(a, mu, *var, 1_000_000, 17 + i as u64);
        assert!((exact - mc).abs() < 4.0 * se, "{a:?}: exact {exact}, mc {mc} ± {se}");
    }
}

#[test]
fn constraint_probability_monotone_in_size() {
    let mut last_interval = 0.0;
    let mut last_ball = 0.0;
    for k in 1..=30 {
        let m = 0.1 * k as f64;
        let pi = constraint_probability(&ConstraintSet::interval(m).unwrap(), &[0.7], 1.2).unwrap();
        let pb = constraint_probability(&ConstraintSet::ball(2, m).unwrap(), &[0.7, -0.3], 1.2).unwrap();
        assert!(pi > last_interval && pb > last_ball);
        (last_interval, last_ball) = (pi, pb);
    }
}

#[test]
fn truncated_mean_agrees_with_quadrature() {
    // E[T | T in [lo, hi]] by Gauss–Legendre on the truncated density.
    let rule = QuadratureRule::gauss_legendre(64).unwrap();
    let (mu, var): (f64, f64) = (0.4, 0.8);
    let sd = var.sqrt();
    let (lo, hi) = (-1.0, 1.0);
    let dens = |t: f64| (-(t - mu) * (t - mu) / (2.0 * var)).exp();
    let mass = rule.integrate_on(lo, hi, dens);
    let first = rule.integrate_on(lo, hi, |t| t * dens(t));
    let got = truncated_mean(&ConstraintSet::interval(1.0).unwrap(), &[mu], var).unwrap()[0];
    assert!((got - first / mass).abs() < 1e-12);
    // Half line: Legendre on [0, mu + 12 sd] captures all mass.
    let upper = mu + 12.0 * sd;
    let mass = rule.integrate_on(0.0, upper, dens) + rule.integrate_on(upper, upper + 12.0, dens);
    let first = rule.integrate_on(0.0, upper, |t| t * dens(t));
    let got = truncated_mean(&ConstraintSet::order(1), &[mu], var).unwrap()[0];
    assert!((got - first / mass).abs() < 1e-10);
}

#[test]
fn linear_reduction_scales_variances() {
    let spec = ProblemSpec::new(1.0, 2.0, 0.5, ConstraintSet::order(1)).unwrap();
    let (same, map) = reduce_linear(1.0, 1.0, &[0.0], &spec).unwrap();
    assert_eq!(same, spec);
    assert_eq!(map.apply(&[1.0], &[2.0], &[3.0]), (vec![1.0], vec![2.0], vec![3.0]));
    let (scaled, _) = reduce_linear(2.0, -1.5, &[0.3], &spec).unwrap();
    assert_eq!(scaled.sigma1_sq(), 4.0);
    assert_eq!(scaled.sigma2_sq(), 4.5);
    assert_eq!(scaled.sigma_y_sq(), 2.0);
    assert!(reduce_linear(0.0, 1.0, &[0.0], &spec).is_err());
}

/// Kullback–Leibler loss is intrinsic: building the Bayes density in the
/// reduced model and mapping it back gives the same risk as measuring it in
/// the reduced model directly.
#[test]
fn linear_reduction_preserves_kl_risk() {
    let spec = ProblemSpec::new(0.5, 1.0, 0.8, ConstraintSet::order(1)).unwrap();
    let (c1, c2, d) = (2.0, 0.5, 0.25);
    let (reduced, map) = reduce_linear(c1, c2, &[d], &spec).unwrap();
    // Original parameters satisfy c1 theta1 - (c2 theta2 - d) = 0.6.
    let (theta1, theta2) = (0.4, 0.9);
    let theta_reduced = ThetaPoint::new(vec![c1 * theta1], vec![c2 * theta2 - d]).unwrap();
    let opts = McOptions::with_samples(20_000, 5);
    let direct = risk_mc(
        |x1, x2| bayes_uniform(x1, x2, &reduced, LossSpec::kl()),
        &theta_reduced,
        LossSpec::kl(),
        &reduced,
        &opts,
    )
    .unwrap();

    let gh = QuadratureRule::gauss_hermite(96).unwrap();
    let (sd1, sd2, sdy) = (spec.sigma1_sq().sqrt(), spec.sigma2_sq().sqrt(), spec.sigma_y_sq().sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let n = 20_000;
    let (mut sum, mut sum_sq) = (0.0, 0.0);
    for _ in 0..n {
        let x1 = theta1 + sd1 * rng.sample::<f64, _>(StandardNormal);
        let x2 = theta2 + sd2 * rng.sample::<f64, _>(StandardNormal);
        let (m1, m2, _) = map.apply(&[x1], &[x2], &[0.0]);
        let q = bayes_uniform(&m1, &m2, &reduced, LossSpec::kl()).unwrap();
        // Density of Y1 in original units: c1 q(c1 y).
        let loss = gh.integrate(|z| {
            let y = theta1 + sdy * z;
            let log_truth = -0.5 * z * z - sdy.ln();
            let log_q = c1.abs().ln() + q.log_density(&[c1 * y]);
            log_truth - log_q - 0.5 * (2.0 * std::f64::consts::PI).ln()
        });
        sum += loss;
        sum_sq += loss * loss;
    }
    let mean = sum / n as f64;
    let se = ((sum_sq / n as f64 - mean * mean) / n as f64).sqrt();
    let band = 3.0 * (se * se + direct.std_error * direct.std_error).sqrt();
    assert!((mean - direct.value).abs() < band, "{mean} vs {} (band {band})", direct.value);
}

#[test]
fn correlated_reduction_decorrelates() {
    let spec = ProblemSpec::new(1.5, 0.8, 1.0, ConstraintSet::order(1)).unwrap();
    let rho = 0.6;
    let (independent, red) = reduce_bivariate_correlated(rho, &spec).unwrap();
    let (s1, s2) = (spec.sigma1_sq().sqrt(), spec.sigma2_sq().sqrt());
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 1_000_000;
    let (mut sxy, mut syy) = (0.0, 0.0);
    for _ in 0..n {
        let z1: f64 = rng.sample(StandardNormal);
        let z2: f64 = rng.sample(StandardNormal);
        let x1 = s1 * z1;
        let x2 = s2 * (rho * z1 + (1.0 - rho * rho).sqrt() * z2);
        let (a, b) = red.apply(x1, x2);
        sxy += a * b;
        syy += b * b;
    }
    let cov = sxy / n as f64;
    let var = syy / n as f64;
    // Standard errors of the moment estimates under the target law.
    let cov_se = (spec.sigma1_sq() * independent.sigma2_sq() / n as f64).sqrt();
    let var_se = (2.0 * independent.sigma2_sq().powi(2) / n as f64).sqrt();
    assert!(cov.abs() < 4.0 * cov_se, "covariance {cov}");
    assert!((var - independent.sigma2_sq()).abs() < 4.0 * var_se, "variance {var}");
    assert!((independent.sigma2_sq() - 0.8 * (1.0 - 0.36) / 1.36).abs() < 1e-15);
}

fn vec_strategy(p: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-5.0f64..5.0, p)
}

fn constraint_strategy() -> impl Strategy<Value = ConstraintSet> {
    prop_oneof![
        Just(ConstraintSet::order(2)),
        (0.1f64..3.0).prop_map(|m| ConstraintSet::rectangle(vec![m, 0.5 * m]).unwrap()),
        (0.1f64..3.0).prop_map(|m| ConstraintSet::ball(2, m).unwrap()),
        (-2.0f64..2.0).prop_map(|l| ConstraintSet::half_lines(vec![l, f64::NEG_INFINITY]).unwrap()),
    ]
}

proptest! {
    #[test]
    fn rotation_round_trip(x1 in vec_strategy(3), x2 in vec_strategy(3), s1 in 0.1f64..4.0, s2 in 0.1f64..4.0) {
        let spec = ProblemSpec::new(s1, s2, 1.0, ConstraintSet::order(3)).unwrap();
        let (b1, b2) = rotate(&x1, &x2, &spec).unwrap().reconstruct();
        let scale = x1.iter().chain(&x2).fold(1.0f64, |m, v| m.max(v.abs()));
        for (a, b) in x1.iter().zip(&b1).chain(x2.iter().zip(&b2)) {
            prop_assert!((a - b).abs() <= 1e-15 * scale, "{a} vs {b}");
        }
    }

    #[test]
    fn projection_idempotent_and_nonexpansive(a in constraint_strategy(), u in vec_strategy(2), v in vec_strategy(2)) {
        let pu = project_onto(&a, &u).unwrap();
        let pv = project_onto(&a, &v).unwrap();
        prop_assert!(a.contains(&pu));
        let again = project_onto(&a, &pu).unwrap();
        for (x, y) in pu.iter().zip(&again) {
            prop_assert!((x - y).abs() < 1e-14);
        }
        let d_proj: f64 = pu.iter().zip(&pv).map(|(x, y)| (x - y).powi(2)).sum();
        let d: f64 = u.iter().zip(&v).map(|(x, y)| (x - y).powi(2)).sum();
        prop_assert!(d_proj <= d + 1e-12);
    }

    #[test]
    fn probability_in_unit_interval(a in constraint_strategy(), mu in vec_strategy(2), var in 0.01f64..10.0) {
        let p = constraint_probability(&a, &mu, var).unwrap();
        prop_assert!((0.0..=1.0).contains(&p));
    }
}

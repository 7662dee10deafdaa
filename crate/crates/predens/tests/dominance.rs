use predens::dominance::{
    c0, expansion_gap, expansion_report, gamma0, persistence_check, r_bounds_numeric, r_bounds_order, r_floor,
    sigma_z1, ExpansionReport, NumericOptions, PointEstimator,
};
use predens::estimators::{mle, LossSpec};
use predens::model::{project_onto, ConstraintSet, MisspecScheme, ProblemSpec};
use predens::risk::{mse_mle, risk_diff_mc, McOptions, ThetaPoint};
use proptest::prelude::*;

fn unit(a: ConstraintSet) -> ProblemSpec {
    ProblemSpec::unit(a).unwrap()
}

/// Independent root of `G_s` by plain bisection on `[s, 1e8]`.
fn c0_oracle(s: f64) -> f64 {
    let (mut lo, mut hi) = (s, 1e8);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (1.0 - 1.0 / mid) * s - mid.ln() > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn c0_reference_values() {
    assert!((c0(1.75).unwrap() - 3.48066).abs() < 1e-4);
    assert!((c0(2.0).unwrap() - 4.9215).abs() < 1e-3);
    for s in [1.05, 1.2, 1.75, 2.0, 3.0, 5.0, 8.0] {
        let c = c0(s).unwrap();
        assert!((c - c0_oracle(s)).abs() < 1e-9 * c, "s={s}");
        assert!(expansion_gap(s, c).abs() < 1e-12);
    }
    for s in [1.2, 2.0, 3.0, 5.0] {
        let c = c0(s).unwrap();
        assert!(s * s < c && c < s.exp(), "s={s}: {c}");
    }
}

#[test]
fn c0_increasing_and_gap_decreasing() {
    let mut last = 1.0;
    for k in 1..=60 {
        let s = 1.0 + 0.1 * k as f64;
        let c = c0(s).unwrap();
        assert!(c > last);
        last = c;
        let mut prev = f64::INFINITY;
        for j in 0..40 {
            let x = s + (3.0 * c - s) * j as f64 / 39.0;
            let g = expansion_gap(s, x);
            assert!(g < prev);
            prev = g;
        }
    }
}

#[test]
fn closed_form_bounds_for_order_mle() {
    assert_eq!(r_bounds_order(&unit(ConstraintSet::order(1))).unwrap(), (0.75, 1.0));
    let s = ProblemSpec::new(2.0, 1.0, 1.0, ConstraintSet::order(1)).unwrap();
    let (lo, hi) = r_bounds_order(&s).unwrap();
    assert!((lo - 4.0 / 3.0).abs() < 1e-15 && hi == 2.0);
    assert!(r_bounds_order(&unit(ConstraintSet::order(2))).is_err());
    assert!(r_bounds_order(&unit(ConstraintSet::interval(1.0).unwrap())).is_err());
    // The bounds are the extremes of the exact MSE over mu1 >= 0.
    let spec = ProblemSpec::new(1.3, 0.6, 0.9, ConstraintSet::order(1)).unwrap();
    let (lo, hi) = r_bounds_order(&spec).unwrap();
    let scale = spec.sigma_y_sq();
    let at = |d: f64| mse_mle(&spec, &ThetaPoint::along_first(1, d)).unwrap() / scale;
    assert!((at(0.0) - lo).abs() < 1e-14);
    assert!((at(60.0) - hi).abs() < 1e-12);
}

proptest! {
    #[test]
    fn closed_form_bounds_ordered(s1 in 0.05f64..10.0, s2 in 0.05f64..10.0, sy in 0.05f64..10.0) {
        let spec = ProblemSpec::new(s1, s2, sy, ConstraintSet::order(1)).unwrap();
        let (lo, hi) = r_bounds_order(&spec).unwrap();
        prop_assert!(r_floor(&spec) < lo && lo < hi);
    }

    #[test]
    fn report_intervals_nest(lo in 0.01f64..4.0, extra in 0.0f64..3.0) {
        let rep = ExpansionReport::from_bounds(lo, lo + extra).unwrap();
        let s = 1.0 + lo;
        prop_assert!(s * s < rep.c0_value && rep.c0_value < s.exp());
        prop_assert!(rep.dominance_interval.lower <= rep.complete_subclass.lower);
        prop_assert!(rep.complete_subclass.upper <= rep.dominance_interval.upper);
        // Minimal complete points inside the dominance range lie in the complete subclass.
        for k in 0..=20 {
            let c = rep.minimal_complete.lower
                + (rep.minimal_complete.upper - rep.minimal_complete.lower) * k as f64 / 20.0;
            if rep.minimal_complete.contains(c) && rep.dominance_interval.contains(c) {
                prop_assert!(rep.complete_subclass.contains(c));
            }
        }
    }
}

#[test]
fn unit_order_report() {
    let rep = expansion_report(&unit(ConstraintSet::order(1)), PointEstimator::RestrictedMle).unwrap();
    assert!((rep.c0_value - 3.48066).abs() < 1e-4);
    assert_eq!(rep.dominance_interval.lower, 1.0);
    assert!(!rep.dominance_interval.lower_closed && !rep.dominance_interval.upper_closed);
    assert_eq!((rep.complete_subclass.lower, rep.complete_subclass.lower_closed), (1.75, true));
    assert!(!rep.complete_subclass.upper_closed);
    assert_eq!((rep.minimal_complete.lower, rep.minimal_complete.upper), (1.75, 2.0));
    assert!(rep.minimal_complete.lower_closed && rep.minimal_complete.upper_closed);
    assert_eq!(rep.dominance_interval.to_string(), format!("(1, {})", rep.c0_value));

    let free = ProblemSpec::new(2.0, 1.0, 0.5, ConstraintSet::unconstrained(3)).unwrap();
    let rep = expansion_report(&free, PointEstimator::Unrestricted).unwrap();
    assert_eq!(rep.c0_value, c0(5.0).unwrap());
    assert_eq!((rep.r_lower, rep.r_upper), (4.0, 4.0));
    assert!(ExpansionReport::from_bounds(0.0, 1.0).is_err());
    assert!(ExpansionReport::from_bounds(1.0, 0.5).is_err());
}

#[test]
fn numeric_bounds_bracket_closed_form() {
    let s = unit(ConstraintSet::order(1));
    let proj = |w: &[f64]| project_onto(&ConstraintSet::order(1), w).unwrap();
    let grid: Vec<Vec<f64>> = (0..13).map(|k| vec![0.5 * k as f64]).collect();
    let (lo, hi) = r_bounds_numeric(&s, proj, &grid, NumericOptions::default()).unwrap();
    assert!(lo <= 0.75 && lo > 0.74, "lower {lo}");
    assert!((1.0..1.03).contains(&hi), "upper {hi}");

    let (lo, hi) = r_bounds_numeric(&s, |w| w.to_vec(), &grid, NumericOptions::default()).unwrap();
    assert!(lo <= 1.0 && lo > 0.97 && (1.0..1.03).contains(&hi), "identity: ({lo}, {hi})");

    // A constant psi has zero error at mu1 = 0, leaving only the floor.
    let (lo, _) = r_bounds_numeric(&s, |w| vec![0.0; w.len()], &[vec![0.0]], NumericOptions::default()).unwrap();
    assert_eq!(lo, r_floor(&s));
    assert_eq!(r_floor(&s), 0.5);

    assert!(r_bounds_numeric(&s, |w| w.to_vec(), &[], NumericOptions::default()).is_err());
    let again = r_bounds_numeric(&s, |w| w.to_vec(), &grid, NumericOptions::default()).unwrap();
    assert_eq!(again, r_bounds_numeric(&s, |w| w.to_vec(), &grid, NumericOptions::default()).unwrap());
}

#[test]
fn numeric_report_for_interval_is_consistent() {
    let s = unit(ConstraintSet::interval(1.0).unwrap());
    let rep = expansion_report(&s, PointEstimator::RestrictedMle).unwrap();
    assert!(rep.r_lower >= r_floor(&s) && rep.r_upper > rep.r_lower);
    // Projection onto a bounded interval never exceeds the unrestricted error.
    assert!(rep.r_upper < 1.0 + 0.02);
}

#[test]
fn dual_loss_parameters() {
    let s = unit(ConstraintSet::order(1));
    assert_eq!(gamma0(0.0, 1.0, &s).unwrap(), 2.0);
    assert_eq!(gamma0(0.0, 1.5, &s).unwrap(), 2.5);
    assert!(gamma0(0.999_999, 1.0, &s).unwrap() > 1e5);
    assert!(gamma0(1.0, 1.0, &s).is_err() && gamma0(-1.0, 1.0, &s).is_err());
    let s2 = ProblemSpec::new(1.0, 1.0, 3.0, ConstraintSet::order(1)).unwrap();
    assert!((gamma0(0.5, 2.0, &s2).unwrap() - (2.0 / 1.5 + 2.0) * 3.0).abs() < 1e-14);

    assert!((sigma_z1(0.0, 1.0, &s).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    for (alpha, s1, sy) in [(0.0, 1.0, 1.0), (0.5, 2.0, 0.7), (-0.4, 0.3, 1.8)] {
        let spec = ProblemSpec::new(s1, 1.0, sy, ConstraintSet::order(1)).unwrap();
        let c = 1.0 + (1.0 - alpha) * s1 / (2.0 * sy);
        let expected = (4.0 * sy + (1.0 - alpha).powi(2) * s1) * s1 / (4.0 * sy + (3.0 + alpha) * (1.0 - alpha) * s1);
        assert!((sigma_z1(alpha, c, &spec).unwrap() - expected).abs() < 1e-14);
        // Consistent with the reflected-normal reduction gamma0 s1 / (gamma0 + s1).
        let g = gamma0(alpha, c, &spec).unwrap();
        assert!((sigma_z1(alpha, c, &spec).unwrap() - g * s1 / (g + s1)).abs() < 1e-14);
    }
    let spec = ProblemSpec::new(2.5, 1.0, 1.0, ConstraintSet::order(1)).unwrap();
    assert_eq!(sigma_z1(1.0, 1.7, &spec).unwrap(), 2.5);
    assert_eq!(sigma_z1(-1.0, 1.7, &spec).unwrap(), 2.5);
}

#[test]
fn persistence_cases() {
    let s = unit(ConstraintSet::order(1));
    let id = persistence_check(&s, MisspecScheme::identity()).unwrap();
    assert!(id.holds && id.sigma_u_sq == id.sigma_v_sq);
    let bad = persistence_check(&s, MisspecScheme::new(1.0, 1.0, 4.0).unwrap()).unwrap();
    assert!(!bad.holds);
    assert!((bad.sigma_u_sq - 1.5).abs() < 1e-15 && (bad.sigma_v_sq - 1.0).abs() < 1e-15);

    let specs = [
        unit(ConstraintSet::order(1)),
        ProblemSpec::new(2.0, 0.5, 1.5, ConstraintSet::order(1)).unwrap(),
        ProblemSpec::new(0.3, 4.0, 0.2, ConstraintSet::order(1)).unwrap(),
    ];
    let ks = [0.1, 0.5, 1.0, 2.0, 9.0];
    for spec in &specs {
        for &k in &ks {
            // (i) common multiplier.
            assert!(persistence_check(spec, MisspecScheme::new(k, k, k).unwrap()).unwrap().holds);
            // (ii) aY^2 <= a1^2 = a2^2.
            for frac in [0.1, 0.5, 1.0] {
                assert!(persistence_check(spec, MisspecScheme::new(k, k, frac * k).unwrap()).unwrap().holds);
            }
        }
    }
    // (iii) equal nominal variances and a1^2 >= (a2^2 + aY^2)/2.
    for &a2 in &ks {
        for &ay in &ks {
            for bump in [0.0, 0.3, 2.0] {
                let a1 = 0.5 * (a2 + ay) + bump;
                let p = persistence_check(&s, MisspecScheme::new(a1, a2, ay).unwrap()).unwrap();
                assert!(p.holds, "a = ({a1}, {a2}, {ay}): {p:?}");
            }
        }
    }
}

/// Expanding the restricted-MLE plug-in by any c in the dominance range
/// lowers its Kullback–Leibler risk at every parameter.
#[test]
fn expansion_dominance_audit() {
    let s = unit(ConstraintSet::order(1));
    for c in [1.2, 1.75, 3.4] {
        for (i, delta) in [0.0, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0].into_iter().enumerate() {
            let t = ThetaPoint::along_first(1, delta);
            let d = risk_diff_mc(
                |x1, x2| mle(x1, x2, &s, c),
                |x1, x2| mle(x1, x2, &s, 1.0),
                &t,
                LossSpec::kl(),
                &s,
                &McOptions::with_samples(1_000_000, 7000 + i as u64),
            )
            .unwrap();
            assert!(d.value + 3.0 * d.std_error < 0.0, "c={c} delta={delta}: {} ± {}", d.value, d.std_error);
            // Agreement with the closed form at 4 SE: 21 comparisons share the budget.
            let r = mse_mle(&s, &t).unwrap();
            let closed = 0.5 * (c.ln() - (1.0 + r) * (1.0 - 1.0 / c));
            assert!(
                (d.value - closed).abs() < 4.0 * d.std_error,
                "c={c} delta={delta}: {} ± {} vs {closed}",
                d.value,
                d.std_error
            );
        }
    }
}

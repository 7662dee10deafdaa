//! Bodies of the `risk-curve`, `figure`, `dominance` and `density-eval`
//! subcommands. They return text so the binary and the tests share one path.

use std::fmt::Write as _;

use predens::dominance::{expansion_report, gamma0, persistence_check, sigma_z1, PointEstimator};
use predens::estimators::Estimator;
use predens::model::{ConstraintSet, MisspecScheme, ProblemSpec};
use predens::risk::{risk_deterministic, risk_mc, McOptions, RiskEstimate, ThetaPoint};
use rayon::prelude::*;
use toml::Value;

use crate::config::{figure_estimators, Document, ExperimentConfig, Method};
use crate::error::{CliError, Result};

pub const CSV_HEADER: &str = "delta,estimator,risk,std_error,ratio_vs_mre";

#[derive(Debug, Clone, PartialEq)]
pub struct CurveRow {
    pub delta: f64,
    pub estimator: String,
    pub risk: f64,
    pub std_error: f64,
    pub ratio_vs_mre: f64,
}

/// Seed for grid point `index`. Every estimator at a point shares it, so
/// Monte Carlo ratios use common random numbers.
pub fn point_seed(seed: u64, index: usize) -> u64 {
    seed ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Risk at one parameter: quadrature when the estimator has a deterministic
/// form and the variances are nominal, Monte Carlo otherwise.
pub fn point_risk(est: Estimator, theta: &ThetaPoint, cfg: &ExperimentConfig, seed: u64) -> Result<RiskEstimate> {
    if cfg.method == Method::Quadrature && cfg.misspec.is_none() {
        if let Some(r) = risk_deterministic(est, theta, cfg.loss, &cfg.spec)? {
            return Ok(r);
        }
    }
    let opts =
        McOptions { samples: cfg.mc_samples, seed, misspec: cfg.misspec.unwrap_or_default(), ..McOptions::default() };
    Ok(risk_mc(|x1, x2| est.build(x1, x2, &cfg.spec, cfg.loss), theta, cfg.loss, &cfg.spec, &opts)?)
}

/// Risks along `theta1 = (delta, 0, ..., 0)`, `theta2 = 0`, with ratios to the
/// MRE density at the same point. Rows are ordered by grid point, then by
/// the configured estimator order.
pub fn risk_curve(cfg: &ExperimentConfig) -> Result<Vec<CurveRow>> {
    let p = cfg.spec.p();
    let per_point = cfg
        .grid
        .points()
        .into_par_iter()
        .enumerate()
        .map(|(i, delta)| -> Result<Vec<CurveRow>> {
            let theta = ThetaPoint::along_first(p, delta);
            let seed = point_seed(cfg.seed, i);
            let bench = point_risk(Estimator::Mre, &theta, cfg, seed)?;
            cfg.estimators
                .iter()
                .map(|&est| {
                    let r = if est == Estimator::Mre { bench } else { point_risk(est, &theta, cfg, seed)? };
                    Ok(CurveRow {
                        delta,
                        estimator: est.to_string(),
                        risk: r.value,
                        std_error: r.std_error,
                        ratio_vs_mre: r.value / bench.value,
                    })
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(per_point.into_iter().flatten().collect())
}

pub fn to_csv(rows: &[CurveRow]) -> String {
    let mut out = String::with_capacity(64 * (rows.len() + 1));
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in rows {
        let _ =
            writeln!(out, "{:.9e},{},{:.9e},{:.9e},{:.9e}", r.delta, r.estimator, r.risk, r.std_error, r.ratio_vs_mre);
    }
    out
}

/// Whitespace table with one column of risk ratios per estimator, for
/// external plotting tools.
pub fn plot_data(rows: &[CurveRow]) -> String {
    let mut labels: Vec<&str> = Vec::new();
    for r in rows {
        if !labels.contains(&r.estimator.as_str()) {
            labels.push(&r.estimator);
        }
    }
    let mut out = String::from("# delta");
    for l in &labels {
        let _ = write!(out, " ratio:{l}");
    }
    out.push('\n');
    let mut i = 0;
    while i < rows.len() {
        let delta = rows[i].delta;
        let mut cells = vec![f64::NAN; labels.len()];
        while i < rows.len() && rows[i].delta == delta {
            let k = labels.iter().position(|l| *l == rows[i].estimator).expect("label collected above");
            cells[k] = rows[i].ratio_vs_mre;
            i += 1;
        }
        let _ = write!(out, "{delta:.9e}");
        for c in cells {
            let _ = write!(out, " {c:.9e}");
        }
        out.push('\n');
    }
    out
}

/// One curve set of a figure; `label` tags its estimator names.
#[derive(Debug, Clone)]
pub struct Panel {
    pub label: Option<String>,
    pub preset: Document,
}

fn estimator_list(list: &[Estimator]) -> Value {
    Value::Array(list.iter().map(|e| Value::String(e.to_string())).collect())
}

fn base_preset(min: f64, max: f64) -> Document {
    let mut d = Document::default();
    d.set("estimators", estimator_list(&figure_estimators()));
    d.set("grid.min", Value::Float(min));
    d.set("grid.max", Value::Float(max));
    d.set("grid.steps", Value::Integer(31));
    d.set("method", Value::String("quadrature".into()));
    d.set("mc.samples", Value::Integer(100_000));
    d
}

/// Preset configurations of the four risk-ratio figures: order constraint
/// with unit variances, order constraint with `sigma2_sq` in {1, 2, 4}, and
/// intervals of half-width 1 and 2 traced beyond their ends.
pub fn figure_panels(id: u8) -> Result<Vec<Panel>> {
    match id {
        1 => Ok(vec![Panel { label: None, preset: base_preset(0.0, 5.0) }]),
        2 => Ok([1.0, 2.0, 4.0]
            .into_iter()
            .map(|s2| {
                let mut d = base_preset(0.0, 5.0);
                d.set("spec.sigma2_sq", Value::Float(s2));
                d.set("estimators", estimator_list(&[Estimator::Mre, Estimator::BayesUniform]));
                Panel { label: Some(format!("sigma2_sq={s2}")), preset: d }
            })
            .collect()),
        3 | 4 => {
            let m = if id == 3 { 1.0 } else { 2.0 };
            let mut d = base_preset(-1.5 * m, 1.5 * m);
            d.set("spec.constraint", Value::String("interval".into()));
            d.set("spec.half_width", Value::Float(m));
            Ok(vec![Panel { label: None, preset: d }])
        }
        other => Err(CliError::config(format!("unknown figure {other} (expected 1, 2, 3 or 4)"))),
    }
}

/// Rows of a figure. `overrides` replace preset values in every panel.
pub fn figure(id: u8, overrides: &Document) -> Result<Vec<CurveRow>> {
    let mut rows = Vec::new();
    for panel in figure_panels(id)? {
        let mut doc = panel.preset;
        doc.merge(overrides);
        let cfg = ExperimentConfig::from_document(doc)?;
        for mut r in risk_curve(&cfg)? {
            if let Some(l) = &panel.label {
                r.estimator = format!("{}@{l}", r.estimator);
            }
            rows.push(r);
        }
    }
    Ok(rows)
}

pub fn describe_constraint(a: &ConstraintSet) -> String {
    let list = |v: &[f64]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ");
    match a {
        ConstraintSet::HalfLineProduct { lower } => format!("half-lines lower=[{}]", list(lower)),
        ConstraintSet::Interval { half_width } => format!("interval [-{half_width}, {half_width}]"),
        ConstraintSet::Rectangle { half_widths } => format!("rectangle half_widths=[{}]", list(half_widths)),
        ConstraintSet::Ball { dim, radius } => format!("ball dim={dim} radius={radius}"),
    }
}

fn scheme_key(a: &MisspecScheme) -> String {
    format!("{},{},{}", a.a1_sq, a.a2_sq, a.ay_sq)
}

fn is_scalar_order(spec: &ProblemSpec) -> bool {
    matches!(spec.constraint(), ConstraintSet::HalfLineProduct { lower } if lower.len() == 1 && lower[0].is_finite())
}

/// Sections `[spec]`, `[expansion]`, `[dual]` and `[persistence]` as
/// `key = value` lines.
pub fn dominance_report(cfg: &ExperimentConfig) -> Result<String> {
    let spec = &cfg.spec;
    let set = &cfg.dominance;
    let mut out = String::new();
    let _ = writeln!(out, "[spec]");
    let _ = writeln!(out, "p = {}", spec.p());
    let _ = writeln!(out, "sigma1_sq = {}", spec.sigma1_sq());
    let _ = writeln!(out, "sigma2_sq = {}", spec.sigma2_sq());
    let _ = writeln!(out, "sigma_y_sq = {}", spec.sigma_y_sq());
    let _ = writeln!(out, "constraint = {}", describe_constraint(spec.constraint()));

    let rep = expansion_report(spec, set.estimator)?;
    let s = 1.0 + rep.r_lower;
    let (low, high) = (s * s, s.exp());
    let bounds_ok = low < rep.c0_value && rep.c0_value < high;
    let _ = writeln!(out, "\n[expansion]");
    let name = match set.estimator {
        PointEstimator::RestrictedMle => "mle",
        PointEstimator::Unrestricted => "x1",
    };
    let _ = writeln!(out, "point_estimator = {name}");
    let _ = writeln!(out, "r_lower = {}", rep.r_lower);
    let _ = writeln!(out, "r_upper = {}", rep.r_upper);
    let _ = writeln!(out, "c0 = {}", rep.c0_value);
    let _ = writeln!(out, "dominance_interval = {}", rep.dominance_interval);
    let _ = writeln!(out, "complete_subclass = {}", rep.complete_subclass);
    let _ = writeln!(out, "minimal_complete = {}", rep.minimal_complete);
    let _ =
        writeln!(out, "bound_check = {} ({low} < {} < {high})", if bounds_ok { "pass" } else { "FAIL" }, rep.c0_value);

    let _ = writeln!(out, "\n[dual]");
    let _ = writeln!(out, "expansion = {}", set.expansion);
    for &alpha in &set.alphas {
        let _ = writeln!(out, "gamma0[alpha={alpha}] = {}", gamma0(alpha, set.expansion, spec)?);
        let _ = writeln!(out, "sigma_z1_sq[alpha={alpha}] = {}", sigma_z1(alpha, set.expansion, spec)?);
    }

    let _ = writeln!(out, "\n[persistence]");
    if !is_scalar_order(spec) {
        let _ = writeln!(out, "applicable = false");
        return Ok(out);
    }
    let _ = writeln!(out, "applicable = true");
    for a in &set.schemes {
        let v = persistence_check(spec, *a)?;
        let _ = writeln!(
            out,
            "scheme[{}] = holds={} sigma_u_sq={} sigma_v_sq={}",
            scheme_key(a),
            v.holds,
            v.sigma_u_sq,
            v.sigma_v_sq
        );
    }
    let grid = &set.a_grid;
    let mut cases: [(&str, Vec<MisspecScheme>); 3] = [("case_i", vec![]), ("case_ii", vec![]), ("case_iii", vec![])];
    let equal = spec.sigma1_sq() == spec.sigma2_sq() && spec.sigma2_sq() == spec.sigma_y_sq();
    let mut total = (0usize, 0usize);
    for &a1 in grid {
        for &a2 in grid {
            for &ay in grid {
                let scheme = MisspecScheme::new(a1, a2, ay)?;
                total.1 += 1;
                if persistence_check(spec, scheme)?.holds {
                    total.0 += 1;
                }
                if a1 == a2 && a2 == ay {
                    cases[0].1.push(scheme);
                }
                if ay <= a1 && a1 == a2 {
                    cases[1].1.push(scheme);
                }
                if equal && 0.5 * (a2 + ay) <= a1 {
                    cases[2].1.push(scheme);
                }
            }
        }
    }
    for (key, schemes) in &cases {
        if schemes.is_empty() {
            let _ = writeln!(out, "{key} = not applicable");
            continue;
        }
        let failures: Vec<String> = schemes
            .iter()
            .filter(|a| !persistence_check(spec, **a).map(|v| v.holds).unwrap_or(false))
            .map(|a| format!("[{}]", scheme_key(a)))
            .collect();
        if failures.is_empty() {
            let _ = writeln!(out, "{key} = all-hold ({} schemes)", schemes.len());
        } else {
            let _ = writeln!(out, "{key} = FAIL at {}", failures.join(" "));
        }
    }
    let _ = writeln!(out, "grid_holds = {}/{}", total.0, total.1);
    Ok(out)
}

/// `y,density` rows for the configured estimator. The grid moves the first
/// coordinate of `y`; the others stay at `x1`.
pub fn density_table(cfg: &ExperimentConfig) -> Result<String> {
    let d = &cfg.density;
    let q = d.estimator.build(&d.x1, &d.x2, &cfg.spec, cfg.loss)?;
    let mut out = String::from("y,density\n");
    let mut y = d.x1.clone();
    for t in d.y.points() {
        y[0] = t;
        let _ = writeln!(out, "{t:.9e},{:.9e}", q.density(&y));
    }
    Ok(out)
}

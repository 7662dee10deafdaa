//! Flat key-value experiment configuration.
//!
//! Config files are TOML documents written with dotted keys, for example
//! `spec.sigma1_sq = 2.0`. Section headers are flattened into the same dotted
//! names. Command-line overrides use the same keys and replace file values.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use predens::dominance::PointEstimator;
use predens::estimators::{Estimator, LossSpec};
use predens::model::{ConstraintSet, MisspecScheme, ProblemSpec};
use toml::Value;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq)]
struct Entry {
    value: Value,
    /// Line in the config file; `None` for command-line overrides.
    line: Option<usize>,
}

/// Dotted keys with their values and source lines.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Document {
    entries: BTreeMap<String, Entry>,
}

impl Document {
    pub fn parse(text: &str) -> Result<Self> {
        let table: toml::Table = toml::from_str(text).map_err(|e| {
            let line = e.span().map(|s| text[..s.start].matches('\n').count() + 1);
            match line {
                Some(l) => CliError::config(format!("line {l}: {}", e.message())),
                None => CliError::config(e.message().to_string()),
            }
        })?;
        let lines = key_lines(text);
        let mut entries = BTreeMap::new();
        flatten("", table, &mut |key, value| {
            let line = lines.get(&key).copied();
            entries.insert(key, Entry { value, line });
        })?;
        Ok(Self { entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: Value) {
        self.entries.insert(key.to_string(), Entry { value, line: None });
    }

    /// Applies a `key=value` override. The value is read as a TOML value when
    /// possible and as a bare string otherwise.
    pub fn set_raw(&mut self, assignment: &str) -> Result<()> {
        let (key, raw) = assignment
            .split_once('=')
            .ok_or_else(|| CliError::config(format!("override `{assignment}` is not of the form key=value")))?;
        let key = key.trim();
        if key.is_empty() {
            return Err(CliError::config(format!("override `{assignment}` has an empty key")));
        }
        self.set(key, parse_value(raw.trim()));
        Ok(())
    }

    /// Copies every entry of `other` over this document.
    pub fn merge(&mut self, other: &Document) {
        for (k, e) in &other.entries {
            self.entries.insert(k.clone(), e.clone());
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    fn take(&mut self, key: &str) -> Option<(Value, Origin)> {
        self.entries.remove(key).map(|e| (e.value, Origin { key: key.to_string(), line: e.line }))
    }

    fn number(&mut self, key: &str) -> Result<Option<f64>> {
        self.take(key).map(|(v, o)| as_number(&v, &o)).transpose()
    }

    /// Finite positive number, or `default` when absent.
    fn positive(&mut self, key: &str, default: f64) -> Result<f64> {
        match self.take(key) {
            None => Ok(default),
            Some((v, o)) => {
                let x = as_number(&v, &o)?;
                if x.is_finite() && x > 0.0 {
                    Ok(x)
                } else {
                    Err(o.invalid(format!("must be positive and finite, got {x}")))
                }
            }
        }
    }

    /// Integer no smaller than `min`, with its origin.
    fn integer_at_least(&mut self, key: &str, min: i64) -> Result<Option<(i64, Origin)>> {
        match self.take(key) {
            None => Ok(None),
            Some((v, o)) => match v.as_integer() {
                Some(n) if n >= min => Ok(Some((n, o))),
                Some(n) => Err(o.invalid(format!("must be at least {min}, got {n}"))),
                None => Err(o.expected("an integer", &v)),
            },
        }
    }

    fn integer(&mut self, key: &str) -> Result<Option<i64>> {
        self.take(key).map(|(v, o)| v.as_integer().ok_or_else(|| o.expected("an integer", &v))).transpose()
    }

    fn string(&mut self, key: &str) -> Result<Option<(String, Origin)>> {
        self.take(key)
            .map(|(v, o)| match v {
                Value::String(s) => Ok((s, o)),
                other => Err(o.expected("a string", &other)),
            })
            .transpose()
    }

    /// An array of numbers, or a single number read as a one-element list.
    fn numbers(&mut self, key: &str) -> Result<Option<Vec<f64>>> {
        self.take(key)
            .map(|(v, o)| match &v {
                Value::Array(items) => items.iter().map(|x| as_number(x, &o)).collect(),
                _ => as_number(&v, &o).map(|x| vec![x]),
            })
            .transpose()
    }

    fn strings(&mut self, key: &str) -> Result<Option<(Vec<String>, Origin)>> {
        self.take(key)
            .map(|(v, o)| match v {
                Value::Array(items) => items
                    .into_iter()
                    .map(|x| match x {
                        Value::String(s) => Ok(s),
                        other => Err(o.expected("an array of strings", &other)),
                    })
                    .collect::<Result<Vec<_>>>()
                    .map(|s| (s, o)),
                Value::String(s) => Ok((s.split(',').map(|t| t.trim().to_string()).collect(), o)),
                other => Err(o.expected("an array of strings", &other)),
            })
            .transpose()
    }

    fn number_lists(&mut self, key: &str) -> Result<Option<Vec<Vec<f64>>>> {
        self.take(key)
            .map(|(v, o)| match &v {
                Value::Array(rows) => rows
                    .iter()
                    .map(|row| match row {
                        Value::Array(items) => items.iter().map(|x| as_number(x, &o)).collect(),
                        other => Err(o.expected("an array of number arrays", other)),
                    })
                    .collect(),
                other => Err(o.expected("an array of number arrays", other)),
            })
            .transpose()
    }
}

/// Where a value came from, for error messages.
#[derive(Debug, Clone)]
struct Origin {
    key: String,
    line: Option<usize>,
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.line {
            Some(l) => write!(f, "`{}` (line {l})", self.key),
            None => write!(f, "`{}` (override)", self.key),
        }
    }
}

impl Origin {
    fn expected(&self, what: &str, found: &Value) -> CliError {
        CliError::config(format!("{self}: expected {what}, found {}", found.type_str()))
    }

    fn invalid(&self, msg: impl fmt::Display) -> CliError {
        CliError::config(format!("{self}: {msg}"))
    }
}

fn as_number(v: &Value, o: &Origin) -> Result<f64> {
    match v {
        Value::Float(x) => Ok(*x),
        Value::Integer(i) => Ok(*i as f64),
        other => Err(o.expected("a number", other)),
    }
}

fn parse_value(raw: &str) -> Value {
    toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| Value::String(raw.to_string()))
}

fn flatten(prefix: &str, table: toml::Table, sink: &mut impl FnMut(String, Value)) -> Result<()> {
    for (k, v) in table {
        let key = if prefix.is_empty() { k } else { format!("{prefix}.{k}") };
        match v {
            Value::Table(inner) => flatten(&key, inner, sink)?,
            Value::Array(items) if items.iter().any(Value::is_table) => {
                return Err(CliError::config(format!("`{key}`: arrays of tables are not supported")));
            }
            other => sink(key, other),
        }
    }
    Ok(())
}

/// First line on which each dotted key is assigned, honouring `[section]`
/// headers. Quoted key parts are unquoted.
fn key_lines(text: &str) -> BTreeMap<String, usize> {
    let mut out = BTreeMap::new();
    let mut section = String::new();
    let clean =
        |s: &str| s.split('.').map(|p| p.trim().trim_matches('"').trim_matches('\'')).collect::<Vec<_>>().join(".");
    for (i, line) in text.lines().enumerate() {
        let t = line.trim();
        if t.starts_with('#') || t.is_empty() {
            continue;
        }
        if let Some(h) = t.strip_prefix('[').and_then(|r| r.split(']').next()) {
            section = clean(h);
            continue;
        }
        if let Some((k, _)) = t.split_once('=') {
            let k = clean(k);
            let full = if section.is_empty() { k } else { format!("{section}.{k}") };
            out.entry(full).or_insert(i + 1);
        }
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    Quadrature,
    Mc,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "quadrature" => Ok(Self::Quadrature),
            "mc" => Ok(Self::Mc),
            other => Err(format!("unknown method `{other}` (expected quadrature or mc)")),
        }
    }
}

/// Evenly spaced grid including both ends.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub min: f64,
    pub max: f64,
    pub steps: usize,
}

impl Grid {
    pub fn points(&self) -> Vec<f64> {
        let span = self.max - self.min;
        (0..self.steps).map(|i| self.min + span * i as f64 / (self.steps - 1) as f64).collect()
    }

    fn validate(&self, name: &str) -> Result<()> {
        if self.steps < 2 {
            return Err(CliError::config(format!("{name}.steps must be at least 2, got {}", self.steps)));
        }
        if !(self.min.is_finite() && self.max.is_finite() && self.max > self.min) {
            return Err(CliError::config(format!("{name}: need finite min < max, got [{}, {}]", self.min, self.max)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DominanceSettings {
    pub estimator: PointEstimator,
    /// Alphas for the reflected-normal and working-variance maps.
    pub alphas: Vec<f64>,
    /// Expansion `c` used in those maps.
    pub expansion: f64,
    /// Multipliers combined into the persistence table.
    pub a_grid: Vec<f64>,
    /// Extra schemes `(a1^2, a2^2, aY^2)` reported one by one.
    pub schemes: Vec<MisspecScheme>,
}

impl Default for DominanceSettings {
    fn default() -> Self {
        Self {
            estimator: PointEstimator::RestrictedMle,
            alphas: vec![-0.5, 0.0, 0.5],
            expansion: 2.0,
            a_grid: vec![0.25, 0.5, 1.0, 2.0, 4.0],
            schemes: vec![MisspecScheme::identity()],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensitySettings {
    pub estimator: Estimator,
    pub x1: Vec<f64>,
    pub x2: Vec<f64>,
    /// Grid for the first coordinate of `y`; other coordinates sit at `x1`.
    pub y: Grid,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub spec: ProblemSpec,
    pub loss: LossSpec,
    pub estimators: Vec<Estimator>,
    pub grid: Grid,
    pub method: Method,
    pub mc_samples: usize,
    pub seed: u64,
    pub misspec: Option<MisspecScheme>,
    pub output: Option<PathBuf>,
    pub dominance: DominanceSettings,
    pub density: DensitySettings,
}

pub const DEFAULT_SEED: u64 = 20_240_917;

/// Estimators shown in the risk-ratio figures.
pub fn figure_estimators() -> Vec<Estimator> {
    vec![Estimator::Mre, Estimator::Mle(1.0), Estimator::Mle(2.0), Estimator::BayesUniform]
}

impl Default for ExperimentConfig {
    /// Order constraint, unit variances, Kullback–Leibler loss.
    fn default() -> Self {
        Self {
            spec: ProblemSpec::unit(ConstraintSet::order(1)).expect("unit variances are valid"),
            loss: LossSpec::kl(),
            estimators: figure_estimators(),
            grid: Grid { min: 0.0, max: 5.0, steps: 31 },
            method: Method::Quadrature,
            mc_samples: 100_000,
            seed: DEFAULT_SEED,
            misspec: None,
            output: None,
            dominance: DominanceSettings::default(),
            density: DensitySettings {
                estimator: Estimator::BayesUniform,
                x1: vec![0.0],
                x2: vec![0.0],
                y: Grid { min: -4.0, max: 4.0, steps: 81 },
            },
        }
    }
}

impl ExperimentConfig {
    /// Reads an optional file, applies overrides, and validates.
    pub fn load(path: Option<&Path>, overrides: &Document) -> Result<Self> {
        let mut doc = match path {
            Some(p) => Document::load(p)?,
            None => Document::default(),
        };
        doc.merge(overrides);
        Self::from_document(doc)
    }

    pub fn from_document(mut doc: Document) -> Result<Self> {
        let base = Self::default();
        let spec = read_spec(&mut doc)?;
        let p = spec.p();

        let loss = match doc.take("loss.alpha") {
            Some((v, o)) => LossSpec::new(as_number(&v, &o)?).map_err(|e| o.invalid(e))?,
            None => base.loss,
        };

        let estimators = match doc.strings("estimators")? {
            Some((names, o)) => {
                if names.is_empty() {
                    return Err(o.invalid("needs at least one estimator"));
                }
                names
                    .iter()
                    .enumerate()
                    .map(|(i, n)| n.parse::<Estimator>().map_err(|e| o.invalid(format!("entry {i}: {e}"))))
                    .collect::<Result<Vec<_>>>()?
            }
            None => base.estimators,
        };

        let grid = read_grid(&mut doc, "grid", base.grid)?;

        let method = match doc.string("method")? {
            Some((s, o)) => s.parse::<Method>().map_err(|e| o.invalid(e))?,
            None => base.method,
        };
        let floor = if method == Method::Mc { 1000 } else { 100 };
        let mc_samples = match doc.integer_at_least("mc.samples", 1)? {
            Some((n, o)) if n < floor => {
                let name = if method == Method::Mc { "mc" } else { "quadrature" };
                return Err(o.invalid(format!("must be at least {floor} with method {name}, got {n}")));
            }
            Some((n, _)) => n as usize,
            None => base.mc_samples,
        };
        let seed = match doc.integer("seed")? {
            Some(s) if s >= 0 => s as u64,
            Some(s) => return Err(CliError::config(format!("seed must be nonnegative, got {s}"))),
            None => base.seed,
        };

        let a1 = doc.number("misspec.a1_sq")?;
        let a2 = doc.number("misspec.a2_sq")?;
        let ay = doc.number("misspec.ay_sq")?;
        let misspec = if a1.is_some() || a2.is_some() || ay.is_some() {
            let m = MisspecScheme::new(a1.unwrap_or(1.0), a2.unwrap_or(1.0), ay.unwrap_or(1.0))
                .map_err(|e| CliError::config(format!("misspec: {e}")))?;
            Some(m)
        } else {
            None
        };

        let output = doc.string("output")?.map(|(s, _)| PathBuf::from(s));

        let dominance = read_dominance(&mut doc, base.dominance)?;
        let density = read_density(&mut doc, p)?;

        if let Some(key) = doc.keys().next() {
            let line = doc.entries[key].line;
            let o = Origin { key: key.to_string(), line };
            return Err(o.invalid("unknown key"));
        }

        Ok(Self { spec, loss, estimators, grid, method, mc_samples, seed, misspec, output, dominance, density })
    }
}

fn read_spec(doc: &mut Document) -> Result<ProblemSpec> {
    let p = match doc.take("spec.p") {
        None => 1,
        Some((v, o)) => match v.as_integer() {
            Some(p) if p >= 1 => p as usize,
            Some(p) => return Err(o.invalid(format!("must be at least 1, got {p}"))),
            None => return Err(o.expected("an integer", &v)),
        },
    };
    let s1 = doc.positive("spec.sigma1_sq", 1.0)?;
    let s2 = doc.positive("spec.sigma2_sq", 1.0)?;
    let sy = doc.positive("spec.sigma_y_sq", 1.0)?;
    let kind = doc.string("spec.constraint")?;
    let half_width = doc.take("spec.half_width");
    let radius = doc.take("spec.radius");
    let half_widths = doc.take("spec.half_widths");
    let lower = doc.take("spec.lower");

    let (kind_name, kind_origin) = match kind {
        Some((k, o)) => (k, Some(o)),
        None => ("order".to_string(), None),
    };
    let wrong = |o: &Origin| o.invalid(format!("does not apply to constraint `{kind_name}`"));
    let required = |what: &str| CliError::config(format!("constraint `{kind_name}` needs spec.{what}"));
    let list = |v: &Value, o: &Origin| -> Result<Vec<f64>> {
        match v {
            Value::Array(items) => items.iter().map(|x| as_number(x, o)).collect(),
            _ => Ok(vec![as_number(v, o)?; p]),
        }
    };

    let used = match kind_name.as_str() {
        "order" => Ok(ConstraintSet::order(p)),
        "unconstrained" => Ok(ConstraintSet::unconstrained(p)),
        "interval" => {
            let (v, o) = half_width.clone().ok_or_else(|| required("half_width"))?;
            if p != 1 {
                return Err(o.invalid("an interval needs spec.p = 1; use `rectangle` for p > 1"));
            }
            ConstraintSet::interval(as_number(&v, &o)?).map_err(|e| o.invalid(e))
        }
        "rectangle" => {
            let (v, o) = half_widths.clone().ok_or_else(|| required("half_widths"))?;
            ConstraintSet::rectangle(list(&v, &o)?).map_err(|e| o.invalid(e))
        }
        "half-lines" => {
            let (v, o) = lower.clone().ok_or_else(|| required("lower"))?;
            ConstraintSet::half_lines(list(&v, &o)?).map_err(|e| o.invalid(e))
        }
        "ball" => {
            let (v, o) = radius.clone().ok_or_else(|| required("radius"))?;
            ConstraintSet::ball(p, as_number(&v, &o)?).map_err(|e| o.invalid(e))
        }
        other => {
            let o = kind_origin.expect("named constraint has an origin");
            return Err(o.invalid(format!(
                "unknown constraint `{other}` (expected order, unconstrained, interval, rectangle, half-lines or ball)"
            )));
        }
    };
    let constraint = used?;
    for (key, entry) in
        [("interval", &half_width), ("rectangle", &half_widths), ("half-lines", &lower), ("ball", &radius)]
    {
        if let Some((_, o)) = entry {
            if kind_name != key {
                return Err(wrong(o));
            }
        }
    }
    if constraint.dim() != p {
        return Err(CliError::config(format!("spec: constraint has dimension {} but spec.p = {p}", constraint.dim())));
    }
    ProblemSpec::new(s1, s2, sy, constraint).map_err(|e| CliError::config(format!("spec: {e}")))
}

fn read_grid(doc: &mut Document, name: &str, base: Grid) -> Result<Grid> {
    let min = doc.number(&format!("{name}.min"))?.unwrap_or(base.min);
    let max = doc.number(&format!("{name}.max"))?.unwrap_or(base.max);
    let steps = doc.integer_at_least(&format!("{name}.steps"), 2)?.map_or(base.steps, |(s, _)| s as usize);
    let grid = Grid { min, max, steps };
    grid.validate(name)?;
    Ok(grid)
}

fn read_dominance(doc: &mut Document, base: DominanceSettings) -> Result<DominanceSettings> {
    let estimator = match doc.string("dominance.estimator")? {
        Some((s, o)) => match s.as_str() {
            "mle" => PointEstimator::RestrictedMle,
            "x1" | "identity" => PointEstimator::Unrestricted,
            other => return Err(o.invalid(format!("unknown point estimator `{other}` (expected mle or x1)"))),
        },
        None => base.estimator,
    };
    let alphas = doc.numbers("dominance.alphas")?.unwrap_or(base.alphas);
    if let Some(a) = alphas.iter().find(|a| !(a.abs() < 1.0)) {
        return Err(CliError::config(format!("dominance.alphas: each alpha must lie in (-1, 1), got {a}")));
    }
    let expansion = doc.number("dominance.expansion")?.unwrap_or(base.expansion);
    if !(expansion > 0.0 && expansion.is_finite()) {
        return Err(CliError::config(format!("dominance.expansion must be positive, got {expansion}")));
    }
    let a_grid = doc.numbers("dominance.a_grid")?.unwrap_or(base.a_grid);
    if a_grid.is_empty() || a_grid.iter().any(|a| !(*a > 0.0 && a.is_finite())) {
        return Err(CliError::config("dominance.a_grid needs positive finite multipliers"));
    }
    let schemes = match doc.number_lists("dominance.schemes")? {
        Some(rows) => rows
            .iter()
            .enumerate()
            .map(|(i, r)| match r.as_slice() {
                [a1, a2, ay] => MisspecScheme::new(*a1, *a2, *ay)
                    .map_err(|e| CliError::config(format!("dominance.schemes entry {i}: {e}"))),
                _ => Err(CliError::config(format!(
                    "dominance.schemes entry {i}: expected [a1_sq, a2_sq, ay_sq], got {} values",
                    r.len()
                ))),
            })
            .collect::<Result<Vec<_>>>()?,
        None => base.schemes,
    };
    Ok(DominanceSettings { estimator, alphas, expansion, a_grid, schemes })
}

fn read_density(doc: &mut Document, p: usize) -> Result<DensitySettings> {
    let estimator = match doc.string("density.estimator")? {
        Some((s, o)) => s.parse::<Estimator>().map_err(|e| o.invalid(e))?,
        None => Estimator::BayesUniform,
    };
    let x1 = doc.numbers("density.x1")?.unwrap_or_else(|| vec![0.0; p]);
    let x2 = doc.numbers("density.x2")?.unwrap_or_else(|| vec![0.0; p]);
    for (name, v) in [("density.x1", &x1), ("density.x2", &x2)] {
        if v.len() != p {
            return Err(CliError::config(format!("{name} has {} entries but spec.p = {p}", v.len())));
        }
    }
    let y = read_grid(doc, "density.y", Grid { min: -4.0, max: 4.0, steps: 81 })?;
    Ok(DensitySettings { estimator, x1, x2, y })
}

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use predens_cli::commands::{density_table, dominance_report, figure, plot_data, risk_curve, to_csv};
use predens_cli::config::{Document, ExperimentConfig};
use predens_cli::verify::{self, Level};
use predens_cli::{CliError, Result};
use toml::Value;

/// Predictive density risk under a constraint on the mean difference.
#[derive(Parser)]
#[command(name = "predens", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Risk of each configured estimator along a grid of differences.
    RiskCurve(Common),
    /// Regenerate the data behind one of the preset figures (1-4).
    Figure {
        id: u8,
        /// Also write whitespace-separated ratio columns for plotting.
        #[arg(long)]
        plot_data: Option<PathBuf>,
        #[command(flatten)]
        common: Common,
    },
    /// Expansion intervals, dual-loss parameters and persistence under
    /// misspecification.
    Dominance(Common),
    /// Evaluate a predictive density along a line of `y` values.
    DensityEval(Common),
    /// Run the built-in numerical self-checks.
    Verify {
        #[arg(long, default_value = "fast")]
        level: Level,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args, Default)]
#[command(allow_negative_numbers = true)]
struct Common {
    /// TOML experiment file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override any config key, e.g. `--set spec.p=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    sigma1_sq: Option<f64>,
    #[arg(long)]
    sigma2_sq: Option<f64>,
    #[arg(long)]
    sigma_y_sq: Option<f64>,
    /// order, unconstrained, interval, rectangle, half-lines or ball.
    #[arg(long)]
    constraint: Option<String>,
    #[arg(long)]
    alpha: Option<f64>,
    /// Comma-separated, e.g. `mre,mle:2,bayes-uniform`.
    #[arg(long)]
    estimators: Option<String>,
    #[arg(long)]
    delta_min: Option<f64>,
    #[arg(long)]
    delta_max: Option<f64>,
    #[arg(long)]
    steps: Option<i64>,
    /// quadrature or mc.
    #[arg(long)]
    method: Option<String>,
    #[arg(long)]
    samples: Option<i64>,
    #[arg(long)]
    seed: Option<i64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

impl Common {
    fn overrides(&self) -> Result<Document> {
        let mut doc = Document::default();
        let floats = [
            ("spec.sigma1_sq", self.sigma1_sq),
            ("spec.sigma2_sq", self.sigma2_sq),
            ("spec.sigma_y_sq", self.sigma_y_sq),
            ("loss.alpha", self.alpha),
            ("grid.min", self.delta_min),
            ("grid.max", self.delta_max),
        ];
        for (key, v) in floats {
            if let Some(v) = v {
                doc.set(key, Value::Float(v));
            }
        }
        for (key, v) in [("grid.steps", self.steps), ("mc.samples", self.samples), ("seed", self.seed)] {
            if let Some(v) = v {
                doc.set(key, Value::Integer(v));
            }
        }
        let strings = [
            ("spec.constraint", self.constraint.clone()),
            ("estimators", self.estimators.clone()),
            ("method", self.method.clone()),
            ("output", self.output.as_ref().map(|p| p.display().to_string())),
        ];
        for (key, v) in strings {
            if let Some(v) = v {
                doc.set(key, Value::String(v));
            }
        }
        // `--set` wins over the named flags.
        for s in &self.set {
            doc.set_raw(s)?;
        }
        Ok(doc)
    }

    fn load(&self) -> Result<ExperimentConfig> {
        ExperimentConfig::load(self.config.as_deref(), &self.overrides()?)
    }
}

fn emit(text: &str, output: Option<&Path>) -> Result<()> {
    match output {
        Some(path) => fs::write(path, text).map_err(|source| CliError::Io { path: path.to_path_buf(), source }),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes()).map_err(|source| CliError::Io { path: PathBuf::from("<stdout>"), source })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::RiskCurve(common) => {
            let cfg = common.load()?;
            emit(&to_csv(&risk_curve(&cfg)?), cfg.output.as_deref())
        }
        Command::Figure { id, plot_data: plot_path, common } => {
            let mut overrides = common.overrides()?;
            if let Some(path) = &common.config {
                let mut file = Document::load(path)?;
                file.merge(&overrides);
                overrides = file;
            }
            let output = common.output.clone();
            let rows = figure(id, &overrides)?;
            if let Some(path) = plot_path {
                emit(&plot_data(&rows), Some(&path))?;
            }
            emit(&to_csv(&rows), output.as_deref())
        }
        Command::Dominance(common) => {
            let cfg = common.load()?;
            emit(&dominance_report(&cfg)?, cfg.output.as_deref())
        }
        Command::DensityEval(common) => {
            let cfg = common.load()?;
            emit(&density_table(&cfg)?, cfg.output.as_deref())
        }
        Command::Verify { level, seed } => {
            let results = verify::run(level, seed.unwrap_or(predens_cli::config::DEFAULT_SEED));
            for r in &results {
                println!("{r}");
            }
            let failed = results.iter().filter(|r| !r.passed).count();
            println!("{} of {} checks passed", results.len() - failed, results.len());
            if failed > 0 {
                return Err(CliError::Verification { failed, total: results.len() });
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version requests print and succeed; malformed
            // arguments are validation errors.
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("predens: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

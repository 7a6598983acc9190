//! Config-driven experiment runner for stratified measures.
//!
//! `strata-lab <kind> --config measure.toml --seed 7 ...` builds the measure,
//! runs the named experiment and writes one CSV row per reported quantity.
//! `strata-lab validate --config measure.toml` lists problems without
//! running anything.

pub mod config;
pub mod experiments;
pub mod report;
pub mod svg;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::Parser;
use strata_core::aep::{AepError, Runner};
use strata_core::dyadic::DyadicError;
use strata_core::typicality::TypicalityError;
use strata_core::MeasureError;
use thiserror::Error;

use config::{parse_ns, ConfigFile, ExperimentSection, Format, Params};
use experiments::{registry, stream_key, Context};
use report::{write_csv, RowTemplate};

pub const EXIT_OK: u8 = 0;
pub const EXIT_IO: u8 = 1;
pub const EXIT_VALIDATION: u8 = 2;
pub const EXIT_DEGENERATE: u8 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("estimator degenerate: {0}")]
    Degenerate(String),
    #[error("io: {0}")]
    Io(#[from] io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => EXIT_VALIDATION,
            CliError::Degenerate(_) => EXIT_DEGENERATE,
            CliError::Io(_) | CliError::Csv(_) => EXIT_IO,
        }
    }

    fn invalid(msg: impl ToString) -> Self {
        CliError::Validation(vec![msg.to_string()])
    }
}

impl From<AepError> for CliError {
    fn from(e: AepError) -> Self {
        match e {
            AepError::DegenerateWeights | AepError::Measure(MeasureError::InfiniteScore { .. }) => {
                CliError::Degenerate(e.to_string())
            }
            other => CliError::invalid(other),
        }
    }
}

impl From<MeasureError> for CliError {
    fn from(e: MeasureError) -> Self {
        match e {
            MeasureError::InfiniteScore { .. } => CliError::Degenerate(e.to_string()),
            other => CliError::invalid(other),
        }
    }
}

impl From<DyadicError> for CliError {
    fn from(e: DyadicError) -> Self {
        CliError::invalid(e)
    }
}

impl From<TypicalityError> for CliError {
    fn from(e: TypicalityError) -> Self {
        CliError::invalid(e)
    }
}

/// `Name: message`, with the name taken from the error variant.
pub fn diagnostic_line(e: &MeasureError) -> String {
    let debug = format!("{e:?}");
    let name = debug.split(|c: char| !c.is_alphanumeric()).next().unwrap_or_default();
    format!("{name}: {e}")
}

#[derive(Debug, Clone, Parser)]
#[command(name = "strata-lab", version = report::BUILD_ID, about)]
pub struct Cli {
    /// Experiment kind (aep, diagnose, dims, entropy, renyi, stratum) or `validate`.
    pub command: String,
    /// Measure file, optionally with an `[experiment]` table.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated sequence lengths.
    #[arg(long)]
    pub n: Option<String>,
    #[arg(long)]
    pub delta: Option<f64>,
    #[arg(long)]
    pub xi: Option<f64>,
    /// Tightness slack for `diagnose`.
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub trials: Option<usize>,
    /// Dyadic levels, `lo:hi` inclusive or a single level.
    #[arg(long)]
    pub levels: Option<String>,
    /// Worker count; results depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
    /// Number of label sequences sampled by `stratum` and `diagnose`.
    #[arg(long)]
    pub strata: Option<usize>,
    /// Quantized-entropy estimator for `dims`: exact, plug-in or miller-madow.
    #[arg(long)]
    pub estimator: Option<String>,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// csv, or svg to also write a line plot next to the CSV.
    #[arg(long)]
    pub format: Option<String>,
}

impl Cli {
    fn flags(&self) -> Result<ExperimentSection, CliError> {
        Ok(ExperimentSection {
            seed: self.seed,
            n: self.n.as_deref().map(parse_ns).transpose().map_err(CliError::invalid)?,
            delta: self.delta,
            xi: self.xi,
            epsilon: self.epsilon,
            trials: self.trials,
            levels: self.levels.clone(),
            threads: self.threads,
            strata: self.strata,
            estimator: self.estimator.clone(),
            out: self.out.clone(),
            format: self.format.clone(),
        })
    }
}

/// Print diagnostics to `out`, one per line; returns how many there were.
pub fn validate(path: &Path, mut out: impl Write) -> Result<usize, CliError> {
    let lines = match ConfigFile::load(path) {
        Ok(cfg) => cfg.diagnostics(),
        Err(CliError::Validation(errs)) => errs,
        Err(e) => return Err(e),
    };
    for line in &lines {
        writeln!(out, "{line}")?;
    }
    Ok(lines.len())
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    if cli.command == "validate" {
        return match validate(&cli.config, io::stdout().lock())? {
            0 => Ok(()),
            k => Err(CliError::Validation(vec![format!("{k} problem(s) found")])),
        };
    }
    let experiments = registry();
    let experiment = experiments.get(cli.command.as_str()).ok_or_else(|| {
        let known: Vec<_> = experiments.keys().copied().collect();
        CliError::invalid(format!(
            "unknown experiment `{}`; expected validate or one of {}",
            cli.command,
            known.join(", ")
        ))
    })?;
    let file = ConfigFile::load(&cli.config)?;
    let params = Params::resolve(cli.flags()?.or(file.experiment.clone())).map_err(CliError::Validation)?;
    let measure = file.measure()?;
    let plot_wanted = params.format == Format::Svg;
    if plot_wanted && experiment.plot(&[]).is_none() {
        return Err(CliError::invalid(format!("`{}` has no plot; use --format csv", experiment.name())));
    }
    // a second run in one process keeps the first pool, which is fine for
    // output since results depend only on the worker count
    let _ = rayon::ThreadPoolBuilder::new().num_threads(params.threads).build_global();

    let config_name = cli.config.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    let ctx = Context {
        measure: &measure,
        params: &params,
        template: RowTemplate::new(experiment.name(), config_name, &params),
        runner: Runner::new(params.seed, params.threads).child(stream_key(experiment.name())),
    };
    let rows = experiment.run(&ctx)?;

    match &params.out {
        Some(path) => {
            write_csv(&rows, BufWriter::new(File::create(path)?))?;
            if plot_wanted {
                if let Some(plot) = experiment.plot(&rows) {
                    std::fs::write(path.with_extension("svg"), plot.render())?;
                }
            }
        }
        None => write_csv(&rows, io::stdout().lock())?,
    }
    Ok(())
}

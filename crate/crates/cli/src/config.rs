//! Experiment configuration: a measure file with an optional `[experiment]`
//! table, overridden by command-line flags.

use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};

use serde::Deserialize;
use strata_core::dyadic::{ESTIMATOR_NAMES, MAX_LEVEL};
use strata_core::measure::{MeasureSpec, StratifiedMeasure};
use strata_core::typicality::{DEFAULT_DELTA, DEFAULT_XI};

use crate::{diagnostic_line, CliError};

/// Parameters accepted in the `[experiment]` table. Every key is optional.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub seed: Option<u64>,
    pub n: Option<Vec<usize>>,
    pub delta: Option<f64>,
    pub xi: Option<f64>,
    pub epsilon: Option<f64>,
    pub trials: Option<usize>,
    pub levels: Option<String>,
    pub threads: Option<usize>,
    pub strata: Option<usize>,
    pub estimator: Option<String>,
    pub out: Option<PathBuf>,
    pub format: Option<String>,
}

impl ExperimentSection {
    /// Fill unset fields from `other`; fields set here win.
    pub fn or(self, other: ExperimentSection) -> Self {
        Self {
            seed: self.seed.or(other.seed),
            n: self.n.or(other.n),
            delta: self.delta.or(other.delta),
            xi: self.xi.or(other.xi),
            epsilon: self.epsilon.or(other.epsilon),
            trials: self.trials.or(other.trials),
            levels: self.levels.or(other.levels),
            threads: self.threads.or(other.threads),
            strata: self.strata.or(other.strata),
            estimator: self.estimator.or(other.estimator),
            out: self.out.or(other.out),
            format: self.format.or(other.format),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Svg,
}

/// Fully resolved experiment parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    pub seed: u64,
    pub ns: Vec<usize>,
    pub delta: f64,
    pub xi: f64,
    pub epsilon: f64,
    pub trials: usize,
    pub levels: RangeInclusive<u32>,
    pub threads: usize,
    pub strata: usize,
    pub estimator: String,
    pub out: Option<PathBuf>,
    pub format: Format,
}

pub const DEFAULT_N: usize = 100;
pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_STRATA: usize = 20;
pub const DEFAULT_EPSILON: f64 = 0.3;

/// Parse `"a:b"` (inclusive) or a single level `"a"`.
pub fn parse_levels(text: &str) -> Result<RangeInclusive<u32>, String> {
    let parse = |s: &str| s.trim().parse::<u32>().map_err(|_| format!("bad level `{s}` in `{text}`"));
    let (lo, hi) = match text.split_once(':') {
        Some((a, b)) => (parse(a)?, parse(b)?),
        None => {
            let l = parse(text)?;
            (l, l)
        }
    };
    if lo > hi {
        return Err(format!("empty level range `{text}`"));
    }
    if hi > MAX_LEVEL {
        return Err(format!("level {hi} exceeds {MAX_LEVEL}"));
    }
    Ok(lo..=hi)
}

/// Parse a comma-separated list of sequence lengths.
pub fn parse_ns(text: &str) -> Result<Vec<usize>, String> {
    text.split(',')
        .map(|s| s.trim().parse::<usize>().map_err(|_| format!("bad length `{s}` in `{text}`")))
        .collect()
}

impl Params {
    /// Resolve defaults and list every range violation.
    pub fn resolve(section: ExperimentSection) -> Result<Self, Vec<String>> {
        let mut errors = Vec::new();
        let seed = section.seed.unwrap_or_else(|| {
            errors.push("seed is required (--seed or `seed` in [experiment])".to_string());
            0
        });
        let ns = section.n.unwrap_or_else(|| vec![DEFAULT_N]);
        if ns.is_empty() || ns.contains(&0) {
            errors.push("every n must be at least 1".to_string());
        }
        let delta = section.delta.unwrap_or(DEFAULT_DELTA);
        if delta.is_nan() || delta < 0.0 {
            errors.push(format!("delta = {delta} must be non-negative"));
        }
        let xi = section.xi.unwrap_or(DEFAULT_XI);
        if !(xi > 0.0 && xi < 0.5) {
            errors.push(format!("xi = {xi} must lie in (0, 1/2)"));
        }
        let epsilon = section.epsilon.unwrap_or(DEFAULT_EPSILON);
        if epsilon.is_nan() || epsilon <= 0.0 {
            errors.push(format!("epsilon = {epsilon} must be positive"));
        }
        let trials = section.trials.unwrap_or(DEFAULT_TRIALS);
        let levels = match section.levels.as_deref().map(parse_levels) {
            None => strata_core::dyadic::DEFAULT_LEVELS,
            Some(Ok(r)) => r,
            Some(Err(e)) => {
                errors.push(e);
                strata_core::dyadic::DEFAULT_LEVELS
            }
        };
        let threads = section.threads.unwrap_or(1);
        if threads == 0 {
            errors.push("threads must be at least 1".to_string());
        }
        let strata = section.strata.unwrap_or(DEFAULT_STRATA);
        let estimator = section.estimator.unwrap_or_else(|| "exact".to_string());
        if !ESTIMATOR_NAMES.contains(&estimator.as_str()) {
            errors.push(format!(
                "unknown estimator `{estimator}`; expected one of {}",
                ESTIMATOR_NAMES.join(", ")
            ));
        }
        let format = match section.format.as_deref() {
            None | Some("csv") => Format::Csv,
            Some("svg") => Format::Svg,
            Some(other) => {
                errors.push(format!("unknown format `{other}`; expected csv or svg"));
                Format::Csv
            }
        };
        if format == Format::Svg && section.out.is_none() {
            errors.push("--format svg needs --out".to_string());
        }
        if !errors.is_empty() {
            return Err(errors);
        }
        Ok(Self {
            seed,
            ns,
            delta,
            xi,
            epsilon,
            trials,
            levels,
            threads,
            strata,
            estimator,
            out: section.out,
            format,
        })
    }
}

/// A parsed config file: the measure spec and the `[experiment]` table.
#[derive(Debug, Clone)]
pub struct ConfigFile {
    pub path: PathBuf,
    pub spec: MeasureSpec,
    pub experiment: ExperimentSection,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Validation(vec![format!("{}: {e}", path.display())]))?;
        Self::parse(path, &text)
    }

    pub fn parse(path: &Path, text: &str) -> Result<Self, CliError> {
        let invalid = |msg: String| CliError::Validation(vec![format!("{}: {msg}", path.display())]);
        let mut table: toml::Table = text.parse().map_err(|e: toml::de::Error| invalid(e.to_string()))?;
        let experiment = match table.remove("experiment") {
            None => ExperimentSection::default(),
            Some(value) => {
                value.try_into().map_err(|e: toml::de::Error| invalid(format!("[experiment]: {e}")))?
            }
        };
        let spec = MeasureSpec::from_table(table).map_err(|e| invalid(e.to_string()))?;
        Ok(Self { path: path.to_path_buf(), spec, experiment })
    }

    pub fn measure(&self) -> Result<StratifiedMeasure, CliError> {
        self.spec.build().map_err(|_| {
            CliError::Validation(self.spec.diagnostics().into_iter().map(|e| diagnostic_line(&e)).collect())
        })
    }

    /// Every violation in the measure and the experiment table.
    pub fn diagnostics(&self) -> Vec<String> {
        let mut out: Vec<String> = self.spec.diagnostics().iter().map(diagnostic_line).collect();
        let mut section = self.experiment.clone();
        // the seed may come from the command line, so it is not required here
        section.seed.get_or_insert(0);
        if let Err(errs) = Params::resolve(section) {
            out.extend(errs.into_iter().map(|e| format!("InvalidParameter: {e}")));
        }
        out
    }
}

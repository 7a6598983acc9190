//! Report rows and their CSV encoding.

use std::io::Write;

use serde::Serialize;
use strata_core::EstimateWithCI;

use crate::config::Params;

/// Build identifier baked in at compile time: `<version>+<git rev>`.
pub const BUILD_ID: &str = env!("STRATA_BUILD_ID");

/// One CSV line. Parameters that do not apply to a row are left blank.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Row {
    pub experiment: &'static str,
    pub config: String,
    pub quantity: &'static str,
    pub n: Option<usize>,
    pub delta: Option<f64>,
    pub xi: Option<f64>,
    pub epsilon: Option<f64>,
    pub trials: Option<usize>,
    pub level: Option<u32>,
    pub index: Option<usize>,
    pub method: &'static str,
    pub seed: u64,
    pub threads: usize,
    pub estimate: f64,
    pub se: f64,
    pub bound_low: Option<f64>,
    pub bound_high: Option<f64>,
    pub pass: Option<bool>,
    pub build: &'static str,
}

/// Shared fields for the rows of one run.
#[derive(Debug, Clone)]
pub struct RowTemplate {
    experiment: &'static str,
    config: String,
    seed: u64,
    threads: usize,
}

impl RowTemplate {
    pub fn new(experiment: &'static str, config: String, params: &Params) -> Self {
        Self { experiment, config, seed: params.seed, threads: params.threads }
    }

    pub fn row(&self, quantity: &'static str, estimate: &EstimateWithCI) -> Row {
        Row {
            experiment: self.experiment,
            config: self.config.clone(),
            quantity,
            n: None,
            delta: None,
            xi: None,
            epsilon: None,
            trials: None,
            level: None,
            index: None,
            method: estimate.method.as_str(),
            seed: self.seed,
            threads: self.threads,
            estimate: estimate.value,
            se: estimate.standard_error,
            bound_low: None,
            bound_high: None,
            pass: None,
            build: BUILD_ID,
        }
    }

    /// Row for a closed-form value.
    pub fn exact(&self, quantity: &'static str, value: f64) -> Row {
        self.row(quantity, &EstimateWithCI::exhaustive(value))
    }
}

impl Row {
    pub fn n(mut self, n: usize) -> Self {
        self.n = Some(n);
        self
    }

    pub fn typicality(mut self, delta: f64, xi: f64) -> Self {
        self.delta = Some(delta);
        self.xi = Some(xi);
        self
    }

    pub fn delta(mut self, delta: f64) -> Self {
        self.delta = Some(delta);
        self
    }

    pub fn epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn trials(mut self, trials: usize) -> Self {
        self.trials = Some(trials);
        self
    }

    pub fn level(mut self, level: u32) -> Self {
        self.level = Some(level);
        self
    }

    pub fn index(mut self, index: usize) -> Self {
        self.index = Some(index);
        self
    }

    pub fn method(mut self, method: &'static str) -> Self {
        self.method = method;
        self
    }

    /// Attach `[low, high]` and mark the row passing when the estimate is
    /// within `slack` of the interval.
    pub fn within(mut self, low: Option<f64>, high: Option<f64>, slack: f64) -> Self {
        self.bound_low = low;
        self.bound_high = high;
        let above = low.is_none_or(|l| self.estimate >= l - slack);
        let below = high.is_none_or(|h| self.estimate <= h + slack);
        self.pass = Some(above && below);
        self
    }

    /// Attach bounds for reference without a pass verdict.
    pub fn reference(mut self, low: Option<f64>, high: Option<f64>) -> Self {
        self.bound_low = low;
        self.bound_high = high;
        self
    }

    pub fn pass(mut self, pass: bool) -> Self {
        self.pass = Some(pass);
        self
    }
}

pub fn write_csv<W: Write>(rows: &[Row], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

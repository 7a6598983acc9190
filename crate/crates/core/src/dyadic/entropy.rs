use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use serde::Serialize;

use super::{cell_index, cell_table, DyadicError};
use crate::measure::StratifiedMeasure;
use crate::rng::RandomStream;
use crate::stats::{accurate_sum, least_squares, EstimateWithCI, LinearFit, Method};

pub const MIN_PLUG_IN_SAMPLES: usize = 1000;
pub const R_SQUARED_WARNING: f64 = 0.999;
pub const DEFAULT_LEVELS: RangeInclusive<u32> = 3..=10;

/// A way of computing the quantized entropy `H_#(X_{2^ℓ})`.
pub trait QuantizedEntropyEstimator: Send + Sync {
    fn name(&self) -> &'static str;
    fn estimate(
        &self,
        measure: &StratifiedMeasure,
        level: u32,
        stream: &mut RandomStream,
    ) -> Result<EstimateWithCI, DyadicError>;
}

/// `-Σ p ln p` from the exact cell table.
#[derive(Debug, Clone, Copy, Default)]
pub struct ExactEntropy;

impl QuantizedEntropyEstimator for ExactEntropy {
    fn name(&self) -> &'static str {
        "exact"
    }

    fn estimate(
        &self,
        measure: &StratifiedMeasure,
        level: u32,
        _stream: &mut RandomStream,
    ) -> Result<EstimateWithCI, DyadicError> {
        Ok(EstimateWithCI::exhaustive(cell_table(measure, level)?.entropy()))
    }
}

/// Empirical cell frequencies from `samples` draws, optionally with the
/// Miller–Madow correction `+(K - 1) / (2N)`.
#[derive(Debug, Clone, Copy)]
pub struct PlugInEntropy {
    pub samples: usize,
    pub miller_madow: bool,
}

impl QuantizedEntropyEstimator for PlugInEntropy {
    fn name(&self) -> &'static str {
        if self.miller_madow {
            "miller-madow"
        } else {
            "plug-in"
        }
    }

    fn estimate(
        &self,
        measure: &StratifiedMeasure,
        level: u32,
        stream: &mut RandomStream,
    ) -> Result<EstimateWithCI, DyadicError> {
        if self.samples < MIN_PLUG_IN_SAMPLES {
            return Err(DyadicError::InsufficientSamples { needed: MIN_PLUG_IN_SAMPLES, got: self.samples });
        }
        let seq = measure.sample(stream, self.samples);
        let mut counts: BTreeMap<Vec<i64>, usize> = BTreeMap::new();
        for x in seq.points() {
            *counts.entry(cell_index(x, level).index).or_default() += 1;
        }
        let n = self.samples as f64;
        let ps: Vec<f64> = counts.values().map(|&c| c as f64 / n).collect();
        let (h, se) = plug_in_moments(&ps, n);
        let correction = if self.miller_madow { (ps.len() as f64 - 1.0) / (2.0 * n) } else { 0.0 };
        Ok(EstimateWithCI {
            value: h + correction,
            standard_error: se,
            trials: self.samples,
            method: Method::MonteCarlo,
        })
    }
}

/// Entropy of `ps` and the delta-method standard error of its plug-in
/// estimate from `n` samples, `sqrt((Σ p ln²p - H²) / n)`.
pub fn plug_in_moments(ps: &[f64], n: f64) -> (f64, f64) {
    let logs: Vec<(f64, f64)> = ps.iter().filter(|&&p| p > 0.0).map(|&p| (p, p.ln())).collect();
    let h = -accurate_sum(logs.iter().map(|(p, l)| p * l));
    let second = accurate_sum(logs.iter().map(|(p, l)| p * l * l));
    (h, ((second - h * h).max(0.0) / n).sqrt())
}

pub const ESTIMATOR_NAMES: [&str; 3] = ["exact", "plug-in", "miller-madow"];

/// Look up an estimator by name; `samples` is ignored by `exact`.
pub fn estimator(name: &str, samples: usize) -> Option<Box<dyn QuantizedEntropyEstimator>> {
    match name {
        "exact" => Some(Box::new(ExactEntropy)),
        "plug-in" => Some(Box::new(PlugInEntropy { samples, miller_madow: false })),
        "miller-madow" => Some(Box::new(PlugInEntropy { samples, miller_madow: true })),
        _ => None,
    }
}

pub fn quantized_entropy(
    measure: &StratifiedMeasure,
    level: u32,
    mode: &dyn QuantizedEntropyEstimator,
    stream: &mut RandomStream,
) -> Result<EstimateWithCI, DyadicError> {
    mode.estimate(measure, level, stream)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InfoDimension {
    pub levels: Vec<u32>,
    pub entropies: Vec<f64>,
    pub fit: LinearFit,
    /// `R² < 0.999`.
    pub poor_fit: bool,
}

/// Least-squares slope of the exact `H_#(X_{2^ℓ})` against `ℓ ln 2`.
pub fn info_dimension(
    measure: &StratifiedMeasure,
    levels: RangeInclusive<u32>,
) -> Result<InfoDimension, DyadicError> {
    let levels: Vec<u32> = levels.collect();
    if levels.len() < 3 {
        return Err(DyadicError::TooFewLevels(levels.len()));
    }
    let entropies = levels
        .iter()
        .map(|&l| Ok(cell_table(measure, l)?.entropy()))
        .collect::<Result<Vec<f64>, DyadicError>>()?;
    let xs: Vec<f64> = levels.iter().map(|&l| l as f64 * std::f64::consts::LN_2).collect();
    let fit = least_squares(&xs, &entropies);
    Ok(InfoDimension { poor_fit: fit.r_squared < R_SQUARED_WARNING, levels, entropies, fit })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RenyiDefect {
    pub level: u32,
    pub quantized_entropy: f64,
    /// `Σ p ln μ(C ∩ E)`.
    pub defect_term: f64,
    /// `H_# + Σ p ln μ(C ∩ E)`.
    pub value: f64,
    /// `Σ p ln K` with `μ(C ∩ E) = K 2^{-ℓm}`; only for a single stratum.
    pub log_k_sum: Option<f64>,
}

pub fn renyi_defect(measure: &StratifiedMeasure, level: u32) -> Result<RenyiDefect, DyadicError> {
    let table = cell_table(measure, level)?;
    let h = table.entropy();
    let defect = table.defect_term();
    let log_k_sum = match measure.strata() {
        [only] => Some(defect + (level as f64) * (only.dimension() as f64) * std::f64::consts::LN_2),
        _ => None,
    };
    Ok(RenyiDefect { level, quantized_entropy: h, defect_term: defect, value: h + defect, log_k_sum })
}

/// Both sides of the log-sum inequality
/// `Σ a_i ln(a_i / b_i) >= (Σ a_i) ln(Σ a_i / Σ b_i)`, with `0 ln 0 = 0`.
pub fn log_sum_sides(a: &[f64], b: &[f64]) -> (f64, f64) {
    let term = |a: f64, b: f64| {
        if a == 0.0 {
            0.0
        } else if b == 0.0 {
            f64::INFINITY
        } else {
            a * (a / b).ln()
        }
    };
    let lhs = accurate_sum(a.iter().zip(b).map(|(&a, &b)| term(a, b)));
    let rhs = term(accurate_sum(a.iter().copied()), accurate_sum(b.iter().copied()));
    (lhs, rhs)
}

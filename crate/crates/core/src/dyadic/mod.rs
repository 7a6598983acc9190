//! Dyadic cells, exact cell tables and the entropy estimators built on them.

pub mod cell;
mod entropy;
mod table;

use thiserror::Error;

pub use cell::{cell_index, DyadicCell, MAX_LEVEL};
pub use entropy::{
    estimator, info_dimension, log_sum_sides, plug_in_moments, quantized_entropy, renyi_defect, ExactEntropy,
    InfoDimension, PlugInEntropy, QuantizedEntropyEstimator, RenyiDefect, DEFAULT_LEVELS, ESTIMATOR_NAMES,
    MIN_PLUG_IN_SAMPLES, R_SQUARED_WARNING,
};
pub use table::{cell_measure, cell_table, dyadic_density_estimate, CellEntry, CellTable, ComponentShare};

/// Upper limit on the number of cells a table may touch.
pub const MAX_TABLE_ENTRIES: usize = 10_000_000;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum DyadicError {
    #[error("level {level} may touch up to {bound} cells, above the table limit")]
    TooLarge { level: u32, bound: f64 },
    #[error("level {0} is finer than supported")]
    LevelTooFine(u32),
    #[error("cell has dimension {found}, component lives in R^{expected}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("need at least 3 levels, got {0}")]
    TooFewLevels(usize),
}

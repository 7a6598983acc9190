//! Stratified measures built from a catalog of rectifiable components.

mod component;
mod config;
pub mod geometry;
mod stratified;

use thiserror::Error;

pub use component::{component_entropy, RectifiableComponent};
pub use config::{ComponentSpec, MeasureSpec};
pub use geometry::{AtomSet, Carrier, CellContent, Geometry, GridDensity, Patch, Segment, GEOMETRY_KINDS};
pub use stratified::{
    build_standard_form, check_components, entropy_monte_carlo, log_density, mixture_entropy, sample,
    LabeledSequence, MixtureEntropy, StratifiedMeasure, Stratum,
};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MeasureError {
    #[error("measure has no components")]
    Empty,
    #[error("component {index} has non-positive weight {weight}")]
    ZeroWeight { index: usize, weight: f64 },
    #[error("weights sum to {sum}, expected 1")]
    WeightSumMismatch { sum: f64 },
    #[error("components {first} and {second} have overlapping carriers")]
    OverlappingCarriers { first: usize, second: usize },
    #[error("component {index} lives in R^{found}, expected R^{expected}")]
    AmbientMismatch { index: usize, expected: usize, found: usize },
    #[error("invalid geometry: {0}")]
    InvalidGeometry(String),
    #[error("unsupported geometry: {0}")]
    UnsupportedGeometry(String),
    #[error("draw {index} has zero density")]
    InfiniteScore { index: usize },
    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },
    #[error("config: {0}")]
    Config(String),
}

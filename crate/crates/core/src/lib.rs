//! Numerical laboratory for stratified probability measures.
//!
//! A stratified measure is a finite mixture `Σ q_i ρ_i` of rectifiable
//! probability measures whose carriers have strictly increasing Hausdorff
//! dimensions. This crate builds such measures from a small catalog of
//! carriers (atoms, segments, axis-aligned patches and boxes) with
//! piecewise-constant densities, so that densities, entropies and dyadic
//! cell probabilities are all available in closed form.
//!
//! The modules are layered bottom-up:
//!
//! - [`measure`]: carriers, components, stratified measures, config files.
//! - [`typicality`]: weak/strong typicality predicates, schedules, types.
//! - [`aep`]: Monte Carlo and exhaustive estimators for typical sets.
//! - [`dyadic`]: exact dyadic cell tables, quantized entropy, information
//!   dimension and the entropy defect term.

pub mod aep;
pub mod dyadic;
pub mod measure;
pub mod rng;
pub mod stats;
pub mod typicality;

pub use measure::{
    build_standard_form, Geometry, LabeledSequence, MeasureError, MeasureSpec, RectifiableComponent,
    StratifiedMeasure,
};
pub use rng::RandomStream;
pub use stats::{EstimateWithCI, Method};

//! Declarative measure files.
//!
//! A measure file is TOML with an `ambient_dim` key and one `[[component]]`
//! table per catalog component:
//!
//! ```toml
//! ambient_dim = 2
//!
//! [[component]]
//! kind = "atoms"
//! weight = 0.5
//! points = [[0.25, 0.75]]
//!
//! [[component]]
//! kind = "segment"
//! weight = 0.5
//! start = [0.0, 0.0]
//! end = [1.0, 1.0]
//! ```
//!
//! Density fields (`pmf`, `breaks`, `masses`) are optional; omitted means
//! uniform. Writing a parsed spec back reproduces the input up to
//! whitespace when the input uses this canonical layout.

use serde::{Deserialize, Serialize};

use super::geometry::GEOMETRY_KINDS;
use super::stratified::check_components;
use super::{build_standard_form, MeasureError, RectifiableComponent, StratifiedMeasure};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MeasureSpec {
    pub ambient_dim: usize,
    #[serde(rename = "component")]
    pub components: Vec<ComponentSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ComponentSpec {
    Atoms {
        weight: f64,
        points: Vec<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        pmf: Option<Vec<f64>>,
    },
    Segment {
        weight: f64,
        start: Vec<f64>,
        end: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        breaks: Option<Vec<f64>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        masses: Option<Vec<f64>>,
    },
    Patch {
        weight: f64,
        anchor: Vec<f64>,
        axes: Vec<usize>,
        sides: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        breaks: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        masses: Option<Vec<f64>>,
    },
    Box {
        weight: f64,
        lower: Vec<f64>,
        upper: Vec<f64>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        breaks: Option<Vec<Vec<f64>>>,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        masses: Option<Vec<f64>>,
    },
}

impl ComponentSpec {
    pub fn weight(&self) -> f64 {
        match self {
            ComponentSpec::Atoms { weight, .. }
            | ComponentSpec::Segment { weight, .. }
            | ComponentSpec::Patch { weight, .. }
            | ComponentSpec::Box { weight, .. } => *weight,
        }
    }

    pub fn build(&self) -> Result<RectifiableComponent, MeasureError> {
        match self.clone() {
            ComponentSpec::Atoms { points, pmf, .. } => {
                let n = points.len().max(1);
                let pmf = pmf.unwrap_or_else(|| vec![1.0 / n as f64; n]);
                RectifiableComponent::atoms(points, pmf)
            }
            ComponentSpec::Segment { start, end, breaks, masses, .. } => {
                match density_fields(breaks, masses, || vec![0.0, 1.0])? {
                    None => RectifiableComponent::segment(start, end),
                    Some((b, m)) => RectifiableComponent::segment_with_density(start, end, b, m),
                }
            }
            ComponentSpec::Patch { anchor, axes, sides, breaks, masses, .. } => {
                let m = axes.len();
                match density_fields(breaks, masses, || vec![vec![0.0, 1.0]; m])? {
                    None => RectifiableComponent::patch(anchor, axes, sides),
                    Some((b, ms)) => RectifiableComponent::patch_with_density(anchor, axes, sides, b, ms),
                }
            }
            ComponentSpec::Box { lower, upper, breaks, masses, .. } => {
                let d = lower.len();
                match density_fields(breaks, masses, || vec![vec![0.0, 1.0]; d])? {
                    None => RectifiableComponent::boxed(lower, upper),
                    Some((b, ms)) => RectifiableComponent::boxed_with_density(lower, upper, b, ms),
                }
            }
        }
    }
}

fn density_fields<B>(
    breaks: Option<B>,
    masses: Option<Vec<f64>>,
    default_breaks: impl FnOnce() -> B,
) -> Result<Option<(B, Vec<f64>)>, MeasureError> {
    match (breaks, masses) {
        (None, None) => Ok(None),
        (b, Some(m)) => Ok(Some((b.unwrap_or_else(default_breaks), m))),
        (Some(_), None) => Err(MeasureError::Config("density `breaks` given without `masses`".into())),
    }
}

impl MeasureSpec {
    pub fn from_toml(text: &str) -> Result<Self, MeasureError> {
        let table: toml::Table =
            text.parse().map_err(|e: toml::de::Error| MeasureError::Config(e.to_string()))?;
        Self::from_table(table)
    }

    /// Parse from an already-loaded TOML table (other top-level keys must
    /// have been removed by the caller).
    pub fn from_table(table: toml::Table) -> Result<Self, MeasureError> {
        if let Some(toml::Value::Array(items)) = table.get("component") {
            for item in items {
                if let Some(kind) = item.get("kind").and_then(toml::Value::as_str) {
                    if !GEOMETRY_KINDS.contains(&kind) {
                        return Err(MeasureError::UnsupportedGeometry(kind.to_string()));
                    }
                }
            }
        }
        table.try_into().map_err(|e: toml::de::Error| MeasureError::Config(e.to_string()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("measure spec always serializes")
    }

    /// Every problem with the measure, without stopping at the first.
    pub fn diagnostics(&self) -> Vec<MeasureError> {
        let mut errors = Vec::new();
        let mut built = Vec::new();
        for (index, c) in self.components.iter().enumerate() {
            match c.build() {
                Ok(comp) => {
                    if comp.ambient_dim() != self.ambient_dim {
                        errors.push(MeasureError::AmbientMismatch {
                            index,
                            expected: self.ambient_dim,
                            found: comp.ambient_dim(),
                        });
                    }
                    built.push((c.weight(), comp));
                }
                Err(e) => errors.push(e),
            }
        }
        if errors.is_empty() {
            errors.extend(check_components(&built));
        } else {
            // weights can still be judged when a geometry failed to build
            let weights: Vec<f64> = self.components.iter().map(ComponentSpec::weight).collect();
            for (index, &weight) in weights.iter().enumerate() {
                if weight.is_nan() || weight <= 0.0 {
                    errors.push(MeasureError::ZeroWeight { index, weight });
                }
            }
            let sum: f64 = weights.iter().sum();
            if (sum - 1.0).abs() > 1e-12 {
                errors.push(MeasureError::WeightSumMismatch { sum });
            }
        }
        errors
    }

    pub fn build(&self) -> Result<StratifiedMeasure, MeasureError> {
        let mut specs = Vec::with_capacity(self.components.len());
        for (index, c) in self.components.iter().enumerate() {
            let comp = c.build()?;
            if comp.ambient_dim() != self.ambient_dim {
                return Err(MeasureError::AmbientMismatch {
                    index,
                    expected: self.ambient_dim,
                    found: comp.ambient_dim(),
                });
            }
            specs.push((c.weight(), comp));
        }
        build_standard_form(specs)
    }
}

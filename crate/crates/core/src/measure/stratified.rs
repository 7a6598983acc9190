use std::collections::BTreeMap;

use serde::Serialize;

use super::component::RectifiableComponent;
use super::geometry::CellContent;
use super::MeasureError;
use crate::dyadic::DyadicCell;
use crate::rng::{Categorical, RandomStream};
use crate::stats::{accurate_sum, mean_and_se, shannon_entropy, EstimateWithCI, Method};

const WEIGHT_SUM_TOL: f64 = 1e-12;

/// All components of one dimension, merged into a single rectifiable
/// probability measure `Σ_j w_j ρ_j` with pairwise disjoint carriers.
#[derive(Debug, Clone)]
pub struct Stratum {
    dimension: usize,
    members: Vec<(f64, RectifiableComponent)>,
    table: Categorical,
}

impl Stratum {
    fn new(dimension: usize, members: Vec<(f64, RectifiableComponent)>) -> Self {
        let weights: Vec<f64> = members.iter().map(|(w, _)| *w).collect();
        Self { dimension, table: Categorical::new(&weights), members }
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn members(&self) -> &[(f64, RectifiableComponent)] {
        &self.members
    }

    /// `H^m(E)` of the union of member carriers.
    pub fn hausdorff_measure(&self) -> f64 {
        accurate_sum(self.members.iter().map(|(_, c)| c.carrier().hausdorff_measure()))
    }

    /// `dρ_i/dμ_i` at `x`.
    pub fn density(&self, x: &[f64]) -> f64 {
        self.members.iter().map(|(w, c)| w * c.carrier().density(x)).sum()
    }

    pub fn sample_into(&self, stream: &mut RandomStream, out: &mut [f64]) {
        let j = if self.members.len() == 1 { 0 } else { stream.categorical(&self.table) };
        self.members[j].1.carrier().sample_into(stream, out);
    }

    /// Chain rule over the disjoint members: `H(w) + Σ_j w_j H(ρ_j)`.
    pub fn entropy(&self) -> Result<f64, MeasureError> {
        let weights: Vec<f64> = self.members.iter().map(|(w, _)| *w).collect();
        let mut parts = vec![shannon_entropy(&weights)];
        for (w, c) in &self.members {
            parts.push(w * super::component_entropy(c)?);
        }
        Ok(accurate_sum(parts))
    }

    pub fn cell_measure(&self, cell: &DyadicCell) -> f64 {
        self.members.iter().map(|(_, c)| c.carrier().cell_measure(cell)).sum()
    }

    pub fn cell_mass(&self, cell: &DyadicCell) -> f64 {
        self.members.iter().map(|(w, c)| w * c.carrier().cell_mass(cell)).sum()
    }

    pub fn cell_contents(&self, level: u32) -> Vec<CellContent> {
        if self.members.len() == 1 {
            return self.members[0].1.carrier().cell_contents(level);
        }
        let mut cells: BTreeMap<Vec<i64>, (f64, f64)> = BTreeMap::new();
        for (w, c) in &self.members {
            for cc in c.carrier().cell_contents(level) {
                let e = cells.entry(cc.index).or_insert((0.0, 0.0));
                e.0 += w * cc.mass;
                e.1 += cc.measure;
            }
        }
        cells.into_iter().map(|(index, (mass, measure))| CellContent { index, mass, measure }).collect()
    }

    pub fn cell_count_bound(&self, level: u32) -> f64 {
        self.members.iter().map(|(_, c)| c.carrier().cell_count_bound(level)).sum()
    }
}

/// A stratified probability measure in standard form `ρ = Σ_i q_i ρ_i`:
/// strictly positive weights, strictly increasing dimensions, disjoint
/// carriers within each dimension.
///
/// Labels are zero-based: label `i` refers to `strata()[i]`.
#[derive(Debug, Clone)]
pub struct StratifiedMeasure {
    ambient_dim: usize,
    strata: Vec<Stratum>,
    weights: Vec<f64>,
    table: Categorical,
}

/// Every standard-form violation in a list of weighted components.
pub fn check_components(specs: &[(f64, RectifiableComponent)]) -> Vec<MeasureError> {
    let mut errors = Vec::new();
    if specs.is_empty() {
        errors.push(MeasureError::Empty);
        return errors;
    }
    for (index, (w, _)) in specs.iter().enumerate() {
        if w.is_nan() || *w <= 0.0 || !w.is_finite() {
            errors.push(MeasureError::ZeroWeight { index, weight: *w });
        }
    }
    let sum = accurate_sum(specs.iter().map(|(w, _)| *w));
    if (sum - 1.0).abs() > WEIGHT_SUM_TOL {
        errors.push(MeasureError::WeightSumMismatch { sum });
    }
    let expected = specs[0].1.ambient_dim();
    for (index, (_, c)) in specs.iter().enumerate() {
        if c.ambient_dim() != expected {
            errors.push(MeasureError::AmbientMismatch { index, expected, found: c.ambient_dim() });
        }
    }
    for i in 0..specs.len() {
        for j in 0..i {
            let (a, b) = (&specs[j].1, &specs[i].1);
            if a.ambient_dim() == b.ambient_dim() && a.geometry().overlaps(b.geometry()) {
                errors.push(MeasureError::OverlappingCarriers { first: j, second: i });
            }
        }
    }
    errors
}

/// Group weighted components by dimension into standard form.
///
/// Components sharing a dimension become one composite stratum whose inner
/// weights are renormalized to sum to one.
pub fn build_standard_form(
    specs: Vec<(f64, RectifiableComponent)>,
) -> Result<StratifiedMeasure, MeasureError> {
    if let Some(err) = check_components(&specs).into_iter().next() {
        return Err(err);
    }
    let ambient_dim = specs[0].1.ambient_dim();
    let mut groups: BTreeMap<usize, Vec<(f64, RectifiableComponent)>> = BTreeMap::new();
    for (w, c) in specs {
        groups.entry(c.dimension()).or_default().push((w, c));
    }
    let mut strata = Vec::with_capacity(groups.len());
    let mut weights = Vec::with_capacity(groups.len());
    for (dimension, members) in groups {
        let q = accurate_sum(members.iter().map(|(w, _)| *w));
        let members = members.into_iter().map(|(w, c)| (w / q, c)).collect();
        strata.push(Stratum::new(dimension, members));
        weights.push(q);
    }
    let table = Categorical::new(&weights);
    Ok(StratifiedMeasure { ambient_dim, strata, weights, table })
}

/// Chain-rule decomposition of the generalized entropy, in nats.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixtureEntropy {
    /// `H_μ(ρ)`.
    pub total: f64,
    /// `H(Y) = -Σ q_i ln q_i`.
    pub labels: f64,
    /// `H(X|Y) = Σ q_i H_{μ_i}(ρ_i)`.
    pub conditional: f64,
}

impl StratifiedMeasure {
    pub fn ambient_dim(&self) -> usize {
        self.ambient_dim
    }

    pub fn strata(&self) -> &[Stratum] {
        &self.strata
    }

    /// Number of strata `k = |E_Y|`.
    pub fn len(&self) -> usize {
        self.strata.len()
    }

    pub fn is_empty(&self) -> bool {
        self.strata.is_empty()
    }

    /// The label law `Q = (q_1, ..., q_k)`.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn dimensions(&self) -> Vec<usize> {
        self.strata.iter().map(Stratum::dimension).collect()
    }

    /// `E(D_1) = Σ q_i m_i`.
    pub fn mean_dimension(&self) -> f64 {
        accurate_sum(self.weights.iter().zip(&self.strata).map(|(q, s)| q * s.dimension() as f64))
    }

    /// Stratum whose carrier holds `x`, lowest dimension first. Lower
    /// dimensional carriers are null for higher dimensional ones, so this
    /// picks a version of the density consistent with disjoint carriers.
    pub fn classify(&self, x: &[f64]) -> Option<usize> {
        self.strata.iter().position(|s| s.density(x) > 0.0)
    }

    /// `ln dρ/dμ (x) = ln(q_i · dρ_i/dμ_i (x))`, or `-inf` off the support.
    pub fn log_density(&self, x: &[f64]) -> f64 {
        for (q, s) in self.weights.iter().zip(&self.strata) {
            let f = s.density(x);
            if f > 0.0 {
                return q.ln() + f.ln();
            }
        }
        f64::NEG_INFINITY
    }

    pub fn sample_label(&self, stream: &mut RandomStream) -> usize {
        if self.strata.len() == 1 {
            0
        } else {
            stream.categorical(&self.table)
        }
    }

    pub fn sample_labels(&self, stream: &mut RandomStream, n: usize) -> Vec<usize> {
        (0..n).map(|_| self.sample_label(stream)).collect()
    }

    /// Draw `x_i ~ ρ_{y_i}` for a fixed label sequence.
    pub fn sample_given_labels(&self, stream: &mut RandomStream, labels: &[usize]) -> LabeledSequence {
        let d = self.ambient_dim;
        let mut coords = vec![0.0; labels.len() * d];
        for (i, &y) in labels.iter().enumerate() {
            self.strata[y].sample_into(stream, &mut coords[i * d..(i + 1) * d]);
        }
        LabeledSequence { dim: d, coords, labels: labels.to_vec() }
    }

    /// I.i.d. draws from `ρ`: label from `Q`, then a point from that stratum.
    pub fn sample(&self, stream: &mut RandomStream, n: usize) -> LabeledSequence {
        let labels = self.sample_labels(stream, n);
        self.sample_given_labels(stream, &labels)
    }

    pub fn mixture_entropy(&self) -> Result<MixtureEntropy, MeasureError> {
        let labels = shannon_entropy(&self.weights);
        let mut parts = Vec::with_capacity(self.strata.len());
        for (q, s) in self.weights.iter().zip(&self.strata) {
            parts.push(q * s.entropy()?);
        }
        let conditional = accurate_sum(parts);
        Ok(MixtureEntropy { total: labels + conditional, labels, conditional })
    }

    /// Sample mean and standard error of `-ln dρ/dμ` over `n` draws.
    pub fn entropy_monte_carlo(
        &self,
        stream: &mut RandomStream,
        n: usize,
    ) -> Result<EstimateWithCI, MeasureError> {
        if n < 2 {
            return Err(MeasureError::InsufficientSamples { needed: 2, got: n });
        }
        let seq = self.sample(stream, n);
        let mut scores = Vec::with_capacity(n);
        for (index, x) in seq.points().enumerate() {
            let ld = self.log_density(x);
            if !ld.is_finite() {
                return Err(MeasureError::InfiniteScore { index });
            }
            scores.push(-ld);
        }
        let (value, standard_error) = mean_and_se(&scores);
        Ok(EstimateWithCI { value, standard_error, trials: n, method: Method::MonteCarlo })
    }
}

/// Free-function forms of the measure operations.
pub fn log_density(measure: &StratifiedMeasure, point: &[f64]) -> f64 {
    measure.log_density(point)
}

pub fn sample(measure: &StratifiedMeasure, stream: &mut RandomStream, n: usize) -> LabeledSequence {
    measure.sample(stream, n)
}

pub fn mixture_entropy(measure: &StratifiedMeasure) -> Result<MixtureEntropy, MeasureError> {
    measure.mixture_entropy()
}

pub fn entropy_monte_carlo(
    measure: &StratifiedMeasure,
    stream: &mut RandomStream,
    n: usize,
) -> Result<EstimateWithCI, MeasureError> {
    measure.entropy_monte_carlo(stream, n)
}

/// A realization `(x_1, ..., x_n)` together with its labels `y_i = π(x_i)`.
///
/// Points are stored contiguously, `dim` coordinates each.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledSequence {
    dim: usize,
    coords: Vec<f64>,
    labels: Vec<usize>,
}

impl LabeledSequence {
    /// Panics if `coords.len() != dim * labels.len()`.
    pub fn new(dim: usize, coords: Vec<f64>, labels: Vec<usize>) -> Self {
        assert_eq!(coords.len(), dim * labels.len(), "coordinate count mismatch");
        Self { dim, coords, labels }
    }

    /// Label each point with [`StratifiedMeasure::classify`]; `None` if any
    /// point is off the support.
    pub fn classify(measure: &StratifiedMeasure, points: &[Vec<f64>]) -> Option<Self> {
        let labels = points.iter().map(|p| measure.classify(p)).collect::<Option<Vec<_>>>()?;
        Some(Self::new(measure.ambient_dim(), points.concat(), labels))
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> + '_ {
        self.coords.chunks_exact(self.dim.max(1))
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// `σ · (x_1..x_n) = (x_σ(1), ..., x_σ(n))`, labels permuted alongside.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        assert_eq!(perm.len(), self.len(), "permutation length mismatch");
        let mut coords = Vec::with_capacity(self.coords.len());
        for &j in perm {
            coords.extend_from_slice(self.point(j));
        }
        Self { dim: self.dim, coords, labels: perm.iter().map(|&j| self.labels[j]).collect() }
    }
}

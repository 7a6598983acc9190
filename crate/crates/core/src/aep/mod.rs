//! Estimators for typical-set probabilities and volumes.
//!
//! Volumes are estimated by importance sampling with the identity
//! `μ(A) = E_ρ[1_A / f]`, where `f = dρ/dμ`. All randomness flows through a
//! [`Runner`], which fans trials out over seeded worker streams.

mod diagnostics;
mod oracle;
mod runner;

use serde::Serialize;
use thiserror::Error;

use crate::measure::{LabeledSequence, MeasureError, StratifiedMeasure};
use crate::stats::{log_mean_exp, mean_and_se, proportion, EstimateWithCI, Method};
use crate::typicality::{
    schedule, score_from_logs, within_weak, EmpiricalType, Schedule, TypicalityError, TypicalityParams,
};

pub use diagnostics::{
    adjacent_type_discrepancy, symmetry_trials, tightness_diagnostic, type_symmetry_property, AdjacentTypes,
    TightnessReport, MIN_SAMPLED_TYPES,
};
pub use oracle::{exhaustive_oracle, OracleResult, MAX_ORACLE_LENGTH, MAX_ORACLE_SIZE};
pub use runner::Runner;

pub const MIN_PROBABILITY_TRIALS: usize = 100;
pub const MIN_VOLUME_TRIALS: usize = 1000;
pub const MIN_STRATUM_TRIALS: usize = 100;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AepError {
    #[error("need at least {needed} trials, got {got}")]
    TooFewTrials { needed: usize, got: usize },
    #[error("no trial landed in the typical set; all importance weights are zero")]
    DegenerateWeights,
    #[error("label sequence is not strongly typical")]
    NotStronglyTypical,
    #[error("label {label} is outside the {strata} strata")]
    InvalidLabel { label: usize, strata: usize },
    #[error("enumeration of {size} sequences exceeds the oracle limit")]
    TooLarge { size: f64 },
    #[error("exhaustive oracle needs a purely atomic measure")]
    NotDiscrete,
    #[error("sequence length must be at least 1")]
    EmptySequence,
    #[error("negative tolerance {0}")]
    NegativeDelta(f64),
    #[error(transparent)]
    Typicality(#[from] TypicalityError),
    #[error(transparent)]
    Measure(#[from] MeasureError),
}

fn check_trials(trials: usize, needed: usize) -> Result<(), AepError> {
    if trials < needed {
        Err(AepError::TooFewTrials { needed, got: trials })
    } else {
        Ok(())
    }
}

fn check_basic(n: usize, delta: f64) -> Result<(), AepError> {
    if n == 0 {
        return Err(AepError::EmptySequence);
    }
    if delta.is_nan() || delta < 0.0 {
        return Err(AepError::NegativeDelta(delta));
    }
    Ok(())
}

/// Score `-(1/n) Σ ln f(x_i)` of a fresh draw.
fn draw_score(measure: &StratifiedMeasure, stream: &mut crate::rng::RandomStream, n: usize) -> f64 {
    let seq = measure.sample(stream, n);
    let mut logs: Vec<f64> = seq.points().map(|x| measure.log_density(x)).collect();
    score_from_logs(&mut logs)
}

/// Fraction of i.i.d. length-`n` sequences that are weakly δ-typical.
pub fn estimate_typical_probability(
    measure: &StratifiedMeasure,
    n: usize,
    delta: f64,
    trials: usize,
    runner: &Runner,
) -> Result<EstimateWithCI, AepError> {
    check_basic(n, delta)?;
    check_trials(trials, MIN_PROBABILITY_TRIALS)?;
    let h = measure.mixture_entropy()?.total;
    let hits = runner.run(trials, |s| within_weak(draw_score(measure, s, n), h, delta));
    Ok(proportion(hits.iter().filter(|&&b| b).count(), trials))
}

/// `ln μ^{⊗n}(W_δ)`, estimated as `ln E[1_W Π f(x_i)^{-1}]` with a
/// delta-method standard error.
pub fn estimate_typical_volume(
    measure: &StratifiedMeasure,
    n: usize,
    delta: f64,
    trials: usize,
    runner: &Runner,
) -> Result<EstimateWithCI, AepError> {
    check_basic(n, delta)?;
    check_trials(trials, MIN_VOLUME_TRIALS)?;
    let h = measure.mixture_entropy()?.total;
    let log_weights = runner.run(trials, |s| {
        let score = draw_score(measure, s, n);
        if within_weak(score, h, delta) {
            n as f64 * score
        } else {
            f64::NEG_INFINITY
        }
    });
    let (value, standard_error) = log_mean_exp(&log_weights).ok_or(AepError::DegenerateWeights)?;
    Ok(EstimateWithCI { value, standard_error, trials, method: Method::ImportanceSampling })
}

/// One doubly typical stratum `T(y)` and its estimated size.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StratumReport {
    pub labels: Vec<usize>,
    pub empirical_type: EmpiricalType,
    pub dimension: usize,
    /// `ln H^{m(y)}(T(y))`.
    pub log_volume: EstimateWithCI,
    /// `ρ^{⊗n}(T(y)) = Q^n(y) P(x ∈ W_δ | y)`.
    pub probability: EstimateWithCI,
}

fn check_stratum_labels(
    measure: &StratifiedMeasure,
    labels: &[usize],
    sched: &Schedule,
) -> Result<(), AepError> {
    if labels.is_empty() {
        return Err(AepError::EmptySequence);
    }
    let k = measure.len();
    if let Some(&label) = labels.iter().find(|&&a| a >= k) {
        return Err(AepError::InvalidLabel { label, strata: k });
    }
    if !EmpiricalType::new(labels, k).is_strongly_typical(measure.weights(), sched.eta) {
        return Err(AepError::NotStronglyTypical);
    }
    Ok(())
}

/// Per-trial outcome of conditional sampling on a fiber: whether the draw
/// is weakly typical, and `-Σ ln f_{y_i}(x_i)`.
fn fiber_trial(
    measure: &StratifiedMeasure,
    labels: &[usize],
    entropy: f64,
    delta: f64,
    stream: &mut crate::rng::RandomStream,
) -> (bool, f64) {
    let seq = measure.sample_given_labels(stream, labels);
    typical_on_fiber(measure, &seq, entropy, delta)
}

fn typical_on_fiber(
    measure: &StratifiedMeasure,
    seq: &LabeledSequence,
    entropy: f64,
    delta: f64,
) -> (bool, f64) {
    let strata = measure.strata();
    let mut logs = Vec::with_capacity(seq.len());
    let mut fiber_logs = Vec::with_capacity(seq.len());
    let mut on_fiber = true;
    for (x, &y) in seq.points().zip(seq.labels()) {
        logs.push(measure.log_density(x));
        fiber_logs.push(strata[y].density(x).ln());
        on_fiber &= measure.classify(x) == Some(y);
    }
    let score = score_from_logs(&mut logs);
    let neg_log_f = score_from_logs(&mut fiber_logs) * seq.len() as f64;
    (on_fiber && within_weak(score, entropy, delta), neg_log_f)
}

/// Conditional importance sampling on the fiber of `y`: `x_i ~ ρ_{y_i}`,
/// weighted by `Π (dρ_{y_i}/dμ_{y_i})(x_i)^{-1}` on the weakly typical set.
pub fn stratum_report(
    measure: &StratifiedMeasure,
    labels: &[usize],
    delta: f64,
    sched: &Schedule,
    trials: usize,
    runner: &Runner,
) -> Result<StratumReport, AepError> {
    check_basic(labels.len(), delta)?;
    check_trials(trials, MIN_STRATUM_TRIALS)?;
    check_stratum_labels(measure, labels, sched)?;
    let h = measure.mixture_entropy()?.total;
    let outcomes = runner.run(trials, |s| fiber_trial(measure, labels, h, delta, s));
    let log_weights: Vec<f64> =
        outcomes.iter().map(|&(hit, w)| if hit { w } else { f64::NEG_INFINITY }).collect();
    let (value, standard_error) = log_mean_exp(&log_weights).ok_or(AepError::DegenerateWeights)?;
    let hits: Vec<f64> = outcomes.iter().map(|&(hit, _)| f64::from(u8::from(hit))).collect();
    let (frac, frac_se) = mean_and_se(&hits);
    let prob_y: f64 = labels.iter().map(|&a| measure.weights()[a].ln()).sum::<f64>().exp();
    let dims = measure.dimensions();
    Ok(StratumReport {
        labels: labels.to_vec(),
        empirical_type: EmpiricalType::new(labels, measure.len()),
        dimension: crate::typicality::stratum_dimension(labels, &dims),
        log_volume: EstimateWithCI { value, standard_error, trials, method: Method::ImportanceSampling },
        probability: EstimateWithCI {
            value: prob_y * frac,
            standard_error: prob_y * frac_se,
            trials,
            method: Method::MonteCarlo,
        },
    })
}

/// `ln H^{m(y)}(T_{δ,δ'}(y))` for a strongly typical `y`.
pub fn estimate_stratum_volume(
    measure: &StratifiedMeasure,
    labels: &[usize],
    delta: f64,
    sched: &Schedule,
    trials: usize,
    runner: &Runner,
) -> Result<EstimateWithCI, AepError> {
    Ok(stratum_report(measure, labels, delta, sched, trials, runner)?.log_volume)
}

/// `ρ^{⊗n}(T^c)` split into its two failure modes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvDefect {
    pub schedule: Schedule,
    /// Fraction failing weak or strong typicality.
    pub total: EstimateWithCI,
    pub weak_failure: EstimateWithCI,
    pub strong_failure: EstimateWithCI,
}

/// Total variation between `ρ^{⊗n}` and its restriction to the doubly
/// typical set, with `η_n` from the exponent `ξ`.
pub fn estimate_tv_defect(
    measure: &StratifiedMeasure,
    n: usize,
    delta: f64,
    xi: f64,
    trials: usize,
    runner: &Runner,
) -> Result<TvDefect, AepError> {
    let sched = schedule(n.max(1), xi, measure.len())?;
    estimate_tv_defect_with(measure, n, delta, &sched, trials, runner)
}

/// Same as [`estimate_tv_defect`] with an explicit schedule, e.g. one built
/// by [`Schedule::with_eta`].
pub fn estimate_tv_defect_with(
    measure: &StratifiedMeasure,
    n: usize,
    delta: f64,
    sched: &Schedule,
    trials: usize,
    runner: &Runner,
) -> Result<TvDefect, AepError> {
    check_basic(n, delta)?;
    check_trials(trials, MIN_PROBABILITY_TRIALS)?;
    let h = measure.mixture_entropy()?.total;
    let k = measure.len();
    let outcomes = runner.run(trials, |s| {
        let seq = measure.sample(s, n);
        let mut logs: Vec<f64> = seq.points().map(|x| measure.log_density(x)).collect();
        let weak_ok = within_weak(score_from_logs(&mut logs), h, delta);
        let strong_ok = EmpiricalType::new(seq.labels(), k).is_strongly_typical(measure.weights(), sched.eta);
        (weak_ok, strong_ok)
    });
    let count = |pred: &dyn Fn(&(bool, bool)) -> bool| outcomes.iter().filter(|o| pred(o)).count();
    Ok(TvDefect {
        schedule: *sched,
        total: proportion(count(&|o| !(o.0 && o.1)), trials),
        weak_failure: proportion(count(&|o| !o.0), trials),
        strong_failure: proportion(count(&|o| !o.1), trials),
    })
}

/// Membership of `seq` in the doubly typical stratum of its own labels.
pub fn in_doubly_typical_stratum(
    measure: &StratifiedMeasure,
    seq: &LabeledSequence,
    params: &TypicalityParams,
) -> bool {
    let Ok(h) = measure.mixture_entropy() else {
        return false;
    };
    if seq.labels().iter().any(|&a| a >= measure.len()) {
        return false;
    }
    let strong = EmpiricalType::new(seq.labels(), measure.len())
        .is_strongly_typical(measure.weights(), params.schedule.eta);
    strong && typical_on_fiber(measure, seq, h.total, params.delta).0
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{build_standard_form, RectifiableComponent};
    use std::f64::consts::{LN_2, SQRT_2};

    pub(super) fn m1() -> StratifiedMeasure {
        build_standard_form(vec![
            (0.5, RectifiableComponent::atom(vec![0.5]).unwrap()),
            (0.5, RectifiableComponent::segment(vec![0.0], vec![1.0]).unwrap()),
        ])
        .unwrap()
    }

    pub(super) fn m3() -> StratifiedMeasure {
        build_standard_form(vec![
            (0.5, RectifiableComponent::atom(vec![0.25, 0.75]).unwrap()),
            (0.5, RectifiableComponent::segment(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()),
        ])
        .unwrap()
    }

    pub(super) fn three_atoms() -> StratifiedMeasure {
        build_standard_form(vec![(
            1.0,
            RectifiableComponent::atoms(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0.5, 0.25, 0.25])
                .unwrap(),
        )])
        .unwrap()
    }

    /// `P(|Bin(n, 1/2) - n/2| <= r)`, summed from exact log-binomials.
    fn binomial_central(n: u64, r: f64) -> f64 {
        let ln_fact = |k: u64| (1..=k).map(|i| (i as f64).ln()).sum::<f64>();
        (0..=n)
            .filter(|&k| (k as f64 - n as f64 / 2.0).abs() <= r)
            .map(|k| (ln_fact(n) - ln_fact(k) - ln_fact(n - k) - n as f64 * LN_2).exp())
            .sum()
    }

    fn agrees_with_oracle(est: &EstimateWithCI, p0: f64) -> bool {
        let se0 = (p0 * (1.0 - p0) / est.trials as f64).sqrt();
        (est.value - p0).abs() <= 3.0 * est.standard_error.max(se0) + 1e-12
    }

    #[test]
    fn m1_is_always_typical() {
        let p = estimate_typical_probability(&m1(), 100, 0.01, 200, &Runner::new(1, 2)).unwrap();
        assert_eq!((p.value, p.standard_error), (1.0, 0.0));
    }

    #[test]
    fn m3_probability_matches_binomial() {
        let r = Runner::new(3, 4);
        let p = estimate_typical_probability(&m3(), 100, 0.1, 4000, &r).unwrap();
        let oracle = binomial_central(100, 100.0 * 0.1 / SQRT_2.ln());
        assert!(agrees_with_oracle(&p, oracle), "{p:?} vs {oracle}");
        let p0 = estimate_typical_probability(&m3(), 100, 0.0, 4000, &r).unwrap();
        let oracle0 = binomial_central(100, 0.0);
        assert!((oracle0 - 0.0796).abs() < 1e-4);
        assert!(agrees_with_oracle(&p0, oracle0), "{p0:?} vs {oracle0}");
    }

    #[test]
    fn too_few_trials_rejected() {
        let r = Runner::new(0, 1);
        assert!(matches!(
            estimate_typical_probability(&m1(), 10, 0.1, 99, &r),
            Err(AepError::TooFewTrials { needed: 100, .. })
        ));
        assert!(matches!(
            estimate_typical_volume(&m1(), 10, 0.1, 999, &r),
            Err(AepError::TooFewTrials { needed: 1000, .. })
        ));
    }

    #[test]
    fn volume_examples() {
        let r = Runner::new(9, 3);
        let v = estimate_typical_volume(&m1(), 10, 0.01, 1000, &r).unwrap();
        assert!((v.value - 10.0 * LN_2).abs() < 1e-12 && v.standard_error == 0.0);
        let unit =
            build_standard_form(vec![(1.0, RectifiableComponent::segment(vec![0.0], vec![1.0]).unwrap())])
                .unwrap();
        let v = estimate_typical_volume(&unit, 1, 0.3, 1000, &r).unwrap();
        assert_eq!(v.value, 0.0);
        let v = estimate_typical_volume(&three_atoms(), 3, 0.2, 4000, &r).unwrap();
        assert!(v.agrees_with(18f64.ln(), 3.0, 0.0), "{v:?}");
    }

    #[test]
    fn degenerate_volume_is_reported() {
        // δ = 0 with n odd: no sequence hits the entropy exactly
        let r = Runner::new(2, 1);
        assert_eq!(estimate_typical_volume(&m3(), 3, 0.0, 1000, &r), Err(AepError::DegenerateWeights));
    }

    #[test]
    fn stratum_volume_examples() {
        let r = Runner::new(4, 2);
        let m = m1();
        let s = schedule(20, 0.1, 2).unwrap();
        let all_atoms = vec![0; 20];
        assert!(matches!(
            estimate_stratum_volume(&m, &all_atoms, 0.01, &s, 100, &r),
            Err(AepError::NotStronglyTypical)
        ));
        let y: Vec<usize> = (0..20).map(|i| i % 2).collect();
        let v = estimate_stratum_volume(&m, &y, 0.01, &s, 100, &r).unwrap();
        assert_eq!((v.value, v.standard_error), (0.0, 0.0));
        // all-atom stratum with a loose schedule is a single point
        let loose = Schedule::with_eta(20, 1.5, 2);
        let v = estimate_stratum_volume(&m, &all_atoms, 0.01, &loose, 100, &r).unwrap();
        assert_eq!(v.value, 0.0);
        let s2 = schedule(2, 0.1, 2).unwrap();
        let v = estimate_stratum_volume(&m3(), &[1, 1], 0.2, &s2, 100, &r).unwrap();
        assert!((v.value - 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn stratum_report_fields() {
        let m = m3();
        let y = vec![0, 1, 1, 0, 1, 0, 0, 1];
        let s = schedule(8, 0.1, 2).unwrap();
        let rep = stratum_report(&m, &y, 0.5, &s, 200, &Runner::new(1, 1)).unwrap();
        assert_eq!(rep.dimension, 4);
        assert_eq!(rep.empirical_type.counts, vec![4, 4]);
        // balanced fiber: score equals H, every draw typical
        assert!((rep.probability.value - 0.5f64.powi(8)).abs() < 1e-15);
        assert!((rep.log_volume.value - 4.0 * SQRT_2.ln()).abs() < 1e-12);
    }

    #[test]
    fn tv_defect_examples() {
        let r = Runner::new(6, 4);
        let d = estimate_tv_defect(&m1(), 2000, 0.1, 0.1, 2000, &r).unwrap();
        assert_eq!(d.weak_failure.value, 0.0);
        assert_eq!(d.total.value, d.strong_failure.value);
        assert!(d.total.value <= d.schedule.epsilon);
        let inf = Schedule::with_eta(50, f64::INFINITY, 2);
        let d = estimate_tv_defect_with(&m3(), 50, f64::INFINITY, &inf, 500, &r).unwrap();
        assert_eq!(d.total.value, 0.0);
    }

    #[test]
    fn doubly_typical_membership() {
        let m = m3();
        let params = TypicalityParams::new(0.1, schedule(4, 0.1, 2).unwrap()).unwrap();
        let seq = LabeledSequence::new(2, vec![0.25, 0.75, 0.1, 0.1, 0.25, 0.75, 0.7, 0.7], vec![0, 1, 0, 1]);
        assert!(in_doubly_typical_stratum(&m, &seq, &params));
        let wrong =
            LabeledSequence::new(2, vec![0.25, 0.75, 0.1, 0.1, 0.25, 0.75, 0.7, 0.7], vec![1, 0, 0, 1]);
        assert!(!in_doubly_typical_stratum(&m, &wrong, &params));
    }
}

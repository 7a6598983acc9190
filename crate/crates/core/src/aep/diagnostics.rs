use serde::Serialize;

use super::{
    check_basic, check_trials, in_doubly_typical_stratum, stratum_report, AepError, Runner,
    MIN_STRATUM_TRIALS,
};
use crate::measure::{LabeledSequence, StratifiedMeasure};
use crate::stats::log_mean_exp;
use crate::typicality::{schedule, weak_log_score, EmpiricalType, Schedule, TypicalityParams};

pub const MIN_SAMPLED_TYPES: usize = 10;

/// Pathwise check that `1_{T(y)}(x) = 1_{T(σy)}(σx)` and that the weak
/// score is unchanged by `σ`.
pub fn type_symmetry_property(
    measure: &StratifiedMeasure,
    seq: &LabeledSequence,
    perm: &[usize],
    params: &TypicalityParams,
) -> bool {
    let moved = seq.permuted(perm);
    let same_score = {
        let (a, b) = (weak_log_score(measure, seq), weak_log_score(measure, &moved));
        a == b || (a.is_nan() && b.is_nan())
    };
    same_score
        && in_doubly_typical_stratum(measure, seq, params)
            == in_doubly_typical_stratum(measure, &moved, params)
}

/// Sampled view of the set `B_ε` of strongly typical `y` whose doubly
/// typical stratum grows faster than `H(X|Y) - ε + δ + δ'_n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TightnessReport {
    pub schedule: Schedule,
    pub conditional_entropy: f64,
    pub label_entropy: f64,
    pub threshold: f64,
    pub sampled: usize,
    pub strongly_typical: usize,
    pub in_b: usize,
    /// `in_b / strongly_typical`.
    pub fraction_in_b: f64,
    /// `(1/n) ln |A|` from importance weights `1/Q^n(y)`.
    pub log_count_a_rate: f64,
    /// `(1/n) ln |B|`, same weights.
    pub log_count_b_rate: f64,
    /// `(1/n) ln H^{m(y)}(T(y))` per strongly typical sample.
    pub volume_rates: Vec<f64>,
}

/// Draw `sampled_types` label sequences from `Q^n`, estimate the stratum
/// volume of each strongly typical one, and summarize membership in `B_ε`.
#[allow(clippy::too_many_arguments)]
pub fn tightness_diagnostic(
    measure: &StratifiedMeasure,
    n: usize,
    delta: f64,
    xi: f64,
    epsilon: f64,
    sampled_types: usize,
    trials_per_type: usize,
    runner: &Runner,
) -> Result<TightnessReport, AepError> {
    check_basic(n, delta)?;
    check_trials(sampled_types, MIN_SAMPLED_TYPES)?;
    check_trials(trials_per_type, MIN_STRATUM_TRIALS)?;
    let sched = schedule(n, xi, measure.len())?;
    let ent = measure.mixture_entropy()?;
    let threshold = ent.conditional - epsilon + delta + sched.delta_prime;
    let mut stream = runner.child(0).stream(0);
    let log_q: Vec<f64> = measure.weights().iter().map(|q| q.ln()).collect();

    let mut volume_rates = Vec::new();
    let mut weights_a = Vec::with_capacity(sampled_types);
    let mut weights_b = Vec::with_capacity(sampled_types);
    for i in 0..sampled_types {
        let y = measure.sample_labels(&mut stream, n);
        let inv_q: f64 = -y.iter().map(|&a| log_q[a]).sum::<f64>();
        let typical = EmpiricalType::new(&y, measure.len()).is_strongly_typical(measure.weights(), sched.eta);
        let mut in_b = false;
        if typical {
            let rate = match stratum_report(
                measure,
                &y,
                delta,
                &sched,
                trials_per_type,
                &runner.child(1 + i as u64),
            ) {
                Ok(rep) => rep.log_volume.value / n as f64,
                Err(AepError::DegenerateWeights) => f64::NEG_INFINITY,
                Err(e) => return Err(e),
            };
            in_b = rate > threshold;
            volume_rates.push(rate);
        }
        weights_a.push(if typical { inv_q } else { f64::NEG_INFINITY });
        weights_b.push(if in_b { inv_q } else { f64::NEG_INFINITY });
    }
    let rate_of = |w: &[f64]| log_mean_exp(w).map_or(f64::NEG_INFINITY, |(l, _)| l / n as f64);
    let strongly_typical = volume_rates.len();
    let in_b = weights_b.iter().filter(|w| w.is_finite()).count();
    Ok(TightnessReport {
        schedule: sched,
        conditional_entropy: ent.conditional,
        label_entropy: ent.labels,
        threshold,
        sampled: sampled_types,
        strongly_typical,
        in_b,
        fraction_in_b: if strongly_typical > 0 { in_b as f64 / strongly_typical as f64 } else { 0.0 },
        log_count_a_rate: rate_of(&weights_a),
        log_count_b_rate: rate_of(&weights_b),
        volume_rates,
    })
}

/// Probabilities of two doubly typical strata whose types differ by moving
/// one letter. No bound is claimed; this only reports the discrepancy.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AdjacentTypes {
    /// `Σ_a |P(a) - P'(a)| = 2/n`.
    pub tv_distance: f64,
    pub log_prob_first: f64,
    pub log_prob_second: f64,
    /// `ln ρ(T(y)) - ln ρ(T(y'))`.
    pub log_ratio: f64,
    pub log_ratio_se: f64,
}

/// Compare `T(y)` with `T(y')`, where `y'` changes the first `from` label of
/// `y` into `to`.
#[allow(clippy::too_many_arguments)]
pub fn adjacent_type_discrepancy(
    measure: &StratifiedMeasure,
    labels: &[usize],
    from: usize,
    to: usize,
    delta: f64,
    sched: &Schedule,
    trials: usize,
    runner: &Runner,
) -> Result<AdjacentTypes, AepError> {
    let pos = labels
        .iter()
        .position(|&a| a == from)
        .ok_or(AepError::InvalidLabel { label: from, strata: measure.len() })?;
    let mut other = labels.to_vec();
    other[pos] = to;
    let first = stratum_report(measure, labels, delta, sched, trials, &runner.child(1))?;
    let second = stratum_report(measure, &other, delta, sched, trials, &runner.child(2))?;
    let log_se = |e: &crate::stats::EstimateWithCI| {
        if e.value > 0.0 {
            e.standard_error / e.value
        } else {
            f64::INFINITY
        }
    };
    let (a, b) = (first.probability, second.probability);
    let n = labels.len() as f64;
    let tv = EmpiricalType::new(labels, measure.len())
        .pmf
        .iter()
        .zip(&EmpiricalType::new(&other, measure.len()).pmf)
        .map(|(p, q)| (p - q).abs())
        .sum::<f64>();
    debug_assert!(from == to || (tv - 2.0 / n).abs() < 1e-12);
    Ok(AdjacentTypes {
        tv_distance: tv,
        log_prob_first: a.value.ln(),
        log_prob_second: b.value.ln(),
        log_ratio: a.value.ln() - b.value.ln(),
        log_ratio_se: log_se(&a).hypot(log_se(&b)),
    })
}

/// Fraction of trials in which [`type_symmetry_property`] holds for a
/// random draw and a random permutation.
pub fn symmetry_trials(
    measure: &StratifiedMeasure,
    params: &TypicalityParams,
    trials: usize,
    runner: &Runner,
) -> (usize, usize) {
    let n = params.schedule.n;
    let ok = runner.run(trials, |s| {
        let seq = measure.sample(s, n);
        let perm = s.permutation(n);
        type_symmetry_property(measure, &seq, &perm, params)
    });
    let held = ok.iter().filter(|&&b| b).count();
    (held, trials)
}

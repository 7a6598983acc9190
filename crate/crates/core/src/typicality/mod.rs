//! Weak, strong and double typicality.
//!
//! Labels are zero-based, matching [`StratifiedMeasure::strata`].

use serde::Serialize;
use thiserror::Error;

use crate::measure::{LabeledSequence, StratifiedMeasure};
use crate::stats::{accurate_sum, shannon_entropy};

/// Absolute slack added to the weak-typicality tolerance so that scores
/// equal to the entropy in exact arithmetic are not rejected by rounding.
pub const WEAK_SLACK: f64 = 1e-12;

pub const DEFAULT_XI: f64 = 0.1;
pub const DEFAULT_DELTA: f64 = 0.1;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum TypicalityError {
    #[error("exponent xi = {0} outside (0, 1/2)")]
    BadExponent(f64),
    #[error("sequence length must be at least 1")]
    EmptySequence,
    #[error("alphabet must have at least one letter")]
    EmptyAlphabet,
    #[error("weak tolerance delta = {0} must be positive")]
    BadDelta(f64),
    #[error("{0} weights but {1} dimensions")]
    LengthMismatch(usize, usize),
}

/// Per-length typicality parameters under `η_n = n^{-1/2+ξ}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Schedule {
    pub n: usize,
    pub xi: f64,
    pub eta: f64,
    pub delta_prime: f64,
    pub epsilon: f64,
    pub alphabet_size: usize,
}

impl Schedule {
    /// Schedule with an explicit `η`, bypassing the exponent convention.
    /// `xi` is reported as NaN.
    pub fn with_eta(n: usize, eta: f64, alphabet_size: usize) -> Self {
        let k = alphabet_size as f64;
        let delta_prime = if eta > 0.0 { -k * eta * eta.ln() } else { 0.0 };
        Self {
            n,
            xi: f64::NAN,
            eta,
            delta_prime,
            epsilon: 2.0 * k * (-2.0 * n as f64 * eta * eta).exp(),
            alphabet_size,
        }
    }
}

/// `η_n = n^{-1/2+ξ}`, `δ'_n = -|E_Y| η_n ln η_n`, `ε_n = 2|E_Y| e^{-2nη_n²}`.
pub fn schedule(n: usize, xi: f64, alphabet_size: usize) -> Result<Schedule, TypicalityError> {
    if !(xi > 0.0 && xi < 0.5) {
        return Err(TypicalityError::BadExponent(xi));
    }
    if n == 0 {
        return Err(TypicalityError::EmptySequence);
    }
    if alphabet_size == 0 {
        return Err(TypicalityError::EmptyAlphabet);
    }
    let eta = (n as f64).powf(xi - 0.5);
    Ok(Schedule { xi, ..Schedule::with_eta(n, eta, alphabet_size) })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TypicalityParams {
    pub delta: f64,
    pub schedule: Schedule,
}

impl TypicalityParams {
    pub fn new(delta: f64, schedule: Schedule) -> Result<Self, TypicalityError> {
        if delta.is_nan() || delta <= 0.0 {
            return Err(TypicalityError::BadDelta(delta));
        }
        Ok(Self { delta, schedule })
    }
}

/// Label counts `N(a; y)` and the induced pmf `N(a; y) / n`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EmpiricalType {
    pub counts: Vec<usize>,
    pub pmf: Vec<f64>,
    pub n: usize,
}

impl EmpiricalType {
    /// Labels at or beyond `alphabet_size` extend the alphabet.
    pub fn new(labels: &[usize], alphabet_size: usize) -> Self {
        let k = labels.iter().map(|&a| a + 1).max().unwrap_or(0).max(alphabet_size);
        let mut counts = vec![0usize; k];
        for &a in labels {
            counts[a] += 1;
        }
        Self::from_counts(counts)
    }

    pub fn from_counts(counts: Vec<usize>) -> Self {
        let n: usize = counts.iter().sum();
        let pmf = counts.iter().map(|&c| if n == 0 { 0.0 } else { c as f64 / n as f64 }).collect();
        Self { counts, pmf, n }
    }

    pub fn alphabet_size(&self) -> usize {
        self.counts.len()
    }

    /// `P ≪ Q` and `|P(a) - Q(a)| < η` for every letter.
    pub fn is_strongly_typical(&self, q: &[f64], eta: f64) -> bool {
        if self.n == 0 {
            return false;
        }
        let k = self.pmf.len().max(q.len());
        (0..k).all(|a| {
            let p = self.pmf.get(a).copied().unwrap_or(0.0);
            let qa = q.get(a).copied().unwrap_or(0.0);
            if p > 0.0 && qa <= 0.0 {
                return false;
            }
            (p - qa).abs() < eta
        })
    }

    /// `Σ_a N(a; y) m_a`.
    pub fn dimension(&self, dims: &[usize]) -> usize {
        self.counts.iter().zip(dims).map(|(c, m)| c * m).sum()
    }
}

pub fn empirical_type(labels: &[usize], alphabet_size: usize) -> EmpiricalType {
    EmpiricalType::new(labels, alphabet_size)
}

/// `-(1/n) Σ ln f(x_i)`. The log-densities are summed in sorted order, so
/// the score is exactly invariant under permutations of the sequence.
/// Returns `+inf` if any point is off the support.
pub fn weak_log_score(measure: &StratifiedMeasure, seq: &LabeledSequence) -> f64 {
    let mut logs: Vec<f64> = seq.points().map(|x| measure.log_density(x)).collect();
    score_from_logs(&mut logs)
}

pub(crate) fn score_from_logs(logs: &mut [f64]) -> f64 {
    if logs.is_empty() {
        return f64::NAN;
    }
    if logs.iter().any(|l| !l.is_finite()) {
        return f64::INFINITY;
    }
    logs.sort_by(f64::total_cmp);
    -accurate_sum(logs.iter().copied()) / logs.len() as f64
}

/// `|score - H| <= δ` (plus [`WEAK_SLACK`]).
pub fn within_weak(score: f64, entropy: f64, delta: f64) -> bool {
    (score - entropy).abs() <= delta + WEAK_SLACK
}

/// Weak typicality against `H_μ(ρ)`. Measures without a finite entropy
/// have no typical sequences.
pub fn is_weakly_typical(measure: &StratifiedMeasure, seq: &LabeledSequence, delta: f64) -> bool {
    match measure.mixture_entropy() {
        Ok(h) => within_weak(weak_log_score(measure, seq), h.total, delta),
        Err(_) => false,
    }
}

pub fn is_strongly_typical(labels: &[usize], q: &[f64], eta: f64) -> bool {
    EmpiricalType::new(labels, q.len()).is_strongly_typical(q, eta)
}

/// `m(y) = Σ_j m_{y_j}`.
pub fn stratum_dimension(labels: &[usize], dims: &[usize]) -> usize {
    labels.iter().map(|&a| dims[a]).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum IntervalMode {
    /// Half-width `n^{1/2+ξ}`.
    Narrow,
    /// Half-width `n^{1/2+ξ} Σ_i m_i`, from `|N(i;y) - n q_i| <= n η_n`.
    Derived,
}

impl IntervalMode {
    pub fn as_str(&self) -> &'static str {
        match self {
            IntervalMode::Narrow => "narrow",
            IntervalMode::Derived => "derived",
        }
    }
}

/// Interval around `n E(D_1)` holding `m(y)` for strongly typical `y`.
/// A single stratum gives the degenerate interval `[n m_1, n m_1]`.
pub fn dimension_interval(
    n: usize,
    xi: f64,
    q: &[f64],
    dims: &[usize],
    mode: IntervalMode,
) -> Result<(f64, f64), TypicalityError> {
    if q.len() != dims.len() {
        return Err(TypicalityError::LengthMismatch(q.len(), dims.len()));
    }
    let s = schedule(n, xi, q.len().max(1))?;
    let nf = n as f64;
    let center = nf * accurate_sum(q.iter().zip(dims).map(|(q, &m)| q * m as f64));
    if q.len() == 1 {
        return Ok((center, center));
    }
    let base = nf * s.eta;
    let half = match mode {
        IntervalMode::Narrow => base,
        IntervalMode::Derived => base * dims.iter().sum::<usize>() as f64,
    };
    Ok((center - half, center + half))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundCheck {
    Holds,
    Violated,
    NotApplicable,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TvBound {
    /// `Σ_a |P(a) - Q(a)|`.
    pub theta: f64,
    pub bound: f64,
    pub entropy_gap: f64,
    pub check: BoundCheck,
}

/// Entropy continuity in total variation: `|H(P) - H(Q)| <= -θ ln(θ/|E_Y|)`
/// for `θ <= 1/2`.
pub fn entropy_tv_bound(p: &[f64], q: &[f64]) -> TvBound {
    let k = p.len().max(q.len());
    let at = |v: &[f64], a: usize| v.get(a).copied().unwrap_or(0.0);
    let theta = accurate_sum((0..k).map(|a| (at(p, a) - at(q, a)).abs()));
    let entropy_gap = (shannon_entropy(p) - shannon_entropy(q)).abs();
    let bound = if theta > 0.0 { -theta * (theta / k as f64).ln() } else { 0.0 };
    let check = if theta > 0.5 {
        BoundCheck::NotApplicable
    } else if entropy_gap <= bound + WEAK_SLACK {
        BoundCheck::Holds
    } else {
        BoundCheck::Violated
    };
    TvBound { theta, bound, entropy_gap, check }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measure::{build_standard_form, RectifiableComponent};
    use proptest::prelude::*;
    use std::f64::consts::{LN_2, SQRT_2};

    fn m1() -> StratifiedMeasure {
        build_standard_form(vec![
            (0.5, RectifiableComponent::atom(vec![0.5]).unwrap()),
            (0.5, RectifiableComponent::segment(vec![0.0], vec![1.0]).unwrap()),
        ])
        .unwrap()
    }

    fn m3() -> StratifiedMeasure {
        build_standard_form(vec![
            (0.5, RectifiableComponent::atom(vec![0.25, 0.75]).unwrap()),
            (0.5, RectifiableComponent::segment(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()),
        ])
        .unwrap()
    }

    /// M3 sequence with `n2` diagonal points, diagonal points spread out.
    fn m3_sequence(n: usize, n2: usize) -> LabeledSequence {
        let mut coords = Vec::new();
        let mut labels = Vec::new();
        for i in 0..n {
            if i < n2 {
                let t = (i as f64 + 0.5) / n as f64;
                coords.extend([t, t]);
                labels.push(1);
            } else {
                coords.extend([0.25, 0.75]);
                labels.push(0);
            }
        }
        LabeledSequence::new(2, coords, labels)
    }

    #[test]
    fn schedule_values() {
        let s = schedule(100, 0.1, 2).unwrap();
        assert!((s.eta - 0.15849).abs() < 1e-5);
        assert!((s.delta_prime - 0.5839).abs() < 1e-4);
        assert!((s.epsilon - 0.0263).abs() < 1e-4);
        let big = schedule(10_000, 0.1, 2).unwrap();
        assert!((big.eta - 10f64.powf(-1.6)).abs() < 1e-15);
        assert!((big.eta - 0.02512).abs() < 1e-5);
        assert!(big.eta < s.eta && big.epsilon < s.epsilon);
    }

    #[test]
    fn schedule_rejects_bad_exponent() {
        for xi in [0.0, 0.5, -0.1, 0.7, f64::NAN] {
            assert!(matches!(schedule(10, xi, 2), Err(TypicalityError::BadExponent(_))));
        }
    }

    #[test]
    fn weak_score_m1_is_ln2() {
        let m = m1();
        let seq = LabeledSequence::classify(&m, &[vec![0.5], vec![0.3], vec![0.9], vec![0.5]]).unwrap();
        assert_eq!(weak_log_score(&m, &seq), LN_2);
        assert!(is_weakly_typical(&m, &seq, 0.01));
    }

    #[test]
    fn weak_score_m3_two_points() {
        let m = m3();
        let seq = m3_sequence(2, 1);
        let want = (LN_2 + LN_2 + SQRT_2.ln()) / 2.0;
        assert!((weak_log_score(&m, &seq) - want).abs() < 1e-15);
        assert!((want - 0.8664).abs() < 1e-4);
    }

    #[test]
    fn off_support_point_scores_infinity() {
        let m = m1();
        let seq = LabeledSequence::new(1, vec![0.5, 2.0], vec![0, 1]);
        assert_eq!(weak_log_score(&m, &seq), f64::INFINITY);
        assert!(!is_weakly_typical(&m, &seq, 1e9));
    }

    #[test]
    fn m3_weak_typicality_is_affine_in_count() {
        let m = m3();
        assert!(is_weakly_typical(&m, &m3_sequence(100, 50), 0.1));
        assert!(is_weakly_typical(&m, &m3_sequence(100, 50), 0.0));
        assert!(!is_weakly_typical(&m, &m3_sequence(100, 100), 0.1));
        let s = weak_log_score(&m, &m3_sequence(100, 100));
        assert!((s - m.mixture_entropy().unwrap().total - 0.1733).abs() < 1e-4);
    }

    #[test]
    fn empirical_type_counts() {
        let t = empirical_type(&[0, 1, 1], 2);
        assert_eq!(t.counts, vec![1, 2]);
        assert!((t.pmf[0] - 1.0 / 3.0).abs() < 1e-15 && (t.pmf[1] - 2.0 / 3.0).abs() < 1e-15);
        let ones = empirical_type(&[0; 5], 3);
        assert_eq!(ones.pmf, vec![1.0, 0.0, 0.0]);
    }

    #[test]
    fn strong_typicality_examples() {
        let t = EmpiricalType::from_counts(vec![50, 50]);
        assert!(t.is_strongly_typical(&[0.5, 0.5], 0.1));
        let t = EmpiricalType::from_counts(vec![70, 30]);
        assert!(!t.is_strongly_typical(&[0.5, 0.5], 0.1));
        let t = EmpiricalType::from_counts(vec![1, 99]);
        assert!(!t.is_strongly_typical(&[0.0, 1.0], 10.0));
        // boundary is excluded
        let t = EmpiricalType::from_counts(vec![3, 1]);
        assert!(!t.is_strongly_typical(&[0.5, 0.5], 0.25));
    }

    #[test]
    fn stratum_dimension_examples() {
        assert_eq!(stratum_dimension(&[0, 1, 1], &[0, 1]), 2);
        assert_eq!(stratum_dimension(&[0, 0, 0], &[0, 1]), 0);
        assert_eq!(stratum_dimension(&[1, 0, 1, 1], &[0, 1]), 3);
    }

    #[test]
    fn dimension_interval_examples() {
        for mode in [IntervalMode::Narrow, IntervalMode::Derived] {
            let (lo, hi) = dimension_interval(100, 0.1, &[0.5, 0.5], &[0, 1], mode).unwrap();
            assert!((lo - 34.15).abs() < 0.01 && (hi - 65.85).abs() < 0.01);
        }
        let (lo, hi) = dimension_interval(100, 0.1, &[0.5, 0.5], &[0, 2], IntervalMode::Derived).unwrap();
        assert!(((hi - lo) / 2.0 - 31.70).abs() < 0.01);
        let (lo, hi) = dimension_interval(100, 0.1, &[0.5, 0.5], &[0, 2], IntervalMode::Narrow).unwrap();
        assert!(((hi - lo) / 2.0 - 15.85).abs() < 0.01);
        let (lo, hi) = dimension_interval(40, 0.1, &[1.0], &[2], IntervalMode::Narrow).unwrap();
        assert_eq!((lo, hi), (80.0, 80.0));
    }

    #[test]
    fn tv_bound_examples() {
        let same = entropy_tv_bound(&[0.3, 0.7], &[0.3, 0.7]);
        assert_eq!((same.theta, same.bound, same.check), (0.0, 0.0, BoundCheck::Holds));
        let b = entropy_tv_bound(&[0.6, 0.4], &[0.5, 0.5]);
        assert!((b.theta - 0.2).abs() < 1e-15);
        assert!((b.bound - 0.4605).abs() < 1e-4);
        assert!((b.entropy_gap - 0.0201).abs() < 1e-4);
        assert_eq!(b.check, BoundCheck::Holds);
        let far = entropy_tv_bound(&[1.0, 0.0], &[0.0, 1.0]);
        assert_eq!(far.check, BoundCheck::NotApplicable);
    }

    fn labels_strategy() -> impl Strategy<Value = Vec<usize>> {
        prop::collection::vec(0usize..3, 1..40)
    }

    proptest! {
        #[test]
        fn score_is_permutation_invariant(seed in any::<u64>(), n in 1usize..60) {
            let m = m3();
            let mut stream = crate::rng::RandomStream::new(seed, 0);
            let seq = m.sample(&mut stream, n);
            let perm = stream.permutation(n);
            prop_assert_eq!(weak_log_score(&m, &seq), weak_log_score(&m, &seq.permuted(&perm)));
        }

        #[test]
        fn strong_typicality_depends_on_type_only(labels in labels_strategy(), eta in 0.01f64..0.6) {
            let q = [0.2, 0.3, 0.5];
            let t = empirical_type(&labels, 3);
            let rebuilt: Vec<usize> = t
                .counts
                .iter()
                .enumerate()
                .flat_map(|(a, &c)| std::iter::repeat_n(a, c))
                .collect();
            prop_assert_eq!(is_strongly_typical(&labels, &q, eta), is_strongly_typical(&rebuilt, &q, eta));
            prop_assert_eq!(is_strongly_typical(&labels, &q, eta), t.is_strongly_typical(&q, eta));
        }

        #[test]
        fn dimension_is_permutation_invariant(labels in labels_strategy(), seed in any::<u64>()) {
            let dims = [0, 1, 2];
            let perm = crate::rng::RandomStream::new(seed, 1).permutation(labels.len());
            let permuted: Vec<usize> = perm.iter().map(|&j| labels[j]).collect();
            prop_assert_eq!(stratum_dimension(&labels, &dims), stratum_dimension(&permuted, &dims));
            prop_assert_eq!(
                stratum_dimension(&labels, &dims),
                empirical_type(&labels, 3).dimension(&dims)
            );
        }

        #[test]
        fn concatenation_keeps_type(labels in labels_strategy()) {
            let doubled: Vec<usize> = labels.iter().chain(&labels).copied().collect();
            prop_assert_eq!(empirical_type(&labels, 3).pmf, empirical_type(&doubled, 3).pmf);
        }

        #[test]
        fn typical_pmf_entropy_within_delta_prime(
            raw in prop::collection::vec(0.05f64..1.0, 2..5),
            noise in prop::collection::vec(-1.0f64..1.0, 5),
            scale in 0.0f64..1.0,
            eta in 0.001f64..0.1,
        ) {
            let total: f64 = raw.iter().sum();
            let q: Vec<f64> = raw.iter().map(|r| r / total).collect();
            let k = q.len();
            // zero-sum perturbation with |P - Q| < η componentwise
            let mean: f64 = noise[..k].iter().sum::<f64>() / k as f64;
            let shift: Vec<f64> = noise[..k].iter().map(|e| e - mean).collect();
            let amp = shift.iter().fold(0.0f64, |a, s| a.max(s.abs()));
            let p: Vec<f64> = q
                .iter()
                .zip(&shift)
                .map(|(q, s)| if amp > 0.0 { q + 0.999 * scale * eta * s / amp } else { *q })
                .collect();
            prop_assume!(p.iter().all(|&x| x >= 0.0));
            let b = entropy_tv_bound(&p, &q);
            prop_assume!(k as f64 * eta <= 0.5);
            let delta_prime = Schedule::with_eta(1, eta, k).delta_prime;
            prop_assert!(b.check == BoundCheck::Holds);
            prop_assert!(b.entropy_gap <= delta_prime + WEAK_SLACK);
        }
    }

    /// Enumerate every label sequence of length n over {0,1,2} and check
    /// that strong typicality forces the derived-mode dimension interval.
    #[test]
    fn strongly_typical_dimensions_lie_in_derived_interval() {
        let q = [0.2, 0.3, 0.5];
        let dims = [0, 1, 2];
        for n in 1..=9usize {
            let s = schedule(n, 0.1, 3).unwrap();
            let (lo, hi) = dimension_interval(n, 0.1, &q, &dims, IntervalMode::Derived).unwrap();
            let total = 3usize.pow(n as u32);
            for code in 0..total {
                let mut c = code;
                let labels: Vec<usize> = (0..n)
                    .map(|_| {
                        let a = c % 3;
                        c /= 3;
                        a
                    })
                    .collect();
                if is_strongly_typical(&labels, &q, s.eta) {
                    let m = stratum_dimension(&labels, &dims) as f64;
                    assert!(lo <= m && m <= hi, "n={n} m={m} not in [{lo}, {hi}]");
                }
            }
        }
    }
}

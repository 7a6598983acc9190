use serde::Serialize;

use super::{check_basic, AepError};
use crate::measure::{Geometry, StratifiedMeasure};
use crate::stats::accurate_sum;
use crate::typicality::{score_from_logs, within_weak};

pub const MAX_ORACLE_LENGTH: usize = 8;
pub const MAX_ORACLE_SIZE: f64 = 1e7;

/// Exact weak-typical set statistics of a purely atomic measure.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OracleResult {
    /// `|W|`.
    pub count: u64,
    /// `ρ^{⊗n}(W)`.
    pub probability: f64,
    /// `μ^{⊗n}(W)` under the counting measure; equals `count`.
    pub volume: f64,
}

/// Enumerate every sequence in `E_X^n` and test weak typicality.
pub fn exhaustive_oracle(
    measure: &StratifiedMeasure,
    n: usize,
    delta: f64,
) -> Result<OracleResult, AepError> {
    check_basic(n, delta)?;
    let [stratum] = measure.strata() else {
        return Err(AepError::NotDiscrete);
    };
    let mut log_probs = Vec::new();
    for (w, c) in stratum.members() {
        let Geometry::Atoms(atoms) = c.geometry() else {
            return Err(AepError::NotDiscrete);
        };
        log_probs.extend(atoms.pmf().iter().map(|p| (w * p).ln()));
    }
    let k = log_probs.len();
    let size = (k as f64).powi(n as i32);
    if n > MAX_ORACLE_LENGTH || size > MAX_ORACLE_SIZE {
        return Err(AepError::TooLarge { size });
    }
    let h = measure.mixture_entropy()?.total;
    let mut count = 0u64;
    let mut digits = vec![0usize; n];
    let mut logs = vec![0.0; n];
    let probability = accurate_sum((0..size as u64).filter_map(|code| {
        let mut c = code as usize;
        for d in digits.iter_mut() {
            *d = c % k;
            c /= k;
        }
        for (l, &d) in logs.iter_mut().zip(&digits) {
            *l = log_probs[d];
        }
        let score = score_from_logs(&mut logs);
        within_weak(score, h, delta).then(|| {
            count += 1;
            (-(n as f64) * score).exp()
        })
    }));
    Ok(OracleResult { count, probability, volume: count as f64 })
}

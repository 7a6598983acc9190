//! Small statistical helpers shared by the estimators.

use serde::Serialize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    MonteCarlo,
    ImportanceSampling,
    Exhaustive,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::MonteCarlo => "monte-carlo",
            Method::ImportanceSampling => "importance-sampling",
            Method::Exhaustive => "exhaustive",
        }
    }
}

/// A point estimate with its standard error.
///
/// Exhaustive results always carry a zero standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateWithCI {
    pub value: f64,
    pub standard_error: f64,
    pub trials: usize,
    pub method: Method,
}

impl EstimateWithCI {
    pub fn exhaustive(value: f64) -> Self {
        Self { value, standard_error: 0.0, trials: 0, method: Method::Exhaustive }
    }

    /// `|value - target| <= k * se + rel_tol * max(1, |target|)`.
    pub fn agrees_with(&self, target: f64, k: f64, rel_tol: f64) -> bool {
        (self.value - target).abs() <= k * self.standard_error + rel_tol * target.abs().max(1.0)
    }
}

/// Compensated (Neumaier) summation.
pub fn accurate_sum<I: IntoIterator<Item = f64>>(values: I) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sample mean and standard error of the mean.
///
/// Returns a zero standard error for fewer than two samples.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = accurate_sum(values.iter().copied()) / n as f64;
    if n < 2 {
        return (mean, 0.0);
    }
    let ss = accurate_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    let var = ss / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Proportion of successes with the binomial standard error `sqrt(p(1-p)/n)`.
pub fn proportion(successes: usize, trials: usize) -> EstimateWithCI {
    let p = successes as f64 / trials as f64;
    EstimateWithCI {
        value: p,
        standard_error: (p * (1.0 - p) / trials as f64).sqrt(),
        trials,
        method: Method::MonteCarlo,
    }
}

/// Estimate `ln E[w]` from per-trial log-weights (`-inf` encodes a zero
/// weight), with the delta-method standard error `se(mean) / mean`.
///
/// Returns `None` when every weight is zero.
pub fn log_mean_exp(log_weights: &[f64]) -> Option<(f64, f64)> {
    let max = log_weights.iter().copied().filter(|w| w.is_finite()).fold(f64::NEG_INFINITY, f64::max);
    if !max.is_finite() {
        return None;
    }
    let scaled: Vec<f64> =
        log_weights.iter().map(|&w| if w.is_finite() { (w - max).exp() } else { 0.0 }).collect();
    let (mean, se) = mean_and_se(&scaled);
    Some((mean.ln() + max, se / mean))
}

/// Ordinary least squares fit `y ≈ slope * x + intercept`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r_squared: f64,
}

pub fn least_squares(xs: &[f64], ys: &[f64]) -> LinearFit {
    assert_eq!(xs.len(), ys.len());
    let n = xs.len() as f64;
    let mx = accurate_sum(xs.iter().copied()) / n;
    let my = accurate_sum(ys.iter().copied()) / n;
    let sxx = accurate_sum(xs.iter().map(|x| (x - mx) * (x - mx)));
    let sxy = accurate_sum(xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)));
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_tot = accurate_sum(ys.iter().map(|y| (y - my) * (y - my)));
    let ss_res = accurate_sum(xs.iter().zip(ys).map(|(x, y)| (y - slope * x - intercept).powi(2)));
    // a constant response fitted exactly counts as a perfect fit
    let r_squared = if ss_tot <= f64::EPSILON * n * (1.0 + my * my) {
        if ss_res <= f64::EPSILON * n * (1.0 + my * my) {
            1.0
        } else {
            0.0
        }
    } else {
        1.0 - ss_res / ss_tot
    };
    LinearFit { slope, intercept, r_squared }
}

/// Shannon entropy in nats of a probability vector, with `0 ln 0 = 0`.
pub fn shannon_entropy(pmf: &[f64]) -> f64 {
    -accurate_sum(pmf.iter().filter(|&&p| p > 0.0).map(|&p| p * p.ln()))
}

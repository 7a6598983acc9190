//! Fixtures and independent oracles shared by the integration tests.
#![allow(dead_code)]

use std::f64::consts::LN_2;

use strata_core::measure::{build_standard_form, RectifiableComponent, StratifiedMeasure};
use strata_core::EstimateWithCI;

/// `½ δ_{0.5} + ½ Uniform[0,1]` in one dimension.
pub fn m1() -> StratifiedMeasure {
    build_standard_form(vec![
        (0.5, RectifiableComponent::atom(vec![0.5]).unwrap()),
        (0.5, RectifiableComponent::segment(vec![0.0], vec![1.0]).unwrap()),
    ])
    .unwrap()
}

/// `½ δ_{(0.25, 0.75)} + ½ uniform on the unit-square diagonal`.
pub fn m3() -> StratifiedMeasure {
    build_standard_form(vec![
        (0.5, RectifiableComponent::atom(vec![0.25, 0.75]).unwrap()),
        (0.5, RectifiableComponent::segment(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()),
    ])
    .unwrap()
}

/// Atoms 0, 1, 2 with pmf (½, ¼, ¼).
pub fn three_atoms() -> StratifiedMeasure {
    build_standard_form(vec![(
        1.0,
        RectifiableComponent::atoms(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0.5, 0.25, 0.25]).unwrap(),
    )])
    .unwrap()
}

pub fn single(c: RectifiableComponent) -> StratifiedMeasure {
    build_standard_form(vec![(1.0, c)]).unwrap()
}

pub fn diagonal() -> StratifiedMeasure {
    single(RectifiableComponent::segment(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap())
}

pub fn unit_square() -> StratifiedMeasure {
    single(RectifiableComponent::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap())
}

/// Segment off the dyadic grid with a density break at one third of its
/// length: mass 0.6 on the first third, 0.4 on the rest.
pub fn off_grid_segment() -> RectifiableComponent {
    RectifiableComponent::segment_with_density(
        vec![0.1, 0.15],
        vec![0.8, 0.6],
        vec![0.0, 1.0 / 3.0, 1.0],
        vec![0.6, 0.4],
    )
    .unwrap()
}

/// Atom, diagonal and unit square with weights (0.3, 0.3, 0.4).
pub fn three_strata() -> StratifiedMeasure {
    build_standard_form(vec![
        (0.3, RectifiableComponent::atom(vec![0.25, 0.75]).unwrap()),
        (0.3, RectifiableComponent::segment(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()),
        (0.4, RectifiableComponent::boxed(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()),
    ])
    .unwrap()
}

fn ln_factorial(k: u64) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

/// `P(Bin(n, ½) = k)`.
pub fn binomial_half_pmf(n: u64, k: u64) -> f64 {
    (ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k) - n as f64 * LN_2).exp()
}

/// `P(keep(|Bin(n, ½) - n/2|))`.
pub fn binomial_half_prob(n: u64, keep: impl Fn(f64) -> bool) -> f64 {
    (0..=n).filter(|&k| keep((k as f64 - n as f64 / 2.0).abs())).map(|k| binomial_half_pmf(n, k)).sum()
}

/// Proportion agreement with an exact probability, using the larger of the
/// estimated and the null standard errors.
pub fn proportion_agrees(est: &EstimateWithCI, p0: f64) -> bool {
    let se0 = (p0 * (1.0 - p0) / est.trials as f64).sqrt();
    (est.value - p0).abs() <= 3.0 * est.standard_error.max(se0) + 1e-12
}

/// Hand enumeration of the weak typical set of an i.i.d. pmf: returns
/// (count, probability, inverse-probability volume under counting measure).
pub fn enumerate_typical(pmf: &[f64], n: u32, delta: f64) -> (u64, f64, f64) {
    let h: f64 = -pmf.iter().map(|p| p * p.ln()).sum::<f64>();
    let k = pmf.len() as u64;
    let mut count = 0;
    let mut prob = 0.0;
    for code in 0..k.pow(n) {
        let mut c = code;
        let mut lp = 0.0;
        for _ in 0..n {
            lp += pmf[(c % k) as usize].ln();
            c /= k;
        }
        if (-lp / n as f64 - h).abs() <= delta + 1e-12 {
            count += 1;
            prob += lp.exp();
        }
    }
    (count, prob, count as f64)
}

//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
//! failure.

mod common;

use std::f64::consts::{LN_2, SQRT_2};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use common::*;
use strata_core::aep::{
    estimate_stratum_volume, estimate_tv_defect, estimate_typical_probability, estimate_typical_volume,
    exhaustive_oracle, symmetry_trials, Runner,
};
use strata_core::dyadic::{cell_table, info_dimension, renyi_defect};
use strata_core::measure::{component_entropy, StratifiedMeasure};
use strata_core::typicality::{
    dimension_interval, schedule, stratum_dimension, EmpiricalType, IntervalMode, TypicalityParams,
};
use strata_core::RandomStream;

const WORKERS: usize = 4;

struct Outcome {
    pass: bool,
    detail: String,
}

fn check(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut out = f();
    let elapsed = start.elapsed();
    out.detail.push_str(&format!("; {:.2}s", elapsed.as_secs_f64()));
    if let Some(limit) = limit {
        if elapsed > limit {
            out.pass = false;
            out.detail.push_str(&format!(" exceeds {:.0}s limit", limit.as_secs_f64()));
        }
    }
    out
}

fn c1_chain_rule() -> Outcome {
    let h1 = m1().mixture_entropy().unwrap();
    let h3 = m3().mixture_entropy().unwrap();
    let want3 = LN_2 + 0.5 * SQRT_2.ln();
    let exact = (h1.total - LN_2).abs() <= 1e-12
        && (h3.total - want3).abs() <= 1e-12
        && (h1.labels + h1.conditional - h1.total).abs() <= 1e-12
        && (h3.labels + h3.conditional - h3.total).abs() <= 1e-12;
    let mc1 = m1().entropy_monte_carlo(&mut RandomStream::new(101, 0), 100_000).unwrap();
    let mc3 = m3().entropy_monte_carlo(&mut RandomStream::new(103, 0), 100_000).unwrap();
    let mc = mc1.agrees_with(LN_2, 3.0, 1e-12) && mc3.agrees_with(want3, 3.0, 1e-12);
    check(
        exact && mc,
        format!(
            "H(M1)={:.12} H(M3)={:.12}; MC M1 {:.6}±{:.1e}, M3 {:.6}±{:.1e}",
            h1.total, h3.total, mc1.value, mc1.standard_error, mc3.value, mc3.standard_error
        ),
    )
}

fn c2_aep_probability() -> Outcome {
    let r = Runner::new(201, WORKERS);
    let p = estimate_typical_probability(&m3(), 100, 0.1, 10_000, &r).unwrap();
    let radius = 100.0 * 0.1 / SQRT_2.ln();
    let oracle = binomial_half_prob(100, |dev| dev <= radius);
    let big = estimate_typical_probability(&m3(), 1000, 0.1, 10_000, &r.child(1)).unwrap();
    check(
        proportion_agrees(&p, oracle) && big.value >= 0.95,
        format!(
            "n=100: {:.6}±{:.1e} vs oracle {:.10}; n=1000: {:.4}",
            p.value, p.standard_error, oracle, big.value
        ),
    )
}

fn c3_aep_volume() -> Outcome {
    let r = Runner::new(301, WORKERS);
    let (n, delta, eps) = (10usize, 0.01, 0.05f64);
    let h = LN_2;
    let v = estimate_typical_volume(&m1(), n, delta, 10_000, &r).unwrap();
    let nf = n as f64;
    let lo = (1.0 - eps).ln() + nf * (h - delta);
    let hi = nf * (h + delta);
    let m1_ok = v.agrees_with(nf * LN_2, 3.0, 1e-12) && lo <= v.value && v.value <= hi;

    let (count, prob, vol) = enumerate_typical(&[0.5, 0.25, 0.25], 3, 0.2);
    let lib = exhaustive_oracle(&three_atoms(), 3, 0.2).unwrap();
    let oracle_ok = count == 18 && (prob - 0.75).abs() < 1e-12 && lib.count == 18 && lib.volume == vol;
    let is = estimate_typical_volume(&three_atoms(), 3, 0.2, 10_000, &r.child(1)).unwrap();
    let is_ok = (is.value - 18f64.ln()).abs() <= 3.0 * is.standard_error;
    check(
        m1_ok && oracle_ok && is_ok,
        format!(
            "M1 ln-vol {:.9} in [{lo:.4}, {hi:.4}]; atoms oracle |W|={count} ρ(W)={prob:.4}, IS vol {:.3} (ln {:.4}±{:.4})",
            v.value,
            is.value.exp(),
            is.value,
            is.standard_error
        ),
    )
}

/// Draw label sequences from the measure until `count` strongly typical
/// ones are found.
fn typical_labels(m: &StratifiedMeasure, n: usize, eta: f64, count: usize, seed: u64) -> Vec<Vec<usize>> {
    let mut s = RandomStream::new(seed, 0);
    let mut out = Vec::new();
    while out.len() < count {
        let y = m.sample_labels(&mut s, n);
        if EmpiricalType::new(&y, m.len()).is_strongly_typical(m.weights(), eta) {
            out.push(y);
        }
    }
    out
}

fn c4_stratum_volume() -> Outcome {
    let m = m3();
    let (n, delta) = (50usize, 0.1);
    let sched = schedule(n, 0.1, 2).unwrap();
    let cond = m.mixture_entropy().unwrap().conditional;
    let bound = cond + delta + sched.delta_prime;
    let ys = typical_labels(&m, n, sched.eta, 50, 401);
    let r = Runner::new(402, WORKERS);
    let mut held = 0;
    let mut worst = f64::NEG_INFINITY;
    for (i, y) in ys.iter().enumerate() {
        let v = estimate_stratum_volume(&m, y, delta, &sched, 1000, &r.child(i as u64)).unwrap();
        let rate = v.value / n as f64;
        worst = worst.max(rate);
        if rate <= bound + 3.0 * v.standard_error / n as f64 {
            held += 1;
        }
    }
    check(
        held == ys.len(),
        format!("{held}/{} strata within bound {bound:.4}; max rate {worst:.4}", ys.len()),
    )
}

fn c5_strong_coverage() -> Outcome {
    let m = m3();
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, n) in [100usize, 1000].into_iter().enumerate() {
        let d = estimate_tv_defect(&m, n, 0.1, 0.1, 10_000, &Runner::new(501 + i as u64, WORKERS)).unwrap();
        pass &= d.strong_failure.value <= d.schedule.epsilon;
        parts.push(format!("n={n}: failure {:.5} <= ε_n {:.5}", d.strong_failure.value, d.schedule.epsilon));
    }
    check(pass, parts.join("; "))
}

fn c6_dimension_concentration() -> Outcome {
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, m) in [("M3", m3()), ("3-strata", three_strata())] {
        for n in [100usize, 1000] {
            let sched = schedule(n, 0.1, m.len()).unwrap();
            let dims = m.dimensions();
            let q = m.weights();
            let derived = dimension_interval(n, 0.1, q, &dims, IntervalMode::Derived).unwrap();
            let narrow = dimension_interval(n, 0.1, q, &dims, IntervalMode::Narrow).unwrap();
            let mut s = RandomStream::new(601 + n as u64, m.len() as u64);
            let (mut typical, mut in_derived, mut in_narrow) = (0usize, 0usize, 0usize);
            for _ in 0..2000 {
                let y = m.sample_labels(&mut s, n);
                if !EmpiricalType::new(&y, m.len()).is_strongly_typical(q, sched.eta) {
                    continue;
                }
                typical += 1;
                let dim = stratum_dimension(&y, &dims) as f64;
                in_derived += usize::from(derived.0 <= dim && dim <= derived.1);
                in_narrow += usize::from(narrow.0 <= dim && dim <= narrow.1);
            }
            pass &= typical > 0 && in_derived == typical;
            parts.push(format!(
                "{name} n={n}: derived {in_derived}/{typical}, narrow {in_narrow}/{typical} (diagnostic)"
            ));
        }
    }
    check(pass, parts.join("; "))
}

fn c7_tv_defect() -> Outcome {
    let m = m3();
    let delta = 0.1;
    let mut estimates = Vec::new();
    let mut pass = true;
    let mut parts = Vec::new();
    for (i, n) in [200usize, 2000].into_iter().enumerate() {
        let d = estimate_tv_defect(&m, n, delta, 0.1, 20_000, &Runner::new(701 + i as u64, WORKERS)).unwrap();
        let nf = n as f64;
        let weak_radius = nf * delta / SQRT_2.ln();
        let strong_radius = nf * d.schedule.eta;
        let oracle =
            1.0 - binomial_half_prob(n as u64, |dev| dev <= weak_radius + 1e-9 && dev < strong_radius);
        pass &= proportion_agrees(&d.total, oracle);
        parts.push(format!("n={n}: {:.6} vs oracle {:.3e}", d.total.value, oracle));
        estimates.push(d.total.value);
    }
    pass &= estimates[0] > estimates[1] && estimates[1] <= 0.1;
    check(pass, parts.join("; "))
}

fn c8_info_dimension() -> Outcome {
    let sq = info_dimension(&unit_square(), 1..=8).unwrap();
    let m = info_dimension(&m3(), 3..=10).unwrap();
    check(
        (sq.fit.slope - 2.0).abs() <= 1e-9 && (m.fit.slope - 0.5).abs() <= 0.05,
        format!(
            "square slope {:.12} (R² {:.6}); M3 slope {:.6} (R² {:.6})",
            sq.fit.slope, sq.fit.r_squared, m.fit.slope, m.fit.r_squared
        ),
    )
}

fn c9_renyi_defect() -> Outcome {
    let want = SQRT_2.ln();
    let worst_diag =
        (0..=10).map(|l| (renyi_defect(&diagonal(), l).unwrap().value - want).abs()).fold(0.0, f64::max);
    let c = off_grid_segment();
    let h = component_entropy(&c).unwrap();
    let m = single(c);
    let gaps: Vec<f64> = (2..=10).map(|l| renyi_defect(&m, l).unwrap().value - h).collect();
    let monotone = gaps.windows(2).all(|w| w[1] < w[0]) && gaps.iter().all(|&g| g >= -1e-12);
    check(
        worst_diag <= 1e-9 && monotone,
        format!(
            "diagonal max error {worst_diag:.1e}; off-grid gap {:.3e} (ℓ=2) → {:.3e} (ℓ=10)",
            gaps[0],
            gaps[gaps.len() - 1]
        ),
    )
}

fn c10_symmetry() -> Outcome {
    let m = m3();
    let n = 50;
    let params = TypicalityParams::new(0.1, schedule(n, 0.1, 2).unwrap()).unwrap();
    let (held, total) = symmetry_trials(&m, &params, 1000, &Runner::new(1001, WORKERS));
    check(held == total, format!("{held}/{total} randomized trials"))
}

fn c11_refinement() -> Outcome {
    let fixtures: Vec<(&str, StratifiedMeasure, u32)> = vec![
        ("M1", m1(), 12),
        ("M3", m3(), 12),
        ("diagonal", diagonal(), 12),
        ("square", unit_square(), 8),
        ("off-grid", single(off_grid_segment()), 12),
        ("3-strata", three_strata(), 8),
        ("atoms", three_atoms(), 6),
    ];
    let mut worst = 0.0f64;
    let mut levels = 0;
    for (_, m, top) in &fixtures {
        let mut coarse = cell_table(m, 0).unwrap();
        worst = worst.max((coarse.total_probability() - 1.0).abs());
        for l in 1..=*top {
            let fine = cell_table(m, l).unwrap();
            worst = worst
                .max(fine.coarsen().unwrap().max_difference(&coarse))
                .max((fine.total_probability() - 1.0).abs());
            coarse = fine;
            levels += 1;
        }
    }
    check(
        worst <= 1e-12,
        format!("{} fixtures, {levels} level pairs, max deviation {worst:.1e}", fixtures.len()),
    )
}

fn main() -> ExitCode {
    type Criterion = (&'static str, &'static str, Option<u64>, fn() -> Outcome);
    let criteria: [Criterion; 11] = [
        ("C1", "chain rule exactness", Some(1), c1_chain_rule),
        ("C2", "typical-set probability", Some(5), c2_aep_probability),
        ("C3", "typical-set volume bounds", Some(10), c3_aep_volume),
        ("C4", "stratum-volume upper bound", Some(30), c4_stratum_volume),
        ("C5", "strong-typicality coverage", None, c5_strong_coverage),
        ("C6", "dimension concentration", None, c6_dimension_concentration),
        ("C7", "total-variation defect", None, c7_tv_defect),
        ("C8", "information dimension", Some(5), c8_info_dimension),
        ("C9", "Rényi defect", None, c9_renyi_defect),
        ("C10", "permutation symmetry", None, c10_symmetry),
        ("C11", "martingale refinement", None, c11_refinement),
    ];
    let mut failed = 0;
    for (id, name, limit, run) in criteria {
        let out = timed(limit.map(Duration::from_secs), run);
        let tag = if out.pass { "PASS" } else { "FAIL" };
        failed += usize::from(!out.pass);
        println!("{tag} [{id}] {name}: {}", out.detail);
    }
    println!("acceptance: {} of 11 criteria passed", 11 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

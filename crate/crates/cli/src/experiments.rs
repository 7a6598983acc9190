//! Experiment kinds, looked up by name in a registry.

use std::collections::BTreeMap;
use std::f64::consts::LN_2;

use strata_core::aep::{
    adjacent_type_discrepancy, estimate_tv_defect, estimate_typical_probability, estimate_typical_volume,
    stratum_report, symmetry_trials, tightness_diagnostic, AepError, Runner,
};
use strata_core::dyadic::{estimator, quantized_entropy, renyi_defect, R_SQUARED_WARNING};
use strata_core::stats::{least_squares, proportion, EstimateWithCI};
use strata_core::typicality::{
    dimension_interval, entropy_tv_bound, is_strongly_typical, schedule, BoundCheck, EmpiricalType,
    IntervalMode, TypicalityParams,
};
use strata_core::StratifiedMeasure;

use crate::config::Params;
use crate::report::{Row, RowTemplate};
use crate::svg::{Plot, Series};
use crate::CliError;

/// Tolerance on the information-dimension slope.
pub const SLOPE_TOLERANCE: f64 = 0.05;
/// Half-width of the Monte Carlo acceptance band, in standard errors.
pub const SE_BAND: f64 = 3.0;

/// Everything an experiment needs to run.
pub struct Context<'a> {
    pub measure: &'a StratifiedMeasure,
    pub params: &'a Params,
    pub template: RowTemplate,
    /// Keyed by experiment name; children are keyed by `n` or level so a
    /// single-value replay reproduces the same row.
    pub runner: Runner,
}

pub trait Experiment: Send + Sync {
    fn name(&self) -> &'static str;
    fn run(&self, ctx: &Context) -> Result<Vec<Row>, CliError>;
    /// Line plot of the rows, if this kind has one.
    fn plot(&self, _rows: &[Row]) -> Option<Plot> {
        None
    }
}

pub fn registry() -> BTreeMap<&'static str, Box<dyn Experiment>> {
    let all: Vec<Box<dyn Experiment>> = vec![
        Box::new(Entropy),
        Box::new(Aep),
        Box::new(Stratum),
        Box::new(Dims),
        Box::new(Renyi),
        Box::new(Diagnose),
    ];
    all.into_iter().map(|e| (e.name(), e)).collect()
}

/// Stable stream key for an experiment name.
pub fn stream_key(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325u64, |h, b| (h ^ b as u64).wrapping_mul(0x100_0000_01b3))
}

fn series(rows: &[Row], quantity: &str, x: impl Fn(&Row) -> Option<f64>) -> Vec<(f64, f64)> {
    rows.iter().filter(|r| r.quantity == quantity).filter_map(|r| x(r).map(|x| (x, r.estimate))).collect()
}

fn bound_series(rows: &[Row], quantity: &str, high: bool) -> Vec<(f64, f64)> {
    rows.iter()
        .filter(|r| r.quantity == quantity)
        .filter_map(|r| {
            let b = if high { r.bound_high } else { r.bound_low };
            Some((r.n? as f64, b?))
        })
        .collect()
}

/// Exact entropy decomposition and a Monte Carlo check of the total.
pub struct Entropy;

impl Experiment for Entropy {
    fn name(&self) -> &'static str {
        "entropy"
    }

    fn run(&self, ctx: &Context) -> Result<Vec<Row>, CliError> {
        let (m, t) = (ctx.measure, &ctx.template);
        let h = m.mixture_entropy()?;
        let trials = ctx.params.trials;
        let est = m.entropy_monte_carlo(&mut ctx.runner.stream(0), trials)?;
        let band = SE_BAND * est.standard_error;
        Ok(vec![
            t.exact("entropy_total", h.total),
            t.exact("entropy_labels", h.labels),
            t.exact("entropy_conditional", h.conditional),
            t.exact("mean_dimension", m.mean_dimension()),
            t.row("entropy_monte_carlo", &est).trials(trials).within(
                Some(h.total - band),
                Some(h.total + band),
                0.0,
            ),
        ])
    }
}

/// Probability and log-volume of the weakly typical set per `n`.
pub struct Aep;

impl Experiment for Aep {
    fn name(&self) -> &'static str {
        "aep"
    }

    fn run(&self, ctx: &Context) -> Result<Vec<Row>, CliError> {
        let (m, t, p) = (ctx.measure, &ctx.template, ctx.params);
        let h = m.mixture_entropy()?.total;
        let mut rows = Vec::new();
        for &n in &p.ns {
            let r = ctx.runner.child(n as u64);
            let prob = estimate_typical_probability(m, n, p.delta, p.trials, &r.child(1))?;
            let vol = estimate_typical_volume(m, n, p.delta, p.trials, &r.child(2))?;
            let nf = n as f64;
            // on W the density is at most e^{-n(H-δ)}, so μ(W) >= ρ(W) e^{n(H-δ)}
            let low = (prob.value > 0.0).then(|| prob.value.ln() + nf * (h - p.delta));
            let prob_log_se = if prob.value > 0.0 { prob.standard_error / prob.value } else { 0.0 };
            let slack = SE_BAND * vol.standard_error.hypot(prob_log_se);
            rows.push(t.row("typical_probability", &prob).n(n).delta(p.delta).trials(p.trials));
            rows.push(t.row("log_volume", &vol).n(n).delta(p.delta).trials(p.trials).within(
                low,
                Some(nf * (h + p.delta)),
                slack,
            ));
        }
        Ok(rows)
    }

    fn plot(&self, rows: &[Row]) -> Option<Plot> {
        Some(Plot {
            title: "Typical-set log-volume".into(),
            x_label: "n".into(),
            y_label: "ln volume".into(),
            series: vec![
                Series::solid("estimate", series(rows, "log_volume", |r| r.n.map(|n| n as f64))),
                Series::dashed("upper bound", bound_series(rows, "log_volume", true)),
                Series::dashed("lower bound", bound_series(rows, "log_volume", false)),
            ],
        })
    }
}

/// Volume rate, probability and dimension of sampled doubly typical strata.
pub struct Stratum;

impl Experiment for Stratum {
    fn name(&self) -> &'static str {
        "stratum"
    }

    fn run(&self, ctx: &Context) -> Result<Vec<Row>, CliError> {
        let (m, t, p) = (ctx.measure, &ctx.template, ctx.params);
        let ent = m.mixture_entropy()?;
        let dims = m.dimensions();
        let q = m.weights();
        let mut rows = Vec::new();
        for &n in &p.ns {
            let sched = schedule(n, p.xi, m.len())?;
            let bound = ent.conditional + p.delta + sched.delta_prime;
            let derived = dimension_interval(n, p.xi, q, &dims, IntervalMode::Derived)?;
            let narrow = dimension_interval(n, p.xi, q, &dims, IntervalMode::Narrow)?;
            let r = ctx.runner.child(n as u64);
            let mut stream = r.stream(0);
            let (mut typical, mut in_derived, mut in_narrow) = (0, 0, 0);
            let stamp = |row: Row| row.n(n).typicality(p.delta, p.xi).trials(p.trials);
            for i in 0..p.strata {
                let y = m.sample_labels(&mut stream, n);
                if !is_strongly_typical(&y, q, sched.eta) {
                    continue;
                }
                typical += 1;
                let rep = stratum_report(m, &y, p.delta, &sched, p.trials, &r.child(1 + i as u64))?;
                let nf = n as f64;
                let rate = EstimateWithCI {
                    value: rep.log_volume.value / nf,
                    standard_error: rep.log_volume.standard_error / nf,
                    ..rep.log_volume
                };
                rows.push(stamp(t.row("stratum_volume_rate", &rate)).index(i).within(
                    None,
                    Some(bound),
                    SE_BAND * rate.standard_error,
                ));
                rows.push(stamp(t.row("stratum_probability", &rep.probability)).index(i));
                let d = rep.dimension as f64;
                let inside = |(lo, hi): (f64, f64)| lo <= d && d <= hi;
                in_derived += usize::from(inside(derived));
                in_narrow += usize::from(inside(narrow));
                rows.push(stamp(t.exact("stratum_dimension", d)).index(i).within(
                    Some(derived.0),
                    Some(derived.1),
                    0.0,
                ));
            }
            let frac = proportion(typical, p.strata);
            rows.push(stamp(t.row("strongly_typical_fraction", &frac)).within(
                Some(1.0 - sched.epsilon),
                None,
                SE_BAND * frac.standard_error,
            ));
            if typical > 0 {
                rows.push(
                    stamp(t.row("dimension_coverage_derived", &proportion(in_derived, typical)))
                        .reference(Some(derived.0), Some(derived.1))
                        .pass(in_derived == typical),
                );
                rows.push(
                    stamp(t.row("dimension_coverage_narrow", &proportion(in_narrow, typical)))
                        .reference(Some(narrow.0), Some(narrow.1)),
                );
            }
        }
        Ok(rows)
    }
}

/// Quantized entropy per level and the slope against `ℓ ln 2`.
pub struct Dims;

impl Experiment for Dims {
    fn name(&self) -> &'static str {
        "dims"
    }

    fn run(&self, ctx: &Context) -> Result<Vec<Row>, CliError> {
        let (m, t, p) = (ctx.measure, &ctx.template, ctx.params);
        let levels: Vec<u32> = p.levels.clone().collect();
        if levels.len() < 3 {
            return Err(CliError::Validation(vec![format!(
                "dims needs at least 3 levels, got {}",
                levels.len()
            )]));
        }
        let est = estimator(&p.estimator, p.trials)
            .ok_or_else(|| CliError::Validation(vec![format!("unknown estimator `{}`", p.estimator)]))?;
        let sampled = est.name() != "exact";
        let mut rows = Vec::new();
        let mut hs = Vec::with_capacity(levels.len());
        for &l in &levels {
            let e = quantized_entropy(m, l, est.as_ref(), &mut ctx.runner.child(l as u64).stream(0))?;
            hs.push(e.value);
            let row = t.row("quantized_entropy", &e).level(l).method(est.name());
            rows.push(if sampled { row.trials(p.trials) } else { row });
        }
        let xs: Vec<f64> = levels.iter().map(|&l| l as f64 * LN_2).collect();
        let fit = least_squares(&xs, &hs);
        let target = m.mean_dimension();
        rows.push(t.exact("mean_dimension", target));
        rows.push(t.exact("information_dimension", fit.slope).method(est.name()).within(
            Some(target - SLOPE_TOLERANCE),
            Some(target + SLOPE_TOLERANCE),
            0.0,
        ));
        rows.push(t.exact("r_squared", fit.r_squared).method(est.name()).within(
            Some(R_SQUARED_WARNING),
            None,
            0.0,
        ));
        Ok(rows)
    }

    fn plot(&self, rows: &[Row]) -> Option<Plot> {
        Some(Plot {
            title: "Quantized entropy".into(),
            x_label: "level".into(),
            y_label: "entropy (nats)".into(),
            series: vec![Series::solid(
                "H(quantized)",
                series(rows, "quantized_entropy", |r| r.level.map(f64::from)),
            )],
        })
    }
}

/// Quantized entropy plus the defect term `Σ p ln μ(C)` per level.
pub struct Renyi;

impl Experiment for Renyi {
    fn name(&self) -> &'static str {
        "renyi"
    }

    fn run(&self, ctx: &Context) -> Result<Vec<Row>, CliError> {
        let (m, t, p) = (ctx.measure, &ctx.template, ctx.params);
        let h = m.mixture_entropy()?.total;
        let mut rows = vec![t.exact("entropy_reference", h)];
        for l in p.levels.clone() {
            let d = renyi_defect(m, l)?;
            rows.push(t.exact("quantized_entropy", d.quantized_entropy).level(l));
            rows.push(t.exact("defect_term", d.defect_term).level(l));
            rows.push(t.exact("renyi_defect", d.value).level(l).reference(Some(h), Some(h)));
            if let Some(k) = d.log_k_sum {
                rows.push(t.exact("log_k_sum", k).level(l));
            }
        }
        Ok(rows)
    }

    fn plot(&self, rows: &[Row]) -> Option<Plot> {
        let level = |r: &Row| r.level.map(f64::from);
        let reference: Vec<(f64, f64)> = rows
            .iter()
            .filter(|r| r.quantity == "renyi_defect")
            .filter_map(|r| Some((level(r)?, r.bound_high?)))
            .collect();
        Some(Plot {
            title: "Entropy by level".into(),
            x_label: "level".into(),
            y_label: "entropy (nats)".into(),
            series: vec![
                Series::solid("H(quantized)", series(rows, "quantized_entropy", level)),
                Series::solid("H(quantized) + defect", series(rows, "renyi_defect", level)),
                Series::dashed("entropy", reference),
            ],
        })
    }
}

/// Defect of the doubly typical set, tightness, symmetry and type-class
/// discrepancies.
pub struct Diagnose;

impl Experiment for Diagnose {
    fn name(&self) -> &'static str {
        "diagnose"
    }

    fn run(&self, ctx: &Context) -> Result<Vec<Row>, CliError> {
        let (m, t, p) = (ctx.measure, &ctx.template, ctx.params);
        let k = m.len();
        let q = m.weights();
        let mut rows = Vec::new();
        for &n in &p.ns {
            let r = ctx.runner.child(n as u64);
            let stamp = |row: Row| row.n(n).typicality(p.delta, p.xi).trials(p.trials);

            let d = estimate_tv_defect(m, n, p.delta, p.xi, p.trials, &r.child(1))?;
            let union = d.weak_failure.value + d.strong_failure.value;
            rows.push(stamp(t.row("tv_defect", &d.total)).within(None, Some(union), 1e-15));
            rows.push(stamp(t.row("weak_failure", &d.weak_failure)));
            rows.push(stamp(t.row("strong_failure", &d.strong_failure)).within(
                None,
                Some(d.schedule.epsilon),
                SE_BAND * d.strong_failure.standard_error,
            ));

            let tight =
                tightness_diagnostic(m, n, p.delta, p.xi, p.epsilon, p.strata, p.trials, &r.child(2))?;
            let stamp_eps = |row: Row| stamp(row).epsilon(p.epsilon);
            rows.push(stamp_eps(t.exact("tightness_threshold", tight.threshold)));
            if tight.strongly_typical > 0 {
                let frac = proportion(tight.in_b, tight.strongly_typical);
                rows.push(stamp_eps(t.row("tightness_fraction", &frac)));
            }
            rows.push(stamp_eps(t.exact("log_count_typical_rate", tight.log_count_a_rate)));
            rows.push(stamp_eps(t.exact("log_count_tight_rate", tight.log_count_b_rate)));

            let sched = schedule(n, p.xi, k)?;
            let params = TypicalityParams::new(p.delta, sched)?;
            let (held, total) = symmetry_trials(m, &params, p.trials, &r.child(3));
            rows.push(stamp(t.row("type_symmetry", &proportion(held, total))).pass(held == total));

            let mut stream = r.child(4).stream(0);
            let y = m.sample_labels(&mut stream, n);
            let tv = entropy_tv_bound(&EmpiricalType::new(&y, k).pmf, q);
            rows.push(stamp(t.exact("label_tv_distance", tv.theta)));
            let gap = stamp(t.exact("entropy_tv_gap", tv.entropy_gap)).reference(None, Some(tv.bound));
            rows.push(match tv.check {
                BoundCheck::Holds => gap.pass(true),
                BoundCheck::Violated => gap.pass(false),
                BoundCheck::NotApplicable => gap,
            });

            if k >= 2 {
                if let Some(y) = (0..p.strata).find_map(|_| {
                    let y = m.sample_labels(&mut stream, n);
                    let pos = y.iter().position(|&a| a == 0)?;
                    let mut moved = y.clone();
                    moved[pos] = 1;
                    (is_strongly_typical(&y, q, sched.eta) && is_strongly_typical(&moved, q, sched.eta))
                        .then_some(y)
                }) {
                    match adjacent_type_discrepancy(m, &y, 0, 1, p.delta, &sched, p.trials, &r.child(5)) {
                        Ok(a) => {
                            rows.push(stamp(t.exact("adjacent_tv_distance", a.tv_distance)));
                            let ratio = EstimateWithCI {
                                value: a.log_ratio,
                                standard_error: a.log_ratio_se,
                                trials: p.trials,
                                method: strata_core::Method::ImportanceSampling,
                            };
                            rows.push(stamp(t.row("adjacent_log_ratio", &ratio)));
                        }
                        Err(AepError::DegenerateWeights) => {}
                        Err(e) => return Err(e.into()),
                    }
                }
            }
        }
        Ok(rows)
    }
}

use std::collections::BTreeMap;
use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::{DyadicCell, DyadicError, MAX_TABLE_ENTRIES};
use crate::measure::{RectifiableComponent, StratifiedMeasure};
use crate::stats::{accurate_sum, shannon_entropy};

/// `H^m(C ∩ E)` for one component.
pub fn cell_measure(component: &RectifiableComponent, cell: &DyadicCell) -> Result<f64, DyadicError> {
    if cell.dim() != component.ambient_dim() {
        return Err(DyadicError::DimensionMismatch { expected: component.ambient_dim(), found: cell.dim() });
    }
    Ok(component.carrier().cell_measure(cell))
}

/// Contribution of one stratum to a cell.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComponentShare {
    pub component: usize,
    /// `q_i ρ_i(C)`.
    pub p: f64,
    /// `μ_i(C ∩ E_i)`.
    pub mu: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellEntry {
    pub index: Vec<i64>,
    /// `ρ(C)`.
    pub p: f64,
    /// `μ(C ∩ E) = Σ_i μ_i(C ∩ E_i)`.
    pub mu_cell: f64,
    pub components: Vec<ComponentShare>,
}

/// Exact cell probabilities at one level, sorted by cell index.
///
/// Cells with zero probability are omitted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellTable {
    pub level: u32,
    pub ambient_dim: usize,
    pub entries: Vec<CellEntry>,
}

pub fn cell_table(measure: &StratifiedMeasure, level: u32) -> Result<CellTable, DyadicError> {
    if level > super::cell::MAX_LEVEL {
        return Err(DyadicError::LevelTooFine(level));
    }
    let bound: f64 = measure.strata().iter().map(|s| s.cell_count_bound(level)).sum();
    if bound > MAX_TABLE_ENTRIES as f64 {
        return Err(DyadicError::TooLarge { level, bound });
    }
    let per_stratum: Vec<_> = measure.strata().par_iter().map(|s| s.cell_contents(level)).collect();
    let mut cells: BTreeMap<Vec<i64>, Vec<ComponentShare>> = BTreeMap::new();
    for (i, (contents, q)) in per_stratum.into_iter().zip(measure.weights()).enumerate() {
        for c in contents {
            cells.entry(c.index).or_default().push(ComponentShare {
                component: i,
                p: q * c.mass,
                mu: c.measure,
            });
        }
    }
    let entries = cells
        .into_iter()
        .filter_map(|(index, components)| {
            let p = accurate_sum(components.iter().map(|c| c.p));
            (p > 0.0).then(|| CellEntry {
                index,
                p,
                mu_cell: accurate_sum(components.iter().map(|c| c.mu)),
                components,
            })
        })
        .collect();
    Ok(CellTable { level, ambient_dim: measure.ambient_dim(), entries })
}

impl CellTable {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn total_probability(&self) -> f64 {
        accurate_sum(self.entries.iter().map(|e| e.p))
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.entries.iter().map(|e| e.p).collect()
    }

    /// `H_#(X_{2^ℓ}) = -Σ p ln p`.
    pub fn entropy(&self) -> f64 {
        shannon_entropy(&self.probabilities())
    }

    /// `Σ_{p>0} p ln μ(C ∩ E)`.
    pub fn defect_term(&self) -> f64 {
        accurate_sum(self.entries.iter().map(|e| e.p * e.mu_cell.ln()))
    }

    pub fn get(&self, index: &[i64]) -> Option<&CellEntry> {
        self.entries.binary_search_by(|e| e.index.as_slice().cmp(index)).ok().map(|i| &self.entries[i])
    }

    /// Sum entries over parent cells, giving the table one level up.
    pub fn coarsen(&self) -> Option<CellTable> {
        if self.level == 0 {
            return None;
        }
        // parent index -> component -> (child p values, child mu values)
        type Shares = BTreeMap<usize, (Vec<f64>, Vec<f64>)>;
        let mut parents: BTreeMap<Vec<i64>, Shares> = BTreeMap::new();
        for e in &self.entries {
            let parent: Vec<i64> = e.index.iter().map(|j| j.div_euclid(2)).collect();
            let slot = parents.entry(parent).or_default();
            for c in &e.components {
                let acc = slot.entry(c.component).or_default();
                acc.0.push(c.p);
                acc.1.push(c.mu);
            }
        }
        let entries = parents
            .into_iter()
            .map(|(index, shares)| {
                let components: Vec<ComponentShare> = shares
                    .into_iter()
                    .map(|(component, (ps, mus))| ComponentShare {
                        component,
                        p: accurate_sum(ps),
                        mu: accurate_sum(mus),
                    })
                    .collect();
                CellEntry {
                    index,
                    p: accurate_sum(components.iter().map(|c| c.p)),
                    mu_cell: accurate_sum(components.iter().map(|c| c.mu)),
                    components,
                }
            })
            .collect();
        Some(CellTable { level: self.level - 1, ambient_dim: self.ambient_dim, entries })
    }

    /// Largest absolute difference in `p` or `μ(C ∩ E)` against another
    /// table of the same level; cells missing on one side count as zero.
    pub fn max_difference(&self, other: &CellTable) -> f64 {
        let mut worst = 0.0f64;
        for e in &self.entries {
            let (p, mu) = other.get(&e.index).map_or((0.0, 0.0), |o| (o.p, o.mu_cell));
            worst = worst.max((e.p - p).abs()).max((e.mu_cell - mu).abs());
        }
        for o in &other.entries {
            if self.get(&o.index).is_none() {
                worst = worst.max(o.p).max(o.mu_cell);
            }
        }
        worst
    }

    /// CSV with one row per (cell, component):
    /// `level, j1..jd, p, mu_cell, component_id`. `p` and `mu_cell` are the
    /// component's share; `component_id` is one-based.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["level".to_string()];
        header.extend((1..=self.ambient_dim).map(|i| format!("j{i}")));
        header.extend(["p", "mu_cell", "component_id"].map(String::from));
        w.write_record(&header)?;
        for e in &self.entries {
            for c in &e.components {
                let mut row = vec![self.level.to_string()];
                row.extend(e.index.iter().map(|j| j.to_string()));
                row.push(c.p.to_string());
                row.push(c.mu.to_string());
                row.push((c.component + 1).to_string());
                w.write_record(&row)?;
            }
        }
        w.flush()?;
        Ok(())
    }
}

/// `ρ(C) / μ(C)` for the level-ℓ cell holding `point`; 0 if `μ(C) = 0`.
pub fn dyadic_density_estimate(measure: &StratifiedMeasure, point: &[f64], level: u32) -> f64 {
    let cell = super::cell_index(point, level);
    let mut masses = Vec::new();
    let mut measures = Vec::new();
    for (q, s) in measure.weights().iter().zip(measure.strata()) {
        masses.push(q * s.cell_mass(&cell));
        measures.push(s.cell_measure(&cell));
    }
    let mu = accurate_sum(measures);
    if mu > 0.0 {
        accurate_sum(masses) / mu
    } else {
        0.0
    }
}

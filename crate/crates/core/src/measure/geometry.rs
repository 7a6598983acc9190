//! Catalog carriers with piecewise-constant densities.
//!
//! Each carrier knows its Hausdorff dimension `m`, its `H^m` measure, the
//! density of its probability law with respect to `H^m` restricted to the
//! carrier, and how much mass and measure it puts in any dyadic cell. All
//! of these are closed-form for the catalog shapes.

use std::collections::BTreeMap;
use std::fmt;

use super::MeasureError;
use crate::dyadic::cell::{scale, DyadicCell};
use crate::rng::{Categorical, RandomStream};
use crate::stats::{accurate_sum, shannon_entropy};

/// Distance under which a point is considered to lie on a carrier.
pub const ON_CARRIER_TOL: f64 = 1e-10;

/// Probability mass and `H^m` measure of a carrier inside one dyadic cell.
#[derive(Debug, Clone, PartialEq)]
pub struct CellContent {
    pub index: Vec<i64>,
    pub mass: f64,
    pub measure: f64,
}

/// Common interface of every catalog carrier.
pub trait Carrier: fmt::Debug + Send + Sync {
    fn kind(&self) -> &'static str;
    fn dimension(&self) -> usize;
    fn ambient_dim(&self) -> usize;
    /// `H^m(E)`.
    fn hausdorff_measure(&self) -> f64;
    /// `dρ/dH^m` at `x`; zero off the carrier.
    fn density(&self, x: &[f64]) -> f64;
    fn sample_into(&self, stream: &mut RandomStream, out: &mut [f64]);
    /// `-∫ f ln f dH^m` in nats.
    fn entropy(&self) -> f64;
    /// `H^m(C ∩ E)`.
    fn cell_measure(&self, cell: &DyadicCell) -> f64;
    /// `ρ(C)`.
    fn cell_mass(&self, cell: &DyadicCell) -> f64;
    /// Every level-`ℓ` cell meeting the carrier in positive measure, in
    /// increasing index order.
    fn cell_contents(&self, level: u32) -> Vec<CellContent>;
    /// Upper bound on `cell_contents(level).len()`, computed without
    /// enumerating.
    fn cell_count_bound(&self, level: u32) -> f64;
}

/// Piecewise-constant density on the unit cube `[0, 1]^m` of local
/// coordinates, given by per-axis breakpoints and the mass of each grid
/// piece (row-major, last axis fastest).
#[derive(Debug, Clone)]
pub struct GridDensity {
    breaks: Vec<Vec<f64>>,
    masses: Vec<f64>,
    table: Categorical,
}

impl GridDensity {
    pub fn uniform(axes: usize) -> Self {
        Self::new(vec![vec![0.0, 1.0]; axes], vec![1.0]).expect("uniform grid is valid")
    }

    pub fn new(breaks: Vec<Vec<f64>>, masses: Vec<f64>) -> Result<Self, MeasureError> {
        for (axis, b) in breaks.iter().enumerate() {
            if b.len() < 2 || b[0] != 0.0 || *b.last().unwrap() != 1.0 {
                return Err(MeasureError::InvalidGeometry(format!(
                    "density breaks on local axis {axis} must run from 0 to 1"
                )));
            }
            if b.windows(2).any(|w| w[1] <= w[0]) {
                return Err(MeasureError::InvalidGeometry(format!(
                    "density breaks on local axis {axis} must be strictly increasing"
                )));
            }
        }
        let pieces: usize = breaks.iter().map(|b| b.len() - 1).product();
        if masses.len() != pieces {
            return Err(MeasureError::InvalidGeometry(format!(
                "expected {pieces} density masses, found {}",
                masses.len()
            )));
        }
        if masses.iter().any(|m| !(m.is_finite() && *m >= 0.0)) {
            return Err(MeasureError::InvalidGeometry(
                "density masses must be finite and nonnegative".into(),
            ));
        }
        let total = accurate_sum(masses.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(MeasureError::InvalidGeometry(format!("density masses sum to {total}, expected 1")));
        }
        let table = Categorical::new(&masses);
        Ok(Self { breaks, masses, table })
    }

    pub fn breaks(&self) -> &[Vec<f64>] {
        &self.breaks
    }

    pub fn masses(&self) -> &[f64] {
        &self.masses
    }

    pub fn is_uniform(&self) -> bool {
        self.masses.len() == 1
    }

    fn axes(&self) -> usize {
        self.breaks.len()
    }

    fn piece_on_axis(&self, axis: usize, u: f64) -> usize {
        let b = &self.breaks[axis];
        let k = b.partition_point(|&x| x <= u);
        k.clamp(1, b.len() - 1) - 1
    }

    fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut multi = vec![0; self.axes()];
        for axis in (0..self.axes()).rev() {
            let n = self.breaks[axis].len() - 1;
            multi[axis] = flat % n;
            flat /= n;
        }
        multi
    }

    fn flatten(&self, multi: &[usize]) -> usize {
        multi.iter().zip(&self.breaks).fold(0, |acc, (&p, b)| acc * (b.len() - 1) + p)
    }

    fn width(&self, axis: usize, piece: usize) -> f64 {
        self.breaks[axis][piece + 1] - self.breaks[axis][piece]
    }

    fn piece_volume(&self, multi: &[usize]) -> f64 {
        multi.iter().enumerate().map(|(axis, &p)| self.width(axis, p)).product()
    }

    /// Density with respect to Lebesgue measure on the local unit cube.
    pub fn local_density(&self, u: &[f64]) -> f64 {
        let multi: Vec<usize> = u.iter().enumerate().map(|(axis, &x)| self.piece_on_axis(axis, x)).collect();
        self.masses[self.flatten(&multi)] / self.piece_volume(&multi)
    }

    pub fn sample_local(&self, stream: &mut RandomStream, out: &mut [f64]) {
        let multi = self.unflatten(stream.categorical(&self.table));
        for (axis, &p) in multi.iter().enumerate() {
            let b = &self.breaks[axis];
            out[axis] = stream.uniform_in(b[p], b[p + 1]);
        }
    }

    /// Differential entropy on the local unit cube.
    pub fn local_entropy(&self) -> f64 {
        -accurate_sum((0..self.masses.len()).filter_map(|flat| {
            let m = self.masses[flat];
            (m > 0.0).then(|| {
                let vol = self.piece_volume(&self.unflatten(flat));
                m * (m / vol).ln()
            })
        }))
    }

    /// Pieces of `axis` overlapping `[lo, hi]`, with the covered fraction of
    /// each piece's width.
    fn cover_fractions(&self, axis: usize, lo: f64, hi: f64) -> Vec<(usize, f64)> {
        let b = &self.breaks[axis];
        (0..b.len() - 1)
            .filter_map(|p| {
                let ov = hi.min(b[p + 1]) - lo.max(b[p]);
                (ov > 0.0).then(|| (p, ov / (b[p + 1] - b[p])))
            })
            .collect()
    }

    /// Probability of the local box `Π [lo_r, hi_r]`.
    pub fn mass_in_box(&self, ranges: &[(f64, f64)]) -> f64 {
        if self.is_uniform() {
            return ranges.iter().map(|(lo, hi)| (hi.min(1.0) - lo.max(0.0)).max(0.0)).product();
        }
        let covers: Vec<Vec<(usize, f64)>> =
            ranges.iter().enumerate().map(|(axis, &(lo, hi))| self.cover_fractions(axis, lo, hi)).collect();
        if covers.iter().any(Vec::is_empty) {
            return 0.0;
        }
        let mut total = 0.0;
        let mut cursor = vec![0usize; covers.len()];
        loop {
            let multi: Vec<usize> = cursor.iter().zip(&covers).map(|(&c, cov)| cov[c].0).collect();
            let frac: f64 = cursor.iter().zip(&covers).map(|(&c, cov)| cov[c].1).product();
            total += self.masses[self.flatten(&multi)] * frac;
            if !advance(&mut cursor, &covers.iter().map(Vec::len).collect::<Vec<_>>()) {
                break;
            }
        }
        total
    }
}

/// Odometer increment over a mixed-radix counter; false once it wraps.
fn advance(cursor: &mut [usize], radix: &[usize]) -> bool {
    for i in (0..cursor.len()).rev() {
        cursor[i] += 1;
        if cursor[i] < radix[i] {
            return true;
        }
        cursor[i] = 0;
    }
    false
}

fn check_finite(name: &str, v: &[f64]) -> Result<(), MeasureError> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(MeasureError::InvalidGeometry(format!("{name} has non-finite coordinates")))
    }
}

// ---------------------------------------------------------------------------

/// Finitely many atoms with a probability mass function; `m = 0`.
#[derive(Debug, Clone)]
pub struct AtomSet {
    dim: usize,
    points: Vec<Vec<f64>>,
    pmf: Vec<f64>,
    table: Categorical,
}

impl AtomSet {
    pub fn new(points: Vec<Vec<f64>>, pmf: Vec<f64>) -> Result<Self, MeasureError> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| MeasureError::InvalidGeometry("atom set needs at least one point".into()))?;
        if dim == 0 {
            return Err(MeasureError::InvalidGeometry("ambient dimension must be positive".into()));
        }
        if points.iter().any(|p| p.len() != dim) {
            return Err(MeasureError::InvalidGeometry("atoms have mixed dimensions".into()));
        }
        for p in &points {
            check_finite("atom", p)?;
        }
        if pmf.len() != points.len() {
            return Err(MeasureError::InvalidGeometry(format!(
                "{} atoms but {} pmf entries",
                points.len(),
                pmf.len()
            )));
        }
        if pmf.iter().any(|p| !(p.is_finite() && *p > 0.0)) {
            return Err(MeasureError::InvalidGeometry("atom masses must be positive".into()));
        }
        let total = accurate_sum(pmf.iter().copied());
        if (total - 1.0).abs() > 1e-12 {
            return Err(MeasureError::InvalidGeometry(format!("atom pmf sums to {total}")));
        }
        for i in 0..points.len() {
            for j in 0..i {
                if sup_dist(&points[i], &points[j]) <= ON_CARRIER_TOL {
                    return Err(MeasureError::InvalidGeometry(format!("atoms {j} and {i} coincide")));
                }
            }
        }
        let table = Categorical::new(&pmf);
        Ok(Self { dim, points, pmf, table })
    }

    pub fn uniform(points: Vec<Vec<f64>>) -> Result<Self, MeasureError> {
        let n = points.len().max(1);
        Self::new(points, vec![1.0 / n as f64; n])
    }

    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn pmf(&self) -> &[f64] {
        &self.pmf
    }

    fn find(&self, x: &[f64]) -> Option<usize> {
        self.points.iter().position(|p| sup_dist(p, x) <= ON_CARRIER_TOL)
    }
}

fn sup_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

impl Carrier for AtomSet {
    fn kind(&self) -> &'static str {
        "atoms"
    }

    fn dimension(&self) -> usize {
        0
    }

    fn ambient_dim(&self) -> usize {
        self.dim
    }

    fn hausdorff_measure(&self) -> f64 {
        self.points.len() as f64
    }

    fn density(&self, x: &[f64]) -> f64 {
        self.find(x).map_or(0.0, |i| self.pmf[i])
    }

    fn sample_into(&self, stream: &mut RandomStream, out: &mut [f64]) {
        let i = stream.categorical(&self.table);
        out.copy_from_slice(&self.points[i]);
    }

    fn entropy(&self) -> f64 {
        shannon_entropy(&self.pmf)
    }

    fn cell_measure(&self, cell: &DyadicCell) -> f64 {
        self.points.iter().filter(|p| cell.contains(p)).count() as f64
    }

    fn cell_mass(&self, cell: &DyadicCell) -> f64 {
        accurate_sum(self.points.iter().zip(&self.pmf).filter(|(p, _)| cell.contains(p)).map(|(_, &w)| w))
    }

    fn cell_contents(&self, level: u32) -> Vec<CellContent> {
        let mut cells: BTreeMap<Vec<i64>, (f64, f64)> = BTreeMap::new();
        for (p, &w) in self.points.iter().zip(&self.pmf) {
            let idx = crate::dyadic::cell_index(p, level).index;
            let e = cells.entry(idx).or_insert((0.0, 0.0));
            e.0 += w;
            e.1 += 1.0;
        }
        into_contents(cells)
    }

    fn cell_count_bound(&self, _level: u32) -> f64 {
        self.points.len() as f64
    }
}

fn into_contents(cells: BTreeMap<Vec<i64>, (f64, f64)>) -> Vec<CellContent> {
    cells.into_iter().map(|(index, (mass, measure))| CellContent { index, mass, measure }).collect()
}

// ---------------------------------------------------------------------------

/// Straight segment `[a, b]` in any orientation; `m = 1`.
///
/// The density is piecewise constant in the affine parameter
/// `t ∈ [0, 1]`, `x = a + t (b - a)`.
#[derive(Debug, Clone)]
pub struct Segment {
    start: Vec<f64>,
    end: Vec<f64>,
    direction: Vec<f64>,
    length: f64,
    density: GridDensity,
}

impl Segment {
    pub fn new(start: Vec<f64>, end: Vec<f64>, density: GridDensity) -> Result<Self, MeasureError> {
        if start.is_empty() || start.len() != end.len() {
            return Err(MeasureError::InvalidGeometry(
                "segment endpoints must share a positive dimension".into(),
            ));
        }
        check_finite("segment start", &start)?;
        check_finite("segment end", &end)?;
        if density.axes() != 1 {
            return Err(MeasureError::InvalidGeometry("segment density must be 1-dimensional".into()));
        }
        let direction: Vec<f64> = end.iter().zip(&start).map(|(b, a)| b - a).collect();
        let length = direction.iter().map(|v| v * v).sum::<f64>().sqrt();
        if length <= ON_CARRIER_TOL {
            return Err(MeasureError::InvalidGeometry("segment has zero length".into()));
        }
        Ok(Self { start, end, direction, length, density })
    }

    pub fn uniform(start: Vec<f64>, end: Vec<f64>) -> Result<Self, MeasureError> {
        Self::new(start, end, GridDensity::uniform(1))
    }

    pub fn start(&self) -> &[f64] {
        &self.start
    }

    pub fn end(&self) -> &[f64] {
        &self.end
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn density_grid(&self) -> &GridDensity {
        &self.density
    }

    pub(crate) fn at(&self, t: f64) -> Vec<f64> {
        self.start.iter().zip(&self.direction).map(|(a, d)| a + t * d).collect()
    }

    /// Parameter of the orthogonal projection of `x` and its distance to
    /// the supporting line.
    pub(crate) fn project(&self, x: &[f64]) -> (f64, f64) {
        let dot: f64 = x.iter().zip(&self.start).zip(&self.direction).map(|((x, a), d)| (x - a) * d).sum();
        let t = dot / (self.length * self.length);
        let dist2: f64 = x
            .iter()
            .zip(&self.start)
            .zip(&self.direction)
            .map(|((x, a), d)| {
                let r = x - a - t * d;
                r * r
            })
            .sum();
        (t, dist2.sqrt())
    }

    fn tolerance(&self) -> f64 {
        let size = self.start.iter().chain(&self.end).fold(1.0_f64, |m, v| m.max(v.abs()));
        ON_CARRIER_TOL * size
    }

    /// Parameter sub-interval of `[0, 1]` lying in the half-open cell.
    fn clip(&self, cell: &DyadicCell) -> Option<(f64, f64)> {
        let (mut t0, mut t1) = (0.0_f64, 1.0_f64);
        for (axis, (&a, &d)) in self.start.iter().zip(&self.direction).enumerate() {
            let (lo, hi) = cell.bounds(axis);
            if d == 0.0 {
                if !(lo <= a && a < hi) {
                    return None;
                }
            } else {
                let (u, v) = ((lo - a) / d, (hi - a) / d);
                t0 = t0.max(u.min(v));
                t1 = t1.min(u.max(v));
            }
        }
        (t1 > t0).then_some((t0, t1))
    }
}

impl Carrier for Segment {
    fn kind(&self) -> &'static str {
        "segment"
    }

    fn dimension(&self) -> usize {
        1
    }

    fn ambient_dim(&self) -> usize {
        self.start.len()
    }

    fn hausdorff_measure(&self) -> f64 {
        self.length
    }

    fn density(&self, x: &[f64]) -> f64 {
        let (t, dist) = self.project(x);
        let tol = self.tolerance();
        let t_tol = tol / self.length;
        if dist > tol || t < -t_tol || t > 1.0 + t_tol {
            return 0.0;
        }
        self.density.local_density(&[t.clamp(0.0, 1.0)]) / self.length
    }

    fn sample_into(&self, stream: &mut RandomStream, out: &mut [f64]) {
        let mut t = [0.0];
        self.density.sample_local(stream, &mut t);
        for ((o, a), d) in out.iter_mut().zip(&self.start).zip(&self.direction) {
            *o = a + t[0] * d;
        }
    }

    fn entropy(&self) -> f64 {
        self.density.local_entropy() + self.length.ln()
    }

    fn cell_measure(&self, cell: &DyadicCell) -> f64 {
        self.clip(cell).map_or(0.0, |(t0, t1)| (t1 - t0) * self.length)
    }

    fn cell_mass(&self, cell: &DyadicCell) -> f64 {
        self.clip(cell).map_or(0.0, |(t0, t1)| self.density.mass_in_box(&[(t0, t1)]))
    }

    fn cell_contents(&self, level: u32) -> Vec<CellContent> {
        let s = scale(level);
        let mut ts = vec![0.0, 1.0];
        for (&a, &d) in self.start.iter().zip(&self.direction) {
            if d == 0.0 {
                continue;
            }
            let b = a + d;
            let (lo, hi) = (a.min(b), a.max(b));
            let (k0, k1) = ((lo * s).ceil() as i64, (hi * s).floor() as i64);
            for k in k0..=k1 {
                let t = (k as f64 / s - a) / d;
                if t > 0.0 && t < 1.0 {
                    ts.push(t);
                }
            }
        }
        let breaks = &self.density.breaks()[0];
        ts.extend_from_slice(&breaks[1..breaks.len() - 1]);
        ts.sort_by(f64::total_cmp);
        // crossings of several grid lines at one corner land within rounding
        // of each other; merge them so no sliver intervals appear
        let mut merged: Vec<f64> = Vec::with_capacity(ts.len());
        for t in ts {
            match merged.last() {
                Some(&last) if t - last <= 1e-12 => {}
                _ => merged.push(t),
            }
        }
        if let Some(last) = merged.last_mut() {
            *last = 1.0;
        }

        let mut cells: BTreeMap<Vec<i64>, (f64, f64)> = BTreeMap::new();
        for w in merged.windows(2) {
            let (t0, t1) = (w[0], w[1]);
            let mid = 0.5 * (t0 + t1);
            let idx = crate::dyadic::cell_index(&self.at(mid), level).index;
            let mass = self.density.mass_in_box(&[(t0, t1)]);
            let e = cells.entry(idx).or_insert((0.0, 0.0));
            e.0 += mass;
            e.1 += (t1 - t0) * self.length;
        }
        into_contents(cells)
    }

    fn cell_count_bound(&self, level: u32) -> f64 {
        let s = scale(level);
        let crossings: f64 = self.direction.iter().map(|d| (d.abs() * s).ceil() + 1.0).sum();
        crossings + self.density.breaks()[0].len() as f64 + 1.0
    }
}

// ---------------------------------------------------------------------------

/// Axis-aligned `m`-dimensional rectangle in `R^d`: spans `sides[r]` along
/// coordinate `axes[r]` from `anchor`, and is constant in the other
/// coordinates. A box is the case `m = d`.
#[derive(Debug, Clone)]
pub struct Patch {
    anchor: Vec<f64>,
    axes: Vec<usize>,
    sides: Vec<f64>,
    density: GridDensity,
}

impl Patch {
    pub fn new(
        anchor: Vec<f64>,
        axes: Vec<usize>,
        sides: Vec<f64>,
        density: GridDensity,
    ) -> Result<Self, MeasureError> {
        let d = anchor.len();
        if d == 0 {
            return Err(MeasureError::InvalidGeometry("ambient dimension must be positive".into()));
        }
        check_finite("patch anchor", &anchor)?;
        check_finite("patch sides", &sides)?;
        if axes.is_empty() || axes.len() != sides.len() {
            return Err(MeasureError::InvalidGeometry("patch needs one side length per chosen axis".into()));
        }
        if axes.windows(2).any(|w| w[1] <= w[0]) || axes.iter().any(|&a| a >= d) {
            return Err(MeasureError::InvalidGeometry(format!(
                "patch axes must be strictly increasing coordinates below {d}"
            )));
        }
        if sides.iter().any(|&s| s <= 0.0) {
            return Err(MeasureError::InvalidGeometry("patch sides must be positive".into()));
        }
        if density.axes() != axes.len() {
            return Err(MeasureError::InvalidGeometry(format!(
                "patch density has {} axes, expected {}",
                density.axes(),
                axes.len()
            )));
        }
        Ok(Self { anchor, axes, sides, density })
    }

    /// Full-dimensional box `Π [lower_i, upper_i]`.
    pub fn full(lower: Vec<f64>, upper: Vec<f64>, density: GridDensity) -> Result<Self, MeasureError> {
        if lower.len() != upper.len() {
            return Err(MeasureError::InvalidGeometry("box corners differ in dimension".into()));
        }
        let sides = upper.iter().zip(&lower).map(|(u, l)| u - l).collect();
        let axes = (0..lower.len()).collect();
        Self::new(lower, axes, sides, density)
    }

    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }

    pub fn axes(&self) -> &[usize] {
        &self.axes
    }

    pub fn sides(&self) -> &[f64] {
        &self.sides
    }

    pub fn density_grid(&self) -> &GridDensity {
        &self.density
    }

    pub fn upper(&self) -> Vec<f64> {
        let mut u = self.anchor.clone();
        for (&a, &s) in self.axes.iter().zip(&self.sides) {
            u[a] += s;
        }
        u
    }

    pub(crate) fn is_free_axis(&self, axis: usize) -> bool {
        self.axes.binary_search(&axis).is_ok()
    }

    fn tolerance(&self) -> f64 {
        ON_CARRIER_TOL * self.anchor.iter().fold(1.0_f64, |m, v| m.max(v.abs()))
    }

    /// Local coordinates of `x`, or `None` off the carrier.
    fn local(&self, x: &[f64]) -> Option<Vec<f64>> {
        let tol = self.tolerance();
        let mut u = Vec::with_capacity(self.axes.len());
        let mut r = 0;
        for (axis, (&xi, &ai)) in x.iter().zip(&self.anchor).enumerate() {
            if r < self.axes.len() && self.axes[r] == axis {
                let side = self.sides[r];
                if xi < ai - tol || xi > ai + side + tol {
                    return None;
                }
                u.push(((xi - ai) / side).clamp(0.0, 1.0));
                r += 1;
            } else if (xi - ai).abs() > tol {
                return None;
            }
        }
        Some(u)
    }

    /// Per free axis, the local-coordinate range of the cell, or `None` if
    /// the cell misses the carrier.
    fn local_ranges(&self, cell: &DyadicCell) -> Option<Vec<(f64, f64)>> {
        let mut ranges = Vec::with_capacity(self.axes.len());
        let mut r = 0;
        for axis in 0..self.anchor.len() {
            let (lo, hi) = cell.bounds(axis);
            let a = self.anchor[axis];
            if r < self.axes.len() && self.axes[r] == axis {
                let side = self.sides[r];
                let (u0, u1) = (((lo - a) / side).max(0.0), ((hi - a) / side).min(1.0));
                if u1 <= u0 {
                    return None;
                }
                ranges.push((u0, u1));
                r += 1;
            } else if !(lo <= a && a < hi) {
                return None;
            }
        }
        Some(ranges)
    }

    fn volume(&self) -> f64 {
        self.sides.iter().product()
    }
}

impl Carrier for Patch {
    fn kind(&self) -> &'static str {
        if self.axes.len() == self.anchor.len() {
            "box"
        } else {
            "patch"
        }
    }

    fn dimension(&self) -> usize {
        self.axes.len()
    }

    fn ambient_dim(&self) -> usize {
        self.anchor.len()
    }

    fn hausdorff_measure(&self) -> f64 {
        self.volume()
    }

    fn density(&self, x: &[f64]) -> f64 {
        self.local(x).map_or(0.0, |u| self.density.local_density(&u) / self.volume())
    }

    fn sample_into(&self, stream: &mut RandomStream, out: &mut [f64]) {
        let mut u = vec![0.0; self.axes.len()];
        self.density.sample_local(stream, &mut u);
        out.copy_from_slice(&self.anchor);
        for ((&axis, &side), &ur) in self.axes.iter().zip(&self.sides).zip(&u) {
            out[axis] += ur * side;
        }
    }

    fn entropy(&self) -> f64 {
        self.density.local_entropy() + self.volume().ln()
    }

    fn cell_measure(&self, cell: &DyadicCell) -> f64 {
        self.local_ranges(cell)
            .map_or(0.0, |ranges| ranges.iter().zip(&self.sides).map(|((u0, u1), s)| (u1 - u0) * s).product())
    }

    fn cell_mass(&self, cell: &DyadicCell) -> f64 {
        self.local_ranges(cell).map_or(0.0, |ranges| self.density.mass_in_box(&ranges))
    }

    fn cell_contents(&self, level: u32) -> Vec<CellContent> {
        let s = scale(level);
        let d = self.anchor.len();
        // index ranges per ambient axis
        let mut lo_idx = vec![0i64; d];
        let mut radix = vec![1usize; d];
        for axis in 0..d {
            let a = self.anchor[axis];
            if let Ok(r) = self.axes.binary_search(&axis) {
                let hi = a + self.sides[r];
                let j0 = (a * s).floor() as i64;
                let j1 = (hi * s).ceil() as i64 - 1;
                lo_idx[axis] = j0;
                radix[axis] = (j1 - j0 + 1).max(1) as usize;
            } else {
                lo_idx[axis] = (a * s).floor() as i64;
            }
        }
        let mut out = Vec::new();
        let mut cursor = vec![0usize; d];
        loop {
            let index: Vec<i64> = lo_idx.iter().zip(&cursor).map(|(&j, &c)| j + c as i64).collect();
            let cell = DyadicCell { level, index };
            if let Some(ranges) = self.local_ranges(&cell) {
                let measure: f64 =
                    ranges.iter().zip(&self.sides).map(|((u0, u1), s)| (u1 - u0) * s).product();
                let mass = self.density.mass_in_box(&ranges);
                if measure > 0.0 {
                    out.push(CellContent { index: cell.index, mass, measure });
                }
            }
            if !advance(&mut cursor, &radix) {
                break;
            }
        }
        out
    }

    fn cell_count_bound(&self, level: u32) -> f64 {
        let s = scale(level);
        self.sides.iter().map(|side| (side * s).ceil() + 1.0).product()
    }
}

// ---------------------------------------------------------------------------

/// The carrier catalog.
#[derive(Debug, Clone)]
pub enum Geometry {
    Atoms(AtomSet),
    Segment(Segment),
    Patch(Patch),
    /// Full-dimensional box, stored as a patch spanning every axis.
    Box(Patch),
}

/// Names accepted for the `kind` field of a component.
pub const GEOMETRY_KINDS: [&str; 4] = ["atoms", "segment", "patch", "box"];

impl Geometry {
    pub fn carrier(&self) -> &dyn Carrier {
        match self {
            Geometry::Atoms(g) => g,
            Geometry::Segment(g) => g,
            Geometry::Patch(g) | Geometry::Box(g) => g,
        }
    }

    /// Whether two carriers of equal dimension share a set of positive
    /// `H^m` measure.
    pub fn overlaps(&self, other: &Geometry) -> bool {
        let (m1, m2) = (self.carrier().dimension(), other.carrier().dimension());
        if m1 != m2 {
            return false;
        }
        match (self.canonical(), other.canonical()) {
            (Canonical::Atoms(a), Canonical::Atoms(b)) => {
                a.points().iter().any(|p| b.points().iter().any(|q| sup_dist(p, q) <= ON_CARRIER_TOL))
            }
            (Canonical::Line(a), Canonical::Line(b)) => segments_overlap(&a, &b),
            (Canonical::Rect(a), Canonical::Rect(b)) => patches_overlap(a, b),
            _ => false,
        }
    }

    fn canonical(&self) -> Canonical<'_> {
        match self {
            Geometry::Atoms(a) => Canonical::Atoms(a),
            Geometry::Segment(s) => Canonical::Line(s.clone()),
            Geometry::Patch(p) | Geometry::Box(p) if p.dimension() == 1 => {
                let seg = Segment::uniform(p.anchor.clone(), p.upper())
                    .expect("patch with positive side is a valid segment");
                Canonical::Line(seg)
            }
            Geometry::Patch(p) | Geometry::Box(p) => Canonical::Rect(p),
        }
    }
}

enum Canonical<'a> {
    Atoms(&'a AtomSet),
    Line(Segment),
    Rect(&'a Patch),
}

fn segments_overlap(a: &Segment, b: &Segment) -> bool {
    let tol = a.tolerance().max(b.tolerance());
    let (tb0, d0) = a.project(b.start());
    let (tb1, d1) = a.project(b.end());
    if d0 > tol || d1 > tol {
        return false;
    }
    let (lo, hi) = (tb0.min(tb1).max(0.0), tb0.max(tb1).min(1.0));
    (hi - lo) * a.length() > tol
}

fn patches_overlap(a: &Patch, b: &Patch) -> bool {
    if a.axes != b.axes {
        return false;
    }
    let tol = a.tolerance().max(b.tolerance());
    let (ua, ub) = (a.upper(), b.upper());
    for axis in 0..a.anchor.len() {
        if a.is_free_axis(axis) {
            let lo = a.anchor[axis].max(b.anchor[axis]);
            let hi = ua[axis].min(ub[axis]);
            if hi - lo <= tol {
                return false;
            }
        } else if (a.anchor[axis] - b.anchor[axis]).abs() > tol {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::SQRT_2;

    fn diagonal() -> Segment {
        Segment::uniform(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap()
    }

    #[test]
    fn diagonal_density_and_entropy() {
        let s = diagonal();
        assert!((s.hausdorff_measure() - SQRT_2).abs() < 1e-15);
        assert!((s.density(&[0.3, 0.3]) - 1.0 / SQRT_2).abs() < 1e-15);
        assert_eq!(s.density(&[0.3, 0.4]), 0.0);
        assert_eq!(s.density(&[1.5, 1.5]), 0.0);
        assert!((s.entropy() - SQRT_2.ln()).abs() < 1e-15);
    }

    #[test]
    fn diagonal_cell_measure_at_level_one() {
        let s = diagonal();
        let c = DyadicCell::new(1, vec![0, 0]);
        assert!((s.cell_measure(&c) - SQRT_2 / 2.0).abs() < 1e-15);
        assert_eq!(s.cell_measure(&DyadicCell::new(1, vec![0, 1])), 0.0);
        let contents = s.cell_contents(1);
        assert_eq!(contents.len(), 2);
        assert_eq!(contents[0].index, vec![0, 0]);
        assert_eq!(contents[1].index, vec![1, 1]);
    }

    #[test]
    fn axis_parallel_segment_on_grid_line_uses_half_open_cells() {
        let s = Segment::uniform(vec![0.0, 0.5], vec![1.0, 0.5]).unwrap();
        let contents = s.cell_contents(1);
        let rows: Vec<_> = contents.iter().map(|c| c.index.clone()).collect();
        assert_eq!(rows, vec![vec![0, 1], vec![1, 1]]);
        assert_eq!(s.cell_measure(&DyadicCell::new(1, vec![0, 0])), 0.0);
        assert_eq!(s.cell_measure(&DyadicCell::new(1, vec![0, 1])), 0.5);
    }

    #[test]
    fn piecewise_segment_entropy() {
        // mass 0.6 on [0, 1/3), 0.4 on [1/3, 1] of a unit segment
        let g = GridDensity::new(vec![vec![0.0, 1.0 / 3.0, 1.0]], vec![0.6, 0.4]).unwrap();
        let s = Segment::new(vec![0.0], vec![1.0], g).unwrap();
        let f1: f64 = 0.6 * 3.0;
        let f2: f64 = 0.4 * 1.5;
        let want = -(0.6 * f1.ln() + 0.4 * f2.ln());
        assert!((s.entropy() - want).abs() < 1e-14);
        assert!((s.density(&[0.1]) - f1).abs() < 1e-12);
        assert!((s.density(&[0.9]) - f2).abs() < 1e-12);
    }

    #[test]
    fn atoms_count_and_entropy() {
        let a = AtomSet::new(vec![vec![0.0], vec![1.0], vec![2.0]], vec![0.5, 0.25, 0.25]).unwrap();
        assert_eq!(a.hausdorff_measure(), 3.0);
        assert!((a.entropy() - 1.0397207708399179).abs() < 1e-12);
        assert_eq!(a.density(&[1.0]), 0.25);
        assert_eq!(a.density(&[1.5]), 0.0);
    }

    #[test]
    fn atom_cell_measure_counts() {
        let a = AtomSet::new(vec![vec![0.25, 0.75]], vec![1.0]).unwrap();
        let home = crate::dyadic::cell_index(&[0.25, 0.75], 3);
        assert_eq!(a.cell_measure(&home), 1.0);
        assert_eq!(a.cell_measure(&DyadicCell::new(3, vec![0, 0])), 0.0);
    }

    #[test]
    fn unit_square_quarters() {
        let b = Patch::full(vec![0.0, 0.0], vec![1.0, 1.0], GridDensity::uniform(2)).unwrap();
        let contents = b.cell_contents(1);
        assert_eq!(contents.len(), 4);
        for c in contents {
            assert_eq!(c.measure, 0.25);
            assert_eq!(c.mass, 0.25);
        }
    }

    #[test]
    fn patch_in_plane_of_3d() {
        let p = Patch::new(vec![0.0, 0.5, 0.0], vec![0, 2], vec![1.0, 2.0], GridDensity::uniform(2)).unwrap();
        assert_eq!(p.dimension(), 2);
        assert_eq!(p.hausdorff_measure(), 2.0);
        assert!((p.density(&[0.2, 0.5, 1.0]) - 0.5).abs() < 1e-15);
        assert_eq!(p.density(&[0.2, 0.6, 1.0]), 0.0);
        let contents = p.cell_contents(0);
        assert_eq!(contents.len(), 2);
        let total: f64 = contents.iter().map(|c| c.mass).sum();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn overlap_rules() {
        let a = Geometry::Segment(Segment::uniform(vec![0.0, 0.0], vec![1.0, 1.0]).unwrap());
        let b = Geometry::Segment(Segment::uniform(vec![0.5, 0.5], vec![2.0, 2.0]).unwrap());
        let c = Geometry::Segment(Segment::uniform(vec![0.0, 1.0], vec![1.0, 0.0]).unwrap());
        let touching = Geometry::Segment(Segment::uniform(vec![1.0, 1.0], vec![2.0, 2.0]).unwrap());
        assert!(a.overlaps(&b));
        assert!(!a.overlaps(&c), "crossing at a point is H^1-null");
        assert!(!a.overlaps(&touching));

        let sq = |lo: f64| {
            Geometry::Box(
                Patch::full(vec![lo, lo], vec![lo + 1.0, lo + 1.0], GridDensity::uniform(2)).unwrap(),
            )
        };
        assert!(sq(0.0).overlaps(&sq(0.5)));
        assert!(!sq(0.0).overlaps(&sq(1.0)));

        let p =
            Geometry::Patch(Patch::new(vec![0.0, 0.0], vec![0], vec![1.0], GridDensity::uniform(1)).unwrap());
        let s = Geometry::Segment(Segment::uniform(vec![0.5, 0.0], vec![3.0, 0.0]).unwrap());
        assert!(p.overlaps(&s));
    }

    #[test]
    fn grid_density_rejects_bad_masses() {
        assert!(GridDensity::new(vec![vec![0.0, 0.5, 1.0]], vec![0.5]).is_err());
        assert!(GridDensity::new(vec![vec![0.0, 0.5, 1.0]], vec![0.7, 0.7]).is_err());
        assert!(GridDensity::new(vec![vec![0.0, 0.6, 0.5, 1.0]], vec![0.3, 0.3, 0.4]).is_err());
    }
}

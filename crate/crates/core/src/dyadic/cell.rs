use serde::Serialize;

/// Half-open dyadic cube `Π_i [j_i 2^-ℓ, (j_i + 1) 2^-ℓ)`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct DyadicCell {
    pub level: u32,
    pub index: Vec<i64>,
}

/// Finest supported level; keeps `2^ℓ` and the cell corners exact in `f64`.
pub const MAX_LEVEL: u32 = 40;

pub(crate) fn scale(level: u32) -> f64 {
    assert!(level <= MAX_LEVEL, "dyadic level {level} exceeds {MAX_LEVEL}");
    (1u64 << level) as f64
}

impl DyadicCell {
    pub fn new(level: u32, index: Vec<i64>) -> Self {
        Self { level, index }
    }

    pub fn dim(&self) -> usize {
        self.index.len()
    }

    pub fn side(&self) -> f64 {
        1.0 / scale(self.level)
    }

    /// `[lo, hi)` along one axis.
    pub fn bounds(&self, axis: usize) -> (f64, f64) {
        let s = scale(self.level);
        let j = self.index[axis] as f64;
        (j / s, (j + 1.0) / s)
    }

    pub fn contains(&self, point: &[f64]) -> bool {
        cell_index(point, self.level) == *self
    }

    /// The level-(ℓ-1) cell containing this one. `None` at level 0.
    pub fn parent(&self) -> Option<DyadicCell> {
        if self.level == 0 {
            return None;
        }
        Some(DyadicCell {
            level: self.level - 1,
            index: self.index.iter().map(|j| j.div_euclid(2)).collect(),
        })
    }

    /// The `2^d` level-(ℓ+1) cells refining this one.
    pub fn children(&self) -> Vec<DyadicCell> {
        let d = self.dim();
        (0..1usize << d)
            .map(|mask| DyadicCell {
                level: self.level + 1,
                index: self.index.iter().enumerate().map(|(i, j)| 2 * j + ((mask >> i) & 1) as i64).collect(),
            })
            .collect()
    }
}

/// Cell of level `ℓ` containing `point`: `floor(2^ℓ x)` componentwise.
pub fn cell_index(point: &[f64], level: u32) -> DyadicCell {
    let s = scale(level);
    DyadicCell { level, index: point.iter().map(|x| (x * s).floor() as i64).collect() }
}

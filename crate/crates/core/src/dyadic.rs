//! Finite dyadic tree on `[0,1)`, step functions on its leaves, and the Haar
//! transform.
//!
//! Intervals are addressed by `(level, position)`; level 0 is the root and the
//! children of `(j, k)` are `(j+1, 2k)` (left half, `I₋`) and `(j+1, 2k+1)`
//! (right half, `I₊`). Whenever a per-interval table is needed it is stored in
//! heap order, `index = 2^j - 1 + k`, so that the non-leaf intervals occupy the
//! prefix `0..2^D - 1`.

use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Largest supported tree depth.
pub const MAX_DEPTH: u32 = 24;

/// A dyadic tree of fixed depth over `[0,1)`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Grid {
    depth: u32,
}

impl Grid {
    pub fn new(depth: u32) -> Result<Self> {
        if depth == 0 || depth > MAX_DEPTH {
            return Err(Error::DepthOutOfRange(depth));
        }
        Ok(Self { depth })
    }

    #[inline]
    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Number of leaf cells, `2^D`.
    #[inline]
    pub fn cells(&self) -> usize {
        1usize << self.depth
    }

    /// Number of intervals with children, `2^D - 1`.
    #[inline]
    pub fn non_leaf_count(&self) -> usize {
        self.cells() - 1
    }

    /// Number of intervals in the tree, `2^(D+1) - 1`.
    #[inline]
    pub fn interval_count(&self) -> usize {
        (self.cells() << 1) - 1
    }

    /// Width of a leaf cell.
    #[inline]
    pub fn cell_width(&self) -> f64 {
        1.0 / self.cells() as f64
    }

    pub fn root(&self) -> DyadicInterval {
        DyadicInterval::ROOT
    }

    pub fn contains(&self, interval: DyadicInterval) -> bool {
        interval.level <= self.depth
    }

    pub fn check(&self, interval: DyadicInterval) -> Result<()> {
        if self.contains(interval) {
            Ok(())
        } else {
            Err(Error::IntervalOutsideGrid {
                level: interval.level,
                position: interval.position,
                depth: self.depth,
            })
        }
    }

    pub fn is_leaf(&self, interval: DyadicInterval) -> bool {
        interval.level == self.depth
    }

    /// All intervals in level-major order (shallowest first, left to right).
    pub fn intervals(&self) -> impl Iterator<Item = DyadicInterval> {
        (0..self.interval_count()).map(DyadicInterval::from_heap_index)
    }

    /// Intervals that have children, in level-major order.
    pub fn non_leaf_intervals(&self) -> impl Iterator<Item = DyadicInterval> {
        (0..self.non_leaf_count()).map(DyadicInterval::from_heap_index)
    }

    /// Leaf cells covered by `interval`.
    pub fn cell_range(&self, interval: DyadicInterval) -> std::ops::Range<usize> {
        let span = 1usize << (self.depth - interval.level);
        interval.position * span..(interval.position + 1) * span
    }

    pub(crate) fn ensure_same(&self, other: Grid) -> Result<()> {
        if self.depth == other.depth {
            Ok(())
        } else {
            Err(Error::GridMismatch {
                expected: self.depth,
                found: other.depth,
            })
        }
    }
}

/// `[2^{-j} k, 2^{-j}(k+1))`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct DyadicInterval {
    pub level: u32,
    pub position: usize,
}

impl DyadicInterval {
    pub const ROOT: DyadicInterval = DyadicInterval {
        level: 0,
        position: 0,
    };

    /// Panics if `position >= 2^level`.
    pub fn new(level: u32, position: usize) -> Self {
        assert!(
            level < usize::BITS && position < (1usize << level),
            "position {position} out of range for level {level}"
        );
        Self { level, position }
    }

    #[inline]
    pub fn heap_index(&self) -> usize {
        (1usize << self.level) - 1 + self.position
    }

    #[inline]
    pub fn from_heap_index(index: usize) -> Self {
        let level = (index + 1).ilog2();
        Self {
            level,
            position: index + 1 - (1usize << level),
        }
    }

    /// `|I|`.
    #[inline]
    pub fn length(&self) -> f64 {
        (-(self.level as f64)).exp2()
    }

    pub fn left(&self) -> Self {
        Self {
            level: self.level + 1,
            position: 2 * self.position,
        }
    }

    pub fn right(&self) -> Self {
        Self {
            level: self.level + 1,
            position: 2 * self.position + 1,
        }
    }

    pub fn parent(&self) -> Option<Self> {
        (self.level > 0).then(|| Self {
            level: self.level - 1,
            position: self.position / 2,
        })
    }

    /// `(left endpoint, right endpoint)`.
    pub fn bounds(&self) -> (f64, f64) {
        let len = self.length();
        (self.position as f64 * len, (self.position + 1) as f64 * len)
    }

    /// True when `self ⊆ other`.
    pub fn is_within(&self, other: &DyadicInterval) -> bool {
        self.level >= other.level && (self.position >> (self.level - other.level)) == other.position
    }
}

impl fmt::Display for DyadicInterval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.level, self.position)
    }
}

// Serialized as a `[level, position]` pair.
impl Serialize for DyadicInterval {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        (self.level, self.position).serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for DyadicInterval {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let (level, position) = <(u32, usize)>::deserialize(deserializer)?;
        if level >= usize::BITS || position >= (1usize << level) {
            return Err(serde::de::Error::custom(format!(
                "position {position} out of range for level {level}"
            )));
        }
        Ok(Self { level, position })
    }
}

/// A function that is constant on every leaf cell of a [`Grid`].
#[derive(Clone, Debug, PartialEq)]
pub struct StepFunction {
    grid: Grid,
    values: Vec<f64>,
}

impl StepFunction {
    pub fn new(grid: Grid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.cells() {
            return Err(Error::DimensionMismatch {
                expected: grid.cells(),
                found: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(i));
        }
        Ok(Self { grid, values })
    }

    /// Infers the grid from the number of values, which must be a power of two.
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        if !n.is_power_of_two() || n < 2 {
            return Err(Error::InvalidParameter {
                name: "values",
                reason: format!("length {n} is not a power of two ≥ 2"),
            });
        }
        Self::new(Grid::new(n.ilog2())?, values)
    }

    pub fn constant(grid: Grid, value: f64) -> Self {
        Self {
            grid,
            values: vec![value; grid.cells()],
        }
    }

    pub fn zeros(grid: Grid) -> Self {
        Self::constant(grid, 0.0)
    }

    /// `1_I`.
    pub fn indicator(grid: Grid, interval: DyadicInterval) -> Result<Self> {
        grid.check(interval)?;
        let mut values = vec![0.0; grid.cells()];
        values[grid.cell_range(interval)].fill(1.0);
        Ok(Self { grid, values })
    }

    /// `h_I = |I|^{-1/2}(1_{I₊} - 1_{I₋})`.
    pub fn haar(grid: Grid, interval: DyadicInterval) -> Result<Self> {
        check_non_leaf(grid, interval)?;
        let mut values = vec![0.0; grid.cells()];
        let scale = interval.length().sqrt().recip();
        values[grid.cell_range(interval.left())].fill(-scale);
        values[grid.cell_range(interval.right())].fill(scale);
        Ok(Self { grid, values })
    }

    /// Builds from a closure evaluated on each cell index.
    pub fn from_fn(grid: Grid, f: impl FnMut(usize) -> f64) -> Result<Self> {
        Self::new(grid, (0..grid.cells()).map(f).collect())
    }

    pub(crate) fn from_raw(grid: Grid, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.cells());
        Self { grid, values }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Result<Self> {
        Self::new(self.grid, self.values.iter().map(|&v| f(v)).collect())
    }

    pub fn zip_with(&self, other: &StepFunction, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        self.grid.ensure_same(other.grid)?;
        Self::new(
            self.grid,
            self.values
                .iter()
                .zip(&other.values)
                .map(|(&a, &b)| f(a, b))
                .collect(),
        )
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self::from_raw(self.grid, self.values.iter().map(|v| v * factor).collect())
    }

    /// `∫₀¹ f`.
    pub fn integral(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.grid.cell_width()
    }

    /// `∫₀¹ f g`.
    pub fn inner(&self, other: &StepFunction) -> Result<f64> {
        self.grid.ensure_same(other.grid)?;
        Ok(dot(&self.values, &other.values) * self.grid.cell_width())
    }

    /// `∫₀¹ f²`.
    pub fn norm_sq(&self) -> f64 {
        dot(&self.values, &self.values) * self.grid.cell_width()
    }

    /// `∫₀¹ |f|² u`.
    pub fn weighted_norm_sq(&self, weight: &StepFunction) -> Result<f64> {
        self.grid.ensure_same(weight.grid)?;
        Ok(self
            .values
            .iter()
            .zip(&weight.values)
            .map(|(f, u)| f * f * u)
            .sum::<f64>()
            * self.grid.cell_width())
    }

    /// `⟨f⟩_I`, the mean of the cells covered by `I`.
    pub fn average(&self, interval: DyadicInterval) -> Result<f64> {
        self.grid.check(interval)?;
        let cells = &self.values[self.grid.cell_range(interval)];
        Ok(cells.iter().sum::<f64>() / cells.len() as f64)
    }

    /// `Δ_I f = ⟨f⟩_{I₊} - ⟨f⟩_{I₋}`.
    pub fn delta(&self, interval: DyadicInterval) -> Result<f64> {
        check_non_leaf(self.grid, interval)?;
        Ok(self.average(interval.right())? - self.average(interval.left())?)
    }

    /// Averages over every interval of the grid, computed bottom-up.
    pub fn averages(&self) -> Averages {
        Averages::new(self)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn check_non_leaf(grid: Grid, interval: DyadicInterval) -> Result<()> {
    grid.check(interval)?;
    if grid.is_leaf(interval) {
        return Err(Error::LeafInterval {
            level: interval.level,
            position: interval.position,
        });
    }
    Ok(())
}

/// Table of `⟨f⟩_I` for every interval of a grid, stored in heap order.
#[derive(Clone, Debug)]
pub struct Averages {
    grid: Grid,
    table: Vec<f64>,
}

impl Averages {
    pub fn new(f: &StepFunction) -> Self {
        let grid = f.grid;
        let n = grid.cells();
        let mut table = vec![0.0; grid.interval_count()];
        table[n - 1..].copy_from_slice(&f.values);
        for idx in (0..n - 1).rev() {
            table[idx] = 0.5 * (table[2 * idx + 1] + table[2 * idx + 2]);
        }
        Self { grid, table }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    #[inline]
    pub fn get(&self, interval: DyadicInterval) -> f64 {
        self.table[interval.heap_index()]
    }

    /// `⟨f⟩` by heap index.
    #[inline]
    pub fn at(&self, heap_index: usize) -> f64 {
        self.table[heap_index]
    }

    /// `Δ` by heap index of a non-leaf interval.
    #[inline]
    pub fn delta_at(&self, heap_index: usize) -> f64 {
        self.table[2 * heap_index + 2] - self.table[2 * heap_index + 1]
    }

    pub fn delta(&self, interval: DyadicInterval) -> f64 {
        self.delta_at(interval.heap_index())
    }

    /// The whole table in heap order.
    pub fn as_slice(&self) -> &[f64] {
        &self.table
    }

    /// `⟨f⟩_I` for the intervals of one level, left to right.
    pub fn level(&self, level: u32) -> &[f64] {
        let start = (1usize << level) - 1;
        &self.table[start..2 * start + 1]
    }
}

/// Mean and Haar coefficients `⟨f, h_I⟩` of a step function.
#[derive(Clone, Debug, PartialEq)]
pub struct HaarExpansion {
    grid: Grid,
    pub mean: f64,
    /// Heap-ordered coefficients for the non-leaf intervals.
    pub coefficients: Vec<f64>,
}

impl HaarExpansion {
    pub fn new(grid: Grid, mean: f64, coefficients: Vec<f64>) -> Result<Self> {
        if coefficients.len() != grid.non_leaf_count() {
            return Err(Error::DimensionMismatch {
                expected: grid.non_leaf_count(),
                found: coefficients.len(),
            });
        }
        Ok(Self {
            grid,
            mean,
            coefficients,
        })
    }

    pub fn zeros(grid: Grid) -> Self {
        Self {
            grid,
            mean: 0.0,
            coefficients: vec![0.0; grid.non_leaf_count()],
        }
    }

    #[inline]
    pub fn grid(&self) -> Grid {
        self.grid
    }

    pub fn coefficient(&self, interval: DyadicInterval) -> Result<f64> {
        check_non_leaf(self.grid, interval)?;
        Ok(self.coefficients[interval.heap_index()])
    }

    /// `mean² + Σ c_I²`, equal to `∫ f²` by Plancherel.
    pub fn energy(&self) -> f64 {
        self.mean * self.mean + dot(&self.coefficients, &self.coefficients)
    }
}

/// Forward Haar transform in O(n): pairwise means bottom-up, then
/// `⟨f, h_I⟩ = √|I| Δ_I f / 2`.
pub fn haar_transform(f: &StepFunction) -> HaarExpansion {
    haar_from_averages(&f.averages())
}

pub(crate) fn haar_from_averages(averages: &Averages) -> HaarExpansion {
    let grid = averages.grid;
    let coefficients = (0..grid.non_leaf_count())
        .map(|idx| {
            let half_sqrt_len = 0.5 * DyadicInterval::from_heap_index(idx).length().sqrt();
            half_sqrt_len * averages.delta_at(idx)
        })
        .collect();
    HaarExpansion {
        grid,
        mean: averages.at(0),
        coefficients,
    }
}

/// Inverse Haar transform in O(n): children means are `⟨f⟩_I ∓ c_I/√|I|`.
pub fn inverse_haar(expansion: &HaarExpansion) -> StepFunction {
    let grid = expansion.grid;
    let n = grid.cells();
    let mut table = vec![0.0; grid.interval_count()];
    table[0] = expansion.mean;
    for idx in 0..n - 1 {
        let step = expansion.coefficients[idx] / DyadicInterval::from_heap_index(idx).length().sqrt();
        table[2 * idx + 1] = table[idx] - step;
        table[2 * idx + 2] = table[idx] + step;
    }
    StepFunction::from_raw(grid, table.split_off(n - 1))
}

/// Same as [`inverse_haar`] after checking the expansion belongs to `grid`.
pub fn inverse_haar_on(grid: Grid, expansion: &HaarExpansion) -> Result<StepFunction> {
    grid.ensure_same(expansion.grid)?;
    Ok(inverse_haar(expansion))
}

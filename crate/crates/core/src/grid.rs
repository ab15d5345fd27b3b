//! Uniform rectangular partition of the state space and the abstraction
//! from regions to cell sets.

use fixedbitset::FixedBitSet;

use crate::error::{Error, Result};
use crate::geometry::StarUnion;
use crate::interval::{Interval, IntervalBox};

pub type CellIndex = Vec<usize>;

/// Relative shrink applied to cells when the epsilon-shrink option is on.
pub const SHRINK_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    bounds: IntervalBox,
    counts: Vec<usize>,
    strides: Vec<usize>,
    /// Cells shrink by `SHRINK_EPS · width` per side in overlap tests.
    pub epsilon_shrink: bool,
}

/// A side of the state space that a region crosses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Face {
    pub dim: usize,
    pub upper: bool,
}

impl Grid {
    pub fn new(bounds: IntervalBox, counts: Vec<usize>) -> Result<Self> {
        if counts.len() != bounds.dim() {
            return Err(Error::Config(format!("{} cell counts for a {}-dimensional grid", counts.len(), bounds.dim())));
        }
        if counts.contains(&0) || bounds.iter().any(|iv| !(iv.width() > 0.0)) {
            return Err(Error::Config("grid needs positive counts and nonempty bounds".into()));
        }
        let mut strides = vec![1; counts.len()];
        for d in (0..counts.len().saturating_sub(1)).rev() {
            strides[d] = strides[d + 1] * counts[d + 1];
        }
        Ok(Self { bounds, counts, strides, epsilon_shrink: false })
    }

    pub fn bounds(&self) -> &IntervalBox {
        &self.bounds
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn cell_width(&self, d: usize) -> f64 {
        self.bounds[d].width() / self.counts[d] as f64
    }

    /// `i`-th grid line along dimension `d`; the last line is the upper bound.
    pub fn edge(&self, d: usize, i: usize) -> f64 {
        let iv = self.bounds[d];
        if i >= self.counts[d] {
            iv.hi
        } else {
            iv.lo + i as f64 * iv.width() / self.counts[d] as f64
        }
    }

    pub fn flat(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    pub fn unflat(&self, mut k: usize) -> CellIndex {
        self.strides
            .iter()
            .map(|s| {
                let i = k / s;
                k %= s;
                i
            })
            .collect()
    }

    /// Half-open indexing; points on the upper bound belong to the last cell.
    pub fn cell_of(&self, x: &[f64]) -> Result<CellIndex> {
        if x.len() != self.dim() {
            return Err(Error::Dimension("point and grid dimensions differ".into()));
        }
        (0..self.dim()).map(|d| self.index_along(d, x[d])).collect()
    }

    fn index_along(&self, d: usize, x: f64) -> Result<usize> {
        let iv = self.bounds[d];
        if !(x >= iv.lo && x <= iv.hi) {
            return Err(Error::OutOfDomain);
        }
        let n = self.counts[d];
        let mut i = (((x - iv.lo) / self.cell_width(d)).floor() as usize).min(n - 1);
        while i > 0 && x < self.edge(d, i) {
            i -= 1;
        }
        while i + 1 < n && x >= self.edge(d, i + 1) {
            i += 1;
        }
        Ok(i)
    }

    pub fn cell_of_flat(&self, x: &[f64]) -> Result<usize> {
        Ok(self.flat(&self.cell_of(x)?))
    }

    pub fn cell_box(&self, idx: &[usize]) -> IntervalBox {
        IntervalBox::new(
            idx.iter()
                .enumerate()
                .map(|(d, &i)| Interval::new(self.edge(d, i), self.edge(d, i + 1)))
                .collect(),
        )
    }

    pub fn cell_box_flat(&self, k: usize) -> IntervalBox {
        self.cell_box(&self.unflat(k))
    }

    /// Cell box as used in overlap tests (shrunk if the option is on).
    fn test_box(&self, idx: &[usize]) -> IntervalBox {
        let b = self.cell_box(idx);
        if !self.epsilon_shrink {
            return b;
        }
        IntervalBox::new(
            b.iter()
                .map(|iv| {
                    let e = SHRINK_EPS * iv.width();
                    Interval::new(iv.lo + e, iv.hi - e)
                })
                .collect(),
        )
    }

    /// Index range along `d` of cells overlapping `[lo, hi]`.
    fn overlap_range(&self, d: usize, iv: Interval) -> Option<(usize, usize)> {
        let n = self.counts[d];
        let e = if self.epsilon_shrink { SHRINK_EPS * self.cell_width(d) } else { 0.0 };
        let lo = iv.lo.max(self.bounds[d].lo);
        let hi = iv.hi.min(self.bounds[d].hi);
        if lo > hi {
            return None;
        }
        let mut first = self.index_along(d, lo).ok()?;
        while first + 1 < n && self.edge(d, first + 1) - e < iv.lo {
            first += 1;
        }
        while first > 0 && self.edge(d, first) - e >= iv.lo {
            first -= 1;
        }
        let mut last = self.index_along(d, hi).ok()?;
        while last > 0 && self.edge(d, last) + e > iv.hi {
            last -= 1;
        }
        while last + 1 < n && self.edge(d, last + 1) + e <= iv.hi {
            last += 1;
        }
        (first <= last).then_some((first, last))
    }

    /// All cells whose closed box meets `region`.
    pub fn alpha_box(&self, region: &IntervalBox) -> Result<CellSet> {
        let mut set = CellSet::new(self.total());
        for k in self.candidates(region)? {
            set.insert(k);
        }
        Ok(set)
    }

    /// Flat indices of cells meeting `region`, ascending.
    pub fn candidates(&self, region: &IntervalBox) -> Result<Vec<usize>> {
        if region.dim() != self.dim() {
            return Err(Error::Dimension("region and grid dimensions differ".into()));
        }
        let ranges = (0..self.dim())
            .map(|d| self.overlap_range(d, region[d]))
            .collect::<Option<Vec<_>>>()
            .ok_or(Error::OutOfDomain)?;
        let mut out = Vec::new();
        let mut idx: Vec<usize> = ranges.iter().map(|r| r.0).collect();
        loop {
            out.push(self.flat(&idx));
            let mut d = self.dim();
            loop {
                if d == 0 {
                    return Ok(out);
                }
                d -= 1;
                if idx[d] < ranges[d].1 {
                    idx[d] += 1;
                    break;
                }
                idx[d] = ranges[d].0;
            }
        }
    }

    /// Cells meeting some member of the union: bounding-box candidates
    /// filtered by exact intersection.
    pub fn alpha_stars(&self, region: &StarUnion) -> Result<CellSet> {
        let mut set = CellSet::new(self.total());
        for star in region.iter() {
            let bb = match star.box_bounds() {
                Ok(b) => b,
                Err(Error::InfeasibleStar) => continue,
                Err(e) => return Err(e),
            };
            let cands = match self.candidates(&bb) {
                Ok(c) => c,
                Err(Error::OutOfDomain) => continue,
                Err(e) => return Err(e),
            };
            for k in cands {
                if set.contains(k) {
                    continue;
                }
                let idx = self.unflat(k);
                let cell = self.test_box(&idx);
                if bb.is_subset_of(&cell) || star.intersects_box(&cell)? {
                    set.insert(k);
                }
            }
        }
        Ok(set)
    }

    /// Faces of the state space that `region` extends beyond.
    pub fn egress(&self, region: &IntervalBox) -> Vec<Face> {
        let mut faces = Vec::new();
        for (d, (r, b)) in region.iter().zip(self.bounds.iter()).enumerate() {
            if r.lo < b.lo {
                faces.push(Face { dim: d, upper: false });
            }
            if r.hi > b.hi {
                faces.push(Face { dim: d, upper: true });
            }
        }
        faces
    }

    /// Sorted index tuples, for serialization.
    pub fn index_tuples(&self, set: &CellSet) -> Vec<CellIndex> {
        set.iter().filter(|&k| k < self.total()).map(|k| self.unflat(k)).collect()
    }
}

/// Set of flat cell indices with bitset storage.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellSet {
    bits: FixedBitSet,
}

impl CellSet {
    pub fn new(capacity: usize) -> Self {
        Self { bits: FixedBitSet::with_capacity(capacity) }
    }

    pub fn full(capacity: usize) -> Self {
        let mut s = Self::new(capacity);
        s.bits.insert_range(..);
        s
    }

    pub fn capacity(&self) -> usize {
        self.bits.len()
    }

    pub fn insert(&mut self, k: usize) -> bool {
        !self.bits.put(k)
    }

    pub fn remove(&mut self, k: usize) {
        self.bits.set(k, false);
    }

    pub fn contains(&self, k: usize) -> bool {
        self.bits.contains(k)
    }

    pub fn len(&self) -> usize {
        self.bits.count_ones(..)
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_clear()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.bits.ones()
    }

    pub fn union_with(&mut self, other: &CellSet) {
        self.bits.union_with(&other.bits);
    }

    pub fn intersect_with(&mut self, other: &CellSet) {
        self.bits.intersect_with(&other.bits);
    }

    pub fn difference_with(&mut self, other: &CellSet) {
        self.bits.difference_with(&other.bits);
    }

    pub fn is_disjoint(&self, other: &CellSet) -> bool {
        self.bits.is_disjoint(&other.bits)
    }

    pub fn is_subset(&self, other: &CellSet) -> bool {
        self.bits.is_subset(&other.bits)
    }

    /// Copy with a different capacity; indices beyond it are dropped.
    pub fn resized(&self, capacity: usize) -> CellSet {
        let mut s = CellSet::new(capacity);
        for k in self.iter().filter(|&k| k < capacity) {
            s.insert(k);
        }
        s
    }
}

impl FromIterator<usize> for CellSet {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        let bits: FixedBitSet = iter.into_iter().collect();
        Self { bits }
    }
}

//! Star sets: affine images of bounded latent polytopes.
//!
//! A star denotes `{ c + V a : C a <= d, a in latent_box }`. The latent box
//! is kept apart from `(C, d)` so that `c ± |V| r` gives cheap outer bounds
//! before any LP is solved.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};
use rand::Rng;

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalBox};
use crate::lp::{LinearProgram, PreparedLp};

#[derive(Debug, Clone, PartialEq)]
pub struct StarSet {
    center: Array1<f64>,
    basis: Array2<f64>,
    cmat: Array2<f64>,
    d: Array1<f64>,
    latent: IntervalBox,
}

impl StarSet {
    pub fn new(
        center: Array1<f64>,
        basis: Array2<f64>,
        cmat: Array2<f64>,
        d: Array1<f64>,
        latent: IntervalBox,
    ) -> Result<Self> {
        let (n, p) = basis.dim();
        if center.len() != n {
            return Err(Error::Dimension(format!("center has {} entries, basis has {n} rows", center.len())));
        }
        if latent.dim() != p || cmat.ncols() != p {
            return Err(Error::Dimension(format!(
                "basis has {p} columns but latent box has {} and constraints {}",
                latent.dim(),
                cmat.ncols()
            )));
        }
        if cmat.nrows() != d.len() {
            return Err(Error::Dimension("constraint matrix and rhs disagree".into()));
        }
        Ok(Self { center, basis, cmat, d, latent })
    }

    /// The box itself: identity basis over the re-centered box.
    pub fn from_box(b: &IntervalBox) -> Self {
        let n = b.dim();
        let latent = IntervalBox::new(b.radii().into_iter().map(|r| Interval::new(-r, r)).collect());
        Self {
            center: Array1::from(b.center()),
            basis: Array2::eye(n),
            cmat: Array2::zeros((0, n)),
            d: Array1::zeros(0),
            latent,
        }
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn latent_dim(&self) -> usize {
        self.latent.dim()
    }

    pub fn num_constraints(&self) -> usize {
        self.d.len()
    }

    pub fn center(&self) -> &Array1<f64> {
        &self.center
    }

    pub fn basis(&self) -> &Array2<f64> {
        &self.basis
    }

    pub fn constraints(&self) -> (&Array2<f64>, &Array1<f64>) {
        (&self.cmat, &self.d)
    }

    pub fn latent_box(&self) -> &IntervalBox {
        &self.latent
    }

    /// `c + V a` for a latent coefficient vector.
    pub fn point_at(&self, alpha: &[f64]) -> Vec<f64> {
        (&self.center + &self.basis.dot(&ArrayView1::from(alpha))).to_vec()
    }

    /// Same latent polytope, different center and basis.
    pub fn with_map(&self, center: Array1<f64>, basis: Array2<f64>) -> Result<Self> {
        Self::new(center, basis, self.cmat.clone(), self.d.clone(), self.latent.clone())
    }

    pub fn affine_map(&self, a: &Array2<f64>, b: &Array1<f64>) -> Result<Self> {
        if a.ncols() != self.dim() || a.nrows() != b.len() {
            return Err(Error::Dimension(format!(
                "affine map {}x{} (+{}) applied to a star of dimension {}",
                a.nrows(),
                a.ncols(),
                b.len(),
                self.dim()
            )));
        }
        self.with_map(a.dot(&self.center) + b, a.dot(&self.basis))
    }

    /// Keeps the listed coordinates, in order.
    pub fn project(&self, dims: &[usize]) -> Self {
        let center = dims.iter().map(|&i| self.center[i]).collect();
        let basis = self.basis.select(Axis(0), dims);
        Self { center, basis, ..self.clone() }
    }

    /// Restricts the latent polytope by `row · a <= rhs`.
    pub fn add_latent_constraint(&self, row: ArrayView1<f64>, rhs: f64) -> Self {
        let mut out = self.clone();
        out.cmat.push_row(row).expect("row length checked by caller");
        out.d = self.d.iter().copied().chain(std::iter::once(rhs)).collect();
        out
    }

    /// Intersection with the halfspace `g · x <= h`.
    pub fn add_halfspace(&self, g: &[f64], h: f64) -> Result<Self> {
        if g.len() != self.dim() {
            return Err(Error::Dimension(format!("halfspace of dimension {} on star of dimension {}", g.len(), self.dim())));
        }
        let g = ArrayView1::from(g);
        let row = g.dot(&self.basis);
        Ok(self.add_latent_constraint(row.view(), h - g.dot(&self.center)))
    }

    /// Minkowski sum with a box, adding one unconstrained generator per
    /// dimension.
    pub fn minkowski_box(&self, e: &IntervalBox) -> Result<Self> {
        let n = self.dim();
        if e.dim() != n {
            return Err(Error::Dimension(format!("box of dimension {} added to star of dimension {n}", e.dim())));
        }
        let extra = IntervalBox::new(e.radii().into_iter().map(|r| Interval::new(-r, r)).collect());
        Ok(self.extend_generators(&self.center + &Array1::from(e.center()), Array2::eye(n), &extra))
    }

    /// Like [`minkowski_box`](Self::minkowski_box) but only adds generators
    /// for dimensions of nonzero width.
    pub fn minkowski_box_compact(&self, e: &IntervalBox) -> Result<Self> {
        let n = self.dim();
        if e.dim() != n {
            return Err(Error::Dimension(format!("box of dimension {} added to star of dimension {n}", e.dim())));
        }
        let wide: Vec<usize> = (0..n).filter(|&i| e[i].width() > 0.0).collect();
        let mut gens = Array2::zeros((n, wide.len()));
        for (k, &i) in wide.iter().enumerate() {
            gens[[i, k]] = 1.0;
        }
        let center = &self.center + &Array1::from(e.center());
        if wide.is_empty() {
            return self.with_map(center, self.basis.clone());
        }
        let extra = IntervalBox::new(wide.iter().map(|&i| Interval::new(-e[i].radius(), e[i].radius())).collect());
        Ok(self.extend_generators(center, gens, &extra))
    }

    /// Cartesian product with a box: new coordinates driven by fresh
    /// generators, so the result has dimension `dim + b.dim()`.
    pub fn product_box(&self, b: &IntervalBox) -> Self {
        let (n, p, k) = (self.dim(), self.latent_dim(), b.dim());
        let mut center = self.center.to_vec();
        center.extend(b.center());
        let mut basis = Array2::zeros((n + k, p));
        basis.slice_mut(s![..n, ..]).assign(&self.basis);
        let star = Self { center: Array1::from(center), basis, ..self.clone() };
        let mut gens = Array2::zeros((n + k, k));
        gens.slice_mut(s![n.., ..]).assign(&Array2::eye(k));
        let extra = IntervalBox::new(b.radii().into_iter().map(|r| Interval::new(-r, r)).collect());
        let c = star.center.clone();
        star.extend_generators(c, gens, &extra)
    }

    fn extend_generators(&self, center: Array1<f64>, gens: Array2<f64>, extra: &IntervalBox) -> Self {
        let (n, p) = self.basis.dim();
        let k = gens.ncols();
        let mut basis = Array2::zeros((n, p + k));
        basis.slice_mut(s![.., ..p]).assign(&self.basis);
        basis.slice_mut(s![.., p..]).assign(&gens);
        let mut cmat = Array2::zeros((self.cmat.nrows(), p + k));
        cmat.slice_mut(s![.., ..p]).assign(&self.cmat);
        Self { center, basis, cmat, d: self.d.clone(), latent: self.latent.product(extra) }
    }

    /// Replaces the generators that appear in no constraint by their
    /// interval hull, one axis-aligned generator per dimension. The result
    /// contains the original set; it is only ever applied to small
    /// remainder terms.
    pub fn merge_free_generators(&self) -> Self {
        let (n, p) = self.basis.dim();
        let free: Vec<usize> = (0..p).filter(|&j| self.cmat.column(j).iter().all(|&v| v == 0.0)).collect();
        if free.len() <= n {
            return self.clone();
        }
        let kept: Vec<usize> = (0..p).filter(|j| !free.contains(j)).collect();
        let mut center = self.center.clone();
        let mut radius = Array1::<f64>::zeros(n);
        for &j in &free {
            let iv = self.latent[j];
            for i in 0..n {
                center[i] += self.basis[[i, j]] * iv.mid();
                radius[i] += self.basis[[i, j]].abs() * iv.radius();
            }
        }
        let e = IntervalBox::new((0..n).map(|i| Interval::new(center[i] - radius[i], center[i] + radius[i])).collect());
        if kept.is_empty() {
            return Self::from_box(&e);
        }
        let reduced = Self {
            center: Array1::zeros(n),
            basis: self.basis.select(Axis(1), &kept),
            cmat: self.cmat.select(Axis(1), &kept),
            d: self.d.clone(),
            latent: IntervalBox::new(kept.iter().map(|&j| self.latent[j]).collect()),
        };
        reduced.minkowski_box_compact(&e).expect("dimensions agree")
    }

    /// Outer bounds from the latent box alone, ignoring `C a <= d`.
    pub fn quick_bounds(&self) -> IntervalBox {
        IntervalBox::new(
            (0..self.dim())
                .map(|i| self.row_quick_bounds(self.basis.row(i), self.center[i]))
                .collect(),
        )
    }

    /// Outer bound of coordinate `i` from the latent box alone.
    pub fn quick_bounds_of(&self, i: usize) -> Interval {
        self.row_quick_bounds(self.basis.row(i), self.center[i])
    }

    fn row_quick_bounds(&self, row: ArrayView1<f64>, offset: f64) -> Interval {
        let (mut lo, mut hi) = (offset, offset);
        for (v, iv) in row.iter().zip(self.latent.iter()) {
            let (a, b) = (v * iv.lo, v * iv.hi);
            lo += a.min(b);
            hi += a.max(b);
        }
        Interval::new(lo, hi)
    }

    /// LP over the latent coefficients with the star's constraints.
    pub fn latent_lp(&self) -> LinearProgram {
        let mut lp = LinearProgram::new(self.latent.lower(), self.latent.upper());
        for (row, &rhs) in self.cmat.rows().into_iter().zip(&self.d) {
            lp.add_row(row.to_vec(), rhs);
        }
        lp
    }

    pub fn is_feasible(&self) -> Result<bool> {
        if self.d.is_empty() {
            return Ok(true);
        }
        self.latent_lp().is_feasible()
    }

    /// Tightest axis-aligned enclosure.
    pub fn box_bounds(&self) -> Result<IntervalBox> {
        if self.d.is_empty() {
            return Ok(self.quick_bounds());
        }
        let lp = self.latent_lp();
        let prepared = lp.prepare()?.ok_or(Error::InfeasibleStar)?;
        (0..self.dim()).map(|i| self.dim_bounds(&prepared, i)).collect::<Result<Vec<_>>>().map(IntervalBox::new)
    }

    /// Exact range of coordinate `i`.
    pub fn coordinate_bounds(&self, i: usize) -> Result<Interval> {
        if self.d.is_empty() {
            return Ok(self.row_quick_bounds(self.basis.row(i), self.center[i]));
        }
        let lp = self.latent_lp();
        let prepared = lp.prepare()?.ok_or(Error::InfeasibleStar)?;
        self.dim_bounds(&prepared, i)
    }

    fn dim_bounds(&self, lp: &PreparedLp<'_>, i: usize) -> Result<Interval> {
        let row = self.basis.row(i).to_vec();
        let lo = lp.minimize(&row)?.value + self.center[i];
        let hi = lp.maximize(&row)?.value + self.center[i];
        // The LP optimum can never beat the unconstrained enclosure.
        let quick = self.row_quick_bounds(self.basis.row(i), self.center[i]);
        Ok(Interval::new(lo.max(quick.lo).min(hi), hi.min(quick.hi).max(lo)))
    }

    pub fn intersects_box(&self, cell: &IntervalBox) -> Result<bool> {
        if cell.dim() != self.dim() {
            return Err(Error::Dimension("cell and star dimensions differ".into()));
        }
        let quick = self.quick_bounds();
        if quick.intersect(cell).is_none() {
            return Ok(false);
        }
        let mut lp = self.latent_lp();
        for i in 0..self.dim() {
            let row = self.basis.row(i);
            if quick[i].hi > cell[i].hi {
                lp.add_row(row.to_vec(), cell[i].hi - self.center[i]);
            }
            if quick[i].lo < cell[i].lo {
                lp.add_row(row.iter().map(|v| -v).collect(), self.center[i] - cell[i].lo);
            }
        }
        if lp.num_rows() == 0 {
            return Ok(true);
        }
        lp.is_feasible()
    }

    /// Membership test: is there a feasible `a` with `|c + V a - x| <= tol`?
    pub fn contains_point(&self, x: &[f64], tol: f64) -> Result<bool> {
        if x.len() != self.dim() {
            return Err(Error::Dimension("point and star dimensions differ".into()));
        }
        let mut lp = self.latent_lp();
        for i in 0..self.dim() {
            let row = self.basis.row(i);
            let r = x[i] - self.center[i];
            lp.add_row(row.to_vec(), r + tol);
            lp.add_row(row.iter().map(|v| -v).collect(), -r + tol);
        }
        lp.is_feasible()
    }

    /// Rejection sample of a latent vector satisfying the constraints.
    pub fn sample_latent<R: Rng>(&self, rng: &mut R, tries: usize) -> Option<Vec<f64>> {
        for _ in 0..tries {
            let alpha: Vec<f64> = self.latent.iter().map(|iv| iv.lo + rng.random::<f64>() * iv.width()).collect();
            if self.satisfies(&alpha, 0.0) {
                return Some(alpha);
            }
        }
        None
    }

    /// Whether `alpha` lies in the latent polytope up to `tol`.
    pub fn satisfies(&self, alpha: &[f64], tol: f64) -> bool {
        self.latent.contains_tol(alpha, tol)
            && self
                .cmat
                .rows()
                .into_iter()
                .zip(&self.d)
                .all(|(row, &d)| row.dot(&ArrayView1::from(alpha)) <= d + tol)
    }
}

/// Finite union of stars of equal dimension.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StarUnion {
    pub stars: Vec<StarSet>,
}

impl StarUnion {
    pub fn new(stars: Vec<StarSet>) -> Self {
        debug_assert!(stars.windows(2).all(|w| w[0].dim() == w[1].dim()));
        Self { stars }
    }

    pub fn len(&self) -> usize {
        self.stars.len()
    }

    pub fn is_empty(&self) -> bool {
        self.stars.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, StarSet> {
        self.stars.iter()
    }

    /// Hull of member bounds; `None` for the empty union.
    pub fn box_bounds(&self) -> Result<Option<IntervalBox>> {
        let mut acc: Option<IntervalBox> = None;
        for s in &self.stars {
            let b = s.box_bounds()?;
            acc = Some(match acc {
                Some(a) => a.hull(&b),
                None => b,
            });
        }
        Ok(acc)
    }

    pub fn contains_point(&self, x: &[f64], tol: f64) -> Result<bool> {
        for s in &self.stars {
            if s.contains_point(x, tol)? {
                return Ok(true);
            }
        }
        Ok(false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn unit_box() -> IntervalBox {
        IntervalBox::from_bounds(&[(0.0, 1.0), (0.0, 1.0)])
    }

    /// |x| + |y| <= 1 as a star over the unit square rotated by 45°.
    fn rotated_square() -> StarSet {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let b = IntervalBox::from_bounds(&[(-h, h), (-h, h)]);
        let r = array![[h, -h], [h, h]];
        StarSet::from_box(&b).affine_map(&r, &array![0.0, 0.0]).unwrap()
    }

    #[test]
    fn from_box_examples() {
        let s = StarSet::from_box(&unit_box());
        assert_eq!(s.center().to_vec(), vec![0.5, 0.5]);
        assert_eq!(s.basis(), &Array2::<f64>::eye(2));
        assert_eq!(s.latent_box(), &IntervalBox::from_bounds(&[(-0.5, 0.5), (-0.5, 0.5)]));

        let s = StarSet::from_box(&IntervalBox::from_bounds(&[(2.0, 2.0)]));
        assert_eq!(s.center()[0], 2.0);
        assert_eq!(s.latent_box()[0], Interval::point(0.0));

        let s = StarSet::from_box(&IntervalBox::from_bounds(&[(-1.0, 3.0)]));
        assert_eq!(s.center()[0], 1.0);
        assert_eq!(s.latent_box()[0], Interval::new(-2.0, 2.0));
    }

    #[test]
    fn affine_map_examples() {
        let s = StarSet::from_box(&unit_box());
        let same = s.affine_map(&Array2::eye(2), &array![0.0, 0.0]).unwrap();
        assert_eq!(same, s);

        let origin = StarSet::from_box(&IntervalBox::from_bounds(&[(-1.0, 1.0), (-1.0, 1.0)]));
        let t = origin.affine_map(&(Array2::eye(2) * 2.0), &array![1.0, 1.0]).unwrap();
        assert_eq!(t.box_bounds().unwrap(), IntervalBox::from_bounds(&[(-1.0, 3.0), (-1.0, 3.0)]));

        assert!(s.affine_map(&Array2::eye(3), &array![0.0, 0.0, 0.0]).is_err());
    }

    #[test]
    fn halfspace_examples() {
        let s = StarSet::from_box(&unit_box());
        let cut = s.add_halfspace(&[1.0, 0.0], 0.5).unwrap();
        assert_eq!(cut.box_bounds().unwrap(), IntervalBox::from_bounds(&[(0.0, 0.5), (0.0, 1.0)]));
        let red = s.add_halfspace(&[1.0, 0.0], 10.0).unwrap();
        assert_eq!(red.box_bounds().unwrap(), unit_box());
        let none = s.add_halfspace(&[1.0, 0.0], -5.0).unwrap();
        assert!(!none.is_feasible().unwrap());
        assert!(matches!(none.box_bounds(), Err(Error::InfeasibleStar)));
        assert!(s.is_feasible().unwrap());
    }

    #[test]
    fn minkowski_examples() {
        let s = StarSet::from_box(&unit_box());
        let z = s.minkowski_box(&IntervalBox::point(&[0.0, 0.0])).unwrap();
        assert_eq!(z.box_bounds().unwrap(), unit_box());
        assert_eq!(z.latent_dim(), 4);

        let p = StarSet::from_box(&IntervalBox::point(&[0.0, 0.0]));
        let sq = p.minkowski_box(&IntervalBox::from_bounds(&[(-1.0, 1.0), (-1.0, 1.0)])).unwrap();
        assert_eq!(sq.box_bounds().unwrap(), IntervalBox::from_bounds(&[(-1.0, 1.0), (-1.0, 1.0)]));
    }

    #[test]
    fn rotated_square_bounds_and_corner_cell() {
        let s = rotated_square();
        let b = s.box_bounds().unwrap();
        for iv in b.iter() {
            assert!((iv.lo + 1.0).abs() < 1e-12 && (iv.hi - 1.0).abs() < 1e-12);
        }
        let corner = IntervalBox::from_bounds(&[(0.6, 1.0), (0.6, 1.0)]);
        assert!(corner.intersect(&b).is_some());
        assert!(!s.intersects_box(&corner).unwrap());
        let center = IntervalBox::from_bounds(&[(-0.1, 0.1), (-0.1, 0.1)]);
        assert!(s.intersects_box(&center).unwrap());
        let outside = IntervalBox::from_bounds(&[(2.0, 3.0), (0.0, 1.0)]);
        assert!(!s.intersects_box(&outside).unwrap());
    }

    #[test]
    fn product_box_appends_coordinates() {
        let s = rotated_square().product_box(&IntervalBox::from_bounds(&[(-0.8, 0.8)]));
        assert_eq!(s.dim(), 3);
        let b = s.box_bounds().unwrap();
        assert!((b[2].lo + 0.8).abs() < 1e-12 && (b[2].hi - 0.8).abs() < 1e-12);
        assert!(s.contains_point(&[0.5, 0.5, 0.8], 1e-9).unwrap());
        assert!(!s.contains_point(&[0.9, 0.9, 0.0], 1e-9).unwrap());
    }

    #[test]
    fn membership_and_sampling_agree() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let s = rotated_square().add_halfspace(&[1.0, 2.0], 0.5).unwrap();
        for _ in 0..2000 {
            let x: [f64; 2] = [rng.random_range(-1.2..1.2), rng.random_range(-1.2..1.2)];
            let truth = x[0].abs() + x[1].abs() <= 1.0 && x[0] + 2.0 * x[1] <= 0.5;
            let margin = (x[0].abs() + x[1].abs() - 1.0).abs().min((x[0] + 2.0 * x[1] - 0.5).abs());
            if margin > 1e-6 {
                assert_eq!(s.contains_point(&x, 1e-9).unwrap(), truth, "{x:?}");
            }
        }
        let a = s.sample_latent(&mut rng, 1000).unwrap();
        let x = s.point_at(&a);
        assert!(x[0].abs() + x[1].abs() <= 1.0 + 1e-12);
    }
}

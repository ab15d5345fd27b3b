//! Closed real intervals and axis-aligned boxes.
//!
//! Arithmetic is plain `f64` without directed rounding; every operation
//! returns the tightest interval for the exact real operation evaluated at
//! the floating-point endpoints.

use std::f64::consts::{FRAC_PI_2, PI, TAU};
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl fmt::Debug for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

impl TryFrom<[f64; 2]> for Interval {
    type Error = Error;

    fn try_from([lo, hi]: [f64; 2]) -> Result<Self> {
        Interval::try_new(lo, hi)
    }
}

impl From<Interval> for [f64; 2] {
    fn from(iv: Interval) -> Self {
        [iv.lo, iv.hi]
    }
}

impl Interval {
    /// Panics if `lo > hi` or either endpoint is not finite.
    pub fn new(lo: f64, hi: f64) -> Self {
        match Self::try_new(lo, hi) {
            Ok(iv) => iv,
            Err(e) => panic!("{e}"),
        }
    }

    pub fn try_new(lo: f64, hi: f64) -> Result<Self> {
        if lo.is_finite() && hi.is_finite() && lo <= hi {
            Ok(Self { lo, hi })
        } else {
            Err(Error::InvalidInterval { lo, hi })
        }
    }

    pub fn point(x: f64) -> Self {
        Self::new(x, x)
    }

    /// Smallest interval containing both `a` and `b`, in any order.
    pub fn spanning(a: f64, b: f64) -> Self {
        Self::new(a.min(b), a.max(b))
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    pub fn radius(&self) -> f64 {
        0.5 * (self.hi - self.lo)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    /// Containment with an absolute slack on both ends.
    pub fn contains_tol(&self, x: f64, tol: f64) -> bool {
        self.lo - tol <= x && x <= self.hi + tol
    }

    pub fn is_subset_of(&self, other: &Interval) -> bool {
        other.lo <= self.lo && self.hi <= other.hi
    }

    pub fn hull(&self, other: &Interval) -> Interval {
        Interval::new(self.lo.min(other.lo), self.hi.max(other.hi))
    }

    pub fn intersect(&self, other: &Interval) -> Option<Interval> {
        let lo = self.lo.max(other.lo);
        let hi = self.hi.min(other.hi);
        (lo <= hi).then(|| Interval::new(lo, hi))
    }

    pub fn scale(&self, k: f64) -> Interval {
        Interval::spanning(self.lo * k, self.hi * k)
    }

    pub fn shift(&self, c: f64) -> Interval {
        Interval::new(self.lo + c, self.hi + c)
    }

    pub fn relu(&self) -> Interval {
        Interval::new(self.lo.max(0.0), self.hi.max(0.0))
    }

    /// Tight enclosure of x² (never negative, unlike `self * self`).
    pub fn sqr(&self) -> Interval {
        let (a, b) = (self.lo * self.lo, self.hi * self.hi);
        if self.lo <= 0.0 && 0.0 <= self.hi {
            Interval::new(0.0, a.max(b))
        } else {
            Interval::spanning(a, b)
        }
    }

    /// Exact image of `sin` over the interval.
    pub fn sin(&self) -> Interval {
        if self.width() >= TAU {
            return Interval::new(-1.0, 1.0);
        }
        let (a, b) = (self.lo.sin(), self.hi.sin());
        let mut lo = a.min(b);
        let mut hi = a.max(b);
        if contains_grid_point(self, FRAC_PI_2, TAU) {
            hi = 1.0;
        }
        if contains_grid_point(self, -FRAC_PI_2, TAU) {
            lo = -1.0;
        }
        Interval::new(lo, hi)
    }

    /// Exact image of `cos` over the interval.
    pub fn cos(&self) -> Interval {
        if self.width() >= TAU {
            return Interval::new(-1.0, 1.0);
        }
        let (a, b) = (self.lo.cos(), self.hi.cos());
        let mut lo = a.min(b);
        let mut hi = a.max(b);
        if contains_grid_point(self, 0.0, TAU) {
            hi = 1.0;
        }
        if contains_grid_point(self, PI, TAU) {
            lo = -1.0;
        }
        Interval::new(lo, hi)
    }

    /// Exact image of `tan`, or `PoleCrossed` when the interval contains
    /// some π/2 + kπ.
    pub fn tan(&self) -> Result<Interval> {
        if self.width() >= PI || contains_grid_point(self, FRAC_PI_2, PI) {
            return Err(Error::PoleCrossed { lo: self.lo, hi: self.hi });
        }
        Ok(Interval::new(self.lo.tan(), self.hi.tan()))
    }
}

/// Does the interval contain some `offset + k * period`?
fn contains_grid_point(iv: &Interval, offset: f64, period: f64) -> bool {
    let k = ((iv.lo - offset) / period).ceil();
    offset + k * period <= iv.hi
}

impl Add for Interval {
    type Output = Interval;
    fn add(self, rhs: Interval) -> Interval {
        Interval::new(self.lo + rhs.lo, self.hi + rhs.hi)
    }
}

impl Add<f64> for Interval {
    type Output = Interval;
    fn add(self, rhs: f64) -> Interval {
        self.shift(rhs)
    }
}

impl Sub for Interval {
    type Output = Interval;
    fn sub(self, rhs: Interval) -> Interval {
        Interval::new(self.lo - rhs.hi, self.hi - rhs.lo)
    }
}

impl Sub<f64> for Interval {
    type Output = Interval;
    fn sub(self, rhs: f64) -> Interval {
        self.shift(-rhs)
    }
}

impl Neg for Interval {
    type Output = Interval;
    fn neg(self) -> Interval {
        Interval::new(-self.hi, -self.lo)
    }
}

impl Mul for Interval {
    type Output = Interval;
    fn mul(self, rhs: Interval) -> Interval {
        let p = [
            self.lo * rhs.lo,
            self.lo * rhs.hi,
            self.hi * rhs.lo,
            self.hi * rhs.hi,
        ];
        let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        Interval::new(lo, hi)
    }
}

impl Mul<f64> for Interval {
    type Output = Interval;
    fn mul(self, rhs: f64) -> Interval {
        self.scale(rhs)
    }
}

/// Axis-aligned hyperrectangle; one interval per dimension.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Interval>", into = "Vec<Interval>")]
pub struct IntervalBox {
    dims: Vec<Interval>,
}

impl fmt::Debug for IntervalBox {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.dims.iter()).finish()
    }
}

impl TryFrom<Vec<Interval>> for IntervalBox {
    type Error = Error;
    fn try_from(dims: Vec<Interval>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Dimension("a box needs at least one dimension".into()));
        }
        Ok(Self { dims })
    }
}

impl From<IntervalBox> for Vec<Interval> {
    fn from(b: IntervalBox) -> Self {
        b.dims
    }
}

impl IntervalBox {
    /// Panics on an empty dimension list.
    pub fn new(dims: Vec<Interval>) -> Self {
        assert!(!dims.is_empty(), "a box needs at least one dimension");
        Self { dims }
    }

    pub fn from_bounds(bounds: &[(f64, f64)]) -> Self {
        Self::new(bounds.iter().map(|&(lo, hi)| Interval::new(lo, hi)).collect())
    }

    pub fn point(x: &[f64]) -> Self {
        Self::new(x.iter().map(|&v| Interval::point(v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.dims.len()
    }

    pub fn dims(&self) -> &[Interval] {
        &self.dims
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Interval> {
        self.dims.iter()
    }

    pub fn center(&self) -> Vec<f64> {
        self.dims.iter().map(Interval::mid).collect()
    }

    pub fn radii(&self) -> Vec<f64> {
        self.dims.iter().map(Interval::radius).collect()
    }

    pub fn lower(&self) -> Vec<f64> {
        self.dims.iter().map(|iv| iv.lo).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.dims.iter().map(|iv| iv.hi).collect()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.dim() && self.dims.iter().zip(x).all(|(iv, &v)| iv.contains(v))
    }

    pub fn contains_tol(&self, x: &[f64], tol: f64) -> bool {
        x.len() == self.dim()
            && self.dims.iter().zip(x).all(|(iv, &v)| iv.contains_tol(v, tol))
    }

    pub fn is_subset_of(&self, other: &IntervalBox) -> bool {
        self.dim() == other.dim()
            && self.dims.iter().zip(&other.dims).all(|(a, b)| a.is_subset_of(b))
    }

    pub fn hull(&self, other: &IntervalBox) -> IntervalBox {
        assert_eq!(self.dim(), other.dim());
        IntervalBox::new(self.dims.iter().zip(&other.dims).map(|(a, b)| a.hull(b)).collect())
    }

    pub fn intersect(&self, other: &IntervalBox) -> Option<IntervalBox> {
        assert_eq!(self.dim(), other.dim());
        self.dims
            .iter()
            .zip(&other.dims)
            .map(|(a, b)| a.intersect(b))
            .collect::<Option<Vec<_>>>()
            .map(IntervalBox::new)
    }

    /// Cartesian product `self × other`.
    pub fn product(&self, other: &IntervalBox) -> IntervalBox {
        let mut dims = self.dims.clone();
        dims.extend_from_slice(&other.dims);
        IntervalBox::new(dims)
    }

    /// Dimensions `range` as a new box.
    pub fn slice(&self, range: std::ops::Range<usize>) -> IntervalBox {
        IntervalBox::new(self.dims[range].to_vec())
    }

    /// Linear interpolation inside the box; `t` in [0,1] per dimension.
    pub fn lerp(&self, t: &[f64]) -> Vec<f64> {
        self.dims.iter().zip(t).map(|(iv, &s)| iv.lo + s * iv.width()).collect()
    }
}

impl std::ops::Index<usize> for IntervalBox {
    type Output = Interval;
    fn index(&self, i: usize) -> &Interval {
        &self.dims[i]
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    const TOL: f64 = 1e-12;

    fn random_interval(rng: &mut ChaCha8Rng, span: f64) -> Interval {
        Interval::spanning(rng.random_range(-span..span), rng.random_range(-span..span))
    }

    fn sample(rng: &mut ChaCha8Rng, iv: &Interval) -> f64 {
        iv.lo + rng.random::<f64>() * iv.width()
    }

    #[test]
    fn endpoint_arithmetic() {
        assert_eq!(Interval::new(1.0, 2.0) + Interval::new(3.0, 4.0), Interval::new(4.0, 6.0));
        assert_eq!(Interval::new(-1.0, 2.0) * Interval::new(3.0, 4.0), Interval::new(-4.0, 8.0));
        assert_eq!(Interval::point(0.0) * Interval::new(-3.0, 5.0), Interval::new(0.0, 0.0));
        assert_eq!(-Interval::new(1.0, 2.0), Interval::new(-2.0, -1.0));
        assert_eq!(Interval::new(1.0, 2.0) - Interval::new(0.0, 3.0), Interval::new(-2.0, 2.0));
        assert_eq!(Interval::new(1.0, 2.0) * -2.0, Interval::new(-4.0, -2.0));
    }

    #[test]
    fn rejects_invalid_endpoints() {
        assert!(Interval::try_new(2.0, 1.0).is_err());
        assert!(Interval::try_new(f64::NAN, 1.0).is_err());
        assert!(Interval::try_new(0.0, f64::INFINITY).is_err());
        assert!(serde_json::from_str::<Interval>("[3.0, 1.0]").is_err());
    }

    #[test]
    fn sin_examples() {
        assert_eq!(Interval::new(0.0, FRAC_PI_2).sin(), Interval::new(0.0, 1.0));
        assert_eq!(Interval::new(-FRAC_PI_2, FRAC_PI_2).sin(), Interval::new(-1.0, 1.0));
        let s = Interval::new(0.1, 0.2).sin();
        assert_eq!(s, Interval::new(0.1f64.sin(), 0.2f64.sin()));
        assert_eq!(Interval::new(-10.0, 10.0).sin(), Interval::new(-1.0, 1.0));
    }

    #[test]
    fn tan_examples() {
        let t = Interval::new(-0.3, 0.3).tan().unwrap();
        assert_eq!(t, Interval::new((-0.3f64).tan(), 0.3f64.tan()));
        assert_eq!(Interval::point(0.0).tan().unwrap(), Interval::point(0.0));
        assert!(matches!(Interval::new(1.5, 1.6).tan(), Err(Error::PoleCrossed { .. })));
        assert!(matches!(Interval::new(-1.6, -1.5).tan(), Err(Error::PoleCrossed { .. })));
        assert!(Interval::new(1.6, 3.0).tan().is_ok());
    }

    #[test]
    fn sqr_is_nonnegative() {
        assert_eq!(Interval::new(-2.0, 1.0).sqr(), Interval::new(0.0, 4.0));
        assert_eq!(Interval::new(-3.0, -1.0).sqr(), Interval::new(1.0, 9.0));
    }

    #[test]
    fn binary_ops_contain_pointwise_results() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        type Op = fn(Interval, Interval) -> Interval;
        type PointOp = fn(f64, f64) -> f64;
        let ops: [(Op, PointOp); 3] = [
            (|a, b| a + b, |x, y| x + y),
            (|a, b| a - b, |x, y| x - y),
            (|a, b| a * b, |x, y| x * y),
        ];
        for (iop, pop) in ops {
            for _ in 0..10_000 {
                let a = random_interval(&mut rng, 5.0);
                let b = random_interval(&mut rng, 5.0);
                let (x, y) = (sample(&mut rng, &a), sample(&mut rng, &b));
                let z = pop(x, y);
                assert!(iop(Interval::point(x), Interval::point(y)).contains_tol(z, TOL));
                assert!(iop(a, b).contains_tol(z, TOL));
            }
        }
    }

    #[test]
    fn unary_ops_contain_pointwise_results() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..10_000 {
            let a = random_interval(&mut rng, 8.0);
            let x = sample(&mut rng, &a);
            let k = rng.random_range(-3.0..3.0);
            assert!(a.sin().contains_tol(x.sin(), TOL));
            assert!(a.cos().contains_tol(x.cos(), TOL));
            assert!(a.sqr().contains_tol(x * x, TOL));
            assert!(a.scale(k).contains_tol(x * k, TOL));
            assert!((-a).contains_tol(-x, TOL));
            if let Ok(t) = a.tan() {
                assert!(t.contains_tol(x.tan(), 1e-9 * x.tan().abs().max(1.0)));
            }
        }
    }

    /// The reported endpoints must be attained (up to sampling density),
    /// i.e. the enclosure is the exact image.
    #[test]
    fn sin_and_tan_are_tight() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..300 {
            let a = random_interval(&mut rng, 4.0);
            let n = 20_000;
            let xs = (0..=n).map(|i| a.lo + a.width() * i as f64 / n as f64);
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for x in xs.clone() {
                lo = lo.min(x.sin());
                hi = hi.max(x.sin());
            }
            let s = a.sin();
            let slack = (a.width() / n as f64).powi(2) + 1e-12;
            assert!((s.lo - lo).abs() <= slack && (s.hi - hi).abs() <= slack, "{a:?} {s:?}");

            let t = Interval::new(a.lo * 0.35, a.hi * 0.35);
            let ti = t.tan().unwrap();
            let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
            for i in 0..=n {
                let x = t.lo + t.width() * i as f64 / n as f64;
                lo = lo.min(x.tan());
                hi = hi.max(x.tan());
            }
            assert!((ti.lo - lo).abs() <= 1e-12 && (ti.hi - hi).abs() <= 1e-12);
        }
    }

    #[test]
    fn box_helpers() {
        let b = IntervalBox::from_bounds(&[(0.0, 1.0), (-1.0, 3.0)]);
        assert_eq!(b.center(), vec![0.5, 1.0]);
        assert_eq!(b.radii(), vec![0.5, 2.0]);
        assert!(b.contains(&[1.0, -1.0]));
        assert!(!b.contains(&[1.1, 0.0]));
        let c = IntervalBox::from_bounds(&[(0.5, 2.0), (0.0, 1.0)]);
        assert_eq!(
            b.intersect(&c),
            Some(IntervalBox::from_bounds(&[(0.5, 1.0), (0.0, 1.0)]))
        );
        assert_eq!(b.product(&c).dim(), 4);
        let json = serde_json::to_string(&b).unwrap();
        assert_eq!(json, "[[0.0,1.0],[-1.0,3.0]]");
        assert!(serde_json::from_str::<IntervalBox>("[]").is_err());
    }
}

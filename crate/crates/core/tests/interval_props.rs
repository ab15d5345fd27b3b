use nncs_reach::interval::{Interval, IntervalBox};
use nncs_reach::Error;
use proptest::prelude::*;

fn iv() -> impl Strategy<Value = Interval> {
    (-6.0f64..6.0, 0.0f64..4.0).prop_map(|(a, w)| Interval::new(a, a + w))
}

fn point_in(i: Interval, t: f64) -> f64 {
    (i.lo + t * i.width()).min(i.hi)
}

proptest! {
    #[test]
    fn arithmetic_encloses_pointwise_results(a in iv(), b in iv(), s in 0.0f64..=1.0, t in 0.0f64..=1.0, k in -3.0f64..3.0) {
        let (x, y) = (point_in(a, s), point_in(b, t));
        prop_assert!((a + b).contains(x + y));
        prop_assert!((a - b).contains(x - y));
        prop_assert!((a * b).contains_tol(x * y, 1e-12));
        prop_assert!((a * k).contains_tol(x * k, 1e-12));
        prop_assert!((-a).contains(-x));
        prop_assert!(a.sqr().contains_tol(x * x, 1e-12));
        prop_assert!(a.relu().contains(x.max(0.0)));
        prop_assert!(a.sin().contains_tol(x.sin(), 1e-12));
        prop_assert!(a.cos().contains_tol(x.cos(), 1e-12));
    }

    #[test]
    fn tan_encloses_or_reports_the_pole(a in iv(), s in 0.0f64..=1.0) {
        let x = point_in(a, s);
        let k = ((a.lo - std::f64::consts::FRAC_PI_2) / std::f64::consts::PI).ceil();
        let crosses = std::f64::consts::FRAC_PI_2 + k * std::f64::consts::PI <= a.hi;
        match a.tan() {
            Ok(t) => {
                prop_assert!(!crosses);
                prop_assert!(t.contains_tol(x.tan(), 1e-9 * (1.0 + x.tan().abs())));
            }
            Err(Error::PoleCrossed { .. }) => prop_assert!(crosses),
            Err(e) => prop_assert!(false, "unexpected {e}"),
        }
    }

    #[test]
    fn hull_and_intersection(a in iv(), b in iv()) {
        let h = a.hull(&b);
        prop_assert!(h.lo <= a.lo && h.lo <= b.lo && h.hi >= a.hi && h.hi >= b.hi);
        match a.intersect(&b) {
            Some(i) => prop_assert!(a.contains(i.lo) && b.contains(i.hi)),
            None => prop_assert!(a.hi < b.lo || b.hi < a.lo),
        }
    }

    #[test]
    fn box_lerp_stays_inside(dims in prop::collection::vec(iv(), 1..5), seed in any::<u64>()) {
        let b = IntervalBox::new(dims);
        let t: Vec<f64> = (0..b.dim()).map(|i| ((seed >> (i * 8)) & 0xff) as f64 / 255.0).collect();
        prop_assert!(b.contains_tol(&b.lerp(&t), 1e-12));
        prop_assert!(b.is_subset_of(&b.hull(&b)));
    }
}

#[test]
fn sin_extrema_are_included() {
    let s = Interval::new(0.0, 3.0).sin();
    assert_eq!(s.hi, 1.0);
    let c = Interval::new(3.0, 3.5).cos();
    assert_eq!(c.lo, -1.0);
}

use std::f64::consts::PI;

use bubble_cluster::cluster::shapes;
use bubble_cluster::geom::{hausdorff, Curve, Point};
use bubble_cluster::io::{cluster_from_str, cluster_to_string};
use proptest::prelude::*;

fn point() -> impl Strategy<Value = Point> {
    (-5.0..5.0f64, -5.0..5.0f64).prop_map(|(x, y)| Point::new(x, y))
}

fn polyline() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec(point(), 3..12)
}

proptest! {
    #[test]
    fn regular_polygon_resamples_to_itself(c in point(), r in 0.1..3.0f64, n in 3usize..40, phase in 0.0..PI) {
        let curve = Curve::new(
            (0..n).map(|i| {
                let t = phase + 2.0 * PI * i as f64 / n as f64;
                c + Point::new(r * t.cos(), r * t.sin())
            }).collect(),
            true,
        ).unwrap();
        let again = curve.resample(n).unwrap();
        for (a, b) in curve.points().iter().zip(again.points()) {
            prop_assert!((a - b).norm() <= 1e-9 * r.max(1.0));
        }
    }

    #[test]
    fn resampled_points_lie_on_the_curve(pts in polyline(), m in 2usize..60) {
        let Ok(curve) = Curve::open(pts) else { return Ok(()) };
        prop_assume!(curve.length() > 1e-3);
        let s = curve.resample(m).unwrap();
        prop_assert_eq!(s.len(), m);
        prop_assert_eq!(s.point(0), curve.point(0));
        prop_assert_eq!(s.point(m - 1), curve.point(curve.len() - 1));
        for p in s.points() {
            prop_assert!(curve.distance_to(p) <= 1e-9);
        }
    }

    #[test]
    fn hausdorff_is_symmetric(a in polyline(), b in polyline()) {
        prop_assert_eq!(hausdorff(&a, &b, None), hausdorff(&b, &a, None));
        prop_assert_eq!(hausdorff(&a, &a, None), 0.0);
    }

    #[test]
    fn json_round_trip_is_exact(r1 in 0.3..2.0f64, ratio in 0.3..1.0f64, shift in point(), n in 8usize..64) {
        let c = shapes::double_bubble(r1, r1 * ratio, n).translated(shift);
        let text = cluster_to_string(&c);
        let back = cluster_from_str(&text).unwrap();
        prop_assert_eq!(back.n_chambers, c.n_chambers);
        for (a, b) in c.interfaces.iter().zip(&back.interfaces) {
            prop_assert_eq!(a.chambers, b.chambers);
            prop_assert_eq!(a.curve.points(), b.curve.points());
        }
        prop_assert_eq!(&back.triple_points, &c.triple_points);
        prop_assert_eq!(cluster_to_string(&back), text);
    }

    #[test]
    fn perimeter_and_areas_are_translation_invariant(r1 in 0.3..2.0f64, ratio in 0.3..1.0f64, shift in point()) {
        let c = shapes::double_bubble(r1, r1 * ratio, 48);
        let t = c.translated(shift);
        let scale = r1.max(1.0);
        prop_assert!((c.perimeter() - t.perimeter()).abs() <= 1e-12 * scale * 20.0);
        for (a, b) in c.areas().unwrap().iter().zip(t.areas().unwrap()) {
            prop_assert!((a - b).abs() <= 1e-11 * scale * scale * 10.0);
        }
    }
}

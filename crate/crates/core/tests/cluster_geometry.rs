use std::f64::consts::PI;

use bubble_cluster::cluster::{plateau_check, shapes, Interface, PlanarCluster, TriplePoint, Violation};
use bubble_cluster::geom::{polyline_length, Curve, Disk, End, Point};

/// Equal-radius double bubble: each chamber is a disk of radius `r` minus
/// the cap cut off by the chord at distance `r/2` from its centre.
fn equal_lens_oracle(r: f64) -> (f64, f64) {
    let theta = 2.0 * PI / 3.0;
    let cap = 0.5 * r * r * (theta - theta.sin());
    let area = PI * r * r - cap;
    let perimeter = 2.0 * r * (2.0 * PI - theta) + 2.0 * r * (PI / 3.0).sin();
    (area, perimeter)
}

#[test]
fn double_bubble_areas_and_perimeter_match_arc_geometry() {
    for r in [0.5, 1.0, 2.0] {
        let c = shapes::double_bubble(r, r, 512);
        assert!(c.validate().is_valid());
        let (area, perimeter) = equal_lens_oracle(r);
        for a in c.areas().unwrap() {
            assert!((a - area).abs() / area < 1e-4, "area {a} vs {area}");
        }
        assert!((c.perimeter() - perimeter).abs() / perimeter < 1e-4);
    }
}

#[test]
fn perimeter_is_half_the_sum_of_cycle_lengths() {
    for c in [shapes::two_squares(), shapes::double_bubble(1.0, 0.6, 128), shapes::disk(Point::zeros(), 1.0, 64)] {
        let total: f64 =
            c.chamber_cycles().iter().map(|(_, cyc)| polyline_length(&c.cycle_polygon(cyc), true)).sum();
        assert!((0.5 * total - c.perimeter()).abs() <= 1e-12 * c.perimeter(), "{} vs {}", 0.5 * total, c.perimeter());
    }
}

fn ray(angle: f64, from: Point, n: usize) -> Curve {
    Curve::segment(from, Point::new(angle.cos(), angle.sin()), n).unwrap()
}

/// Unit disk window cut into quadrants `1..=4` (counter-clockwise from
/// the positive x-axis) by the two diameters.
fn quadrants(split: f64) -> PlanarCluster {
    let o = Point::zeros();
    let (a, b) = (Point::new(split, split), Point::new(-split, -split));
    let (ca, cb) = if split > 0.0 { (a, b) } else { (o, o) };
    let interfaces = vec![
        Interface { id: 0, chambers: (1, 4), curve: ray(0.0, ca, 16) },
        Interface { id: 1, chambers: (1, 2), curve: ray(PI / 2.0, ca, 16).reversed() },
        Interface { id: 2, chambers: (2, 3), curve: ray(PI, cb, 16).reversed() },
        Interface { id: 3, chambers: (3, 4), curve: ray(1.5 * PI, cb, 16).reversed() },
    ];
    let c = if split > 0.0 {
        let mut interfaces = interfaces;
        interfaces.push(Interface { id: 4, chambers: (2, 4), curve: Curve::segment(b, a, 4).unwrap() });
        PlanarCluster::new(
            4,
            interfaces,
            vec![
                TriplePoint { position: a, incident: vec![(0, End::Start), (1, End::End), (4, End::End)] },
                TriplePoint { position: b, incident: vec![(2, End::End), (3, End::End), (4, End::Start)] },
            ],
        )
    } else {
        PlanarCluster::new(
            4,
            interfaces,
            vec![TriplePoint {
                position: o,
                incident: vec![(0, End::Start), (1, End::End), (2, End::End), (3, End::End)],
            }],
        )
    };
    c.with_window(Disk::new(o, 1.0))
}

#[test]
fn four_valent_crossing_is_rejected() {
    let c = quadrants(0.0);
    let d = c.validate();
    assert!(d.violations.iter().any(|v| matches!(v, Violation::Incidence { count: 4, .. })), "{d}");
}

#[test]
fn split_crossing_is_flagged_at_thirty_degrees() {
    let c = quadrants(1e-4);
    let d = c.validate();
    assert!(d.is_valid(), "{d}");
    let rep = plateau_check(&c, 1e3, 0.5, 0.01);
    assert!(!rep.angles_ok());
    assert!((rep.max_angle_deviation() - 30.0).abs() < 0.1, "{}", rep.max_angle_deviation());
}

#[test]
fn y2_is_valid_with_one_triple_point() {
    let c = shapes::steiner_y2(1.0, 32, 0.7);
    assert!(c.validate().is_valid());
    assert_eq!(c.triple_points.len(), 1);
    assert!(c.interfaces.iter().all(|i| !i.curve.is_closed()));
    assert!(plateau_check(&c, 1e3, 0.5, 0.01).max_angle_deviation() < 1e-9);
}

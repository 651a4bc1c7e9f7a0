//! Circular-arc parametrization of a cluster network.
//!
//! An open interface is the circular arc through its two end nodes with a
//! signed bulge `b = sagitta / chord`, positive when the arc bulges to the
//! right of the chord (towards the interface normal). The arc subtends
//! `θ = 4 atan(2b)`. Closed interfaces are full circles.

use std::f64::consts::PI;

use crate::cluster::{Interface, PlanarCluster, TriplePoint};
use crate::geom::{cross, perp, shoelace, Curve, End, GeomError, Point};

/// Subtended angle of a bulge.
pub fn bulge_angle(b: f64) -> f64 {
    4.0 * (2.0 * b).atan()
}

fn dangle_dbulge(b: f64) -> f64 {
    8.0 / (1.0 + 4.0 * b * b)
}

/// Arc length over chord length, `(θ/2) / sin(θ/2)`, and its θ-derivative.
fn length_factor(th: f64) -> (f64, f64) {
    if th.abs() < 1e-3 {
        let t2 = th * th;
        (1.0 + t2 / 24.0 + 7.0 * t2 * t2 / 5760.0, th / 12.0 + 7.0 * th * t2 / 1440.0)
    } else {
        let h = 0.5 * th;
        let (s, c) = h.sin_cos();
        (h / s, (s - h * c) / (2.0 * s * s))
    }
}

/// Segment area over chord squared, `(θ - sin θ) / (4 (1 - cos θ))`, and
/// its θ-derivative.
fn area_factor(th: f64) -> (f64, f64) {
    if th.abs() < 1e-3 {
        let t2 = th * th;
        (th / 12.0 + th * t2 / 360.0, 1.0 / 12.0 + t2 / 120.0)
    } else {
        let (s, c) = th.sin_cos();
        let omc = 1.0 - c;
        let v = (th - s) / (4.0 * omc);
        let dv = (omc * omc - (th - s) * s) / (4.0 * omc * omc);
        (v, dv)
    }
}

/// Length and signed shoelace term of an arc from `p` to `q`, with
/// gradients with respect to `p`, `q` and the bulge.
#[derive(Debug, Clone, Copy)]
pub struct ArcTerms {
    pub length: f64,
    pub dlength: (Point, Point, f64),
    pub shoelace: f64,
    pub dshoelace: (Point, Point, f64),
}

pub fn arc_terms(p: Point, q: Point, b: f64) -> ArcTerms {
    let d = q - p;
    let c = d.norm();
    let th = bulge_angle(b);
    let dth = dangle_dbulge(b);
    let (g, dg) = length_factor(th);
    let (h, dh) = area_factor(th);
    let u = if c > 0.0 { d / c } else { Point::zeros() };
    let length = c * g;
    let dlength = (-u * g, u * g, c * dg * dth);
    let seg = c * c * h;
    let shoelace = 0.5 * cross(p, q) + seg;
    let dp = Point::new(0.5 * q.y, -0.5 * q.x) - d * (2.0 * h);
    let dq = Point::new(-0.5 * p.y, 0.5 * p.x) + d * (2.0 * h);
    let dshoelace = (dp, dq, c * c * dh * dth);
    ArcTerms { length, dlength, shoelace, dshoelace }
}

/// `m >= 2` samples of the arc at uniform arc length, endpoints exact.
pub fn sample_arc(p: Point, q: Point, b: f64, m: usize) -> Vec<Point> {
    let m = m.max(2);
    let d = q - p;
    let c = d.norm();
    let th = bulge_angle(b);
    let mut out = Vec::with_capacity(m);
    out.push(p);
    if c == 0.0 {
        out.push(q);
        return out;
    }
    let t = d / c;
    let n = perp(t);
    let mid = (p + q) * 0.5;
    let half = 0.5 * th;
    for i in 1..m - 1 {
        let u = i as f64 / (m - 1) as f64;
        if th.abs() < 1e-9 {
            out.push(p + d * u);
            continue;
        }
        let phi = th * (u - 0.5);
        let sh = half.sin();
        // R sin φ and R (cos φ - cos θ/2) with R = c / (2 sin θ/2)
        let along = 0.5 * c * phi.sin() / sh;
        let across = c * ((half + phi) * 0.5).sin() * ((half - phi) * 0.5).sin() / sh;
        out.push(mid + t * along + n * across);
    }
    out.push(q);
    out
}

/// Signed bulge of a sampled open curve, read from the sagitta at half
/// arc length. Exact for circular arcs.
pub fn measure_bulge(c: &Curve) -> f64 {
    let pts = c.points();
    let (p, q) = (pts[0], pts[pts.len() - 1]);
    let chord = q - p;
    let cl = chord.norm();
    if cl == 0.0 {
        return f64::INFINITY;
    }
    let s = c.arclengths();
    let half = 0.5 * s[s.len() - 1];
    let i = s.partition_point(|v| *v < half).clamp(1, s.len() - 1);
    let t = (half - s[i - 1]) / (s[i] - s[i - 1]);
    let mid = pts[i - 1] + (pts[i] - pts[i - 1]) * t;
    let n = perp(chord / cl);
    (mid - (p + q) * 0.5).dot(&n) / cl
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcVar {
    /// Index into the cluster's interface list.
    pub interface: usize,
    pub start: usize,
    pub end: usize,
    pub bulge: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleVar {
    pub interface: usize,
    pub center: Point,
    pub radius: f64,
    pub ccw: bool,
}

/// Optimization variables of a circular-arc network: triple-point
/// positions, one bulge per open interface, center and radius per closed
/// interface. The graph itself is fixed.
#[derive(Debug, Clone, PartialEq)]
pub struct ArcNetworkVars {
    pub nodes: Vec<Point>,
    pub arcs: Vec<ArcVar>,
    pub circles: Vec<CircleVar>,
    /// `(id, (h, k))` of every interface, in cluster order.
    pub labels: Vec<(usize, (usize, usize))>,
    pub n_chambers: usize,
}

impl ArcNetworkVars {
    /// Reads the arc ansatz off a sampled cluster: nodes from triple points,
    /// bulges from sagittas, circles from enclosed area and centroid.
    pub fn from_cluster(c: &PlanarCluster) -> Result<ArcNetworkVars, GeomError> {
        let nodes: Vec<Point> = c.triple_points.iter().map(|t| t.position).collect();
        let node_of = |id: usize, end: End| -> Option<usize> {
            c.triple_points.iter().position(|t| t.incident.contains(&(id, end)))
        };
        let mut arcs = Vec::new();
        let mut circles = Vec::new();
        for (idx, iface) in c.interfaces.iter().enumerate() {
            if iface.curve.is_closed() {
                let pts = iface.curve.points();
                let a = shoelace(pts, true);
                let centroid = polygon_centroid(pts);
                circles.push(CircleVar {
                    interface: idx,
                    center: centroid,
                    radius: (a.abs() / PI).sqrt(),
                    ccw: a > 0.0,
                });
            } else {
                let start = node_of(iface.id, End::Start).ok_or(GeomError::NoBoundary)?;
                let end = node_of(iface.id, End::End).ok_or(GeomError::NoBoundary)?;
                arcs.push(ArcVar { interface: idx, start, end, bulge: measure_bulge(&iface.curve) });
            }
        }
        Ok(ArcNetworkVars {
            nodes,
            arcs,
            circles,
            labels: c.interfaces.iter().map(|i| (i.id, i.chambers)).collect(),
            n_chambers: c.n_chambers,
        })
    }

    pub fn dim(&self) -> usize {
        2 * self.nodes.len() + self.arcs.len() + 3 * self.circles.len()
    }

    pub fn to_vec(&self) -> Vec<f64> {
        let mut x = Vec::with_capacity(self.dim());
        for p in &self.nodes {
            x.extend_from_slice(&[p.x, p.y]);
        }
        x.extend(self.arcs.iter().map(|a| a.bulge));
        for c in &self.circles {
            x.extend_from_slice(&[c.center.x, c.center.y, c.radius]);
        }
        x
    }

    pub fn set_from(&mut self, x: &[f64]) {
        let nn = self.nodes.len();
        for (j, p) in self.nodes.iter_mut().enumerate() {
            *p = Point::new(x[2 * j], x[2 * j + 1]);
        }
        for (i, a) in self.arcs.iter_mut().enumerate() {
            a.bulge = x[2 * nn + i];
        }
        let off = 2 * nn + self.arcs.len();
        for (i, c) in self.circles.iter_mut().enumerate() {
            c.center = Point::new(x[off + 3 * i], x[off + 3 * i + 1]);
            c.radius = x[off + 3 * i + 2];
        }
    }

    pub fn arc_of_interface(&self, interface: usize) -> Option<&ArcVar> {
        self.arcs.iter().find(|a| a.interface == interface)
    }

    /// Exact arc length of every interface, in cluster order.
    pub fn interface_lengths(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.labels.len()];
        for a in &self.arcs {
            out[a.interface] = arc_terms(self.nodes[a.start], self.nodes[a.end], a.bulge).length;
        }
        for c in &self.circles {
            out[c.interface] = 2.0 * PI * c.radius.abs();
        }
        out
    }

    pub fn perimeter(&self) -> f64 {
        self.interface_lengths().iter().sum()
    }

    /// Exact chamber areas `1..=N` of the arc network.
    pub fn areas(&self) -> Vec<f64> {
        let mut areas = vec![0.0; self.n_chambers + 1];
        let mut add = |interface: usize, s: f64| {
            let (h, k) = self.labels[interface].1;
            areas[h] += s;
            areas[k] -= s;
        };
        for a in &self.arcs {
            add(a.interface, arc_terms(self.nodes[a.start], self.nodes[a.end], a.bulge).shoelace);
        }
        for c in &self.circles {
            let sign = if c.ccw { 1.0 } else { -1.0 };
            add(c.interface, sign * PI * c.radius * c.radius);
        }
        areas[1..].to_vec()
    }

    /// Samples each interface, distributing about `samples` points over the
    /// network in proportion to length (at least 8 per interface).
    pub fn sampled_curves(&self, samples: usize) -> Result<Vec<Curve>, GeomError> {
        let lengths = self.interface_lengths();
        let total: f64 = lengths.iter().sum();
        let mut curves: Vec<Option<Curve>> = vec![None; self.labels.len()];
        let count = |l: f64| ((samples as f64 * l / total).round() as usize).max(8);
        for a in &self.arcs {
            let m = count(lengths[a.interface]) + 1;
            let pts = sample_arc(self.nodes[a.start], self.nodes[a.end], a.bulge, m);
            curves[a.interface] = Some(Curve::open(pts)?);
        }
        for c in &self.circles {
            let m = count(lengths[c.interface]);
            curves[c.interface] = Some(Curve::circle(c.center, c.radius.abs(), m, c.ccw)?);
        }
        Ok(curves.into_iter().map(|c| c.expect("every interface is an arc or a circle")).collect())
    }

    /// Rebuilds a sampled cluster with the topology of `template`.
    pub fn to_cluster(&self, template: &PlanarCluster, samples: usize) -> Result<PlanarCluster, GeomError> {
        let curves = self.sampled_curves(samples)?;
        let interfaces = template
            .interfaces
            .iter()
            .zip(curves)
            .map(|(i, curve)| Interface { id: i.id, chambers: i.chambers, curve })
            .collect();
        let triple_points = template
            .triple_points
            .iter()
            .zip(&self.nodes)
            .map(|(t, p)| TriplePoint { position: *p, incident: t.incident.clone() })
            .collect();
        Ok(PlanarCluster { n_chambers: template.n_chambers, interfaces, triple_points, window: template.window })
    }
}

fn polygon_centroid(pts: &[Point]) -> Point {
    let n = pts.len();
    let mut a = 0.0;
    let mut c = Point::zeros();
    for i in 0..n {
        let (p, q) = (pts[i], pts[(i + 1) % n]);
        let w = cross(p, q);
        a += w;
        c += (p + q) * w;
    }
    if a.abs() < f64::MIN_POSITIVE {
        pts.iter().sum::<Point>() / n as f64
    } else {
        c / (3.0 * a)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn fd<F: Fn(f64) -> f64>(f: F, x: f64) -> f64 {
        let h = 1e-6;
        (f(x + h) - f(x - h)) / (2.0 * h)
    }

    #[test]
    fn factors_are_continuous_across_series_switch() {
        for th in [9.99e-4, 1.001e-3, -9.99e-4, -1.001e-3] {
            let (g, dg) = length_factor(th);
            let exact_g = (0.5 * th) / (0.5 * th).sin();
            assert_abs_diff_eq!(g, exact_g, epsilon = 1e-14);
            assert_abs_diff_eq!(dg, fd(|t| (0.5 * t) / (0.5 * t).sin(), th), epsilon = 1e-8);
            let (h, dh) = area_factor(th);
            assert_abs_diff_eq!(h, th / 12.0, epsilon = 1e-10);
            assert_abs_diff_eq!(dh, 1.0 / 12.0, epsilon = 1e-7);
        }
    }

    #[test]
    fn arc_gradients_match_finite_differences() {
        let p = Point::new(0.3, -0.2);
        let q = Point::new(1.4, 0.9);
        for b in [-0.9, -0.2, 0.0, 1e-5, 0.4, 1.7] {
            let t = arc_terms(p, q, b);
            assert_abs_diff_eq!(t.dlength.2, fd(|x| arc_terms(p, q, x).length, b), epsilon = 1e-6);
            assert_abs_diff_eq!(t.dshoelace.2, fd(|x| arc_terms(p, q, x).shoelace, b), epsilon = 1e-6);
            let dx = fd(|x| arc_terms(Point::new(x, p.y), q, b).shoelace, p.x);
            assert_abs_diff_eq!(t.dshoelace.0.x, dx, epsilon = 1e-6);
            let dy = fd(|y| arc_terms(p, Point::new(q.x, y), b).length, q.y);
            assert_abs_diff_eq!(t.dlength.1.y, dy, epsilon = 1e-6);
        }
    }

    #[test]
    fn sampled_arc_agrees_with_closed_forms() {
        let p = Point::new(-1.0, 0.0);
        let q = Point::new(1.0, 0.0);
        for b in [-0.8, -0.1, 0.05, 0.5, 2.0] {
            let pts = sample_arc(p, q, b, 40001);
            let c = Curve::open(pts).unwrap();
            let t = arc_terms(p, q, b);
            assert!((c.length() - t.length).abs() < 1e-6, "b={b}");
            assert!((shoelace(c.points(), false) - t.shoelace).abs() < 1e-6, "b={b} {} {}", shoelace(c.points(), false), t.shoelace);
            assert_abs_diff_eq!(measure_bulge(&c), b, epsilon = 1e-9);
            // positive bulge lies on the normal side
            let mid = c.point(20000);
            assert!(b.signum() * mid.dot(&perp(q - p)) > 0.0);
        }
    }
}

//! Discrete planar curves with boundary.
//!
//! A [`Curve`] is an ordered list of samples, either open (two boundary
//! points) or closed (implicit wrap from the last sample to the first).
//! Frames follow the right-hand perp convention: the unit normal of a
//! tangent `(v1, v2)` is `(v2, -v1)`.

use nalgebra::Vector2;
use thiserror::Error;

/// A point (or vector) in the plane.
pub type Point = Vector2<f64>;

/// Relative tolerance used for sample coincidence, scaled by curve length.
pub const TOL_X_REL: f64 = 1e-9;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("curve needs at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("degenerate curve: length {0:e} is below tolerance")]
    Degenerate(f64),
    #[error("sample index {index} out of range for curve with {len} samples")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("closed curve has no boundary")]
    NoBoundary,
    #[error("trimming by {rho} leaves nothing of a curve of length {length}")]
    EmptyTrim { rho: f64, length: f64 },
    #[error("non-finite coordinate at sample {0}")]
    NonFinite(usize),
}

/// `(v1, v2) -> (v2, -v1)`.
#[inline]
pub fn perp(v: Point) -> Point {
    Point::new(v.y, -v.x)
}

#[inline]
pub fn cross(a: Point, b: Point) -> f64 {
    a.x * b.y - a.y * b.x
}

/// Which boundary point of an open curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum End {
    Start,
    End,
}

impl End {
    pub fn other(self) -> End {
        match self {
            End::Start => End::End,
            End::End => End::Start,
        }
    }
}

/// Tangent, normal and signed curvature at a sample.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Frame {
    pub tangent: Point,
    pub normal: Point,
    /// Signed curvature, positive for counter-clockwise turning.
    pub curvature: f64,
}

/// Closed disk, used for windows and density balls.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Disk {
    pub center: Point,
    pub radius: f64,
}

impl Disk {
    pub fn new(center: Point, radius: f64) -> Self {
        Disk { center, radius }
    }

    pub fn contains(&self, p: &Point) -> bool {
        (p - self.center).norm() <= self.radius
    }
}

/// Nearest point on a polyline.
#[derive(Debug, Clone, Copy)]
pub struct Projection {
    /// Segment index `i`, joining samples `i` and `i + 1` (mod len if closed).
    pub segment: usize,
    /// Parameter in `[0, 1]` along the segment.
    pub t: f64,
    pub point: Point,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Curve {
    points: Vec<Point>,
    closed: bool,
    resolution: f64,
}

impl Curve {
    /// Builds a curve, dropping consecutive samples that coincide within
    /// `TOL_X_REL * length`.
    pub fn new(points: Vec<Point>, closed: bool) -> Result<Curve, GeomError> {
        if let Some(i) = points.iter().position(|p| !p.x.is_finite() || !p.y.is_finite()) {
            return Err(GeomError::NonFinite(i));
        }
        let raw_len = polyline_length(&points, closed);
        let tol = TOL_X_REL * raw_len.max(f64::MIN_POSITIVE);
        let mut kept: Vec<Point> = Vec::with_capacity(points.len());
        for p in points {
            if kept.last().map_or(true, |q| (p - q).norm() > tol) {
                kept.push(p);
            }
        }
        if closed && kept.len() > 1 && (kept[0] - kept[kept.len() - 1]).norm() <= tol {
            kept.pop();
        }
        let needed = if closed { 3 } else { 2 };
        if kept.len() < needed {
            return Err(GeomError::TooFewSamples { needed, got: kept.len() });
        }
        let length = polyline_length(&kept, closed);
        if length <= f64::MIN_POSITIVE {
            return Err(GeomError::Degenerate(length));
        }
        let segments = if closed { kept.len() } else { kept.len() - 1 };
        let resolution = length / segments as f64;
        Ok(Curve { points: kept, closed, resolution })
    }

    pub fn open(points: Vec<Point>) -> Result<Curve, GeomError> {
        Curve::new(points, false)
    }

    pub fn closed(points: Vec<Point>) -> Result<Curve, GeomError> {
        Curve::new(points, true)
    }

    /// Straight segment sampled with `m` points.
    pub fn segment(a: Point, b: Point, m: usize) -> Result<Curve, GeomError> {
        let m = m.max(2);
        let pts = (0..m).map(|i| a + (b - a) * (i as f64 / (m - 1) as f64)).collect();
        Curve::open(pts)
    }

    /// Circle of radius `r`, `m` samples, counter-clockwise when `ccw`.
    pub fn circle(center: Point, r: f64, m: usize, ccw: bool) -> Result<Curve, GeomError> {
        let sign = if ccw { 1.0 } else { -1.0 };
        let pts = (0..m)
            .map(|i| {
                let th = sign * std::f64::consts::TAU * i as f64 / m as f64;
                center + Point::new(r * th.cos(), r * th.sin())
            })
            .collect();
        Curve::closed(pts)
    }

    /// Circular arc from angle `a0` to `a1` (radians, either direction).
    pub fn arc(center: Point, r: f64, a0: f64, a1: f64, m: usize) -> Result<Curve, GeomError> {
        let m = m.max(2);
        let pts = (0..m)
            .map(|i| {
                let th = a0 + (a1 - a0) * i as f64 / (m - 1) as f64;
                center + Point::new(r * th.cos(), r * th.sin())
            })
            .collect();
        Curve::open(pts)
    }

    pub fn points(&self) -> &[Point] {
        &self.points
    }

    pub fn into_points(self) -> Vec<Point> {
        self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn is_closed(&self) -> bool {
        self.closed
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn point(&self, i: usize) -> Point {
        self.points[i]
    }

    pub fn segment_count(&self) -> usize {
        if self.closed {
            self.points.len()
        } else {
            self.points.len() - 1
        }
    }

    pub fn length(&self) -> f64 {
        polyline_length(&self.points, self.closed)
    }

    /// Absolute coincidence tolerance for this curve.
    pub fn tol_x(&self) -> f64 {
        TOL_X_REL * self.length()
    }

    /// Boundary point; `None` for closed curves.
    pub fn endpoint(&self, end: End) -> Option<Point> {
        if self.closed {
            return None;
        }
        Some(match end {
            End::Start => self.points[0],
            End::End => self.points[self.points.len() - 1],
        })
    }

    pub fn endpoint_index(&self, end: End) -> usize {
        match end {
            End::Start => 0,
            End::End => self.points.len() - 1,
        }
    }

    /// Cumulative arc length at each sample; for closed curves the total
    /// length (including the wrap segment) is `self.length()`.
    pub fn arclengths(&self) -> Vec<f64> {
        let mut s = Vec::with_capacity(self.points.len());
        let mut acc = 0.0;
        s.push(0.0);
        for w in self.points.windows(2) {
            acc += (w[1] - w[0]).norm();
            s.push(acc);
        }
        s
    }

    /// Same samples traversed backwards.
    pub fn reversed(&self) -> Curve {
        let mut points = self.points.clone();
        if self.closed {
            points[1..].reverse();
        } else {
            points.reverse();
        }
        Curve { points, closed: self.closed, resolution: self.resolution }
    }

    pub fn translated(&self, d: Point) -> Curve {
        Curve {
            points: self.points.iter().map(|p| p + d).collect(),
            closed: self.closed,
            resolution: self.resolution,
        }
    }

    pub fn map_points(&self, f: impl Fn(&Point) -> Point) -> Result<Curve, GeomError> {
        Curve::new(self.points.iter().map(f).collect(), self.closed)
    }

    /// `m` samples at uniform arc length. Open curves keep both endpoints
    /// exactly; closed curves keep the first sample.
    pub fn resample(&self, m: usize) -> Result<Curve, GeomError> {
        let needed = if self.closed { 3 } else { 2 };
        if m < needed {
            return Err(GeomError::TooFewSamples { needed, got: m });
        }
        let total = self.length();
        if total <= TOL_X_REL {
            return Err(GeomError::Degenerate(total));
        }
        let mut pts = self.points.clone();
        if self.closed {
            pts.push(self.points[0]);
        }
        let mut cum = Vec::with_capacity(pts.len());
        let mut acc = 0.0;
        cum.push(0.0);
        for w in pts.windows(2) {
            acc += (w[1] - w[0]).norm();
            cum.push(acc);
        }
        let spacing = if self.closed { total / m as f64 } else { total / (m - 1) as f64 };
        let mut out = Vec::with_capacity(m);
        let mut seg = 0;
        for i in 0..m {
            if !self.closed && i == m - 1 {
                out.push(pts[pts.len() - 1]);
                break;
            }
            let s = spacing * i as f64;
            while seg + 2 < cum.len() && cum[seg + 1] < s {
                seg += 1;
            }
            let l = cum[seg + 1] - cum[seg];
            let t = if l > 0.0 { ((s - cum[seg]) / l).clamp(0.0, 1.0) } else { 0.0 };
            out.push(pts[seg] + (pts[seg + 1] - pts[seg]) * t);
        }
        let mut c = Curve::new(out, self.closed)?;
        c.resolution = spacing;
        Ok(c)
    }

    /// Resample to roughly the given spacing.
    pub fn resample_spacing(&self, spacing: f64) -> Result<Curve, GeomError> {
        let n = (self.length() / spacing).round() as usize;
        let m = if self.closed { n.max(3) } else { (n + 1).max(2) };
        self.resample(m)
    }

    fn check_index(&self, i: usize) -> Result<(), GeomError> {
        if i >= self.points.len() {
            Err(GeomError::IndexOutOfRange { index: i, len: self.points.len() })
        } else {
            Ok(())
        }
    }

    /// Frame at sample `i`: centered-difference tangent, perp normal and
    /// three-point circumcircle curvature. Endpoints of open curves use the
    /// circle through the three samples nearest that end.
    pub fn frame(&self, i: usize) -> Result<Frame, GeomError> {
        self.check_index(i)?;
        let n = self.points.len();
        let p = &self.points;
        let (tangent, curvature) = if self.closed {
            let a = p[(i + n - 1) % n];
            let b = p[i];
            let c = p[(i + 1) % n];
            ((c - a).normalize(), circumcurvature(a, b, c))
        } else if n == 2 {
            ((p[1] - p[0]).normalize(), 0.0)
        } else if i == 0 {
            let k = circumcurvature(p[0], p[1], p[2]);
            (end_tangent(p[0], p[1], p[2], k), k)
        } else if i == n - 1 {
            let k = circumcurvature(p[n - 3], p[n - 2], p[n - 1]);
            // Walk the end triple backwards and flip the result.
            let t = -end_tangent(p[n - 1], p[n - 2], p[n - 3], -k);
            (t, k)
        } else {
            ((p[i + 1] - p[i - 1]).normalize(), circumcurvature(p[i - 1], p[i], p[i + 1]))
        };
        Ok(Frame { tangent, normal: perp(tangent), curvature })
    }

    pub fn frames(&self) -> Vec<Frame> {
        (0..self.points.len()).map(|i| self.frame(i).expect("index in range")).collect()
    }

    pub fn curvatures(&self) -> Vec<f64> {
        self.frames().iter().map(|f| f.curvature).collect()
    }

    /// Outer unit co-normal at a boundary point: `-tangent` at the start,
    /// `+tangent` at the end.
    pub fn co_normal(&self, end: End) -> Result<Point, GeomError> {
        if self.closed {
            return Err(GeomError::NoBoundary);
        }
        let idx = self.endpoint_index(end);
        let t = self.frame(idx)?.tangent;
        Ok(match end {
            End::Start => -t,
            End::End => t,
        })
    }

    /// Arc length between two samples, the shorter way round when closed.
    pub fn geodesic_dist(&self, i: usize, j: usize) -> Result<f64, GeomError> {
        self.check_index(i)?;
        self.check_index(j)?;
        let s = self.arclengths();
        let d = (s[i] - s[j]).abs();
        Ok(if self.closed { d.min(self.length() - d) } else { d })
    }

    /// Arc length from sample `i` to the given boundary point.
    pub fn geodesic_to_end(&self, i: usize, end: End) -> Result<f64, GeomError> {
        if self.closed {
            return Err(GeomError::NoBoundary);
        }
        self.geodesic_dist(i, self.endpoint_index(end))
    }

    /// Index range of the samples at Euclidean distance `>= rho` from both
    /// boundary points. Closed curves keep everything.
    pub fn trim_range(&self, rho: f64) -> Result<std::ops::Range<usize>, GeomError> {
        let n = self.points.len();
        if self.closed {
            return Ok(0..n);
        }
        let (a, b) = (self.points[0], self.points[n - 1]);
        let keep = |p: &Point| (p - a).norm() >= rho && (p - b).norm() >= rho;
        let first = self.points.iter().position(keep);
        let last = self.points.iter().rposition(keep);
        match (first, last) {
            (Some(f), Some(l)) if f <= l => Ok(f..l + 1),
            _ => Err(GeomError::EmptyTrim { rho, length: self.length() }),
        }
    }

    /// `[S]_rho`: the curve with the `rho`-neighbourhood of its boundary
    /// removed. Cut points on the `rho`-circles are inserted exactly.
    pub fn trim(&self, rho: f64) -> Result<Curve, GeomError> {
        if self.closed {
            return Ok(self.clone());
        }
        let range = self.trim_range(rho)?;
        let n = self.points.len();
        let (a, b) = (self.points[0], self.points[n - 1]);
        let gap = |p: &Point| ((p - a).norm() - rho).min((p - b).norm() - rho);
        let cut = |inside: Point, outside: Point| {
            // bisection on the segment for gap == 0
            let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
            for _ in 0..80 {
                let mid = 0.5 * (lo + hi);
                if gap(&(inside + (outside - inside) * mid)) >= 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            inside + (outside - inside) * lo
        };
        let mut pts = Vec::with_capacity(range.len() + 2);
        if range.start > 0 {
            pts.push(cut(self.points[range.start], self.points[range.start - 1]));
        }
        pts.extend_from_slice(&self.points[range.clone()]);
        if range.end < n {
            pts.push(cut(self.points[range.end - 1], self.points[range.end]));
        }
        Curve::open(pts).map_err(|_| GeomError::EmptyTrim { rho, length: self.length() })
    }

    /// Nearest point on the polyline.
    pub fn project(&self, x: &Point) -> Projection {
        let n = self.points.len();
        let mut best = Projection { segment: 0, t: 0.0, point: self.points[0], distance: f64::INFINITY };
        for i in 0..self.segment_count() {
            let a = self.points[i];
            let b = self.points[(i + 1) % n];
            let ab = b - a;
            let l2 = ab.norm_squared();
            let t = if l2 > 0.0 { ((x - a).dot(&ab) / l2).clamp(0.0, 1.0) } else { 0.0 };
            let q = a + ab * t;
            let d = (x - q).norm();
            if d < best.distance {
                best = Projection { segment: i, t, point: q, distance: d };
            }
        }
        best
    }

    pub fn distance_to(&self, x: &Point) -> f64 {
        self.project(x).distance
    }

    /// Continues an open curve past both ends along the osculating circle
    /// of each endpoint, adding `extra` length at each end.
    pub fn extend_ends(&self, extra: f64) -> Result<Curve, GeomError> {
        if self.closed || extra <= 0.0 {
            return Ok(self.clone());
        }
        let h = self.resolution;
        let steps = (extra / h).ceil().max(1.0) as usize;
        let ds = extra / steps as f64;
        let cont = |end: End| -> Result<Vec<Point>, GeomError> {
            let idx = self.endpoint_index(end);
            let f = self.frame(idx)?;
            let p = self.points[idx];
            // outward direction and curvature along the outward walk
            let (dir, k) = match end {
                End::End => (f.tangent, f.curvature),
                End::Start => (-f.tangent, -f.curvature),
            };
            let mut out = Vec::with_capacity(steps);
            for j in 1..=steps {
                let s = ds * j as f64;
                out.push(p + osculating_offset(dir, k, s));
            }
            Ok(out)
        };
        let mut head = cont(End::Start)?;
        head.reverse();
        let tail = cont(End::End)?;
        let mut pts = head;
        pts.extend_from_slice(&self.points);
        pts.extend(tail);
        Curve::open(pts)
    }

    /// Measured regularity data standing in for the bundled constant `L`.
    pub fn regularity(&self) -> Regularity {
        let n = self.points.len();
        let mut diameter: f64 = 0.0;
        let mut geodesic_ratio: f64 = 1.0;
        let s = self.arclengths();
        let total = self.length();
        for i in 0..n {
            for j in (i + 1)..n {
                let e = (self.points[i] - self.points[j]).norm();
                diameter = diameter.max(e);
                let mut g = s[j] - s[i];
                if self.closed {
                    g = g.min(total - g);
                }
                if e > 0.0 {
                    geodesic_ratio = geodesic_ratio.max(g / e);
                }
            }
        }
        let max_curvature = self.curvatures().iter().fold(0.0_f64, |m, k| m.max(k.abs()));
        Regularity { diameter, geodesic_ratio, max_curvature }
    }
}

/// Diameter, worst geodesic-to-chord ratio and curvature bound of a curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regularity {
    pub diameter: f64,
    pub geodesic_ratio: f64,
    pub max_curvature: f64,
}

impl Regularity {
    /// Single constant dominating all three measurements.
    pub fn bound(&self) -> f64 {
        self.diameter.max(self.geodesic_ratio).max(self.max_curvature)
    }
}

/// Displacement after walking arc length `s` from a point with unit
/// direction `dir` along a circle of signed curvature `k`.
pub fn osculating_offset(dir: Point, k: f64, s: f64) -> Point {
    let left = Point::new(-dir.y, dir.x);
    let th = k * s;
    if th.abs() < 1e-8 {
        dir * s + left * (0.5 * k * s * s)
    } else {
        dir * (th.sin() / k) + left * ((1.0 - th.cos()) / k)
    }
}

/// Signed curvature of the circle through three points (0 if collinear).
pub fn circumcurvature(a: Point, b: Point, c: Point) -> f64 {
    let ab = (b - a).norm();
    let bc = (c - b).norm();
    let ca = (a - c).norm();
    let denom = ab * bc * ca;
    if denom <= 0.0 {
        return 0.0;
    }
    let k = 2.0 * cross(b - a, c - b) / denom;
    if k.abs() * ab.max(bc) < 1e-14 {
        0.0
    } else {
        k
    }
}

/// Tangent at `a` of the circle through `a, b, c`, pointing towards `b`.
fn end_tangent(a: Point, b: Point, c: Point, k: f64) -> Point {
    let chord = b - a;
    if k == 0.0 {
        return chord.normalize();
    }
    let _ = c;
    // The tangent at `a` is the chord rotated back by half the subtended angle.
    let half = (0.5 * k * chord.norm()).clamp(-1.0, 1.0).asin();
    let (s, co) = (-half).sin_cos();
    let d = chord.normalize();
    Point::new(co * d.x - s * d.y, s * d.x + co * d.y)
}

/// Polyline length, including the closing segment when `closed`.
pub fn polyline_length(points: &[Point], closed: bool) -> f64 {
    let mut l: f64 = points.windows(2).map(|w| (w[1] - w[0]).norm()).sum();
    if closed && points.len() > 1 {
        l += (points[0] - points[points.len() - 1]).norm();
    }
    l
}

/// Shoelace term `1/2 sum cross(p_i, p_{i+1})`, wrapping when `closed`.
pub fn shoelace(points: &[Point], closed: bool) -> f64 {
    let mut a: f64 = points.windows(2).map(|w| cross(w[0], w[1])).sum();
    if closed && points.len() > 1 {
        a += cross(points[points.len() - 1], points[0]);
    }
    0.5 * a
}

/// Hausdorff distance between two sample sets, optionally restricted to a
/// window. Infinite when exactly one restricted set is empty.
pub fn hausdorff(a: &[Point], b: &[Point], window: Option<&Disk>) -> f64 {
    let restrict = |s: &[Point]| -> Vec<Point> {
        match window {
            Some(w) => s.iter().copied().filter(|p| w.contains(p)).collect(),
            None => s.to_vec(),
        }
    };
    let (a, b) = (restrict(a), restrict(b));
    match (a.is_empty(), b.is_empty()) {
        (true, true) => 0.0,
        (true, false) | (false, true) => f64::INFINITY,
        _ => directed_hausdorff(&a, &b).max(directed_hausdorff(&b, &a)),
    }
}

/// `sup_{p in a} min_{q in b} |p - q|`.
pub fn directed_hausdorff(a: &[Point], b: &[Point]) -> f64 {
    a.iter()
        .map(|p| b.iter().map(|q| (p - q).norm_squared()).fold(f64::INFINITY, f64::min))
        .fold(0.0_f64, f64::max)
        .sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    fn p(x: f64, y: f64) -> Point {
        Point::new(x, y)
    }

    #[test]
    fn resample_open_segment() {
        let c = Curve::open(vec![p(0.0, 0.0), p(1.0, 0.0)]).unwrap();
        let r = c.resample(3).unwrap();
        assert_eq!(r.points(), &[p(0.0, 0.0), p(0.5, 0.0), p(1.0, 0.0)]);
    }

    #[test]
    fn resample_closed_square() {
        let c = Curve::closed(vec![p(0.0, 0.0), p(1.0, 0.0), p(1.0, 1.0), p(0.0, 1.0)]).unwrap();
        let r = c.resample(8).unwrap();
        assert_eq!(r.len(), 8);
        let pts = r.points();
        for i in 0..8 {
            assert_abs_diff_eq!((pts[(i + 1) % 8] - pts[i]).norm(), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn resample_polygon_length() {
        let c = Curve::circle(p(0.0, 0.0), 1.0, 64, true).unwrap();
        let r = c.resample(128).unwrap();
        assert!((r.length() - c.length()).abs() <= 1e-3);
    }

    #[test]
    fn resample_rejects_degenerate_requests() {
        let c = Curve::segment(p(0.0, 0.0), p(1.0, 0.0), 5).unwrap();
        assert!(matches!(c.resample(1), Err(GeomError::TooFewSamples { .. })));
        assert!(Curve::open(vec![p(0.0, 0.0), p(0.0, 0.0)]).is_err());
    }

    #[test]
    fn frame_on_horizontal_segment() {
        let c = Curve::segment(p(0.0, 0.0), p(1.0, 0.0), 5).unwrap();
        for i in 0..5 {
            let f = c.frame(i).unwrap();
            assert_abs_diff_eq!(f.tangent, p(1.0, 0.0), epsilon = 1e-15);
            assert_abs_diff_eq!(f.normal, p(0.0, -1.0), epsilon = 1e-15);
            assert_eq!(f.curvature, 0.0);
        }
    }

    #[test]
    fn frame_on_ccw_circle() {
        let c = Curve::circle(p(0.3, -0.2), 1.0, 256, true).unwrap();
        for f in c.frames() {
            assert!((f.curvature - 1.0).abs() <= 1e-3);
            assert!((f.normal.norm() - 1.0).abs() < 1e-12);
            assert!(f.normal.dot(&f.tangent).abs() < 1e-12);
        }
    }

    #[test]
    fn collinear_triple_has_zero_curvature() {
        assert_eq!(circumcurvature(p(0.0, 0.0), p(1.0, 1.0), p(2.0, 2.0)), 0.0);
    }

    #[test]
    fn co_normals_of_segment() {
        let c = Curve::segment(p(0.0, 0.0), p(1.0, 0.0), 4).unwrap();
        assert_abs_diff_eq!(c.co_normal(End::End).unwrap(), p(1.0, 0.0), epsilon = 1e-15);
        assert_abs_diff_eq!(c.co_normal(End::Start).unwrap(), p(-1.0, 0.0), epsilon = 1e-15);
        let closed = Curve::circle(p(0.0, 0.0), 1.0, 16, true).unwrap();
        assert_eq!(closed.co_normal(End::Start), Err(GeomError::NoBoundary));
    }

    #[test]
    fn co_normal_of_quarter_arc_is_exact() {
        let c = Curve::arc(p(0.0, 0.0), 1.0, 0.0, PI / 2.0, 17).unwrap();
        // analytic tangents: (0,1) at angle 0, (-1,0) at angle pi/2
        assert_abs_diff_eq!(c.co_normal(End::Start).unwrap(), p(0.0, -1.0), epsilon = 1e-6);
        assert_abs_diff_eq!(c.co_normal(End::End).unwrap(), p(-1.0, 0.0), epsilon = 1e-6);
    }

    #[test]
    fn hausdorff_basics() {
        let a = vec![p(0.0, 0.0), p(1.0, 0.0)];
        assert_eq!(hausdorff(&a, &a, None), 0.0);
        assert_eq!(hausdorff(&[p(0.0, 0.0)], &[p(3.0, 4.0)], None), 5.0);
        let w = Disk::new(p(0.0, 0.0), 1.0);
        assert_eq!(hausdorff(&[p(0.0, 0.0)], &[p(3.0, 4.0)], Some(&w)), f64::INFINITY);
    }

    #[test]
    fn hausdorff_concentric_circles_against_brute_force() {
        let a = Curve::circle(p(0.0, 0.0), 1.0, 400, true).unwrap();
        let b = Curve::circle(p(0.0, 0.0), 2.0, 400, true).unwrap();
        // brute force over all pairs
        let mut worst: f64 = 0.0;
        for (x, y) in [(a.points(), b.points()), (b.points(), a.points())] {
            for q in x {
                let m = y.iter().map(|r| (q - r).norm()).fold(f64::INFINITY, f64::min);
                worst = worst.max(m);
            }
        }
        let h = hausdorff(a.points(), b.points(), None);
        assert_abs_diff_eq!(h, worst, epsilon = 1e-14);
        assert!((h - 1.0).abs() <= b.resolution());
    }

    #[test]
    fn trim_examples() {
        let c = Curve::segment(p(0.0, 0.0), p(1.0, 0.0), 11).unwrap();
        let t = c.trim(0.25).unwrap();
        assert_abs_diff_eq!(t.length(), 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(t.point(0), p(0.25, 0.0), epsilon = 1e-12);
        assert!(matches!(c.trim(0.6), Err(GeomError::EmptyTrim { .. })));
        let circle = Curve::circle(p(0.0, 0.0), 1.0, 32, true).unwrap();
        assert_eq!(circle.trim(0.3).unwrap(), circle);
    }

    #[test]
    fn geodesic_examples() {
        let c = Curve::segment(p(0.0, 0.0), p(1.0, 0.0), 11).unwrap();
        assert_abs_diff_eq!(c.geodesic_dist(2, 7).unwrap(), 0.5, epsilon = 1e-12);
        let circle = Curve::circle(p(0.0, 0.0), 1.0, 200, true).unwrap();
        assert!((circle.geodesic_dist(0, 100).unwrap() - PI).abs() <= circle.resolution());
        let arc = Curve::arc(p(0.0, 0.0), 1.0, 0.0, PI / 2.0, 2001).unwrap();
        let ratio = arc.geodesic_dist(0, 2000).unwrap() / (arc.point(0) - arc.point(2000)).norm();
        assert!((ratio - (PI / 2.0) / 2f64.sqrt()).abs() < 1e-6);
    }

    #[test]
    fn extension_follows_osculating_circle() {
        let arc = Curve::arc(p(0.0, 0.0), 1.0, 0.0, 1.0, 41).unwrap();
        let ext = arc.extend_ends(0.4).unwrap();
        for q in ext.points() {
            assert!((q.norm() - 1.0).abs() < 1e-9);
        }
        assert!((ext.length() - 1.8).abs() < 1e-3);
    }

    #[test]
    fn reversed_closed_keeps_first_sample() {
        let c = Curve::circle(p(0.0, 0.0), 1.0, 8, true).unwrap();
        let r = c.reversed();
        assert_eq!(r.point(0), c.point(0));
        assert_abs_diff_eq!(shoelace(r.points(), true), -shoelace(c.points(), true), epsilon = 1e-14);
    }
}

//! First-order Whitney jets, signed distance to sampled curves and
//! extension of endpoint data along a curve.

use thiserror::Error;

use crate::geom::{perp, Curve, End, GeomError, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ExtendError {
    #[error("jet nodes {0} and {1} coincide")]
    DuplicateNode(usize, usize),
    #[error("jet node {0} has a non-finite value")]
    NonFinite(usize),
    #[error("empty jet")]
    Empty,
    #[error("query {x:?} is outside the collar of width {eps}")]
    OutOfCollar { x: Point, eps: f64 },
    #[error("curve of length {length} is too short for collars of width {mu}")]
    OverlappingCollars { length: f64, mu: f64 },
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// Quintic smoothstep `1 - (6t⁵ - 15t⁴ + 10t³)` on `[0, 1]`: one at zero,
/// zero from one on, `C²` across both ends.
pub fn smooth_cutoff(t: f64) -> f64 {
    if t <= 0.0 {
        1.0
    } else if t >= 1.0 {
        0.0
    } else {
        1.0 - t * t * t * (t * (6.0 * t - 15.0) + 10.0)
    }
}

/// Derivative of [`smooth_cutoff`].
pub fn smooth_cutoff_deriv(t: f64) -> f64 {
    if t <= 0.0 || t >= 1.0 {
        0.0
    } else {
        -30.0 * t * t * (1.0 - t) * (1.0 - t)
    }
}

/// Plateau cutoff: one on `[0, 1/2]`, zero from one on, the smoothstep
/// rescaled in between.
pub fn plateau_cutoff(t: f64) -> f64 {
    smooth_cutoff(2.0 * t - 1.0)
}

pub fn plateau_cutoff_deriv(t: f64) -> f64 {
    2.0 * smooth_cutoff_deriv(2.0 * t - 1.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetNode {
    pub position: Point,
    pub value: f64,
    pub gradient: Point,
}

/// Order-one jet: values and gradients prescribed on a finite set.
#[derive(Debug, Clone, PartialEq)]
pub struct Jet1 {
    nodes: Vec<JetNode>,
}

impl Jet1 {
    pub fn new(nodes: Vec<JetNode>) -> Result<Jet1, ExtendError> {
        if nodes.is_empty() {
            return Err(ExtendError::Empty);
        }
        for (i, n) in nodes.iter().enumerate() {
            let finite = n.value.is_finite() && n.gradient.iter().all(|v| v.is_finite());
            if !finite || !n.position.iter().all(|v| v.is_finite()) {
                return Err(ExtendError::NonFinite(i));
            }
            if let Some(j) = nodes[..i].iter().position(|m| m.position == n.position) {
                return Err(ExtendError::DuplicateNode(j, i));
            }
        }
        Ok(Jet1 { nodes })
    }

    /// Jet of `f` with gradient `df` at the given points.
    pub fn from_fn(
        points: &[Point],
        f: impl Fn(Point) -> f64,
        df: impl Fn(Point) -> Point,
    ) -> Result<Jet1, ExtendError> {
        Jet1::new(points.iter().map(|&p| JetNode { position: p, value: f(p), gradient: df(p) }).collect())
    }

    pub fn nodes(&self) -> &[JetNode] {
        &self.nodes
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JetNorm {
    /// Largest `|F⁰|` or `|∇F|`.
    pub sup: f64,
    /// Largest Whitney quotient over ordered node pairs.
    pub quotient: f64,
}

impl JetNorm {
    pub fn total(&self) -> f64 {
        self.sup + self.quotient
    }
}

/// Whitney quotients of the ordered pair `(x, y)`: the Taylor remainder of
/// the value over `|x-y|^(1+α)` and the gradient difference over `|x-y|^α`.
pub fn whitney_quotient(x: &JetNode, y: &JetNode, alpha: f64) -> (f64, f64) {
    let d = y.position - x.position;
    let r = d.norm();
    let rem = (y.value - x.value - x.gradient.dot(&d)).abs();
    (rem / r.powf(1.0 + alpha), (y.gradient - x.gradient).norm() / r.powf(alpha))
}

pub fn jet_norm(j: &Jet1, alpha: f64) -> JetNorm {
    let n = &j.nodes;
    let sup = n.iter().fold(0.0_f64, |m, v| m.max(v.value.abs()).max(v.gradient.norm()));
    let mut quotient: f64 = 0.0;
    for (i, x) in n.iter().enumerate() {
        for (k, y) in n.iter().enumerate() {
            if i != k {
                let (q0, q1) = whitney_quotient(x, y, alpha);
                quotient = quotient.max(q0).max(q1);
            }
        }
    }
    JetNorm { sup, quotient }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Extension {
    pub values: Vec<f64>,
    pub gradients: Vec<Point>,
    /// Queries where every blend weight vanished (values set to zero).
    pub extrapolated: Vec<bool>,
    /// Discrete `C^{1,α}` norm of the extension on the queries over the
    /// jet norm (0 for a zero jet).
    pub norm_ratio: f64,
}

/// Blend radius used by [`whitney_extend`]: three times the largest
/// nearest-neighbour spacing of the nodes.
pub fn default_blend_radius(j: &Jet1) -> f64 {
    let n = &j.nodes;
    if n.len() < 2 {
        return 1.0;
    }
    let mut worst: f64 = 0.0;
    for (i, x) in n.iter().enumerate() {
        let near = n
            .iter()
            .enumerate()
            .filter(|(k, _)| *k != i)
            .map(|(_, y)| (y.position - x.position).norm())
            .fold(f64::INFINITY, f64::min);
        worst = worst.max(near);
    }
    3.0 * worst
}

/// Shepard blend of the first-order Taylor polynomials of `j`, with
/// weights `χ(|y-x|/R) / |y-x|⁴`. Values and gradients are reproduced
/// exactly at the nodes.
pub fn whitney_extend(j: &Jet1, alpha: f64, radius: f64, queries: &[Point]) -> Extension {
    let mut values = Vec::with_capacity(queries.len());
    let mut gradients = Vec::with_capacity(queries.len());
    let mut extrapolated = Vec::with_capacity(queries.len());
    for &y in queries {
        if let Some(node) = j.nodes.iter().find(|n| n.position == y) {
            values.push(node.value);
            gradients.push(node.gradient);
            extrapolated.push(false);
            continue;
        }
        let mut w_sum = 0.0;
        let mut dw_sum = Point::zeros();
        let mut p_sum = 0.0;
        let mut dp_sum = Point::zeros();
        let mut g_sum = Point::zeros();
        for n in &j.nodes {
            let d = y - n.position;
            let r = d.norm();
            let t = r / radius;
            if t >= 1.0 {
                continue;
            }
            let c = smooth_cutoff(t);
            let r4 = r.powi(4);
            let w = c / r4;
            // ∇w = (χ'(t)/(R r) - 4χ/r²) d / r⁴
            let dw = d * ((smooth_cutoff_deriv(t) / (radius * r) - 4.0 * c / (r * r)) / r4);
            let p = n.value + n.gradient.dot(&d);
            w_sum += w;
            dw_sum += dw;
            p_sum += w * p;
            dp_sum += dw * p;
            g_sum += n.gradient * w;
        }
        if w_sum > 0.0 {
            let f = p_sum / w_sum;
            values.push(f);
            gradients.push((g_sum + dp_sum - dw_sum * f) / w_sum);
            extrapolated.push(false);
        } else {
            values.push(0.0);
            gradients.push(Point::zeros());
            extrapolated.push(true);
        }
    }
    let base = jet_norm(j, alpha).total();
    let sampled: Vec<JetNode> = queries
        .iter()
        .zip(values.iter().zip(&gradients))
        .zip(&extrapolated)
        .filter(|(_, e)| !**e)
        .map(|((&position, (&value, &gradient)), _)| JetNode { position, value, gradient })
        .collect();
    let mut unique: Vec<JetNode> = Vec::with_capacity(sampled.len());
    for n in sampled {
        if !unique.iter().any(|m| m.position == n.position) {
            unique.push(n);
        }
    }
    let norm_ratio = if base > 0.0 && !unique.is_empty() {
        jet_norm(&Jet1 { nodes: unique }, alpha).total() / base
    } else {
        0.0
    };
    Extension { values, gradients, extrapolated, norm_ratio }
}

/// Signed distance to a sampled curve, valid in a collar of half-width
/// `eps`. The sign follows the curve normal: `d(x + tν) = t` for small
/// `t`.
#[derive(Debug, Clone)]
pub struct DistanceMap {
    curve: Curve,
    normals: Vec<Point>,
    eps: f64,
}

/// Collar half-width `0.5 / max |κ|`, capped by half the curve length.
pub fn default_collar(c: &Curve) -> f64 {
    let kmax = c.curvatures().iter().fold(0.0_f64, |m, k| m.max(k.abs()));
    let cap = 0.5 * c.length();
    if kmax > 0.0 {
        (0.5 / kmax).min(cap)
    } else {
        cap
    }
}

pub fn distance_map(s: &Curve) -> DistanceMap {
    DistanceMap::with_collar(s, default_collar(s))
}

impl DistanceMap {
    pub fn with_collar(s: &Curve, eps: f64) -> DistanceMap {
        DistanceMap { curve: s.clone(), normals: s.frames().iter().map(|f| f.normal).collect(), eps }
    }

    pub fn curve(&self) -> &Curve {
        &self.curve
    }

    pub fn collar(&self) -> f64 {
        self.eps
    }

    /// Signed distance and its gradient at `x`.
    pub fn eval(&self, x: Point) -> Result<(f64, Point), ExtendError> {
        let proj = self.curve.project(&x);
        if proj.distance > self.eps {
            return Err(ExtendError::OutOfCollar { x, eps: self.eps });
        }
        let n = self.curve.len();
        let i = proj.segment;
        let j = (i + 1) % n;
        let pts = self.curve.points();
        if !self.curve.is_closed() {
            let tol = self.curve.tol_x();
            let before_start = i == 0 && (x - pts[0]).dot(&(pts[1] - pts[0])) < -tol * (pts[1] - pts[0]).norm();
            let after_end = j == n - 1 && (x - pts[n - 1]).dot(&(pts[n - 1] - pts[n - 2])) > tol * (pts[n - 1] - pts[n - 2]).norm();
            if before_start || after_end {
                return Err(ExtendError::OutOfCollar { x, eps: self.eps });
            }
        }
        let nu = (self.normals[i] * (1.0 - proj.t) + self.normals[j] * proj.t).normalize();
        let off = x - proj.point;
        let dist = off.norm();
        if dist <= 1e-14 * self.curve.length() {
            let seg = perp((pts[j] - pts[i]).normalize());
            let sign = if seg.dot(&nu) >= 0.0 { 1.0 } else { -1.0 };
            return Ok((sign * off.dot(&seg), nu));
        }
        let sign = if off.dot(&nu) >= 0.0 { 1.0 } else { -1.0 };
        Ok((sign * dist, off * (sign / dist)))
    }
}

/// Extends endpoint values `(ā(start), ā(end))` along `s0` as
/// `ā(p) χ(dist_S(x, p)/μ) + ā(q) χ(dist_S(x, q)/μ)` with the smoothstep
/// cutoff `χ`.
pub fn extend_boundary_data(s0: &Curve, abar: (f64, f64), mu: f64) -> Result<Vec<f64>, ExtendError> {
    if s0.is_closed() {
        return Err(GeomError::NoBoundary.into());
    }
    let length = s0.length();
    if !(mu > 0.0) || length <= 2.0 * mu {
        return Err(ExtendError::OverlappingCollars { length, mu });
    }
    (0..s0.len())
        .map(|i| {
            let ds = s0.geodesic_to_end(i, End::Start)?;
            let de = s0.geodesic_to_end(i, End::End)?;
            Ok(abar.0 * smooth_cutoff(ds / mu) + abar.1 * smooth_cutoff(de / mu))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use std::f64::consts::PI;

    #[test]
    fn single_node_norm_is_sup() {
        let j = Jet1::new(vec![JetNode { position: Point::zeros(), value: -2.0, gradient: Point::new(1.0, 0.0) }])
            .unwrap();
        let n = jet_norm(&j, 0.5);
        assert_eq!(n.quotient, 0.0);
        assert_eq!(n.sup, 2.0);
    }

    #[test]
    fn affine_jet_has_zero_quotient_and_extends_exactly() {
        let a = Point::new(0.3, -1.2);
        let pts: Vec<Point> = (0..10).map(|i| Point::new(i as f64 * 0.1, (i * i) as f64 * 0.02)).collect();
        let j = Jet1::from_fn(&pts, |x| a.dot(&x) + 0.7, |_| a).unwrap();
        assert!(jet_norm(&j, 1.0).quotient < 1e-12);
        let q = [Point::new(0.15, 0.05), Point::new(0.42, 0.3)];
        let e = whitney_extend(&j, 1.0, default_blend_radius(&j), &q);
        for (y, v) in q.iter().zip(&e.values) {
            assert_abs_diff_eq!(*v, a.dot(y) + 0.7, epsilon = 1e-12);
        }
    }

    #[test]
    fn quadratic_on_circle_quotient() {
        let pts: Vec<Point> = (0..64).map(|i| Point::new((i as f64 * PI / 32.0).cos(), (i as f64 * PI / 32.0).sin())).collect();
        let j = Jet1::from_fn(&pts, |x| x.norm_squared(), |x| x * 2.0).unwrap();
        let n = jet_norm(&j, 1.0);
        assert!((n.quotient - 2.0).abs() < 1e-6, "{}", n.quotient);
    }

    #[test]
    fn cutoffs_have_the_documented_shape() {
        assert_eq!(plateau_cutoff(0.0), 1.0);
        assert_eq!(plateau_cutoff(0.5), 1.0);
        assert_eq!(plateau_cutoff(1.0), 0.0);
        let v = plateau_cutoff(0.75);
        assert!(v > 0.0 && v < 1.0);
        let h = 1e-7;
        for t in [0.1, 0.3, 0.62, 0.9] {
            assert_abs_diff_eq!(smooth_cutoff_deriv(t), (smooth_cutoff(t + h) - smooth_cutoff(t - h)) / (2.0 * h), epsilon = 1e-6);
        }
    }

    #[test]
    fn distance_sign_follows_normal() {
        let s = Curve::segment(Point::new(0.0, 0.0), Point::new(1.0, 0.0), 11).unwrap();
        let d = distance_map(&s);
        let (v, _) = d.eval(Point::new(0.5, -0.3)).unwrap();
        assert_abs_diff_eq!(v, 0.3, epsilon = 1e-15);
        let (v, g) = d.eval(Point::new(0.5, 0.0)).unwrap();
        assert_eq!(v, 0.0);
        assert_abs_diff_eq!((g - Point::new(0.0, -1.0)).norm(), 0.0, epsilon = 1e-9);
        assert!(d.eval(Point::new(1.2, 0.0)).is_err());
        assert!(d.eval(Point::new(0.5, 0.9)).is_err());
    }

    #[test]
    fn boundary_data_support_and_zero() {
        let s = Curve::segment(Point::new(0.0, 0.0), Point::new(1.0, 0.0), 101).unwrap();
        let a = extend_boundary_data(&s, (0.0, 0.0), 0.25).unwrap();
        assert!(a.iter().all(|v| *v == 0.0));
        let a = extend_boundary_data(&s, (1.0, 0.0), 0.25).unwrap();
        assert_eq!(a[0], 1.0);
        assert!(a[25..].iter().all(|v| *v == 0.0));
        assert!(extend_boundary_data(&s, (1.0, 1.0), 0.5).is_err());
    }
}

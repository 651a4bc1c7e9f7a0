//! Polyline refinement for the potential problem.
//!
//! Starting from a sampled arc solution, each interface vertex moves as
//! `v = r + (1 - t) ΔP_start + t ΔP_end + w n`, where `r` is the reference
//! sample, `t` its arc-length fraction, `n` the reference normal and `ΔP`
//! the displacement of the triple point at that end. Interior offsets `w`
//! and the triple-point displacements are the unknowns; the endpoints ride
//! with their triple points. The objective is polyline length plus the
//! weighted potential over all bounded chambers, the constraints are the
//! polygon areas.

use nalgebra::{DMatrix, DVector};

use super::al::{Eval, Problem};
use super::potential::{fan_integral_grad, Potential};
use crate::cluster::PlanarCluster;
use crate::geom::{End, Point};

pub(crate) struct PolishProblem<'a> {
    pub(crate) template: &'a PlanarCluster,
    pub(crate) targets: &'a [f64],
    pub(crate) potential: &'a dyn Potential,
    pub(crate) delta: f64,
    layout: Vec<Layout>,
    dim: usize,
    origin: Point,
}

struct Layout {
    reference: Vec<Point>,
    normals: Vec<Point>,
    fraction: Vec<f64>,
    closed: bool,
    start_node: Option<usize>,
    end_node: Option<usize>,
    /// Variable index of the offset of sample `free.start`.
    offset: usize,
    free: std::ops::Range<usize>,
    chambers: (usize, usize),
}

impl<'a> PolishProblem<'a> {
    pub(crate) fn new(
        template: &'a PlanarCluster,
        targets: &'a [f64],
        potential: &'a dyn Potential,
        delta: f64,
    ) -> PolishProblem<'a> {
        let n_nodes = template.triple_points.len();
        let node_of = |id: usize, end: End| template.triple_points.iter().position(|t| t.incident.contains(&(id, end)));
        let mut next = 2 * n_nodes;
        let mut layout = Vec::with_capacity(template.interfaces.len());
        for iface in &template.interfaces {
            let c = &iface.curve;
            let n = c.len();
            let s = c.arclengths();
            let total = s[s.len() - 1].max(f64::MIN_POSITIVE);
            let closed = c.is_closed();
            let (start_node, end_node) =
                if closed { (None, None) } else { (node_of(iface.id, End::Start), node_of(iface.id, End::End)) };
            let lo = if closed || start_node.is_none() { 0 } else { 1 };
            let hi = if closed || end_node.is_none() { n } else { n - 1 };
            layout.push(Layout {
                reference: c.points().to_vec(),
                normals: c.frames().iter().map(|f| f.normal).collect(),
                fraction: s[..n].iter().map(|v| v / total).collect(),
                closed,
                start_node,
                end_node,
                offset: next,
                free: lo..hi,
                chambers: iface.chambers,
            });
            next += hi.saturating_sub(lo);
        }
        let (lo, hi) = template.bounding_box();
        PolishProblem { template, targets, potential, delta, layout, dim: next, origin: (lo + hi) * 0.5 }
    }

    fn node_shift(&self, x: &DVector<f64>, node: Option<usize>) -> Point {
        node.map_or(Point::zeros(), |j| Point::new(x[2 * j], x[2 * j + 1]))
    }

    pub(crate) fn vertices(&self, x: &DVector<f64>) -> Vec<Vec<Point>> {
        self.layout
            .iter()
            .map(|l| {
                let ds = self.node_shift(x, l.start_node);
                let de = self.node_shift(x, l.end_node);
                (0..l.reference.len())
                    .map(|i| {
                        let t = if l.closed { 0.0 } else { l.fraction[i] };
                        let mut v = l.reference[i] + ds * (1.0 - t) + de * t;
                        if l.free.contains(&i) {
                            v += l.normals[i] * x[l.offset + i - l.free.start];
                        }
                        v
                    })
                    .collect()
            })
            .collect()
    }

    pub(crate) fn node_positions(&self, x: &DVector<f64>) -> Vec<Point> {
        self.template
            .triple_points
            .iter()
            .enumerate()
            .map(|(j, t)| t.position + Point::new(x[2 * j], x[2 * j + 1]))
            .collect()
    }

    /// Pulls a per-vertex gradient back onto the variables.
    fn pull_back(&self, l: &Layout, g: &[Point], out: &mut [f64]) {
        for (i, gi) in g.iter().enumerate() {
            if !l.closed {
                let t = l.fraction[i];
                if let Some(j) = l.start_node {
                    out[2 * j] += gi.x * (1.0 - t);
                    out[2 * j + 1] += gi.y * (1.0 - t);
                }
                if let Some(j) = l.end_node {
                    out[2 * j] += gi.x * t;
                    out[2 * j + 1] += gi.y * t;
                }
            }
            if l.free.contains(&i) {
                out[l.offset + i - l.free.start] += gi.dot(&l.normals[i]);
            }
        }
    }
}

fn length_grad(pts: &[Point], closed: bool) -> (f64, Vec<Point>) {
    let n = pts.len();
    let segs = if closed { n } else { n - 1 };
    let mut g = vec![Point::zeros(); n];
    let mut len = 0.0;
    for i in 0..segs {
        let j = (i + 1) % n;
        let d = pts[j] - pts[i];
        let l = d.norm();
        len += l;
        if l > 0.0 {
            let u = d / l;
            g[i] -= u;
            g[j] += u;
        }
    }
    (len, g)
}

fn shoelace_grad(pts: &[Point], closed: bool) -> (f64, Vec<Point>) {
    let n = pts.len();
    let segs = if closed { n } else { n - 1 };
    let mut g = vec![Point::zeros(); n];
    let mut a = 0.0;
    for i in 0..segs {
        let j = (i + 1) % n;
        let (p, q) = (pts[i], pts[j]);
        a += 0.5 * (p.x * q.y - p.y * q.x);
        g[i] += Point::new(0.5 * q.y, -0.5 * q.x);
        g[j] += Point::new(-0.5 * p.y, 0.5 * p.x);
    }
    (a, g)
}

impl Problem for PolishProblem<'_> {
    fn dim(&self) -> usize {
        self.dim
    }

    fn eval(&self, x: &DVector<f64>) -> Eval {
        let verts = self.vertices(x);
        let n = self.template.n_chambers;
        let mut f = 0.0;
        let mut grad = vec![0.0; self.dim];
        let mut areas = vec![0.0; n];
        let mut jac = DMatrix::zeros(n, self.dim);
        let mut row = vec![0.0; self.dim];
        for (l, pts) in self.layout.iter().zip(&verts) {
            let (len, mut g) = length_grad(pts, l.closed);
            f += len;
            let (h, k) = l.chambers;
            if self.delta != 0.0 {
                let coef = if h >= 1 { 0.0 } else { -1.0 };
                if coef != 0.0 {
                    let (v, gp) = fan_integral_grad(self.potential, self.origin, pts, l.closed);
                    f += self.delta * coef * v;
                    for (gi, gpi) in g.iter_mut().zip(&gp) {
                        *gi += gpi * (self.delta * coef);
                    }
                }
            }
            self.pull_back(l, &g, &mut grad);
            let (a, ga) = shoelace_grad(pts, l.closed);
            row.iter_mut().for_each(|v| *v = 0.0);
            self.pull_back(l, &ga, &mut row);
            for (chamber, sign) in [(h, 1.0), (k, -1.0)] {
                if chamber >= 1 {
                    areas[chamber - 1] += sign * a;
                    for (c, v) in row.iter().enumerate() {
                        if *v != 0.0 {
                            jac[(chamber - 1, c)] += sign * v;
                        }
                    }
                }
            }
        }
        let c = DVector::from_iterator(n, areas.iter().zip(self.targets).map(|(a, m)| a - m));
        Eval { f, grad: DVector::from_vec(grad), c, jac }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::shapes;
    use crate::optimize::potential::Quadratic;

    #[test]
    fn analytic_gradients_match_finite_differences() {
        let c = shapes::two_squares();
        let targets = [1.0, 1.0];
        let g = Quadratic { center: Point::new(0.3, 0.2), scale: 1.0 };
        let p = PolishProblem::new(&c, &targets, &g, 0.7);
        let x = DVector::from_fn(p.dim(), |i, _| 0.01 * ((i * 7 % 5) as f64 - 2.0));
        let e = p.eval(&x);
        let h = 1e-6;
        for i in 0..p.dim() {
            let mut up = x.clone();
            up[i] += h;
            let mut dn = x.clone();
            dn[i] -= h;
            let (eu, ed) = (p.eval(&up), p.eval(&dn));
            assert!(((eu.f - ed.f) / (2.0 * h) - e.grad[i]).abs() < 1e-6, "grad {i}");
            for r in 0..2 {
                assert!(((eu.c[r] - ed.c[r]) / (2.0 * h) - e.jac[(r, i)]).abs() < 1e-6, "jac {r} {i}");
            }
        }
    }

    #[test]
    fn zero_variables_reproduce_the_template() {
        let c = shapes::two_squares();
        let targets = [1.0, 1.0];
        let p = PolishProblem::new(&c, &targets, &super::super::potential::ZeroPotential, 0.0);
        let x = DVector::zeros(p.dim());
        let v = p.vertices(&x);
        for (pts, iface) in v.iter().zip(&c.interfaces) {
            assert_eq!(pts.as_slice(), iface.curve.points());
        }
        let e = p.eval(&x);
        assert!(e.c.norm() < 1e-14);
        assert!((e.f - 7.0).abs() < 1e-14);
    }
}

//! Perimeter minimization under area constraints.
//!
//! Interfaces are circular arcs between triple points (or full circles).
//! The arc network is optimized by an augmented Lagrangian method, sampled
//! to polylines and snapped onto the target areas by [`project_volumes`].
//! With a nonzero potential the sampled network is refined further as a
//! free polyline, since optimal interfaces are then no longer circular.

mod al;
pub mod arcs;
mod polish;
pub mod potential;

use std::io::{self, Write};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

pub use al::LogRow;
pub use arcs::{arc_terms, measure_bulge, sample_arc, ArcNetworkVars, ArcVar, CircleVar};
pub use potential::{fan_integral, Gaussian, Potential, Quadratic, ZeroPotential};

use crate::cluster::{ClusterError, Interface, PlanarCluster};
use crate::geom::{Curve, End, GeomError, Point};
use al::{AlSettings, Eval, Problem};
use polish::PolishProblem;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("no convergence after {iterations} iterations (constraint {constraint_norm:.3e}, gradient {grad_norm:.3e})")]
    NonConvergence { iterations: usize, constraint_norm: f64, grad_norm: f64 },
    #[error("interface {interface} collapsed to length {length:.3e}")]
    TopologyCollapse { interface: usize, length: f64 },
    #[error("singular incidence system")]
    SingularSystem,
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SolveOptions {
    /// Outer (multiplier update) iterations per stage.
    pub max_outer: usize,
    /// Quasi-Newton steps between penalty updates.
    pub inner_per_outer: usize,
    pub penalty_init: f64,
    pub penalty_factor: f64,
    pub penalty_max: f64,
    /// Area tolerance relative to each target area.
    pub tol_vol: f64,
    /// Sup-norm tolerance on the gradient of the Lagrangian.
    pub tol_grad: f64,
    /// Gradient tolerance of the polyline refinement.
    pub tol_grad_polish: f64,
    /// Largest coordinate change per step, relative to `sqrt(Σ m)`.
    pub max_step: f64,
    /// Total samples of the output network.
    pub samples: usize,
    /// Samples per interface for potential integrals on arcs.
    pub quadrature_samples: usize,
    /// Interfaces shorter than this fraction of the network length abort
    /// the solve.
    pub collapse_ratio: f64,
    pub seed: u64,
    /// Uniform random perturbation of the initial triple points, relative
    /// to `sqrt(Σ m)`. Zero disables it.
    pub init_jitter: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            max_outer: 200,
            inner_per_outer: 20,
            penalty_init: 10.0,
            penalty_factor: 2.0,
            penalty_max: 1e4,
            tol_vol: 1e-10,
            tol_grad: 1e-9,
            tol_grad_polish: 1e-9,
            max_step: 0.25,
            samples: 256,
            quadrature_samples: 64,
            collapse_ratio: 1e-3,
            seed: 0,
            init_jitter: 0.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Solution {
    pub cluster: PlanarCluster,
    /// Arc network at the end of the arc stage.
    pub arcs: ArcNetworkVars,
    /// Area-constraint multipliers, chambers `1..=N`.
    pub multipliers: Vec<f64>,
    pub log: Vec<LogRow>,
    pub outer_iterations: usize,
    /// Final objective: perimeter plus weighted potential.
    pub energy: f64,
}

/// Writes an iteration log as CSV.
pub fn write_log_csv(log: &[LogRow], mut w: impl Write) -> io::Result<()> {
    writeln!(w, "iter,outer,energy,constraint_norm,step,merit")?;
    for r in log {
        writeln!(
            w,
            "{},{},{:.12e},{:.12e},{:.12e},{:.12e}",
            r.iter, r.outer, r.energy, r.constraint_norm, r.step, r.merit
        )?;
    }
    Ok(())
}

/// Local minimizer of perimeter with chamber areas `m`, topology fixed
/// by `init`.
pub fn solve_partition(m: &[f64], init: &PlanarCluster, opts: &SolveOptions) -> Result<Solution, SolveError> {
    solve(m, init, None, opts)
}

/// Local minimizer of `perimeter + delta Σ_h ∫_{E(h)} g` with chamber
/// areas `m`. With `delta == 0` this is exactly [`solve_partition`].
pub fn solve_with_potential(
    m: &[f64],
    g: &dyn Potential,
    delta: f64,
    init: &PlanarCluster,
    opts: &SolveOptions,
) -> Result<Solution, SolveError> {
    if !(delta.is_finite() && delta >= 0.0) {
        return Err(SolveError::InvalidInput(format!("potential weight {delta} must be finite and nonnegative")));
    }
    if delta == 0.0 {
        solve(m, init, None, opts)
    } else {
        solve(m, init, Some((g, delta)), opts)
    }
}

fn check_targets(m: &[f64], c: &PlanarCluster) -> Result<(), SolveError> {
    if m.len() != c.n_chambers {
        return Err(SolveError::InvalidInput(format!("{} target areas for {} chambers", m.len(), c.n_chambers)));
    }
    if let Some(v) = m.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
        return Err(SolveError::InvalidInput(format!("target area {v} is not positive")));
    }
    Ok(())
}

fn settings(opts: &SolveOptions, m: &[f64], tol_grad: f64) -> AlSettings {
    let scale = m.iter().sum::<f64>().sqrt();
    AlSettings {
        max_outer: opts.max_outer,
        inner_per_outer: opts.inner_per_outer,
        penalty_init: opts.penalty_init,
        penalty_factor: opts.penalty_factor,
        penalty_max: opts.penalty_max,
        tol_constraint: opts.tol_vol * m.iter().cloned().fold(f64::INFINITY, f64::min),
        tol_grad,
        max_step: opts.max_step * scale,
    }
}

struct ArcProblem<'a> {
    vars: ArcNetworkVars,
    targets: &'a [f64],
    potential: Option<(&'a dyn Potential, f64)>,
    quadrature: usize,
    fd_step: f64,
    origin: Point,
}

impl ArcProblem<'_> {
    fn potential_energy(&self, vars: &ArcNetworkVars, g: &dyn Potential) -> f64 {
        let mut total = 0.0;
        for a in &vars.arcs {
            if vars.labels[a.interface].1 .0 == 0 {
                let pts = sample_arc(vars.nodes[a.start], vars.nodes[a.end], a.bulge, self.quadrature);
                total -= fan_integral(g, self.origin, &pts, false);
            }
        }
        for c in &vars.circles {
            if vars.labels[c.interface].1 .0 == 0 {
                let sign = if c.ccw { 1.0 } else { -1.0 };
                let pts: Vec<Point> = (0..self.quadrature)
                    .map(|i| {
                        let th = sign * std::f64::consts::TAU * i as f64 / self.quadrature as f64;
                        c.center + Point::new(c.radius * th.cos(), c.radius * th.sin())
                    })
                    .collect();
                total -= fan_integral(g, self.origin, &pts, true);
            }
        }
        total
    }
}

impl Problem for ArcProblem<'_> {
    fn dim(&self) -> usize {
        self.vars.dim()
    }

    fn eval(&self, x: &DVector<f64>) -> Eval {
        let mut v = self.vars.clone();
        v.set_from(x.as_slice());
        let n = v.n_chambers;
        let nn = v.nodes.len();
        let dim = v.dim();
        let mut f = 0.0;
        let mut grad = DVector::zeros(dim);
        let mut areas = vec![0.0; n];
        let mut jac = DMatrix::zeros(n, dim);
        let add_area = |jac: &mut DMatrix<f64>, areas: &mut [f64], interface: usize, val: f64, d: &[(usize, f64)]| {
            let (h, k) = v.labels[interface].1;
            for (chamber, sign) in [(h, 1.0), (k, -1.0)] {
                if chamber >= 1 {
                    areas[chamber - 1] += sign * val;
                    for &(col, dv) in d {
                        jac[(chamber - 1, col)] += sign * dv;
                    }
                }
            }
        };
        for (i, a) in v.arcs.iter().enumerate() {
            let t = arc_terms(v.nodes[a.start], v.nodes[a.end], a.bulge);
            let (ps, pe, pb) = (2 * a.start, 2 * a.end, 2 * nn + i);
            f += t.length;
            grad[ps] += t.dlength.0.x;
            grad[ps + 1] += t.dlength.0.y;
            grad[pe] += t.dlength.1.x;
            grad[pe + 1] += t.dlength.1.y;
            grad[pb] += t.dlength.2;
            let d = [
                (ps, t.dshoelace.0.x),
                (ps + 1, t.dshoelace.0.y),
                (pe, t.dshoelace.1.x),
                (pe + 1, t.dshoelace.1.y),
                (pb, t.dshoelace.2),
            ];
            add_area(&mut jac, &mut areas, a.interface, t.shoelace, &d);
        }
        let off = 2 * nn + v.arcs.len();
        for (i, c) in v.circles.iter().enumerate() {
            let pr = off + 3 * i + 2;
            let sign = if c.ccw { 1.0 } else { -1.0 };
            f += 2.0 * std::f64::consts::PI * c.radius.abs();
            grad[pr] += 2.0 * std::f64::consts::PI * c.radius.signum();
            let val = sign * std::f64::consts::PI * c.radius * c.radius;
            add_area(&mut jac, &mut areas, c.interface, val, &[(pr, sign * 2.0 * std::f64::consts::PI * c.radius)]);
        }
        if let Some((g, delta)) = self.potential {
            f += delta * self.potential_energy(&v, g);
            let mut w = v.clone();
            let mut xs = x.clone();
            for j in 0..dim {
                let x0 = xs[j];
                xs[j] = x0 + self.fd_step;
                w.set_from(xs.as_slice());
                let up = self.potential_energy(&w, g);
                xs[j] = x0 - self.fd_step;
                w.set_from(xs.as_slice());
                let dn = self.potential_energy(&w, g);
                xs[j] = x0;
                grad[j] += delta * (up - dn) / (2.0 * self.fd_step);
            }
        }
        let c = DVector::from_iterator(n, areas.iter().zip(self.targets).map(|(a, m)| a - m));
        Eval { f, grad, c, jac }
    }
}

fn collapse_check(vars: &ArcNetworkVars, x: &DVector<f64>, ratio: f64) -> Result<(), SolveError> {
    let mut v = vars.clone();
    v.set_from(x.as_slice());
    let lengths = v.interface_lengths();
    let total: f64 = lengths.iter().sum();
    for (i, l) in lengths.iter().enumerate() {
        if !(l.is_finite() && *l >= ratio * total) {
            return Err(SolveError::TopologyCollapse { interface: v.labels[i].0, length: *l });
        }
    }
    Ok(())
}

fn solve(
    m: &[f64],
    init: &PlanarCluster,
    potential: Option<(&dyn Potential, f64)>,
    opts: &SolveOptions,
) -> Result<Solution, SolveError> {
    check_targets(m, init)?;
    let diag = init.validate();
    if !diag.is_valid() {
        return Err(SolveError::InvalidInput(format!("initial cluster: {diag}")));
    }
    let mut vars = ArcNetworkVars::from_cluster(init)?;
    let scale = m.iter().sum::<f64>().sqrt();
    let mut x0 = DVector::from_vec(vars.to_vec());
    if opts.init_jitter > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
        for v in x0.iter_mut().take(2 * vars.nodes.len()) {
            *v += opts.init_jitter * scale * rng.random_range(-1.0..1.0);
        }
    }
    let (lo, hi) = init.bounding_box();
    let problem = ArcProblem {
        vars: vars.clone(),
        targets: m,
        potential,
        quadrature: opts.quadrature_samples.max(3),
        fd_step: 1e-6 * scale,
        origin: (lo + hi) * 0.5,
    };
    let s = settings(opts, m, opts.tol_grad);
    let out = al::minimize(&problem, x0, DVector::zeros(m.len()), &s, |x| collapse_check(&vars, x, opts.collapse_ratio))?;
    if !out.converged {
        return Err(SolveError::NonConvergence {
            iterations: out.log.len(),
            constraint_norm: out.constraint_norm,
            grad_norm: out.grad_norm,
        });
    }
    vars.set_from(out.x.as_slice());
    let mut log = out.log;
    let mut outer_iterations = out.outer_iterations;
    let mut multipliers = out.multipliers;
    let mut energy = problem.eval(&out.x).f;
    let mut cluster = vars.to_cluster(init, opts.samples)?;
    if let Some((g, delta)) = potential {
        let pp = PolishProblem::new(&cluster, m, g, delta);
        let s = settings(opts, m, opts.tol_grad_polish);
        let first = log.len();
        let polished = al::minimize::<SolveError>(&pp, DVector::zeros(pp.dim()), multipliers.clone(), &s, |_| Ok(()))?;
        if !polished.converged {
            return Err(SolveError::NonConvergence {
                iterations: polished.log.len(),
                constraint_norm: polished.constraint_norm,
                grad_norm: polished.grad_norm,
            });
        }
        log.extend(polished.log.into_iter().map(|mut r| {
            r.iter += first;
            r.outer += outer_iterations;
            r
        }));
        outer_iterations += polished.outer_iterations;
        multipliers = polished.multipliers;
        energy = pp.eval(&polished.x).f;
        let verts = pp.vertices(&polished.x);
        let nodes = pp.node_positions(&polished.x);
        cluster = rebuild(&cluster, verts, nodes)?;
    }
    let projected = project_volumes(&cluster, m, opts.tol_vol)?;
    Ok(Solution {
        cluster: projected.cluster,
        arcs: vars,
        multipliers: multipliers.iter().cloned().collect(),
        log,
        outer_iterations,
        energy,
    })
}

fn rebuild(template: &PlanarCluster, verts: Vec<Vec<Point>>, nodes: Vec<Point>) -> Result<PlanarCluster, GeomError> {
    let mut interfaces = Vec::with_capacity(verts.len());
    for (iface, pts) in template.interfaces.iter().zip(verts) {
        let curve = Curve::new(pts, iface.curve.is_closed())?;
        interfaces.push(Interface { id: iface.id, chambers: iface.chambers, curve });
    }
    let mut out = template.clone();
    out.interfaces = interfaces;
    for (t, p) in out.triple_points.iter_mut().zip(nodes) {
        t.position = p;
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub struct VolumeProjection {
    pub cluster: PlanarCluster,
    /// Accumulated normal offset of each interface, in cluster order.
    pub offsets: Vec<f64>,
    pub iterations: usize,
    /// `Σ_h |m_h - area_h|` before projection.
    pub area_change: f64,
    /// `|perimeter after - perimeter before|`.
    pub perimeter_change: f64,
    /// `perimeter_change / area_change` (0 when nothing moved).
    pub ratio: f64,
}

/// Moves every interface by a uniform normal offset so that the chamber
/// areas become `m` (within `tol_rel * m_h`). Offsets are the minimum-norm
/// solution of the linearized area equations; triple points follow the
/// least-squares fit of their incident offsets and the correction is
/// blended linearly along each interface.
pub fn project_volumes(c: &PlanarCluster, m: &[f64], tol_rel: f64) -> Result<VolumeProjection, SolveError> {
    check_targets(m, c)?;
    let start = c.areas()?;
    for (a, t) in start.iter().zip(m) {
        if (a - t).abs() > 0.1 * t {
            return Err(SolveError::InvalidInput(format!("area {a} is more than 10% away from target {t}")));
        }
    }
    let n = m.len();
    let ne = c.interfaces.len();
    let mut cur = c.clone();
    let mut areas = start.clone();
    let mut offsets = vec![0.0; ne];
    let mut iterations = 0;
    loop {
        let r = DVector::from_iterator(n, m.iter().zip(&areas).map(|(t, a)| t - a));
        if r.iter().zip(m).all(|(ri, t)| ri.abs() <= tol_rel * t) {
            break;
        }
        if iterations == 50 {
            return Err(SolveError::NonConvergence {
                iterations,
                constraint_norm: r.amax(),
                grad_norm: 0.0,
            });
        }
        let mut mat = DMatrix::<f64>::zeros(n, ne);
        for (e, iface) in cur.interfaces.iter().enumerate() {
            let l = iface.curve.length();
            let (h, k) = iface.chambers;
            if h >= 1 {
                mat[(h - 1, e)] += l;
            }
            if k >= 1 {
                mat[(k - 1, e)] -= l;
            }
        }
        let mmt: DMatrix<f64> = &mat * mat.transpose();
        let y: DVector<f64> = mmt.cholesky().ok_or(SolveError::SingularSystem)?.solve(&r);
        let t: DVector<f64> = mat.transpose() * y;
        if t.iter().any(|v| !v.is_finite()) {
            return Err(SolveError::SingularSystem);
        }
        cur = offset_network(&cur, t.as_slice())?;
        for (o, v) in offsets.iter_mut().zip(t.iter()) {
            *o += v;
        }
        areas = cur.areas()?;
        iterations += 1;
    }
    let area_change: f64 = start.iter().zip(m).map(|(a, t)| (t - a).abs()).sum();
    let perimeter_change = (cur.perimeter() - c.perimeter()).abs();
    let ratio = if area_change > 0.0 { perimeter_change / area_change } else { 0.0 };
    Ok(VolumeProjection { cluster: cur, offsets, iterations, area_change, perimeter_change, ratio })
}

fn offset_network(c: &PlanarCluster, t: &[f64]) -> Result<PlanarCluster, SolveError> {
    let frames: Vec<_> = c.interfaces.iter().map(|i| i.curve.frames()).collect();
    let index_of = |id: usize| c.interface_index(id).expect("incident interface exists");
    let mut shift = Vec::with_capacity(c.triple_points.len());
    for tp in &c.triple_points {
        let mut a = nalgebra::Matrix2::<f64>::zeros();
        let mut b = nalgebra::Vector2::<f64>::zeros();
        for &(id, end) in &tp.incident {
            let e = index_of(id);
            let fr = &frames[e];
            let nu = match end {
                End::Start => fr[0].normal,
                End::End => fr[fr.len() - 1].normal,
            };
            a += nu * nu.transpose();
            b += nu * t[e];
        }
        let d = a.try_inverse().ok_or(SolveError::SingularSystem)? * b;
        shift.push(d);
    }
    let node_shift = |id: usize, end: End| -> Option<Point> {
        c.triple_points.iter().position(|tp| tp.incident.contains(&(id, end))).map(|j| shift[j])
    };
    let mut out = c.clone();
    for (e, iface) in out.interfaces.iter_mut().enumerate() {
        let fr = &frames[e];
        let pts = iface.curve.points();
        let moved: Vec<Point> = if iface.curve.is_closed() {
            pts.iter().zip(fr).map(|(p, f)| p + f.normal * t[e]).collect()
        } else {
            let s = iface.curve.arclengths();
            let total = s[s.len() - 1];
            let last = fr.len() - 1;
            let ds = node_shift(iface.id, End::Start).map_or(Point::zeros(), |d| d - fr[0].normal * t[e]);
            let de = node_shift(iface.id, End::End).map_or(Point::zeros(), |d| d - fr[last].normal * t[e]);
            pts.iter()
                .zip(fr)
                .zip(&s)
                .map(|((p, f), si)| {
                    let u = si / total;
                    p + f.normal * t[e] + ds * (1.0 - u) + de * u
                })
                .collect()
        };
        iface.curve = Curve::new(moved, iface.curve.is_closed())?;
    }
    for (tp, d) in out.triple_points.iter_mut().zip(&shift) {
        tp.position += d;
    }
    Ok(out)
}

/// Chamber pressures fitted to interface curvatures.
#[derive(Debug, Clone, PartialEq)]
pub struct Multipliers {
    /// `λ_0 = 0, λ_1, ..., λ_N`.
    pub lambda: Vec<f64>,
    /// Mean curvature of each interface, in cluster order.
    pub mean_curvature: Vec<f64>,
    /// Largest `|H_(h,k) - (λ_h - λ_k)|`.
    pub residual: f64,
}

/// Least-squares fit of the mean interface curvatures by pressure
/// differences `λ_h - λ_k` with `λ_0 = 0`.
pub fn curvature_multipliers(c: &PlanarCluster) -> Result<Multipliers, SolveError> {
    let n = c.n_chambers;
    let ne = c.interfaces.len();
    let mean_curvature: Vec<f64> = c
        .interfaces
        .iter()
        .map(|i| {
            let k = i.curve.curvatures();
            k.iter().sum::<f64>() / k.len() as f64
        })
        .collect();
    let mut a = DMatrix::<f64>::zeros(ne, n);
    for (e, iface) in c.interfaces.iter().enumerate() {
        let (h, k) = iface.chambers;
        if h >= 1 {
            a[(e, h - 1)] += 1.0;
        }
        if k >= 1 {
            a[(e, k - 1)] -= 1.0;
        }
    }
    let hv = DVector::from_vec(mean_curvature.clone());
    let svd = a.clone().svd(true, true);
    let sol = svd.solve(&hv, 1e-12).map_err(|_| SolveError::SingularSystem)?;
    let residual = (&a * &sol - &hv).amax();
    let mut lambda = vec![0.0];
    lambda.extend(sol.iter());
    Ok(Multipliers { lambda, mean_curvature, residual })
}

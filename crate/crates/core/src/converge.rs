//! Convergence harness: match a sequence of clusters against a limit,
//! represent each interface as a normal graph over the limit, assemble
//! almost-normal diffeomorphisms and tabulate how everything decays.

use std::fmt::Write as _;
use std::io::{self, Write};

use thiserror::Error;

use crate::cluster::{boundary_hausdorff, cluster_delta, singular_hausdorff, ClusterError, PlanarCluster};
use crate::diffeo::{build_diffeo, diffeo_norms, find_root, DiffeoError, DiffeoOptions};
use crate::extend::{default_collar, DistanceMap};
use crate::geom::{hausdorff, Curve, End, GeomError, Point};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConvergeError {
    #[error("structural mismatch: {0}")]
    StructuralMismatch(String),
    #[error("ambiguous matching: {0}")]
    Ambiguous(String),
    #[error("normal graph root not bracketed at sample {sample}")]
    GraphBracket { sample: usize },
    #[error("need 0 < rho < mu^2, got rho = {rho}, mu = {mu}")]
    Precondition { mu: f64, rho: f64 },
    #[error(transparent)]
    Diffeo(#[from] DiffeoError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InterfaceMatch {
    /// Interface index in the limit cluster.
    pub limit: usize,
    /// Interface index in the approximating cluster.
    pub approx: usize,
    /// The approximating curve runs the other way.
    pub reversed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructureMatch {
    /// `triple_points[j]` is the approximating triple point matched to
    /// limit triple point `j`.
    pub triple_points: Vec<usize>,
    pub interfaces: Vec<InterfaceMatch>,
    /// `|p_j^k - p_j|` per limit triple point.
    pub point_residuals: Vec<f64>,
    /// Hausdorff distance per matched interface (limit order).
    pub hausdorff_residuals: Vec<f64>,
    /// Largest co-normal deviation at the ends of each matched interface
    /// (0 for closed ones).
    pub conormal_residuals: Vec<f64>,
}

impl StructureMatch {
    pub fn max_point_residual(&self) -> f64 {
        self.point_residuals.iter().cloned().fold(0.0, f64::max)
    }

    /// Approximating curve of limit interface `i`, oriented like the limit.
    pub fn oriented_curve(&self, ek: &PlanarCluster, i: usize) -> Curve {
        let m = self.interfaces[i];
        let c = &ek.interfaces[m.approx].curve;
        if m.reversed {
            c.reversed()
        } else {
            c.clone()
        }
    }
}

fn node_at(c: &PlanarCluster, id: usize, end: End) -> Option<usize> {
    c.triple_points.iter().position(|t| t.incident.contains(&(id, end)))
}

/// Matches triple points by mutual nearest neighbours, then interfaces by
/// chamber labels and matched endpoints (closed ones by Hausdorff
/// distance).
pub fn match_structure(e: &PlanarCluster, ek: &PlanarCluster) -> Result<StructureMatch, ConvergeError> {
    let count = |c: &PlanarCluster| {
        let closed = c.interfaces.iter().filter(|i| i.curve.is_closed()).count();
        (c.n_chambers, c.triple_points.len(), c.interfaces.len() - closed, closed)
    };
    if count(e) != count(ek) {
        return Err(ConvergeError::StructuralMismatch(format!(
            "(chambers, triple points, open, closed) {:?} vs {:?}",
            count(e),
            count(ek)
        )));
    }
    let nearest = |p: Point, set: &[Point]| -> (usize, f64, f64) {
        let mut best = (usize::MAX, f64::INFINITY, f64::INFINITY);
        for (i, q) in set.iter().enumerate() {
            let d = (p - q).norm();
            if d < best.1 {
                best = (i, d, best.1);
            } else if d < best.2 {
                best.2 = d;
            }
        }
        best
    };
    let (pe, pk) = (e.singular_set(), ek.singular_set());
    let mut triple_points = Vec::with_capacity(pe.len());
    let mut point_residuals = Vec::with_capacity(pe.len());
    for (j, p) in pe.iter().enumerate() {
        let (i, d, second) = nearest(*p, &pk);
        if nearest(pk[i], &pe).0 != j {
            return Err(ConvergeError::StructuralMismatch(format!("triple point {j} has no mutual nearest partner")));
        }
        if second < 2.0 * d {
            return Err(ConvergeError::Ambiguous(format!("triple point {j}: candidates at {d:.3e} and {second:.3e}")));
        }
        triple_points.push(i);
        point_residuals.push(d);
    }
    let mut used = vec![false; ek.interfaces.len()];
    let mut interfaces = Vec::with_capacity(e.interfaces.len());
    let mut hausdorff_residuals = Vec::with_capacity(e.interfaces.len());
    let mut conormal_residuals = Vec::with_capacity(e.interfaces.len());
    for (li, iface) in e.interfaces.iter().enumerate() {
        let closed = iface.curve.is_closed();
        let ends = if closed {
            None
        } else {
            let s = node_at(e, iface.id, End::Start).map(|j| triple_points[j]);
            let t = node_at(e, iface.id, End::End).map(|j| triple_points[j]);
            Some((s, t))
        };
        let mut best: Option<(usize, bool, f64)> = None;
        for (ki, cand) in ek.interfaces.iter().enumerate() {
            if used[ki] || cand.chambers != iface.chambers || cand.curve.is_closed() != closed {
                continue;
            }
            let reversed = match ends {
                None => false,
                Some((s, t)) => {
                    let cs = node_at(ek, cand.id, End::Start);
                    let ct = node_at(ek, cand.id, End::End);
                    if (cs, ct) == (s, t) {
                        false
                    } else if (cs, ct) == (t, s) {
                        true
                    } else {
                        continue;
                    }
                }
            };
            let hd = hausdorff(iface.curve.points(), cand.curve.points(), None);
            if best.is_none_or(|b| hd < b.2) {
                best = Some((ki, reversed, hd));
            }
        }
        let (ki, reversed, hd) = best.ok_or_else(|| {
            ConvergeError::StructuralMismatch(format!("interface {} has no counterpart", iface.id))
        })?;
        used[ki] = true;
        interfaces.push(InterfaceMatch { limit: li, approx: ki, reversed });
        hausdorff_residuals.push(hd);
        let dev = if closed {
            0.0
        } else {
            let c = &ek.interfaces[ki].curve;
            let c = if reversed { c.reversed() } else { c.clone() };
            let ds = (iface.curve.co_normal(End::Start)? - c.co_normal(End::Start)?).norm();
            let dt = (iface.curve.co_normal(End::End)? - c.co_normal(End::End)?).norm();
            ds.max(dt)
        };
        conormal_residuals.push(dev);
    }
    Ok(StructureMatch { triple_points, interfaces, point_residuals, hausdorff_residuals, conormal_residuals })
}

/// Normal graph of a target curve over a source curve, on the samples of
/// the source at distance `>= rho` from its endpoints.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalGraph {
    pub range: std::ops::Range<usize>,
    pub values: Vec<f64>,
    pub c0: f64,
    /// `c0 + sup |Δψ / Δs|`.
    pub c1: f64,
}

impl NormalGraph {
    /// Values on every source sample, `None` outside the trimmed range.
    pub fn on_samples(&self, n: usize) -> Vec<Option<f64>> {
        (0..n).map(|i| if self.range.contains(&i) { Some(self.values[i - self.range.start]) } else { None }).collect()
    }
}

/// Solves `d_S(x + ψ(x) ν(x)) = 0` at each trimmed sample of `source`,
/// with the target continued by `extension` past its ends.
pub fn normal_graph(source: &Curve, target: &Curve, rho: f64, extension: f64) -> Result<NormalGraph, ConvergeError> {
    let range = source.trim_range(rho)?;
    let ext = target.extend_ends(extension)?;
    let dist = DistanceMap::with_collar(&ext, default_collar(&ext));
    let tol = 1e-10 * source.length();
    let frames = source.frames();
    let mut values = Vec::with_capacity(range.len());
    for i in range.clone() {
        let x = source.point(i);
        let nu = frames[i].normal;
        let t = find_root(|t| dist.eval(x + nu * t).map(|v| v.0), dist.collar(), tol)
            .ok_or(ConvergeError::GraphBracket { sample: i })?;
        values.push(t);
    }
    let s = source.arclengths();
    let c0 = values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let slope = (1..values.len())
        .map(|j| {
            let i = range.start + j;
            ((values[j] - values[j - 1]) / (s[i] - s[i - 1])).abs()
        })
        .fold(0.0, f64::max);
    Ok(NormalGraph { range, values, c0, c1: c0 + slope })
}

/// Largest `|κ_k - κ|` over the samples of `approx`, comparing with the
/// curvature of `limit` interpolated at the nearest point.
pub fn curvature_deviation(limit: &Curve, approx: &Curve) -> f64 {
    let kl = limit.curvatures();
    let ka = approx.curvatures();
    let n = limit.len();
    approx
        .points()
        .iter()
        .zip(&ka)
        .map(|(p, k)| {
            let pr = limit.project(p);
            let j = (pr.segment + 1) % n;
            let k0 = kl[pr.segment] * (1.0 - pr.t) + kl[j] * pr.t;
            (k - k0).abs()
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub k: usize,
    pub delta: f64,
    pub hd_boundary: f64,
    pub hd_singular: f64,
    pub max_point_residual: f64,
    pub psi_c0: f64,
    pub psi_c1: f64,
    pub f_c0: f64,
    pub f_c1: f64,
    pub f_c11: f64,
    pub tangential_c1: f64,
    /// `sup |f - Id|` on the singular set.
    pub singular_c0: f64,
    /// `tangential_c1 μ / singular_c0`.
    pub tangential_ratio: f64,
    pub curvature_deviation: f64,
    /// Largest `|f - (Id + ψ ν)|` outside the collars.
    pub gluing_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub mu: f64,
    pub rho: f64,
    /// One entry per sequence member, in order.
    pub rows: Vec<Result<ReportRow, ConvergeError>>,
}

pub const REPORT_COLUMNS: [&str; 17] = [
    "k",
    "status",
    "delta",
    "hd_boundary",
    "hd_singular",
    "max_point_residual",
    "psi_c0",
    "psi_c1",
    "f_c0",
    "f_c1",
    "f_c11",
    "tangential_c1",
    "singular_c0",
    "tangential_ratio",
    "curvature_deviation",
    "gluing_error",
    "message",
];

impl ConvergenceReport {
    pub fn successes(&self) -> impl Iterator<Item = &ReportRow> {
        self.rows.iter().filter_map(|r| r.as_ref().ok())
    }

    /// CSV with the columns of [`REPORT_COLUMNS`]; failed rows leave the
    /// numeric fields empty.
    pub fn write_csv(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "{}", REPORT_COLUMNS.join(","))?;
        for (k, row) in self.rows.iter().enumerate() {
            match row {
                Ok(r) => writeln!(
                    w,
                    "{k},ok,{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},",
                    r.delta,
                    r.hd_boundary,
                    r.hd_singular,
                    r.max_point_residual,
                    r.psi_c0,
                    r.psi_c1,
                    r.f_c0,
                    r.f_c1,
                    r.f_c11,
                    r.tangential_c1,
                    r.singular_c0,
                    r.tangential_ratio,
                    r.curvature_deviation,
                    r.gluing_error
                )?,
                Err(e) => writeln!(w, "{k},failed,,,,,,,,,,,,,,,\"{}\"", e.to_string().replace('"', "'"))?,
            }
        }
        Ok(())
    }
}

fn report_row(
    e: &PlanarCluster,
    ek: &PlanarCluster,
    k: usize,
    mu: f64,
    rho: f64,
) -> Result<ReportRow, ConvergeError> {
    let m = match_structure(e, ek)?;
    let mut row = ReportRow {
        k,
        delta: cluster_delta(e, ek)?,
        hd_boundary: boundary_hausdorff(e, ek),
        hd_singular: singular_hausdorff(e, ek),
        max_point_residual: m.max_point_residual(),
        psi_c0: 0.0,
        psi_c1: 0.0,
        f_c0: 0.0,
        f_c1: 0.0,
        f_c11: 0.0,
        tangential_c1: 0.0,
        singular_c0: m.max_point_residual(),
        tangential_ratio: 0.0,
        curvature_deviation: 0.0,
        gluing_error: 0.0,
    };
    let opts = DiffeoOptions::default();
    for (i, iface) in e.interfaces.iter().enumerate() {
        let source = &iface.curve;
        let target = m.oriented_curve(ek, i);
        row.curvature_deviation = row.curvature_deviation.max(curvature_deviation(source, &target));
        let graph = normal_graph(source, &target, rho, opts.extension * mu)?;
        row.psi_c0 = row.psi_c0.max(graph.c0);
        row.psi_c1 = row.psi_c1.max(graph.c1);
        if source.is_closed() {
            // no boundary: the map is the normal graph itself
            let frames = source.frames();
            let s = source.arclengths();
            let disp: Vec<Point> = frames.iter().zip(&graph.values).map(|(f, v)| f.normal * *v).collect();
            let n = disp.len();
            let mut slope: f64 = 0.0;
            for j in 0..n {
                let h = if j + 1 < n { s[j + 1] - s[j] } else { source.length() - s[j] };
                slope = slope.max((disp[(j + 1) % n] - disp[j]).norm() / h);
            }
            row.f_c0 = row.f_c0.max(graph.c0);
            row.f_c1 = row.f_c1.max(graph.c0 + slope);
            continue;
        }
        let f0 = |end: End| {
            let j = node_at(e, iface.id, end).map(|j| m.triple_points[j]);
            j.map_or_else(|| target.endpoint(end).expect("open curve"), |j| ek.triple_points[j].position)
        };
        let psi = graph.on_samples(source.len());
        let d = build_diffeo(source, &target, (f0(End::Start), f0(End::End)), Some(&psi), mu, rho, &opts)?;
        let n = diffeo_norms(&d);
        row.f_c0 = row.f_c0.max(n.c0);
        row.f_c1 = row.f_c1.max(n.c1);
        row.f_c11 = row.f_c11.max(n.c11);
        row.tangential_c1 = row.tangential_c1.max(n.tangential_c1);
        row.gluing_error = row.gluing_error.max(d.gluing_error.unwrap_or(0.0));
    }
    row.tangential_ratio = if row.singular_c0 > 0.0 { row.tangential_c1 * mu / row.singular_c0 } else { 0.0 };
    Ok(row)
}

/// Builds the report row by row; a failing member marks its row failed.
pub fn improved_convergence_report(
    e: &PlanarCluster,
    sequence: &[PlanarCluster],
    mu: f64,
    rho: f64,
) -> Result<ConvergenceReport, ConvergeError> {
    if !(rho > 0.0 && rho < mu * mu) {
        return Err(ConvergeError::Precondition { mu, rho });
    }
    let rows = sequence.iter().enumerate().map(|(k, ek)| report_row(e, ek, k, mu, rho)).collect();
    Ok(ConvergenceReport { mu, rho, rows })
}

/// Least-squares slope of `log2 y` against `log2 x`.
pub fn log_slope(x: &[f64], y: &[f64]) -> f64 {
    let lx: Vec<f64> = x.iter().map(|v| v.log2()).collect();
    let ly: Vec<f64> = y.iter().map(|v| v.log2()).collect();
    let n = lx.len() as f64;
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = lx.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// SVG overlay of a limit network (solid black) and an approximation
/// (dashed red); triple points as filled disks.
pub fn overlay_svg(limit: &PlanarCluster, approx: &PlanarCluster) -> String {
    svg(limit, Some(approx))
}

/// SVG drawing of a single network.
pub fn cluster_svg(c: &PlanarCluster) -> String {
    svg(c, None)
}

fn svg(limit: &PlanarCluster, approx: Option<&PlanarCluster>) -> String {
    let (mut lo, mut hi) = limit.bounding_box();
    if let Some(a) = approx {
        let (lo2, hi2) = a.bounding_box();
        lo = lo.inf(&lo2);
        hi = hi.sup(&hi2);
    }
    let pad = 0.05 * (hi - lo).max();
    lo -= Point::new(pad, pad);
    hi += Point::new(pad, pad);
    let size = hi - lo;
    let width = 600.0;
    let scale = width / size.x.max(size.y);
    let map = |p: &Point| ((p.x - lo.x) * scale, (hi.y - p.y) * scale);
    let mut s = String::new();
    let _ = writeln!(
        s,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{:.0}\" height=\"{:.0}\">",
        size.x * scale,
        size.y * scale
    );
    let mut draw = |c: &PlanarCluster, style: &str, fill: &str| {
        for iface in &c.interfaces {
            let pts: Vec<String> = iface
                .curve
                .points()
                .iter()
                .map(|p| {
                    let (x, y) = map(p);
                    format!("{x:.3},{y:.3}")
                })
                .collect();
            let tag = if iface.curve.is_closed() { "polygon" } else { "polyline" };
            let _ = writeln!(s, "<{tag} points=\"{}\" fill=\"none\" {style}/>", pts.join(" "));
        }
        for t in &c.triple_points {
            let (x, y) = map(&t.position);
            let _ = writeln!(s, "<circle cx=\"{x:.3}\" cy=\"{y:.3}\" r=\"4\" fill=\"{fill}\"/>");
        }
    };
    draw(limit, "stroke=\"black\" stroke-width=\"2\"", "black");
    if let Some(a) = approx {
        draw(a, "stroke=\"red\" stroke-width=\"1.5\" stroke-dasharray=\"6 4\"", "red");
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::shapes;

    #[test]
    fn identical_clusters_match_with_zero_residuals() {
        let e = shapes::double_bubble(1.0, 1.0, 128);
        let m = match_structure(&e, &e).unwrap();
        assert_eq!(m.triple_points, vec![0, 1]);
        assert!(m.interfaces.iter().enumerate().all(|(i, im)| im.approx == i && !im.reversed));
        assert_eq!(m.max_point_residual(), 0.0);
        assert!(m.hausdorff_residuals.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn translated_cluster_matches() {
        let e = shapes::double_bubble(1.0, 1.0, 128);
        let ek = e.translated(Point::new(1e-3, 0.0));
        let m = match_structure(&e, &ek).unwrap();
        for r in &m.point_residuals {
            assert!((r - 1e-3).abs() < 1e-15);
        }
    }

    #[test]
    fn count_mismatch_is_structural() {
        let e = shapes::double_bubble(1.0, 1.0, 128);
        let d = shapes::disk(Point::zeros(), 1.0, 64);
        assert!(matches!(match_structure(&e, &d), Err(ConvergeError::StructuralMismatch(_))));
    }

    #[test]
    fn constant_offset_graph() {
        let s = Curve::segment(Point::new(0.0, 0.0), Point::new(1.0, 0.0), 101).unwrap();
        let t = s.translated(Point::new(0.0, -0.01));
        let g = normal_graph(&s, &t, 0.02, 0.1).unwrap();
        assert!(g.values.iter().all(|v| (v - 0.01).abs() < 1e-12));
        assert!((g.c1 - g.c0) < 1e-9);
    }

    #[test]
    fn slope_of_a_power_law() {
        let x = [1.0, 0.5, 0.25, 0.125];
        let y: Vec<f64> = x.iter().map(|v: &f64| 3.0 * v.powf(1.5)).collect();
        assert!((log_slope(&x, &y) - 1.5).abs() < 1e-12);
    }
}

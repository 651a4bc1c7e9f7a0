//! Planar N-clusters as curve networks.
//!
//! Chamber `0` is the unbounded exterior. An [`Interface`] separating
//! chambers `h < k` is oriented so that its normal (right-hand perp of the
//! tangent) points from `h` into `k`: chamber `h` lies on the left of the
//! direction of travel, chamber `k` on the right.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::fmt;

use thiserror::Error;

use crate::geom::{hausdorff, Curve, Disk, End, GeomError, Point, TOL_X_REL};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ClusterError {
    #[error("chamber {chamber} has no closed boundary cycle")]
    OpenChamber { chamber: usize },
    #[error("invalid cluster: {0}")]
    Invalid(String),
    #[error("grid does not cover both clusters")]
    GridTooSmall,
    #[error("cluster chamber counts differ ({0} vs {1})")]
    ChamberCountMismatch(usize, usize),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct Interface {
    pub id: usize,
    /// `(h, k)` with `h < k`; the normal points from `h` into `k`.
    pub chambers: (usize, usize),
    pub curve: Curve,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TriplePoint {
    pub position: Point,
    /// `(interface id, end)` pairs; a valid triple point has exactly three.
    pub incident: Vec<(usize, End)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlanarCluster {
    pub n_chambers: usize,
    pub interfaces: Vec<Interface>,
    pub triple_points: Vec<TriplePoint>,
    /// Open set the cluster lives in. Interface ends lying on the window
    /// boundary are free; without a window every open end must sit at a
    /// triple point.
    pub window: Option<Disk>,
}

/// One oriented traversal of an interface; chamber `chamber` is on its left.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct HalfEdge {
    pub interface: usize,
    pub forward: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Violation {
    DuplicateId { id: usize },
    BadChambers { interface: usize, h: usize, k: usize },
    Incidence { triple_point: usize, count: usize },
    UnknownInterface { triple_point: usize, interface: usize },
    ClosedIncident { triple_point: usize, interface: usize },
    EndpointOff { triple_point: usize, interface: usize, end: End, gap: f64 },
    Dangling { interface: usize, end: End },
    MultiplyAttached { interface: usize, end: End },
    CountIdentity { attached_ends: usize, triple_points: usize },
    InconsistentLabels { triple_point: usize, chamber: usize },
    OpenChamber { chamber: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateId { id } => write!(f, "duplicate interface id {id}"),
            Violation::BadChambers { interface, h, k } => {
                write!(f, "interface {interface}: chamber pair ({h},{k}) invalid")
            }
            Violation::Incidence { triple_point, count } => {
                write!(f, "triple point {triple_point}: {count} incidences, expected 3")
            }
            Violation::UnknownInterface { triple_point, interface } => {
                write!(f, "triple point {triple_point}: unknown interface {interface}")
            }
            Violation::ClosedIncident { triple_point, interface } => {
                write!(f, "triple point {triple_point}: closed interface {interface} has no endpoint")
            }
            Violation::EndpointOff { triple_point, interface, end, gap } => write!(
                f,
                "triple point {triple_point}: interface {interface} {end:?} is {gap:e} away"
            ),
            Violation::Dangling { interface, end } => {
                write!(f, "interface {interface}: dangling {end:?} endpoint")
            }
            Violation::MultiplyAttached { interface, end } => {
                write!(f, "interface {interface}: {end:?} endpoint attached to several triple points")
            }
            Violation::CountIdentity { attached_ends, triple_points } => write!(
                f,
                "{attached_ends} attached interface ends but {triple_points} triple points"
            ),
            Violation::InconsistentLabels { triple_point, chamber } => write!(
                f,
                "triple point {triple_point}: chamber {chamber} labels disagree with geometry"
            ),
            Violation::OpenChamber { chamber } => write!(f, "chamber {chamber} boundary does not close"),
        }
    }
}

/// Result of [`PlanarCluster::validate`].
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Diagnostics {
    pub violations: Vec<Violation>,
}

impl Diagnostics {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for Diagnostics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.violations.is_empty() {
            return writeln!(f, "valid");
        }
        for v in &self.violations {
            writeln!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Node of the half-edge graph: a triple point or a free window end.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Node {
    Triple(usize),
    Free,
}

impl PlanarCluster {
    pub fn new(n_chambers: usize, interfaces: Vec<Interface>, triple_points: Vec<TriplePoint>) -> Self {
        PlanarCluster { n_chambers, interfaces, triple_points, window: None }
    }

    pub fn with_window(mut self, window: Disk) -> Self {
        self.window = Some(window);
        self
    }

    /// Coincidence tolerance: `TOL_X_REL` times the network length.
    pub fn tol_x(&self) -> f64 {
        TOL_X_REL * self.perimeter().max(1.0)
    }

    pub fn interface_index(&self, id: usize) -> Option<usize> {
        self.interfaces.iter().position(|i| i.id == id)
    }

    pub fn interface(&self, id: usize) -> Option<&Interface> {
        self.interfaces.iter().find(|i| i.id == id)
    }

    /// Sum of interface lengths; each interface borders exactly two
    /// chambers, so this is half the sum of chamber perimeters.
    pub fn perimeter(&self) -> f64 {
        self.interfaces.iter().map(|i| i.curve.length()).sum()
    }

    /// Perimeter of a single chamber.
    pub fn chamber_perimeter(&self, chamber: usize) -> f64 {
        self.interfaces
            .iter()
            .filter(|i| i.chambers.0 == chamber || i.chambers.1 == chamber)
            .map(|i| i.curve.length())
            .sum()
    }

    pub fn singular_set(&self) -> Vec<Point> {
        self.triple_points.iter().map(|t| t.position).collect()
    }

    /// All network samples.
    pub fn network_points(&self) -> Vec<Point> {
        self.interfaces.iter().flat_map(|i| i.curve.points().iter().copied()).collect()
    }

    pub fn translated(&self, d: Point) -> PlanarCluster {
        self.map_points(|p| p + d).expect("translation preserves validity")
    }

    pub fn map_points(&self, f: impl Fn(&Point) -> Point) -> Result<PlanarCluster, ClusterError> {
        let interfaces = self
            .interfaces
            .iter()
            .map(|i| Ok(Interface { id: i.id, chambers: i.chambers, curve: i.curve.map_points(&f)? }))
            .collect::<Result<Vec<_>, GeomError>>()?;
        let triple_points = self
            .triple_points
            .iter()
            .map(|t| TriplePoint { position: f(&t.position), incident: t.incident.clone() })
            .collect();
        Ok(PlanarCluster {
            n_chambers: self.n_chambers,
            interfaces,
            triple_points,
            window: self.window,
        })
    }

    fn on_window_boundary(&self, p: &Point, tol: f64) -> bool {
        self.window.map_or(false, |w| ((p - w.center).norm() - w.radius).abs() <= tol)
    }

    pub fn validate(&self) -> Diagnostics {
        self.validate_with(self.tol_x())
    }

    /// Topological checks only; angles are left to [`plateau_check`].
    pub fn validate_with(&self, tol_x: f64) -> Diagnostics {
        let mut v = Vec::new();
        let mut seen = BTreeMap::new();
        for iface in &self.interfaces {
            if seen.insert(iface.id, ()).is_some() {
                v.push(Violation::DuplicateId { id: iface.id });
            }
            let (h, k) = iface.chambers;
            if h >= k || k > self.n_chambers {
                v.push(Violation::BadChambers { interface: iface.id, h, k });
            }
        }
        let mut attached: BTreeMap<(usize, End), usize> = BTreeMap::new();
        for (t, tp) in self.triple_points.iter().enumerate() {
            if tp.incident.len() != 3 {
                v.push(Violation::Incidence { triple_point: t, count: tp.incident.len() });
            }
            for &(id, end) in &tp.incident {
                let Some(iface) = self.interface(id) else {
                    v.push(Violation::UnknownInterface { triple_point: t, interface: id });
                    continue;
                };
                let Some(p) = iface.curve.endpoint(end) else {
                    v.push(Violation::ClosedIncident { triple_point: t, interface: id });
                    continue;
                };
                let gap = (p - tp.position).norm();
                if gap > tol_x {
                    v.push(Violation::EndpointOff { triple_point: t, interface: id, end, gap });
                }
                *attached.entry((id, end)).or_default() += 1;
            }
        }
        let mut attached_ends = 0;
        for iface in self.interfaces.iter().filter(|i| !i.curve.is_closed()) {
            for end in [End::Start, End::End] {
                match attached.get(&(iface.id, end)).copied().unwrap_or(0) {
                    0 => {
                        let p = iface.curve.endpoint(end).expect("open curve");
                        if !self.on_window_boundary(&p, tol_x) {
                            v.push(Violation::Dangling { interface: iface.id, end });
                        }
                    }
                    1 => attached_ends += 1,
                    _ => v.push(Violation::MultiplyAttached { interface: iface.id, end }),
                }
            }
        }
        if attached_ends != 3 * self.triple_points.len() {
            v.push(Violation::CountIdentity {
                attached_ends,
                triple_points: self.triple_points.len(),
            });
        }
        if v.is_empty() {
            match self.trace_cycles() {
                Ok(tr) => {
                    for (tp, chamber) in tr.inconsistent {
                        v.push(Violation::InconsistentLabels { triple_point: tp, chamber });
                    }
                    for c in 0..=self.n_chambers {
                        let has_closed = tr.cycles.iter().any(|(ch, _)| *ch == c);
                        let touches_window = tr.open_chambers.contains(&c);
                        // a windowed cluster need not see the exterior at all
                        let absent_exterior = c == 0
                            && self.window.is_some()
                            && !self.interfaces.iter().any(|i| i.chambers.0 == 0);
                        if !has_closed && !touches_window && !absent_exterior {
                            v.push(Violation::OpenChamber { chamber: c });
                        }
                    }
                }
                Err(msg) => v.push(Violation::OpenChamber { chamber: msg }),
            }
        }
        Diagnostics { violations: v }
    }

    fn half_edge_chamber(&self, he: HalfEdge) -> usize {
        let (h, k) = self.interfaces[he.interface].chambers;
        if he.forward {
            h
        } else {
            k
        }
    }

    /// Start/end node and outgoing direction of a half-edge at its start.
    fn half_edge_ends(&self, he: HalfEdge, nodes: &BTreeMap<(usize, End), Node>) -> (Node, Node) {
        let id = self.interfaces[he.interface].id;
        let s = nodes.get(&(id, End::Start)).copied().unwrap_or(Node::Free);
        let e = nodes.get(&(id, End::End)).copied().unwrap_or(Node::Free);
        if he.forward {
            (s, e)
        } else {
            (e, s)
        }
    }

    fn outgoing_direction(&self, he: HalfEdge) -> Point {
        let pts = self.interfaces[he.interface].curve.points();
        let n = pts.len();
        if he.forward {
            pts[1] - pts[0]
        } else {
            pts[n - 2] - pts[n - 1]
        }
    }

    /// Half-edge traversal: at each triple point the successor of an
    /// incoming half-edge is the first outgoing half-edge clockwise from its
    /// twin, which keeps the traced face on the left.
    fn trace_cycles(&self) -> Result<Traced, usize> {
        let mut nodes: BTreeMap<(usize, End), Node> = BTreeMap::new();
        for (t, tp) in self.triple_points.iter().enumerate() {
            for &(id, end) in &tp.incident {
                nodes.insert((id, end), Node::Triple(t));
            }
        }
        let mut visited: BTreeMap<HalfEdge, bool> = BTreeMap::new();
        let mut cycles = Vec::new();
        let mut open_chambers = Vec::new();
        let mut inconsistent = Vec::new();
        for (idx, iface) in self.interfaces.iter().enumerate() {
            for forward in [true, false] {
                let he = HalfEdge { interface: idx, forward };
                if visited.contains_key(&he) {
                    continue;
                }
                let chamber = self.half_edge_chamber(he);
                if iface.curve.is_closed() {
                    visited.insert(he, true);
                    cycles.push((chamber, vec![he]));
                    continue;
                }
                let mut cycle = vec![he];
                visited.insert(he, true);
                let mut cur = he;
                let mut closed = false;
                for _ in 0..(2 * self.interfaces.len() + 2) {
                    let (_, end_node) = self.half_edge_ends(cur, &nodes);
                    let Node::Triple(t) = end_node else { break };
                    let twin = HalfEdge { interface: cur.interface, forward: !cur.forward };
                    let twin_dir = self.outgoing_direction(twin);
                    let twin_ang = twin_dir.y.atan2(twin_dir.x);
                    // candidates: half-edges leaving triple point t
                    let mut best: Option<(f64, HalfEdge)> = None;
                    for &(id, end) in &self.triple_points[t].incident {
                        let Some(ii) = self.interface_index(id) else { continue };
                        let out = HalfEdge { interface: ii, forward: end == End::Start };
                        if out == twin {
                            continue;
                        }
                        let d = self.outgoing_direction(out);
                        let mut cw = twin_ang - d.y.atan2(d.x);
                        while cw <= 0.0 {
                            cw += 2.0 * PI;
                        }
                        while cw > 2.0 * PI {
                            cw -= 2.0 * PI;
                        }
                        if best.map_or(true, |(b, _)| cw < b) {
                            best = Some((cw, out));
                        }
                    }
                    let Some((_, next)) = best else { break };
                    if self.half_edge_chamber(next) != chamber {
                        inconsistent.push((t, chamber));
                        break;
                    }
                    if next == he {
                        closed = true;
                        break;
                    }
                    if visited.contains_key(&next) {
                        break;
                    }
                    visited.insert(next, true);
                    cycle.push(next);
                    cur = next;
                }
                if closed {
                    cycles.push((chamber, cycle));
                } else {
                    open_chambers.push(chamber);
                }
            }
        }
        inconsistent.sort();
        inconsistent.dedup();
        Ok(Traced { cycles, open_chambers, inconsistent })
    }

    /// Closed boundary cycles, each tagged with the chamber on its left.
    pub fn chamber_cycles(&self) -> Vec<(usize, Vec<HalfEdge>)> {
        self.trace_cycles().map(|t| t.cycles).unwrap_or_default()
    }

    /// Boundary polygon of a cycle, concatenating half-edge samples.
    pub fn cycle_polygon(&self, cycle: &[HalfEdge]) -> Vec<Point> {
        let mut poly = Vec::new();
        for he in cycle {
            let pts = self.interfaces[he.interface].curve.points();
            let closed = self.interfaces[he.interface].curve.is_closed();
            let mut seq: Vec<Point> = pts.to_vec();
            if !he.forward {
                seq.reverse();
            }
            if closed {
                poly.extend(seq);
            } else {
                // drop the last sample: it is the first of the next half-edge
                poly.extend_from_slice(&seq[..seq.len() - 1]);
            }
        }
        poly
    }

    /// Signed shoelace contribution of a half-edge.
    fn half_edge_area(&self, he: HalfEdge) -> f64 {
        let c = &self.interfaces[he.interface].curve;
        let a = crate::geom::shoelace(c.points(), c.is_closed());
        if he.forward {
            a
        } else {
            -a
        }
    }

    /// Areas of chambers `1..=N`.
    pub fn areas(&self) -> Result<Vec<f64>, ClusterError> {
        let tr = self.trace_cycles().map_err(|c| ClusterError::OpenChamber { chamber: c })?;
        let mut areas = vec![0.0; self.n_chambers + 1];
        let mut has = vec![false; self.n_chambers + 1];
        for (chamber, cycle) in &tr.cycles {
            if *chamber > self.n_chambers {
                continue;
            }
            has[*chamber] = true;
            areas[*chamber] += cycle.iter().map(|he| self.half_edge_area(*he)).sum::<f64>();
        }
        for c in 1..=self.n_chambers {
            if !has[c] || tr.open_chambers.contains(&c) {
                return Err(ClusterError::OpenChamber { chamber: c });
            }
        }
        Ok(areas[1..].to_vec())
    }

    /// Axis-aligned bounding box `(min, max)` of the network.
    pub fn bounding_box(&self) -> (Point, Point) {
        let mut lo = Point::new(f64::INFINITY, f64::INFINITY);
        let mut hi = Point::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
        for p in self.network_points() {
            lo = Point::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        (lo, hi)
    }

    /// Chamber label of every grid cell centre (0 = exterior).
    pub fn rasterize(&self, grid: &Grid) -> Vec<usize> {
        let mut labels = vec![0usize; grid.nx * grid.ny];
        let cycles = self.chamber_cycles();
        for c in 1..=self.n_chambers {
            let polys: Vec<Vec<Point>> = cycles
                .iter()
                .filter(|(ch, _)| *ch == c)
                .map(|(_, cyc)| self.cycle_polygon(cyc))
                .collect();
            let winding = grid.winding(&polys);
            for (l, w) in labels.iter_mut().zip(winding) {
                if w != 0 && *l == 0 {
                    *l = c;
                }
            }
        }
        labels
    }

    /// Length of the network inside the disk `B(x, r)`.
    pub fn length_in_disk(&self, x: Point, r: f64) -> f64 {
        let mut total = 0.0;
        for iface in &self.interfaces {
            let pts = iface.curve.points();
            let n = pts.len();
            for i in 0..iface.curve.segment_count() {
                total += segment_length_in_disk(pts[i], pts[(i + 1) % n], x, r);
            }
        }
        total
    }
}

struct Traced {
    cycles: Vec<(usize, Vec<HalfEdge>)>,
    open_chambers: Vec<usize>,
    inconsistent: Vec<(usize, usize)>,
}

fn segment_length_in_disk(a: Point, b: Point, x: Point, r: f64) -> f64 {
    let d = b - a;
    let l2 = d.norm_squared();
    if l2 == 0.0 {
        return 0.0;
    }
    let f = a - x;
    // |f + t d|^2 = r^2
    let bq = f.dot(&d) / l2;
    let cq = (f.norm_squared() - r * r) / l2;
    let disc = bq * bq - cq;
    if disc <= 0.0 {
        return 0.0;
    }
    let s = disc.sqrt();
    let t0 = (-bq - s).max(0.0);
    let t1 = (-bq + s).min(1.0);
    if t1 <= t0 {
        0.0
    } else {
        (t1 - t0) * l2.sqrt()
    }
}

/// Regular grid of square cells used for rasterized area comparisons.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    pub origin: Point,
    pub cell: f64,
    pub nx: usize,
    pub ny: usize,
}

impl Grid {
    /// `n` cells along the longer side of the box padded by `pad` (relative).
    pub fn covering(lo: Point, hi: Point, n: usize, pad: f64) -> Grid {
        let size = (hi - lo).abs();
        let side = size.x.max(size.y) * (1.0 + 2.0 * pad);
        let side = if side > 0.0 { side } else { 1.0 };
        let cell = side / n as f64;
        let mid = (lo + hi) * 0.5;
        let nx = ((size.x * (1.0 + 2.0 * pad)) / cell).ceil().max(1.0) as usize;
        let ny = ((size.y * (1.0 + 2.0 * pad)) / cell).ceil().max(1.0) as usize;
        let origin = mid - Point::new(nx as f64 * cell, ny as f64 * cell) * 0.5;
        Grid { origin, cell, nx, ny }
    }

    pub fn max_corner(&self) -> Point {
        self.origin + Point::new(self.nx as f64 * self.cell, self.ny as f64 * self.cell)
    }

    pub fn contains_box(&self, lo: Point, hi: Point) -> bool {
        let top = self.max_corner();
        lo.x >= self.origin.x && lo.y >= self.origin.y && hi.x <= top.x && hi.y <= top.y
    }

    pub fn cell_center(&self, ix: usize, iy: usize) -> Point {
        self.origin + Point::new((ix as f64 + 0.5) * self.cell, (iy as f64 + 0.5) * self.cell)
    }

    pub fn cell_area(&self) -> f64 {
        self.cell * self.cell
    }

    /// Winding number of every cell centre with respect to closed polygons,
    /// by scanline crossing accumulation.
    pub fn winding(&self, polys: &[Vec<Point>]) -> Vec<i32> {
        let mut out = vec![0i32; self.nx * self.ny];
        let mut crossings: Vec<(f64, i32)> = Vec::new();
        for iy in 0..self.ny {
            let y = self.origin.y + (iy as f64 + 0.5) * self.cell;
            crossings.clear();
            for poly in polys {
                let n = poly.len();
                for i in 0..n {
                    let a = poly[i];
                    let b = poly[(i + 1) % n];
                    let up = a.y <= y && b.y > y;
                    let down = b.y <= y && a.y > y;
                    if up || down {
                        let t = (y - a.y) / (b.y - a.y);
                        let x = a.x + t * (b.x - a.x);
                        crossings.push((x, if up { 1 } else { -1 }));
                    }
                }
            }
            if crossings.is_empty() {
                continue;
            }
            crossings.sort_by(|p, q| p.0.total_cmp(&q.0));
            // winding at x = -(sum of signs of crossings to the right)
            // equivalently accumulate from the left with reversed sign
            let mut w = 0i32;
            let mut ci = 0;
            for ix in 0..self.nx {
                let x = self.origin.x + (ix as f64 + 0.5) * self.cell;
                while ci < crossings.len() && crossings[ci].0 < x {
                    w -= crossings[ci].1;
                    ci += 1;
                }
                out[iy * self.nx + ix] = w;
            }
        }
        out
    }
}

/// Default resolution of the δ-distance grid.
pub const DELTA_GRID: usize = 512;

/// `δ(E, F) = 1/2 Σ_h |E(h) Δ F(h)|` on the default grid.
pub fn cluster_delta(e: &PlanarCluster, f: &PlanarCluster) -> Result<f64, ClusterError> {
    cluster_delta_on(e, f, None)
}

/// δ-distance on a given grid (or the joint bounding box padded by 10%).
/// Every mismatched cell lies in two symmetric differences, so the
/// half-sum is the total mismatched area.
pub fn cluster_delta_on(
    e: &PlanarCluster,
    f: &PlanarCluster,
    grid: Option<Grid>,
) -> Result<f64, ClusterError> {
    if e.n_chambers != f.n_chambers {
        return Err(ClusterError::ChamberCountMismatch(e.n_chambers, f.n_chambers));
    }
    let (lo1, hi1) = e.bounding_box();
    let (lo2, hi2) = f.bounding_box();
    let lo = Point::new(lo1.x.min(lo2.x), lo1.y.min(lo2.y));
    let hi = Point::new(hi1.x.max(hi2.x), hi1.y.max(hi2.y));
    let grid = match grid {
        Some(g) => {
            if !g.contains_box(lo, hi) {
                return Err(ClusterError::GridTooSmall);
            }
            g
        }
        None => Grid::covering(lo, hi, DELTA_GRID, 0.1),
    };
    let le = e.rasterize(&grid);
    let lf = f.rasterize(&grid);
    let mismatched = le.iter().zip(&lf).filter(|(a, b)| a != b).count();
    Ok(mismatched as f64 * grid.cell_area())
}

/// `θ(∂E, x, r)`: network length in `B(x, r)` over `r`.
pub fn density_ratio(c: &PlanarCluster, x: Point, r: f64) -> f64 {
    c.length_in_disk(x, r) / r
}

/// Angles at one triple point, in degrees, as counter-clockwise sectors
/// between consecutive incident curves.
#[derive(Debug, Clone, PartialEq)]
pub struct JunctionAngles {
    pub triple_point: usize,
    pub angles_deg: Vec<f64>,
    pub max_deviation_deg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct InterfaceCurvature {
    pub interface: usize,
    pub mean: f64,
    pub std_dev: f64,
    pub max_abs: f64,
    pub diameter: f64,
}

impl InterfaceCurvature {
    /// Spread allowed for a constant-curvature interface: a fraction of
    /// `mean |κ| + 0.01 / diameter`.
    pub fn constancy_floor(&self) -> f64 {
        self.mean.abs() + 0.01 / self.diameter.max(f64::MIN_POSITIVE)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlateauReport {
    pub junctions: Vec<JunctionAngles>,
    pub interfaces: Vec<InterfaceCurvature>,
    /// Interface ids of closed curves with diameter below `1 / (2Λ)`.
    pub small_closed: Vec<usize>,
    pub lambda: f64,
    pub tol_angle_deg: f64,
    pub tol_curv: f64,
}

impl PlateauReport {
    pub fn max_angle_deviation(&self) -> f64 {
        self.junctions.iter().map(|j| j.max_deviation_deg).fold(0.0, f64::max)
    }

    pub fn angles_ok(&self) -> bool {
        self.max_angle_deviation() <= self.tol_angle_deg
    }

    pub fn curvature_ok(&self) -> bool {
        self.interfaces
            .iter()
            .all(|i| i.std_dev <= self.tol_curv * i.constancy_floor() && i.max_abs <= self.lambda)
    }

    pub fn passes(&self) -> bool {
        self.angles_ok() && self.curvature_ok() && self.small_closed.is_empty()
    }
}

/// Plateau-law diagnostics: 120° junctions, constant curvature bounded
/// by `lambda`, closed interfaces no smaller than `1 / (2 lambda)`.
pub fn plateau_check(c: &PlanarCluster, lambda: f64, tol_angle_deg: f64, tol_curv: f64) -> PlateauReport {
    let mut junctions = Vec::new();
    for (t, tp) in c.triple_points.iter().enumerate() {
        let mut dirs: Vec<f64> = tp
            .incident
            .iter()
            .filter_map(|&(id, end)| {
                let co = c.interface(id)?.curve.co_normal(end).ok()?;
                let d = -co;
                Some(d.y.atan2(d.x))
            })
            .collect();
        dirs.sort_by(f64::total_cmp);
        let n = dirs.len();
        let angles_deg: Vec<f64> = (0..n)
            .map(|i| {
                let mut a = if i + 1 < n { dirs[i + 1] - dirs[i] } else { dirs[0] + 2.0 * PI - dirs[i] };
                if n == 1 {
                    a = 2.0 * PI;
                }
                a.to_degrees()
            })
            .collect();
        let max_deviation_deg = angles_deg.iter().map(|a| (a - 120.0).abs()).fold(0.0, f64::max);
        junctions.push(JunctionAngles { triple_point: t, angles_deg, max_deviation_deg });
    }
    let mut interfaces = Vec::new();
    let mut small_closed = Vec::new();
    for iface in &c.interfaces {
        let k = iface.curve.curvatures();
        let n = k.len() as f64;
        let mean = k.iter().sum::<f64>() / n;
        let var = k.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let max_abs = k.iter().fold(0.0_f64, |m, x| m.max(x.abs()));
        let diameter = diameter(iface.curve.points());
        if iface.curve.is_closed() && diameter < 1.0 / (2.0 * lambda) {
            small_closed.push(iface.id);
        }
        interfaces.push(InterfaceCurvature { interface: iface.id, mean, std_dev: var.sqrt(), max_abs, diameter });
    }
    PlateauReport { junctions, interfaces, small_closed, lambda, tol_angle_deg, tol_curv }
}

pub fn diameter(points: &[Point]) -> f64 {
    let mut d: f64 = 0.0;
    for i in 0..points.len() {
        for j in (i + 1)..points.len() {
            d = d.max((points[i] - points[j]).norm());
        }
    }
    d
}

/// Hausdorff distance between the networks of two clusters.
pub fn boundary_hausdorff(a: &PlanarCluster, b: &PlanarCluster) -> f64 {
    hausdorff(&a.network_points(), &b.network_points(), None)
}

/// Hausdorff distance between singular sets (0 when both are empty).
pub fn singular_hausdorff(a: &PlanarCluster, b: &PlanarCluster) -> f64 {
    hausdorff(&a.singular_set(), &b.singular_set(), None)
}

/// Canonical clusters used by tests, examples and the CLI.
pub mod shapes {
    use super::*;

    /// Chamber 1 is a disk bounded by a clockwise circle (normal inward).
    pub fn disk(center: Point, r: f64, samples: usize) -> PlanarCluster {
        let curve = Curve::circle(center, r, samples, false).expect("valid circle");
        PlanarCluster::new(1, vec![Interface { id: 0, chambers: (0, 1), curve }], vec![])
    }

    /// Axis-aligned unit square `[x0, x0+1] x [y0, y0+1]` as a 1-cluster.
    pub fn unit_square(x0: f64, y0: f64) -> PlanarCluster {
        let p = |x: f64, y: f64| Point::new(x0 + x, y0 + y);
        // clockwise, so the normal points inside
        let curve = Curve::closed(vec![p(0.0, 0.0), p(0.0, 1.0), p(1.0, 1.0), p(1.0, 0.0)])
            .expect("valid square");
        PlanarCluster::new(1, vec![Interface { id: 0, chambers: (0, 1), curve }], vec![])
    }

    /// Two unit squares `[0,1]²` (chamber 1) and `[1,2]x[0,1]` (chamber 2).
    pub fn two_squares() -> PlanarCluster {
        let p = Point::new;
        let shared = Curve::open(vec![p(1.0, 0.0), p(1.0, 1.0)]).unwrap();
        let left = Curve::open(vec![p(1.0, 0.0), p(0.0, 0.0), p(0.0, 1.0), p(1.0, 1.0)]).unwrap();
        let right = Curve::open(vec![p(1.0, 1.0), p(2.0, 1.0), p(2.0, 0.0), p(1.0, 0.0)]).unwrap();
        PlanarCluster::new(
            2,
            vec![
                Interface { id: 0, chambers: (1, 2), curve: shared },
                Interface { id: 1, chambers: (0, 1), curve: left },
                Interface { id: 2, chambers: (0, 2), curve: right },
            ],
            vec![
                TriplePoint {
                    position: p(1.0, 0.0),
                    incident: vec![(0, End::Start), (1, End::Start), (2, End::End)],
                },
                TriplePoint {
                    position: p(1.0, 1.0),
                    incident: vec![(0, End::End), (1, End::End), (2, End::Start)],
                },
            ],
        )
    }

    /// Standard double bubble with outer radii `r1` (chamber 1, left) and
    /// `r2` (chamber 2, right); the triple points lie on the y-axis.
    pub fn double_bubble(r1: f64, r2: f64, samples: usize) -> PlanarCluster {
        use crate::optimize::sample_arc;
        let d = (r1 * r1 + r2 * r2 - r1 * r2).sqrt();
        let s = r1 * r2 * (PI / 3.0).sin() / d;
        let a1 = r1 * (2.0 * r1 - r2) / (2.0 * d);
        let a2 = r2 * (2.0 * r2 - r1) / (2.0 * d);
        let top = Point::new(0.0, s);
        let bottom = Point::new(0.0, -s);
        // subtended angles; both outer arcs bulge to the left of travel
        let th1 = 2.0 * PI - 2.0 * s.atan2(a1);
        let th2 = 2.0 * PI - 2.0 * s.atan2(a2);
        let th3 = if r1 == r2 { 0.0 } else { 2.0 * (s * (r1 - r2).abs() / (r1 * r2)).asin() };
        let bulge = |th: f64| 0.5 * (0.25 * th).tan();
        let mid_sign = if r1 > r2 { -1.0 } else { 1.0 };
        let lengths = [r1 * th1, r2 * th2, if th3 == 0.0 { 2.0 * s } else { r1 * r2 / (r1 - r2).abs() * th3 }];
        let total: f64 = lengths.iter().sum();
        let count = |l: f64| ((samples as f64 * l / total).round() as usize).max(8) + 1;
        let outer1 = sample_arc(bottom, top, -bulge(th1), count(lengths[0]));
        let outer2 = sample_arc(top, bottom, -bulge(th2), count(lengths[1]));
        let middle = sample_arc(bottom, top, mid_sign * bulge(th3), count(lengths[2]));
        PlanarCluster::new(
            2,
            vec![
                Interface { id: 0, chambers: (0, 1), curve: Curve::open(outer1).unwrap() },
                Interface { id: 1, chambers: (0, 2), curve: Curve::open(outer2).unwrap() },
                Interface { id: 2, chambers: (1, 2), curve: Curve::open(middle).unwrap() },
            ],
            vec![
                TriplePoint { position: top, incident: vec![(0, End::End), (1, End::Start), (2, End::End)] },
                TriplePoint { position: bottom, incident: vec![(0, End::Start), (1, End::End), (2, End::Start)] },
            ],
        )
    }

    /// Steiner cone truncated to a disk: three segments from the origin at
    /// angles `rotation + j 2π/3`, with chamber `i` the sector between
    /// angles `(i-1) 2π/3` and `i 2π/3` (shifted by `rotation`).
    pub fn steiner_y2(radius: f64, samples: usize, rotation: f64) -> PlanarCluster {
        let o = Point::new(0.0, 0.0);
        let mut interfaces = Vec::new();
        let mut incident = Vec::new();
        for j in 0..3usize {
            let th = rotation + j as f64 * 2.0 * PI / 3.0;
            let tip = Point::new(radius * th.cos(), radius * th.sin());
            let outward = Curve::segment(o, tip, samples).unwrap();
            // walking outward, the sector at larger angle is on the left
            let left = j + 1;
            let right = if j == 0 { 3 } else { j };
            let (chambers, curve, end) = if left < right {
                ((left, right), outward, End::Start)
            } else {
                ((right, left), outward.reversed(), End::End)
            };
            interfaces.push(Interface { id: j, chambers, curve });
            incident.push((j, end));
        }
        PlanarCluster::new(3, interfaces, vec![TriplePoint { position: o, incident }])
            .with_window(Disk::new(o, radius))
    }
}

#[cfg(test)]
mod tests {
    use super::shapes::*;
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn single_disk_is_valid() {
        let c = disk(Point::zeros(), 1.0, 64);
        let d = c.validate();
        assert!(d.is_valid(), "{d}");
        assert!(c.triple_points.is_empty());
    }

    #[test]
    fn steiner_cone_is_valid() {
        let c = steiner_y2(1.0, 21, 0.0);
        let d = c.validate();
        assert!(d.is_valid(), "{d}");
        assert_eq!(c.triple_points.len(), 1);
        assert_eq!(c.interfaces.iter().filter(|i| !i.curve.is_closed()).count(), 3);
    }

    #[test]
    fn displaced_endpoint_dangles() {
        let mut c = steiner_y2(1.0, 21, 0.0);
        let tol = c.tol_x();
        let iface = &mut c.interfaces[1];
        let mut pts = iface.curve.points().to_vec();
        let idx = if pts[0].norm() < 1e-15 { 0 } else { pts.len() - 1 };
        pts[idx] += Point::new(10.0 * tol, 0.0);
        iface.curve = Curve::open(pts).unwrap();
        let d = c.validate();
        assert!(!d.is_valid());
        assert!(d.violations.iter().any(|v| matches!(v, Violation::EndpointOff { .. })));
    }

    #[test]
    fn two_squares_perimeter_and_areas() {
        let c = two_squares();
        assert!(c.validate().is_valid(), "{}", c.validate());
        assert_abs_diff_eq!(c.perimeter(), 7.0, epsilon = 1e-12);
        let half_sum: f64 = (0..=2).map(|h| c.chamber_perimeter(h)).sum::<f64>() / 2.0;
        assert_abs_diff_eq!(c.perimeter(), half_sum, epsilon = 1e-12);
        let a = c.areas().unwrap();
        assert_abs_diff_eq!(a[0], 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(a[1], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn swapped_labels_are_reported() {
        let mut c = two_squares();
        c.interfaces[0].curve = c.interfaces[0].curve.reversed();
        let d = c.validate();
        assert!(!d.is_valid());
    }

    #[test]
    fn disk_area_and_perimeter() {
        let c = disk(Point::new(0.5, -1.0), 1.0, 256);
        let a = c.areas().unwrap();
        assert!((a[0] - PI).abs() < 1e-3);
        assert!((c.perimeter() - 2.0 * PI).abs() < 1e-3);
        assert_abs_diff_eq!(unit_square(3.0, 2.0).areas().unwrap()[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn delta_examples() {
        let a = unit_square(0.0, 0.0);
        assert_eq!(cluster_delta(&a, &a).unwrap(), 0.0);
        let b = unit_square(2.0, 0.0);
        let d = cluster_delta(&a, &b).unwrap();
        assert!((d - 2.0).abs() < 0.01, "{d}");
    }

    #[test]
    fn delta_annulus() {
        let e = disk(Point::zeros(), 1.0, 512);
        let f = disk(Point::zeros(), 1.01, 512);
        let d = cluster_delta(&e, &f).unwrap();
        let exact = PI * (1.01f64.powi(2) - 1.0);
        let grid = {
            let (lo, hi) = f.bounding_box();
            Grid::covering(lo, hi, DELTA_GRID, 0.1)
        };
        assert!((d - exact).abs() <= grid.cell * (e.perimeter() + f.perimeter()), "{d} vs {exact}");
    }

    #[test]
    fn delta_rejects_small_grid() {
        let a = unit_square(0.0, 0.0);
        let g = Grid { origin: Point::new(0.2, 0.2), cell: 0.01, nx: 10, ny: 10 };
        assert_eq!(cluster_delta_on(&a, &a, Some(g)), Err(ClusterError::GridTooSmall));
    }

    #[test]
    fn density_examples() {
        let y = steiner_y2(1.0, 41, 0.0);
        assert!((density_ratio(&y, Point::zeros(), 0.05) - 3.0).abs() < 0.05);
        let on_ray = y.interfaces[0].curve.point(20);
        assert!((density_ratio(&y, on_ray, 0.05) - 2.0).abs() < 0.05);
        assert_eq!(density_ratio(&y, Point::new(0.5, 0.3), 0.01), 0.0);
    }

    #[test]
    fn exact_steiner_has_120_degree_junction() {
        let y = steiner_y2(1.0, 11, 0.3);
        let r = plateau_check(&y, 1.0, 0.5, 0.01);
        assert!(r.max_angle_deviation() < 1e-9);
        assert!(r.passes());
    }
}

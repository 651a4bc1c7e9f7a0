//! Almost-normal diffeomorphisms between nearby open curves.
//!
//! Given a source curve `S₀`, a target `S` and the images `f₀` of the two
//! endpoints, [`build_diffeo`] produces a sampled map `f: S₀ → S` with
//! `f = f₀` at the endpoints whose tangential part is supported in a
//! `μ`-collar of the endpoints. Away from the collar `f` is the normal
//! graph map `x ↦ x + ψ(x) ν(x)`.
//!
//! Per sample `x` with frame `(τ, ν)`:
//! `G(x) = φ_μ(x) b(x) τ + a(x) ν`, where `a`, `b` extend the normal and
//! tangential endpoint displacements along `S₀`, and
//! `f(x) = x + G(x) + ζ(x) ν` with `ζ(x)` the root of
//! `t ↦ d_S(x + G(x) + t ν)` near zero. The target is extended past its
//! endpoints along osculating circles so that `d_S` is defined near them.

use std::io::{self, Write};

use thiserror::Error;

use crate::extend::{
    default_collar, extend_boundary_data, plateau_cutoff, plateau_cutoff_deriv, DistanceMap, ExtendError,
};
use crate::geom::{hausdorff, Curve, End, GeomError, Point};

/// Tangential-norm constant measured on [`perturbation_family`] at
/// `μ = 0.2` and frozen: every map built by [`build_diffeo`] on that family
/// satisfies `‖τ·(f-Id)‖_{C¹} μ / ‖f-Id‖_{C⁰(endpoints)} <= CALIBRATED_C0`.
pub const CALIBRATED_C0: f64 = 2.32;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DiffeoError {
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("no root bracket at sample {sample}")]
    BracketFailure { sample: usize },
    #[error("discrete speed {speed:.3} below 1/2 between samples {sample} and {}", sample + 1)]
    SpeedViolation { sample: usize, speed: f64 },
    #[error(transparent)]
    Extend(#[from] ExtendError),
    #[error(transparent)]
    Geom(#[from] GeomError),
}

/// `φ_μ`: one within `μ/2` of the anchors, zero beyond `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cutoff {
    pub mu: f64,
    pub anchors: Vec<Point>,
}

pub fn build_cutoff(mu: f64, anchors: &[Point]) -> Cutoff {
    Cutoff { mu, anchors: anchors.to_vec() }
}

impl Cutoff {
    fn nearest(&self, x: Point) -> (f64, Point) {
        self.anchors
            .iter()
            .map(|a| ((x - a).norm(), x - a))
            .fold((f64::INFINITY, Point::zeros()), |best, c| if c.0 < best.0 { c } else { best })
    }

    pub fn value(&self, x: Point) -> f64 {
        plateau_cutoff(self.nearest(x).0 / self.mu)
    }

    pub fn gradient(&self, x: Point) -> Point {
        let (d, v) = self.nearest(x);
        if d == 0.0 {
            return Point::zeros();
        }
        v * (plateau_cutoff_deriv(d / self.mu) / (self.mu * d))
    }
}

/// Endpoint displacements `f₀ - Id` split in the source frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EndpointData {
    /// Normal components at `(start, end)`.
    pub abar: (f64, f64),
    /// Tangential remainders `f₀ - x - ā ν` at `(start, end)`.
    pub bbar: (Point, Point),
    /// Tangential components `b̄ · τ`.
    pub beta: (f64, f64),
}

pub fn boundary_decompose(s0: &Curve, f0: (Point, Point)) -> Result<EndpointData, DiffeoError> {
    if s0.is_closed() {
        return Err(GeomError::NoBoundary.into());
    }
    let mut abar = [0.0; 2];
    let mut bbar = [Point::zeros(); 2];
    let mut beta = [0.0; 2];
    for (k, (end, target)) in [(End::Start, f0.0), (End::End, f0.1)].into_iter().enumerate() {
        let i = s0.endpoint_index(end);
        let fr = s0.frame(i)?;
        let disp = target - s0.point(i);
        abar[k] = disp.dot(&fr.normal);
        bbar[k] = disp - fr.normal * abar[k];
        beta[k] = bbar[k].dot(&fr.tangent);
    }
    Ok(EndpointData { abar: (abar[0], abar[1]), bbar: (bbar[0], bbar[1]), beta: (beta[0], beta[1]) })
}

/// Hypotheses of the construction, measured rather than enforced.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hypotheses {
    pub hausdorff: f64,
    pub endpoint_c0: f64,
    pub conormal_deviation: f64,
    pub rho: f64,
}

impl Hypotheses {
    pub fn hold(&self) -> bool {
        self.hausdorff <= self.rho && self.endpoint_c0 + self.conormal_deviation <= self.rho
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffeoOptions {
    /// Root tolerance relative to the source length.
    pub tol_root_rel: f64,
    /// Length of the target extension past each endpoint, in units of `μ`.
    pub extension: f64,
}

impl Default for DiffeoOptions {
    fn default() -> Self {
        DiffeoOptions { tol_root_rel: 1e-10, extension: 4.0 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffeoMap {
    pub source: Curve,
    pub image: Vec<Point>,
    /// Normal displacement `(f - x)·ν`.
    pub normal_part: Vec<f64>,
    /// Tangential displacement `(f - x)·τ`.
    pub tangential_part: Vec<f64>,
    pub zeta: Vec<f64>,
    /// Samples closer than `μ` to the endpoints.
    pub in_collar: Vec<bool>,
    pub mu: f64,
    pub rho: f64,
    pub tol_root: f64,
    pub hypotheses: Hypotheses,
    /// Largest distance of an image sample from the target polyline.
    pub image_distance: f64,
    /// Largest `|f - (x + ψ ν)|` over samples outside the collar, when a
    /// normal graph was supplied.
    pub gluing_error: Option<f64>,
}

/// Builds the map. `psi`, if given, holds the normal graph of `S` over
/// `S₀` at every source sample (`None` where undefined) and is used only
/// for the gluing check.
pub fn build_diffeo(
    s0: &Curve,
    s: &Curve,
    f0: (Point, Point),
    psi: Option<&[Option<f64>]>,
    mu: f64,
    rho: f64,
    opts: &DiffeoOptions,
) -> Result<DiffeoMap, DiffeoError> {
    if s0.is_closed() || s.is_closed() {
        return Err(GeomError::NoBoundary.into());
    }
    if !(rho > 0.0 && rho < mu * mu) {
        return Err(DiffeoError::Precondition(format!("need 0 < rho < mu^2, got rho = {rho}, mu = {mu}")));
    }
    if let Some(p) = psi {
        if p.len() != s0.len() {
            return Err(DiffeoError::Precondition(format!("{} graph values for {} samples", p.len(), s0.len())));
        }
    }
    let n = s0.len();
    let frames = s0.frames();
    let ends = (s0.point(0), s0.point(n - 1));
    let data = boundary_decompose(s0, f0)?;
    let a = extend_boundary_data(s0, data.abar, mu)?;
    let b = extend_boundary_data(s0, data.beta, mu)?;
    let phi = build_cutoff(mu, &[ends.0, ends.1]);
    let target = s.extend_ends(opts.extension * mu)?;
    let dist = DistanceMap::with_collar(&target, default_collar(&target).max(4.0 * rho));
    let tol_root = opts.tol_root_rel * s0.length();
    let eps = dist.collar();

    let hypotheses = {
        let c0 = (f0.0 - ends.0).norm().max((f0.1 - ends.1).norm());
        let dev_s = (s.co_normal(End::Start)? - s0.co_normal(End::Start)?).norm();
        let dev_e = (s.co_normal(End::End)? - s0.co_normal(End::End)?).norm();
        Hypotheses {
            hausdorff: hausdorff(s.points(), s0.points(), None),
            endpoint_c0: c0,
            conormal_deviation: dev_s.max(dev_e),
            rho,
        }
    };

    let mut image = Vec::with_capacity(n);
    let mut normal_part = Vec::with_capacity(n);
    let mut tangential_part = Vec::with_capacity(n);
    let mut zeta = Vec::with_capacity(n);
    let mut in_collar = Vec::with_capacity(n);
    for i in 0..n {
        let x = s0.point(i);
        let fr = frames[i];
        let tang = phi.value(x) * b[i];
        let y = x + fr.tangent * tang + fr.normal * a[i];
        let u = |t: f64| dist.eval(y + fr.normal * t).map(|v| v.0);
        let z = find_root(u, eps, tol_root).ok_or(DiffeoError::BracketFailure { sample: i })?;
        let endpoint = i == 0 || i == n - 1;
        // endpoints are pinned to f₀, so ζ there only measures the residual
        let nor = if endpoint { a[i] } else { a[i] + z };
        image.push(if endpoint {
            if i == 0 {
                f0.0
            } else {
                f0.1
            }
        } else {
            x + fr.tangent * tang + fr.normal * nor
        });
        normal_part.push(nor);
        tangential_part.push(tang);
        zeta.push(z);
        let d = (x - ends.0).norm().min((x - ends.1).norm());
        in_collar.push(d < mu);
    }
    let s_len = s0.arclengths();
    for i in 0..n - 1 {
        let speed = (image[i + 1] - image[i]).norm() / (s_len[i + 1] - s_len[i]);
        if !(speed >= 0.5) {
            return Err(DiffeoError::SpeedViolation { sample: i, speed });
        }
    }
    let image_distance = image.iter().map(|p| s.distance_to(p)).fold(0.0, f64::max);
    let gluing_error = psi.map(|p| {
        (0..n)
            .filter(|&i| !in_collar[i])
            .filter_map(|i| p[i].map(|v| (image[i] - (s0.point(i) + frames[i].normal * v)).norm()))
            .fold(0.0, f64::max)
    });
    Ok(DiffeoMap {
        source: s0.clone(),
        image,
        normal_part,
        tangential_part,
        zeta,
        in_collar,
        mu,
        rho,
        tol_root,
        hypotheses,
        image_distance,
        gluing_error,
    })
}

/// Root of `u` near zero within `|t| <= eps`: march outwards to a sign
/// change, bisect, then finish with Illinois-modified secant steps.
pub(crate) fn find_root<E>(u: impl Fn(f64) -> Result<f64, E>, eps: f64, tol: f64) -> Option<f64> {
    let u0 = u(0.0).ok()?;
    if u0 == 0.0 {
        return Some(0.0);
    }
    let steps = 64;
    let mut bracket = None;
    // d_S grows along ν, so look on the side that reduces |u| first.
    for dir in [-u0.signum(), u0.signum()] {
        let (mut t_prev, mut u_prev) = (0.0, u0);
        for k in 1..=steps {
            let t = dir * eps * k as f64 / steps as f64;
            let Ok(v) = u(t) else { break };
            if v == 0.0 {
                return Some(t);
            }
            if v.signum() != u_prev.signum() {
                bracket = Some((t_prev, u_prev, t, v));
                break;
            }
            t_prev = t;
            u_prev = v;
        }
        if bracket.is_some() {
            break;
        }
    }
    let (mut a, mut ua, mut b, mut ub) = bracket?;
    for _ in 0..8 {
        let m = 0.5 * (a + b);
        let um = u(m).ok()?;
        if um == 0.0 {
            return Some(m);
        }
        if um.signum() == ua.signum() {
            a = m;
            ua = um;
        } else {
            b = m;
            ub = um;
        }
    }
    let mut side = 0;
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let m = (a * ub - b * ua) / (ub - ua);
        let m = if m.is_finite() && (m - a) * (m - b) < 0.0 { m } else { 0.5 * (a + b) };
        let um = u(m).ok()?;
        if um == 0.0 {
            return Some(m);
        }
        if um.signum() == ua.signum() {
            a = m;
            ua = um;
            if side == -1 {
                ub *= 0.5;
            }
            side = -1;
        } else {
            b = m;
            ub = um;
            if side == 1 {
                ua *= 0.5;
            }
            side = 1;
        }
        if um.abs() <= 1e-3 * tol {
            return Some(m);
        }
    }
    Some(if ua.abs() < ub.abs() { a } else { b })
}

/// Discrete norms of a map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffeoNorms {
    /// `sup |f - Id|`.
    pub c0: f64,
    /// `c0 + sup |d(f - Id)/ds|`.
    pub c1: f64,
    /// `c1` plus the Lipschitz constant of `D(f - Id)` (second differences).
    pub c11: f64,
    /// `C¹` norm of the tangential displacement.
    pub tangential_c1: f64,
    /// `sup |f - Id|` over the two endpoints.
    pub endpoint_c0: f64,
    /// `tangential_c1 μ / endpoint_c0` (0 when both vanish).
    pub ratio: f64,
}

pub fn diffeo_norms(d: &DiffeoMap) -> DiffeoNorms {
    let n = d.image.len();
    let x = d.source.points();
    let s = d.source.arclengths();
    let disp: Vec<Point> = d.image.iter().zip(x).map(|(f, p)| f - p).collect();
    let c0 = disp.iter().map(|v| v.norm()).fold(0.0, f64::max);
    let mut dsup: f64 = 0.0;
    let mut lip: f64 = 0.0;
    let mut tsup: f64 = 0.0;
    let mut prev: Option<Point> = None;
    for i in 0..n - 1 {
        let h = s[i + 1] - s[i];
        let df = (disp[i + 1] - disp[i]) / h;
        dsup = dsup.max(df.norm());
        if let Some(p) = prev {
            let hm = 0.5 * (s[i + 1] - s[i - 1]);
            lip = lip.max((df - p).norm() / hm);
        }
        prev = Some(df);
        tsup = tsup.max(((d.tangential_part[i + 1] - d.tangential_part[i]) / h).abs());
    }
    let t0 = d.tangential_part.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let endpoint_c0 = disp[0].norm().max(disp[n - 1].norm());
    let tangential_c1 = t0 + tsup;
    let ratio = if endpoint_c0 > 0.0 { tangential_c1 * d.mu / endpoint_c0 } else { 0.0 };
    DiffeoNorms { c0, c1: c0 + dsup, c11: c0 + dsup + lip, tangential_c1, endpoint_c0, ratio }
}

impl DiffeoMap {
    /// Tab-separated table: index, source point, image point, normal
    /// part, tangential part, collar flag.
    pub fn write_table(&self, mut w: impl Write) -> io::Result<()> {
        writeln!(w, "index\tsource_x\tsource_y\timage_x\timage_y\tpsi\ttangential\tin_collar")?;
        for i in 0..self.image.len() {
            let (x, f) = (self.source.point(i), self.image[i]);
            writeln!(
                w,
                "{i}\t{:.15e}\t{:.15e}\t{:.15e}\t{:.15e}\t{:.15e}\t{:.15e}\t{}",
                x.x,
                x.y,
                f.x,
                f.y,
                self.normal_part[i],
                self.tangential_part[i],
                u8::from(self.in_collar[i])
            )?;
        }
        Ok(())
    }
}

/// One member of the canonical perturbation family.
#[derive(Debug, Clone, PartialEq)]
pub struct Perturbation {
    pub kind: PerturbationKind,
    pub size: f64,
    pub source: Curve,
    pub target: Curve,
    pub f0: (Point, Point),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PerturbationKind {
    NormalOffset,
    TangentialSlide,
}

/// Canonical family on the unit-radius 120° arc (201 samples): the
/// concentric arc offset by `ε` along the normal, and the same arc slid by
/// arc length `s` along itself, for every size given.
pub fn perturbation_family(sizes: &[f64]) -> Vec<Perturbation> {
    let m = 201;
    let (a0, a1) = (2.0 * std::f64::consts::PI / 3.0, std::f64::consts::PI / 3.0);
    // clockwise over the top, so the normal points to the center
    let source = Curve::arc(Point::zeros(), 1.0, a0, a1, m).expect("valid arc");
    let mut out = Vec::new();
    for &eps in sizes {
        let r = 1.0 - eps;
        let target = Curve::arc(Point::zeros(), r, a0, a1, m).expect("valid arc");
        let f0 = (target.point(0), target.point(m - 1));
        out.push(Perturbation { kind: PerturbationKind::NormalOffset, size: eps, source: source.clone(), target, f0 });
    }
    for &s in sizes {
        let target = Curve::arc(Point::zeros(), 1.0, a0 - s, a1 - s, m).expect("valid arc");
        let f0 = (target.point(0), target.point(m - 1));
        out.push(Perturbation { kind: PerturbationKind::TangentialSlide, size: s, source: source.clone(), target, f0 });
    }
    out
}

/// Largest tangential ratio over the family at collar width `mu`.
pub fn calibrate_c0(family: &[Perturbation], mu: f64) -> Result<f64, DiffeoError> {
    let mut worst: f64 = 0.0;
    for p in family {
        let d = build_diffeo(&p.source, &p.target, p.f0, None, mu, 0.5 * mu * mu, &DiffeoOptions::default())?;
        worst = worst.max(diffeo_norms(&d).ratio);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn segment() -> Curve {
        Curve::segment(Point::new(0.0, 0.0), Point::new(1.0, 0.0), 101).unwrap()
    }

    #[test]
    fn cutoff_profile() {
        let c = build_cutoff(0.2, &[Point::zeros()]);
        assert_eq!(c.value(Point::zeros()), 1.0);
        assert_eq!(c.value(Point::new(0.2, 0.0)), 0.0);
        let mid = c.value(Point::new(0.15, 0.0));
        assert!(mid > 0.0 && mid < 1.0);
        assert!(c.value(Point::new(0.16, 0.0)) < mid);
    }

    #[test]
    fn identity_decomposes_to_zero() {
        let s = segment();
        let d = boundary_decompose(&s, (s.point(0), s.point(100))).unwrap();
        assert_eq!(d.abar, (0.0, 0.0));
        assert_eq!(d.bbar, (Point::zeros(), Point::zeros()));
    }

    #[test]
    fn normal_offset_decomposes_normally() {
        let s = segment();
        let nu = Point::new(0.0, -1.0);
        let d = boundary_decompose(&s, (s.point(0) + nu * 0.01, s.point(100) + nu * 0.01)).unwrap();
        assert_abs_diff_eq!(d.abar.0, 0.01, epsilon = 1e-15);
        assert_abs_diff_eq!(d.abar.1, 0.01, epsilon = 1e-15);
        assert!(d.bbar.0.norm() < 1e-15 && d.bbar.1.norm() < 1e-15);
    }

    #[test]
    fn identity_map_for_equal_curves() {
        let s = segment();
        let d = build_diffeo(&s, &s, (s.point(0), s.point(100)), None, 0.2, 0.02, &DiffeoOptions::default()).unwrap();
        for (f, x) in d.image.iter().zip(s.points()) {
            assert!((f - x).norm() <= 1e-10);
        }
        let n = diffeo_norms(&d);
        assert!(n.c0 <= 1e-10 && n.c1 <= 1e-8 && n.c11 <= 1e-6 && n.tangential_c1 == 0.0);
    }

    #[test]
    fn rho_must_be_below_mu_squared() {
        let s = segment();
        let r = build_diffeo(&s, &s, (s.point(0), s.point(100)), None, 0.2, 0.05, &DiffeoOptions::default());
        assert!(matches!(r, Err(DiffeoError::Precondition(_))));
    }
}

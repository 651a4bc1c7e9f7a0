//! Python bindings: clusters, the solver, volume projection, Plateau
//! checks, almost-normal diffeomorphisms and convergence reports.

use pyo3::exceptions::{PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::PyDict;

use bubble_cluster::cluster::{
    boundary_hausdorff, cluster_delta, density_ratio, plateau_check, shapes, singular_hausdorff, PlanarCluster,
};
use bubble_cluster::converge::{improved_convergence_report, log_slope};
use bubble_cluster::diffeo::{build_diffeo, diffeo_norms, DiffeoOptions, CALIBRATED_C0};
use bubble_cluster::io::{cluster_from_str, cluster_to_string};
use bubble_cluster::optimize::{
    curvature_multipliers, project_volumes, solve_partition, solve_with_potential, write_log_csv, Gaussian,
    Potential, Quadratic, SolveOptions, ZeroPotential,
};
use bubble_cluster::{Curve, End, Point};

fn value_err(e: impl std::fmt::Display) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> PyErr {
    PyRuntimeError::new_err(e.to_string())
}

fn to_points(v: &[(f64, f64)]) -> Vec<Point> {
    v.iter().map(|&(x, y)| Point::new(x, y)).collect()
}

fn from_points(v: &[Point]) -> Vec<(f64, f64)> {
    v.iter().map(|p| (p.x, p.y)).collect()
}

/// A planar cluster: interfaces between chambers (0 is the exterior) and
/// the triple points where they meet.
#[pyclass(frozen, skip_from_py_object, name = "Cluster", module = "bubble_cluster_py")]
#[derive(Clone)]
struct Cluster {
    inner: PlanarCluster,
}

#[pymethods]
impl Cluster {
    #[staticmethod]
    fn from_json(s: &str) -> PyResult<Self> {
        Ok(Cluster { inner: cluster_from_str(s).map_err(value_err)? })
    }

    fn to_json(&self) -> String {
        cluster_to_string(&self.inner)
    }

    #[staticmethod]
    #[pyo3(signature = (radius=1.0, samples=64, center=(0.0, 0.0)))]
    fn disk(radius: f64, samples: usize, center: (f64, f64)) -> Self {
        Cluster { inner: shapes::disk(Point::new(center.0, center.1), radius, samples) }
    }

    #[staticmethod]
    #[pyo3(signature = (r1=1.0, r2=1.0, samples=64))]
    fn double_bubble(r1: f64, r2: f64, samples: usize) -> Self {
        Cluster { inner: shapes::double_bubble(r1, r2, samples) }
    }

    #[staticmethod]
    #[pyo3(signature = (radius=1.0, samples=32, rotation=0.0))]
    fn steiner_y2(radius: f64, samples: usize, rotation: f64) -> Self {
        Cluster { inner: shapes::steiner_y2(radius, samples, rotation) }
    }

    #[getter]
    fn n_chambers(&self) -> usize {
        self.inner.n_chambers
    }

    /// `(id, h, k, closed, points)` per interface.
    #[allow(clippy::type_complexity)]
    fn interfaces(&self) -> Vec<(usize, usize, usize, bool, Vec<(f64, f64)>)> {
        self.inner
            .interfaces
            .iter()
            .map(|i| (i.id, i.chambers.0, i.chambers.1, i.curve.is_closed(), from_points(i.curve.points())))
            .collect()
    }

    /// `(position, [(interface id, end flag)])` per triple point.
    fn triple_points(&self) -> Vec<((f64, f64), Vec<(usize, u8)>)> {
        self.inner
            .triple_points
            .iter()
            .map(|t| {
                let inc = t.incident.iter().map(|(id, e)| (*id, u8::from(*e == End::End))).collect();
                ((t.position.x, t.position.y), inc)
            })
            .collect()
    }

    fn perimeter(&self) -> f64 {
        self.inner.perimeter()
    }

    /// Areas of chambers `1..=N`.
    fn areas(&self) -> PyResult<Vec<f64>> {
        self.inner.areas().map_err(value_err)
    }

    /// Structural violations as messages; empty when valid.
    fn validate(&self) -> Vec<String> {
        self.inner.validate().violations.iter().map(ToString::to_string).collect()
    }

    #[pyo3(signature = (lambda_=1e3, tol_angle=0.5, tol_curvature=0.01))]
    fn plateau_check<'py>(
        &self,
        py: Python<'py>,
        lambda_: f64,
        tol_angle: f64,
        tol_curvature: f64,
    ) -> PyResult<Bound<'py, PyDict>> {
        let r = plateau_check(&self.inner, lambda_, tol_angle, tol_curvature);
        let d = PyDict::new(py);
        d.set_item("passes", r.passes())?;
        d.set_item("max_angle_deviation", r.max_angle_deviation())?;
        d.set_item("angles", r.junctions.iter().map(|j| j.angles_deg.clone()).collect::<Vec<_>>())?;
        d.set_item(
            "curvature",
            r.interfaces.iter().map(|i| (i.interface, i.mean, i.std_dev)).collect::<Vec<_>>(),
        )?;
        Ok(d)
    }

    fn density_ratio(&self, x: (f64, f64), r: f64) -> f64 {
        density_ratio(&self.inner, Point::new(x.0, x.1), r)
    }

    /// Area of the symmetric difference summed over chambers.
    fn delta(&self, other: PyRef<'_, Cluster>) -> PyResult<f64> {
        cluster_delta(&self.inner, &other.inner).map_err(value_err)
    }

    fn boundary_hausdorff(&self, other: PyRef<'_, Cluster>) -> f64 {
        boundary_hausdorff(&self.inner, &other.inner)
    }

    fn singular_hausdorff(&self, other: PyRef<'_, Cluster>) -> f64 {
        singular_hausdorff(&self.inner, &other.inner)
    }

    /// Pressures `λ_h` (with `λ_0 = 0`) and the least-squares residual.
    fn curvature_multipliers(&self) -> PyResult<(Vec<f64>, f64)> {
        let m = curvature_multipliers(&self.inner).map_err(runtime_err)?;
        Ok((m.lambda, m.residual))
    }

    fn __repr__(&self) -> String {
        format!(
            "Cluster(n_chambers={}, interfaces={}, triple_points={})",
            self.inner.n_chambers,
            self.inner.interfaces.len(),
            self.inner.triple_points.len()
        )
    }
}

fn potential(name: &str, params: &[f64]) -> PyResult<Box<dyn Potential + Send + Sync>> {
    let center = |at: usize| {
        if params.len() >= at + 2 {
            Point::new(params[at], params[at + 1])
        } else {
            Point::zeros()
        }
    };
    Ok(match name {
        "zero" => Box::new(ZeroPotential),
        "quadratic" => Box::new(Quadratic { scale: params.first().copied().unwrap_or(1.0), center: center(1) }),
        "gaussian" => Box::new(Gaussian {
            amplitude: params.first().copied().unwrap_or(1.0),
            width: params.get(1).copied().unwrap_or(1.0),
            center: center(2),
        }),
        other => return Err(value_err(format!("unknown potential `{other}`"))),
    })
}

/// Minimizes perimeter (plus `delta` times the potential integral) at the
/// given chamber areas. Returns the cluster and the iteration log as CSV.
#[pyfunction]
#[pyo3(signature = (areas, init, potential_name="zero", params=Vec::new(), delta=0.0, samples=256, seed=0))]
fn solve(
    py: Python<'_>,
    areas: Vec<f64>,
    init: PyRef<'_, Cluster>,
    potential_name: &str,
    params: Vec<f64>,
    delta: f64,
    samples: usize,
    seed: u64,
) -> PyResult<(Cluster, String)> {
    let opts = SolveOptions { samples, seed, ..SolveOptions::default() };
    let g = potential(potential_name, &params)?;
    let init = init.inner.clone();
    let sol = py
        .detach(|| {
            if potential_name == "zero" && delta == 0.0 {
                solve_partition(&areas, &init, &opts)
            } else {
                solve_with_potential(&areas, g.as_ref(), delta, &init, &opts)
            }
        })
        .map_err(runtime_err)?;
    let mut log = Vec::new();
    write_log_csv(&sol.log, &mut log).map_err(runtime_err)?;
    Ok((Cluster { inner: sol.cluster }, String::from_utf8(log).map_err(runtime_err)?))
}

/// Restores chamber areas by normal offsets. Returns the corrected cluster
/// and the perimeter-change / area-change ratio.
#[pyfunction]
#[pyo3(signature = (cluster, areas, tol_rel=1e-10))]
fn project_volumes_py(cluster: PyRef<'_, Cluster>, areas: Vec<f64>, tol_rel: f64) -> PyResult<(Cluster, f64)> {
    let p = project_volumes(&cluster.inner, &areas, tol_rel).map_err(runtime_err)?;
    Ok((Cluster { inner: p.cluster }, p.ratio))
}

/// Almost-normal map from open polyline `source` onto `target`, with the
/// endpoints sent to `f0`. Returns the image points and the norms.
#[pyfunction]
#[pyo3(signature = (source, target, f0, mu=0.2, rho=0.02))]
fn diffeo<'py>(
    py: Python<'py>,
    source: Vec<(f64, f64)>,
    target: Vec<(f64, f64)>,
    f0: ((f64, f64), (f64, f64)),
    mu: f64,
    rho: f64,
) -> PyResult<Bound<'py, PyDict>> {
    let s0 = Curve::open(to_points(&source)).map_err(value_err)?;
    let s = Curve::open(to_points(&target)).map_err(value_err)?;
    let f0 = (Point::new(f0.0 .0, f0.0 .1), Point::new(f0.1 .0, f0.1 .1));
    let d = build_diffeo(&s0, &s, f0, None, mu, rho, &DiffeoOptions::default()).map_err(runtime_err)?;
    let n = diffeo_norms(&d);
    let out = PyDict::new(py);
    out.set_item("image", from_points(&d.image))?;
    out.set_item("tangential", d.tangential_part.clone())?;
    out.set_item("normal", d.normal_part.clone())?;
    out.set_item("c0", n.c0)?;
    out.set_item("c1", n.c1)?;
    out.set_item("c11", n.c11)?;
    out.set_item("tangential_c1", n.tangential_c1)?;
    out.set_item("endpoint_c0", n.endpoint_c0)?;
    out.set_item("ratio", n.ratio)?;
    Ok(out)
}

/// Convergence report of `sequence` against `limit` as CSV text.
#[pyfunction]
#[pyo3(signature = (limit, sequence, mu=0.2, rho=None))]
fn convergence_report(
    limit: PyRef<'_, Cluster>,
    sequence: Vec<PyRef<'_, Cluster>>,
    mu: f64,
    rho: Option<f64>,
) -> PyResult<String> {
    let seq: Vec<PlanarCluster> = sequence.iter().map(|c| c.inner.clone()).collect();
    let rep = improved_convergence_report(&limit.inner, &seq, mu, rho.unwrap_or(mu * mu / 2.0)).map_err(value_err)?;
    let mut buf = Vec::new();
    rep.write_csv(&mut buf).map_err(runtime_err)?;
    String::from_utf8(buf).map_err(runtime_err)
}

/// Least-squares slope of `log2 y` against `log2 x`.
#[pyfunction]
fn loglog_slope(x: Vec<f64>, y: Vec<f64>) -> PyResult<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return Err(value_err("need two equally long sequences of length >= 2"));
    }
    Ok(log_slope(&x, &y))
}

#[pymodule]
fn bubble_cluster_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Cluster>()?;
    m.add_function(wrap_pyfunction!(solve, m)?)?;
    m.add("project_volumes", wrap_pyfunction!(project_volumes_py, m)?)?;
    m.add_function(wrap_pyfunction!(diffeo, m)?)?;
    m.add_function(wrap_pyfunction!(convergence_report, m)?)?;
    m.add_function(wrap_pyfunction!(loglog_slope, m)?)?;
    m.add("CALIBRATED_C0", CALIBRATED_C0)?;
    Ok(())
}

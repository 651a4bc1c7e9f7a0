//! Cluster files (JSON), run configuration (TOML) and atomic writes.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::cluster::{ClusterError, Interface, PlanarCluster, TriplePoint};
use crate::geom::{Curve, Disk, End, GeomError, Point};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File { path: PathBuf, source: io::Error },
    #[error("malformed cluster file: {0}")]
    Json(#[from] serde_json::Error),
    #[error("malformed config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("invalid cluster file: {0}")]
    Content(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
    #[error(transparent)]
    Cluster(#[from] ClusterError),
}

#[derive(Debug, Serialize, Deserialize)]
struct InterfaceDoc {
    id: usize,
    h: usize,
    k: usize,
    closed: bool,
    points: Vec<[f64; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct TriplePointDoc {
    position: [f64; 2],
    /// `[interface id, end flag]`, flag 0 for the start and 1 for the end.
    incident: Vec<[usize; 2]>,
}

#[derive(Debug, Serialize, Deserialize)]
struct WindowDoc {
    center: [f64; 2],
    radius: f64,
}

#[derive(Debug, Serialize, Deserialize)]
struct ClusterDoc {
    n_chambers: usize,
    interfaces: Vec<InterfaceDoc>,
    triple_points: Vec<TriplePointDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    window: Option<WindowDoc>,
}

/// Writes every float in scientific notation with 17 significant digits.
struct ExactFloats;

impl serde_json::ser::Formatter for ExactFloats {
    fn write_f64<W: ?Sized + Write>(&mut self, w: &mut W, v: f64) -> io::Result<()> {
        write!(w, "{v:.16e}")
    }
}

fn pt(p: &Point) -> [f64; 2] {
    [p.x, p.y]
}

/// Serializes a cluster to the JSON cluster format.
pub fn cluster_to_string(c: &PlanarCluster) -> String {
    let doc = ClusterDoc {
        n_chambers: c.n_chambers,
        interfaces: c
            .interfaces
            .iter()
            .map(|i| InterfaceDoc {
                id: i.id,
                h: i.chambers.0,
                k: i.chambers.1,
                closed: i.curve.is_closed(),
                points: i.curve.points().iter().map(pt).collect(),
            })
            .collect(),
        triple_points: c
            .triple_points
            .iter()
            .map(|t| TriplePointDoc {
                position: pt(&t.position),
                incident: t.incident.iter().map(|(id, e)| [*id, usize::from(*e == End::End)]).collect(),
            })
            .collect(),
        window: c.window.map(|w| WindowDoc { center: pt(&w.center), radius: w.radius }),
    };
    let mut buf = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut buf, ExactFloats);
    doc.serialize(&mut ser).expect("in-memory serialization");
    let mut s = String::from_utf8(buf).expect("json is utf-8");
    s.push('\n');
    s
}

/// Parses the JSON cluster format. Structural validity is not checked.
pub fn cluster_from_str(s: &str) -> Result<PlanarCluster, IoError> {
    let doc: ClusterDoc = serde_json::from_str(s)?;
    let mut interfaces = Vec::with_capacity(doc.interfaces.len());
    for i in doc.interfaces {
        if i.h >= i.k || i.k > doc.n_chambers {
            return Err(IoError::Content(format!("interface {}: need h < k <= n_chambers", i.id)));
        }
        let points = i.points.iter().map(|p| Point::new(p[0], p[1])).collect();
        interfaces.push(Interface { id: i.id, chambers: (i.h, i.k), curve: Curve::new(points, i.closed)? });
    }
    let mut triple_points = Vec::with_capacity(doc.triple_points.len());
    for t in doc.triple_points {
        let incident = t
            .incident
            .iter()
            .map(|[id, e]| match e {
                0 => Ok((*id, End::Start)),
                1 => Ok((*id, End::End)),
                _ => Err(IoError::Content(format!("end flag must be 0 or 1, got {e}"))),
            })
            .collect::<Result<_, _>>()?;
        triple_points.push(TriplePoint { position: Point::new(t.position[0], t.position[1]), incident });
    }
    let mut c = PlanarCluster::new(doc.n_chambers, interfaces, triple_points);
    if let Some(w) = doc.window {
        c = c.with_window(Disk::new(Point::new(w.center[0], w.center[1]), w.radius));
    }
    Ok(c)
}

pub fn read_to_string(path: &Path) -> Result<String, IoError> {
    fs::read_to_string(path).map_err(|source| IoError::File { path: path.to_owned(), source })
}

pub fn read_cluster(path: &Path) -> Result<PlanarCluster, IoError> {
    cluster_from_str(&read_to_string(path)?)
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), IoError> {
    let err = |source| IoError::File { path: path.to_owned(), source };
    let name = path.file_name().ok_or_else(|| err(io::Error::other("not a file path")))?;
    let mut tmp_name = std::ffi::OsString::from(".");
    tmp_name.push(name);
    tmp_name.push(".tmp");
    let tmp = path.with_file_name(tmp_name);
    let mut f = fs::File::create(&tmp).map_err(err)?;
    f.write_all(contents).map_err(err)?;
    f.sync_all().map_err(err)?;
    fs::rename(&tmp, path).map_err(err)
}

pub fn write_cluster(path: &Path, c: &PlanarCluster) -> Result<(), IoError> {
    write_atomic(path, cluster_to_string(c).as_bytes())
}

/// Run configuration shared by the command-line tools.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub tol_x: f64,
    /// Relative area tolerance.
    pub tol_vol: f64,
    /// Relative root-finding tolerance for normal graphs and diffeomorphisms.
    pub tol_root: f64,
    /// Junction angle tolerance in degrees.
    pub tol_angle: f64,
    /// Relative curvature-constancy tolerance.
    pub tol_curvature: f64,
    /// Samples per interface of solver output.
    pub samples: usize,
    /// Grid resolution for rasterized chamber comparisons.
    pub grid: usize,
    pub seed: u64,
    pub mu: f64,
    pub rho: f64,
    pub out_dir: PathBuf,
}

impl Default for Config {
    fn default() -> Self {
        Config {
            tol_x: 1e-9,
            tol_vol: 1e-10,
            tol_root: 1e-10,
            tol_angle: 0.5,
            tol_curvature: 0.01,
            samples: 256,
            grid: 512,
            seed: 0,
            mu: 0.2,
            rho: 0.02,
            out_dir: PathBuf::from("."),
        }
    }
}

impl Config {
    pub fn validate(&self) -> Result<(), IoError> {
        let tols = [
            ("tol_x", self.tol_x),
            ("tol_vol", self.tol_vol),
            ("tol_root", self.tol_root),
            ("tol_angle", self.tol_angle),
            ("tol_curvature", self.tol_curvature),
            ("mu", self.mu),
            ("rho", self.rho),
        ];
        if let Some((name, v)) = tols.iter().find(|(_, v)| !(v.is_finite() && *v > 0.0)) {
            return Err(IoError::Config(format!("{name} must be positive, got {v}")));
        }
        if self.samples < 8 || self.grid < 8 {
            return Err(IoError::Config("samples and grid must be at least 8".into()));
        }
        if self.mu * self.mu <= self.rho {
            return Err(IoError::Config(format!("need mu^2 > rho, got mu = {}, rho = {}", self.mu, self.rho)));
        }
        Ok(())
    }

    pub fn from_toml(s: &str) -> Result<Config, IoError> {
        let c: Config = toml::from_str(s)?;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Config, IoError> {
        Config::from_toml(&read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cluster::shapes;

    fn assert_same(a: &PlanarCluster, b: &PlanarCluster) {
        assert_eq!(a.n_chambers, b.n_chambers);
        assert_eq!(a.triple_points, b.triple_points);
        assert_eq!(a.window, b.window);
        assert_eq!(a.interfaces.len(), b.interfaces.len());
        for (x, y) in a.interfaces.iter().zip(&b.interfaces) {
            assert_eq!((x.id, x.chambers, x.curve.is_closed()), (y.id, y.chambers, y.curve.is_closed()));
            assert_eq!(x.curve.points(), y.curve.points());
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let c = shapes::double_bubble(1.0, 0.7, 64);
        let s = cluster_to_string(&c);
        let back = cluster_from_str(&s).unwrap();
        assert_same(&back, &c);
        assert_eq!(cluster_to_string(&back), s);
    }

    #[test]
    fn window_round_trips() {
        let c = shapes::steiner_y2(1.0, 32, 0.3);
        let back = cluster_from_str(&cluster_to_string(&c)).unwrap();
        assert_same(&back, &c);
    }

    #[test]
    fn bad_end_flag_is_rejected() {
        let s = r#"{"n_chambers":2,"interfaces":[],"triple_points":[{"position":[0,0],"incident":[[0,2]]}]}"#;
        assert!(matches!(cluster_from_str(s), Err(IoError::Content(_))));
    }

    #[test]
    fn config_enforces_rho_below_mu_squared() {
        assert!(Config::from_toml("mu = 0.1\nrho = 0.02\n").is_err());
        let c = Config::from_toml("mu = 0.3\nrho = 0.02\nseed = 7\n").unwrap();
        assert_eq!(c.seed, 7);
        assert!(Config::from_toml("tol_vol = -1.0\n").is_err());
        assert!(Config::from_toml("unknown = 1\n").is_err());
    }

    #[test]
    fn atomic_write_replaces_file() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.json");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(fs::read_to_string(&p).unwrap(), "two");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}

//! Planar bubble clusters.
//!
//! Curve-network models of planar N-clusters, a circular-arc perimeter
//! minimizer with area constraints, Plateau-law checks, and the
//! construction of almost-normal diffeomorphisms between nearby curve
//! networks together with a harness that measures how they converge.

pub mod cluster;
pub mod converge;
pub mod diffeo;
pub mod extend;
pub mod geom;
pub mod io;
pub mod optimize;

pub use cluster::{Interface, PlanarCluster, TriplePoint};
pub use geom::{Curve, End, Point};

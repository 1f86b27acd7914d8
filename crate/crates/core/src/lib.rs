//! Continuous Steiner symmetrization of planar domains and the Dirichlet
//! shape functionals evaluated along it.
//!
//! - [`interval_flow`]: exact one-dimensional flow of finite interval unions.
//! - [`sections`]: raster and sectioned domains, planar symmetrization.
//! - [`pde`]: torsion function, first eigenvalue, perimeter and γ-distance.
//! - [`flows`]: sampled symmetrization paths, iterated symmetrization, the
//!   space-filling repair path and fracture removal.
//! - [`minmov`]: minimizing movements with a symmetric-difference penalty.
//! - [`shapes`], [`io`]: built-in domains and file formats.

pub mod error;
pub mod flows;
pub mod interval_flow;
pub mod io;
pub mod minmov;
pub mod pde;
pub mod sections;
pub mod shapes;

pub use error::{Error, Result};
pub use flows::{DirectionSchedule, FlowConfig, FlowSample, FlowTrace, Jump};
pub use interval_flow::{Interval, IntervalUnion};
pub use minmov::{Functional, MinMovConfig};
pub use pde::{FieldSolution, SolverConfig};
pub use sections::{Axis, Edge, Grid, RasterDomain, SectionedDomain, Vertex};

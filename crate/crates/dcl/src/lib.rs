//! Numerical laboratory for Dirichlet forms on discretized 1-D domains:
//! relative capacities, restricted submarkovian semigroups, and checks of
//! the equivalences between conservation and invariance properties.

pub mod capacity;
pub mod coeff;
pub mod config;
pub mod error;
pub mod form;
pub mod linalg;
pub mod mesh;
pub mod region;
pub mod report;
pub mod scenario;
pub mod semigroup;

pub use coeff::{CoeffFamily, CoefficientField};
pub use error::{DclError, Result};
pub use form::{assemble_elliptic, neumann_form, Cutoff, Form, MassKind, MassMatrix};
pub use mesh::{build_mesh, Grading, Mesh};
pub use region::{EndKind, Omega, OmegaInterval, RegionSpec, TargetSet};

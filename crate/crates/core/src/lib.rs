//! Sub-cell summation-by-parts operators and a conservative, energy-stable
//! overset-grid discretisation of one-dimensional conservation laws.

// `!(x > 0.0)` is used deliberately so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod diagnostics;
pub mod equations;
pub mod error;
pub mod experiments;
pub mod function_space;
pub mod lagrange;
pub mod mesh;
pub mod quadrature;
pub mod report;
pub mod sbp_cell;
pub mod semidiscretization;
pub mod subcell;
pub mod time_integration;

pub use equations::{FluxKind, Law, NumericalFlux, VolumeFlux};
pub use error::{Error, Result};
pub use function_space::{FunctionSpace, NodeSet};
pub use mesh::{baseline_overset_mesh, build_overset_mesh, OversetDomain, OversetMesh, SplitFamily};
pub use quadrature::RadauEnd;
pub use report::{Check, Report};
pub use sbp_cell::{gauss_lobatto_operator, gauss_radau_operator, verify_cell_operator, CellFamily, CellOperator};
pub use semidiscretization::{Boundary, Semidiscretization, SolverConfig, Source};
pub use subcell::{assemble_subcell, verify_subcell, SubcellOperator};
pub use time_integration::{integrate, IntegratorConfig, Trajectory};

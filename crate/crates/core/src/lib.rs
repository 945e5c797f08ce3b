//! Hybridizable discontinuous Galerkin discretization of tangential Dirichlet
//! boundary control for the Stokes equations, with an augmented-Lagrangian
//! pseudo-time iteration, convergence studies and corner-regularity analysis.

// Index loops mirror the tensor layouts; `!(x > 0.0)` also rejects NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord, clippy::too_many_arguments)]

pub mod analysis;
pub mod basis;
pub mod bilinear;
pub mod discretization;
pub mod error;
pub mod global;
pub mod local;
pub mod mesh;
pub mod quadrature;
pub mod solver;

pub use analysis::convergence::{convergence_study, ConvergenceRow, ConvergenceTable, Problem};
pub use analysis::norms::SolutionErrors;
pub use analysis::regularity::{expected_orders, singular_exponent, RegularityProfile, SingularExponent};
pub use discretization::{Discretization, StabilizationScale};
pub use error::{Error, Result};
pub use global::{DiscreteSolution, DofMap};
pub use mesh::{build_square_mesh, Mesh, Point};
pub use solver::{kkt_residual, solve_control_problem, ControlProblem, IterationReport, KktResidual, SolverConfig};

//! Conic program representation, an interior-point solver for mixed
//! LP/SOCP/SDP problems, Lagrangian dualization and SDPA sparse I/O.

mod blockqr;
mod cones;
pub mod dual;
pub mod error;
pub mod ir;
pub mod sdpa;
pub mod solver;

pub use dual::dualize;
pub use error::{ProgramError, SdpaError, SolveError};
pub use ir::{
    tri_index, tri_pair, AffineExpr, Cone, ConeConstraint, ConicProgram, SymmetricExpr, VarBlock,
};
pub use sdpa::{export_sdpa, import_sdpa, lower_for_sdpa};
pub use solver::{
    cone_inner, kkt_residuals, solve, ConicSolution, KktResiduals, SolveStatus, SolverOptions,
};

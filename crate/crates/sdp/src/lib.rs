//! Block-diagonal semidefinite programming: problem data, an interior-point
//! solver, solution verification and a builder for Hermitian LMIs.
//!
//! Standard form, with `X = diag(X_1, ..., X_J)`:
//!
//! ```text
//! (P)  min  sum_j <C_j, X_j>   s.t.  sum_j <A_ij, X_j> = b_i,  X_j >= 0
//! (D)  max  b.y                s.t.  Z_j = C_j - sum_i y_i A_ij >= 0
//! ```

mod error;
mod lmi;
mod problem;
mod solver;
mod verify;

pub use error::SdpError;
pub use lmi::{
    hermitian_min_eig, lift_embedded, LmiBuilder, LmiId, LmiProgram, LmiSolution, PointCheck,
    VarId, C64,
};
pub use problem::{BlockKind, BlockSpec, Constraint, SdpProblem, SparseSym};
pub use solver::{solve, BlockValue, SdpSolution, SolveStatus, SolverOptions};
pub use verify::{verify_solution, ResidualReport};

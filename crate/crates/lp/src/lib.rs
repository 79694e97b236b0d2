//! Dense linear programming.
//!
//! A two-phase primal simplex on a compact tableau with bounded variables,
//! plus a dual simplex used to re-optimize after rows are appended. Every
//! optimal answer is checked against the original rows before it is returned.

mod error;
mod model;
mod simplex;

pub use error::LpError;
pub use model::{Constraint, LinearProgramSpec, LpSolution, Relation, Status};
pub use simplex::{resolve_with_rows, solve_lp, Simplex, FEASIBILITY_TOL, OPTIMALITY_TOL};

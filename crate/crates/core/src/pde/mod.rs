//! Finite-difference rediscovery of the value function: the stationary
//! boundary-value problem and a backward dynamic-programming scheme for the
//! full control problem.

mod dp;
mod stationary;
mod tridiag;

pub use dp::{
    dp_refinement_study, dp_step, solve_dp, ControlPolicy, DpSolution, DpSpec, RefinementRow,
};
pub use stationary::{solve_stationary, StationarySolveSpec};
pub use tridiag::solve_tridiagonal;

//! Numerical construction of candidate optimal paths for undiscounted
//! continuous-time infinite-horizon problems.
//!
//! The pipeline is:
//!
//! 1. describe a problem (`max ∫ U(c) dt` subject to `k̇ = g(c, k)`) with
//!    [`problem::Problem`], using utility and dynamics written as
//!    [`expr::Expr`] arithmetic expressions;
//! 2. solve the free-terminal-state finite-horizon problem for a horizon `T`
//!    with [`solver::solve_finite_horizon`];
//! 3. solve a geometric ladder of horizons and extract the pointwise limit
//!    path on a fixed window ([`ladder`]);
//! 4. check the ratio condition and compare the limit path against
//!    challengers under the overtaking criterion ([`criterion`]).
//!
//! Every verdict produced here is finite-sample evidence, not a proof.
//!
//! The crate is `no_std` and only needs `alloc`.

#![no_std]
#![forbid(unsafe_code)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod criterion;
pub mod dual;
pub mod expr;
pub mod ladder;
mod math;
pub mod problem;
pub mod quadrature;
pub mod solver;

pub use criterion::{ConditionReport, LiminfEstimate, OvertakingVerdict, PathFamily, SampledSequence, Trend, Verdict};
pub use dual::Dual;
pub use expr::{Bindings, Expr, Var};
pub use ladder::{HorizonLadder, LimitPath, Schedule};
pub use problem::{BuiltinModel, Grid, Problem, Trajectory};
pub use quadrature::QuadratureRule;
pub use solver::{ResidualReport, SolveMethod, SolverOptions};

//! Finite-difference solvers for the Cauchy, elliptic and semigroup problems,
//! coefficient truncation and the continuation scheme.

mod cauchy;
mod continuation;
mod elliptic;
mod scheme;
pub mod sparse;

pub use cauchy::{
    discrete_l, extend_final_condition, semigroup_t, solve_cauchy, solve_degenerate_c, truncate_coeffs, CauchyProblem,
    DegenerateResult, Extension, ForcingTail, IterationCounts, ResidualReport, SolveResult,
};
pub use continuation::{continuation_solve, ContinuationOpts};
pub use elliptic::{solve_elliptic, EllipticOpts, EllipticSolution};
pub use scheme::{apply_operator, assemble, time_nodes, Blend, BoundaryMode, MarchStats, Scheme};

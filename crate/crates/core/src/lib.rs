//! A descent subgradient method for locally Lipschitz objectives that may be
//! neither smooth nor convex.
//!
//! The solver approximates the Goldstein ε-subdifferential at the current
//! point by a finite bundle of subgradients, takes the least-norm element of
//! its convex hull as (negated) search direction, and runs a two-point line
//! search that either finds sufficient decrease or returns a fresh subgradient
//! that enlarges the bundle. An outer loop drives the stationarity tolerance
//! δ and the radius ε to zero.
//!
//! ```
//! use subopt::{problems, solve, SolverParams};
//!
//! let (oracle, spec) = problems::make_problem("MAXQ", 10).unwrap();
//! let params = SolverParams { eta: 1e-6, ..SolverParams::default() };
//! let report = solve(&oracle, &spec.default_start, &params).unwrap();
//! assert!(report.f_end < 1e-4);
//! ```
//!
//! Besides the solver this crate ships the academic test set, two baseline
//! methods, clustering and Chebyshev approximation objectives, and a
//! benchmark harness with performance profiles.

pub mod apps;
pub mod baselines;
pub mod bench;
mod error;
pub mod inner;
pub mod linesearch;
pub mod minnorm;
mod oracle;
pub mod outer;
mod params;
pub mod problems;
mod report;
pub mod trace;
pub(crate) mod vecops;

pub use error::{ParamError, SolveError};
pub use minnorm::{Bundle, MinNormError, MinNormSolution};
pub use oracle::{CountingOracle, Objective};
pub use outer::{solve, solve_with, Hooks, Target};
pub use params::SolverParams;
pub use report::{RunReport, Status};

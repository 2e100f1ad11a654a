//! Elastic Net regression solved through a semi-smooth Newton augmented
//! Lagrangian method.
//!
//! The primal problem is
//!
//! ```text
//! min_x 0.5 * ||A x - b||_2^2 + lambda1 * ||x||_1 + (lambda2 / 2) * ||x||_2^2
//! ```
//!
//! and the solver works on its dual: an augmented Lagrangian outer loop
//! ([`solver`]) drives a semi-smooth Newton inner solver ([`newton`]) whose
//! linear systems shrink with the active set of the current iterate. On top
//! of the plain solve sit warm-started regularization paths with GCV, e-BIC
//! and k-fold cross-validation scoring ([`select`]), synthetic and LIBSVM
//! data tooling ([`data`]), independent reference solvers ([`oracle`]) and a
//! timing harness ([`bench`]).

pub use nalgebra;

pub mod bench;
pub mod data;
pub mod dual;
pub mod error;
mod linalg;
pub mod newton;
pub mod oracle;
pub mod penalty;
pub mod problem;
pub mod select;
pub mod solver;

pub use dual::{DualState, KktResiduals};
pub use error::{Error, Result};
pub use penalty::{ConjugateValue, Penalty};
pub use problem::Problem;
pub use solver::{solve, LossScale, Solution, SolverConfig};

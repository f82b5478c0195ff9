//! Graph-structured sparse regression.
//!
//! Three latent-decomposition models share one solver:
//!
//! * **SRIG** – weighted group penalty on every closed neighborhood of the
//!   predictor graph;
//! * **DSRIG** – SRIG plus a within-group ℓ1 penalty with its own tuning parameter;
//! * **SGLIG** – a single trade-off parameter `α` between the group ℓ2 penalty
//!   and a degree-weighted ℓ1 penalty at fixed overall shrinkage.
//!
//! The solver ([`solver::fit`]) is an accelerated proximal gradient method whose
//! proximal step subtracts a projection onto an intersection of per-group
//! ℓ2/ℓ∞ balls ([`prox`]). Synthetic problems ([`synth`]), graph estimation by
//! neighborhood selection ([`graph_est`]) and a tuning/benchmark harness
//! ([`eval`], [`commands`]) complete the workflow.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod error;
pub mod eval;
pub mod graph;
pub mod graph_est;
pub mod io;
pub mod models;
pub mod numerics;
pub mod prox;
pub mod solver;
pub mod synth;

pub use error::{Error, Result};
pub use graph::{Neighborhood, UndirectedGraph};
pub use models::{ModelKind, ModelSpec};
pub use prox::{GroupRadii, ProjectorKind};
pub use solver::{fit, FitResult, SolverConfig};

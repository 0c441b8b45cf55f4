//! Numerical lab for the heat flow ∂ₜX = Δ_LB X + ∇div X + Ric♯X on closed
//! Riemannian manifolds given by chart grids.

// Index loops mirror the tensor notation; negated comparisons reject NaN.
#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod config;
pub mod einstein;
pub mod error;
pub mod fields;
pub mod flow;
pub mod linalg;
pub mod manifold;
pub mod operator;
pub(crate) mod small;
pub mod snapshot;
pub mod sparse;

pub use error::{KvError, Result};

//! Approximation hierarchies for the copositive cone over
//! `K = R_+^{n1} x L^{n2}` (orthant times second-order cone).
//!
//! The crate builds five hierarchies (dP, Yildirim, ZVP, NN, Lasserre) as
//! block conic programs, solves them with a built-in interior-point method,
//! and cross-checks the answers with sampling and grid oracles.

pub mod combinatorics;
pub mod error;
pub mod frame;
pub mod jordan;
pub mod lasserre;
pub mod model;
pub mod oracle;
pub mod poly;
pub mod scalar;
pub mod solver;
pub mod cli;

pub use error::{Error, Result};
pub use jordan::{AlgebraElement, ConeShape, JordanFrame, SymMatrix};

//! Block conic programs, the COPP benchmark and SDPA interchange.

pub mod copp;
mod problem;
pub mod sdpa;
pub mod slater;
mod solution;

pub use copp::{assemble_copp, random_pd, Hierarchy};
pub use problem::*;
pub use solution::*;

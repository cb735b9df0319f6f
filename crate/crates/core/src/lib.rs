//! Stochastic finite volume solver for hyperbolic conservation laws with
//! WENO reconstruction, a POD reduced model of the stochastic flux integrals
//! and Q-DEIM hyper-reduction.

pub mod config;
pub mod error;
pub mod grid;
pub mod io;
pub mod physics;
pub mod rom;
pub mod snapshots;
pub mod solver;
pub mod stats;
pub mod weno;

pub use error::{Result, SfvError};
pub use faer;

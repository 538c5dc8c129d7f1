//! Finite-player approximation of nonatomic aggregative games.
//!
//! A [`game::NonatomicGameSpec`] is discretized by [`aas`] into a
//! [`game::FiniteGame`], solved by [`solver`], and compared against the
//! Wardrop oracle in [`oracle`] through the error bounds in [`metrics`].

pub mod aas;
pub mod config;
pub mod error;
pub mod game;
pub mod geometry;
pub mod metrics;
pub mod oracle;
pub mod polytope;
mod serde_util;
pub mod solver;
pub mod sweep;
pub mod verify;

pub use error::{Error, Result};

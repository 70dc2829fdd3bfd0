//! Distributional-chaos statistics for discrete dynamical systems measured
//! along arbitrary index sequences, with explicit certified constructions.
//!
//! Everything is finite-horizon: limits are reported as tail-inf / tail-sup
//! over materialized checkpoints, and metric evaluations at a finite
//! precision window return a [`Distance`] that may only bound the truth.

pub mod chaos;
pub mod constructions;
pub mod error;
pub mod numfmt;
pub mod sequences;
pub mod systems;

pub use error::{Error, Result};
pub use sequences::IndexSequence;
pub use systems::{Alphabet, Distance, Sidedness, State, SymbolicPoint, System};

//! Poisson and Nijenhuis calculus on Lie algebroids over coordinate patches.
//!
//! Structures are described by coordinate expressions on a box; every
//! derived identity (bracket axioms, torsion vanishing, modular-form
//! relations, hierarchy compatibility) is evaluated as an exact pointwise
//! residual through truncated Taylor arithmetic, so a check that passes does
//! so to round-off, not to a finite-difference error.

// Matrix and multi-index code reads better with explicit index loops.
#![allow(clippy::needless_range_loop)]

pub mod error;
pub mod exprlang;
pub mod exterior;
pub mod jets;
pub mod report;
pub mod sample;
pub mod scalar;

pub mod algebroid;
pub mod config;
pub mod flows;
pub mod hierarchy;
pub mod modular;
pub mod nijenhuis;
pub mod poisson;
pub mod suite;
pub mod toda;

pub use error::{Error, Result};

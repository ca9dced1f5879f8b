//! Quantum annealing of the ferromagnetic p-spin model with an
//! antiferromagnetic fluctuation driver.
//!
//! The crate covers the mean-field phase diagram, exact spectra in the
//! maximal-spin sector, gap scaling, and Schrödinger evolution along
//! annealing paths.

// `!(x > 0.0)` and friends are used on purpose: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod anneal;
pub mod eigen;
pub mod error;
pub mod meanfield;
pub mod phasediagram;
pub mod schedule;
pub mod sector;
pub mod spectrum;

pub use error::{Error, Result};
pub use schedule::{AnnealPath, SchedulePath, SchedulePoint};
pub use sector::{BandedSymmetricOperator, ModelParams, SectorBasis, SectorHamiltonian};

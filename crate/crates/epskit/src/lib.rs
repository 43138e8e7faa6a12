//! epskit: design and simulation toolkit for highly non-degenerate
//! entangled-photon-pair sources.
//!
//! The crate models one source end to end: quasi-phase-matched signal/idler
//! wavelengths and bandwidths, birefringent spatial and temporal walk-off in
//! a beam displacer, a wedge-pair compensator design with an independent
//! ray-trace check, Gaussian mode overlap, thermal phase stability of the
//! interferometer, and the polarization-entanglement measurements (visibility,
//! CHSH, pair rates) including a Monte Carlo photon-counting simulator.

// validation guards are written `!(x > 0.0)` so NaN fails them; the
// partial_cmp form clippy suggests buries that intent
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod displacer;
pub mod entanglement;
pub mod error;
pub mod materials;
pub mod overlap;
pub mod phasematch;
pub mod report;
pub mod run;
pub mod solver;
pub mod stability;
pub mod units;
pub mod wedges;

pub use error::{Error, Result};

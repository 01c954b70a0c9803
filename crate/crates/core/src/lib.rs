//! Simulation and analysis of time-bin entanglement between a write photon
//! and a collective atomic spin-wave that is later read out as a photon.
//!
//! The pipeline for one trial is: two-bin pair source ([`physics`]),
//! readout of the spin-wave after Zeeman de- and rephasing, imbalanced
//! Mach-Zehnder analysis of both photons ([`interferometer`]), and threshold
//! detection ([`montecarlo`]). [`analysis`] turns click records into
//! selectivity, correlation coefficients, fringe visibilities and the CHSH
//! parameter; [`lockloop`] simulates the interferometer phase lock.

// `!(x > 0.0)` rejects NaN along with out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analysis;
pub mod cli;
pub mod error;
pub mod interferometer;
pub mod lockloop;
pub mod montecarlo;
pub mod physics;

pub use error::{Error, Result};

//! Amplitude-level model of one trial: pair generation, spin-wave dephasing
//! and readout into read photons.

pub mod config;
pub mod dephasing;
pub mod register;
pub mod state;

pub use config::{ExperimentConfig, READOUT_TRANSFER_CEILING};
pub use dephasing::{overlap_efficiency, DephasingModel, ExcitationPath, DEFAULT_REPHASING_PERIOD};
pub use register::{Arm, Bin, Channel, Mode, ModeKind, ModeRegister, Occupation, Peak, Port};
pub use state::{apply_readout, build_joint_state, select_cutoff, squeezing_sqr, ReadoutTransfer};

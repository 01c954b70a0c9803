//! Flat TOML run configuration with units in the key names.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lockloop::LockConfig;
use crate::physics::ExperimentConfig;

const NS: f64 = 1e-9;
const MS: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConfigFile {
    pub mu: f64,
    pub write_phase_diff_rad: f64,
    pub bin_separation_ns: f64,
    pub rephasing_period_ns: f64,
    pub readout_time_ns: f64,
    pub readout_transfer: f64,
    pub allow_transfer_above_ceiling: bool,
    pub retrieval_efficiency: f64,
    pub read_phase_offset_rad: f64,
    pub detector_efficiency: f64,
    pub dark_count_prob: f64,
    pub background_photon_prob: f64,
    pub background_coherence: f64,
    pub phase_jitter_rad: f64,
    pub write_gate_ns: f64,
    pub read_gate_ns: f64,
    pub fock_cutoff: u8,
    pub fock_cutoff_max: u8,
    pub leakage_bound: f64,

    pub retrieval_t_max_ns: f64,
    pub retrieval_step_ns: f64,
    pub mu_values: Vec<f64>,
    pub scan_points: usize,
    pub scan_write_phases_rad: Vec<f64>,

    pub lock_drift_random_walk_rad2_per_s: f64,
    pub lock_drift_sine_amplitude_rad: f64,
    pub lock_drift_sine_frequency_hz: f64,
    pub lock_kp: f64,
    pub lock_ki_per_s: f64,
    pub lock_kd_s: f64,
    pub lock_loop_rate_hz: f64,
    pub lock_duration_ms: f64,
    pub lock_hold_duration_ms: f64,
    pub lock_setpoint: f64,
    pub lock_photodiode_noise: f64,
    pub lock_initial_offset_rad: f64,
    pub lock_total_time_ms: f64,
}

impl Default for ConfigFile {
    fn default() -> Self {
        let e = ExperimentConfig::default();
        let l = LockConfig::default();
        Self {
            mu: e.mu,
            write_phase_diff_rad: e.write_phase_diff,
            bin_separation_ns: 172.0,
            rephasing_period_ns: 344.0,
            readout_time_ns: 344.0,
            readout_transfer: e.readout_transfer,
            allow_transfer_above_ceiling: e.allow_transfer_above_ceiling,
            retrieval_efficiency: e.retrieval_efficiency,
            read_phase_offset_rad: e.read_phase_offset,
            detector_efficiency: e.detector_efficiency,
            dark_count_prob: e.dark_count_prob,
            background_photon_prob: e.background_photon_prob,
            background_coherence: e.background_coherence,
            phase_jitter_rad: e.phase_jitter,
            write_gate_ns: 30.0,
            read_gate_ns: 40.0,
            fock_cutoff: e.fock_cutoff,
            fock_cutoff_max: e.fock_cutoff_max,
            leakage_bound: e.leakage_bound,

            retrieval_t_max_ns: 800.0,
            retrieval_step_ns: 4.0,
            mu_values: vec![0.005, 0.02, 0.05, 0.1, 0.2],
            scan_points: 16,
            scan_write_phases_rad: vec![0.0, 1.431],

            lock_drift_random_walk_rad2_per_s: l.drift_random_walk,
            lock_drift_sine_amplitude_rad: l.drift_sine_amplitude,
            lock_drift_sine_frequency_hz: l.drift_sine_frequency,
            lock_kp: l.kp,
            lock_ki_per_s: l.ki,
            lock_kd_s: l.kd,
            lock_loop_rate_hz: l.loop_rate,
            lock_duration_ms: 13.3,
            lock_hold_duration_ms: 1.4,
            lock_setpoint: l.lock_setpoint,
            lock_photodiode_noise: l.photodiode_noise,
            lock_initial_offset_rad: l.initial_offset,
            lock_total_time_ms: 147.0,
        }
    }
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn experiment(&self) -> ExperimentConfig {
        ExperimentConfig {
            mu: self.mu,
            write_phase_diff: self.write_phase_diff_rad,
            bin_separation: self.bin_separation_ns * NS,
            rephasing_period: self.rephasing_period_ns * NS,
            readout_time: self.readout_time_ns * NS,
            readout_transfer: self.readout_transfer,
            allow_transfer_above_ceiling: self.allow_transfer_above_ceiling,
            retrieval_efficiency: self.retrieval_efficiency,
            read_phase_offset: self.read_phase_offset_rad,
            detector_efficiency: self.detector_efficiency,
            dark_count_prob: self.dark_count_prob,
            background_photon_prob: self.background_photon_prob,
            background_coherence: self.background_coherence,
            phase_jitter: self.phase_jitter_rad,
            write_gate: self.write_gate_ns * NS,
            read_gate: self.read_gate_ns * NS,
            fock_cutoff: self.fock_cutoff,
            fock_cutoff_max: self.fock_cutoff_max,
            leakage_bound: self.leakage_bound,
        }
    }

    pub fn lock(&self) -> LockConfig {
        LockConfig {
            drift_random_walk: self.lock_drift_random_walk_rad2_per_s,
            drift_sine_amplitude: self.lock_drift_sine_amplitude_rad,
            drift_sine_frequency: self.lock_drift_sine_frequency_hz,
            kp: self.lock_kp,
            ki: self.lock_ki_per_s,
            kd: self.lock_kd_s,
            loop_rate: self.lock_loop_rate_hz,
            lock_duration: self.lock_duration_ms * MS,
            hold_duration: self.lock_hold_duration_ms * MS,
            lock_setpoint: self.lock_setpoint,
            photodiode_noise: self.lock_photodiode_noise,
            initial_offset: self.lock_initial_offset_rad,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.experiment().validate()?;
        self.lock().validate()?;
        if !(self.retrieval_t_max_ns >= 0.0) || !(self.retrieval_step_ns > 0.0) {
            return Err(Error::invalid(
                "retrieval_step_ns",
                "sweep range must be non-negative with a positive step",
            ));
        }
        if self.mu_values.is_empty() || self.mu_values.iter().any(|m| !(*m >= 0.0)) {
            return Err(Error::invalid(
                "mu_values",
                "need at least one non-negative value",
            ));
        }
        if self.scan_points < 4 {
            return Err(Error::invalid(
                "scan_points",
                "a fringe fit needs at least 4 points",
            ));
        }
        if self.scan_write_phases_rad.iter().any(|p| !p.is_finite()) {
            return Err(Error::invalid("scan_write_phases_rad", "must be finite"));
        }
        if !(self.lock_total_time_ms > 0.0) {
            return Err(Error::invalid("lock_total_time_ms", "must be positive"));
        }
        Ok(())
    }

    /// Digest of the fully resolved configuration, defaults included.
    pub fn hash(&self) -> String {
        let canonical = toml::to_string(self).expect("config serialises");
        let digest = Sha256::digest(canonical.as_bytes());
        hex::encode(&digest[..8])
    }
}

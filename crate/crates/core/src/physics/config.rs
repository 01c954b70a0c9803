use serde::{Deserialize, Serialize};

use super::dephasing::DEFAULT_REPHASING_PERIOD;
use crate::error::{Error, Result};

/// Ceiling on the atom-to-photon transfer imposed by the pi/2 - pi read pulse pair.
pub const READOUT_TRANSFER_CEILING: f64 = 0.5;

/// Physical and statistical parameters of one simulated run. All times in seconds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    /// Mean number of pairs per time bin.
    pub mu: f64,
    /// Phase between the early and late write-pulse peaks, rad.
    pub write_phase_diff: f64,
    pub bin_separation: f64,
    pub rephasing_period: f64,
    /// Early read peak relative to the early write peak.
    pub readout_time: f64,
    pub readout_transfer: f64,
    /// Lifts the 0.5 ceiling on `readout_transfer`.
    pub allow_transfer_above_ceiling: bool,
    pub retrieval_efficiency: f64,
    /// Phase of the late read bin relative to the early one, rad.
    pub read_phase_offset: f64,
    pub detector_efficiency: f64,
    pub dark_count_prob: f64,
    pub background_photon_prob: f64,
    pub background_coherence: f64,
    /// Rms Gaussian phase noise on each interferometer, rad.
    pub phase_jitter: f64,
    pub write_gate: f64,
    pub read_gate: f64,
    /// Initial Fock cutoff per source mode.
    pub fock_cutoff: u8,
    /// Largest cutoff the state builder may escalate to.
    pub fock_cutoff_max: u8,
    /// Maximum truncated probability per bin.
    pub leakage_bound: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            mu: 0.02,
            write_phase_diff: 0.0,
            bin_separation: DEFAULT_REPHASING_PERIOD / 2.0,
            rephasing_period: DEFAULT_REPHASING_PERIOD,
            readout_time: DEFAULT_REPHASING_PERIOD,
            readout_transfer: READOUT_TRANSFER_CEILING,
            allow_transfer_above_ceiling: false,
            retrieval_efficiency: 0.4,
            read_phase_offset: 0.0,
            detector_efficiency: 0.5,
            dark_count_prob: 1e-6,
            background_photon_prob: 1e-3,
            background_coherence: 0.1,
            phase_jitter: 0.42,
            write_gate: 30e-9,
            read_gate: 40e-9,
            fock_cutoff: 2,
            fock_cutoff_max: 4,
            leakage_bound: 1e-3,
        }
    }
}

impl ExperimentConfig {
    /// Lossless, noiseless source with unit detection efficiency.
    pub fn ideal(mu: f64) -> Self {
        Self {
            mu,
            retrieval_efficiency: 1.0,
            detector_efficiency: 1.0,
            dark_count_prob: 0.0,
            background_photon_prob: 0.0,
            background_coherence: 0.0,
            phase_jitter: 0.0,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        fn unit(name: &'static str, v: f64) -> Result<()> {
            if (0.0..=1.0).contains(&v) {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("{v} is not in [0, 1]")))
            }
        }
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("{v} must be positive")))
            }
        }
        fn finite(name: &'static str, v: f64) -> Result<()> {
            if v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, "must be finite"))
            }
        }

        if !(self.mu >= 0.0) || !self.mu.is_finite() {
            return Err(Error::invalid("mu", format!("{} must be >= 0", self.mu)));
        }
        finite("write_phase_diff", self.write_phase_diff)?;
        finite("read_phase_offset", self.read_phase_offset)?;
        positive("bin_separation", self.bin_separation)?;
        positive("rephasing_period", self.rephasing_period)?;
        positive("readout_time", self.readout_time)?;
        positive("write_gate", self.write_gate)?;
        positive("read_gate", self.read_gate)?;
        unit("readout_transfer", self.readout_transfer)?;
        if self.readout_transfer > READOUT_TRANSFER_CEILING && !self.allow_transfer_above_ceiling {
            return Err(Error::invalid(
                "readout_transfer",
                format!(
                    "{} exceeds the {READOUT_TRANSFER_CEILING} ceiling of the two-peak read scheme",
                    self.readout_transfer
                ),
            ));
        }
        unit("retrieval_efficiency", self.retrieval_efficiency)?;
        unit("detector_efficiency", self.detector_efficiency)?;
        unit("dark_count_prob", self.dark_count_prob)?;
        unit("background_photon_prob", self.background_photon_prob)?;
        unit("background_coherence", self.background_coherence)?;
        if !(self.phase_jitter >= 0.0) || !self.phase_jitter.is_finite() {
            return Err(Error::invalid("phase_jitter", "must be >= 0"));
        }
        if self.write_gate > self.bin_separation || self.read_gate > self.bin_separation {
            return Err(Error::invalid(
                "gates",
                "detection gates wider than the bin separation would merge adjacent peaks",
            ));
        }
        if self.fock_cutoff == 0 || self.fock_cutoff > self.fock_cutoff_max {
            return Err(Error::invalid(
                "fock_cutoff",
                "need 1 <= fock_cutoff <= fock_cutoff_max",
            ));
        }
        if self.fock_cutoff_max > 6 {
            return Err(Error::invalid(
                "fock_cutoff_max",
                "at most 6 photons per source mode",
            ));
        }
        if !(self.leakage_bound > 0.0 && self.leakage_bound < 1.0) {
            return Err(Error::invalid("leakage_bound", "must lie in (0, 1)"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        ExperimentConfig::default().validate().unwrap();
        ExperimentConfig::ideal(1e-3).validate().unwrap();
    }

    #[test]
    fn transfer_ceiling_needs_override() {
        let mut cfg = ExperimentConfig {
            readout_transfer: 0.8,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        cfg.allow_transfer_above_ceiling = true;
        cfg.validate().unwrap();
    }

    #[test]
    fn rejects_out_of_range() {
        for cfg in [
            ExperimentConfig {
                mu: -0.1,
                ..Default::default()
            },
            ExperimentConfig {
                detector_efficiency: 1.2,
                ..Default::default()
            },
            ExperimentConfig {
                readout_time: 0.0,
                ..Default::default()
            },
            ExperimentConfig {
                read_gate: 200e-9,
                ..Default::default()
            },
        ] {
            assert!(cfg.validate().is_err(), "{cfg:?}");
        }
    }
}

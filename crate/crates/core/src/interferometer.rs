//! Imbalanced Mach-Zehnder analysis of time-bin qubits.
//!
//! The long arm delays by exactly one bin separation, so an input pair of
//! bins (E, L) leaves in three temporal peaks: E through the short arm,
//! E-long overlapping L-short, and L through the long arm. Only the central
//! peak projects onto the equator of the Bloch sphere.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{Arm, Bin, Channel, Mode, ModeRegister, Peak, Port};

const DELAY_TOLERANCE: f64 = 1e-9;

/// Fringe shift observed between two write-piezo voltages, 82 degrees per 0.268 V.
pub const DEFAULT_RADIANS_PER_VOLT: f64 = 82.0 * PI / 180.0 / 0.268;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PiezoCalibration {
    pub radians_per_volt: f64,
    pub offset: f64,
}

impl Default for PiezoCalibration {
    fn default() -> Self {
        Self {
            radians_per_volt: DEFAULT_RADIANS_PER_VOLT,
            offset: 0.0,
        }
    }
}

impl PiezoCalibration {
    pub fn validate(&self) -> Result<()> {
        if self.radians_per_volt == 0.0 || !self.radians_per_volt.is_finite() {
            return Err(Error::invalid(
                "radians_per_volt",
                "must be finite and non-zero",
            ));
        }
        Ok(())
    }
}

pub fn voltage_to_phase(volts: f64, cal: &PiezoCalibration) -> f64 {
    cal.radians_per_volt * volts + cal.offset
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterferometerSetting {
    /// Phase of the long arm relative to the short one, rad.
    pub arm_phase: f64,
    /// Arm delay, s.
    pub delay: f64,
    /// Intensity fraction sent into the short arm by each coupler.
    pub splitting_ratio: f64,
    pub piezo_voltage: Option<f64>,
}

impl InterferometerSetting {
    pub fn new(arm_phase: f64, delay: f64) -> Self {
        Self {
            arm_phase,
            delay,
            splitting_ratio: 0.5,
            piezo_voltage: None,
        }
    }

    pub fn from_voltage(volts: f64, cal: &PiezoCalibration, delay: f64) -> Self {
        Self {
            arm_phase: voltage_to_phase(volts, cal),
            delay,
            splitting_ratio: 0.5,
            piezo_voltage: Some(volts),
        }
    }

    pub fn with_phase(self, arm_phase: f64) -> Self {
        Self {
            arm_phase,
            piezo_voltage: None,
            ..self
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.splitting_ratio > 0.0 && self.splitting_ratio < 1.0) {
            return Err(Error::invalid("splitting_ratio", "must lie in (0, 1)"));
        }
        if !(self.delay > 0.0) || !self.delay.is_finite() {
            return Err(Error::invalid("delay", "must be positive"));
        }
        if !self.arm_phase.is_finite() {
            return Err(Error::invalid("arm_phase", "must be finite"));
        }
        Ok(())
    }

    pub fn check_delay(&self, bin_separation: f64) -> Result<()> {
        if (self.delay - bin_separation).abs() > DELAY_TOLERANCE * bin_separation {
            return Err(Error::DelayMismatch {
                delay: self.delay,
                separation: bin_separation,
            });
        }
        Ok(())
    }

    /// Output amplitudes of a single photon entering in `bin`.
    pub fn output_amplitudes(&self, bin: Bin) -> [(Peak, Port, Complex64); 4] {
        let s = self.splitting_ratio;
        let cross = (s * (1.0 - s)).sqrt();
        let long = Complex64::from_polar(1.0, self.arm_phase);
        let (short_peak, long_peak) = match bin {
            Bin::Early => (Peak::Early, Peak::Central),
            Bin::Late => (Peak::Central, Peak::Late),
        };
        [
            (short_peak, Port::Plus, Complex64::new(s, 0.0)),
            (short_peak, Port::Minus, Complex64::new(cross, 0.0)),
            (long_peak, Port::Plus, long * (1.0 - s)),
            (long_peak, Port::Minus, -long * cross),
        ]
    }
}

pub const PEAKS: [Peak; 3] = [Peak::Early, Peak::Central, Peak::Late];
pub const PORTS: [Port; 2] = [Port::Plus, Port::Minus];

/// Sends every time-bin photon mode of `arm` through the interferometer.
pub fn apply_mzi(
    state: &ModeRegister,
    arm: Arm,
    setting: &InterferometerSetting,
) -> Result<ModeRegister> {
    setting.validate()?;
    if let Some(sep) = state.bin_separation() {
        setting.check_delay(sep)?;
    }
    let inputs: Vec<(Bin, Channel)> = state
        .modes()
        .iter()
        .filter_map(|m| match *m {
            Mode::Photon {
                arm: a,
                bin,
                channel,
            } if a == arm => Some((bin, channel)),
            _ => None,
        })
        .collect();
    if inputs.is_empty() {
        return Err(Error::MissingMode(format!("{arm:?} time-bin photon modes")));
    }
    let mut out = state.clone();
    for (bin, channel) in inputs {
        let targets: Vec<(Mode, Complex64)> = setting
            .output_amplitudes(bin)
            .into_iter()
            .map(|(peak, port, c)| {
                (
                    Mode::Detected {
                        arm,
                        peak,
                        port,
                        channel,
                    },
                    c,
                )
            })
            .collect();
        out.substitute(Mode::Photon { arm, bin, channel }, &targets)?;
    }
    Ok(out)
}

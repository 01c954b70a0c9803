//! Zeeman de- and rephasing of the stored spin-wave.
//!
//! The collective excitation is a weighted superposition of excitation paths,
//! each accumulating phase at its own two-photon detuning. Collective
//! retrieval is proportional to the overlap of the evolved state with the
//! initial one, `|sum_k w_k exp(i dw_k t)|^2`.

use std::f64::consts::{PI, TAU};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Rephasing period of the default model, 344 ns.
pub const DEFAULT_REPHASING_PERIOD: f64 = 344e-9;

const WEIGHT_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExcitationPath {
    /// Two-photon detuning, rad/s.
    pub detuning: f64,
    /// Amplitude weight; all weights of a model sum to one.
    pub weight: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DephasingModel {
    paths: Vec<ExcitationPath>,
    rephasing_period: f64,
}

impl DephasingModel {
    pub fn new(paths: Vec<ExcitationPath>, rephasing_period: f64) -> Result<Self> {
        let model = Self {
            paths,
            rephasing_period,
        };
        model.validate()?;
        Ok(model)
    }

    /// Two equally weighted paths at `+-pi/T_r`, giving `cos^2(pi t / T_r)`.
    pub fn two_path(rephasing_period: f64) -> Result<Self> {
        let dw = PI / rephasing_period;
        Self::new(
            vec![
                ExcitationPath {
                    detuning: dw,
                    weight: 0.5,
                },
                ExcitationPath {
                    detuning: -dw,
                    weight: 0.5,
                },
            ],
            rephasing_period,
        )
    }

    /// A single path with zero detuning: no magnetic dephasing at all.
    pub fn no_dephasing(rephasing_period: f64) -> Result<Self> {
        Self::new(
            vec![ExcitationPath {
                detuning: 0.0,
                weight: 1.0,
            }],
            rephasing_period,
        )
    }

    pub fn paths(&self) -> &[ExcitationPath] {
        &self.paths
    }

    pub fn rephasing_period(&self) -> f64 {
        self.rephasing_period
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths.is_empty() {
            return Err(Error::invalid(
                "dephasing.paths",
                "at least one excitation path is required",
            ));
        }
        if !(self.rephasing_period > 0.0) || !self.rephasing_period.is_finite() {
            return Err(Error::invalid(
                "dephasing.rephasing_period",
                "must be positive and finite",
            ));
        }
        let mut total = 0.0;
        for p in &self.paths {
            if !(p.weight >= 0.0) || !p.detuning.is_finite() {
                return Err(Error::invalid(
                    "dephasing.paths",
                    format!("weight {} / detuning {} not allowed", p.weight, p.detuning),
                ));
            }
            total += p.weight;
        }
        if (total - 1.0).abs() > WEIGHT_TOLERANCE {
            return Err(Error::invalid(
                "dephasing.paths",
                format!("weights sum to {total}, expected 1"),
            ));
        }
        Ok(())
    }

    /// True when every pairwise detuning difference is an integer multiple of
    /// `2 pi / T_r`, which makes the overlap periodic in `T_r`.
    pub fn is_commensurate(&self) -> bool {
        let first = self.paths[0].detuning;
        self.paths.iter().all(|p| {
            let turns = (p.detuning - first) * self.rephasing_period / TAU;
            (turns - turns.round()).abs() < 1e-9
        })
    }

    /// Overlap amplitude `<Psi(0)|Psi(t)>` (up to conjugation convention).
    pub fn overlap_amplitude(&self, t: f64) -> Complex64 {
        self.paths
            .iter()
            .map(|p| Complex64::from_polar(p.weight, p.detuning * t))
            .sum()
    }
}

/// Relative collective retrieval efficiency after storage time `t`.
pub fn overlap_efficiency(model: &DephasingModel, t: f64) -> Result<f64> {
    model.validate()?;
    if !(t >= 0.0) {
        return Err(Error::invalid(
            "t",
            format!("storage time must be >= 0, got {t}"),
        ));
    }
    Ok(model.overlap_amplitude(t).norm_sqr().clamp(0.0, 1.0))
}

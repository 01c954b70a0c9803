//! Pair generation in two time bins and the atom-to-photon readout.

use num_complex::Complex64;

use super::config::ExperimentConfig;
use super::dephasing::{overlap_efficiency, DephasingModel};
use super::register::{Arm, Bin, Channel, Mode, ModeRegister};
use crate::error::{Error, Result};

/// Squared two-mode squeezing parameter for a mean pair number `mu`.
pub fn squeezing_sqr(mu: f64) -> f64 {
    mu / (1.0 + mu)
}

/// Smallest admissible cutoff for `cfg` and the per-bin probability it discards.
pub fn select_cutoff(cfg: &ExperimentConfig) -> Result<(u8, f64)> {
    let lambda_sqr = squeezing_sqr(cfg.mu);
    let mut cutoff = cfg.fock_cutoff;
    loop {
        let leakage = lambda_sqr.powi(cutoff as i32 + 1);
        if leakage < cfg.leakage_bound {
            return Ok((cutoff, leakage));
        }
        if cutoff >= cfg.fock_cutoff_max {
            return Err(Error::Truncation {
                leakage,
                bound: cfg.leakage_bound,
                cutoff,
            });
        }
        cutoff += 1;
    }
}

/// Two-bin, two-mode squeezed state of write photons and atomic excitations.
///
/// Each bin holds `sqrt(1 - l^2) l^n |n, n>` with `l^2 = mu / (1 + mu)`,
/// truncated at the selected cutoff and renormalised; every late-bin pair
/// picks up the write-pulse phase.
pub fn build_joint_state(cfg: &ExperimentConfig) -> Result<ModeRegister> {
    cfg.validate()?;
    let (cutoff, leakage) = select_cutoff(cfg)?;
    let lambda = squeezing_sqr(cfg.mu).sqrt();
    let renorm = (1.0 - leakage).sqrt();
    let amp: Vec<f64> = (0..=cutoff)
        .map(|n| (1.0 - lambda * lambda).sqrt() * lambda.powi(n as i32) / renorm)
        .collect();

    let modes = vec![
        Mode::photon(Arm::Write, Bin::Early),
        Mode::Atomic(Bin::Early),
        Mode::photon(Arm::Write, Bin::Late),
        Mode::Atomic(Bin::Late),
    ];
    let mut terms = Vec::with_capacity(amp.len() * amp.len());
    for (ne, &ae) in amp.iter().enumerate() {
        for (nl, &al) in amp.iter().enumerate() {
            if ae * al == 0.0 && (ne, nl) != (0, 0) {
                continue;
            }
            let phase = Complex64::from_polar(1.0, nl as f64 * cfg.write_phase_diff);
            let (ne, nl) = (ne as u8, nl as u8);
            terms.push((vec![ne, ne, nl, nl], phase * ae * al));
        }
    }
    Ok(
        ModeRegister::from_terms(modes, terms)?.with_source_metadata(
            cutoff,
            leakage,
            cfg.bin_separation,
        ),
    )
}

/// Transfer probabilities from each atomic bin into each read bin.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ReadoutTransfer {
    /// Early excitation into the early read peak.
    pub early_early: f64,
    /// Late excitation into the late read peak.
    pub late_late: f64,
    /// Early excitation into the late read peak.
    pub early_late: f64,
    /// Late excitation into the early read peak.
    pub late_early: f64,
}

impl ReadoutTransfer {
    pub fn new(cfg: &ExperimentConfig, model: &DephasingModel) -> Result<Self> {
        let scale = cfg.retrieval_efficiency * cfg.readout_transfer;
        let t_r = cfg.readout_time;
        let sep = cfg.bin_separation;
        let late_early = if t_r >= sep {
            scale * overlap_efficiency(model, t_r - sep)?
        } else {
            0.0
        };
        let this = Self {
            early_early: scale * overlap_efficiency(model, t_r)?,
            late_late: scale * overlap_efficiency(model, t_r)?,
            early_late: scale * overlap_efficiency(model, t_r + sep)?,
            late_early,
        };
        if this.early_early + this.early_late > 1.0 + 1e-12
            || this.late_late + this.late_early > 1.0 + 1e-12
        {
            return Err(Error::invalid(
                "readout_transfer",
                "total retrieval probability of an atomic bin exceeds one",
            ));
        }
        Ok(this)
    }
}

/// Maps both atomic bins onto read photons through beam-splitter transfers.
/// Unretrieved amplitude goes to a loss mode per bin.
pub fn apply_readout(
    state: &ModeRegister,
    cfg: &ExperimentConfig,
    model: &DephasingModel,
) -> Result<ModeRegister> {
    for bin in [Bin::Early, Bin::Late] {
        if !state.contains(Mode::Atomic(bin)) {
            return Err(Error::MissingMode(Mode::Atomic(bin).to_string()));
        }
    }
    let eta = ReadoutTransfer::new(cfg, model)?;
    let offset = Complex64::from_polar(1.0, cfg.read_phase_offset);
    let amp = |p: f64| Complex64::new(p.max(0.0).sqrt(), 0.0);

    let early = vec![
        (Mode::photon(Arm::Read, Bin::Early), amp(eta.early_early)),
        (
            Mode::Photon {
                arm: Arm::Read,
                bin: Bin::Late,
                channel: Channel::Stray(Bin::Early),
            },
            amp(eta.early_late),
        ),
        (
            Mode::Lost(Bin::Early),
            amp(1.0 - eta.early_early - eta.early_late),
        ),
    ];
    let late = vec![
        (
            Mode::photon(Arm::Read, Bin::Late),
            offset * amp(eta.late_late),
        ),
        (
            Mode::Photon {
                arm: Arm::Read,
                bin: Bin::Early,
                channel: Channel::Stray(Bin::Late),
            },
            amp(eta.late_early),
        ),
        (
            Mode::Lost(Bin::Late),
            amp(1.0 - eta.late_late - eta.late_early),
        ),
    ];
    let mut out = state.clone();
    out.substitute(Mode::Atomic(Bin::Early), &early)?;
    out.substitute(Mode::Atomic(Bin::Late), &late)?;
    Ok(out)
}

//! Fringe scans and tables drawn from the exact outcome distribution.

use std::f64::consts::TAU;

use super::coincidence::{
    expected_table, table_from_pattern_counts, CoincidenceTable, CountingMode,
};
use super::fit::{FringePoint, FringeScan};
use super::stats::correlation;
use crate::error::Result;
use crate::montecarlo::{
    sample_pattern_counts, AnalyzerSettings, OutcomeModel, TrialOutcomeDistribution,
};
use crate::physics::ExperimentConfig;

/// Seed of sweep point `k`.
pub fn point_seed(seed: u64, k: usize) -> u64 {
    seed.wrapping_add((k as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Fringe offset `phi0` in `E = V cos(phi_w + phi_r + phi0)`.
pub fn fringe_offset(cfg: &ExperimentConfig) -> f64 {
    -(cfg.write_phase_diff + cfg.read_phase_offset)
}

/// Coincidence table of `trials` trials drawn as one multinomial sample.
pub fn sampled_table(
    dist: &TrialOutcomeDistribution,
    mode: CountingMode,
    trials: u64,
    seed: u64,
) -> CoincidenceTable {
    table_from_pattern_counts(&sample_pattern_counts(dist, trials, seed), mode)
}

pub struct ScanResult {
    pub scan: FringeScan,
    pub model: Vec<f64>,
    pub coincidences: u64,
    /// Coincidences at each scan point.
    pub point_coincidences: Vec<u64>,
    pub trials: u64,
}

/// Sampled correlation fringe over `points` read phases in `[0, 2 pi)`, with
/// the exact correlation of each point in `model`.
pub fn simulated_fringe(
    om: &OutcomeModel,
    cfg: &ExperimentConfig,
    write_phase: f64,
    points: usize,
    trials: u64,
    seed: u64,
) -> Result<ScanResult> {
    let mut out = ScanResult {
        scan: FringeScan::default(),
        model: Vec::new(),
        coincidences: 0,
        point_coincidences: Vec::with_capacity(points),
        trials: 0,
    };
    for k in 0..points {
        let phase = TAU * k as f64 / points as f64;
        let dist = om.distribution(&AnalyzerSettings::for_config(cfg, write_phase, phase))?;
        out.model
            .push(expected_table(&dist, CountingMode::CentralPeak).correlation());
        let table = sampled_table(
            &dist,
            CountingMode::CentralPeak,
            trials,
            point_seed(seed, k),
        );
        let e = correlation(&table)?;
        out.coincidences += table.total();
        out.point_coincidences.push(table.total());
        out.trials += table.trials;
        out.scan.points.push(FringePoint {
            phase,
            e: e.value,
            sigma: e.sigma,
        });
    }
    Ok(out)
}

#![allow(dead_code)]

use statrs::distribution::{ChiSquared, ContinuousCDF};
use timebin::analysis::{expected_table, fringe_offset, CountingMode};
use timebin::montecarlo::{AnalyzerSettings, OutcomeModel, TrialOutcomeDistribution};
use timebin::physics::{DephasingModel, ExperimentConfig};

pub fn outcome_model(cfg: &ExperimentConfig) -> OutcomeModel {
    OutcomeModel::new(
        cfg,
        &DephasingModel::two_path(cfg.rephasing_period).unwrap(),
    )
    .unwrap()
}

pub fn distribution(cfg: &ExperimentConfig, w: f64, r: f64) -> TrialOutcomeDistribution {
    outcome_model(cfg)
        .distribution(&AnalyzerSettings::for_config(cfg, w, r))
        .unwrap()
}

/// Exact correlation coefficient at the fringe maximum.
pub fn model_visibility(cfg: &ExperimentConfig) -> f64 {
    let d = distribution(cfg, 0.0, -fringe_offset(cfg));
    expected_table(&d, CountingMode::CentralPeak).correlation()
}

/// Pearson chi-square p-value of pattern counts against probabilities.
/// Patterns expected fewer than 5 times are pooled into one bin.
pub fn chi_square_pvalue(counts: &[u64], probs: &[f64]) -> (f64, f64, usize) {
    let n: u64 = counts.iter().sum();
    let (mut stat, mut bins) = (0.0, 0usize);
    let (mut pooled_obs, mut pooled_exp) = (0.0, 0.0);
    for (&c, &p) in counts.iter().zip(probs) {
        let e = p * n as f64;
        if e >= 5.0 {
            stat += (c as f64 - e).powi(2) / e;
            bins += 1;
        } else {
            pooled_obs += c as f64;
            pooled_exp += e;
        }
    }
    if pooled_exp > 0.0 {
        stat += (pooled_obs - pooled_exp).powi(2) / pooled_exp;
        bins += 1;
    }
    let df = (bins - 1) as f64;
    let p = 1.0 - ChiSquared::new(df).unwrap().cdf(stat);
    (p, stat, bins - 1)
}

/// Histogram of sampled pattern bits.
pub fn pattern_histogram(patterns: &[timebin::montecarlo::ClickPattern]) -> Vec<u64> {
    let mut h = vec![0u64; timebin::montecarlo::PATTERNS];
    for p in patterns {
        h[p.bits() as usize] += 1;
    }
    h
}

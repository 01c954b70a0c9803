//! Seeded sampling of trials from an outcome distribution.
//!
//! Every trial draws from its own ChaCha stream selected by the trial id, so
//! results do not depend on how trials are split across threads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use rayon::prelude::*;

use super::distribution::{AnalyzerSettings, RetrievalOutcome, TrialOutcomeDistribution};
use super::pattern::{pattern_records, ClickPattern, DetectionRecord, PATTERNS};
use crate::error::Result;
use crate::physics::{DephasingModel, ExperimentConfig};

const CHUNK: u64 = 1 << 15;

/// Random stream of one trial.
pub fn trial_rng(seed: u64, trial_id: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial_id);
    rng
}

/// Inverse-CDF sampler over the patterns with non-zero probability.
#[derive(Debug, Clone)]
pub struct PatternSampler {
    cumulative: Vec<f64>,
    patterns: Vec<ClickPattern>,
}

impl PatternSampler {
    pub fn new(dist: &TrialOutcomeDistribution) -> Self {
        let mut acc = 0.0;
        let (mut cumulative, mut patterns) = (Vec::new(), Vec::new());
        for (pat, p) in dist.iter() {
            acc += p;
            cumulative.push(acc);
            patterns.push(pat);
        }
        Self {
            cumulative,
            patterns,
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> ClickPattern {
        let total = *self.cumulative.last().unwrap_or(&1.0);
        let u = rng.random::<f64>() * total;
        let i = self.cumulative.partition_point(|&c| c <= u);
        self.patterns[i.min(self.patterns.len().saturating_sub(1))]
    }
}

/// One click pattern per trial, trial ids `0..n_trials`.
pub fn sample_patterns(
    dist: &TrialOutcomeDistribution,
    n_trials: u64,
    seed: u64,
) -> Vec<ClickPattern> {
    let sampler = PatternSampler::new(dist);
    let chunks: Vec<u64> = (0..n_trials.div_ceil(CHUNK)).collect();
    chunks
        .par_iter()
        .map(|&c| {
            let start = c * CHUNK;
            let end = (start + CHUNK).min(n_trials);
            (start..end)
                .map(|t| sampler.sample(&mut trial_rng(seed, t)))
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>()
        .concat()
}

/// Click records of `n_trials` independent trials, in trial order.
pub fn sample_trials(
    dist: &TrialOutcomeDistribution,
    n_trials: u64,
    seed: u64,
) -> Vec<DetectionRecord> {
    sample_patterns(dist, n_trials, seed)
        .into_iter()
        .enumerate()
        .flat_map(|(t, pat)| pattern_records(t as u64, pat))
        .collect()
}

pub fn run_trials(
    cfg: &ExperimentConfig,
    model: &DephasingModel,
    settings: &AnalyzerSettings,
    n_trials: u64,
    seed: u64,
) -> Result<Vec<DetectionRecord>> {
    if n_trials == 0 {
        return Err(crate::error::Error::invalid("n_trials", "must be positive"));
    }
    let dist = super::distribution::outcome_distribution(cfg, model, settings)?;
    Ok(sample_trials(&dist, n_trials, seed))
}

/// Pattern counts of `n_trials` trials drawn as one multinomial sample.
/// Equal in law to histogramming `sample_patterns`, without per-trial work.
pub fn sample_pattern_counts(
    dist: &TrialOutcomeDistribution,
    n_trials: u64,
    seed: u64,
) -> Vec<u64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = vec![0u64; PATTERNS];
    let mut remaining = n_trials;
    let mut mass = dist.total();
    for (i, &p) in dist.as_slice().iter().enumerate() {
        if remaining == 0 || p <= 0.0 {
            continue;
        }
        let q = (p / mass).clamp(0.0, 1.0);
        let k = if q >= 1.0 {
            remaining
        } else {
            Binomial::new(remaining, q)
                .expect("valid binomial")
                .sample(&mut rng)
        };
        counts[i] = k;
        remaining -= k;
        mass -= p;
    }
    counts
}

/// Write-click and coincidence counts of `n_trials` retrieval trials.
pub fn sample_retrieval(outcome: &RetrievalOutcome, n_trials: u64, seed: u64) -> (u64, u64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pw = outcome.write_click.clamp(0.0, 1.0);
    let writes = Binomial::new(n_trials, pw)
        .expect("valid binomial")
        .sample(&mut rng);
    let q = if pw > 0.0 {
        (outcome.coincidence / pw).clamp(0.0, 1.0)
    } else {
        0.0
    };
    let both = Binomial::new(writes, q)
        .expect("valid binomial")
        .sample(&mut rng);
    (writes, both)
}

//! Coincidence counting over click records.

use std::collections::BTreeMap;
use std::ops::{Add, AddAssign};

use rayon::prelude::*;

use crate::montecarlo::{ClickPattern, DetectionRecord, Detector, TrialOutcomeDistribution};
use crate::physics::{Arm, Peak, Port};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum CountingMode {
    /// Write x read time-bin coincidences from the E and L side peaks.
    SidePeaks,
    /// Detector-pair coincidences within the central peak.
    CentralPeak,
}

/// Coincidence counts. For side peaks `counts[b_w][b_r]` with 0 = early and
/// 1 = late; for the central peak `counts[i][j]` with 0 = `+` and 1 = `-`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoincidenceTable {
    pub mode: CountingMode,
    pub counts: [[u64; 2]; 2],
    pub trials: u64,
    /// Trials dropped because one arm clicked more than once in the counted peaks.
    pub discarded: u64,
}

impl CoincidenceTable {
    pub fn empty(mode: CountingMode) -> Self {
        Self {
            mode,
            counts: [[0; 2]; 2],
            trials: 0,
            discarded: 0,
        }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Multiplies every count by `k`.
    pub fn scaled(&self, k: u64) -> Self {
        let mut out = *self;
        for c in out.counts.iter_mut().flatten() {
            *c *= k;
        }
        out.trials *= k;
        out.discarded *= k;
        out
    }
}

impl AddAssign for CoincidenceTable {
    fn add_assign(&mut self, rhs: Self) {
        debug_assert_eq!(self.mode, rhs.mode);
        for i in 0..2 {
            for j in 0..2 {
                self.counts[i][j] += rhs.counts[i][j];
            }
        }
        self.trials += rhs.trials;
        self.discarded += rhs.discarded;
    }
}

impl Add for CoincidenceTable {
    type Output = Self;

    fn add(mut self, rhs: Self) -> Self {
        self += rhs;
        self
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TrialClass {
    Coincidence(usize, usize),
    Discarded,
    Nothing,
}

fn counted(mode: CountingMode, peak: Peak) -> bool {
    match mode {
        CountingMode::SidePeaks => peak != Peak::Central,
        CountingMode::CentralPeak => peak == Peak::Central,
    }
}

fn cell(mode: CountingMode, peak: Peak, port: Port) -> usize {
    match mode {
        CountingMode::SidePeaks => usize::from(peak == Peak::Late),
        CountingMode::CentralPeak => usize::from(port == Port::Minus),
    }
}

pub fn classify(pattern: ClickPattern, mode: CountingMode) -> TrialClass {
    let mut n = [0usize; 2];
    let mut idx = [0usize; 2];
    for (arm, peak, port) in pattern.clicks() {
        if counted(mode, peak) {
            let a = usize::from(arm == Arm::Read);
            n[a] += 1;
            idx[a] = cell(mode, peak, port);
        }
    }
    match n {
        [1, 1] => TrialClass::Coincidence(idx[0], idx[1]),
        [w, r] if (w >= 2 && r >= 1) || (r >= 2 && w >= 1) => TrialClass::Discarded,
        _ => TrialClass::Nothing,
    }
}

/// Tallies a sequence of per-trial click patterns.
pub fn table_from_patterns(patterns: &[ClickPattern], mode: CountingMode) -> CoincidenceTable {
    let mut t = CoincidenceTable::empty(mode);
    t.trials = patterns.len() as u64;
    for &p in patterns {
        match classify(p, mode) {
            TrialClass::Coincidence(i, j) => t.counts[i][j] += 1,
            TrialClass::Discarded => t.discarded += 1,
            TrialClass::Nothing => {}
        }
    }
    t
}

/// Same as [`table_from_patterns`], reduced over parallel chunks.
pub fn table_from_patterns_parallel(
    patterns: &[ClickPattern],
    mode: CountingMode,
) -> CoincidenceTable {
    patterns
        .par_chunks(1 << 14)
        .map(|c| table_from_patterns(c, mode))
        .reduce(|| CoincidenceTable::empty(mode), |a, b| a + b)
}

/// Tallies from pattern counts indexed by pattern bits.
pub fn table_from_pattern_counts(counts: &[u64], mode: CountingMode) -> CoincidenceTable {
    let mut t = CoincidenceTable::empty(mode);
    for (bits, &n) in counts.iter().enumerate() {
        t.trials += n;
        match classify(ClickPattern::from_bits(bits as u16), mode) {
            TrialClass::Coincidence(i, j) => t.counts[i][j] += n,
            TrialClass::Discarded => t.discarded += n,
            TrialClass::Nothing => {}
        }
    }
    t
}

/// Click pattern of every trial that produced at least one record.
pub fn patterns_by_trial(records: &[DetectionRecord]) -> BTreeMap<u64, ClickPattern> {
    let mut out: BTreeMap<u64, ClickPattern> = BTreeMap::new();
    for r in records {
        out.entry(r.trial_id)
            .or_default()
            .insert(r.detector.arm(), r.peak, r.detector.port());
    }
    out
}

/// Coincidence table of a click stream covering `trials` trials.
pub fn coincidences(
    records: &[DetectionRecord],
    mode: CountingMode,
    trials: u64,
) -> CoincidenceTable {
    let patterns: Vec<ClickPattern> = patterns_by_trial(records).into_values().collect();
    let mut t = table_from_patterns(&patterns, mode);
    t.trials = trials;
    t
}

pub fn coincidences_parallel(
    records: &[DetectionRecord],
    mode: CountingMode,
    trials: u64,
) -> CoincidenceTable {
    let patterns: Vec<ClickPattern> = patterns_by_trial(records).into_values().collect();
    let mut t = table_from_patterns_parallel(&patterns, mode);
    t.trials = trials;
    t
}

/// Cell probabilities per trial implied by an outcome distribution.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpectedTable {
    pub mode: CountingMode,
    pub probs: [[f64; 2]; 2],
    pub discarded: f64,
}

impl ExpectedTable {
    pub fn total(&self) -> f64 {
        self.probs.iter().flatten().sum()
    }

    /// Correlation coefficient of the central-peak cells.
    pub fn correlation(&self) -> f64 {
        let p = &self.probs;
        (p[0][0] - p[0][1] - p[1][0] + p[1][1]) / self.total()
    }

    /// Fraction of side-peak coincidences in matching bins.
    pub fn selectivity(&self) -> f64 {
        let p = &self.probs;
        (p[0][0] + p[1][1]) / self.total()
    }
}

pub fn expected_table(dist: &TrialOutcomeDistribution, mode: CountingMode) -> ExpectedTable {
    let mut t = ExpectedTable {
        mode,
        probs: [[0.0; 2]; 2],
        discarded: 0.0,
    };
    for (pat, p) in dist.iter() {
        match classify(pat, mode) {
            TrialClass::Coincidence(i, j) => t.probs[i][j] += p,
            TrialClass::Discarded => t.discarded += p,
            TrialClass::Nothing => {}
        }
    }
    t
}

/// Click counts per (peak, detector).
pub fn histogram(records: &[DetectionRecord]) -> BTreeMap<(Peak, Detector), u64> {
    let mut out = BTreeMap::new();
    for r in records {
        *out.entry((r.peak, r.detector)).or_insert(0) += 1;
    }
    out
}

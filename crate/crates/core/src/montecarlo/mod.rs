//! Trial sampling: exact click-pattern distributions, seeded samplers and
//! the event-stream file format.

pub mod distribution;
pub mod events;
pub mod pattern;
pub mod sampler;

pub use distribution::{
    outcome_distribution, retrieval_outcome, AnalyzerSettings, OutcomeModel, RetrievalOutcome,
    TrialOutcomeDistribution,
};
pub use events::{read_events, write_events, EventStream};
pub use pattern::{
    gate_index, gate_of, parse_peak, pattern_records, peak_label, ClickPattern, DetectionRecord,
    Detector, GATES, GATES_PER_ARM, PATTERNS,
};
pub use sampler::{
    run_trials, sample_pattern_counts, sample_patterns, sample_retrieval, sample_trials, trial_rng,
    PatternSampler,
};

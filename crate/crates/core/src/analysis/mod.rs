//! Coincidence tables, correlation estimates, fringe fits and CHSH.

mod chsh;
mod coincidence;
mod fit;
mod simulate;
mod stats;

use std::collections::BTreeMap;
use std::io::Write;

pub use chsh::{chsh, optimal_settings, BellComponent, BellResult};
pub use coincidence::{
    classify, coincidences, coincidences_parallel, expected_table, histogram, patterns_by_trial,
    table_from_pattern_counts, table_from_patterns, table_from_patterns_parallel, CoincidenceTable,
    CountingMode, ExpectedTable, TrialClass,
};
pub use fit::{fit_visibility, wrap_phase, FringePoint, FringeScan, VisibilityFit};
pub use simulate::{fringe_offset, point_seed, sampled_table, simulated_fringe, ScanResult};
pub use stats::{bootstrap_correlation, correlation, selectivity, Estimate};

use crate::error::Result;
use crate::montecarlo::{peak_label, Detector};
use crate::physics::Peak;

/// `setting,E,sigma_E`
pub fn write_fringe_csv<W: Write>(mut w: W, scan: &FringeScan) -> Result<()> {
    writeln!(w, "setting,E,sigma_E")?;
    for p in &scan.points {
        writeln!(w, "{:.6},{:.6},{:.6}", p.phase, p.e, p.sigma)?;
    }
    Ok(())
}

/// `S,sigma_S`
pub fn write_bell_csv<W: Write>(mut w: W, result: &BellResult) -> Result<()> {
    writeln!(w, "S,sigma_S")?;
    writeln!(w, "{:.6},{:.6}", result.s, result.sigma_s)?;
    Ok(())
}

/// `peak,detector,count`, one row per (peak, detector) pair.
pub fn write_histogram_csv<W: Write>(
    mut w: W,
    hist: &BTreeMap<(Peak, Detector), u64>,
) -> Result<()> {
    writeln!(w, "peak,detector,count")?;
    for peak in [Peak::Early, Peak::Central, Peak::Late] {
        for det in Detector::ALL {
            let n = hist.get(&(peak, det)).copied().unwrap_or(0);
            writeln!(w, "{},{},{n}", peak_label(peak), det)?;
        }
    }
    Ok(())
}

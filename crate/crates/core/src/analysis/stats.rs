//! Selectivity and correlation estimates with counting errors.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use super::coincidence::{CoincidenceTable, CountingMode};
use crate::error::{Error, Result};

/// A value with its one-standard-deviation error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub value: f64,
    pub sigma: f64,
}

fn require(table: &CoincidenceTable, mode: CountingMode, what: &str) -> Result<()> {
    if table.mode != mode {
        return Err(Error::Undefined(format!(
            "{what} needs a {mode:?} table, got {:?}",
            table.mode
        )));
    }
    if table.total() == 0 {
        return Err(Error::Undefined(format!(
            "{what} of a table with no coincidences"
        )));
    }
    Ok(())
}

/// `(C_EE + C_LL) / sum C` with a binomial error.
pub fn selectivity(table: &CoincidenceTable) -> Result<Estimate> {
    require(table, CountingMode::SidePeaks, "selectivity")?;
    let c = &table.counts;
    let n = table.total() as f64;
    let value = (c[0][0] + c[1][1]) as f64 / n;
    Ok(Estimate {
        value,
        sigma: (value * (1.0 - value) / n).sqrt(),
    })
}

/// Correlation coefficient `(N++ - N+- - N-+ + N--) / sum N`.
///
/// Poisson propagation of the four counts gives `sigma^2 = (1 - E^2) / N`.
pub fn correlation(table: &CoincidenceTable) -> Result<Estimate> {
    require(table, CountingMode::CentralPeak, "correlation")?;
    let c = &table.counts;
    let same = (c[0][0] + c[1][1]) as f64;
    let diff = (c[0][1] + c[1][0]) as f64;
    let n = same + diff;
    let value = (same - diff) / n;
    Ok(Estimate {
        value,
        sigma: ((1.0 - value * value).max(0.0) / n).sqrt(),
    })
}

/// Spread of the correlation coefficient over Poisson resamplings of the four
/// cells. Resamples without coincidences are skipped.
pub fn bootstrap_correlation(
    table: &CoincidenceTable,
    resamples: usize,
    seed: u64,
) -> Result<Estimate> {
    let point = correlation(table)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut values = Vec::with_capacity(resamples);
    for _ in 0..resamples {
        let mut t = *table;
        for i in 0..2 {
            for j in 0..2 {
                let lambda = table.counts[i][j] as f64;
                t.counts[i][j] = if lambda > 0.0 {
                    Poisson::new(lambda)
                        .expect("positive rate")
                        .sample(&mut rng) as u64
                } else {
                    0
                };
            }
        }
        if let Ok(e) = correlation(&t) {
            values.push(e.value);
        }
    }
    if values.len() < 2 {
        return Err(Error::Undefined(
            "bootstrap produced fewer than two resamples".into(),
        ));
    }
    let m = values.iter().sum::<f64>() / values.len() as f64;
    let var = values.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (values.len() - 1) as f64;
    Ok(Estimate {
        value: point.value,
        sigma: var.sqrt(),
    })
}

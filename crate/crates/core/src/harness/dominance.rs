//! Empirical gaps against the analytic last-iterate bounds.

use serde::Serialize;

use crate::error::{CsmdError, Result};
use crate::noise::Assumption;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Evidence {
    /// Compared as `mean - 2 SE` against the expectation bound.
    Mean { mean: f64, std_error: f64 },
    /// Empirical `(1 - delta)`-quantile against the high-probability bound.
    Quantile { delta: f64, quantile: f64 },
}

impl Evidence {
    fn required(&self) -> Assumption {
        match self {
            Evidence::Mean { .. } => Assumption::BoundedVariance,
            Evidence::Quantile { .. } => Assumption::SubGaussian,
        }
    }

    fn statistic(&self) -> f64 {
        match *self {
            Evidence::Mean { mean, std_error } => mean - 2.0 * std_error,
            Evidence::Quantile { quantile, .. } => quantile,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DominanceEntry {
    pub horizon: usize,
    pub evidence: Evidence,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceRow {
    pub entry: DominanceEntry,
    pub statistic: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DominanceReport {
    pub rows: Vec<DominanceRow>,
    pub passed: bool,
}

/// PASS/FAIL per entry. Fails with `AssumptionMismatch` if the noise is not
/// certified for the bound the entry is compared against.
pub fn bound_dominance_report(
    noise: Assumption,
    entries: &[DominanceEntry],
) -> Result<DominanceReport> {
    let mut rows = Vec::with_capacity(entries.len());
    for e in entries {
        let need = e.evidence.required();
        if !noise.implies(need) {
            return Err(CsmdError::AssumptionMismatch {
                have: noise.to_string(),
                need: need.to_string(),
            });
        }
        let statistic = e.evidence.statistic();
        rows.push(DominanceRow {
            entry: *e,
            statistic,
            passed: statistic <= e.bound,
        });
    }
    let passed = rows.iter().all(|r| r.passed);
    Ok(DominanceReport { rows, passed })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_run_under_its_bound() {
        let e = DominanceEntry {
            horizon: 8,
            evidence: Evidence::Mean {
                mean: 0.1,
                std_error: 0.0,
            },
            bound: 0.3,
        };
        let r = bound_dominance_report(Assumption::BoundedVariance, &[e]).unwrap();
        assert!(r.passed);
    }

    #[test]
    fn heavy_tails_cannot_feed_the_hp_bound() {
        let e = DominanceEntry {
            horizon: 8,
            evidence: Evidence::Quantile {
                delta: 0.1,
                quantile: 0.1,
            },
            bound: 1.0,
        };
        assert!(matches!(
            bound_dominance_report(Assumption::FiniteMoment, &[e]),
            Err(CsmdError::AssumptionMismatch { .. })
        ));
        assert!(bound_dominance_report(Assumption::SubGaussian, &[e]).unwrap().passed);
    }
}

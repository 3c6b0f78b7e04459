//! Growth of high-probability quantiles with the confidence level.

use serde::Serialize;

use super::stats::{linear_fit, quantile, LinearFit};
use crate::error::{CsmdError, Result};

/// How the quantile is expected to grow in `ln(1/delta)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    /// Against `sqrt(ln(1/delta))`.
    Convex,
    /// Against `ln(1/delta)`.
    StronglyConvex,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct QuantileReport {
    /// `(delta, (1 - delta)-quantile)`, in the order given.
    pub quantiles: Vec<(f64, f64)>,
    pub regime: Regime,
    /// `None` with fewer than two distinct deltas.
    pub fit: Option<LinearFit>,
    /// `q_0.01 / q_0.1` when both levels are in the grid.
    pub ratio: Option<f64>,
}

pub fn quantile_scaling(gaps: &[f64], deltas: &[f64], regime: Regime) -> Result<QuantileReport> {
    let dmin = deltas
        .iter()
        .cloned()
        .reduce(f64::min)
        .ok_or_else(|| CsmdError::InvalidParameter("empty delta grid".into()))?;
    if deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
        return Err(CsmdError::DomainError("deltas must lie in (0, 1)".into()));
    }
    let needed = (10.0 / dmin).ceil() as usize;
    if gaps.len() < needed {
        return Err(CsmdError::InsufficientReplications {
            needed,
            got: gaps.len(),
        });
    }
    let quantiles: Vec<(f64, f64)> = deltas.iter().map(|d| (*d, quantile(gaps, 1.0 - d))).collect();
    let x: Vec<f64> = deltas
        .iter()
        .map(|d| {
            let l = (1.0 / d).ln();
            match regime {
                Regime::Convex => l.sqrt(),
                Regime::StronglyConvex => l,
            }
        })
        .collect();
    let y: Vec<f64> = quantiles.iter().map(|q| q.1).collect();
    let fit = linear_fit(&x, &y).ok();
    let find = |target: f64| quantiles.iter().find(|q| (q.0 - target).abs() < 1e-12).map(|q| q.1);
    let ratio = match (find(0.01), find(0.1)) {
        (Some(a), Some(b)) if b > 0.0 => Some(a / b),
        (Some(a), Some(b)) if a == b => Some(1.0),
        (Some(_), Some(_)) => Some(f64::INFINITY),
        _ => None,
    };
    Ok(QuantileReport {
        quantiles,
        regime,
        fit,
        ratio,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_sample() {
        let g = vec![0.25; 1000];
        let r = quantile_scaling(&g, &[0.1, 0.01], Regime::Convex).unwrap();
        assert_eq!(r.ratio, Some(1.0));
        assert!(r.quantiles.iter().all(|q| q.1 == 0.25));
    }

    #[test]
    fn too_few_replications() {
        let g = vec![1.0; 99];
        assert!(matches!(
            quantile_scaling(&g, &[0.1, 0.01], Regime::Convex),
            Err(CsmdError::InsufficientReplications { needed: 1000, got: 99 })
        ));
    }

    #[test]
    fn monotone_in_delta() {
        let g: Vec<f64> = (0..10_000).map(|i| ((i * 7919) % 10_000) as f64).collect();
        let r = quantile_scaling(&g, &[0.5, 0.1, 0.01], Regime::StronglyConvex).unwrap();
        assert!(r.quantiles.windows(2).all(|w| w[0].1 <= w[1].1));
    }
}

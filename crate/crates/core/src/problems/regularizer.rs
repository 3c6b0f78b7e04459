use serde::{Deserialize, Serialize};

use crate::error::{CsmdError, Result};
use crate::geometry::{MirrorKind, MirrorMap};
use crate::linalg::{dot, norm1};

/// The known, prox-friendly composite term `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Regularizer {
    #[default]
    Zero,
    /// `lambda ||x||_1`
    L1 { lambda: f64 },
    /// `lambda / 2 ||x||_2^2`
    Quadratic { lambda: f64 },
}

impl Regularizer {
    pub fn name(&self) -> &'static str {
        match self {
            Regularizer::Zero => "zero",
            Regularizer::L1 { .. } => "l1",
            Regularizer::Quadratic { .. } => "quadratic",
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Regularizer::Zero => Ok(()),
            Regularizer::L1 { lambda } | Regularizer::Quadratic { lambda } => {
                if *lambda >= 0.0 && lambda.is_finite() {
                    Ok(())
                } else {
                    Err(CsmdError::InvalidParameter(format!(
                        "regularization weight must be finite and >= 0, got {lambda}"
                    )))
                }
            }
        }
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Regularizer::Zero => 0.0,
            Regularizer::L1 { lambda } => lambda * norm1(x),
            Regularizer::Quadratic { lambda } => 0.5 * lambda * dot(x, x),
        }
    }

    /// Relative strong convexity of `h` with respect to the mirror map.
    pub fn strong_convexity(&self, mirror: &MirrorMap) -> f64 {
        match (self, mirror.kind()) {
            (Regularizer::Quadratic { lambda }, MirrorKind::Euclidean) => *lambda,
            _ => 0.0,
        }
    }

    /// The subgradient of `h` at `x` closest to `target` (coordinatewise).
    pub fn subgradient_toward(&self, x: &[f64], target: &[f64]) -> Vec<f64> {
        match self {
            Regularizer::Zero => vec![0.0; x.len()],
            Regularizer::L1 { lambda } => x
                .iter()
                .zip(target)
                .map(|(xi, t)| {
                    if *xi > 0.0 {
                        *lambda
                    } else if *xi < 0.0 {
                        -lambda
                    } else {
                        t.clamp(-lambda, *lambda)
                    }
                })
                .collect(),
            Regularizer::Quadratic { lambda } => x.iter().map(|v| lambda * v).collect(),
        }
    }
}

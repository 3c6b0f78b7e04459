use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CsmdError, Result};
use crate::linalg::{dot, norm1, norm2, norm_inf};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MirrorKind {
    /// psi(x) = 1/2 ||x||_2^2
    Euclidean,
    /// Negative entropy on the probability simplex, 1-strongly convex in l1.
    EntropicSimplex,
    /// psi(x) = (2^(q-2) / q) ||x||_2^q with q = p / (p - 1), p in (1, 2).
    PUniform { p: f64 },
}

/// A distance-generating function together with its dimension.
///
/// Every map satisfies `D(x, y) >= (1/q) ||x - y||^q` in its own norm, where
/// `q` is [`MirrorMap::degree`]: q = 2 (strong convexity) for the Euclidean and
/// entropic maps and q = p/(p-1) for the p-uniform map.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MirrorMap {
    kind: MirrorKind,
    dim: usize,
}

impl MirrorMap {
    pub fn euclidean(dim: usize) -> Self {
        Self {
            kind: MirrorKind::Euclidean,
            dim,
        }
    }

    pub fn entropic_simplex(dim: usize) -> Self {
        Self {
            kind: MirrorKind::EntropicSimplex,
            dim,
        }
    }

    pub fn p_uniform(dim: usize, p: f64) -> Result<Self> {
        if !(p > 1.0 && p < 2.0) {
            return Err(CsmdError::InvalidParameter(format!(
                "p-uniform mirror needs p in (1, 2), got {p}"
            )));
        }
        Ok(Self {
            kind: MirrorKind::PUniform { p },
            dim,
        })
    }

    pub fn from_kind(kind: MirrorKind, dim: usize) -> Result<Self> {
        match kind {
            MirrorKind::PUniform { p } => Self::p_uniform(dim, p),
            _ => Ok(Self { kind, dim }),
        }
    }

    pub fn kind(&self) -> MirrorKind {
        self.kind
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn name(&self) -> &'static str {
        match self.kind {
            MirrorKind::Euclidean => "euclidean",
            MirrorKind::EntropicSimplex => "entropic_simplex",
            MirrorKind::PUniform { .. } => "p_uniform",
        }
    }

    /// Uniform convexity degree q.
    pub fn degree(&self) -> f64 {
        match self.kind {
            MirrorKind::PUniform { p } => p / (p - 1.0),
            _ => 2.0,
        }
    }

    /// Coefficient `c` in `D(x, y) >= c ||x - y||^q`; equals `1/q`.
    pub fn uniform_convexity_coefficient(&self) -> f64 {
        1.0 / self.degree()
    }

    /// The primal norm the map is uniformly convex with respect to.
    pub fn norm(&self, v: &[f64]) -> f64 {
        match self.kind {
            MirrorKind::EntropicSimplex => norm1(v),
            _ => norm2(v),
        }
    }

    pub fn dual_norm(&self, v: &[f64]) -> f64 {
        match self.kind {
            MirrorKind::EntropicSimplex => norm_inf(v),
            _ => norm2(v),
        }
    }

    fn p_uniform_scale(q: f64) -> f64 {
        // 2^(q-2) lifts the 2^(2-q)/q modulus of ||x||^q / q up to 1/q.
        2f64.powf(q - 2.0)
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim {
            return Err(CsmdError::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    /// Errors unless every entropic coordinate is strictly positive.
    pub fn check_interior(&self, x: &[f64]) -> Result<()> {
        self.check_dim(x)?;
        if self.kind == MirrorKind::EntropicSimplex {
            if let Some((index, &value)) = x.iter().enumerate().find(|(_, v)| !(**v > 0.0)) {
                return Err(CsmdError::NonInteriorPoint { index, value });
            }
        }
        Ok(())
    }

    pub fn psi(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        Ok(match self.kind {
            MirrorKind::Euclidean => 0.5 * dot(x, x),
            MirrorKind::EntropicSimplex => {
                let mut s = 0.0;
                for (index, &v) in x.iter().enumerate() {
                    if v < 0.0 || v.is_nan() {
                        return Err(CsmdError::NonInteriorPoint { index, value: v });
                    }
                    if v > 0.0 {
                        s += v * v.ln();
                    }
                }
                s
            }
            MirrorKind::PUniform { .. } => {
                let q = self.degree();
                Self::p_uniform_scale(q) / q * norm2(x).powf(q)
            }
        })
    }

    pub fn grad_psi(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.grad_psi_into(x, &mut out)?;
        Ok(out)
    }

    pub fn grad_psi_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        self.check_dim(x)?;
        match self.kind {
            MirrorKind::Euclidean => out.copy_from_slice(x),
            MirrorKind::EntropicSimplex => {
                self.check_interior(x)?;
                for (o, &v) in out.iter_mut().zip(x) {
                    *o = 1.0 + v.ln();
                }
            }
            MirrorKind::PUniform { .. } => {
                let q = self.degree();
                let n = norm2(x);
                // minimal-norm subgradient at the origin
                let c = if n > 0.0 {
                    Self::p_uniform_scale(q) * n.powf(q - 2.0)
                } else {
                    0.0
                };
                for (o, &v) in out.iter_mut().zip(x) {
                    *o = c * v;
                }
            }
        }
        Ok(())
    }

    /// Overwrites `theta` with the solution of `grad_psi(x) = theta`, for the
    /// maps whose gradient is a bijection of R^d (Euclidean and p-uniform).
    pub(crate) fn inverse_grad_in_place(&self, theta: &mut [f64]) {
        if let MirrorKind::PUniform { .. } = self.kind {
            let q = self.degree();
            let n = norm2(theta);
            if n == 0.0 {
                return;
            }
            let r = (n / Self::p_uniform_scale(q)).powf(1.0 / (q - 1.0));
            theta.iter_mut().for_each(|t| *t *= r / n);
        }
    }

    /// Bregman divergence `D(x, y) = psi(x) - psi(y) - <grad psi(y), x - y>`.
    pub fn bregman(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        self.check_dim(x)?;
        self.check_dim(y)?;
        match self.kind {
            MirrorKind::Euclidean => Ok(0.5
                * x.iter()
                    .zip(y)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()),
            MirrorKind::EntropicSimplex => {
                self.check_interior(y)?;
                let mut s = 0.0;
                for (index, (&a, &b)) in x.iter().zip(y).enumerate() {
                    if a < 0.0 || a.is_nan() {
                        return Err(CsmdError::NonInteriorPoint { index, value: a });
                    }
                    // generalized KL term; exact zero when a == b
                    s += if a > 0.0 { a * (a / b).ln() - a + b } else { b };
                }
                Ok(s.max(0.0))
            }
            MirrorKind::PUniform { .. } => {
                let gy = self.grad_psi(y)?;
                let lin: f64 = gy.iter().zip(x.iter().zip(y)).map(|(g, (a, b))| g * (a - b)).sum();
                Ok((self.psi(x)? - self.psi(y)? - lin).max(0.0))
            }
        }
    }

    /// A random point in the interior of the map's natural test region:
    /// `[-1, 1]^d` (Euclidean), the unit ball (p-uniform), the open simplex
    /// (entropic).
    pub(crate) fn sample_test_point<R: Rng>(&self, rng: &mut R) -> Vec<f64> {
        match self.kind {
            MirrorKind::Euclidean => (0..self.dim).map(|_| rng.random_range(-1.0..1.0)).collect(),
            MirrorKind::PUniform { .. } => loop {
                let v: Vec<f64> = (0..self.dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                if norm2(&v) <= 1.0 {
                    break v;
                }
            },
            MirrorKind::EntropicSimplex => {
                let e: Vec<f64> = (0..self.dim)
                    .map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-12)
                    .collect();
                let s: f64 = e.iter().sum();
                e.into_iter().map(|v| v / s).collect()
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformConvexityReport {
    pub trials: usize,
    /// `min D(x, y) - (1/q) ||x - y||^q` over the sampled pairs.
    pub min_slack: f64,
}

impl UniformConvexityReport {
    pub fn passed(&self) -> bool {
        self.min_slack >= -1e-12
    }
}

/// Samples `trials` feasible pairs and reports the worst slack of the uniform
/// convexity inequality.
pub fn check_uniform_convexity(
    mirror: &MirrorMap,
    trials: usize,
    rng_seed: u64,
) -> Result<UniformConvexityReport> {
    if trials == 0 {
        return Err(CsmdError::InvalidParameter("trials must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let q = mirror.degree();
    let c = mirror.uniform_convexity_coefficient();
    let mut min_slack = f64::INFINITY;
    for _ in 0..trials {
        let x = mirror.sample_test_point(&mut rng);
        let y = mirror.sample_test_point(&mut rng);
        let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let slack = mirror.bregman(&x, &y)? - c * mirror.norm(&diff).powf(q);
        min_slack = min_slack.min(slack);
    }
    Ok(UniformConvexityReport { trials, min_slack })
}

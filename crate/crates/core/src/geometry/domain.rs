use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{CsmdError, Result};
use crate::linalg::{dist2, norm2};

/// A nonempty closed convex feasible set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Domain {
    AllSpace,
    Box { lower: Vec<f64>, upper: Vec<f64> },
    L2Ball { center: Vec<f64>, radius: f64 },
    Simplex,
}

impl Domain {
    pub fn symmetric_box(dim: usize, half_width: f64) -> Self {
        Domain::Box {
            lower: vec![-half_width; dim],
            upper: vec![half_width; dim],
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Domain::AllSpace => "all_space",
            Domain::Box { .. } => "box",
            Domain::L2Ball { .. } => "l2_ball",
            Domain::Simplex => "simplex",
        }
    }

    pub fn validate(&self, dim: usize) -> Result<()> {
        match self {
            Domain::AllSpace => Ok(()),
            Domain::Simplex => {
                if dim == 0 {
                    Err(CsmdError::InvalidParameter("simplex needs dim >= 1".into()))
                } else {
                    Ok(())
                }
            }
            Domain::Box { lower, upper } => {
                for v in [lower, upper] {
                    if v.len() != dim {
                        return Err(CsmdError::DimensionMismatch {
                            expected: dim,
                            got: v.len(),
                        });
                    }
                }
                if lower.iter().zip(upper).any(|(l, u)| !(l <= u)) {
                    return Err(CsmdError::InvalidParameter("box has lower > upper".into()));
                }
                Ok(())
            }
            Domain::L2Ball { center, radius } => {
                if center.len() != dim {
                    return Err(CsmdError::DimensionMismatch {
                        expected: dim,
                        got: center.len(),
                    });
                }
                if !(*radius >= 0.0 && radius.is_finite()) {
                    return Err(CsmdError::InvalidParameter(format!(
                        "ball radius must be finite and >= 0, got {radius}"
                    )));
                }
                Ok(())
            }
        }
    }

    pub fn contains(&self, x: &[f64], tol: f64) -> bool {
        if x.iter().any(|v| !v.is_finite()) {
            return false;
        }
        match self {
            Domain::AllSpace => true,
            Domain::Box { lower, upper } => x
                .iter()
                .zip(lower.iter().zip(upper))
                .all(|(v, (l, u))| *v >= l - tol && *v <= u + tol),
            Domain::L2Ball { center, radius } => dist2(x, center) <= radius + tol,
            Domain::Simplex => {
                x.iter().all(|v| *v >= -tol) && (x.iter().sum::<f64>() - 1.0).abs() <= tol
            }
        }
    }

    /// Euclidean projection onto the set, in place.
    pub fn project_into(&self, x: &mut [f64]) {
        match self {
            Domain::AllSpace => {}
            Domain::Box { lower, upper } => {
                for (v, (l, u)) in x.iter_mut().zip(lower.iter().zip(upper)) {
                    *v = v.clamp(*l, *u);
                }
            }
            Domain::L2Ball { center, radius } => {
                let r = dist2(x, center);
                if r > *radius {
                    let s = radius / r;
                    for (v, c) in x.iter_mut().zip(center) {
                        *v = c + (*v - c) * s;
                    }
                }
            }
            Domain::Simplex => project_simplex(x),
        }
    }

    pub fn project(&self, x: &[f64]) -> Vec<f64> {
        let mut out = x.to_vec();
        self.project_into(&mut out);
        out
    }

    /// Euclidean diameter, `None` when unbounded.
    pub fn diameter(&self, dim: usize) -> Option<f64> {
        match self {
            Domain::AllSpace => None,
            Domain::Box { lower, upper } => Some(
                lower
                    .iter()
                    .zip(upper)
                    .map(|(l, u)| (u - l) * (u - l))
                    .sum::<f64>()
                    .sqrt(),
            ),
            Domain::L2Ball { radius, .. } => Some(2.0 * radius),
            Domain::Simplex => Some(if dim > 1 { 2f64.sqrt() } else { 0.0 }),
        }
    }

    /// A random feasible point. Unbounded coordinates are drawn from
    /// `around +- spread`.
    pub fn sample<R: Rng>(&self, rng: &mut R, around: &[f64], spread: f64) -> Vec<f64> {
        match self {
            Domain::AllSpace => around
                .iter()
                .map(|c| c + spread * rng.random_range(-1.0..1.0))
                .collect(),
            Domain::Box { lower, upper } => lower
                .iter()
                .zip(upper)
                .map(|(l, u)| l + (u - l) * rng.random::<f64>())
                .collect(),
            Domain::L2Ball { center, radius } => {
                let mut v: Vec<f64>;
                loop {
                    v = center.iter().map(|_| rng.random_range(-1.0..1.0)).collect();
                    if norm2(&v) <= 1.0 {
                        break;
                    }
                }
                v.iter().zip(center).map(|(a, c)| c + radius * a).collect()
            }
            Domain::Simplex => {
                let e: Vec<f64> = around
                    .iter()
                    .map(|_| -(1.0 - rng.random::<f64>()).ln() + 1e-12)
                    .collect();
                let s: f64 = e.iter().sum();
                e.into_iter().map(|v| v / s).collect()
            }
        }
    }
}

/// Sort-based Euclidean projection onto the probability simplex.
fn project_simplex(x: &mut [f64]) {
    if x.is_empty() {
        return;
    }
    let mut u = x.to_vec();
    u.sort_by(|a, b| b.total_cmp(a));
    let mut cum = 0.0;
    let mut theta = 0.0;
    for (j, &uj) in u.iter().enumerate() {
        cum += uj;
        let t = (cum - 1.0) / (j as f64 + 1.0);
        if uj - t > 0.0 {
            theta = t;
        }
    }
    for v in x.iter_mut() {
        *v = (*v - theta).max(0.0);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simplex_projection_examples() {
        let mut x = [0.5, 0.5];
        project_simplex(&mut x);
        assert_eq!(x, [0.5, 0.5]);
        let mut x = [2.0, 0.0, 0.0];
        project_simplex(&mut x);
        assert_eq!(x, [1.0, 0.0, 0.0]);
        let mut x = [1.0, 1.0, -3.0];
        project_simplex(&mut x);
        assert_eq!(x, [0.5, 0.5, 0.0]);
    }

    #[test]
    fn ball_projection_scales_radially() {
        let d = Domain::L2Ball {
            center: vec![1.0, 0.0],
            radius: 1.0,
        };
        assert_eq!(d.project(&[4.0, 0.0]), vec![2.0, 0.0]);
        assert!(d.contains(&[1.5, 0.5], 0.0));
    }

    #[test]
    fn validation_rejects_empty_box() {
        let d = Domain::Box {
            lower: vec![1.0],
            upper: vec![0.0],
        };
        assert!(d.validate(1).is_err());
        assert!(Domain::symmetric_box(2, 1.0).validate(3).is_err());
    }
}

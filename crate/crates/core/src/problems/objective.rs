use serde::{Deserialize, Serialize};

use crate::error::{CsmdError, Result};
use crate::linalg::{dot, log_sum_exp, sign0};

/// The stochastic part `f` of the composite objective.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Objective {
    /// `1/2 sum a_i (x_i - c_i)^2 + kink * ||x - c||_1`
    Quadratic {
        diag: Vec<f64>,
        center: Vec<f64>,
        kink: f64,
    },
    /// `weight * sum huber_width(x_i - c_i)`, smooth with `L = weight / width`.
    HuberizedAbs {
        weight: f64,
        width: f64,
        center: Vec<f64>,
    },
    /// `weight * ||x - c||_1`
    AbsSum { weight: f64, center: Vec<f64> },
    /// `lse(x - c) + lse(c - x)`, minimized at `c` with value `2 ln d`.
    LogSumExp { center: Vec<f64> },
    /// `<cost, x>`
    Linear { cost: Vec<f64> },
    /// `sum phi(x_i - c_i)` with `phi(u) = |u|^beta` on `[-1, 1]` continued
    /// linearly outside: Lipschitz, with a very flat bottom.
    FlatPower { beta: f64, center: Vec<f64> },
}

impl Objective {
    pub fn name(&self) -> &'static str {
        match self {
            Objective::Quadratic { .. } => "quadratic",
            Objective::HuberizedAbs { .. } => "huberized_abs",
            Objective::AbsSum { .. } => "abs_sum",
            Objective::LogSumExp { .. } => "log_sum_exp",
            Objective::Linear { .. } => "linear",
            Objective::FlatPower { .. } => "flat_power",
        }
    }

    fn vector(&self) -> &[f64] {
        match self {
            Objective::Quadratic { center, .. }
            | Objective::HuberizedAbs { center, .. }
            | Objective::AbsSum { center, .. }
            | Objective::LogSumExp { center }
            | Objective::FlatPower { center, .. } => center,
            Objective::Linear { cost } => cost,
        }
    }

    pub(crate) fn validate(&self, dim: usize) -> Result<()> {
        let v = self.vector();
        if v.len() != dim {
            return Err(CsmdError::DimensionMismatch {
                expected: dim,
                got: v.len(),
            });
        }
        let bad = |what: &str| Err(CsmdError::InvalidParameter(format!("{}: {what}", self.name())));
        match self {
            Objective::Quadratic { diag, kink, .. } => {
                if diag.len() != dim {
                    return Err(CsmdError::DimensionMismatch {
                        expected: dim,
                        got: diag.len(),
                    });
                }
                if diag.iter().any(|a| !(*a >= 0.0)) || !(*kink >= 0.0) {
                    return bad("curvatures and kink must be >= 0");
                }
            }
            Objective::HuberizedAbs { weight, width, .. } => {
                if !(*weight >= 0.0 && *width > 0.0) {
                    return bad("needs weight >= 0 and width > 0");
                }
            }
            Objective::AbsSum { weight, .. } => {
                if !(*weight >= 0.0) {
                    return bad("weight must be >= 0");
                }
            }
            Objective::FlatPower { beta, .. } => {
                if !(*beta >= 1.0) {
                    return bad("beta must be >= 1");
                }
            }
            Objective::LogSumExp { .. } | Objective::Linear { .. } => {}
        }
        if v.iter().any(|x| !x.is_finite()) {
            return bad("non-finite parameters");
        }
        Ok(())
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        match self {
            Objective::Quadratic { diag, center, kink } => x
                .iter()
                .zip(center)
                .zip(diag)
                .map(|((xi, c), a)| {
                    let r = xi - c;
                    0.5 * a * r * r + kink * r.abs()
                })
                .sum(),
            Objective::HuberizedAbs {
                weight,
                width,
                center,
            } => {
                weight
                    * x.iter()
                        .zip(center)
                        .map(|(xi, c)| {
                            let r = (xi - c).abs();
                            if r <= *width {
                                r * r / (2.0 * width)
                            } else {
                                r - 0.5 * width
                            }
                        })
                        .sum::<f64>()
            }
            Objective::AbsSum { weight, center } => {
                weight * x.iter().zip(center).map(|(xi, c)| (xi - c).abs()).sum::<f64>()
            }
            Objective::LogSumExp { center } => {
                let u: Vec<f64> = x.iter().zip(center).map(|(xi, c)| xi - c).collect();
                let neg: Vec<f64> = u.iter().map(|v| -v).collect();
                log_sum_exp(&u) + log_sum_exp(&neg)
            }
            Objective::Linear { cost } => dot(cost, x),
            Objective::FlatPower { beta, center } => x
                .iter()
                .zip(center)
                .map(|(xi, c)| {
                    let r = (xi - c).abs();
                    if r <= 1.0 {
                        r.powf(*beta)
                    } else {
                        1.0 + beta * (r - 1.0)
                    }
                })
                .sum(),
        }
    }

    /// A subgradient; at kinks the zero element of the coordinate
    /// subdifferential is chosen.
    pub fn subgradient_into(&self, x: &[f64], out: &mut [f64]) {
        match self {
            Objective::Quadratic { diag, center, kink } => {
                for (((o, xi), c), a) in out.iter_mut().zip(x).zip(center).zip(diag) {
                    let r = xi - c;
                    *o = a * r + kink * sign0(r);
                }
            }
            Objective::HuberizedAbs {
                weight,
                width,
                center,
            } => {
                for ((o, xi), c) in out.iter_mut().zip(x).zip(center) {
                    *o = weight * ((xi - c) / width).clamp(-1.0, 1.0);
                }
            }
            Objective::AbsSum { weight, center } => {
                for ((o, xi), c) in out.iter_mut().zip(x).zip(center) {
                    *o = weight * sign0(xi - c);
                }
            }
            Objective::LogSumExp { center } => {
                for ((o, xi), c) in out.iter_mut().zip(x).zip(center) {
                    *o = xi - c;
                }
                let zp = log_sum_exp(out);
                let zn = log_sum_exp(&out.iter().map(|v| -v).collect::<Vec<_>>());
                for o in out.iter_mut() {
                    let u = *o;
                    *o = (u - zp).exp() - (-u - zn).exp();
                }
            }
            Objective::Linear { cost } => out.copy_from_slice(cost),
            Objective::FlatPower { beta, center } => {
                for ((o, xi), c) in out.iter_mut().zip(x).zip(center) {
                    let r = xi - c;
                    let a = r.abs();
                    *o = if a <= 1.0 {
                        beta * sign0(r) * a.powf(beta - 1.0)
                    } else {
                        beta * sign0(r)
                    };
                }
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd_check(f: &Objective, x: &[f64]) {
        let mut g = vec![0.0; x.len()];
        f.subgradient_into(x, &mut g);
        let h = 1e-6;
        for i in 0..x.len() {
            let mut a = x.to_vec();
            let mut b = x.to_vec();
            a[i] += h;
            b[i] -= h;
            let fd = (f.value(&a) - f.value(&b)) / (2.0 * h);
            assert!(
                (fd - g[i]).abs() <= 1e-5 * g[i].abs().max(1e-3),
                "{}: coord {i}: {fd} vs {}",
                f.name(),
                g[i]
            );
        }
    }

    #[test]
    fn log_sum_exp_gradient_matches_finite_differences() {
        let f = Objective::LogSumExp {
            center: vec![0.1, -0.3, 0.7],
        };
        fd_check(&f, &[0.5, 1.2, -0.4]);
        fd_check(&f, &[-2.0, 0.0, 3.0]);
    }

    #[test]
    fn log_sum_exp_minimum() {
        let c = vec![0.3, -1.0, 2.0, 0.0, 1.0];
        let f = Objective::LogSumExp { center: c.clone() };
        assert!((f.value(&c) - 2.0 * 5f64.ln()).abs() < 1e-14);
        let mut g = vec![0.0; 5];
        f.subgradient_into(&c, &mut g);
        assert!(g.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn smooth_families_match_finite_differences() {
        fd_check(
            &Objective::HuberizedAbs {
                weight: 2.0,
                width: 0.1,
                center: vec![0.0, 1.0],
            },
            &[0.03, 1.5],
        );
        fd_check(
            &Objective::FlatPower {
                beta: 8.0,
                center: vec![0.0, 0.0],
            },
            &[0.6, -1.7],
        );
    }

    #[test]
    fn flat_power_is_continuous_at_the_joint() {
        let f = Objective::FlatPower {
            beta: 16.0,
            center: vec![0.0],
        };
        assert!((f.value(&[1.0 - 1e-12]) - f.value(&[1.0 + 1e-12])).abs() < 1e-9);
    }
}

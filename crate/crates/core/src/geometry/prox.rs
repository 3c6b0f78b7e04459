use serde::Serialize;

use super::{Domain, MirrorKind, MirrorMap};
use crate::error::{CsmdError, Result};
use crate::linalg::{dot, log_sum_exp};
use crate::problems::Regularizer;

/// Smallest coordinate the entropic step may produce, so iterates stay in the
/// relative interior of the simplex.
const ENTROPIC_FLOOR: f64 = 1e-300;

/// One composite mirror step:
/// `argmin_{x in domain} h(x) + <g, x - anchor> + D(x, anchor) / eta`.
#[derive(Debug, Clone, Copy)]
pub struct ProxProblem<'a> {
    pub g: &'a [f64],
    pub anchor: &'a [f64],
    pub eta: f64,
    pub regularizer: &'a Regularizer,
    pub domain: &'a Domain,
    pub mirror: &'a MirrorMap,
}

impl ProxProblem<'_> {
    /// Objective value at `x`, `+inf` outside the domain.
    pub fn objective(&self, x: &[f64]) -> Result<f64> {
        if !self.domain.contains(x, 1e-9) {
            return Ok(f64::INFINITY);
        }
        let lin = dot(self.g, x) - dot(self.g, self.anchor);
        Ok(self.regularizer.value(x) + lin + self.mirror.bregman(x, self.anchor)? / self.eta)
    }

    fn validate(&self) -> Result<()> {
        let d = self.mirror.dim();
        for v in [self.g, self.anchor] {
            if v.len() != d {
                return Err(CsmdError::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return Err(CsmdError::InvalidParameter(format!(
                "step size must be positive and finite, got {}",
                self.eta
            )));
        }
        if self.g.iter().any(|v| !v.is_finite()) {
            return Err(CsmdError::InvalidParameter("gradient has non-finite entries".into()));
        }
        self.mirror.check_interior(self.anchor)?;
        if !self.domain.contains(self.anchor, 1e-9) {
            return Err(CsmdError::Infeasible("prox anchor is outside the domain".into()));
        }
        Ok(())
    }
}

/// Exact minimizer of the composite mirror step.
pub fn solve_prox(problem: &ProxProblem<'_>) -> Result<Vec<f64>> {
    problem.validate()?;
    let solver = ProxSolver::new(problem.mirror, problem.domain, problem.regularizer)?;
    let mut out = vec![0.0; problem.anchor.len()];
    solver.solve_into(problem.g, problem.anchor, problem.eta, &mut out);
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Method {
    /// Project `anchor - eta g` onto the domain.
    Project,
    /// Coordinatewise soft threshold then clip.
    SoftThreshold { lambda: f64 },
    /// Shrink by `1 + eta lambda` then project.
    Shrink { lambda: f64 },
    /// Exponentiated-gradient update on the simplex.
    Multiplicative,
    /// Dual-space step mapped back through the inverse gradient.
    PUniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Triple {
    pub mirror: &'static str,
    pub domain: &'static str,
    pub regularizer: &'static str,
}

/// Every (mirror, domain, regularizer) combination [`ProxSolver::new`] accepts.
pub fn supported_triples() -> Vec<Triple> {
    let t = |mirror, domain, regularizer| Triple {
        mirror,
        domain,
        regularizer,
    };
    let mut out = Vec::new();
    for domain in ["all_space", "box", "l2_ball", "simplex"] {
        out.push(t("euclidean", domain, "zero"));
        out.push(t("euclidean", domain, "quadratic"));
        if domain != "l2_ball" {
            out.push(t("euclidean", domain, "l1"));
        }
    }
    out.push(t("entropic_simplex", "simplex", "zero"));
    out.push(t("entropic_simplex", "simplex", "l1"));
    out.push(t("p_uniform", "all_space", "zero"));
    out
}

/// A prox step specialised to one supported triple, reusable across iterations.
#[derive(Debug, Clone)]
pub struct ProxSolver<'a> {
    mirror: &'a MirrorMap,
    domain: &'a Domain,
    method: Method,
}

impl<'a> ProxSolver<'a> {
    pub fn new(mirror: &'a MirrorMap, domain: &'a Domain, regularizer: &Regularizer) -> Result<Self> {
        regularizer.validate()?;
        domain.validate(mirror.dim())?;
        let method = match (mirror.kind(), domain, *regularizer) {
            (MirrorKind::Euclidean, _, Regularizer::Zero) => Some(Method::Project),
            (MirrorKind::Euclidean, _, Regularizer::Quadratic { lambda }) => {
                Some(Method::Shrink { lambda })
            }
            // the l1 norm is constant on the simplex
            (MirrorKind::Euclidean, Domain::Simplex, Regularizer::L1 { .. }) => Some(Method::Project),
            (MirrorKind::Euclidean, Domain::AllSpace | Domain::Box { .. }, Regularizer::L1 { lambda }) => {
                Some(Method::SoftThreshold { lambda })
            }
            (MirrorKind::EntropicSimplex, Domain::Simplex, Regularizer::Zero | Regularizer::L1 { .. }) => {
                Some(Method::Multiplicative)
            }
            (MirrorKind::PUniform { .. }, Domain::AllSpace, Regularizer::Zero) => Some(Method::PUniform),
            _ => None,
        };
        match method {
            Some(method) => Ok(Self {
                mirror,
                domain,
                method,
            }),
            None => Err(CsmdError::UnsupportedCombination {
                mirror: mirror.name().into(),
                domain: domain.name().into(),
                regularizer: regularizer.name().into(),
            }),
        }
    }

    /// Writes the step result into `out`. Inputs are assumed validated.
    pub fn solve_into(&self, g: &[f64], anchor: &[f64], eta: f64, out: &mut [f64]) {
        match self.method {
            Method::Project => {
                for ((o, a), gi) in out.iter_mut().zip(anchor).zip(g) {
                    *o = a - eta * gi;
                }
                self.domain.project_into(out);
            }
            Method::Shrink { lambda } => {
                let s = 1.0 / (1.0 + eta * lambda);
                for ((o, a), gi) in out.iter_mut().zip(anchor).zip(g) {
                    *o = s * (a - eta * gi);
                }
                self.domain.project_into(out);
            }
            Method::SoftThreshold { lambda } => {
                let thr = eta * lambda;
                for ((o, a), gi) in out.iter_mut().zip(anchor).zip(g) {
                    let u = a - eta * gi;
                    *o = u.signum() * (u.abs() - thr).max(0.0);
                }
                self.domain.project_into(out);
            }
            Method::Multiplicative => {
                for ((o, a), gi) in out.iter_mut().zip(anchor).zip(g) {
                    *o = a.ln() - eta * gi;
                }
                let z = log_sum_exp(out);
                for o in out.iter_mut() {
                    *o = (*o - z).exp().max(ENTROPIC_FLOOR);
                }
            }
            Method::PUniform => {
                self.mirror
                    .grad_psi_into(anchor, out)
                    .expect("anchor dimension checked by caller");
                for (o, gi) in out.iter_mut().zip(g) {
                    *o -= eta * gi;
                }
                self.mirror.inverse_grad_in_place(out);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(
        mirror: &MirrorMap,
        domain: &Domain,
        reg: Regularizer,
        g: &[f64],
        anchor: &[f64],
        eta: f64,
    ) -> Result<Vec<f64>> {
        solve_prox(&ProxProblem {
            g,
            anchor,
            eta,
            regularizer: &reg,
            domain,
            mirror,
        })
    }

    #[test]
    fn euclidean_unconstrained_is_gradient_step() {
        let x = solve(
            &MirrorMap::euclidean(2),
            &Domain::AllSpace,
            Regularizer::Zero,
            &[1.0, -2.0],
            &[2.0, 1.0],
            0.5,
        )
        .unwrap();
        assert_eq!(x, vec![1.5, 2.0]);
    }

    #[test]
    fn euclidean_l1_soft_thresholds() {
        let x = solve(
            &MirrorMap::euclidean(1),
            &Domain::AllSpace,
            Regularizer::L1 { lambda: 1.0 },
            &[0.0],
            &[2.0],
            1.0,
        )
        .unwrap();
        assert_eq!(x, vec![1.0]);
    }

    #[test]
    fn entropic_step_is_multiplicative() {
        let x = solve(
            &MirrorMap::entropic_simplex(2),
            &Domain::Simplex,
            Regularizer::Zero,
            &[2f64.ln(), 0.0],
            &[0.5, 0.5],
            1.0,
        )
        .unwrap();
        assert!((x[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((x[1] - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn p_uniform_step_stays_at_zero_without_gradient() {
        let m = MirrorMap::p_uniform(2, 1.5).unwrap();
        let x = solve(&m, &Domain::AllSpace, Regularizer::Zero, &[0.0, 0.0], &[0.0, 0.0], 1.0).unwrap();
        assert_eq!(x, vec![0.0, 0.0]);
    }

    #[test]
    fn p_uniform_step_inverts_gradient() {
        // theta = -eta g = (4, 0); ||x||^(q-1) k = 4 with k = 2, q = 3
        let m = MirrorMap::p_uniform(2, 1.5).unwrap();
        let x = solve(&m, &Domain::AllSpace, Regularizer::Zero, &[-4.0, 0.0], &[0.0, 0.0], 1.0).unwrap();
        assert!((x[0] - 2f64.sqrt()).abs() < 1e-14 && x[1] == 0.0);
    }

    #[test]
    fn unsupported_triples_are_rejected() {
        let m = MirrorMap::entropic_simplex(2);
        let err = ProxSolver::new(&m, &Domain::AllSpace, &Regularizer::Zero).unwrap_err();
        assert!(matches!(err, CsmdError::UnsupportedCombination { .. }));
        let b = Domain::L2Ball {
            center: vec![0.0; 2],
            radius: 1.0,
        };
        let e = MirrorMap::euclidean(2);
        assert!(ProxSolver::new(&e, &b, &Regularizer::L1 { lambda: 1.0 }).is_err());
    }

    #[test]
    fn supported_list_matches_constructor() {
        let count = supported_triples().len();
        assert_eq!(count, 14);
    }

    #[test]
    fn rejects_infeasible_anchor_and_bad_eta() {
        let m = MirrorMap::euclidean(1);
        let d = Domain::symmetric_box(1, 1.0);
        assert!(matches!(
            solve(&m, &d, Regularizer::Zero, &[0.0], &[3.0], 1.0),
            Err(CsmdError::Infeasible(_))
        ));
        assert!(solve(&m, &d, Regularizer::Zero, &[0.0], &[0.0], 0.0).is_err());
    }
}

//! Composite test objectives `F = f + h` with certified constants, exact
//! minimizers, and exact (sub)gradient oracles.

mod objective;
mod registry;
mod regularizer;

pub use objective::Objective;
pub use registry::{registry, registry_ids};
pub use regularizer::Regularizer;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{CsmdError, Result};
use crate::geometry::{Domain, MirrorKind, MirrorMap};
use crate::linalg::{dot, sub};

/// Constants of Assumptions 2 and 3: `(L, M)`-smoothness of `f` and relative
/// strong convexity moduli of `f` and `h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Default)]
pub struct Constants {
    pub l: f64,
    pub m: f64,
    pub mu_f: f64,
    pub mu_h: f64,
}

impl Constants {
    /// `L / mu_f`, zero when `L = 0` or `mu_f = 0`.
    pub fn kappa_f(&self) -> f64 {
        ratio(self.l, self.mu_f)
    }

    pub fn kappa_h(&self) -> f64 {
        ratio(self.l, self.mu_h)
    }

    fn validate(&self) -> Result<()> {
        let all = [self.l, self.m, self.mu_f, self.mu_h];
        if all.iter().any(|v| !(*v >= 0.0 && v.is_finite())) {
            return Err(CsmdError::InvalidParameter(format!(
                "constants must be finite and >= 0: {self:?}"
            )));
        }
        if self.mu_f > 0.0 && self.mu_h > 0.0 {
            return Err(CsmdError::InvalidParameter(
                "at most one of mu_f, mu_h may be nonzero".into(),
            ));
        }
        Ok(())
    }
}

fn ratio(l: f64, mu: f64) -> f64 {
    if l == 0.0 || mu == 0.0 {
        0.0
    } else {
        l / mu
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProblemInstance {
    pub id: String,
    pub objective: Objective,
    pub regularizer: Regularizer,
    pub domain: Domain,
    pub mirror: MirrorMap,
    pub constants: Constants,
    pub x_star: Vec<f64>,
    pub f_star: f64,
    /// Default starting point.
    pub x1: Vec<f64>,
}

impl ProblemInstance {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        id: impl Into<String>,
        objective: Objective,
        regularizer: Regularizer,
        domain: Domain,
        mirror: MirrorMap,
        constants: Constants,
        x_star: Vec<f64>,
        x1: Vec<f64>,
    ) -> Result<Self> {
        let d = mirror.dim();
        objective.validate(d)?;
        regularizer.validate()?;
        domain.validate(d)?;
        constants.validate()?;
        for v in [&x_star, &x1] {
            if v.len() != d {
                return Err(CsmdError::DimensionMismatch {
                    expected: d,
                    got: v.len(),
                });
            }
        }
        if !domain.contains(&x_star, 1e-12) {
            return Err(CsmdError::Infeasible("minimizer is outside the domain".into()));
        }
        if !domain.contains(&x1, 1e-12) {
            return Err(CsmdError::Infeasible("starting point is outside the domain".into()));
        }
        if mirror.kind() == MirrorKind::EntropicSimplex {
            mirror.check_interior(&x1)?;
        }
        let f_star = objective.value(&x_star) + regularizer.value(&x_star);
        Ok(Self {
            id: id.into(),
            objective,
            regularizer,
            domain,
            mirror,
            constants,
            x_star,
            f_star,
            x1,
        })
    }

    /// Diagonal quadratic `1/2 sum a_i (x_i - c_i)^2 + kink ||x - c||_1` with
    /// the minimizer and constants derived in closed form.
    ///
    /// Supported shapes: any regularizer on `all_space`/`box`; on `l2_ball`
    /// and `simplex` only an isotropic diagonal without kink, with `h = 0`
    /// (or `l1` on the simplex, where it is constant).
    pub fn quadratic(
        id: impl Into<String>,
        diag: Vec<f64>,
        center: Vec<f64>,
        kink: f64,
        regularizer: Regularizer,
        domain: Domain,
        x1: Vec<f64>,
    ) -> Result<Self> {
        let d = diag.len();
        let mirror = MirrorMap::euclidean(d);
        let x_star = quadratic_minimizer(&diag, &center, kink, &regularizer, &domain)?;
        let l = diag.iter().cloned().fold(0.0, f64::max);
        let mu_h = regularizer.strong_convexity(&mirror);
        let mu_f = if mu_h > 0.0 {
            0.0
        } else {
            diag.iter().cloned().fold(f64::INFINITY, f64::min).max(0.0)
        };
        let constants = Constants {
            l,
            m: 2.0 * kink * (d as f64).sqrt(),
            mu_f,
            mu_h,
        };
        Self::new(
            id,
            Objective::Quadratic { diag, center, kink },
            regularizer,
            domain,
            mirror,
            constants,
            x_star,
            x1,
        )
    }

    /// Replaces the declared constants (e.g. to view a smooth instance on a
    /// bounded domain as Lipschitz).
    pub fn with_constants(mut self, constants: Constants) -> Result<Self> {
        constants.validate()?;
        self.constants = constants;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.mirror.dim()
    }

    pub fn value(&self, x: &[f64]) -> f64 {
        self.objective.value(x) + self.regularizer.value(x)
    }

    pub fn true_subgradient(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; x.len()];
        self.objective.subgradient_into(x, &mut out);
        out
    }

    pub fn subgradient_into(&self, x: &[f64], out: &mut [f64]) {
        self.objective.subgradient_into(x, out);
    }

    /// `F(x) - F(x*)`.
    pub fn objective_gap(&self, x: &[f64]) -> f64 {
        self.value(x) - self.f_star
    }

    /// `D_psi(x*, x)`.
    pub fn distance_from_optimum(&self, x: &[f64]) -> Result<f64> {
        self.mirror.bregman(&self.x_star, x)
    }

    fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let spread = 2.0 * (1.0 + self.x_star.iter().fold(0.0f64, |m, v| m.max(v.abs())));
        self.domain.sample(rng, &self.x_star, spread)
    }

    /// Spot-checks the declared constants and the optimality of `x*` on random
    /// feasible points.
    pub fn certify_constants(&self, trials: usize, rng_seed: u64) -> Result<ConstantsReport> {
        if trials == 0 {
            return Err(CsmdError::InvalidParameter("trials must be >= 1".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
        let c = self.constants;
        let g_star = self.true_subgradient(&self.x_star);
        let neg: Vec<f64> = g_star.iter().map(|v| -v).collect();
        let s_star = self.regularizer.subgradient_toward(&self.x_star, &neg);
        let opt_dir: Vec<f64> = g_star.iter().zip(&s_star).map(|(a, b)| a + b).collect();

        let mut report = ConstantsReport {
            trials,
            min_upper_slack: f64::INFINITY,
            min_lower_slack_f: f64::INFINITY,
            min_lower_slack_h: f64::INFINITY,
            min_gap: f64::INFINITY,
            min_optimality: f64::INFINITY,
        };
        for _ in 0..trials {
            let x = self.sample_point(&mut rng);
            let y = self.sample_point(&mut rng);
            let diff = sub(&x, &y);
            let r = self.mirror.norm(&diff);
            let gy = self.true_subgradient(&y);
            let lin_f = self.objective.value(&x) - self.objective.value(&y) - dot(&gy, &diff);
            let div = self.mirror.bregman(&x, &y)?;
            report.min_upper_slack = report.min_upper_slack.min(0.5 * c.l * r * r + c.m * r - lin_f);
            report.min_lower_slack_f = report.min_lower_slack_f.min(lin_f - c.mu_f * div);
            let sy = self.regularizer.subgradient_toward(&y, &gy);
            let lin_h = self.regularizer.value(&x) - self.regularizer.value(&y) - dot(&sy, &diff);
            report.min_lower_slack_h = report.min_lower_slack_h.min(lin_h - c.mu_h * div);
            report.min_gap = report.min_gap.min(self.objective_gap(&x));
            report.min_optimality = report
                .min_optimality
                .min(dot(&opt_dir, &sub(&x, &self.x_star)));
        }
        Ok(report)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConstantsReport {
    pub trials: usize,
    /// `min (L/2)||x-y||^2 + M||x-y|| - (f(x) - f(y) - <g_y, x-y>)`
    pub min_upper_slack: f64,
    /// `min f(x) - f(y) - <g_y, x-y> - mu_f D(x, y)`
    pub min_lower_slack_f: f64,
    pub min_lower_slack_h: f64,
    pub min_gap: f64,
    /// `min <g* + s*, x - x*>` with `g*` in the subdifferential of `f` and
    /// `s*` in that of `h` at `x*`.
    pub min_optimality: f64,
}

impl ConstantsReport {
    pub fn passed(&self) -> bool {
        self.min_upper_slack >= -1e-10
            && self.min_lower_slack_f >= -1e-10
            && self.min_lower_slack_h >= -1e-10
            && self.min_gap >= -1e-12
            && self.min_optimality >= -1e-8
    }
}

fn soft(u: f64, t: f64) -> f64 {
    u.signum() * (u.abs() - t).max(0.0)
}

fn quadratic_minimizer(
    diag: &[f64],
    center: &[f64],
    kink: f64,
    reg: &Regularizer,
    domain: &Domain,
) -> Result<Vec<f64>> {
    if diag.len() != center.len() {
        return Err(CsmdError::DimensionMismatch {
            expected: diag.len(),
            got: center.len(),
        });
    }
    let unsupported = || {
        Err(CsmdError::InvalidParameter(format!(
            "no closed-form minimizer for quadratic with {} on {}",
            reg.name(),
            domain.name()
        )))
    };
    match domain {
        Domain::AllSpace | Domain::Box { .. } => {
            if kink > 0.0 && *reg != Regularizer::Zero {
                return unsupported();
            }
            let mut x: Vec<f64> = diag
                .iter()
                .zip(center)
                .map(|(&a, &c)| match *reg {
                    Regularizer::Zero => c,
                    Regularizer::L1 { lambda } if a > 0.0 => soft(c, lambda / a),
                    Regularizer::L1 { .. } => 0.0,
                    Regularizer::Quadratic { lambda } if a + lambda > 0.0 => a * c / (a + lambda),
                    Regularizer::Quadratic { .. } => 0.0,
                })
                .collect();
            domain.project_into(&mut x);
            Ok(x)
        }
        Domain::L2Ball { .. } | Domain::Simplex => {
            let iso = diag.iter().all(|a| *a == diag[0]) && diag[0] > 0.0;
            let reg_ok = match reg {
                Regularizer::Zero => true,
                Regularizer::L1 { .. } => matches!(domain, Domain::Simplex),
                Regularizer::Quadratic { .. } => false,
            };
            if !iso || kink > 0.0 || !reg_ok {
                return unsupported();
            }
            Ok(domain.project(center))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spec_quadratic_examples() {
        let p = ProblemInstance::quadratic(
            "q",
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            0.0,
            Regularizer::Zero,
            Domain::AllSpace,
            vec![1.0, 0.0],
        )
        .unwrap();
        assert_eq!(p.true_subgradient(&[3.0, -1.0]), vec![3.0, -1.0]);
        assert_eq!(p.objective_gap(&[1.0, 0.0]), 0.5);
        assert_eq!(p.objective_gap(&p.x_star.clone()), 0.0);
    }

    #[test]
    fn quadratic_plus_l1_gap() {
        let p = ProblemInstance::quadratic(
            "q",
            vec![1.0],
            vec![2.0],
            0.0,
            Regularizer::L1 { lambda: 1.0 },
            Domain::AllSpace,
            vec![0.0],
        )
        .unwrap();
        assert_eq!(p.x_star, vec![1.0]);
        assert_eq!(p.f_star, 1.5);
        assert_eq!(p.objective_gap(&[0.0]), 0.5);
    }

    #[test]
    fn kappa_is_zero_without_smoothness() {
        let c = Constants {
            l: 0.0,
            m: 1.0,
            mu_f: 2.0,
            mu_h: 0.0,
        };
        assert_eq!(c.kappa_f(), 0.0);
        assert_eq!(c.kappa_h(), 0.0);
        let c = Constants { l: 4.0, ..c };
        assert_eq!(c.kappa_f(), 2.0);
    }

    #[test]
    fn rejects_two_strong_convexity_moduli() {
        let p = registry("quad_iso_d10").unwrap();
        let bad = Constants {
            mu_h: 1.0,
            ..p.constants
        };
        assert!(p.with_constants(bad).is_err());
    }

    #[test]
    fn abs_constants_certify_as_lipschitz() {
        let p = registry("abs_d1").unwrap();
        assert_eq!(p.constants.l, 0.0);
        assert_eq!(p.constants.m, 2.0);
        assert_eq!(p.true_subgradient(&[0.0]), vec![0.0]);
        assert!(p.certify_constants(10_000, 5).unwrap().passed());
    }

    #[test]
    fn understated_constants_fail_certification() {
        let p = registry("quad_iso_d10").unwrap();
        let c = Constants {
            l: 0.5,
            ..p.constants
        };
        let p = p.with_constants(c).unwrap();
        assert!(!p.certify_constants(1000, 1).unwrap().passed());
    }
}

//! Step-size rules, the analysis sequences `gamma_t`, `v_t`, `Gamma_t`, the
//! sub-Weibull constant `C(delta, p)`, and recommended tunings.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{CsmdError, Result};
use crate::linalg::log_add_exp;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Rule {
    /// `1/(2L) ∧ eta/sqrt(t)`
    ConvexAnytime,
    /// `1/(2L) ∧ eta/sqrt(T)`
    ConvexFixed,
    /// `eta (T - t + 1) / T^1.5`
    LinearDecay,
    /// `1 / (mu_f (t + 2 kappa_f))`
    #[serde(rename = "strc_f_anytime_1")]
    StrcFAnytime1,
    /// `2 / (mu_f (t + 1 + 4 kappa_f))`
    #[serde(rename = "strc_f_anytime_2")]
    StrcFAnytime2,
    /// Constant on the first half of the horizon, then `2/(mu_f (t - tau + 2 + 4 kappa_f))`.
    StrcFKnownPiecewise,
    /// `2 / (mu_h (t + 4 kappa_h))`
    StrcHAnytime,
    /// Constant on the first half of the horizon, then `2/(mu_h (t - tau + 4 kappa_h))`.
    StrcHKnownPiecewise,
    /// `eta_star / t^((2-p)/p) ∧ eta / t^(1/p)`
    HeavyAnytime,
    /// `eta_star / T^((2-p)/p) ∧ eta / T^(1/p)`
    HeavyFixed,
    /// `eta (T - t + 1)^(1/(p-1)) / T^((2p-1)/(p(p-1)))`
    HeavyDecay,
    SubweibullAnytime,
    SubweibullFixed,
    SubweibullLinearDecay,
    Constant,
}

impl Rule {
    pub const ALL: [Rule; 15] = [
        Rule::ConvexAnytime,
        Rule::ConvexFixed,
        Rule::LinearDecay,
        Rule::StrcFAnytime1,
        Rule::StrcFAnytime2,
        Rule::StrcFKnownPiecewise,
        Rule::StrcHAnytime,
        Rule::StrcHKnownPiecewise,
        Rule::HeavyAnytime,
        Rule::HeavyFixed,
        Rule::HeavyDecay,
        Rule::SubweibullAnytime,
        Rule::SubweibullFixed,
        Rule::SubweibullLinearDecay,
        Rule::Constant,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Rule::ConvexAnytime => "convex_anytime",
            Rule::ConvexFixed => "convex_fixed",
            Rule::LinearDecay => "linear_decay",
            Rule::StrcFAnytime1 => "strc_f_anytime_1",
            Rule::StrcFAnytime2 => "strc_f_anytime_2",
            Rule::StrcFKnownPiecewise => "strc_f_known_piecewise",
            Rule::StrcHAnytime => "strc_h_anytime",
            Rule::StrcHKnownPiecewise => "strc_h_known_piecewise",
            Rule::HeavyAnytime => "heavy_anytime",
            Rule::HeavyFixed => "heavy_fixed",
            Rule::HeavyDecay => "heavy_decay",
            Rule::SubweibullAnytime => "subweibull_anytime",
            Rule::SubweibullFixed => "subweibull_fixed",
            Rule::SubweibullLinearDecay => "subweibull_linear_decay",
            Rule::Constant => "constant",
        }
    }

    pub fn needs_horizon(self) -> bool {
        matches!(
            self,
            Rule::ConvexFixed
                | Rule::LinearDecay
                | Rule::StrcFKnownPiecewise
                | Rule::StrcHKnownPiecewise
                | Rule::HeavyFixed
                | Rule::HeavyDecay
                | Rule::SubweibullFixed
                | Rule::SubweibullLinearDecay
        )
    }

    pub fn is_heavy(self) -> bool {
        matches!(self, Rule::HeavyAnytime | Rule::HeavyFixed | Rule::HeavyDecay)
    }

    pub fn is_strongly_convex_f(self) -> bool {
        matches!(
            self,
            Rule::StrcFAnytime1 | Rule::StrcFAnytime2 | Rule::StrcFKnownPiecewise
        )
    }

    pub fn is_strongly_convex_h(self) -> bool {
        matches!(self, Rule::StrcHAnytime | Rule::StrcHKnownPiecewise)
    }

    fn uses_eta(self) -> bool {
        !matches!(self, Rule::StrcFAnytime1 | Rule::StrcFAnytime2 | Rule::StrcHAnytime)
    }

    /// Whether `max_t eta_t` sits at `t = 1`.
    fn non_increasing(self) -> bool {
        !matches!(self, Rule::StrcFKnownPiecewise | Rule::StrcHKnownPiecewise)
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Rule {
    type Err = CsmdError;

    fn from_str(s: &str) -> Result<Self> {
        Rule::ALL
            .into_iter()
            .find(|r| r.name() == s)
            .ok_or_else(|| CsmdError::Unknown {
                kind: "schedule rule",
                name: s.to_string(),
            })
    }
}

/// Inputs of a rule. Unused fields are ignored.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ScheduleParams {
    pub eta: Option<f64>,
    pub eta_star: Option<f64>,
    #[serde(default)]
    pub l: f64,
    #[serde(default)]
    pub mu_f: f64,
    #[serde(default)]
    pub mu_h: f64,
    pub p: Option<f64>,
}

/// Default constant for the known-horizon strongly convex rules.
pub const PIECEWISE_DEFAULT_ETA: f64 = 1.5;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    rule: Rule,
    eta: f64,
    eta_star: f64,
    l: f64,
    mu_f: f64,
    mu_h: f64,
    p: f64,
    horizon: Option<usize>,
}

fn kappa(l: f64, mu: f64) -> f64 {
    if l == 0.0 || mu == 0.0 {
        0.0
    } else {
        l / mu
    }
}

fn positive(name: &'static str, v: Option<f64>) -> Result<f64> {
    match v {
        None => Err(CsmdError::MissingConstant(name)),
        Some(v) if v > 0.0 && !v.is_nan() => Ok(v),
        Some(v) => Err(CsmdError::InvalidParameter(format!("{name} must be > 0, got {v}"))),
    }
}

impl Schedule {
    /// Validates the rule's constants and, outside the heavy-tailed rules,
    /// the step bound `eta_t <= 1/(2L ∨ mu_f)` (over the whole horizon when
    /// it is known).
    pub fn new(rule: Rule, params: ScheduleParams, horizon: Option<usize>) -> Result<Self> {
        let ScheduleParams { l, mu_f, mu_h, .. } = params;
        for (name, v) in [("L", l), ("mu_f", mu_f), ("mu_h", mu_h)] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(CsmdError::InvalidParameter(format!(
                    "{name} must be finite and >= 0, got {v}"
                )));
            }
        }
        if rule.needs_horizon() && horizon.is_none() {
            return Err(CsmdError::HorizonRequired(rule.name().into()));
        }
        if horizon == Some(0) {
            return Err(CsmdError::InvalidParameter("horizon must be >= 1".into()));
        }
        let mut s = Schedule {
            rule,
            eta: f64::NAN,
            eta_star: f64::INFINITY,
            l,
            mu_f,
            mu_h,
            p: 2.0,
            horizon,
        };
        match rule {
            Rule::StrcFKnownPiecewise | Rule::StrcHKnownPiecewise => {
                let eta = params.eta.unwrap_or(PIECEWISE_DEFAULT_ETA);
                if !(eta >= 0.0 && eta.is_finite()) {
                    return Err(CsmdError::InvalidParameter(format!("eta must be >= 0, got {eta}")));
                }
                s.eta = eta;
            }
            _ if rule.uses_eta() => {
                let eta = positive("eta", params.eta)?;
                if !eta.is_finite() {
                    return Err(CsmdError::InvalidParameter("eta must be finite".into()));
                }
                s.eta = eta;
            }
            _ => {}
        }
        if rule.is_strongly_convex_f() {
            s.mu_f = positive("mu_f", Some(mu_f))?;
            s.mu_h = 0.0;
        }
        if rule.is_strongly_convex_h() {
            s.mu_h = positive("mu_h", Some(mu_h))?;
            s.mu_f = 0.0;
        }
        match rule {
            Rule::StrcFKnownPiecewise if s.eta + s.kappa_f() <= 1.0 => {
                return Err(CsmdError::ConstraintViolated(format!(
                    "needs eta + kappa_f > 1, got {} + {}",
                    s.eta,
                    s.kappa_f()
                )))
            }
            Rule::StrcHKnownPiecewise if s.eta + s.kappa_h() <= 0.0 => {
                return Err(CsmdError::ConstraintViolated(
                    "needs eta + kappa_h > 0".into(),
                ))
            }
            _ => {}
        }
        if rule.is_heavy() {
            let p = params.p.ok_or(CsmdError::MissingConstant("p"))?;
            if !(p > 1.0 && p < 2.0) {
                return Err(CsmdError::InvalidParameter(format!(
                    "heavy-tailed rules need p in (1, 2), got {p}"
                )));
            }
            s.p = p;
            if rule != Rule::HeavyDecay {
                s.eta_star = positive("eta_star", params.eta_star)?;
            }
        }
        if !rule.is_heavy() {
            s.check_step_bound()?;
        }
        Ok(s)
    }

    pub fn rule(&self) -> Rule {
        self.rule
    }

    pub fn horizon(&self) -> Option<usize> {
        self.horizon
    }

    pub fn eta_param(&self) -> f64 {
        self.eta
    }

    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn kappa_f(&self) -> f64 {
        kappa(self.l, self.mu_f)
    }

    pub fn kappa_h(&self) -> f64 {
        kappa(self.l, self.mu_h)
    }

    /// Strong convexity moduli the rule is analysed with.
    pub fn analysis_moduli(&self) -> (f64, f64) {
        if self.rule.is_strongly_convex_f() {
            (self.mu_f, 0.0)
        } else if self.rule.is_strongly_convex_h() {
            (0.0, self.mu_h)
        } else {
            (0.0, 0.0)
        }
    }

    /// `1 / (2L ∨ mu_f)`, infinite when both vanish.
    pub fn step_limit(&self) -> f64 {
        step_limit(self.l, self.analysis_moduli().0)
    }

    fn check_step_bound(&self) -> Result<()> {
        let limit = self.step_limit();
        let last = match self.horizon {
            Some(t) if !self.rule.non_increasing() => t,
            _ => 1,
        };
        for t in 1..=last {
            let eta = self.eta(t)?;
            if eta > limit * (1.0 + 1e-12) {
                return Err(CsmdError::StepTooLarge { t, eta, limit });
            }
        }
        Ok(())
    }

    /// Returns the same schedule with a different horizon (re-validated).
    pub fn with_horizon(&self, horizon: usize) -> Result<Self> {
        Schedule::new(
            self.rule,
            ScheduleParams {
                eta: Some(self.eta).filter(|v| !v.is_nan()),
                eta_star: Some(self.eta_star),
                l: self.l,
                mu_f: self.mu_f,
                mu_h: self.mu_h,
                p: Some(self.p),
            },
            Some(horizon),
        )
    }

    /// Step size at iteration `t >= 1`.
    pub fn eta(&self, t: usize) -> Result<f64> {
        if t == 0 {
            return Err(CsmdError::InvalidParameter("t starts at 1".into()));
        }
        let big_t = match self.horizon {
            Some(h) if self.rule.needs_horizon() => {
                if t > h {
                    return Err(CsmdError::InvalidParameter(format!(
                        "t = {t} beyond horizon {h}"
                    )));
                }
                h as f64
            }
            _ => f64::NAN,
        };
        let tf = t as f64;
        let cap = if self.l > 0.0 { 1.0 / (2.0 * self.l) } else { f64::INFINITY };
        let p = self.p;
        let v = match self.rule {
            Rule::ConvexAnytime | Rule::SubweibullAnytime => cap.min(self.eta / tf.sqrt()),
            Rule::ConvexFixed | Rule::SubweibullFixed => cap.min(self.eta / big_t.sqrt()),
            Rule::LinearDecay | Rule::SubweibullLinearDecay => self.eta * (big_t - tf + 1.0) / big_t.powf(1.5),
            Rule::StrcFAnytime1 => 1.0 / (self.mu_f * (tf + 2.0 * self.kappa_f())),
            Rule::StrcFAnytime2 => 2.0 / (self.mu_f * (tf + 1.0 + 4.0 * self.kappa_f())),
            Rule::StrcFKnownPiecewise => {
                let tau = tau(big_t);
                let k = self.kappa_f();
                if t == 1 {
                    1.0 / (self.mu_f * (1.0 + 2.0 * k))
                } else if tf <= tau {
                    1.0 / (self.mu_f * (self.eta + 2.0 * k))
                } else {
                    2.0 / (self.mu_f * (tf - tau + 2.0 + 4.0 * k))
                }
            }
            Rule::StrcHAnytime => 2.0 / (self.mu_h * (tf + 4.0 * self.kappa_h())),
            Rule::StrcHKnownPiecewise => {
                let tau = tau(big_t);
                let k = self.kappa_h();
                if tf <= tau {
                    1.0 / (self.mu_h * (self.eta + 2.0 * k))
                } else {
                    2.0 / (self.mu_h * (tf - tau + 4.0 * k))
                }
            }
            Rule::HeavyAnytime => {
                (self.eta_star / tf.powf((2.0 - p) / p)).min(self.eta / tf.powf(1.0 / p))
            }
            Rule::HeavyFixed => {
                (self.eta_star / big_t.powf((2.0 - p) / p)).min(self.eta / big_t.powf(1.0 / p))
            }
            Rule::HeavyDecay => {
                self.eta * (big_t - tf + 1.0).powf(1.0 / (p - 1.0))
                    / big_t.powf((2.0 * p - 1.0) / (p * (p - 1.0)))
            }
            Rule::Constant => self.eta,
        };
        Ok(v)
    }

    /// `eta_1, ..., eta_T`.
    pub fn etas(&self, horizon: usize) -> Result<Vec<f64>> {
        (1..=horizon).map(|t| self.eta(t)).collect()
    }
}

fn tau(big_t: f64) -> f64 {
    (big_t / 2.0).ceil()
}

fn step_limit(l: f64, mu_f: f64) -> f64 {
    let m = (2.0 * l).max(mu_f);
    if m > 0.0 {
        1.0 / m
    } else {
        f64::INFINITY
    }
}

/// `gamma_t`, `v_t`, and `Gamma_t = gamma_t / eta_t` for one schedule.
///
/// Index `t - 1` holds iteration `t` for the length-`T` vectors; `v` has
/// length `T + 1` and starts at `t = 0`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnalysisSequences {
    pub mu_f: f64,
    pub mu_h: f64,
    pub eta: Vec<f64>,
    pub log_gamma: Vec<f64>,
    pub gamma: Vec<f64>,
    pub big_gamma: Vec<f64>,
    /// `ln sum_{s=t}^T gamma_s`
    pub log_tail_sum: Vec<f64>,
    pub v: Vec<f64>,
}

impl AnalysisSequences {
    pub fn horizon(&self) -> usize {
        self.eta.len()
    }

    /// Largest relative violation of
    /// `gamma_t (1/eta_t - mu_f) = gamma_{t-1} (1/eta_{t-1} + mu_h)`, `t >= 2`.
    pub fn telescoping_error(&self) -> f64 {
        (1..self.horizon())
            .map(|i| {
                let lhs = self.log_gamma[i] + (1.0 / self.eta[i] - self.mu_f).ln();
                let rhs = self.log_gamma[i - 1] + (1.0 / self.eta[i - 1] + self.mu_h).ln();
                (lhs - rhs).exp_m1().abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Builds the analysis sequences, failing with `StepTooLarge` where
/// `eta_t > 1/(2L ∨ mu_f)`.
pub fn analysis_sequences(
    schedule: &Schedule,
    mu_f: f64,
    mu_h: f64,
    horizon: usize,
) -> Result<AnalysisSequences> {
    if horizon == 0 {
        return Err(CsmdError::InvalidParameter("horizon must be >= 1".into()));
    }
    if !(mu_f >= 0.0 && mu_h >= 0.0) {
        return Err(CsmdError::InvalidParameter("moduli must be >= 0".into()));
    }
    let eta = schedule.etas(horizon)?;
    let limit = step_limit(schedule.l, mu_f);
    let mut log_gamma = Vec::with_capacity(horizon);
    let mut log_prod = 0.0;
    for (i, &e) in eta.iter().enumerate() {
        let t = i + 1;
        if !(e > 0.0) || e > limit * (1.0 + 1e-12) || (t >= 2 && mu_f * e >= 1.0) {
            return Err(CsmdError::StepTooLarge { t, eta: e, limit });
        }
        if t >= 2 {
            log_prod += (mu_h * eta[i - 1]).ln_1p() - (-mu_f * e).ln_1p();
        }
        log_gamma.push(e.ln() + log_prod);
    }
    let mut log_tail_sum = vec![0.0; horizon];
    let mut acc = f64::NEG_INFINITY;
    for i in (0..horizon).rev() {
        acc = log_add_exp(acc, log_gamma[i]);
        log_tail_sum[i] = acc;
    }
    let last = log_gamma[horizon - 1];
    let v = (0..=horizon)
        .map(|t| (last - log_tail_sum[t.max(1) - 1]).exp())
        .collect();
    let gamma = log_gamma.iter().map(|l| l.exp()).collect();
    let big_gamma = log_gamma
        .iter()
        .zip(&eta)
        .map(|(l, e)| (l - e.ln()).exp())
        .collect();
    Ok(AnalysisSequences {
        mu_f,
        mu_h,
        eta,
        log_gamma,
        gamma,
        big_gamma,
        log_tail_sum,
        v,
    })
}

/// The sub-Weibull high-probability constant `C(delta, p)`; `+inf` at `p = 2`.
pub fn c_delta_p(delta: f64, p: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CsmdError::DomainError(format!("delta must be in (0, 1), got {delta}")));
    }
    if p == 2.0 {
        return Ok(f64::INFINITY);
    }
    if !(p > 0.0 && p < 2.0) {
        return Err(CsmdError::DomainError(format!("p must be in (0, 2), got {p}")));
    }
    let e = std::f64::consts::E;
    let lead = (2.0 * e / p).max(e * (2.0 * e / delta).ln()).powf(2.0 / p);
    let tail = if p >= 1.0 {
        let l = (4.0 / delta).ln();
        16.0 * (6.0 * l + l * l)
    } else {
        let inner = 4.0 * (3.0 + 2.0 * (3.0 / p).powf(2.0 / p)) / delta;
        64.0 * inner.ln().powf((p + 2.0) / p).max(1.0) / 2f64.ln().powf(2.0 / p)
    };
    Ok(lead + tail)
}

/// Quantities the tunings are expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TuningInputs {
    pub l: f64,
    pub m: f64,
    pub sigma: f64,
    /// `D_psi(x*, x1)`
    pub d_psi: f64,
    pub horizon: Option<usize>,
    pub delta: Option<f64>,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Tuning {
    pub eta: f64,
    /// `+inf` when the `eta_star` branch never binds.
    pub eta_star: f64,
}

/// The order-optimal `eta` (and `eta_star`) of each rule with all hidden
/// constants set to 1.
pub fn recommended_eta(rule: Rule, x: &TuningInputs) -> Result<Tuning> {
    if !(x.d_psi >= 0.0) {
        return Err(CsmdError::InvalidParameter("D_psi must be >= 0".into()));
    }
    let log_t = || -> Result<f64> {
        let t = x.horizon.ok_or_else(|| CsmdError::HorizonRequired(rule.name().into()))?;
        if t < 2 {
            return Err(CsmdError::InvalidParameter("horizon must be >= 2".into()));
        }
        Ok((t as f64).ln())
    };
    let finite = |eta: f64| -> Result<f64> {
        if eta.is_finite() && eta > 0.0 {
            Ok(eta)
        } else {
            Err(CsmdError::InvalidParameter(format!(
                "{rule} tuning is degenerate (eta = {eta}); check D_psi, M, sigma"
            )))
        }
    };
    let light_noise = || -> Result<f64> {
        let s2 = x.sigma * x.sigma;
        Ok(match x.delta {
            None => s2,
            Some(d) if d > 0.0 && d < 1.0 => s2 * (1.0 / d).ln(),
            Some(d) => return Err(CsmdError::DomainError(format!("delta must be in (0, 1), got {d}"))),
        })
    };
    let subweibull_noise = || -> Result<f64> {
        let d = x.delta.ok_or(CsmdError::MissingConstant("delta"))?;
        let p = x.p.ok_or(CsmdError::MissingConstant("p"))?;
        Ok(x.sigma * x.sigma * c_delta_p(d, p)?)
    };
    let inf = f64::INFINITY;
    let tuning = match rule {
        Rule::ConvexAnytime | Rule::LinearDecay => Tuning {
            eta: finite((x.d_psi / (x.m * x.m + light_noise()?)).sqrt())?,
            eta_star: inf,
        },
        Rule::ConvexFixed => Tuning {
            eta: finite((x.d_psi / ((x.m * x.m + light_noise()?) * log_t()?)).sqrt())?,
            eta_star: inf,
        },
        Rule::SubweibullAnytime | Rule::SubweibullLinearDecay => Tuning {
            eta: finite((x.d_psi / (x.m * x.m + subweibull_noise()?)).sqrt())?,
            eta_star: inf,
        },
        Rule::SubweibullFixed => Tuning {
            eta: finite((x.d_psi / ((x.m * x.m + subweibull_noise()?) * log_t()?)).sqrt())?,
            eta_star: inf,
        },
        Rule::HeavyAnytime | Rule::HeavyFixed | Rule::HeavyDecay => {
            let p = x.p.ok_or(CsmdError::MissingConstant("p"))?;
            if !(p > 1.0 && p < 2.0) {
                return Err(CsmdError::InvalidParameter(format!("p must be in (1, 2), got {p}")));
            }
            let moment = x.m.powf(p) + x.sigma.powf(p);
            let (d, eta) = match rule {
                Rule::HeavyFixed => {
                    let lt = log_t()?;
                    (x.d_psi / lt, (x.d_psi / (moment * lt)).powf(1.0 / p))
                }
                _ => (x.d_psi, (x.d_psi / moment).powf(1.0 / p)),
            };
            let eta_star = if rule == Rule::HeavyDecay || x.l == 0.0 {
                inf
            } else {
                d.powf((2.0 - p) / p) / x.l
            };
            Tuning {
                eta: finite(eta)?,
                eta_star,
            }
        }
        Rule::StrcFKnownPiecewise | Rule::StrcHKnownPiecewise => Tuning {
            eta: PIECEWISE_DEFAULT_ETA,
            eta_star: inf,
        },
        Rule::Constant => {
            if x.l > 0.0 {
                Tuning {
                    eta: 1.0 / (2.0 * x.l),
                    eta_star: inf,
                }
            } else {
                return Err(CsmdError::MissingConstant("L"));
            }
        }
        Rule::StrcFAnytime1 | Rule::StrcFAnytime2 | Rule::StrcHAnytime => {
            return Err(CsmdError::InvalidParameter(format!(
                "{rule} is fully determined by L and mu; it has no step parameter to tune"
            )))
        }
    };
    Ok(tuning)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sched(rule: Rule, params: ScheduleParams, horizon: Option<usize>) -> Schedule {
        Schedule::new(rule, params, horizon).unwrap()
    }

    #[test]
    fn convex_anytime_example() {
        let s = sched(
            Rule::ConvexAnytime,
            ScheduleParams {
                eta: Some(1.0),
                l: 1.0,
                ..Default::default()
            },
            None,
        );
        assert_eq!(s.eta(1).unwrap(), 0.5);
    }

    #[test]
    fn linear_decay_example() {
        let s = sched(
            Rule::LinearDecay,
            ScheduleParams {
                eta: Some(1.0),
                ..Default::default()
            },
            Some(4),
        );
        assert_eq!(s.eta(1).unwrap(), 0.5);
    }

    #[test]
    fn heavy_anytime_example() {
        let s = sched(
            Rule::HeavyAnytime,
            ScheduleParams {
                eta: Some(1.0),
                eta_star: Some(1.0),
                p: Some(1.5),
                ..Default::default()
            },
            None,
        );
        assert!((s.eta(4).unwrap() - 4f64.powf(-2.0 / 3.0)).abs() < 1e-15);
    }

    #[test]
    fn piecewise_example() {
        let s = sched(
            Rule::StrcFKnownPiecewise,
            ScheduleParams {
                eta: Some(1.5),
                mu_f: 1.0,
                ..Default::default()
            },
            Some(4),
        );
        let got = s.etas(4).unwrap();
        let want = [1.0, 2.0 / 3.0, 2.0 / 3.0, 0.5];
        for (a, b) in got.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn horizon_and_constraint_errors() {
        let p = ScheduleParams {
            eta: Some(1.0),
            mu_f: 1.0,
            mu_h: 1.0,
            ..Default::default()
        };
        assert!(matches!(
            Schedule::new(Rule::LinearDecay, p, None),
            Err(CsmdError::HorizonRequired(_))
        ));
        assert!(matches!(
            Schedule::new(Rule::StrcFKnownPiecewise, p, Some(10)),
            Err(CsmdError::ConstraintViolated(_))
        ));
        assert!(matches!(
            Schedule::new(
                Rule::StrcHKnownPiecewise,
                ScheduleParams {
                    eta: Some(0.0),
                    ..p
                },
                Some(10)
            ),
            Err(CsmdError::ConstraintViolated(_))
        ));
        assert!(matches!(
            Schedule::new(
                Rule::Constant,
                ScheduleParams {
                    eta: Some(1.0),
                    l: 1.0,
                    ..Default::default()
                },
                None
            ),
            Err(CsmdError::StepTooLarge { t: 1, .. })
        ));
    }

    #[test]
    fn degenerate_gamma_without_strong_convexity() {
        let s = sched(
            Rule::ConvexAnytime,
            ScheduleParams {
                eta: Some(0.7),
                l: 0.3,
                ..Default::default()
            },
            None,
        );
        let a = analysis_sequences(&s, 0.0, 0.0, 50).unwrap();
        for (g, e) in a.gamma.iter().zip(&a.eta) {
            assert!((g - e).abs() <= 1e-15 * e);
        }
    }

    #[test]
    fn strongly_convex_gamma_is_constant() {
        let s = sched(
            Rule::StrcFAnytime1,
            ScheduleParams {
                mu_f: 1.0,
                ..Default::default()
            },
            None,
        );
        let a = analysis_sequences(&s, 1.0, 0.0, 20).unwrap();
        for (t, (g, big)) in a.gamma.iter().zip(&a.big_gamma).enumerate() {
            assert!((g - 1.0).abs() < 1e-13);
            assert!((big - (t + 1) as f64).abs() < 1e-11);
        }
    }

    #[test]
    fn v_for_unit_gamma() {
        let s = sched(
            Rule::Constant,
            ScheduleParams {
                eta: Some(1.0),
                ..Default::default()
            },
            None,
        );
        let a = analysis_sequences(&s, 0.0, 0.0, 3).unwrap();
        let want = [1.0 / 3.0, 1.0 / 3.0, 0.5, 1.0];
        for (a, b) in a.v.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn c_delta_p_values() {
        let e = std::f64::consts::E;
        let direct = (2.0 * e).max(e * (4.0 * e).ln()).powi(2) + 16.0 * (6.0 * 8f64.ln() + 8f64.ln().powi(2));
        let c = c_delta_p(0.5, 1.0).unwrap();
        assert!((c - direct).abs() < 1e-12 * direct);
        assert!((c - 310.9).abs() < 0.1);
        assert!(c_delta_p(0.01, 1.0).unwrap() > c);
        assert_eq!(c_delta_p(0.5, 2.0).unwrap(), f64::INFINITY);
        assert!(matches!(c_delta_p(1.0, 1.0), Err(CsmdError::DomainError(_))));
        assert!(matches!(c_delta_p(0.5, 2.5), Err(CsmdError::DomainError(_))));
    }

    #[test]
    fn tuning_examples() {
        let t = recommended_eta(
            Rule::ConvexAnytime,
            &TuningInputs {
                m: 1.0,
                d_psi: 1.0,
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(t.eta, 1.0);
        let t = recommended_eta(
            Rule::ConvexAnytime,
            &TuningInputs {
                sigma: 1.0,
                d_psi: 1.0,
                delta: Some((-1f64).exp()),
                ..Default::default()
            },
        )
        .unwrap();
        assert!((t.eta - 1.0).abs() < 1e-15);
        let t = recommended_eta(
            Rule::HeavyAnytime,
            &TuningInputs {
                m: 1.0,
                d_psi: 1.0,
                p: Some(1.5),
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(t.eta_star, f64::INFINITY);
        assert!(matches!(
            recommended_eta(Rule::SubweibullAnytime, &TuningInputs::default()),
            Err(CsmdError::MissingConstant(_))
        ));
    }

    #[test]
    fn names_round_trip() {
        for r in Rule::ALL {
            assert_eq!(r.name().parse::<Rule>().unwrap(), r);
            assert_eq!(serde_json::to_string(&r).unwrap(), format!("\"{}\"", r.name()));
        }
    }
}

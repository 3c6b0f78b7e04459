//! The composite stochastic mirror descent loop, the comparator sequence
//! `z^t`, and the expectation / high-probability last-iterate bounds.

use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{CsmdError, Result};
use crate::geometry::ProxSolver;
use crate::noise::{sample_noisy_gradient_into, NoiseModel, RngStream};
use crate::problems::ProblemInstance;
use crate::schedules::{AnalysisSequences, Schedule};

/// Gap above which a run is declared divergent.
pub const DIVERGENCE_GAP: f64 = 1e12;
/// Most negative gap accepted as rounding error.
pub const GAP_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct RunConfig<'a> {
    pub problem: &'a ProblemInstance,
    pub noise: &'a NoiseModel,
    pub schedule: &'a Schedule,
    pub x1: &'a [f64],
    pub horizon: usize,
    /// Strictly increasing iterations in `[1, T]` at which `x^{t+1}` is measured.
    pub checkpoints: &'a [usize],
    /// Keep the full iterate history for [`z_diagnostics`].
    pub record_z: bool,
    pub rng: RngStream,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Checkpoint {
    pub t: usize,
    /// `F(x^{t+1}) - F(x*)`
    pub gap: f64,
    pub eta: f64,
    /// `||x^{t+1} - x*||` in the mirror's norm.
    pub dist: f64,
    /// `D_psi(x*, x^{t+1})`
    pub bregman: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRecord {
    pub horizon: usize,
    pub checkpoints: Vec<Checkpoint>,
    pub final_iterate: Vec<f64>,
    pub final_gap: f64,
    /// `x^1, ..., x^{T+1}` when requested.
    #[serde(skip)]
    pub history: Option<Vec<Vec<f64>>>,
    pub rng: RngStream,
    #[serde(skip)]
    pub wall_time: Duration,
}

fn validate(cfg: &RunConfig<'_>) -> Result<()> {
    let p = cfg.problem;
    if cfg.horizon < 2 {
        return Err(CsmdError::InvalidParameter(format!(
            "horizon must be >= 2, got {}",
            cfg.horizon
        )));
    }
    if cfg.x1.len() != p.dim() {
        return Err(CsmdError::DimensionMismatch {
            expected: p.dim(),
            got: cfg.x1.len(),
        });
    }
    if !p.domain.contains(cfg.x1, 1e-12) {
        return Err(CsmdError::Infeasible("starting point is outside the domain".into()));
    }
    p.mirror.check_interior(cfg.x1)?;
    if !cfg.checkpoints.windows(2).all(|w| w[0] < w[1]) {
        return Err(CsmdError::InvalidParameter("checkpoints must be strictly increasing".into()));
    }
    if let (Some(&first), Some(&last)) = (cfg.checkpoints.first(), cfg.checkpoints.last()) {
        if first < 1 || last > cfg.horizon {
            return Err(CsmdError::InvalidParameter(format!(
                "checkpoints must lie in [1, {}]",
                cfg.horizon
            )));
        }
    }
    let s = cfg.schedule;
    if s.rule().needs_horizon() && s.horizon() != Some(cfg.horizon) {
        return Err(CsmdError::InvalidParameter(format!(
            "{} schedule built for horizon {:?}, run uses {}",
            s.rule(),
            s.horizon(),
            cfg.horizon
        )));
    }
    Ok(())
}

fn check_gap(t: usize, gap: f64) -> Result<()> {
    if !gap.is_finite() || gap > DIVERGENCE_GAP {
        return Err(CsmdError::NumericalDivergence { t, gap });
    }
    if gap < -GAP_TOLERANCE {
        return Err(CsmdError::NegativeGap { t, gap });
    }
    Ok(())
}

/// Runs `T` iterations of
/// `x^{t+1} = argmin_x h(x) + <g^t, x - x^t> + D_psi(x, x^t) / eta_t`
/// with `g^t` a noisy subgradient at `x^t`.
pub fn run_csmd(cfg: &RunConfig<'_>) -> Result<RunRecord> {
    validate(cfg)?;
    let start = Instant::now();
    let p = cfg.problem;
    let solver = ProxSolver::new(&p.mirror, &p.domain, &p.regularizer)?;
    let d = p.dim();
    let mut rng = cfg.rng.rng();
    let mut x = cfg.x1.to_vec();
    let mut next = vec![0.0; d];
    let mut g = vec![0.0; d];
    let mut xi = vec![0.0; d];
    let mut diff = vec![0.0; d];
    let mut history = cfg.record_z.then(|| {
        let mut h = Vec::with_capacity(cfg.horizon + 1);
        h.push(x.clone());
        h
    });
    let mut checkpoints = Vec::with_capacity(cfg.checkpoints.len());
    let mut pending = cfg.checkpoints.iter().peekable();
    for t in 1..=cfg.horizon {
        sample_noisy_gradient_into(p, cfg.noise, &x, &mut rng, &mut xi, &mut g);
        let eta = cfg.schedule.eta(t)?;
        solver.solve_into(&g, &x, eta, &mut next);
        std::mem::swap(&mut x, &mut next);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(CsmdError::NumericalDivergence { t, gap: f64::NAN });
        }
        if let Some(h) = history.as_mut() {
            h.push(x.clone());
        }
        if pending.peek() == Some(&&t) {
            pending.next();
            let gap = p.objective_gap(&x);
            check_gap(t, gap)?;
            for ((o, a), b) in diff.iter_mut().zip(&x).zip(&p.x_star) {
                *o = a - b;
            }
            checkpoints.push(Checkpoint {
                t,
                gap,
                eta,
                dist: p.mirror.norm(&diff),
                bregman: p.distance_from_optimum(&x)?,
            });
        }
    }
    let final_gap = p.objective_gap(&x);
    check_gap(cfg.horizon, final_gap)?;
    Ok(RunRecord {
        horizon: cfg.horizon,
        checkpoints,
        final_iterate: x,
        final_gap,
        history,
        rng: cfg.rng,
        wall_time: start.elapsed(),
    })
}

/// Weights of `z^t` on `(x*, x^1, ..., x^t)`:
/// `(v_0 / v_t, (v_1 - v_0) / v_t, ..., (v_t - v_{t-1}) / v_t)`.
pub fn z_weights(seq: &AnalysisSequences, t: usize) -> Result<Vec<f64>> {
    if t > seq.horizon() {
        return Err(CsmdError::InvalidParameter(format!(
            "t = {t} beyond horizon {}",
            seq.horizon()
        )));
    }
    let v = &seq.v;
    let mut w = Vec::with_capacity(t + 1);
    w.push(v[0] / v[t]);
    for s in 1..=t {
        w.push((v[s] - v[s - 1]) / v[t]);
    }
    Ok(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ZRecord {
    pub t: usize,
    /// `F(z^t) - F(x*)`
    pub gap: f64,
    pub min_weight: f64,
    pub weight_sum: f64,
    /// `sum_i w_i F(p_i) - F(z^t)`; nonnegative by convexity.
    pub convexity_slack: f64,
}

/// Evaluates `z^t = (v_0/v_t) x_ref + sum_{s<=t} ((v_s - v_{s-1})/v_t) x^s`
/// for `t = 0..T` along a recorded trajectory.
pub fn z_diagnostics(
    record: &RunRecord,
    seq: &AnalysisSequences,
    problem: &ProblemInstance,
    x_ref: &[f64],
) -> Result<Vec<ZRecord>> {
    let history = record.history.as_ref().ok_or(CsmdError::HistoryNotRetained)?;
    let big_t = seq.horizon();
    if history.len() < big_t + 1 {
        return Err(CsmdError::DimensionMismatch {
            expected: big_t + 1,
            got: history.len(),
        });
    }
    let v = &seq.v;
    let f_ref = problem.value(x_ref);
    let mut acc: Vec<f64> = x_ref.iter().map(|a| v[0] * a).collect();
    let mut weight_acc = v[0];
    let mut value_acc = v[0] * f_ref;
    let mut min_raw = v[0];
    let mut z = vec![0.0; x_ref.len()];
    let mut out = Vec::with_capacity(big_t + 1);
    for t in 0..=big_t {
        if t >= 1 {
            let w = v[t] - v[t - 1];
            let xs = &history[t - 1];
            for (a, x) in acc.iter_mut().zip(xs) {
                *a += w * x;
            }
            weight_acc += w;
            value_acc += w * problem.value(xs);
            min_raw = min_raw.min(w);
        }
        for (zi, a) in z.iter_mut().zip(&acc) {
            *zi = a / v[t];
        }
        let fz = problem.value(&z);
        out.push(ZRecord {
            t,
            gap: fz - problem.f_star,
            min_weight: min_raw / v[t],
            weight_sum: weight_acc / v[t],
            convexity_slack: value_acc / v[t] - fz,
        });
    }
    Ok(out)
}

/// `sum_t gamma_t eta_t / sum_{s>=t} gamma_s`, computed in log space.
fn noise_sum(seq: &AnalysisSequences) -> f64 {
    seq.eta
        .iter()
        .zip(seq.log_gamma.iter().zip(&seq.log_tail_sum))
        .map(|(e, (lg, ls))| e * (lg - ls).exp())
        .sum()
}

/// Expectation bound on `F(x^{T+1}) - F(x)`:
/// `(1 - mu_f eta_1) D / sum gamma_t + 2 (M^2 + sigma^2) sum_t gamma_t eta_t / sum_{s>=t} gamma_s`.
pub fn expected_bound(seq: &AnalysisSequences, d_psi: f64, m: f64, sigma: f64) -> f64 {
    let lead = (1.0 - seq.mu_f * seq.eta[0]).max(0.0) * d_psi * (-seq.log_tail_sum[0]).exp();
    lead + 2.0 * (m * m + sigma * sigma) * noise_sum(seq)
}

/// High-probability (`1 - delta`) bound on `F(x^{T+1}) - F(x)` under
/// sub-Gaussian noise.
pub fn hp_bound(seq: &AnalysisSequences, d_psi: f64, m: f64, sigma: f64, delta: f64) -> Result<f64> {
    if !(delta > 0.0 && delta < 1.0) {
        return Err(CsmdError::DomainError(format!("delta must be in (0, 1), got {delta}")));
    }
    let worst = seq
        .eta
        .iter()
        .skip(1)
        .map(|e| 1.0 / (1.0 - seq.mu_f * e))
        .fold(1.0, f64::max);
    let noise = m * m + sigma * sigma * (1.0 + 2.0 * (2.0 / delta).ln());
    Ok(2.0 * (1.0 + worst) * (d_psi * (-seq.log_tail_sum[0]).exp() + noise * noise_sum(seq)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Domain, MirrorMap};
    use crate::problems::{Constants, Objective, Regularizer};
    use crate::schedules::{analysis_sequences, Rule, ScheduleParams};

    fn constant(eta: f64) -> Schedule {
        Schedule::new(
            Rule::Constant,
            ScheduleParams {
                eta: Some(eta),
                ..Default::default()
            },
            None,
        )
        .unwrap()
    }

    fn iso_quadratic() -> ProblemInstance {
        ProblemInstance::quadratic(
            "q",
            vec![1.0, 1.0],
            vec![0.0, 0.0],
            0.0,
            Regularizer::Zero,
            Domain::AllSpace,
            vec![1.0, 0.0],
        )
        .unwrap()
    }

    #[test]
    fn two_gradient_steps_by_hand() {
        let p = iso_quadratic();
        let s = constant(0.5);
        let rec = run_csmd(&RunConfig {
            problem: &p,
            noise: &NoiseModel::none(),
            schedule: &s,
            x1: &[1.0, 0.0],
            horizon: 2,
            checkpoints: &[1, 2],
            record_z: false,
            rng: RngStream::new(0, 0),
        })
        .unwrap();
        assert_eq!(rec.final_iterate, vec![0.25, 0.0]);
        assert_eq!(rec.final_gap, 0.03125);
        assert_eq!(rec.checkpoints[0].gap, 0.125);
    }

    #[test]
    fn multiplicative_weights_step() {
        let p = ProblemInstance::new(
            "lin",
            Objective::Linear {
                cost: vec![1.0, 0.0],
            },
            Regularizer::Zero,
            Domain::Simplex,
            MirrorMap::entropic_simplex(2),
            Constants::default(),
            vec![0.0, 1.0],
            vec![0.5, 0.5],
        )
        .unwrap();
        let s = constant(1.0);
        let rec = run_csmd(&RunConfig {
            problem: &p,
            noise: &NoiseModel::none(),
            schedule: &s,
            x1: &[0.5, 0.5],
            horizon: 2,
            checkpoints: &[1],
            record_z: true,
            rng: RngStream::new(0, 0),
        })
        .unwrap();
        let x2 = &rec.history.as_ref().unwrap()[1];
        let e = std::f64::consts::E;
        assert!((x2[0] - 1.0 / (1.0 + e)).abs() < 1e-15);
        assert!((x2[1] - e / (1.0 + e)).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_configs() {
        let p = iso_quadratic();
        let s = constant(0.5);
        let mut cfg = RunConfig {
            problem: &p,
            noise: &NoiseModel::none(),
            schedule: &s,
            x1: &[1.0, 0.0],
            horizon: 1,
            checkpoints: &[],
            record_z: false,
            rng: RngStream::new(0, 0),
        };
        assert!(run_csmd(&cfg).is_err());
        cfg.horizon = 4;
        cfg.checkpoints = &[3, 2];
        assert!(run_csmd(&cfg).is_err());
        cfg.checkpoints = &[5];
        assert!(run_csmd(&cfg).is_err());
    }

    #[test]
    fn z_needs_history() {
        let p = iso_quadratic();
        let s = constant(0.5);
        let rec = run_csmd(&RunConfig {
            problem: &p,
            noise: &NoiseModel::none(),
            schedule: &s,
            x1: &[1.0, 0.0],
            horizon: 3,
            checkpoints: &[],
            record_z: false,
            rng: RngStream::new(0, 0),
        })
        .unwrap();
        let seq = analysis_sequences(&s, 0.0, 0.0, 3).unwrap();
        assert_eq!(
            z_diagnostics(&rec, &seq, &p, &p.x_star),
            Err(CsmdError::HistoryNotRetained)
        );
    }

    #[test]
    fn z_weight_example() {
        let seq = analysis_sequences(&constant(1.0), 0.0, 0.0, 3).unwrap();
        let w = z_weights(&seq, 2).unwrap();
        let want = [2.0 / 3.0, 0.0, 1.0 / 3.0];
        for (a, b) in w.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        assert_eq!(z_weights(&seq, 0).unwrap(), vec![1.0]);
    }

    #[test]
    fn bound_examples() {
        let seq = analysis_sequences(&constant(1.0), 0.0, 0.0, 2).unwrap();
        assert!((expected_bound(&seq, 1.0, 1.0, 0.0) - 3.5).abs() < 1e-14);
        let want = 4.0 * (0.5 + (2.0 + 2.0 * 4f64.ln()) * 1.5);
        assert!((hp_bound(&seq, 1.0, 1.0, 1.0, 0.5).unwrap() - want).abs() < 1e-12);
        assert!(matches!(
            hp_bound(&seq, 1.0, 1.0, 1.0, 2.0),
            Err(CsmdError::DomainError(_))
        ));
    }

    #[test]
    fn strongly_convex_bound_drops_distance_term() {
        let s = Schedule::new(
            Rule::StrcFAnytime1,
            ScheduleParams {
                mu_f: 1.0,
                ..Default::default()
            },
            None,
        )
        .unwrap();
        let seq = analysis_sequences(&s, 1.0, 0.0, 10).unwrap();
        let want: f64 = 2.0 * (1..=10).map(|t| (1.0 / t as f64) / (10 - t + 1) as f64).sum::<f64>();
        assert!((expected_bound(&seq, 1.0, 1.0, 0.0) - want).abs() < 1e-12);
        assert_eq!(expected_bound(&seq, 1.0, 0.0, 0.0), 0.0);
    }
}

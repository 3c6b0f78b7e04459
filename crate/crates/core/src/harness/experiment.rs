//! Monte Carlo replication of one configured experiment and its reports.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::config::{Checks, Estimator, ExperimentConfig, FitKind, Tuning};
use super::dominance::{bound_dominance_report, DominanceEntry, DominanceReport, Evidence};
use super::exec::Executor;
use super::stats::{
    fit_rate, linear_fit, mean_se, median, median_of_means, quadratic_fit, quantile, trimmed_mean,
    LinearFit, RateFit,
};
use crate::engine::{expected_bound, hp_bound, run_csmd, Checkpoint, RunConfig};
use crate::error::{CsmdError, Result};
use crate::noise::{NoiseModel, RngStream};
use crate::problems::{registry, ProblemInstance};
use crate::schedules::{analysis_sequences, recommended_eta, Rule, Schedule, ScheduleParams, TuningInputs};

/// Blocks used by the median-of-means estimator.
pub const MOM_BLOCKS: usize = 10;
/// Fraction trimmed from each tail for the trimmed mean.
pub const TRIM_FRACTION: f64 = 0.01;
/// Gaps below this multiple of machine epsilon (times `max(1, |F*|)`) are
/// treated as round-off and left out of rate fits.
pub const FLOOR_FACTOR: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunRow {
    pub horizon: usize,
    pub replication: usize,
    pub stream: RngStream,
    /// `None` on success, the error message otherwise.
    pub error: Option<String>,
    pub final_gap: Option<f64>,
    pub checkpoints: Vec<Checkpoint>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HorizonStats {
    pub horizon: usize,
    pub completed: usize,
    pub failed: usize,
    pub mean: f64,
    pub std_error: f64,
    pub median: f64,
    pub median_of_means: f64,
    pub trimmed_mean: f64,
    /// `(delta, (1 - delta)-quantile)`
    pub quantiles: Vec<(f64, f64)>,
    pub eta_1: f64,
    pub expected_bound: Option<f64>,
    /// `(delta, bound)`
    pub hp_bounds: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

impl CheckOutcome {
    fn new(name: &str, passed: bool, detail: String) -> Self {
        Self {
            name: name.to_string(),
            passed,
            detail,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentResult {
    pub index: u64,
    pub config: ExperimentConfig,
    /// `D_psi(x*, x1)`
    pub d_psi: f64,
    #[serde(skip)]
    pub rows: Vec<RunRow>,
    pub stats: Vec<HorizonStats>,
    pub fit: Option<RateFit>,
    pub curvature: Option<f64>,
    pub log_linear: Option<LinearFit>,
    /// Horizons left out of the fit because the gap hit the round-off floor.
    pub excluded: Vec<usize>,
    pub dominance: Vec<DominanceReport>,
    pub checks: Vec<CheckOutcome>,
}

impl ExperimentResult {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    /// The statistic rate fits use at each horizon.
    pub fn central(&self, s: &HorizonStats) -> f64 {
        match self.config.estimator {
            Estimator::Mean => s.mean,
            Estimator::MedianOfMeans => s.median_of_means,
        }
    }
}

fn build_schedule(
    cfg: &ExperimentConfig,
    problem: &ProblemInstance,
    noise: &NoiseModel,
    d_psi: f64,
    horizon: usize,
) -> Result<Schedule> {
    let spec = &cfg.schedule;
    let c = problem.constants;
    let l = spec.l.unwrap_or(c.l);
    let mu_f = spec.mu_f.unwrap_or(c.mu_f);
    let mu_h = spec.mu_h.unwrap_or(c.mu_h);
    let p = spec.p.or_else(|| (noise.p() < 2.0).then(|| noise.p()));
    let tunable = !matches!(
        spec.rule,
        Rule::StrcFAnytime1 | Rule::StrcFAnytime2 | Rule::StrcHAnytime
    );
    let (eta, eta_star) = match spec.tuning {
        Tuning::Recommended if tunable => {
            let t = recommended_eta(
                spec.rule,
                &TuningInputs {
                    l,
                    m: c.m,
                    sigma: noise.sigma(),
                    d_psi,
                    horizon: Some(horizon),
                    delta: spec.tuning_delta,
                    p,
                },
            )?;
            (
                Some(t.eta * spec.multiplier),
                Some(t.eta_star * spec.multiplier),
            )
        }
        _ => (spec.eta, spec.eta_star),
    };
    Schedule::new(
        spec.rule,
        ScheduleParams {
            eta,
            eta_star,
            l,
            mu_f,
            mu_h,
            p,
        },
        Some(horizon),
    )
}

/// Runs `R x |T grid|` replications of experiment number `index`
/// (1-based; it selects the random streams) and evaluates its checks.
pub fn run_experiment(
    cfg: &ExperimentConfig,
    index: u64,
    base_seed: u64,
    exec: &Executor,
) -> Result<ExperimentResult> {
    cfg.validate()?;
    let problem = registry(&cfg.problem)?;
    let noise = NoiseModel::new(cfg.noise.generator, cfg.noise.sigma, cfg.noise.p)?;
    let x1 = cfg.x1.clone().unwrap_or_else(|| problem.x1.clone());
    let d_psi = problem.distance_from_optimum(&x1)?;
    let grid = cfg.t_grid.values();
    let schedules = grid
        .iter()
        .map(|&t| build_schedule(cfg, &problem, &noise, d_psi, t))
        .collect::<Result<Vec<_>>>()?;
    let checkpoint_sets: Vec<Vec<usize>> = grid.iter().map(|&t| cfg.checkpoints.points(t)).collect();

    let tasks: Vec<(usize, usize)> = (0..grid.len())
        .flat_map(|i| (0..cfg.replications).map(move |r| (i, r)))
        .collect();
    let rows = exec.map(&tasks, |&(i, r)| {
        let stream = RngStream::for_replication(base_seed, index, r as u64);
        let run = run_csmd(&RunConfig {
            problem: &problem,
            noise: &noise,
            schedule: &schedules[i],
            x1: &x1,
            horizon: grid[i],
            checkpoints: &checkpoint_sets[i],
            record_z: false,
            rng: stream,
        });
        match run {
            Ok(rec) => RunRow {
                horizon: grid[i],
                replication: r,
                stream,
                error: None,
                final_gap: Some(rec.final_gap),
                checkpoints: rec.checkpoints,
            },
            Err(e) => RunRow {
                horizon: grid[i],
                replication: r,
                stream,
                error: Some(e.to_string()),
                final_gap: None,
                checkpoints: Vec::new(),
            },
        }
    });

    let mut stats = Vec::with_capacity(grid.len());
    let mut bound_errors = Vec::new();
    for (i, &t) in grid.iter().enumerate() {
        let mine = &rows[i * cfg.replications..(i + 1) * cfg.replications];
        let gaps: Vec<f64> = mine.iter().filter_map(|r| r.final_gap).collect();
        let (mean, std_error) = mean_se(&gaps);
        let mut s = HorizonStats {
            horizon: t,
            completed: gaps.len(),
            failed: mine.len() - gaps.len(),
            mean,
            std_error,
            median: median(&gaps),
            median_of_means: median_of_means(&gaps, MOM_BLOCKS),
            trimmed_mean: trimmed_mean(&gaps, TRIM_FRACTION),
            quantiles: cfg.deltas.iter().map(|d| (*d, quantile(&gaps, 1.0 - d))).collect(),
            eta_1: schedules[i].eta(1)?,
            expected_bound: None,
            hp_bounds: Vec::new(),
        };
        if cfg.checks.expected_bound || cfg.checks.hp_bound {
            let (mu_f, mu_h) = schedules[i].analysis_moduli();
            match analysis_sequences(&schedules[i], mu_f, mu_h, t) {
                Ok(seq) => {
                    let (m, sigma) = (problem.constants.m, noise.sigma());
                    s.expected_bound = Some(expected_bound(&seq, d_psi, m, sigma));
                    for d in &cfg.deltas {
                        s.hp_bounds.push((*d, hp_bound(&seq, d_psi, m, sigma, *d)?));
                    }
                }
                Err(e) => bound_errors.push(format!("T={t}: {e}")),
            }
        }
        stats.push(s);
    }

    let mut result = ExperimentResult {
        index,
        config: cfg.clone(),
        d_psi,
        rows,
        stats,
        fit: None,
        curvature: None,
        log_linear: None,
        excluded: Vec::new(),
        dominance: Vec::new(),
        checks: Vec::new(),
    };
    evaluate_checks(&mut result, &problem, &noise, &cfg.checks, bound_errors);
    Ok(result)
}

fn evaluate_checks(
    res: &mut ExperimentResult,
    problem: &ProblemInstance,
    noise: &NoiseModel,
    checks: &Checks,
    bound_errors: Vec<String>,
) {
    let mut out = Vec::new();
    let failed: usize = res.stats.iter().map(|s| s.failed).sum();
    if failed > 0 {
        let first = res
            .rows
            .iter()
            .find_map(|r| r.error.clone())
            .unwrap_or_default();
        out.push(CheckOutcome::new(
            "runs",
            false,
            format!("{failed} runs failed; first error: {first}"),
        ));
    }
    if !bound_errors.is_empty() && (checks.expected_bound || checks.hp_bound) {
        out.push(CheckOutcome::new("bounds", false, bound_errors.join("; ")));
    }
    let mut dominance = |name: &str, entries: Vec<DominanceEntry>| {
        if entries.is_empty() {
            return;
        }
        match bound_dominance_report(noise.assumption(), &entries) {
            Ok(rep) => {
                let worst = rep
                    .rows
                    .iter()
                    .map(|r| r.statistic / r.entry.bound)
                    .fold(f64::NEG_INFINITY, f64::max);
                out.push(CheckOutcome::new(
                    name,
                    rep.passed,
                    format!("{} comparisons, max statistic/bound = {worst:.3e}", rep.rows.len()),
                ));
                res.dominance.push(rep);
            }
            Err(e) => out.push(CheckOutcome::new(name, false, e.to_string())),
        }
    };
    if checks.expected_bound {
        let entries = res
            .stats
            .iter()
            .filter_map(|s| {
                s.expected_bound.map(|bound| DominanceEntry {
                    horizon: s.horizon,
                    evidence: Evidence::Mean {
                        mean: s.mean,
                        std_error: s.std_error,
                    },
                    bound,
                })
            })
            .collect();
        dominance("expected_bound", entries);
    }
    if checks.hp_bound {
        let entries = res
            .stats
            .iter()
            .flat_map(|s| {
                s.hp_bounds.iter().zip(&s.quantiles).map(|(&(delta, bound), &(_, q))| DominanceEntry {
                    horizon: s.horizon,
                    evidence: Evidence::Quantile { delta, quantile: q },
                    bound,
                })
            })
            .collect();
        dominance("hp_bound", entries);
    }

    if checks.needs_fit() {
        let floor = FLOOR_FACTOR * f64::EPSILON * problem.f_star.abs().max(1.0);
        let mut points = Vec::new();
        for s in &res.stats {
            let c = res.central(s);
            if c >= floor {
                points.push((s.horizon, c));
            } else {
                res.excluded.push(s.horizon);
            }
        }
        let fit = match res.config.fit {
            FitKind::LogLog => fit_rate(&points).map(|f| {
                let x: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
                let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
                res.curvature = quadratic_fit(&x, &y).ok().map(|c| c[2]);
                (f.slope, f.r_squared, Some(f))
            }),
            FitKind::LogLinear => {
                if points.len() < 4 {
                    Err(CsmdError::InvalidParameter(format!(
                        "{} points above the round-off floor, need 4",
                        points.len()
                    )))
                } else {
                    let x: Vec<f64> = points.iter().map(|p| p.0 as f64).collect();
                    let y: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
                    linear_fit(&x, &y).map(|f| {
                        res.log_linear = Some(f);
                        (f.slope, f.r_squared, None)
                    })
                }
            }
        };
        match fit {
            Ok((slope, r2, rate)) => {
                res.fit = rate;
                if let Some([lo, hi]) = checks.slope {
                    out.push(CheckOutcome::new(
                        "slope",
                        slope >= lo && slope <= hi,
                        format!("slope {slope:.4} in [{lo}, {hi}]"),
                    ));
                }
                if let Some(max) = checks.max_abs_curvature {
                    let c = res.curvature.unwrap_or(f64::NAN);
                    out.push(CheckOutcome::new(
                        "curvature",
                        c.abs() <= max,
                        format!("quadratic term {c:.4}, |.| <= {max}"),
                    ));
                }
                if let Some(min) = checks.min_r_squared {
                    out.push(CheckOutcome::new(
                        "r_squared",
                        r2 >= min,
                        format!("r^2 {r2:.5} >= {min}"),
                    ));
                }
                if checks.negative_slope {
                    out.push(CheckOutcome::new(
                        "negative_slope",
                        slope < 0.0,
                        format!("slope {slope:.4e} < 0"),
                    ));
                }
            }
            Err(e) => out.push(CheckOutcome::new("fit", false, e.to_string())),
        }
    }
    res.checks = out;
}

/// Runs experiments in order, numbering them from 1.
pub fn run_suite(
    experiments: &[ExperimentConfig],
    base_seed: u64,
    exec: &Executor,
) -> Result<Vec<ExperimentResult>> {
    experiments
        .iter()
        .enumerate()
        .map(|(i, e)| run_experiment(e, i as u64 + 1, base_seed, exec))
        .collect()
}

fn fmt_f(v: f64) -> String {
    format!("{v:e}")
}

/// One row per recorded checkpoint (one row for a failed run).
pub fn write_results_csv<W: Write>(results: &[ExperimentResult], base_seed: u64, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let io = |e: csv::Error| CsmdError::Io(e.to_string());
    w.write_record([
        "experiment",
        "T",
        "replication",
        "seed",
        "stream",
        "status",
        "gap_final",
        "t",
        "gap_t",
        "eta_t",
    ])
    .map_err(io)?;
    for res in results {
        for row in &res.rows {
            let head = [
                res.config.id.clone(),
                row.horizon.to_string(),
                row.replication.to_string(),
                base_seed.to_string(),
                row.stream.stream_id.to_string(),
            ];
            match (&row.error, row.final_gap) {
                (None, Some(gap)) => {
                    for c in &row.checkpoints {
                        let mut rec = head.to_vec();
                        rec.extend([
                            "ok".to_string(),
                            fmt_f(gap),
                            c.t.to_string(),
                            fmt_f(c.gap),
                            fmt_f(c.eta),
                        ]);
                        w.write_record(&rec).map_err(io)?;
                    }
                }
                (err, _) => {
                    let mut rec = head.to_vec();
                    rec.extend([
                        format!("error: {}", err.clone().unwrap_or_default()),
                        String::new(),
                        String::new(),
                        String::new(),
                        String::new(),
                    ]);
                    w.write_record(&rec).map_err(io)?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
struct Summary<'a> {
    base_seed: u64,
    experiments: &'a [ExperimentResult],
}

pub fn write_summary_json<W: Write>(results: &[ExperimentResult], base_seed: u64, out: W) -> Result<()> {
    serde_json::to_writer_pretty(
        out,
        &Summary {
            base_seed,
            experiments: results,
        },
    )
    .map_err(|e| CsmdError::Io(e.to_string()))
}

/// `PASS`/`FAIL` lines, one per experiment check.
pub fn check_lines(results: &[ExperimentResult]) -> Vec<String> {
    results
        .iter()
        .flat_map(|r| {
            r.checks.iter().map(move |c| {
                format!(
                    "{} {}/{}: {}",
                    if c.passed { "PASS" } else { "FAIL" },
                    r.config.id,
                    c.name,
                    c.detail
                )
            })
        })
        .collect()
}

/// Writes `results.csv` and `summary.json` into `dir`.
pub fn write_outputs(dir: &Path, results: &[ExperimentResult], base_seed: u64) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    let csv = std::fs::File::create(dir.join("results.csv"))?;
    write_results_csv(results, base_seed, std::io::BufWriter::new(csv))?;
    let json = std::fs::File::create(dir.join("summary.json"))?;
    let mut json = std::io::BufWriter::new(json);
    write_summary_json(results, base_seed, &mut json)?;
    json.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::config::ConfigFile;

    fn config(body: &str) -> ExperimentConfig {
        ConfigFile::parse(body).unwrap().experiment.remove(0)
    }

    #[test]
    fn noiseless_replications_agree() {
        let cfg = config(
            r#"
            [[experiment]]
            id = "det"
            problem = "quad_iso_d10"
            replications = 2
            t_grid = { list = [4, 8] }
            noise = { generator = "gaussian", sigma = 0.0 }
            schedule = { rule = "constant", eta = 0.5 }
            checks = { expected_bound = true }
            "#,
        );
        let res = run_experiment(&cfg, 1, 0, &Executor::sequential()).unwrap();
        assert_eq!(res.rows.len(), 4);
        assert_eq!(res.rows[0].final_gap, res.rows[1].final_gap);
        assert_eq!(res.rows[2].final_gap, res.rows[3].final_gap);
        assert!(res.passed(), "{:?}", res.checks);
    }

    #[test]
    fn csv_is_reproducible_and_parallelism_independent() {
        let cfg = config(
            r#"
            [[experiment]]
            id = "noisy"
            problem = "huber_d4"
            replications = 8
            t_grid = { list = [16, 32] }
            checkpoints = "geometric"
            noise = { generator = "gaussian", sigma = 1.0 }
            schedule = { rule = "convex_anytime", eta = 0.5 }
            "#,
        );
        let render = |exec: Executor| {
            let res = run_suite(std::slice::from_ref(&cfg), 11, &exec).unwrap();
            let mut buf = Vec::new();
            write_results_csv(&res, 11, &mut buf).unwrap();
            buf
        };
        let a = render(Executor::sequential());
        let b = render(Executor::new(3));
        assert_eq!(a, b);
        let text = String::from_utf8(a).unwrap();
        assert!(text.starts_with("experiment,T,replication,seed,stream,status"));
        // 8 replications x (5 + 6 checkpoints) + header
        assert_eq!(text.lines().count(), 1 + 8 * (5 + 6));
    }
}

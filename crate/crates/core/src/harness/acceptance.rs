//! The acceptance matrix: twelve numbered criteria, each reported as one
//! `PASS`/`FAIL` line.

use std::fmt;
use std::path::PathBuf;

use serde::Serialize;

use super::config::ConfigFile;
use super::exec::Executor;
use super::experiment::{run_suite, write_outputs, write_results_csv, ExperimentResult};
use super::oracle::compare_with_oracle;
use super::quantile::{quantile_scaling, Regime};
use crate::engine::z_weights;
use crate::error::Result;
use crate::geometry::supported_triples;
use crate::noise::{validate_noise, Generator, NoiseModel, RngStream, MIN_VALIDATION_SAMPLES};
use crate::schedules::{analysis_sequences, Rule, Schedule, ScheduleParams};

/// The shipped matrix; also a worked example of the config format.
pub const MATRIX: &str = include_str!("../../fixtures/acceptance.toml");

pub const ORACLE_INSTANCES: usize = 100;
pub const ORACLE_TOLERANCE: f64 = 1e-6;
pub const NOISE_SAMPLES: usize = 1_000_000;
pub const SEQUENCE_HORIZON: usize = 1000;
pub const QUANTILE_RATIO_BAND: f64 = 3.0;

#[derive(Debug, Clone)]
pub struct AcceptanceOptions {
    pub base_seed: Option<u64>,
    pub jobs: usize,
    /// Where `results.csv`, `summary.json` and `acceptance.txt` go.
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriterionOutcome {
    pub number: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} [{}] {}: {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.number,
            self.title,
            self.detail
        )
    }
}

#[derive(Debug, Clone)]
pub struct AcceptanceReport {
    pub base_seed: u64,
    pub criteria: Vec<CriterionOutcome>,
    pub results: Vec<ExperimentResult>,
}

impl AcceptanceReport {
    pub fn passed(&self) -> bool {
        self.criteria.iter().all(|c| c.passed)
    }

    pub fn lines(&self) -> Vec<String> {
        self.criteria.iter().map(|c| c.to_string()).collect()
    }
}

pub fn matrix() -> Result<ConfigFile> {
    ConfigFile::parse(MATRIX)
}

fn outcome(number: u8, title: &'static str, res: Result<(bool, String)>) -> CriterionOutcome {
    let (passed, detail) = res.unwrap_or_else(|e| (false, format!("error: {e}")));
    CriterionOutcome {
        number,
        title,
        passed,
        detail,
    }
}

pub fn prox_oracle(seed: u64) -> Result<(bool, String)> {
    let mut worst = (0.0f64, String::new());
    let triples = supported_triples();
    for (i, t) in triples.iter().enumerate() {
        let c = compare_with_oracle(t, ORACLE_INSTANCES, seed.wrapping_add(i as u64))?;
        if c.max_objective_error >= worst.0 {
            worst = (
                c.max_objective_error,
                format!("{}/{}/{}", t.mirror, t.domain, t.regularizer),
            );
        }
    }
    Ok((
        worst.0 <= ORACLE_TOLERANCE,
        format!(
            "{} triples x {ORACLE_INSTANCES} instances, max |objective error| {:.2e} ({})",
            triples.len(),
            worst.0,
            worst.1
        ),
    ))
}

pub fn noise_certification(seed: u64) -> Result<(bool, String)> {
    let mut parts = Vec::new();
    let mut all = true;
    for (i, g) in Generator::ALL.into_iter().enumerate() {
        let p = match g {
            Generator::SymmetricPareto | Generator::SymmetricWeibull => Some(1.5),
            _ => None,
        };
        let model = NoiseModel::new(g, 1.0, p)?;
        let rep = validate_noise(&model, NOISE_SAMPLES.max(MIN_VALIDATION_SAMPLES), 3, RngStream::new(seed, i as u64))?;
        all &= rep.passed;
        parts.push(format!(
            "{}({}) {}",
            g,
            rep.assumption.name(),
            if rep.passed { "ok" } else { "violated" }
        ));
    }
    Ok((all, parts.join(", ")))
}

/// Parameters under which every rule builds and satisfies its step bound.
pub fn reference_schedule(rule: Rule, horizon: usize) -> Result<Schedule> {
    let params = if rule.is_heavy() {
        ScheduleParams {
            eta: Some(0.5),
            eta_star: Some(1.0),
            l: 0.0,
            p: Some(1.5),
            ..Default::default()
        }
    } else {
        ScheduleParams {
            eta: if matches!(rule, Rule::StrcFKnownPiecewise | Rule::StrcHKnownPiecewise) {
                None
            } else {
                Some(0.5)
            },
            eta_star: None,
            l: 1.0,
            mu_f: 0.5,
            mu_h: 0.5,
            p: None,
        }
    };
    Schedule::new(rule, params, Some(horizon))
}

pub fn sequence_identities() -> Result<(bool, String)> {
    let t = SEQUENCE_HORIZON;
    let (mut tele, mut mono, mut norm, mut wsum, mut wneg) = (0.0f64, 0.0f64, 0.0f64, 0.0f64, 0.0f64);
    for rule in Rule::ALL {
        let s = reference_schedule(rule, t)?;
        let (mu_f, mu_h) = s.analysis_moduli();
        let seq = analysis_sequences(&s, mu_f, mu_h, t)?;
        tele = tele.max(seq.telescoping_error());
        for w in seq.v.windows(2) {
            mono = mono.max(w[0] - w[1]);
        }
        norm = norm.max((seq.v[t] - 1.0).abs());
        for k in [1, 2, t / 2, t - 1, t] {
            let w = z_weights(&seq, k)?;
            wsum = wsum.max((w.iter().sum::<f64>() - 1.0).abs());
            wneg = wneg.max(w.iter().map(|v| -v).fold(0.0, f64::max));
        }
    }
    let passed = tele <= 1e-10 && mono <= 1e-10 && norm <= 1e-10 && wsum <= 1e-12 && wneg <= 1e-12;
    Ok((
        passed,
        format!(
            "{} rules at T={t}: telescoping {tele:.1e}, v decrease {mono:.1e}, |v_T - 1| {norm:.1e}, \
             |sum w - 1| {wsum:.1e}, negative weight {wneg:.1e}",
            Rule::ALL.len()
        ),
    ))
}

fn experiments_criterion(results: &[ExperimentResult], prefix: &str) -> (bool, String) {
    let mine: Vec<&ExperimentResult> = results
        .iter()
        .filter(|r| r.config.id.starts_with(prefix))
        .collect();
    if mine.is_empty() {
        return (false, format!("no experiments with prefix {prefix}"));
    }
    let passed = mine.iter().all(|r| r.passed());
    let detail = mine
        .iter()
        .map(|r| {
            let checks: Vec<String> = r
                .checks
                .iter()
                .map(|c| format!("{}{}", if c.passed { "" } else { "FAILED " }, c.detail))
                .collect();
            format!("{} [{}]", r.config.id, checks.join("; "))
        })
        .collect::<Vec<_>>()
        .join(" ");
    (passed, detail)
}

fn quantile_detail(results: &[ExperimentResult]) -> String {
    let Some(r) = results.iter().find(|r| r.config.id == "c3_quantiles") else {
        return String::new();
    };
    let gaps: Vec<f64> = r.rows.iter().filter_map(|row| row.final_gap).collect();
    match quantile_scaling(&gaps, &r.config.deltas, Regime::Convex) {
        Ok(q) => match q.ratio {
            Some(ratio) => format!(
                "; q_0.01/q_0.1 = {ratio:.3} (band {QUANTILE_RATIO_BAND}{})",
                if ratio <= QUANTILE_RATIO_BAND { "" } else { ", outside" }
            ),
            None => String::new(),
        },
        Err(e) => format!("; quantile scaling: {e}"),
    }
}

fn render_csv(results: &[ExperimentResult], base_seed: u64) -> Result<Vec<u8>> {
    let mut buf = Vec::new();
    write_results_csv(results, base_seed, &mut buf)?;
    Ok(buf)
}

/// Runs all twelve criteria. Experiment criteria (2-9) share one run of the
/// matrix; determinism reruns it with a different worker count.
pub fn run_acceptance(opts: &AcceptanceOptions) -> Result<AcceptanceReport> {
    let cfg = matrix()?;
    let base_seed = opts.base_seed.unwrap_or(cfg.base_seed);
    let exec = Executor::new(opts.jobs);
    let results = run_suite(&cfg.experiment, base_seed, &exec)?;

    let mut criteria = vec![outcome(
        1,
        "prox matches brute-force minimizer",
        prox_oracle(base_seed),
    )];
    let exp = |n: u8, title: &'static str, prefix: &str, extra: String| {
        let (passed, detail) = experiments_criterion(&results, prefix);
        CriterionOutcome {
            number: n,
            title,
            passed,
            detail: detail + &extra,
        }
    };
    criteria.push(exp(2, "expected gap below the expectation bound", "c2_", String::new()));
    criteria.push(exp(3, "gap quantiles below the high-probability bound", "c3_", quantile_detail(&results)));
    criteria.push(exp(4, "convex anytime rate", "c4_", String::new()));
    criteria.push(exp(5, "known-horizon linear-decay rate without log factor", "c5_", String::new()));
    criteria.push(exp(6, "smooth noiseless 1/T rate", "c6_", String::new()));
    criteria.push(exp(7, "strongly convex anytime rate", "c7_", String::new()));
    criteria.push(exp(8, "piecewise schedule converges linearly", "c8_", String::new()));
    criteria.push(exp(9, "heavy-tailed rate", "c9_", String::new()));
    criteria.push(outcome(10, "noise generators certified", noise_certification(base_seed)));
    criteria.push(outcome(11, "schedule sequence identities", sequence_identities()));

    let determinism = (|| -> Result<(bool, String)> {
        let first = render_csv(&results, base_seed)?;
        let other_jobs = if exec.jobs() == 1 { 2 } else { 1 };
        let again = run_suite(&cfg.experiment, base_seed, &Executor::new(other_jobs))?;
        let second = render_csv(&again, base_seed)?;
        Ok((
            first == second,
            format!(
                "results.csv {} bytes, rerun with {} vs {} workers {}",
                first.len(),
                exec.jobs(),
                other_jobs,
                if first == second { "identical" } else { "differs" }
            ),
        ))
    })();
    criteria.push(outcome(12, "reruns are byte-identical", determinism));

    let report = AcceptanceReport {
        base_seed,
        criteria,
        results,
    };
    if let Some(dir) = &opts.out_dir {
        write_outputs(dir, &report.results, base_seed)?;
        let mut text = report.lines().join("\n");
        text.push('\n');
        std::fs::write(dir.join("acceptance.txt"), text)?;
    }
    Ok(report)
}

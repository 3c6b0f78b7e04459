//! TOML experiment configuration.
//!
//! ```toml
//! base_seed = 7
//! jobs = 4
//!
//! [[experiment]]
//! id = "convex_rate"
//! problem = "flat_power8_d8"
//! replications = 200
//! t_grid = { powers_of_two = [6, 14] }
//! estimator = "median_of_means"
//! noise = { generator = "gaussian", sigma = 2.8284271247461903 }
//! schedule = { rule = "convex_anytime", eta = 1.0 }
//! checks = { slope = [-0.62, -0.38] }
//! ```

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{CsmdError, Result};
use crate::noise::Generator;
use crate::schedules::Rule;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    #[serde(default)]
    pub base_seed: u64,
    pub jobs: Option<usize>,
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub experiment: Vec<ExperimentConfig>,
}

impl ConfigFile {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ConfigFile = toml::from_str(text).map_err(|e| CsmdError::Config(e.to_string()))?;
        for e in &cfg.experiment {
            e.validate()?;
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub id: String,
    pub problem: String,
    pub noise: NoiseSpec,
    pub schedule: ScheduleSpec,
    pub t_grid: TGrid,
    pub replications: usize,
    /// Tail probabilities for quantiles and high-probability bounds.
    #[serde(default)]
    pub deltas: Vec<f64>,
    #[serde(default)]
    pub checkpoints: CheckpointPolicy,
    #[serde(default)]
    pub estimator: Estimator,
    #[serde(default)]
    pub fit: FitKind,
    #[serde(default)]
    pub checks: Checks,
    /// Overrides the problem's default starting point.
    #[serde(default)]
    pub x1: Option<Vec<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseSpec {
    pub generator: Generator,
    pub sigma: f64,
    pub p: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Tuning {
    /// Use `eta` / `eta_star` as given.
    #[default]
    Explicit,
    /// Order-optimal tuning from the problem constants, scaled by `multiplier`.
    Recommended,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScheduleSpec {
    pub rule: Rule,
    pub eta: Option<f64>,
    pub eta_star: Option<f64>,
    #[serde(default)]
    pub tuning: Tuning,
    #[serde(default = "one")]
    pub multiplier: f64,
    /// Confidence level the recommended tuning targets.
    pub tuning_delta: Option<f64>,
    /// Constants default to the problem's declared ones.
    pub l: Option<f64>,
    pub mu_f: Option<f64>,
    pub mu_h: Option<f64>,
    /// Defaults to the noise tail exponent.
    pub p: Option<f64>,
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum TGrid {
    List(Vec<usize>),
    /// `2^a, ..., 2^b`
    PowersOfTwo([u32; 2]),
    /// `start, start + step, ..., <= stop`
    Arithmetic([usize; 3]),
}

impl TGrid {
    pub fn values(&self) -> Vec<usize> {
        match self {
            TGrid::List(v) => v.clone(),
            TGrid::PowersOfTwo([a, b]) => (*a..=*b).map(|k| 1usize << k).collect(),
            TGrid::Arithmetic([start, stop, step]) => {
                (*start..=*stop).step_by((*step).max(1)).collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum CheckpointPolicy {
    /// Only `t = T`.
    #[default]
    Final,
    /// Powers of two below `T`, and `T`.
    Geometric,
}

impl CheckpointPolicy {
    pub fn points(self, horizon: usize) -> Vec<usize> {
        match self {
            CheckpointPolicy::Final => vec![horizon],
            CheckpointPolicy::Geometric => {
                let mut v: Vec<usize> = (0..usize::BITS)
                    .map(|k| 1usize << k)
                    .take_while(|t| *t < horizon)
                    .collect();
                v.push(horizon);
                v
            }
        }
    }
}

/// Central statistic of the final gaps used for rate fits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    #[default]
    Mean,
    /// Ten blocks.
    MedianOfMeans,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// `ln gap` against `ln T`.
    #[default]
    LogLog,
    /// `ln gap` against `T` (geometric convergence).
    LogLinear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct Checks {
    /// `mean - 2 SE <= expected bound` at every `T`.
    #[serde(default)]
    pub expected_bound: bool,
    /// `(1 - delta)`-quantile `<= hp bound` at every `T` and `delta`.
    #[serde(default)]
    pub hp_bound: bool,
    /// Fitted slope must lie in `[lo, hi]`.
    pub slope: Option<[f64; 2]>,
    /// `|curvature|` of a quadratic log-log fit must not exceed this.
    pub max_abs_curvature: Option<f64>,
    pub min_r_squared: Option<f64>,
    #[serde(default)]
    pub negative_slope: bool,
}

impl Checks {
    pub fn needs_fit(&self) -> bool {
        self.slope.is_some()
            || self.max_abs_curvature.is_some()
            || self.min_r_squared.is_some()
            || self.negative_slope
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(CsmdError::Config(format!("experiment {}: {msg}", self.id)));
        let grid = self.t_grid.values();
        if grid.is_empty() {
            return bad("empty T grid".into());
        }
        if !grid.windows(2).all(|w| w[0] < w[1]) {
            return bad("T grid must be strictly increasing".into());
        }
        if grid[0] < 2 {
            return bad("every horizon must be >= 2".into());
        }
        if self.checks.needs_fit() && grid.len() < 4 {
            return bad("rate checks need >= 4 grid points".into());
        }
        if self.replications == 0 {
            return bad("replications must be >= 1".into());
        }
        let noisy = self.noise.sigma > 0.0;
        if noisy && (self.checks.expected_bound || self.checks.needs_fit()) && self.replications < 30 {
            return bad("mean estimates need >= 30 replications".into());
        }
        if self.deltas.iter().any(|d| !(*d > 0.0 && *d < 1.0)) {
            return bad("deltas must lie in (0, 1)".into());
        }
        if self.checks.hp_bound && self.deltas.is_empty() {
            return bad("hp_bound check needs deltas".into());
        }
        if let Some(dmin) = self.deltas.iter().cloned().reduce(f64::min) {
            let need = (10.0 / dmin).ceil() as usize;
            if noisy && self.replications < need {
                return bad(format!("quantiles at delta = {dmin} need >= {need} replications"));
            }
        }
        if let Some([lo, hi]) = self.checks.slope {
            if lo > hi {
                return bad("slope range is reversed".into());
            }
        }
        if !(self.schedule.multiplier > 0.0) {
            return bad("multiplier must be > 0".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
        base_seed = 3

        [[experiment]]
        id = "a"
        problem = "abs_d1"
        replications = 40
        t_grid = { powers_of_two = [4, 7] }
        estimator = "median_of_means"
        noise = { generator = "gaussian", sigma = 1.0 }
        schedule = { rule = "convex_anytime", tuning = "recommended", multiplier = 0.5 }
        checks = { slope = [-0.7, -0.3], expected_bound = true }
    "#;

    #[test]
    fn parses_sample() {
        let c = ConfigFile::parse(SAMPLE).unwrap();
        assert_eq!(c.base_seed, 3);
        let e = &c.experiment[0];
        assert_eq!(e.t_grid.values(), vec![16, 32, 64, 128]);
        assert_eq!(e.schedule.rule, Rule::ConvexAnytime);
        assert_eq!(e.schedule.tuning, Tuning::Recommended);
        assert_eq!(e.estimator, Estimator::MedianOfMeans);
    }

    #[test]
    fn rejects_unknown_keys_and_bad_grids() {
        assert!(ConfigFile::parse("colour = 1").is_err());
        let short = SAMPLE.replace("[4, 7]", "[4, 5]");
        assert!(ConfigFile::parse(&short).is_err());
        let few = SAMPLE.replace("replications = 40", "replications = 5");
        assert!(ConfigFile::parse(&few).is_err());
    }

    #[test]
    fn grids_and_checkpoints() {
        assert_eq!(TGrid::Arithmetic([8, 32, 8]).values(), vec![8, 16, 24, 32]);
        assert_eq!(CheckpointPolicy::Geometric.points(10), vec![1, 2, 4, 8, 10]);
        assert_eq!(CheckpointPolicy::Geometric.points(8), vec![1, 2, 4, 8]);
    }
}

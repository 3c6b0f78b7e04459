//! Additive, zero-mean gradient noise with empirical certification of the
//! moment and moment-generating-function conditions each generator claims.

use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, Pareto, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{CsmdError, Result};
use crate::linalg::compensated_sum;
use crate::problems::ProblemInstance;

/// Conditional noise hypotheses, all stated for the (dual) norm `||xi||`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Assumption {
    /// `E ||xi||^2 <= sigma^2`
    BoundedVariance,
    /// `E exp(lambda ||xi||^2) <= exp(lambda sigma^2)` for `lambda in [0, sigma^-2]`
    SubGaussian,
    /// `E ||xi||^p <= sigma^p`, `p in (1, 2)`
    FiniteMoment,
    /// `E exp(lambda ||xi||^p) <= exp(lambda sigma^p)` for `lambda in [0, sigma^-p]`
    SubWeibull,
}

impl Assumption {
    pub fn name(self) -> &'static str {
        match self {
            Assumption::BoundedVariance => "bounded_variance",
            Assumption::SubGaussian => "sub_gaussian",
            Assumption::FiniteMoment => "finite_moment",
            Assumption::SubWeibull => "sub_weibull",
        }
    }

    /// Whether a noise certified for `self` also satisfies `need`.
    pub fn implies(self, need: Assumption) -> bool {
        use Assumption::*;
        match need {
            BoundedVariance => matches!(self, BoundedVariance | SubGaussian),
            SubGaussian => self == SubGaussian,
            FiniteMoment => true,
            SubWeibull => matches!(self, SubWeibull | SubGaussian),
        }
    }
}

impl fmt::Display for Assumption {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Generator {
    /// Isotropic Gaussian with total variance `sigma^2`.
    Gaussian,
    /// Uniform on the sphere of radius `sigma`.
    SphereBounded,
    /// Isotropic Gaussian with total variance `sigma^2 / 2.5`.
    ScaledGaussianMgf,
    /// Uniform direction, Pareto radius with shape `(p + 2) / 2`.
    SymmetricPareto,
    /// Uniform direction, radius `(sigma / c_p) E^(1/p)`, `E ~ Exp(1)`.
    SymmetricWeibull,
}

impl Generator {
    pub const ALL: [Generator; 5] = [
        Generator::Gaussian,
        Generator::SphereBounded,
        Generator::ScaledGaussianMgf,
        Generator::SymmetricPareto,
        Generator::SymmetricWeibull,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Generator::Gaussian => "gaussian",
            Generator::SphereBounded => "sphere_bounded",
            Generator::ScaledGaussianMgf => "scaled_gaussian_mgf",
            Generator::SymmetricPareto => "symmetric_pareto",
            Generator::SymmetricWeibull => "symmetric_weibull",
        }
    }

    pub fn assumption(self) -> Assumption {
        match self {
            Generator::Gaussian => Assumption::BoundedVariance,
            Generator::SphereBounded | Generator::ScaledGaussianMgf => Assumption::SubGaussian,
            Generator::SymmetricPareto => Assumption::FiniteMoment,
            Generator::SymmetricWeibull => Assumption::SubWeibull,
        }
    }

    fn needs_p(self) -> bool {
        matches!(self, Generator::SymmetricPareto | Generator::SymmetricWeibull)
    }
}

impl FromStr for Generator {
    type Err = CsmdError;

    fn from_str(s: &str) -> Result<Self> {
        Generator::ALL
            .into_iter()
            .find(|g| g.name() == s)
            .ok_or_else(|| CsmdError::Unknown {
                kind: "noise generator",
                name: s.to_string(),
            })
    }
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Variance divisor of the scaled Gaussian sub-Gaussian generator.
const MGF_VARIANCE_DIVISOR: f64 = 2.5;
/// Sub-Weibull margin: the radius is `(sigma / 1.6^(1/p)) E^(1/p)`.
const WEIBULL_MARGIN: f64 = 1.6;

#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    generator: Generator,
    sigma: f64,
    p: f64,
    pareto: Option<Pareto<f64>>,
}

impl NoiseModel {
    /// `p` is required for the Pareto (`p in (1, 2)`) and Weibull
    /// (`p in (0, 2)`) generators and ignored otherwise.
    pub fn new(generator: Generator, sigma: f64, p: Option<f64>) -> Result<Self> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(CsmdError::InvalidParameter(format!(
                "noise level must be finite and >= 0, got {sigma}"
            )));
        }
        let p = match (generator.needs_p(), p) {
            (false, _) => 2.0,
            (true, None) => {
                return Err(CsmdError::InvalidParameter(format!(
                    "{generator} needs a tail exponent p"
                )))
            }
            (true, Some(p)) => p,
        };
        let ok = match generator {
            Generator::SymmetricPareto => p > 1.0 && p < 2.0,
            Generator::SymmetricWeibull => p > 0.0 && p < 2.0,
            _ => true,
        };
        if !ok {
            return Err(CsmdError::InvalidParameter(format!(
                "tail exponent {p} out of range for {generator}"
            )));
        }
        let pareto = if generator == Generator::SymmetricPareto && sigma > 0.0 {
            let shape = (p + 2.0) / 2.0;
            // shape * scale^p / (shape - p) = sigma^p
            let scale = sigma * ((shape - p) / shape).powf(1.0 / p);
            Some(Pareto::new(scale, shape).map_err(|e| CsmdError::InvalidParameter(e.to_string()))?)
        } else {
            None
        };
        Ok(Self {
            generator,
            sigma,
            p,
            pareto,
        })
    }

    pub fn none() -> Self {
        Self::new(Generator::Gaussian, 0.0, None).expect("zero noise is valid")
    }

    pub fn generator(&self) -> Generator {
        self.generator
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    /// Tail exponent; 2 for the light-tailed generators.
    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn assumption(&self) -> Assumption {
        self.generator.assumption()
    }

    /// Draws one noise vector into `out`. Zero noise consumes no randomness.
    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        if self.sigma == 0.0 || out.is_empty() {
            out.iter_mut().for_each(|o| *o = 0.0);
            return;
        }
        let d = out.len() as f64;
        match self.generator {
            Generator::Gaussian | Generator::ScaledGaussianMgf => {
                let var = if self.generator == Generator::Gaussian {
                    self.sigma * self.sigma
                } else {
                    self.sigma * self.sigma / MGF_VARIANCE_DIVISOR
                };
                let s = (var / d).sqrt();
                for o in out.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *o = s * z;
                }
            }
            Generator::SphereBounded => {
                random_direction(rng, out);
                out.iter_mut().for_each(|o| *o *= self.sigma);
            }
            Generator::SymmetricPareto => {
                let r = self.pareto.as_ref().expect("built when sigma > 0").sample(rng);
                random_direction(rng, out);
                out.iter_mut().for_each(|o| *o *= r);
            }
            Generator::SymmetricWeibull => {
                let e: f64 = Exp1.sample(rng);
                let r = self.sigma * (e / WEIBULL_MARGIN).powf(1.0 / self.p);
                random_direction(rng, out);
                out.iter_mut().for_each(|o| *o *= r);
            }
        }
    }
}

fn random_direction<R: Rng + ?Sized>(rng: &mut R, out: &mut [f64]) {
    if out.len() == 1 {
        out[0] = if rng.random::<bool>() { 1.0 } else { -1.0 };
        return;
    }
    loop {
        let mut n2 = 0.0;
        for o in out.iter_mut() {
            let z: f64 = StandardNormal.sample(rng);
            *o = z;
            n2 += z * z;
        }
        if n2 > 0.0 {
            let inv = 1.0 / n2.sqrt();
            out.iter_mut().for_each(|o| *o *= inv);
            return;
        }
    }
}

/// A reproducible, independent random stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngStream {
    pub base_seed: u64,
    pub stream_id: u64,
}

impl RngStream {
    pub fn new(base_seed: u64, stream_id: u64) -> Self {
        Self {
            base_seed,
            stream_id,
        }
    }

    /// Stream of replication `replication` in experiment number `experiment`.
    pub fn for_replication(base_seed: u64, experiment: u64, replication: u64) -> Self {
        Self::new(base_seed, experiment * 1_000_000 + replication)
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.base_seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// `true_subgradient(x) + xi` with `xi` independent of `x`.
pub fn sample_noisy_gradient<R: Rng + ?Sized>(
    problem: &ProblemInstance,
    noise: &NoiseModel,
    x: &[f64],
    rng: &mut R,
) -> Vec<f64> {
    let mut out = vec![0.0; x.len()];
    let mut xi = vec![0.0; x.len()];
    sample_noisy_gradient_into(problem, noise, x, rng, &mut xi, &mut out);
    out
}

pub fn sample_noisy_gradient_into<R: Rng + ?Sized>(
    problem: &ProblemInstance,
    noise: &NoiseModel,
    x: &[f64],
    rng: &mut R,
    scratch: &mut [f64],
    out: &mut [f64],
) {
    problem.subgradient_into(x, out);
    if noise.sigma == 0.0 {
        return;
    }
    noise.sample_into(rng, scratch);
    for (o, s) in out.iter_mut().zip(scratch.iter()) {
        *o += s;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GridCheck {
    /// MGF parameter; `None` for a plain moment check.
    pub lambda: Option<f64>,
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct NoiseReport {
    pub generator: Generator,
    pub assumption: Assumption,
    pub sigma: f64,
    pub p: f64,
    pub samples: usize,
    pub checks: Vec<GridCheck>,
    /// `(n, mean ||xi||^2 over the first n draws)`; reported for heavy tails,
    /// where it keeps growing with `n`.
    pub second_moment_growth: Vec<(usize, f64)>,
    pub passed: bool,
}

pub const MIN_VALIDATION_SAMPLES: usize = 10_000;
const LAMBDA_GRID: [f64; 5] = [0.1, 0.25, 0.5, 0.75, 1.0];

fn mean_and_se(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = compensated_sum(v.iter().copied()) / n;
    let var = compensated_sum(v.iter().map(|x| (x - mean) * (x - mean))) / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo check of the generator's declared assumption in dimension
/// `dim`. PASS at a grid point iff `estimate - 2 SE <= bound`.
pub fn validate_noise(
    model: &NoiseModel,
    samples: usize,
    dim: usize,
    stream: RngStream,
) -> Result<NoiseReport> {
    if model.sigma <= 0.0 {
        return Err(CsmdError::InvalidParameter(
            "validation needs a positive noise level".into(),
        ));
    }
    if dim == 0 {
        return Err(CsmdError::InvalidParameter("dimension must be >= 1".into()));
    }
    if samples < MIN_VALIDATION_SAMPLES {
        return Err(CsmdError::InsufficientSamples {
            std_error: f64::INFINITY,
            bound: MIN_VALIDATION_SAMPLES as f64,
        });
    }
    let mut rng = stream.rng();
    let mut xi = vec![0.0; dim];
    let mut sq = Vec::with_capacity(samples);
    for _ in 0..samples {
        model.sample_into(&mut rng, &mut xi);
        sq.push(xi.iter().map(|v| v * v).sum::<f64>());
    }
    let assumption = model.assumption();
    let (sigma, p) = (model.sigma, model.p);
    let power: Vec<f64> = match assumption {
        Assumption::BoundedVariance | Assumption::SubGaussian => sq.clone(),
        Assumption::FiniteMoment | Assumption::SubWeibull => sq.iter().map(|s| s.powf(p / 2.0)).collect(),
    };
    let scale = match assumption {
        Assumption::BoundedVariance | Assumption::SubGaussian => sigma * sigma,
        Assumption::FiniteMoment | Assumption::SubWeibull => sigma.powf(p),
    };
    let mut checks = Vec::new();
    let mut check = |lambda: Option<f64>, values: &[f64], bound: f64| -> Result<()> {
        let (estimate, std_error) = mean_and_se(values);
        if std_error > 0.2 * bound {
            return Err(CsmdError::InsufficientSamples { std_error, bound });
        }
        checks.push(GridCheck {
            lambda,
            estimate,
            std_error,
            bound,
            // rounding allowance for the exact-equality generators
            passed: estimate - 2.0 * std_error <= bound * (1.0 + 1e-12),
        });
        Ok(())
    };
    match assumption {
        Assumption::BoundedVariance | Assumption::FiniteMoment => check(None, &power, scale)?,
        Assumption::SubGaussian | Assumption::SubWeibull => {
            for c in LAMBDA_GRID {
                let lambda = c / scale;
                let mgf: Vec<f64> = power.iter().map(|v| (lambda * v).exp()).collect();
                check(Some(lambda), &mgf, (lambda * scale).exp())?;
            }
        }
    }
    let mut second_moment_growth = Vec::new();
    if assumption == Assumption::FiniteMoment {
        let mut n = MIN_VALIDATION_SAMPLES;
        while n <= samples {
            second_moment_growth.push((n, sq[..n].iter().sum::<f64>() / n as f64));
            n *= 10;
        }
    }
    let passed = checks.iter().all(|c| c.passed);
    Ok(NoiseReport {
        generator: model.generator,
        assumption,
        sigma,
        p,
        samples,
        checks,
        second_moment_growth,
        passed,
    })
}

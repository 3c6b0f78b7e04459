//! Derivative-free reference minimizer for prox subproblems.
//!
//! It only evaluates [`ProxProblem::objective`] along feasible line segments
//! (golden-section search), so it shares no closed form with the solver.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{CsmdError, Result};
use crate::geometry::{solve_prox, Domain, MirrorMap, ProxProblem, Triple};
use crate::linalg::{dot, norm2};
use crate::problems::Regularizer;

const GOLDEN_ITERS: usize = 90;
const MAX_SWEEPS: usize = 4000;

fn eval(p: &ProxProblem<'_>, x: &[f64]) -> f64 {
    match p.objective(x) {
        Ok(v) if v.is_finite() => v,
        _ => f64::INFINITY,
    }
}

/// Minimizes `s -> f(s)` on `[lo, hi]` assuming unimodality.
fn golden(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> (f64, f64) {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - r * (hi - lo);
    let mut b = lo + r * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    for _ in 0..GOLDEN_ITERS {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - r * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + r * (hi - lo);
            fb = f(b);
        }
    }
    let mut best = if fa <= fb { (a, fa) } else { (b, fb) };
    for s in [lo, hi] {
        let v = f(s);
        if v < best.1 {
            best = (s, v);
        }
    }
    best
}

/// Feasible step interval `{s : x + s u in domain}`, capped at `radius`.
fn interval(domain: &Domain, x: &[f64], u: &[f64], radius: f64) -> (f64, f64) {
    let (mut lo, mut hi) = (-radius, radius);
    match domain {
        Domain::AllSpace => {}
        Domain::Box { lower, upper } => {
            for i in 0..x.len() {
                if u[i] != 0.0 {
                    let (a, b) = ((lower[i] - x[i]) / u[i], (upper[i] - x[i]) / u[i]);
                    lo = lo.max(a.min(b));
                    hi = hi.min(a.max(b));
                }
            }
        }
        Domain::L2Ball { center, radius: r } => {
            // |x - c + s u|^2 <= r^2
            let w: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
            let (a, b, c) = (dot(u, u), dot(&w, u), dot(&w, &w) - r * r);
            let disc = (b * b - a * c).max(0.0).sqrt();
            lo = lo.max((-b - disc) / a);
            hi = hi.min((-b + disc) / a);
        }
        Domain::Simplex => {
            for i in 0..x.len() {
                if u[i] > 0.0 {
                    lo = lo.max(-x[i] / u[i]);
                } else if u[i] < 0.0 {
                    hi = hi.min(-x[i] / u[i]);
                }
            }
        }
    }
    (lo.min(0.0), hi.max(0.0))
}

fn directions<R: Rng>(domain: &Domain, d: usize, smooth_coupled: bool, rng: &mut R) -> Vec<Vec<f64>> {
    let unit = |i: usize| {
        let mut e = vec![0.0; d];
        e[i] = 1.0;
        e
    };
    let mut out = Vec::new();
    if matches!(domain, Domain::Simplex) {
        for i in 0..d {
            for j in 0..d {
                if i < j {
                    let mut e = unit(i);
                    e[j] = -1.0;
                    out.push(e);
                }
            }
        }
        return out;
    }
    out.extend((0..d).map(unit));
    if smooth_coupled {
        for _ in 0..2 * d {
            let v: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
            let n = norm2(&v);
            out.push(v.into_iter().map(|a| a / n).collect());
        }
    }
    out
}

/// Golden search along a random great circle through `x` around `center`,
/// which keeps the distance to the center fixed.
fn arc_search<R: Rng>(p: &ProxProblem<'_>, center: &[f64], x: &[f64], rng: &mut R) -> Option<(Vec<f64>, f64)> {
    let n: Vec<f64> = x.iter().zip(center).map(|(a, c)| a - c).collect();
    let rho = norm2(&n);
    if rho == 0.0 || x.len() < 2 {
        return None;
    }
    let n: Vec<f64> = n.iter().map(|v| v / rho).collect();
    let mut w: Vec<f64> = (0..x.len()).map(|_| StandardNormal.sample(rng)).collect();
    let proj = dot(&w, &n);
    w.iter_mut().zip(&n).for_each(|(a, b)| *a -= proj * b);
    let wn = norm2(&w);
    if wn == 0.0 {
        return None;
    }
    let point = |th: f64| -> Vec<f64> {
        (0..x.len())
            .map(|i| center[i] + rho * (th.cos() * n[i] + th.sin() * w[i] / wn))
            .collect()
    };
    let (th, v) = golden(-0.5, 0.5, |th| eval(p, &point(th)));
    Some((point(th), v))
}

/// Brute-force minimizer of the prox objective, starting from the anchor.
pub fn brute_force_prox(p: &ProxProblem<'_>, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = p.anchor.len();
    let radius = 4.0 * (1.0 + norm2(p.anchor) + p.eta * norm2(p.g));
    let coupled = matches!(p.domain, Domain::L2Ball { .. }) || p.mirror.name() == "p_uniform";
    let mut x = p.anchor.to_vec();
    let mut fx = eval(p, &x);
    let mut trial = vec![0.0; d];
    let mut stagnant = 0;
    for _ in 0..MAX_SWEEPS {
        let before = fx;
        for u in directions(p.domain, d, coupled, &mut rng) {
            let (lo, hi) = interval(p.domain, &x, &u, radius);
            let along = |s: f64| {
                let mut y = x.clone();
                y.iter_mut().zip(&u).for_each(|(a, b)| *a += s * b);
                if matches!(p.domain, Domain::Simplex) {
                    y.iter_mut().for_each(|a| *a = a.max(0.0));
                }
                eval(p, &y)
            };
            let (s, v) = golden(lo, hi, along);
            if v < fx {
                trial.copy_from_slice(&x);
                trial.iter_mut().zip(&u).for_each(|(a, b)| *a += s * b);
                if matches!(p.domain, Domain::Simplex) {
                    trial.iter_mut().for_each(|a| *a = a.max(0.0));
                }
                x.copy_from_slice(&trial);
                fx = v;
            }
        }
        if let Domain::L2Ball { center, .. } = p.domain {
            for _ in 0..2 * d {
                if let Some((y, v)) = arc_search(p, center, &x, &mut rng) {
                    if v < fx {
                        x = y;
                        fx = v;
                    }
                }
            }
        }
        if before - fx <= 1e-15 * fx.abs().max(1.0) {
            stagnant += 1;
            // random directions can all miss in one sweep
            if !coupled || stagnant >= 40 {
                break;
            }
        } else {
            stagnant = 0;
        }
    }
    x
}

/// One random prox instance of a supported triple, dimension `1..=4`
/// (`2..=4` on the simplex).
#[derive(Debug, Clone)]
pub struct OracleInstance {
    pub mirror: MirrorMap,
    pub domain: Domain,
    pub regularizer: Regularizer,
    pub g: Vec<f64>,
    pub anchor: Vec<f64>,
    pub eta: f64,
}

impl OracleInstance {
    pub fn problem(&self) -> ProxProblem<'_> {
        ProxProblem {
            g: &self.g,
            anchor: &self.anchor,
            eta: self.eta,
            regularizer: &self.regularizer,
            domain: &self.domain,
            mirror: &self.mirror,
        }
    }
}

pub fn random_instance<R: Rng>(triple: &Triple, rng: &mut R) -> Result<OracleInstance> {
    let simplex = triple.domain == "simplex";
    let d = if simplex { rng.random_range(2..=4) } else { rng.random_range(1..=4) };
    let normal = |rng: &mut R, s: f64| -> Vec<f64> {
        (0..d).map(|_| s * { let z: f64 = StandardNormal.sample(rng); z }).collect()
    };
    let mirror = match triple.mirror {
        "euclidean" => MirrorMap::euclidean(d),
        "entropic_simplex" => MirrorMap::entropic_simplex(d),
        "p_uniform" => MirrorMap::p_uniform(d, rng.random_range(1.1..1.9))?,
        other => {
            return Err(CsmdError::Unknown {
                kind: "mirror map",
                name: other.into(),
            })
        }
    };
    let domain = match triple.domain {
        "all_space" => Domain::AllSpace,
        "box" => Domain::Box {
            lower: (0..d).map(|_| -rng.random_range(0.2..2.0)).collect(),
            upper: (0..d).map(|_| rng.random_range(0.2..2.0)).collect(),
        },
        "l2_ball" => Domain::L2Ball {
            center: normal(rng, 1.0),
            radius: rng.random_range(0.3..2.0),
        },
        "simplex" => Domain::Simplex,
        other => {
            return Err(CsmdError::Unknown {
                kind: "domain",
                name: other.into(),
            })
        }
    };
    let lambda = rng.random_range(0.05..2.0);
    let regularizer = match triple.regularizer {
        "zero" => Regularizer::Zero,
        "l1" => Regularizer::L1 { lambda },
        "quadratic" => Regularizer::Quadratic { lambda },
        other => {
            return Err(CsmdError::Unknown {
                kind: "regularizer",
                name: other.into(),
            })
        }
    };
    let around = normal(rng, 1.0);
    let anchor = domain.sample(rng, &around, 1.0);
    let g = normal(rng, 2.0);
    let eta = 10f64.powf(rng.random_range(-1.3..0.7));
    Ok(OracleInstance {
        mirror,
        domain,
        regularizer,
        g,
        anchor,
        eta,
    })
}

/// Result of comparing the solver against the brute-force minimizer.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct OracleComparison {
    pub instances: usize,
    /// Largest `|F(solver) - F(oracle)|`.
    pub max_objective_error: f64,
    /// Largest `F(solver) - F(oracle)` (positive means the oracle found a
    /// better point).
    pub max_excess: f64,
}

pub fn compare_with_oracle(triple: &Triple, instances: usize, seed: u64) -> Result<OracleComparison> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = OracleComparison {
        instances,
        max_objective_error: 0.0,
        max_excess: f64::NEG_INFINITY,
    };
    for k in 0..instances {
        let inst = random_instance(triple, &mut rng)?;
        let p = inst.problem();
        let fast = solve_prox(&p)?;
        let slow = brute_force_prox(&p, seed ^ (k as u64 + 1));
        let (a, b) = (p.objective(&fast)?, p.objective(&slow)?);
        out.max_objective_error = out.max_objective_error.max((a - b).abs());
        out.max_excess = out.max_excess.max(a - b);
    }
    Ok(out)
}

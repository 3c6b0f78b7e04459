//! Invariants checked over random inputs.

use csmd::engine::{run_csmd, z_diagnostics, z_weights, RunConfig};
use csmd::geometry::{supported_triples, MirrorMap};
use csmd::harness::oracle::random_instance;
use csmd::harness::stats::{fit_rate, median_of_means, quantile, trimmed_mean};
use csmd::linalg::norm2;
use csmd::noise::{Generator, NoiseModel, RngStream};
use csmd::problems::{registry, registry_ids};
use csmd::schedules::{analysis_sequences, Rule, Schedule, ScheduleParams};
use csmd::geometry::solve_prox;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn unit_vec(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-1.0..1.0f64, d)
}

fn simplex_point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.01..1.0f64, d).prop_map(|v| {
        let s: f64 = v.iter().sum();
        v.into_iter().map(|x| x / s).collect()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn prox_is_feasible_and_beats_nearby_points(seed in any::<u64>(), triple in 0..14usize) {
        let triples = supported_triples();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let inst = random_instance(&triples[triple], &mut rng).unwrap();
        let p = inst.problem();
        let x = solve_prox(&p).unwrap();
        prop_assert!(inst.domain.contains(&x, 1e-12));
        let fx = p.objective(&x).unwrap();
        prop_assert!(fx.is_finite());
        // any feasible perturbation, including the anchor, is no better
        prop_assert!(fx <= p.objective(&inst.anchor).unwrap() + 1e-12);
        for k in 0..20 {
            let around: Vec<f64> = x.iter().map(|v| v + 0.01 * ((k as f64) - 10.0)).collect();
            let y = inst.domain.sample(&mut rng, &around, 0.05);
            let fy = p.objective(&y).unwrap();
            prop_assert!(fx <= fy + 1e-9 * fy.abs().max(1.0), "{fx} > {fy}");
        }
    }

    #[test]
    fn euclidean_bregman_is_half_squared_distance(x in unit_vec(4), y in unit_vec(4)) {
        let m = MirrorMap::euclidean(4);
        let d: f64 = x.iter().zip(&y).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / 2.0;
        prop_assert!((m.bregman(&x, &y).unwrap() - d).abs() < 1e-14);
    }

    #[test]
    fn entropic_bregman_dominates_pinsker(x in simplex_point(5), y in simplex_point(5)) {
        let m = MirrorMap::entropic_simplex(5);
        let l1: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).abs()).sum();
        let d = m.bregman(&x, &y).unwrap();
        prop_assert!(d >= 0.5 * l1 * l1 - 1e-12);
        prop_assert!(m.bregman(&x, &x).unwrap().abs() < 1e-15);
    }

    #[test]
    fn p_uniform_bregman_is_uniformly_convex(
        x in unit_vec(3),
        y in unit_vec(3),
        p in 1.05..1.95f64,
    ) {
        let m = MirrorMap::p_uniform(3, p).unwrap();
        let q = p / (p - 1.0);
        let diff: Vec<f64> = x.iter().zip(&y).map(|(a, b)| a - b).collect();
        let lower = norm2(&diff).powf(q) / q;
        let d = m.bregman(&x, &y).unwrap();
        prop_assert!(d >= lower - 1e-12 * (1.0 + lower), "{d} < {lower}");
    }

    #[test]
    fn p_uniform_gradient_matches_finite_differences(x in unit_vec(3), p in 1.1..1.9f64) {
        prop_assume!(norm2(&x) > 0.05);
        let m = MirrorMap::p_uniform(3, p).unwrap();
        let g = m.grad_psi(&x).unwrap();
        for i in 0..3 {
            let h = 1e-6;
            let (mut a, mut b) = (x.clone(), x.clone());
            a[i] += h;
            b[i] -= h;
            let fd = (m.psi(&a).unwrap() - m.psi(&b).unwrap()) / (2.0 * h);
            prop_assert!((fd - g[i]).abs() < 1e-6 * (1.0 + g[i].abs()));
        }
    }

    #[test]
    fn p_uniform_step_matches_bisection_on_the_radius(
        a in unit_vec(3),
        g in unit_vec(3),
        eta in 0.05..3.0f64,
        p in 1.1..1.9f64,
    ) {
        let m = MirrorMap::p_uniform(3, p).unwrap();
        let theta: Vec<f64> = m.grad_psi(&a).unwrap().iter().zip(&g).map(|(t, gi)| t - eta * gi).collect();
        let tn = norm2(&theta);
        prop_assume!(tn > 1e-6);
        // the step solves grad psi(x) = theta, so x lies on the ray of theta
        let dir: Vec<f64> = theta.iter().map(|t| t / tn).collect();
        let at = |r: f64| dir.iter().map(|d| r * d).collect::<Vec<f64>>();
        let (mut lo, mut hi) = (0.0, 1.0);
        while norm2(&m.grad_psi(&at(hi)).unwrap()) < tn {
            hi *= 2.0;
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if norm2(&m.grad_psi(&at(mid)).unwrap()) < tn { lo = mid } else { hi = mid }
        }
        let expected = at(0.5 * (lo + hi));
        let reg = csmd::problems::Regularizer::Zero;
        let dom = csmd::geometry::Domain::AllSpace;
        let x = solve_prox(&csmd::geometry::ProxProblem {
            g: &g, anchor: &a, eta, regularizer: &reg, domain: &dom, mirror: &m,
        }).unwrap();
        for (u, v) in x.iter().zip(&expected) {
            prop_assert!((u - v).abs() < 1e-10 * (1.0 + v.abs()), "{x:?} vs {expected:?}");
        }
    }

    #[test]
    fn registry_gaps_are_nonnegative(idx in 0..16usize, seed in any::<u64>()) {
        let id = registry_ids()[idx];
        let p = registry(id).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let x = p.domain.sample(&mut rng, &p.x_star, 2.0);
            prop_assert!(p.objective_gap(&x) >= -1e-12, "{id}");
        }
    }

    #[test]
    fn sequences_telescope_for_random_constants(
        eta in 0.01..0.5f64,
        mu in 0.01..1.0f64,
        l in 0.0..1.0f64,
        horizon in 2..400usize,
        rule in prop::sample::select(vec![
            Rule::ConvexAnytime, Rule::ConvexFixed, Rule::LinearDecay, Rule::Constant,
            Rule::StrcFAnytime1, Rule::StrcFAnytime2, Rule::StrcHAnytime,
            Rule::StrcHKnownPiecewise,
        ]),
    ) {
        let params = ScheduleParams { eta: Some(eta), l, mu_f: mu, mu_h: mu, ..Default::default() };
        let Ok(s) = Schedule::new(rule, params, Some(horizon)) else {
            return Ok(());
        };
        let (mf, mh) = s.analysis_moduli();
        let Ok(seq) = analysis_sequences(&s, mf, mh, horizon) else {
            return Ok(());
        };
        prop_assert!(seq.telescoping_error() < 1e-10);
        prop_assert!(seq.v.windows(2).all(|w| w[0] <= w[1] * (1.0 + 1e-12)));
        prop_assert!((seq.v[horizon] - 1.0).abs() < 1e-12);
        let w = z_weights(&seq, horizon / 2 + 1).unwrap();
        prop_assert!(w.iter().all(|v| *v >= 0.0));
        prop_assert!((w.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn iterates_stay_feasible_and_z_is_convex(
        seed in any::<u64>(),
        id in prop::sample::select(vec!["ball_quad_d3", "box_l1_d4", "simplex_quad_d5", "quad_box_sc_d4"]),
    ) {
        let p = registry(id).unwrap();
        let noise = NoiseModel::new(Generator::Gaussian, 1.0, None).unwrap();
        let s = Schedule::new(
            Rule::ConvexAnytime,
            ScheduleParams { eta: Some(0.3), l: p.constants.l, ..Default::default() },
            None,
        ).unwrap();
        let rec = run_csmd(&RunConfig {
            problem: &p,
            noise: &noise,
            schedule: &s,
            x1: &p.x1,
            horizon: 60,
            checkpoints: &[60],
            record_z: true,
            rng: RngStream::new(seed, 0),
        }).unwrap();
        let history = rec.history.as_ref().unwrap();
        prop_assert!(history.iter().all(|x| p.domain.contains(x, 1e-12)));
        let seq = analysis_sequences(&s, 0.0, 0.0, 60).unwrap();
        for z in z_diagnostics(&rec, &seq, &p, &p.x_star).unwrap() {
            prop_assert!(z.convexity_slack >= -1e-10);
            prop_assert!((z.weight_sum - 1.0).abs() < 1e-12);
            prop_assert!(z.min_weight >= 0.0);
        }
    }

    #[test]
    fn robust_estimators_are_bracketed(v in prop::collection::vec(-100.0..100.0f64, 20..200)) {
        let (lo, hi) = v.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |a, x| (a.0.min(*x), a.1.max(*x)));
        for s in [median_of_means(&v, 10), trimmed_mean(&v, 0.01), quantile(&v, 0.9)] {
            prop_assert!(s >= lo && s <= hi);
        }
        prop_assert!(quantile(&v, 0.5) <= quantile(&v, 0.9));
        prop_assert!(quantile(&v, 0.9) <= quantile(&v, 0.99));
    }

    #[test]
    fn trimmed_mean_ignores_order(mut v in prop::collection::vec(-5.0..5.0f64, 10..100), seed in any::<u64>()) {
        let a = trimmed_mean(&v, 0.01);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rand::seq::SliceRandom::shuffle(v.as_mut_slice(), &mut rng);
        prop_assert!((trimmed_mean(&v, 0.01) - a).abs() < 1e-12);
    }

    #[test]
    fn power_laws_are_recovered(c in 0.01..100.0f64, slope in -2.0..-0.1f64) {
        let pts: Vec<(usize, f64)> = (4..12).map(|k| (1usize << k, c * ((1usize << k) as f64).powf(slope))).collect();
        let f = fit_rate(&pts).unwrap();
        prop_assert!((f.slope - slope).abs() < 1e-10);
        prop_assert!(f.r_squared > 1.0 - 1e-10);
    }
}

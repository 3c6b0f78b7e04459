use super::{Constants, Objective, ProblemInstance, Regularizer};
use crate::error::{CsmdError, Result};
use crate::geometry::{Domain, MirrorMap};

const IDS: &[&str] = &[
    "quad_iso_d10",
    "quad_l1_d10",
    "abs_d1",
    "huber_d4",
    "lse_d5",
    "quad_box_sc_d4",
    "ridge_d10",
    "quad_spectrum_d50",
    "quad_sc_d10",
    "simplex_linear_d5",
    "simplex_quad_d5",
    "ball_quad_d3",
    "box_l1_d4",
    "quad_abs_d4",
    "flat_power8_d8",
    "flat_power16_pu_d1",
];

pub fn registry_ids() -> &'static [&'static str] {
    IDS
}

/// A deterministic, irregular test vector.
fn pattern(d: usize, scale: f64) -> Vec<f64> {
    (0..d).map(|i| scale * (1.3 * i as f64 + 0.4).cos()).collect()
}

fn geomspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n)
        .map(|i| lo * (hi / lo).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Builds a registered instance by id.
pub fn registry(id: &str) -> Result<ProblemInstance> {
    match id {
        "quad_iso_d10" => ProblemInstance::quadratic(
            id,
            vec![1.0; 10],
            pattern(10, 1.0),
            0.0,
            Regularizer::Zero,
            Domain::AllSpace,
            vec![0.0; 10],
        ),
        "quad_l1_d10" => ProblemInstance::quadratic(
            id,
            geomspace(0.5, 2.0, 10),
            pattern(10, 2.0),
            0.0,
            Regularizer::L1 { lambda: 0.5 },
            Domain::AllSpace,
            vec![0.0; 10],
        ),
        "abs_d1" => ProblemInstance::new(
            id,
            Objective::AbsSum {
                weight: 1.0,
                center: vec![0.0],
            },
            Regularizer::Zero,
            Domain::AllSpace,
            MirrorMap::euclidean(1),
            Constants {
                l: 0.0,
                m: 2.0,
                ..Default::default()
            },
            vec![0.0],
            vec![1.0],
        ),
        "huber_d4" => {
            let width = 0.1;
            let center = pattern(4, 1.0);
            ProblemInstance::new(
                id,
                Objective::HuberizedAbs {
                    weight: 1.0,
                    width,
                    center: center.clone(),
                },
                Regularizer::Zero,
                Domain::AllSpace,
                MirrorMap::euclidean(4),
                Constants {
                    l: 1.0 / width,
                    ..Default::default()
                },
                center,
                vec![0.0; 4],
            )
        }
        "lse_d5" => {
            let center = pattern(5, 0.5);
            ProblemInstance::new(
                id,
                Objective::LogSumExp {
                    center: center.clone(),
                },
                Regularizer::Zero,
                Domain::AllSpace,
                MirrorMap::euclidean(5),
                Constants {
                    l: 1.0,
                    ..Default::default()
                },
                center,
                vec![0.0; 5],
            )
        }
        "quad_box_sc_d4" => {
            // Strongly convex but only Lipschitz on the box: the gradient
            // varies by at most the box diameter.
            let domain = Domain::symmetric_box(4, 1.0);
            let diam = domain.diameter(4).unwrap_or(0.0);
            ProblemInstance::quadratic(
                id,
                vec![1.0; 4],
                vec![0.3, -0.5, 0.2, 0.6],
                0.0,
                Regularizer::Zero,
                domain,
                vec![1.0, 1.0, -1.0, -1.0],
            )?
            .with_constants(Constants {
                l: 0.0,
                m: diam,
                mu_f: 1.0,
                mu_h: 0.0,
            })
        }
        "ridge_d10" => {
            let diag = (0..10).map(|i| if i % 2 == 0 { 0.0 } else { 1.0 }).collect();
            ProblemInstance::quadratic(
                id,
                diag,
                pattern(10, 1.0),
                0.0,
                Regularizer::Quadratic { lambda: 0.5 },
                Domain::AllSpace,
                vec![1.0; 10],
            )
        }
        "quad_spectrum_d50" => ProblemInstance::quadratic(
            id,
            (0..50).map(|k| 10f64.powf(-6.0 * k as f64 / 49.0)).collect(),
            vec![0.0; 50],
            0.0,
            Regularizer::Zero,
            Domain::AllSpace,
            vec![1.0; 50],
        ),
        "quad_sc_d10" => {
            let center = pattern(10, 1.0);
            let x1 = center.iter().map(|c| c + 1.0).collect();
            ProblemInstance::quadratic(
                id,
                geomspace(0.5, 1.0, 10),
                center,
                0.0,
                Regularizer::Zero,
                Domain::AllSpace,
                x1,
            )
        }
        "simplex_linear_d5" => {
            let cost = vec![0.9, 0.2, 0.5, 0.7, 0.3];
            let mut x_star = vec![0.0; 5];
            x_star[1] = 1.0;
            ProblemInstance::new(
                id,
                Objective::Linear { cost },
                Regularizer::Zero,
                Domain::Simplex,
                MirrorMap::entropic_simplex(5),
                Constants::default(),
                x_star,
                vec![0.2; 5],
            )
        }
        "simplex_quad_d5" => ProblemInstance::quadratic(
            id,
            vec![1.0; 5],
            pattern(5, 1.0),
            0.0,
            Regularizer::Zero,
            Domain::Simplex,
            vec![0.2; 5],
        ),
        "ball_quad_d3" => ProblemInstance::quadratic(
            id,
            vec![1.0; 3],
            vec![2.0, 1.0, -2.0],
            0.0,
            Regularizer::Zero,
            Domain::L2Ball {
                center: vec![0.0; 3],
                radius: 1.0,
            },
            vec![0.0; 3],
        ),
        "box_l1_d4" => ProblemInstance::quadratic(
            id,
            vec![1.0, 2.0, 0.5, 1.5],
            vec![2.0, -0.1, 0.3, -3.0],
            0.0,
            Regularizer::L1 { lambda: 0.4 },
            Domain::symmetric_box(4, 1.0),
            vec![0.0; 4],
        ),
        "quad_abs_d4" => ProblemInstance::quadratic(
            id,
            vec![1.0; 4],
            vec![2.0, -2.0, 0.5, 0.0],
            0.5,
            Regularizer::Zero,
            Domain::symmetric_box(4, 1.0),
            vec![-0.5, 0.5, -0.5, 0.5],
        ),
        "flat_power8_d8" => flat_power(id, 8.0, 8, 0.0, 1.0, MirrorMap::euclidean(8)),
        "flat_power16_pu_d1" => flat_power(id, 16.0, 1, 1.0, 2.0, MirrorMap::p_uniform(1, 1.5)?),
        _ => Err(CsmdError::Unknown {
            kind: "problem",
            name: id.to_string(),
        }),
    }
}

fn flat_power(id: &str, beta: f64, d: usize, c: f64, x1: f64, mirror: MirrorMap) -> Result<ProblemInstance> {
    ProblemInstance::new(
        id,
        Objective::FlatPower {
            beta,
            center: vec![c; d],
        },
        Regularizer::Zero,
        Domain::AllSpace,
        mirror,
        Constants {
            l: 0.0,
            m: 2.0 * beta * (d as f64).sqrt(),
            ..Default::default()
        },
        vec![c; d],
        vec![x1; d],
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_registered_instance_builds() {
        for id in registry_ids() {
            let p = registry(id).unwrap();
            assert_eq!(&p.id, id);
        }
        assert!(registry("nope").is_err());
    }

    #[test]
    fn closed_form_minimizers() {
        let p = registry("ball_quad_d3").unwrap();
        let want = [2.0 / 3.0, 1.0 / 3.0, -2.0 / 3.0];
        for (a, b) in p.x_star.iter().zip(want) {
            assert!((a - b).abs() < 1e-15);
        }
        let p = registry("box_l1_d4").unwrap();
        // clip(soft(c, lambda / a)) per coordinate
        assert_eq!(p.x_star, vec![1.0, 0.0, 0.0, -1.0]);
        let p = registry("ridge_d10").unwrap();
        assert_eq!(p.x_star[0], 0.0);
        assert!((p.x_star[1] - p.objective_vector_at(1) / 1.5).abs() < 1e-15);
        assert_eq!(p.constants.mu_h, 0.5);
        assert_eq!(p.constants.mu_f, 0.0);
    }

    #[test]
    fn lse_optimum_value() {
        let p = registry("lse_d5").unwrap();
        assert!((p.f_star - 2.0 * 5f64.ln()).abs() < 1e-14);
    }

    impl ProblemInstance {
        fn objective_vector_at(&self, i: usize) -> f64 {
            match &self.objective {
                Objective::Quadratic { center, .. } => center[i],
                _ => unreachable!(),
            }
        }
    }
}

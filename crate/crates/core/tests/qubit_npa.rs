mod common;

use std::f64::consts::{FRAC_PI_4, SQRT_2};

use nlwb_core::hardy::check;
use nlwb_core::linalg::min_eigenvalue;
use nlwb_core::npa::{hardy_upper_bound_with, MomentProgram};
use nlwb_core::qubit::stationarity;
use nlwb_core::{
    as_inequality, behavior_of_model, build_program, maximize_hardy, original_hardy,
    realigned_hardy, refine_from, solve, OptimizerConfig, QubitModel, SdpConfig, SdpStatus,
};

use common::table1_model;

#[test]
fn refinement_from_published_points() {
    let p2 = realigned_hardy(2).unwrap();
    let r = refine_from(&p2, &table1_model(2), &OptimizerConfig::for_settings(2)).unwrap();
    assert!(r.converged);
    assert!((r.hardy_value - 0.4140).abs() < 1e-4, "{}", r.hardy_value);
    assert!(stationarity(&p2, &r.model).unwrap() < 1e-4);

    let p4 = realigned_hardy(4).unwrap();
    let r = refine_from(&p4, &table1_model(4), &OptimizerConfig::for_settings(4)).unwrap();
    assert!(r.converged);
    assert!((r.hardy_value - 0.7734).abs() < 1e-3, "{}", r.hardy_value);
}

#[test]
fn refinement_never_loses_a_feasible_start() {
    let p = realigned_hardy(2).unwrap();
    let start = QubitModel::new(
        FRAC_PI_4,
        vec![0.0, FRAC_PI_4],
        vec![FRAC_PI_4 / 2.0, -FRAC_PI_4 / 2.0],
    )
    .unwrap();
    let before = check(&p, &behavior_of_model(&start), 1e-6).unwrap();
    let r = refine_from(&p, &start, &OptimizerConfig::for_settings(2)).unwrap();
    assert!(r.converged);
    assert!(r.max_residual() <= 1e-6);
    if before.conditions_met {
        assert!(r.hardy_value >= before.hardy_value);
    }
}

#[test]
fn qubit_moments_give_feasible_moment_matrices() {
    let models = [
        table1_model(2),
        QubitModel::new(0.3, vec![1.1, -0.4], vec![2.0, 0.7]).unwrap(),
        table1_model(4),
        QubitModel::new(-1.2, vec![0.1, 0.9, -2.2, 3.0], vec![-0.5, 1.7, 0.2, -2.9]).unwrap(),
    ];
    for m in &models {
        let levels: &[u8] = if m.scenario().n_settings() == 2 {
            &[1, 2, 3]
        } else {
            &[1, 2]
        };
        for &level in levels {
            let p = MomentProgram::new(
                m.scenario(),
                level,
                &as_inequality(m.scenario().n_settings()).unwrap(),
                &[],
            )
            .unwrap();
            let moments = p.qubit_moments(m).unwrap();
            let matrix = p.moment_matrix(&moments).unwrap();
            let gram = p.qubit_gram(m).unwrap();
            for (a, b) in matrix.iter().zip(&gram) {
                assert!((a - b).abs() <= 1e-10);
            }
            assert!(min_eigenvalue(&matrix, p.size()) >= -1e-10);
        }
    }
}

#[test]
fn identification_classes_are_exact() {
    let p = build_program(&realigned_hardy(2).unwrap(), 2).unwrap();
    let s = solve(&p, &SdpConfig::default()).unwrap();
    let n = p.size();
    for class in p.identification() {
        let (r0, c0) = class[0];
        for (r, c) in class {
            assert_eq!(
                s.moment_matrix[r * n + c].to_bits(),
                s.moment_matrix[r0 * n + c0].to_bits()
            );
        }
    }
}

fn bound(paradox: &nlwb_core::HardyParadox, level: u8) -> f64 {
    let s = hardy_upper_bound_with(paradox, level, &SdpConfig::default()).unwrap();
    assert_eq!(
        s.status,
        SdpStatus::Optimal,
        "{} level {level}",
        paradox.id()
    );
    s.objective_value
}

#[test]
fn relaxations_are_monotone_and_sandwich_the_qubit_optimum() {
    let cases = [
        (realigned_hardy(2).unwrap(), 3u8),
        (original_hardy(), 3),
        (realigned_hardy(4).unwrap(), 2),
    ];
    for (p, top) in &cases {
        let qubit =
            maximize_hardy(p, &OptimizerConfig::for_settings(p.scenario().n_settings())).unwrap();
        assert!(qubit.converged);
        let bounds: Vec<f64> = (1..=*top).map(|l| bound(p, l)).collect();
        for w in bounds.windows(2) {
            assert!(w[1] <= w[0] + 1e-6, "{}: {bounds:?}", p.id());
        }
        for b in &bounds {
            assert!(
                qubit.hardy_value <= b + 1e-5,
                "{}: {} vs {bounds:?}",
                p.id(),
                qubit.hardy_value
            );
        }
    }
    for l in 1..=3 {
        assert!(bound(&cases[0].0, l) <= SQRT_2 - 1.0 + 1e-6);
    }
    let b2 = bound(&cases[0].0, 2);
    assert!((0.4139..=0.41422).contains(&b2), "{b2}");
    assert!(bound(&cases[2].0, 2) >= 0.7804 - 5e-3);
    let orig = bound(&cases[1].0, 2);
    assert!(
        (orig - (5.0 * 5f64.sqrt() - 11.0) / 2.0).abs() < 1e-6,
        "{orig}"
    );
}

#[test]
fn unreachable_target_is_infeasible() {
    let p = realigned_hardy(2)
        .unwrap()
        .with_condition_target(0, 3.5)
        .unwrap();
    for level in 1..=2 {
        let s = hardy_upper_bound_with(&p, level, &SdpConfig::default()).unwrap();
        assert_eq!(s.status, SdpStatus::Infeasible, "level {level}");
    }
}

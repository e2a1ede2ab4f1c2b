//! End-to-end runs of the dynamics pipeline: JSON description in, decoded
//! trajectory out, with the diagnostics doing their job.

use nalgebra::{DMatrix, DVector};
use spinglass_dynamics::{
    parse_system_spec, simulate_pipeline, FixedPointCode, ObjectiveForm, PipelineOptions,
    PipelineSolver, SystemSpec,
};
use std::f64::consts::FRAC_PI_2;

fn quarter_turn_points(count: usize) -> Vec<[f64; 2]> {
    (0..count)
        .map(|k| match k % 4 {
            0 => [1.0, 0.0],
            1 => [0.0, 1.0],
            2 => [-1.0, 0.0],
            _ => [0.0, -1.0],
        })
        .collect()
}

fn assert_trajectory(got: &[Vec<f64>], want: &[[f64; 2]]) {
    assert_eq!(got.len(), want.len());
    for (g, w) in got.iter().zip(want) {
        assert_eq!(g.len(), 2);
        for (a, b) in g.iter().zip(w) {
            assert!((a - b).abs() <= 1e-12, "{got:?} vs {want:?}");
        }
    }
}

#[test]
fn six_point_rotation_is_exact_end_to_end() {
    let spec = SystemSpec::constant_real(
        DMatrix::from_row_slice(2, 2, &[0.0, -FRAC_PI_2, FRAC_PI_2, 0.0]),
        DVector::from_vec(vec![1.0, 0.0]),
        (0..6).map(|k| k as f64).collect(),
    )
    .unwrap();
    let code = FixedPointCode::new(0, 2).unwrap();
    let result = simulate_pipeline(
        &spec,
        code,
        PipelineSolver::Exact,
        &PipelineOptions::default(),
    )
    .unwrap();

    assert_eq!(result.num_bits, 24, "6 points x 2 dimensions x 2 bits");
    assert_trajectory(&result.raw_states, &quarter_turn_points(6));
    assert!(result.residual <= 1e-12, "residual {}", result.residual);
    println!(
        "six-point run: {} bits, objective {:.3e}, residual {:.3e}",
        result.num_bits, result.objective_value, result.residual
    );
}

#[test]
fn complex_description_runs_through_the_whole_chain() {
    // One complex dimension rotating by i·(π/2): the embedded real system is
    // the familiar quarter turn.
    let text = r#"{"L": 1, "field": "complex",
                   "K": [[[0.0, 1.5707963267948966]]],
                   "psi0": [[1, 0]], "N": 4, "R": 2, "D": 0}"#;
    let (spec, code) = parse_system_spec(text).unwrap();
    let result = simulate_pipeline(
        &spec,
        code,
        PipelineSolver::Exact,
        &PipelineOptions::default(),
    )
    .unwrap();
    assert_eq!(result.num_bits, 16);
    assert_trajectory(&result.raw_states, &quarter_turn_points(4));
    assert!(result.residual <= 1e-12);
}

#[test]
fn energy_form_matches_least_squares_on_the_rotation() {
    let text = r#"{"L": 2, "field": "real",
                   "K": [[0.0, -1.5707963267948966], [1.5707963267948966, 0.0]],
                   "psi0": [1, 0], "N": 4, "R": 2, "D": 0}"#;
    let (spec, code) = parse_system_spec(text).unwrap();
    let lsq = simulate_pipeline(
        &spec,
        code,
        PipelineSolver::Exact,
        &PipelineOptions::default(),
    )
    .unwrap();
    let energy = simulate_pipeline(
        &spec,
        code,
        PipelineSolver::Exact,
        &PipelineOptions {
            form: ObjectiveForm::Energy,
            ..PipelineOptions::default()
        },
    )
    .unwrap();
    assert_eq!(lsq.raw_states, energy.raw_states);
}

#[test]
fn truncation_sweep_reports_degradation_and_recovers_at_six_digits() {
    let spec = SystemSpec::constant_real(
        DMatrix::from_row_slice(2, 2, &[0.0, -FRAC_PI_2, FRAC_PI_2, 0.0]),
        DVector::from_vec(vec![1.0, 0.0]),
        (0..4).map(|k| k as f64).collect(),
    )
    .unwrap();
    let code = FixedPointCode::new(0, 2).unwrap();
    let exact = simulate_pipeline(
        &spec,
        code,
        PipelineSolver::Exact,
        &PipelineOptions::default(),
    )
    .unwrap();

    for digits in 1..=6 {
        let result = simulate_pipeline(
            &spec,
            code,
            PipelineSolver::Exact,
            &PipelineOptions {
                truncate_digits: Some(digits),
                ..PipelineOptions::default()
            },
        )
        .unwrap();
        // The residual under coarse truncation is informative, not promised.
        println!(
            "truncation to {digits} digits: objective {:.6e}, residual {:.6e}",
            result.objective_value, result.residual
        );
        if digits == 6 {
            assert_eq!(result.raw_states, exact.raw_states);
        }
    }
}

//! End-to-end dispatching runs on the bundled disturbed-timetable
//! scenarios: variable layout, exact optimum, schedule validation, and the
//! penalty-separation structure of the compiled QUBO.

use spinglass_rail::{
    assemble_qubo, condition_terms, decode_schedule, encode_schedule, enumerate_variables,
    exact_onehot_search, propagate_primary, validate_schedule, ConditionKind, DispatchProblem,
    RailError,
};

fn three_station_scenario() -> DispatchProblem {
    DispatchProblem::from_json(include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../data/railway/line216_d7.json"
    )))
    .unwrap()
}

fn three_station_tight() -> DispatchProblem {
    DispatchProblem::from_json(include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../data/railway/line216_sep_d3.json"
    )))
    .unwrap()
}

fn four_station_scenario() -> DispatchProblem {
    DispatchProblem::from_json(include_str!(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../data/railway/line191_d10.json"
    )))
    .unwrap()
}

const KINDS: [ConditionKind; 4] = [
    ConditionKind::Passing,
    ConditionKind::SingleBlock,
    ConditionKind::Deadlock,
    ConditionKind::RollingStock,
];

#[test]
fn three_station_scenario_has_48_variables_and_the_expected_primaries() {
    let problem = three_station_scenario();
    let map = enumerate_variables(&problem).unwrap();
    assert_eq!(map.num_variables(), 48);
    assert_eq!(map.groups().len(), 6);

    let primary = propagate_primary(&problem).unwrap();
    assert_eq!(primary[0], vec![5, 2, 0]); // intercity recovers its delay
    assert_eq!(primary[1], vec![0, 0, 0]); // undisturbed regional
    assert_eq!(primary[2], vec![15, 13, 10]); // opposing intercity
}

#[test]
fn the_exact_optimum_is_a_valid_schedule_even_against_station_capacity() {
    let problem = three_station_scenario();
    let map = enumerate_variables(&problem).unwrap();
    let spectrum = exact_onehot_search(&problem, 10).unwrap();
    let ground = spectrum.ground().unwrap();

    // Hand-derived optimum: the even intercity crosses the middle station
    // on its propagated delays, the opposing intercity waits two extra
    // minutes at its origin, and the regional gives way behind it.
    let table = decode_schedule(ground.state, &map).unwrap();
    assert_eq!(table.delays[0], vec![5, 2]);
    assert_eq!(table.delays[1], vec![3, 5]);
    assert_eq!(table.delays[2], vec![17, 15]);

    // Its weighted cost: 1.5·(15−13)/7 for the intercity + 1.0·(5−0)/7 for
    // the regional, on top of the constant one-hot floor.
    let expected = (1.5 * 2.0 + 1.0 * 5.0) / 7.0 - problem.p_sum * 6.0;
    assert!((ground.energy - expected).abs() < 1e-9);

    // The decoded schedule passes the full validator, including the
    // station-capacity rule the QUBO does not encode.
    let report = validate_schedule(&problem, &table).unwrap();
    assert!(report.is_feasible(), "optimum must be operable: {report:?}");

    // Decode/encode round-trips the winning state.
    assert_eq!(encode_schedule(&table, &map).unwrap(), ground.state);

    // The runner-up costs strictly more.
    assert!(spectrum.entries[1].energy > ground.energy - 1e-12);
}

#[test]
fn every_condition_family_is_active_in_the_three_station_scenario() {
    let problem = three_station_scenario();
    let map = enumerate_variables(&problem).unwrap();
    assert!(!condition_terms(&problem, &map, ConditionKind::Passing).is_empty());
    assert!(!condition_terms(&problem, &map, ConditionKind::SingleBlock).is_empty());
    assert!(!condition_terms(&problem, &map, ConditionKind::Deadlock).is_empty());
    // No turnovers in this scenario.
    assert!(condition_terms(&problem, &map, ConditionKind::RollingStock).is_empty());
}

#[test]
fn violating_any_prohibited_pair_costs_more_than_any_feasible_schedule() {
    // Tight variant: windows of four delays, weights summing to 3.9 < the
    // pair penalty 4, so the spectrum splits into a feasible band
    // [−24, −20.1] and an infeasible band starting at −20.
    let problem = three_station_tight();
    let map = enumerate_variables(&problem).unwrap();
    let prohibited: Vec<(usize, usize)> = {
        let mut all: Vec<_> = KINDS
            .iter()
            .flat_map(|&kind| condition_terms(&problem, &map, kind))
            .collect();
        all.sort();
        all.dedup();
        all
    };
    assert!(!prohibited.is_empty());

    let spectrum = exact_onehot_search(&problem, 5000).unwrap();
    assert_eq!(spectrum.entries.len(), 4096); // 4^6 one-hot assignments

    let mut feasible = 0usize;
    let mut infeasible = 0usize;
    for entry in &spectrum.entries {
        let word = entry.state.0;
        let violates = prohibited
            .iter()
            .any(|&(a, b)| word >> a & 1 == 1 && word >> b & 1 == 1);
        if violates {
            infeasible += 1;
            assert!(
                entry.energy >= -20.0 - 1e-9,
                "infeasible assignment below the penalty floor: {}",
                entry.energy
            );
        } else {
            feasible += 1;
            assert!(
                (-24.0 - 1e-9..=-20.1 + 1e-9).contains(&entry.energy),
                "feasible assignment outside its band: {}",
                entry.energy
            );
        }
    }
    assert!(feasible > 0 && infeasible > 0);

    // The tight optimum holds the opposing intercity two minutes: cost 1.0.
    let ground = spectrum.ground().unwrap();
    assert!((ground.energy - (1.0 - 24.0)).abs() < 1e-9);
    let table = decode_schedule(ground.state, &map).unwrap();
    assert!(validate_schedule(&problem, &table).unwrap().is_feasible());
}

#[test]
fn widening_the_delay_windows_never_hurts_the_optimum() {
    let mut energies = Vec::new();
    for d_max in 2..=5 {
        let mut problem = three_station_tight();
        for train in &mut problem.trains {
            train.d_max = d_max;
        }
        let spectrum = exact_onehot_search(&problem, 1).unwrap();
        energies.push(spectrum.ground().unwrap().energy);
    }
    for pair in energies.windows(2) {
        assert!(
            pair[1] <= pair[0] + 1e-12,
            "optimum worsened as the window grew: {energies:?}"
        );
    }
}

#[test]
fn four_station_scenario_has_198_variables_and_active_turnovers() {
    let problem = four_station_scenario();
    let map = enumerate_variables(&problem).unwrap();
    // (4 − 1) stations × 6 trains × (10 + 1) delays.
    assert_eq!(map.num_variables(), 198);
    assert_eq!(map.groups().len(), 18);

    // The delayed intercity's unavoidable delays shrink station by station.
    let primary = propagate_primary(&problem).unwrap();
    assert_eq!(primary[3], vec![13, 10, 6, 4]);

    // Its set turns over into the last even departure: slack 14 against a
    // delay window reaching 16 prohibits 1 + 2 + 3 pairs.
    let turnover_pairs = condition_terms(&problem, &map, ConditionKind::RollingStock);
    assert_eq!(turnover_pairs.len(), 6);

    // 198 binary variables exceed the packed state model, and compilation
    // says so instead of truncating.
    match assemble_qubo(&problem) {
        Err(RailError::Model(spinglass_core::ModelError::TooManyVariables(198))) => {}
        other => panic!("expected the variable cap to trip, got {other:?}"),
    }
}

#[test]
fn hand_broken_schedules_are_rejected_with_structured_reports() {
    let problem = three_station_scenario();
    let map = enumerate_variables(&problem).unwrap();
    let ground = exact_onehot_search(&problem, 1).unwrap();
    let mut table = decode_schedule(ground.ground().unwrap().state, &map).unwrap();

    // Release the regional one minute before the opposing intercity has
    // cleared the shared segment.
    table.delays[1][1] = 4;
    let report = validate_schedule(&problem, &table).unwrap();
    assert!(!report.is_feasible());
    assert!(!report.deadlock.is_empty());
    assert_eq!(report.deadlock[0].train_a, 1);
    assert_eq!(report.deadlock[0].train_b, 2);
}

//! The `railway` subcommands: compile a dispatching problem to QUBO form,
//! solve one end to end (search, decode, validate), or check a hand-written
//! delay table against the feasibility conditions.

use std::fmt::Write as _;

use serde::Serialize;
use serde_json::json;

use spinglass_core::io::write_qubo;
use spinglass_core::{qubo_to_ising, simulated_annealing, BetaLadder, EnergyModel, Spectrum};
use spinglass_rail::{
    assemble_qubo, decode_schedule, enumerate_variables, exact_onehot_search, validate_schedule,
    DelayTable, DispatchProblem, ValidationReport,
};

use crate::error::{read_input, CliError};
use crate::manifest::{self, ManifestBuilder};
use crate::{RailCompileArgs, RailSolveArgs, RailValidateArgs};

fn load_problem(
    path: &std::path::Path,
    builder: &mut ManifestBuilder,
    p_pair: Option<f64>,
    p_sum: Option<f64>,
    dmax: Option<u32>,
) -> Result<DispatchProblem, CliError> {
    let text = read_input(path)?;
    builder.record_input(path)?;
    let mut problem = DispatchProblem::from_json(&text)?;
    if let Some(p) = p_pair {
        problem.p_pair = p;
    }
    if let Some(p) = p_sum {
        problem.p_sum = p;
    }
    if let Some(d) = dmax {
        for train in &mut problem.trains {
            train.d_max = d;
        }
    }
    // Overrides can invalidate an otherwise good file; re-check.
    problem.validate()?;
    Ok(problem)
}

pub fn compile(args: &RailCompileArgs) -> Result<(), CliError> {
    let mut builder = ManifestBuilder::new("railway compile");
    let problem = load_problem(
        &args.problem,
        &mut builder,
        args.p_pair,
        args.p_sum,
        args.dmax,
    )?;
    let (qubo, map) = assemble_qubo(&problem)?;

    let map_path = {
        let mut name = args
            .output
            .file_name()
            .unwrap_or_default()
            .to_os_string();
        name.push(".map.json");
        args.output.with_file_name(name)
    };
    std::fs::write(&map_path, manifest::to_canonical_json(&map))
        .map_err(|e| CliError::input(format!("{}: {e}", map_path.display())))?;

    let params = json!({
        "p_pair": problem.p_pair,
        "p_sum": problem.p_sum,
        "num_variables": map.num_variables(),
        "num_groups": map.groups().len(),
        "map": map_path.display().to_string(),
    });
    manifest::write_result(&args.output, &write_qubo(&qubo), builder.finish(params))?;
    println!(
        "{} variables in {} groups -> {}",
        map.num_variables(),
        map.groups().len(),
        args.output.display()
    );
    Ok(())
}

#[derive(Serialize)]
struct RailSolveReport {
    solver: String,
    num_variables: usize,
    energy: f64,
    delays: Vec<Vec<i64>>,
    feasible: bool,
    report: ValidationReport,
}

pub fn solve(args: &RailSolveArgs) -> Result<(), CliError> {
    let mut builder = ManifestBuilder::new("railway solve");
    let problem = load_problem(
        &args.problem,
        &mut builder,
        args.p_pair,
        args.p_sum,
        args.dmax,
    )?;
    let map = enumerate_variables(&problem)?;
    if let Some(seed) = args.seed {
        builder.seed(seed);
    }

    // Default to the exact one-hot oracle unless a stochastic solver was
    // requested (clap rejects passing both).
    let (solver_name, spectrum, solver_params) = if args.solver.is_some() {
        let seed = args.seed.ok_or_else(|| {
            CliError::input("--solver sa is stochastic and needs an explicit --seed")
        })?;
        let (qubo, _) = assemble_qubo(&problem)?;
        let ising = qubo_to_ising(&qubo);
        let ladder = BetaLadder::geometric(args.beta_min, args.beta_max, args.replicas)?;
        let result = simulated_annealing(&ising, args.sweeps, &ladder, args.restarts, seed)?;
        let entry = spinglass_core::SpectrumEntry {
            energy: qubo.state_energy(result.best_state),
            state: result.best_state,
        };
        (
            "sa".to_string(),
            Spectrum {
                entries: vec![entry],
            },
            json!({
                "sweeps": args.sweeps,
                "restarts": args.restarts,
                "replicas": args.replicas,
                "beta_min": args.beta_min,
                "beta_max": args.beta_max,
            }),
        )
    } else {
        (
            "oracle:onehot".to_string(),
            exact_onehot_search(&problem, args.k)?,
            json!({ "k": args.k }),
        )
    };

    let best = spectrum
        .ground()
        .ok_or_else(|| CliError::solver("the search returned an empty spectrum"))?;
    let table = decode_schedule(best.state, &map)?;
    let report = validate_schedule(&problem, &table)?;
    let feasible = report.is_feasible();

    let result = RailSolveReport {
        solver: solver_name.clone(),
        num_variables: map.num_variables(),
        energy: best.energy,
        delays: table.delays.clone(),
        feasible,
        report,
    };
    let params = json!({
        "solver": solver_name,
        "p_pair": problem.p_pair,
        "p_sum": problem.p_sum,
        "num_variables": map.num_variables(),
        "backend": solver_params,
    });
    let rendered = render_solve_text(&result);
    super::emit(
        args.format,
        args.output.as_deref(),
        &result,
        rendered,
        builder.finish(params),
    )
}

#[derive(Serialize)]
struct RailValidateReport {
    feasible: bool,
    report: ValidationReport,
}

pub fn validate(args: &RailValidateArgs) -> Result<(), CliError> {
    let mut builder = ManifestBuilder::new("railway validate");
    let problem_text = read_input(&args.problem)?;
    builder.record_input(&args.problem)?;
    let problem = DispatchProblem::from_json(&problem_text)?;
    let table_text = read_input(&args.table)?;
    builder.record_input(&args.table)?;
    let table: DelayTable = serde_json::from_str(&table_text)
        .map_err(|e| CliError::input(format!("{}: {e}", args.table.display())))?;

    let report = validate_schedule(&problem, &table)?;
    let feasible = report.is_feasible();
    let result = RailValidateReport { feasible, report };
    let rendered = render_report_text(feasible, &result.report);
    let params = json!({ "table": args.table.display().to_string() });
    super::emit(
        args.format,
        args.output.as_deref(),
        &result,
        rendered,
        builder.finish(params),
    )?;

    if feasible {
        Ok(())
    } else {
        Err(CliError::violations(violation_summary(&result.report)))
    }
}

/// One line naming each violated condition, e.g.
/// `infeasible schedule: deadlock(1), single_block(2)`.
fn violation_summary(report: &ValidationReport) -> String {
    let mut parts = Vec::new();
    for (name, count) in [
        ("passing", report.passing.len()),
        ("single_block", report.single_block.len()),
        ("deadlock", report.deadlock.len()),
        ("rolling_stock", report.rolling_stock.len()),
        ("capacity", report.capacity.len()),
    ] {
        if count > 0 {
            parts.push(format!("{name}({count})"));
        }
    }
    format!("infeasible schedule: {}", parts.join(", "))
}

fn render_solve_text(result: &RailSolveReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "solver {}  variables {}  energy {}",
        result.solver, result.num_variables, result.energy
    );
    for (train, delays) in result.delays.iter().enumerate() {
        let _ = writeln!(out, "train {train}: {delays:?}");
    }
    out.push_str(&render_report_text(result.feasible, &result.report));
    out
}

fn render_report_text(feasible: bool, report: &ValidationReport) -> String {
    if feasible {
        "feasible: all conditions hold\n".to_string()
    } else {
        format!("{}\n", violation_summary(report))
    }
}

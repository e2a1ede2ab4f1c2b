//! The `dynamics` subcommand: run the trajectory-as-QUBO pipeline on a
//! system specification and report the decoded trajectory with its honesty
//! checks (raw objective value and clock-system residual).

use std::fmt::Write as _;

use serde_json::json;

use spinglass_dynamics::{
    parse_system_spec, simulate_pipeline, ObjectiveForm, PipelineOptions, PipelineResult,
    PipelineSolver,
};

use crate::error::{read_input, CliError};
use crate::manifest::ManifestBuilder;
use crate::{DynSolverKind, DynamicsArgs, ObjectiveKind};

pub fn run(args: &DynamicsArgs) -> Result<(), CliError> {
    let mut builder = ManifestBuilder::new("dynamics");
    let text = read_input(&args.spec)?;
    builder.record_input(&args.spec)?;
    let (spec, code) = parse_system_spec(&text)?;

    let (solver, solver_name) = match args.solver {
        DynSolverKind::Exact => (PipelineSolver::Exact, "exact"),
        DynSolverKind::Sa => {
            let seed = args.seed.ok_or_else(|| {
                CliError::input("--solver sa is stochastic and needs an explicit --seed")
            })?;
            builder.seed(seed);
            (
                PipelineSolver::Annealing {
                    sweeps: args.sweeps,
                    restarts: args.restarts,
                    seed,
                },
                "sa",
            )
        }
    };
    let (form, objective_name) = match args.objective {
        ObjectiveKind::LeastSquares => (ObjectiveForm::LeastSquares, "least-squares"),
        ObjectiveKind::Energy => (ObjectiveForm::Energy, "energy"),
    };
    let options = PipelineOptions {
        form,
        substeps: args.substeps,
        truncate_digits: args.truncate,
    };

    let result = simulate_pipeline(&spec, code, solver, &options)?;

    let mut params = json!({
        "solver": solver_name,
        "objective": objective_name,
        "substeps": args.substeps,
        "truncate": args.truncate,
        "num_bits": result.num_bits,
    });
    if let DynSolverKind::Sa = args.solver {
        params["sweeps"] = json!(args.sweeps);
        params["restarts"] = json!(args.restarts);
    }

    let rendered = render_text(&result);
    super::emit(
        args.format,
        args.output.as_deref(),
        &result,
        rendered,
        builder.finish(params),
    )
}

fn render_text(result: &PipelineResult) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "bits {}  qubo_energy {}  objective {}  residual {:e}",
        result.num_bits, result.qubo_energy, result.objective_value, result.residual
    );
    for (t, state) in result.times.iter().zip(&result.raw_states) {
        let _ = writeln!(out, "t = {t:<8} state = {state:?}");
    }
    out
}

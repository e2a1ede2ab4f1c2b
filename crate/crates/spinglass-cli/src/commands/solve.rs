//! The `solve` subcommand: every spectrum/ground-state backend behind one
//! flag, plus the minor-embedding route for hardware-graph experiments.
//!
//! Energy conventions. The chunked and gray scans run on QUBO form; an
//! Ising input is converted with its constant carried in the QUBO offset,
//! so reported energies are the Ising energies unchanged. The Monte Carlo
//! and tensor-network backends run on Ising form; their winners are
//! re-evaluated on the model the user actually supplied, so a QUBO input
//! gets QUBO energies back regardless of the backend.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use serde::Serialize;
use serde_json::{json, Value};

use spinglass_core::io::{parse_ising, parse_qubo};
use spinglass_core::{
    enumerate_spectrum_naive, ground_search_gray, ising_to_qubo, parallel_tempering,
    qubo_to_ising, simulated_annealing, spectrum_search, spectrum_order, BetaLadder, EnergyModel,
    IsingInstance, PackedState, QuboInstance, SearchConfig, Spectrum, SpectrumEntry,
};
use spinglass_tn::{
    branch_and_bound, mps_imaginary_time, ClusterLattice, MpsBranchConfig, TnConfig,
};
use spinglass_topo::{
    apply_embedding, chain_strength_from_scale, load_working_graph, resolve_chains, ChainStrategy,
    Embedding, WorkingGraph,
};

use crate::error::{read_input, CliError};
use crate::manifest::ManifestBuilder;
use crate::{ModelKind, SolveArgs, SolverKind, StrategyKind};

enum Instance {
    Ising(IsingInstance),
    Qubo(QuboInstance),
}

impl Instance {
    fn n(&self) -> usize {
        match self {
            Instance::Ising(i) => i.n,
            Instance::Qubo(q) => q.n,
        }
    }

    fn model_name(&self) -> &'static str {
        match self {
            Instance::Ising(_) => "ising",
            Instance::Qubo(_) => "qubo",
        }
    }

    fn energy(&self, state: PackedState) -> f64 {
        match self {
            Instance::Ising(i) => i.state_energy(state),
            Instance::Qubo(q) => q.state_energy(state),
        }
    }

    /// QUBO view; an Ising instance converts with the constant kept in the
    /// offset, so QUBO energies equal the original Ising energies.
    fn to_qubo(&self) -> QuboInstance {
        match self {
            Instance::Ising(i) => ising_to_qubo(i),
            Instance::Qubo(q) => q.clone(),
        }
    }

    /// Ising view; conversion drops the constant, so energies of states
    /// found on this view must be re-evaluated with [`Instance::energy`].
    fn to_ising(&self) -> IsingInstance {
        match self {
            Instance::Ising(i) => i.clone(),
            Instance::Qubo(q) => qubo_to_ising(q),
        }
    }
}

#[derive(Serialize)]
struct SamplerReport {
    best_state: PackedState,
    best_energy: f64,
    success_count: u64,
    samples_taken: u64,
}

#[derive(Serialize)]
struct DiagnosticsReport {
    p_d: f64,
    p_1: f64,
    certified: bool,
}

#[derive(Serialize)]
struct EmbeddingSummary {
    chain_strength: f64,
    strategy: &'static str,
    physical_variables: usize,
    physical_samples: usize,
    resolved_samples: usize,
}

#[derive(Serialize)]
struct SolveReport {
    model: &'static str,
    solver: &'static str,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    spectrum: Option<Spectrum>,
    #[serde(skip_serializing_if = "Option::is_none")]
    sampler: Option<SamplerReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    diagnostics: Option<DiagnosticsReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    embedding: Option<EmbeddingSummary>,
}

enum Outcome {
    Spectrum(Spectrum),
    Sampler(SamplerReport),
}

struct Solved {
    outcome: Outcome,
    diagnostics: Option<DiagnosticsReport>,
    /// The resolved knobs this backend actually used, for the manifest.
    params: Value,
}

pub fn run(args: &SolveArgs) -> Result<(), CliError> {
    let mut builder = ManifestBuilder::new("solve");
    let text = read_input(&args.instance)?;
    builder.record_input(&args.instance)?;
    let instance = match args.model {
        ModelKind::Ising => Instance::Ising(parse_ising(&text)?),
        ModelKind::Qubo => Instance::Qubo(parse_qubo(&text)?),
    };
    if let Some(seed) = args.seed {
        builder.seed(seed);
    }

    // Read auxiliary inputs up front so their digests land in the manifest.
    let cluster_map = match (&args.cluster_map, args.solver) {
        (Some(path), SolverKind::Tn) => {
            let map_text = read_input(path)?;
            builder.record_input(path)?;
            Some(map_text)
        }
        (Some(_), _) => {
            return Err(CliError::input(
                "--cluster-map only applies to --solver tn",
            ))
        }
        (None, SolverKind::Tn) => {
            return Err(CliError::input(
                "--solver tn needs a --cluster-map assigning spins to lattice sites",
            ))
        }
        (None, _) => None,
    };

    let route = match (&args.graph, &args.embedding) {
        (Some(graph_path), Some(embedding_path)) => {
            let graph = load_working_graph(graph_path)?;
            builder.record_input(graph_path)?;
            let embedding_text = read_input(embedding_path)?;
            builder.record_input(embedding_path)?;
            let embedding = Embedding::from_json(&embedding_text)
                .map_err(|e| CliError::input(format!("{}: {e}", embedding_path.display())))?;
            Some((graph, embedding))
        }
        _ => None, // clap enforces both-or-neither
    };

    let (report, params) = match &route {
        None => {
            let solved = solve_instance(&instance, args, cluster_map.as_deref())?;
            let params = merge_params(&instance, args, solved.params.clone(), None);
            let report = make_report(&instance, args, solved, None);
            (report, params)
        }
        Some((graph, embedding)) => {
            solve_embedded(&instance, graph, embedding, args, cluster_map.as_deref())?
        }
    };

    let rendered = render_text(&report);
    super::emit(
        args.format,
        args.output.as_deref(),
        &report,
        rendered,
        builder.finish(params),
    )
}

/// Resolve the chunk/cache knobs against the instance size: explicit flags
/// pass through untouched (the solver's own validation rejects bad ones);
/// defaults clamp to the instance so small problems work without flags.
fn scan_config(args: &SolveArgs, n: usize) -> SearchConfig {
    let n = n as u32;
    let chunk_exp = args.chunk_exp.unwrap_or_else(|| n.min(16));
    let cache_depth = args
        .cache_depth
        .unwrap_or_else(|| n.saturating_sub(chunk_exp).min(8));
    SearchConfig {
        chunk_exp,
        k: args.k,
        workers: args.workers,
        cache_depth,
        fixed_vars: args.fix,
        ..SearchConfig::default()
    }
}

fn require_seed(args: &SolveArgs) -> Result<u64, CliError> {
    args.seed.ok_or_else(|| {
        CliError::input(format!(
            "--solver {} is stochastic and needs an explicit --seed",
            args.solver.name()
        ))
    })
}

fn ladder(args: &SolveArgs) -> Result<BetaLadder, CliError> {
    Ok(BetaLadder::geometric(
        args.beta_min,
        args.beta_max,
        args.replicas,
    )?)
}

fn solve_instance(
    instance: &Instance,
    args: &SolveArgs,
    cluster_map: Option<&str>,
) -> Result<Solved, CliError> {
    match args.solver {
        SolverKind::Naive => {
            let spectrum = match instance {
                Instance::Ising(i) => enumerate_spectrum_naive(i, args.k)?,
                Instance::Qubo(q) => enumerate_spectrum_naive(q, args.k)?,
            };
            Ok(Solved {
                outcome: Outcome::Spectrum(spectrum),
                diagnostics: None,
                params: json!({ "k": args.k }),
            })
        }
        SolverKind::Chunked => {
            let qubo = instance.to_qubo();
            let cfg = scan_config(args, qubo.n);
            let spectrum = spectrum_search(&qubo, &cfg)?;
            Ok(Solved {
                outcome: Outcome::Spectrum(spectrum),
                diagnostics: None,
                params: json!({
                    "k": cfg.k,
                    "chunk_exp": cfg.chunk_exp,
                    "cache_depth": cfg.cache_depth,
                    "workers": cfg.workers,
                    "steps_per_batch": cfg.steps_per_batch,
                }),
            })
        }
        SolverKind::Gray => {
            if args.k != 1 {
                return Err(CliError::input(
                    "--solver gray reports only the ground state; --k must be 1",
                ));
            }
            let qubo = instance.to_qubo();
            let cfg = scan_config(args, qubo.n);
            let entry = ground_search_gray(&qubo, &cfg)?;
            Ok(Solved {
                outcome: Outcome::Spectrum(Spectrum {
                    entries: vec![entry],
                }),
                diagnostics: None,
                params: json!({
                    "chunk_exp": cfg.chunk_exp,
                    "cache_depth": cfg.cache_depth,
                    "workers": cfg.workers,
                    "fix": cfg.fixed_vars,
                }),
            })
        }
        SolverKind::Sa => {
            let seed = require_seed(args)?;
            let ising = instance.to_ising();
            let result =
                simulated_annealing(&ising, args.sweeps, &ladder(args)?, args.restarts, seed)?;
            Ok(Solved {
                outcome: Outcome::Sampler(SamplerReport {
                    best_state: result.best_state,
                    best_energy: instance.energy(result.best_state),
                    success_count: result.success_count,
                    samples_taken: result.samples_taken,
                }),
                diagnostics: None,
                params: json!({
                    "sweeps": args.sweeps,
                    "restarts": args.restarts,
                    "replicas": args.replicas,
                    "beta_min": args.beta_min,
                    "beta_max": args.beta_max,
                }),
            })
        }
        SolverKind::Pt => {
            let seed = require_seed(args)?;
            let ising = instance.to_ising();
            let result = parallel_tempering(&ising, &ladder(args)?, args.sweeps, seed)?;
            Ok(Solved {
                outcome: Outcome::Sampler(SamplerReport {
                    best_state: result.best_state,
                    best_energy: instance.energy(result.best_state),
                    success_count: result.success_count,
                    samples_taken: result.samples_taken,
                }),
                diagnostics: None,
                params: json!({
                    "sweeps": args.sweeps,
                    "replicas": args.replicas,
                    "beta_min": args.beta_min,
                    "beta_max": args.beta_max,
                }),
            })
        }
        SolverKind::Tn => {
            let map_text =
                cluster_map.expect("run() reads the cluster map before dispatching tn");
            let lattice = ClusterLattice::from_map_text(instance.to_ising(), map_text)?;
            let cfg = TnConfig {
                beta: args.beta.unwrap_or(3.0),
                chi: args.chi.unwrap_or(16),
                cutoff: args.cutoff.unwrap_or(1e-3),
                k: args.k,
                ..TnConfig::default()
            };
            let outcome = branch_and_bound(&lattice, &cfg)?;
            let diagnostics = outcome.diagnostics;
            Ok(Solved {
                outcome: Outcome::Spectrum(reevaluate(instance, outcome.spectrum)),
                diagnostics: Some(DiagnosticsReport {
                    p_d: diagnostics.p_d,
                    p_1: diagnostics.p_1,
                    certified: diagnostics.certified(),
                }),
                params: json!({
                    "beta": cfg.beta,
                    "chi": cfg.chi,
                    "cutoff": cfg.cutoff,
                    "max_branches": cfg.max_branches,
                    "k": cfg.k,
                }),
            })
        }
        SolverKind::Mps => {
            let cfg = MpsBranchConfig {
                cutoff: args.cutoff.unwrap_or(1e-6),
                k: args.k,
                ..MpsBranchConfig::default()
            };
            let bond = args.bond.unwrap_or(16);
            let beta = args.beta.unwrap_or(1.0);
            let dbeta = args.dbeta.unwrap_or(0.25);
            let spectrum = mps_imaginary_time(&instance.to_ising(), bond, beta, dbeta, &cfg)?;
            Ok(Solved {
                outcome: Outcome::Spectrum(reevaluate(instance, spectrum)),
                diagnostics: None,
                params: json!({
                    "bond": bond,
                    "beta": beta,
                    "dbeta": dbeta,
                    "cutoff": cfg.cutoff,
                    "max_branches": cfg.max_branches,
                    "k": cfg.k,
                }),
            })
        }
    }
}

/// Re-state a spectrum in the input model's energies. The Ising view the
/// tensor-network backends run on drops a QUBO's constant term, so each
/// state is priced afresh on the model the user supplied.
fn reevaluate(instance: &Instance, spectrum: Spectrum) -> Spectrum {
    let mut entries: Vec<SpectrumEntry> = spectrum
        .entries
        .into_iter()
        .map(|e| SpectrumEntry {
            energy: instance.energy(e.state),
            state: e.state,
        })
        .collect();
    entries.sort_by(spectrum_order);
    Spectrum { entries }
}

fn solve_embedded(
    instance: &Instance,
    graph: &WorkingGraph,
    embedding: &Embedding,
    args: &SolveArgs,
    cluster_map: Option<&str>,
) -> Result<(SolveReport, Value), CliError> {
    let logical = match instance {
        Instance::Ising(i) => i,
        Instance::Qubo(_) => {
            return Err(CliError::input(
                "the embedding route embeds Ising instances; pass --model ising",
            ))
        }
    };
    let alpha = chain_strength_from_scale(logical, args.css);
    let physical = apply_embedding(logical, embedding, graph, alpha)?;
    let physical_variables = physical.n;
    let solved = solve_instance(&Instance::Ising(physical), args, cluster_map)?;

    let samples: Vec<PackedState> = match &solved.outcome {
        Outcome::Spectrum(s) => s.entries.iter().map(|e| e.state).collect(),
        Outcome::Sampler(r) => vec![r.best_state],
    };
    let strategy = match args.strategy {
        StrategyKind::Discard => ChainStrategy::Discard,
        StrategyKind::Majority => ChainStrategy::Majority,
    };
    let resolve_seed = args.seed.unwrap_or(0);
    let resolved = resolve_chains(&samples, embedding, strategy, resolve_seed)?;
    if resolved.is_empty() {
        return Err(CliError::solver(
            "every sample had a broken chain and was discarded; \
             raise --css or use --strategy majority",
        ));
    }

    // Unique logical states, priced on the logical model.
    let unique: BTreeSet<u64> = resolved.iter().map(|s| s.0).collect();
    let mut entries: Vec<SpectrumEntry> = unique
        .into_iter()
        .map(|word| {
            let state = PackedState(word);
            SpectrumEntry {
                energy: logical.state_energy(state),
                state,
            }
        })
        .collect();
    entries.sort_by(spectrum_order);

    let summary = EmbeddingSummary {
        chain_strength: alpha,
        strategy: match args.strategy {
            StrategyKind::Discard => "discard",
            StrategyKind::Majority => "majority",
        },
        physical_variables,
        physical_samples: samples.len(),
        resolved_samples: resolved.len(),
    };
    let embed_params = json!({
        "css": args.css,
        "chain_strength": alpha,
        "strategy": summary.strategy,
        "resolve_seed": resolve_seed,
    });
    let params = merge_params(instance, args, solved.params.clone(), Some(embed_params));

    let outcome = match solved.outcome {
        Outcome::Sampler(r) => Outcome::Sampler(SamplerReport {
            best_state: entries[0].state,
            best_energy: entries[0].energy,
            ..r
        }),
        Outcome::Spectrum(_) => Outcome::Spectrum(Spectrum { entries }),
    };
    let report = make_report(
        instance,
        args,
        Solved {
            outcome,
            diagnostics: solved.diagnostics,
            params: Value::Null,
        },
        Some(summary),
    );
    Ok((report, params))
}

fn make_report(
    instance: &Instance,
    args: &SolveArgs,
    solved: Solved,
    embedding: Option<EmbeddingSummary>,
) -> SolveReport {
    let (spectrum, sampler) = match solved.outcome {
        Outcome::Spectrum(s) => (Some(s), None),
        Outcome::Sampler(r) => (None, Some(r)),
    };
    SolveReport {
        model: instance.model_name(),
        solver: args.solver.name(),
        n: instance.n(),
        spectrum,
        sampler,
        diagnostics: solved.diagnostics,
        embedding,
    }
}

fn merge_params(
    instance: &Instance,
    args: &SolveArgs,
    backend: Value,
    embedding: Option<Value>,
) -> Value {
    let mut map = serde_json::Map::new();
    map.insert("model".into(), json!(instance.model_name()));
    map.insert("solver".into(), json!(args.solver.name()));
    map.insert("n".into(), json!(instance.n()));
    if let Value::Object(inner) = backend {
        map.extend(inner);
    }
    if let Some(e) = embedding {
        map.insert("embedding".into(), e);
    }
    Value::Object(map)
}

fn render_text(report: &SolveReport) -> String {
    let mut out = String::new();
    let _ = writeln!(
        out,
        "model {}  solver {}  n {}",
        report.model, report.solver, report.n
    );
    if let Some(e) = &report.embedding {
        let _ = writeln!(
            out,
            "embedding: {} physical variables, chain strength {}, {} of {} samples resolved ({})",
            e.physical_variables, e.chain_strength, e.resolved_samples, e.physical_samples,
            e.strategy
        );
    }
    if let Some(d) = &report.diagnostics {
        let _ = writeln!(
            out,
            "diagnostics: p_d {:e}  p_1 {:e}  certified {}",
            d.p_d, d.p_1, d.certified
        );
    }
    if let Some(s) = &report.spectrum {
        for entry in &s.entries {
            let _ = writeln!(out, "{:<24} {:#018x}", entry.energy, entry.state.0);
        }
    }
    if let Some(r) = &report.sampler {
        let _ = writeln!(out, "best_energy   {}", r.best_energy);
        let _ = writeln!(out, "best_state    {:#018x}", r.best_state.0);
        let _ = writeln!(out, "success_count {}", r.success_count);
        let _ = writeln!(out, "samples_taken {}", r.samples_taken);
    }
    out
}

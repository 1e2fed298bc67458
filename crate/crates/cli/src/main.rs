//! `selcond`: dependence analysis and selective-conditioning inference for
//! binary belief networks in `.bnet` format.
//!
//! Exit statuses: 0 success, 2 usage error, 3 unreadable or malformed
//! input, 4 runtime failure, 5 sampling budget exceeded (a partial report
//! is still printed).

mod render;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use thiserror::Error;

use selcond_core::{
    conditioned_dependence, dependence_value, exact_phi_min, greedy_select_protecting,
    parse_bindings, parse_network, predicted_cost, Assignment, BeliefNetwork, CostEstimate,
    GeneratorChoice, GreedyTrace, InferenceConfig, PriorChoice, RunError, RunFailure, RunInputs,
    RunReport, SampleBudget, Strategy, DEFAULT_MAX_S, DEFAULT_SEED, VERSION,
};

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
    #[error("{0}")]
    Budget(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Input(_) => 3,
            CliError::Runtime(_) => 4,
            CliError::Budget(_) => 5,
        }
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "selcond",
    version,
    about = "Selective-conditioning inference for binary belief networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report per-node bounds and λ, the dependence value, and the greedy
    /// conditioning set with its cost predictions.
    Analyze(AnalyzeArgs),
    /// Estimate Pr[query | evidence] to relative error ε with confidence 1 − δ.
    Infer(InferArgs),
    /// Re-run a JSON report and check that it reproduces its estimate.
    Replay(ReplayArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum ReportFormat {
    Text,
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StrategyArg {
    Auto,
    Direct,
    Selective,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum PriorArg {
    Unbiased,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GeneratorArg {
    Rejection,
    Gibbs,
}

#[derive(Args, Debug)]
struct NetworkArgs {
    /// Network file in `.bnet` format.
    #[arg(long)]
    network: PathBuf,
    /// Evidence as comma-separated `Name=0|1` bindings.
    #[arg(long, default_value = "")]
    evidence: String,
    /// Power applied to λ in the greedy eligibility and ranking tests.
    #[arg(long, default_value_t = 1.0, value_parser = parse_exponent)]
    greedy_exponent: f64,
    /// Largest conditioning set the greedy search may build.
    #[arg(long, default_value_t = DEFAULT_MAX_S)]
    max_s: usize,
    #[arg(long, value_enum, default_value_t = ReportFormat::Text)]
    report: ReportFormat,
}

#[derive(Args, Debug)]
struct AnalyzeArgs {
    #[command(flatten)]
    common: NetworkArgs,
    /// Query bindings; query nodes are kept out of the conditioning set.
    #[arg(long)]
    query: Option<String>,
    /// Also compute the exact smallest instantiation probability of the
    /// selected set.
    #[arg(long)]
    exact: bool,
}

#[derive(Args, Debug)]
struct InferArgs {
    #[command(flatten)]
    common: NetworkArgs,
    /// Query as comma-separated `Name=0|1` bindings.
    #[arg(long)]
    query: String,
    #[arg(long, default_value_t = 0.1, value_parser = parse_epsilon)]
    epsilon: f64,
    #[arg(long, default_value_t = 0.05, value_parser = parse_delta)]
    delta: f64,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = StrategyArg::Auto)]
    strategy: StrategyArg,
    #[arg(long, value_enum, default_value_t = PriorArg::Unbiased)]
    prior: PriorArg,
    #[arg(long, value_enum, default_value_t = GeneratorArg::Rejection)]
    generator: GeneratorArg,
    /// Gibbs sweeps per trial; defaults to ⌈min(D⁴, 10⁶)⌉ for each condition.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    burn_in: Option<u64>,
    /// Cap on trials for each estimation stage.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    sample_cap: Option<u64>,
    /// Cap on rejection attempts per conditioned trial.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    rejection_cap: Option<u64>,
    /// Compare the estimate with the exact value (networks up to 25 nodes).
    #[arg(long)]
    exact: bool,
    /// Estimate subproblems one after another instead of on a thread pool.
    #[arg(long)]
    serial: bool,
}

#[derive(Args, Debug)]
struct ReplayArgs {
    /// JSON report written by `infer --report json`.
    file: PathBuf,
}

fn parse_epsilon(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("epsilon must be a positive number".into())
    }
}

fn parse_delta(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v > 0.0 && v < 1.0 {
        Ok(v)
    } else {
        Err("delta must lie strictly between 0 and 1".into())
    }
}

fn parse_exponent(s: &str) -> Result<f64, String> {
    let v: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if v >= 1.0 && v.is_finite() {
        Ok(v)
    } else {
        Err("greedy exponent must be at least 1".into())
    }
}

fn read_network(path: &Path) -> Result<(String, BeliefNetwork), CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", path.display())))?;
    let net =
        parse_network(&text).map_err(|e| CliError::Input(format!("{}: {e}", path.display())))?;
    Ok((text, net))
}

fn bindings(net: &BeliefNetwork, text: &str, what: &str) -> Result<Assignment, CliError> {
    parse_bindings(net, text).map_err(|e| CliError::Usage(format!("--{what}: {e}")))
}

fn emit<T: Serialize>(format: ReportFormat, value: &T, text: impl FnOnce() -> String) {
    let body = match format {
        ReportFormat::Json => {
            serde_json::to_string_pretty(value).expect("reports serialize") + "\n"
        }
        ReportFormat::Text => text(),
    };
    // A closed pipe (e.g. `| head`) is not an error worth reporting.
    let _ = std::io::stdout().lock().write_all(body.as_bytes());
}

#[derive(Debug, Serialize)]
struct NodeRow {
    name: String,
    lo: f64,
    hi: f64,
    lambda: f64,
}

#[derive(Debug, Serialize)]
struct AnalyzeReport {
    version: &'static str,
    network_name: String,
    evidence: String,
    nodes: Vec<NodeRow>,
    dependence_value: f64,
    selected_s: Vec<String>,
    trace: GreedyTrace,
    dependence_after: f64,
    cost_before: CostEstimate,
    cost_after: CostEstimate,
    phi_min_exact: Option<f64>,
}

fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let (_, net) = read_network(&args.common.network)?;
    let evidence = bindings(&net, &args.common.evidence, "evidence")?;
    let protected = match &args.query {
        Some(q) => {
            let query = bindings(&net, q, "query")?;
            if !query.is_disjoint(&evidence) {
                return Err(CliError::Usage(
                    "query and evidence bind the same node".into(),
                ));
            }
            query.bound_nodes()
        }
        None => Vec::new(),
    };
    let report = dependence_value(&net, &evidence);
    let (selected, trace) = greedy_select_protecting(
        &net,
        &evidence,
        &protected,
        args.common.greedy_exponent,
        args.common.max_s,
    );
    let phi_min_exact = if args.exact && !selected.is_empty() {
        Some(exact_phi_min(&net, &selected).map_err(|e| CliError::Runtime(e.to_string()))?)
    } else {
        None
    };
    let out = AnalyzeReport {
        version: VERSION,
        network_name: net.name().to_string(),
        evidence: net.format_assignment(&evidence),
        nodes: report
            .per_node
            .iter()
            .map(|d| NodeRow {
                name: net.node_name(d.node).to_string(),
                lo: d.bounds.lo,
                hi: d.bounds.hi,
                lambda: d.lambda,
            })
            .collect(),
        dependence_value: report.dependence_value,
        selected_s: net.names_of(&selected),
        dependence_after: conditioned_dependence(&net, &evidence, &selected).dependence_value,
        cost_before: predicted_cost(&net, &evidence, &[]),
        cost_after: predicted_cost(&net, &evidence, &selected),
        trace,
        phi_min_exact,
    };
    emit(args.common.report, &out, || {
        render::analyze(&net, &out, args.common.greedy_exponent, args.common.max_s)
    });
    Ok(())
}

fn infer(args: InferArgs) -> Result<(), CliError> {
    let (text, net) = read_network(&args.common.network)?;
    let query = bindings(&net, &args.query, "query")?;
    let evidence = bindings(&net, &args.common.evidence, "evidence")?;
    if query.is_empty() {
        return Err(CliError::Usage(
            "--query must bind at least one node".into(),
        ));
    }
    if !query.is_disjoint(&evidence) {
        return Err(CliError::Usage(
            "query and evidence bind the same node".into(),
        ));
    }
    if args.burn_in.is_some() && args.generator != GeneratorArg::Gibbs {
        return Err(CliError::Usage(
            "--burn-in applies only to --generator gibbs".into(),
        ));
    }
    let mut budget = SampleBudget::default();
    if let Some(cap) = args.sample_cap {
        budget.fraction_trials = cap;
        budget.distribution_trials = Some(cap);
    }
    if let Some(cap) = args.rejection_cap {
        budget.rejection_attempts = cap;
    }
    let config = InferenceConfig {
        strategy: match args.strategy {
            StrategyArg::Auto => Strategy::Auto,
            StrategyArg::Direct => Strategy::Direct,
            StrategyArg::Selective => Strategy::Selective,
        },
        greedy_exponent: args.common.greedy_exponent,
        max_s: args.common.max_s,
        prior: match args.prior {
            PriorArg::Unbiased => PriorChoice::Unbiased,
            PriorArg::Uniform => PriorChoice::Uniform,
        },
        generator: match args.generator {
            GeneratorArg::Rejection => GeneratorChoice::Rejection,
            GeneratorArg::Gibbs => GeneratorChoice::Gibbs {
                burn_in_sweeps: args.burn_in,
            },
        },
        budget,
        conditioning_override: None,
        parallel: !args.serial,
    };
    let inputs = RunInputs {
        network: text,
        query: net.format_assignment(&query),
        evidence: net.format_assignment(&evidence),
        epsilon: args.epsilon,
        delta: args.delta,
        seed: args.seed,
        config,
    };
    match RunReport::run(inputs, args.exact) {
        Ok(report) => {
            emit(args.common.report, &report, || render::run(&report));
            Ok(())
        }
        Err(RunFailure::Setup(e)) => Err(setup_error(e)),
        Err(RunFailure::Inference(e, failure)) => {
            emit(args.common.report, &*failure, || render::failure(&failure));
            if e.is_budget() {
                Err(CliError::Budget(e.to_string()))
            } else {
                Err(CliError::Runtime(e.to_string()))
            }
        }
    }
}

fn setup_error(e: RunError) -> CliError {
    match e {
        RunError::Format(e) => CliError::Input(e.to_string()),
        RunError::Binding(e) => CliError::Usage(e.to_string()),
        RunError::Inference(e) if e.is_budget() => CliError::Budget(e.to_string()),
        e => CliError::Runtime(e.to_string()),
    }
}

fn replay(args: ReplayArgs) -> Result<(), CliError> {
    let text = fs::read_to_string(&args.file)
        .map_err(|e| CliError::Input(format!("cannot read {}: {e}", args.file.display())))?;
    let report: RunReport = serde_json::from_str(&text)
        .map_err(|e| CliError::Input(format!("{}: not a run report: {e}", args.file.display())))?;
    let result = report.replay().map_err(setup_error)?;
    let same = result.estimate.to_bits() == report.result.estimate.to_bits();
    println!("recorded estimate {}", report.result.estimate);
    println!("replayed estimate {}", result.estimate);
    println!("reproduced        {same}");
    if same {
        Ok(())
    } else {
        Err(CliError::Runtime(
            "replay did not reproduce the recorded estimate".into(),
        ))
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Analyze(a) => analyze(a),
        Command::Infer(a) => infer(a),
        Command::Replay(a) => replay(a),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("selcond: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

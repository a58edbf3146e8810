use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use saddlekit::consensus::AlgorithmFamily;
use saddlekit::experiment::{
    emit_results, generate_scenario, run_experiment_on, ExperimentConfig, GraphModel, GridSpec, Scenario, ScenarioSpec,
};
use saddlekit::problem::{solve_kkt_reference, spectral_quantities, ProblemDocument, RegularityConstants};
use saddlekit::solvers::{
    auto_step_sizes, run_solver, step_size_bounds, theoretical_rate, BoundsRegime, Method, RunMetadata, SolverConfig,
};
use saddlekit::{Error, Result};

const NETWORK_FILE: &str = "network.txt";

#[derive(Parser, Debug)]
#[command(
    name = "saddlekit",
    version,
    about = "Primal-dual solvers and decentralized consensus experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a multi-agent scenario, grid-search every algorithm and write traces.
    Run(RunArgs),
    /// Print step-size bounds and the contraction factor for a problem file.
    Certify(CertifyArgs),
    /// Run one primal-dual recursion on a problem file.
    Solve(SolveArgs),
}

#[derive(clap::Args, Debug)]
struct RunArgs {
    /// well, ill or nonconvex
    #[arg(long)]
    scenario: Scenario,
    #[arg(long = "K", default_value_t = 20)]
    k: usize,
    #[arg(long = "M", default_value_t = 20)]
    m: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    /// Comma-separated families, e.g. PD_DIST,AL_PD_DIST,EXTRA
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<AlgorithmFamily>>,
    /// Step grid as PPD:DECADES
    #[arg(long)]
    grid: Option<GridSpec>,
    /// Edge-list file to use instead of a random graph
    #[arg(long)]
    graph: Option<PathBuf>,
    /// Erdős–Rényi edge probability for the random graph
    #[arg(long, default_value_t = 0.3)]
    edge_probability: f64,
    /// Comma-separated penalties for the AL_PD_DIST sweep
    #[arg(long, value_delimiter = ',')]
    rho: Option<Vec<f64>>,
    #[arg(long)]
    max_iterations: Option<usize>,
    #[arg(long)]
    target_error: Option<f64>,
}

#[derive(clap::Args, Debug)]
struct CertifyArgs {
    #[arg(long)]
    problem: PathBuf,
    #[arg(long = "mu-w")]
    mu_w: f64,
    #[arg(long = "mu-lambda")]
    mu_lambda: f64,
    #[arg(long, default_value_t = 0.0)]
    rho: f64,
}

#[derive(clap::Args, Debug)]
struct SolveArgs {
    #[arg(long)]
    problem: PathBuf,
    /// inc, noninc or fb
    #[arg(long)]
    method: Method,
    /// Defaults to 0.5/δ_ρ
    #[arg(long = "mu-w")]
    mu_w: Option<f64>,
    /// Defaults to ν_ρ/σ_max²
    #[arg(long = "mu-lambda")]
    mu_lambda: Option<f64>,
    /// ρ for inc, η for noninc; ignored by fb
    #[arg(long, default_value_t = 0.0)]
    penalty: f64,
    #[arg(long, default_value_t = 1000)]
    max_iterations: usize,
    /// Stop tolerance on the relative error; 0 runs to the limit
    #[arg(long, default_value_t = 1e-10)]
    tol: f64,
    /// Trace CSV; the JSON sidecar is written next to it
    #[arg(long)]
    out: PathBuf,
}

fn run(args: RunArgs) -> Result<String> {
    let mut spec = ScenarioSpec::new(args.scenario, args.k, args.m, args.seed);
    spec.graph_model = match args.graph {
        Some(path) => GraphModel::FromFile { path },
        None => GraphModel::ErdosRenyi {
            p: args.edge_probability,
        },
    };
    let mut config = ExperimentConfig::new(spec);
    if let Some(algorithms) = args.algorithms {
        config = config.with_algorithms(algorithms);
    }
    if let Some(grid) = args.grid {
        config.grid = grid;
    }
    if let Some(rho) = args.rho {
        config.rho_sweep = rho;
    }
    if let Some(n) = args.max_iterations {
        config.max_iterations = n;
    }
    if let Some(t) = args.target_error {
        config.target_error = t;
    }
    config.validate()?;

    let generated = generate_scenario(&config.scenario)?;
    let result = run_experiment_on(&generated, &config)?;
    let manifest = emit_results(&result, &args.out)?;
    generated.problem.network().write(args.out.join(NETWORK_FILE))?;

    let mut out = String::new();
    let _ = writeln!(
        out,
        "{} K={} M={} seed={} cost_seed={}",
        config.scenario.scenario,
        config.scenario.node_count,
        config.scenario.block_dim,
        config.scenario.seed,
        result.summary.cost_seed
    );
    for g in &result.summary.groups {
        let iters = g
            .iterations_to_target
            .map_or_else(|| "-".to_string(), |n| n.to_string());
        let best = g.best_algorithm.map_or_else(|| "-".to_string(), |a| a.to_string());
        let _ = writeln!(out, "{:24} {:12} {:>8}  {}", g.group, g.status.as_str(), iters, best);
    }
    let _ = writeln!(
        out,
        "wrote {} files to {}",
        manifest.all().len() + 1,
        args.out.display()
    );
    Ok(out)
}

fn certify(args: CertifyArgs) -> Result<String> {
    let problem = ProblemDocument::read(&args.problem)?.into_problem()?;
    let constants = RegularityConstants::for_quadratic(&problem, args.rho)?;
    let spectral = spectral_quantities(problem.constraint_matrix())?;
    let mut out = String::new();
    let _ = writeln!(out, "delta_rho: {:e}", constants.delta_rho);
    let _ = writeln!(out, "nu_rho: {:e}", constants.nu_rho);
    let _ = writeln!(out, "sigma_max_sq: {:e}", spectral.sigma_max_sq());
    let _ = writeln!(out, "sigma_min_nonzero_sq: {:e}", spectral.sigma_min_nonzero_sq());
    match step_size_bounds(&constants, &spectral, BoundsRegime::Incremental) {
        Ok(bounds) => {
            let _ = writeln!(out, "mu_w_bound: {:e}", bounds.mu_w_bound);
            let _ = writeln!(out, "mu_lambda_bound: {:e}", bounds.mu_lambda_bound);
        }
        Err(e) => {
            let _ = writeln!(out, "bounds: unavailable ({e})");
        }
    }
    match theoretical_rate(&constants, &spectral, args.mu_w, args.mu_lambda) {
        Ok(rate) => {
            let _ = writeln!(out, "gamma: {:.12}", rate.gamma);
            let _ = writeln!(out, "c_w: {:e}", rate.c_w);
            let _ = writeln!(out, "c_lambda: {:e}", rate.c_lambda);
            let _ = writeln!(out, "admissible: true");
        }
        Err(e) => {
            let _ = writeln!(out, "admissible: false ({e})");
        }
    }
    Ok(out)
}

fn sidecar_path(trace: &Path) -> PathBuf {
    trace.with_extension("json")
}

fn solve(args: SolveArgs) -> Result<String> {
    let problem = ProblemDocument::read(&args.problem)?.into_problem()?;
    let spectral = spectral_quantities(problem.constraint_matrix())?;
    // The incremental recursion with the same primal trajectory.
    let equivalent_rho = |mu_lambda: f64| match args.method {
        Method::Incremental => Some(args.penalty),
        Method::NonIncremental => Some(args.penalty - mu_lambda).filter(|r| *r >= 0.0),
        Method::ForwardBackward => Some(mu_lambda),
    };
    let (mu_w, mu_lambda) = match (args.mu_w, args.mu_lambda) {
        (Some(w), Some(l)) => (w, l),
        (w, l) => {
            let rho = if args.method == Method::Incremental {
                args.penalty
            } else {
                0.0
            };
            let constants = RegularityConstants::for_quadratic(&problem, rho)?;
            let (aw, al) = auto_step_sizes(&constants, &spectral);
            (w.unwrap_or(aw), l.unwrap_or(al))
        }
    };
    let config = SolverConfig::new(mu_w, mu_lambda)
        .with_penalty(args.penalty)
        .with_max_iterations(args.max_iterations)
        .with_stop_tolerance((args.tol > 0.0).then_some(args.tol));
    config.validate()?;

    let (bounds, rate) = match equivalent_rho(mu_lambda) {
        Some(rho) => match RegularityConstants::for_quadratic(&problem, rho) {
            Ok(c) => (
                step_size_bounds(&c, &spectral, BoundsRegime::Incremental).ok(),
                theoretical_rate(&c, &spectral, mu_w, mu_lambda).ok(),
            ),
            Err(_) => (None, None),
        },
        None if args.method == Method::NonIncremental && args.penalty == 0.0 => {
            let c = RegularityConstants::for_quadratic(&problem, 0.0)?;
            (
                step_size_bounds(&c, &spectral, BoundsRegime::NonincrementalEta0).ok(),
                None,
            )
        }
        None => (None, None),
    };

    let reference = solve_kkt_reference(&problem).ok();
    let trace = run_solver(&problem, &config, args.method, reference.as_ref())?;
    if let Some(parent) = args.out.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent)?;
    }
    std::fs::write(&args.out, trace.to_csv_string())?;
    let meta = RunMetadata::new(&trace, &config, bounds, rate);
    let sidecar = sidecar_path(&args.out);
    std::fs::write(&sidecar, serde_json::to_string_pretty(&meta)? + "\n")?;

    let mut out = String::new();
    let _ = writeln!(out, "method: {}", args.method);
    let _ = writeln!(out, "status: {:?}", trace.status);
    let _ = writeln!(out, "iterations: {}", trace.iterations());
    if let Some(rel) = trace.last().rel_error {
        let _ = writeln!(out, "final_rel_error: {rel:e}");
    }
    let _ = writeln!(out, "wrote {} and {}", args.out.display(), sidecar.display());
    Ok(out)
}

fn exit_code(e: &Error) -> u8 {
    if e.is_io() {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let outcome = match cli.command {
        Command::Run(args) => run(args),
        Command::Certify(args) => certify(args),
        Command::Solve(args) => solve(args),
    };
    match outcome {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

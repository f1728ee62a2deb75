use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use qsvrg_bench::trace::{format_traces, read_traces};
use qsvrg_bench::{
    cmd_report, cmd_solve, cmd_verify, parse_suites, BenchError, DatasetSpec, ExperimentConfig,
    ProblemSpec,
};
use qsvrg_core::solvers::Method;

#[derive(Parser)]
#[command(name = "qsvrg", version, about = "Run, verify and compare stochastic quadratic solvers")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run methods on a problem and write one JSON trace line per (method, seed).
    Solve(SolveArgs),
    /// Check the convergence theory numerically; exit 1 if a bound is violated.
    Verify(VerifyArgs),
    /// Tabulate traces of one problem at shared pass counts.
    Report(ReportArgs),
}

#[derive(Args)]
struct SolveArgs {
    /// CSV file (last column is the label) or `synthetic:n,d,kappa[,seed]`.
    #[arg(long, conflicts_with = "synthetic")]
    dataset: Option<String>,
    /// Synthetic data as `n,d,kappa[,seed]`.
    #[arg(long)]
    synthetic: Option<String>,
    /// least_squares, ridge, lda, or e.g. `ridge(lambda_scale=0.1)`, `lda(class=2)`.
    #[arg(long, default_value = "ridge")]
    problem: String,
    /// λ in units of L̄/n (ridge) or tr(Σ̂)/n (lda).
    #[arg(long)]
    lambda_scale: Option<f64>,
    /// Target class for lda.
    #[arg(long)]
    class: Option<usize>,
    /// Method name, repeatable; `all` selects every method.
    #[arg(long = "method", required = true)]
    methods: Vec<String>,
    /// Budget in effective passes.
    #[arg(long, default_value_t = 50.0)]
    passes: f64,
    /// Seed, repeatable.
    #[arg(long = "seed", default_values_t = [0u64])]
    seeds: Vec<u64>,
    /// Base of the per-run RNG stream ids.
    #[arg(long, default_value_t = 0)]
    seed_base: u64,
    /// Output file; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run one method/seed at a time.
    #[arg(long)]
    sequential: bool,
}

#[derive(Args)]
struct VerifyArgs {
    /// unbiasedness, theorem, bias, variance, sampler, a comma list, or all.
    #[arg(long, default_value = "all")]
    suite: String,
    /// Multiplies every bound; values below 1 tighten the checks.
    #[arg(long, default_value_t = 1.0)]
    bound_factor: f64,
}

#[derive(Args)]
struct ReportArgs {
    /// Trace files written by `solve`.
    #[arg(required = true)]
    traces: Vec<PathBuf>,
    /// Write the machine-readable table here.
    #[arg(long)]
    json: Option<PathBuf>,
    /// Write the tab-separated table here instead of standard output.
    #[arg(long)]
    tsv: Option<PathBuf>,
}

fn experiment(args: &SolveArgs) -> Result<ExperimentConfig, BenchError> {
    let dataset = match (&args.dataset, &args.synthetic) {
        (Some(d), None) => d.parse()?,
        (None, Some(s)) => DatasetSpec::synthetic(s)?,
        _ => {
            return Err(BenchError::Config(
                "exactly one of --dataset or --synthetic is required".into(),
            ))
        }
    };
    let mut problem: ProblemSpec = args.problem.parse()?;
    match (&mut problem, args.lambda_scale, args.class) {
        (_, None, None) => {}
        (ProblemSpec::Ridge { lambda_scale }, Some(s), None) => *lambda_scale = s,
        (ProblemSpec::Lda { lambda_scale, class }, s, c) => {
            if let Some(s) = s {
                *lambda_scale = s;
            }
            if let Some(c) = c {
                *class = c;
            }
        }
        _ => {
            return Err(BenchError::Config(format!(
                "--lambda-scale/--class do not apply to problem '{}'",
                args.problem
            )))
        }
    }
    let mut methods = Vec::new();
    for m in &args.methods {
        if m == "all" {
            methods.extend(Method::ALL);
        } else {
            methods.push(m.parse().map_err(|e: qsvrg_core::Error| BenchError::Config(e.to_string()))?);
        }
    }
    Ok(ExperimentConfig {
        dataset,
        problem,
        methods,
        passes: args.passes,
        seeds: args.seeds.clone(),
        seed_base: args.seed_base,
        parallel: !args.sequential,
    })
}

fn solve(args: &SolveArgs) -> Result<(), BenchError> {
    let config = experiment(args)?;
    let traces = cmd_solve(&config)?;
    let text = format_traces(&traces);
    match &args.out {
        Some(path) => std::fs::write(path, text)
            .map_err(|e| BenchError::Io(format!("{}: {e}", path.display()))),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn verify(args: &VerifyArgs) -> Result<bool, BenchError> {
    let suites = parse_suites(&args.suite)?;
    if !(args.bound_factor > 0.0 && args.bound_factor.is_finite()) {
        return Err(BenchError::Config(format!(
            "--bound-factor must be positive, got {}",
            args.bound_factor
        )));
    }
    let mut all = true;
    for report in cmd_verify(&suites, args.bound_factor)? {
        println!("{report}");
        all &= report.passed();
    }
    Ok(all)
}

fn report(args: &ReportArgs) -> Result<(), BenchError> {
    let mut traces = Vec::new();
    for p in &args.traces {
        traces.extend(read_traces(p)?);
    }
    let table = cmd_report(&traces)?;
    let tsv = table.to_tsv();
    match &args.tsv {
        Some(p) => std::fs::write(p, tsv).map_err(|e| BenchError::Io(format!("{}: {e}", p.display())))?,
        None => print!("{tsv}"),
    }
    if let Some(p) = &args.json {
        let text = serde_json::to_string_pretty(&table.to_json()).expect("report is valid JSON");
        std::fs::write(p, text + "\n").map_err(|e| BenchError::Io(format!("{}: {e}", p.display())))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Solve(a) => solve(a).map(|_| true),
        Command::Verify(a) => verify(a),
        Command::Report(a) => report(a).map(|_| true),
    };
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

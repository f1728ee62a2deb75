//! Experiment harness: solve sweeps, theory checks and trace comparison.

pub mod config;
pub mod report;
pub mod trace;

use std::time::Instant;

use rayon::prelude::*;
use thiserror::Error;

use qsvrg_core::solvers::{Checkpoints, Method, SolverConfig};
use qsvrg_core::verify::{run_suite, Suite, VerifyReport};

pub use config::{build_problem, DatasetSpec, Problem, ProblemSpec};
pub use report::{build_report, Report};
pub use trace::TraceRecord;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("{context}: {source}")]
    Core {
        context: String,
        #[source]
        source: qsvrg_core::Error,
    },
    #[error("trace error: {0}")]
    Trace(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl BenchError {
    /// 2 for configuration problems, 1 for everything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            BenchError::Core { source, .. } => match source {
                qsvrg_core::Error::InvalidArgument(_)
                | qsvrg_core::Error::UnsupportedProblem { .. }
                | qsvrg_core::Error::Parse { .. }
                | qsvrg_core::Error::Io(_) => 2,
                _ => 1,
            },
            BenchError::Trace(_) | BenchError::Io(_) => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub dataset: DatasetSpec,
    pub problem: ProblemSpec,
    pub methods: Vec<Method>,
    pub passes: f64,
    pub seeds: Vec<u64>,
    /// Run `j` (methods outer, seeds inner) uses RNG stream `seed_base + j`.
    pub seed_base: u64,
    pub parallel: bool,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), BenchError> {
        if self.methods.is_empty() {
            return Err(BenchError::Config("at least one method is required".into()));
        }
        if self.seeds.is_empty() {
            return Err(BenchError::Config("at least one seed is required".into()));
        }
        if !(self.passes > 0.0 && self.passes.is_finite()) {
            return Err(BenchError::Config(format!(
                "passes budget must be positive, got {}",
                self.passes
            )));
        }
        Ok(())
    }
}

fn run_one(
    problem: &Problem,
    mut solver: SolverConfig,
    alpha: Option<f64>,
    schedule: Option<(u64, u64)>,
) -> Result<TraceRecord, BenchError> {
    let wrap = |e: qsvrg_core::Error| BenchError::Core {
        context: format!("{} (seed {})", solver.method, solver.seed),
        source: e,
    };
    solver.alpha = alpha;
    solver.schedule = schedule;
    let (alpha, schedule) = solver.resolve(&problem.oracle).map_err(wrap)?;
    let start = Instant::now();
    let trace = solver.run(&problem.oracle, &problem.reference).map_err(wrap)?;
    eprintln!(
        "{} seed {}: {:.3e} after {} passes ({:.1} ms)",
        solver.method,
        solver.seed,
        trace.final_suboptimality(),
        trace.points.last().map_or(0.0, |p| p.passes),
        start.elapsed().as_secs_f64() * 1e3
    );
    let x = problem.oracle.design();
    Ok(TraceRecord {
        dataset: problem.dataset.to_string(),
        n: x.n(),
        d: x.d(),
        problem: problem.spec.to_string(),
        lambda: problem.oracle.lambda(),
        method: solver.method.to_string(),
        seed: solver.seed,
        alpha,
        l: schedule.map(|s| s.0),
        m: schedule.map(|s| s.1),
        g_star: problem.reference.g_star,
        residual: problem.reference.residual_norm,
        points: trace
            .points
            .iter()
            .map(|p| (p.passes, p.suboptimality))
            .collect(),
        budget: solver.target_passes,
        stream: solver.stream_id,
    })
}

/// One trace per (method, seed), in method-major order, against a single
/// shared reference solution.
pub fn cmd_solve(config: &ExperimentConfig) -> Result<Vec<TraceRecord>, BenchError> {
    config.validate()?;
    let problem = build_problem(&config.dataset, &config.problem)?;
    solve_with(&problem, config)
}

pub fn solve_with(problem: &Problem, config: &ExperimentConfig) -> Result<Vec<TraceRecord>, BenchError> {
    config.validate()?;
    let jobs: Vec<SolverConfig> = config
        .methods
        .iter()
        .flat_map(|m| config.seeds.iter().map(move |s| (*m, *s)))
        .enumerate()
        .map(|(j, (method, seed))| {
            let mut s = SolverConfig::new(method, config.passes, seed);
            s.stream_id = config.seed_base.wrapping_add(j as u64);
            s
        })
        .collect();
    if config.parallel {
        jobs.into_par_iter()
            .map(|s| run_one(problem, s, None, None))
            .collect()
    } else {
        jobs.into_iter()
            .map(|s| run_one(problem, s, None, None))
            .collect()
    }
}

/// Re-runs a trace from its embedded metadata.
pub fn replay(record: &TraceRecord) -> Result<TraceRecord, BenchError> {
    let dataset: DatasetSpec = record.dataset.parse()?;
    let problem_spec: ProblemSpec = record.problem.parse()?;
    let method: Method = record.method.parse().map_err(|e| BenchError::Core {
        context: "trace method".into(),
        source: e,
    })?;
    let problem = build_problem(&dataset, &problem_spec)?;
    let mut solver = SolverConfig::new(method, record.budget, record.seed);
    solver.stream_id = record.stream;
    solver.checkpoints = Checkpoints::geometric(record.budget);
    let schedule = record.l.zip(record.m);
    run_one(&problem, solver, Some(record.alpha), schedule)
}

/// Runs the requested suites in order.
pub fn cmd_verify(suites: &[Suite], bound_factor: f64) -> Result<Vec<VerifyReport>, BenchError> {
    suites
        .iter()
        .map(|s| {
            run_suite(*s, bound_factor).map_err(|e| BenchError::Core {
                context: format!("suite {s}"),
                source: e,
            })
        })
        .collect()
}

/// Parses a suite name or `all`.
pub fn parse_suites(name: &str) -> Result<Vec<Suite>, BenchError> {
    if name == "all" {
        return Ok(Suite::ALL.to_vec());
    }
    name.split(',')
        .map(|s| {
            s.trim()
                .parse::<Suite>()
                .map_err(|e| BenchError::Config(e.to_string()))
        })
        .collect()
}

pub fn cmd_report(traces: &[TraceRecord]) -> Result<Report, BenchError> {
    build_report(traces)
}

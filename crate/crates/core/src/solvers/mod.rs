//! Q-SVRG, the baseline stochastic methods, and effective-pass accounting.
//!
//! All methods start at `θ = 0`. Cost is measured in stochastic gradients:
//! one per inner/streaming step, `n` per full gradient. Suboptimality
//! `g(θ) − g(θ*)` is evaluated only at checkpoints and never counted.

mod baselines;
mod qsvrg;

use std::fmt;
use std::str::FromStr;

pub use baselines::{
    default_step_size, lsvrg_uniform, sag_nonuniform, sgd_nonuniform_averaged,
    sgd_uniform_averaged, svrg_nonuniform, SagState,
};
pub use qsvrg::{
    auto_schedule_for_passes, qsvrg, qsvrg_auto_schedule, qsvrg_epoch, schedule_ratio,
    theoretical_schedule, QsvrgParams, TheoreticalSchedule,
};

use crate::error::{Error, Result};
use crate::oracles::StochasticOracle;
use crate::quadratic::ReferenceSolution;
use crate::sampling::RngStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Qsvrg,
    SgdUniform,
    SgdNonuniform,
    SagNonuniform,
    SvrgNonuniform,
    LsvrgUniform,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::SgdUniform,
        Method::SgdNonuniform,
        Method::SagNonuniform,
        Method::SvrgNonuniform,
        Method::LsvrgUniform,
        Method::Qsvrg,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Qsvrg => "qsvrg",
            Method::SgdUniform => "sgd_uniform",
            Method::SgdNonuniform => "sgd_nonuniform",
            Method::SagNonuniform => "sag_nonuniform",
            Method::SvrgNonuniform => "svrg_nonuniform",
            Method::LsvrgUniform => "lsvrg_uniform",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown method '{s}' (expected one of: {})",
                    Method::ALL.map(Method::as_str).join(", ")
                ))
            })
    }
}

/// `gradient_count / n`.
pub fn effective_passes(gradient_count: u64, n: usize) -> f64 {
    gradient_count as f64 / n as f64
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TracePoint {
    pub passes: f64,
    pub suboptimality: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub points: Vec<TracePoint>,
    pub final_theta: Vec<f64>,
    pub gradient_count: u64,
}

impl RunTrace {
    pub fn final_suboptimality(&self) -> f64 {
        self.points.last().map_or(f64::NAN, |p| p.suboptimality)
    }

    /// Last recorded point with `passes <= limit`.
    pub fn at_or_before(&self, limit: f64) -> Option<TracePoint> {
        self.points.iter().rev().find(|p| p.passes <= limit).copied()
    }
}

/// Where suboptimality is recorded.
#[derive(Debug, Clone, PartialEq)]
pub enum Checkpoints {
    /// Every evaluation boundary.
    Every,
    /// The first boundary at or after each target pass count.
    Targets(Vec<f64>),
}

impl Checkpoints {
    /// Targets `1, √2, 2, 2√2, …` below `budget`, then `budget`.
    pub fn geometric(budget: f64) -> Self {
        let mut targets = Vec::new();
        let mut t = 1.0_f64;
        while t < budget {
            targets.push(t);
            t *= std::f64::consts::SQRT_2;
        }
        targets.push(budget);
        Checkpoints::Targets(targets)
    }
}

/// Records checkpoint values; the initial point and final point are always kept.
pub(crate) struct Recorder<'a> {
    checkpoints: &'a Checkpoints,
    next: usize,
    points: Vec<TracePoint>,
}

impl<'a> Recorder<'a> {
    pub(crate) fn new(checkpoints: &'a Checkpoints, initial: f64) -> Self {
        let mut r = Recorder {
            checkpoints,
            next: 0,
            points: Vec::new(),
        };
        r.push(0.0, initial);
        r
    }

    pub(crate) fn due(&self, passes: f64) -> bool {
        match self.checkpoints {
            Checkpoints::Every => true,
            Checkpoints::Targets(t) => t.get(self.next).is_some_and(|&target| passes >= target),
        }
    }

    pub(crate) fn push(&mut self, passes: f64, value: f64) {
        if let Checkpoints::Targets(t) = self.checkpoints {
            while self.next < t.len() && t[self.next] <= passes {
                self.next += 1;
            }
        }
        match self.points.last() {
            Some(last) if last.passes >= passes => {}
            _ => self.points.push(TracePoint {
                passes,
                suboptimality: value,
            }),
        }
    }

    pub(crate) fn last_passes(&self) -> f64 {
        self.points.last().map_or(0.0, |p| p.passes)
    }

    pub(crate) fn finish(self) -> Vec<TracePoint> {
        self.points
    }
}

/// Method plus hyperparameters for one run.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverConfig {
    pub method: Method,
    /// Step size; `None` selects the method's default.
    pub alpha: Option<f64>,
    /// Explicit Q-SVRG `(l, m)`; `None` derives it from `target_passes`.
    pub schedule: Option<(u64, u64)>,
    pub target_passes: f64,
    pub seed: u64,
    pub stream_id: u64,
    pub checkpoints: Checkpoints,
}

impl SolverConfig {
    pub fn new(method: Method, target_passes: f64, seed: u64) -> Self {
        SolverConfig {
            method,
            alpha: None,
            schedule: None,
            target_passes,
            seed,
            stream_id: 0,
            checkpoints: Checkpoints::geometric(target_passes),
        }
    }

    /// Resolved step size and Q-SVRG schedule.
    pub fn resolve(&self, oracle: &StochasticOracle) -> Result<(f64, Option<(u64, u64)>)> {
        if !(self.target_passes > 0.0) {
            return Err(Error::InvalidArgument("passes budget must be positive".into()));
        }
        let alpha = match self.alpha {
            Some(a) => a,
            None => default_step_size(self.method, oracle)?,
        };
        let schedule = match (self.method, self.schedule) {
            (Method::Qsvrg, Some((l, m))) => Some((l, m)),
            (Method::Qsvrg, None) => {
                let ratio = schedule_ratio(oracle);
                let (l, m, _) = auto_schedule_for_passes(self.target_passes, oracle.design().n(), ratio)?;
                Some((l, m))
            }
            _ => None,
        };
        Ok((alpha, schedule))
    }

    pub fn run(&self, oracle: &StochasticOracle, reference: &ReferenceSolution) -> Result<RunTrace> {
        let (alpha, schedule) = self.resolve(oracle)?;
        let mut rng = RngStream::new(self.seed, self.stream_id);
        let cp = &self.checkpoints;
        match self.method {
            Method::Qsvrg => {
                let (l, m) = schedule.expect("resolved above");
                qsvrg(oracle, reference, QsvrgParams { alpha, m, l }, &mut rng, cp)
            }
            Method::SgdUniform => {
                sgd_uniform_averaged(oracle, reference, alpha, self.target_passes, &mut rng, cp)
            }
            Method::SgdNonuniform => {
                sgd_nonuniform_averaged(oracle, reference, alpha, self.target_passes, &mut rng, cp)
            }
            Method::SagNonuniform => {
                sag_nonuniform(oracle, reference, alpha, self.target_passes, &mut rng, cp)
            }
            Method::SvrgNonuniform => {
                let epochs = (self.target_passes / 3.0).floor() as u64;
                svrg_nonuniform(oracle, reference, alpha, epochs.max(1), &mut rng, cp)
            }
            Method::LsvrgUniform => {
                lsvrg_uniform(oracle, reference, alpha, self.target_passes, &mut rng, cp)
            }
        }
    }
}

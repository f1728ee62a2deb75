//! Built-in numerical checks of the convergence theory on small synthetic
//! problems. Each suite returns measured values next to the bound they must
//! respect; a `bound_factor` below 1 tightens every bound.

use std::fmt;
use std::str::FromStr;

use rand_distr::{Distribution, StandardNormal};

use crate::datasets::synthetic_problem;
use crate::error::{Error, Result};
use crate::linalg;
use crate::oracles::{
    least_squares_oracle, ridge_oracle, LdaModel, StochasticHessian, StochasticOracle,
};
use crate::quadratic::{
    self, gap_in_f, materialize_hessian, reference_minimizer, ExpectedIterates, Quadratic,
};
use crate::sampling::{chi_square_p_value, AliasTable, RngStream};
use crate::solvers::{qsvrg, Checkpoints, QsvrgParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Unbiasedness,
    Theorem,
    Bias,
    Variance,
    Sampler,
}

impl Suite {
    pub const ALL: [Suite; 5] = [
        Suite::Unbiasedness,
        Suite::Theorem,
        Suite::Bias,
        Suite::Variance,
        Suite::Sampler,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Unbiasedness => "unbiasedness",
            Suite::Theorem => "theorem",
            Suite::Bias => "bias",
            Suite::Variance => "variance",
            Suite::Sampler => "sampler",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown suite '{s}' (expected one of: {})",
                    Suite::ALL.map(Suite::as_str).join(", ")
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub measured: f64,
    pub bound: f64,
    /// `measured <= bound`, or `measured >= bound` for lower bounds.
    pub lower_bound: bool,
    /// Informational checks are reported but do not decide the verdict.
    pub required: bool,
}

impl Check {
    fn at_most(name: impl Into<String>, measured: f64, bound: f64) -> Self {
        Check {
            name: name.into(),
            measured,
            bound,
            lower_bound: false,
            required: true,
        }
    }

    pub fn passed(&self) -> bool {
        if self.lower_bound {
            self.measured >= self.bound
        } else {
            self.measured <= self.bound
        }
    }

    /// Distance to the bound, positive when the check passes.
    pub fn margin(&self) -> f64 {
        if self.lower_bound {
            self.measured - self.bound
        } else {
            self.bound - self.measured
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VerifyReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| c.required).all(Check::passed)
    }
}

impl fmt::Display for VerifyReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let status = match (c.required, c.passed()) {
                (true, true) => "ok",
                (true, false) => "FAIL",
                (false, true) => "info",
                (false, false) => "info*",
            };
            let rel = if c.lower_bound { ">=" } else { "<=" };
            writeln!(
                f,
                "{:<5} {}/{}: measured {:.6e} {rel} bound {:.6e} (margin {:.3e})",
                status,
                self.suite,
                c.name,
                c.measured,
                c.bound,
                c.margin()
            )?;
        }
        write!(
            f,
            "{} {}",
            self.suite,
            if self.passed() { "passed" } else { "FAILED" }
        )
    }
}

pub fn run_suite(suite: Suite, bound_factor: f64) -> Result<VerifyReport> {
    if !(bound_factor > 0.0 && bound_factor.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "bound factor must be positive, got {bound_factor}"
        )));
    }
    let checks = match suite {
        Suite::Unbiasedness => unbiasedness_suite(bound_factor)?,
        Suite::Theorem => theorem_suite(bound_factor)?,
        Suite::Bias => bias_suite(bound_factor)?,
        Suite::Variance => variance_suite(bound_factor)?,
        Suite::Sampler => sampler_suite(bound_factor)?,
    };
    Ok(VerifyReport { suite, checks })
}

/// Least-squares problem used by the theorem and bias suites.
pub fn theorem_problem() -> Result<StochasticOracle> {
    let (x, y) = synthetic_problem(50, 5, 20.0, 0)?;
    least_squares_oracle(x, y)
}

/// Largest `|mean(Q v) − H v| / SE` over coordinates, from `samples` draws.
pub fn unbiasedness_z<S: StochasticHessian + ?Sized>(
    oracle: &S,
    v: &[f64],
    samples: usize,
    rng: &mut RngStream,
) -> f64 {
    let d = v.len();
    let hv = oracle.hessian_times(v);
    let mut sum = vec![0.0; d];
    let mut sq = vec![0.0; d];
    let mut q = vec![0.0; d];
    for _ in 0..samples {
        oracle.apply_sampled(rng, v, &mut q);
        for j in 0..d {
            let dev = q[j] - hv[j];
            sum[j] += dev;
            sq[j] += dev * dev;
        }
    }
    let s = samples as f64;
    (0..d)
        .map(|j| {
            let mean = sum[j] / s;
            let var = (sq[j] / s - mean * mean).max(0.0) * s / (s - 1.0);
            let se = (var / s).sqrt();
            // a coordinate with no spread must match to rounding
            let floor = 1e-12 * (1.0 + hv[j].abs());
            mean.abs() / se.max(floor)
        })
        .fold(0.0, f64::max)
}

fn gaussian_vec(rng: &mut RngStream, d: usize) -> Vec<f64> {
    (0..d).map(|_| StandardNormal.sample(rng)).collect()
}

/// Three Gaussian clusters in `d` dimensions; labels `1..=3`.
pub fn lda_clusters(n_per_class: usize, d: usize, seed: u64) -> (Vec<Vec<f64>>, Vec<usize>) {
    let mut rng = RngStream::new(seed, 0x1da);
    let mut points = Vec::new();
    let mut labels = Vec::new();
    for k in 1..=3usize {
        let center: Vec<f64> = (0..d).map(|j| if j % 3 == k - 1 { 2.0 } else { 0.0 }).collect();
        for _ in 0..n_per_class {
            let p: Vec<f64> = center
                .iter()
                .map(|c| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    c + z
                })
                .collect();
            points.push(p);
            labels.push(k);
        }
    }
    (points, labels)
}

fn unbiasedness_suite(factor: f64) -> Result<Vec<Check>> {
    let (x, y) = synthetic_problem(200, 10, 10.0, 3)?;
    let lambda = x.lbar() / x.n() as f64;
    let (points, labels) = lda_clusters(60, 8, 5);
    let lda = LdaModel::fit(&points, &labels)?;
    let oracles = [
        ("least_squares", least_squares_oracle(x.clone(), y.clone())?),
        ("ridge", ridge_oracle(x, y, lambda)?),
        ("lda", lda.oracle(1, 0.0)?),
        ("lda_regularized", lda.oracle(2, 0.5)?),
    ];
    let mut checks = Vec::new();
    for (idx, (name, oracle)) in oracles.iter().enumerate() {
        let mut vrng = RngStream::new(100 + idx as u64, 0);
        let mut worst: f64 = 0.0;
        for t in 0..5u64 {
            let v = gaussian_vec(&mut vrng, oracle.dim());
            let mut rng = RngStream::new(idx as u64, t);
            worst = worst.max(unbiasedness_z(oracle, &v, 100_000, &mut rng));
        }
        checks.push(Check::at_most(
            format!("{name} max |mean(Qv) - Hv| / SE over 5 v"),
            worst,
            5.0 * factor,
        ));
    }
    Ok(checks)
}

/// Mean and coefficient of variation over `seeds` runs of `f(T^l_m(0)) − f*`.
pub fn theorem_monte_carlo(
    oracle: &StochasticOracle,
    m: u64,
    l: u64,
    seeds: u64,
) -> Result<(f64, f64)> {
    let reference = reference_minimizer(oracle)?;
    let params = QsvrgParams { alpha: 1.0, m, l };
    let cp = Checkpoints::Targets(Vec::new());
    let mut gaps = Vec::with_capacity(seeds as usize);
    for seed in 0..seeds {
        let mut rng = RngStream::new(seed, 0);
        let trace = qsvrg(oracle, &reference, params, &mut rng, &cp)?;
        gaps.push(gap_in_f(oracle, &trace.final_theta, &reference)?);
    }
    let s = seeds as f64;
    let mean = gaps.iter().sum::<f64>() / s;
    let var = gaps.iter().map(|g| (g - mean).powi(2)).sum::<f64>() / (s - 1.0);
    Ok((mean, var.sqrt() / mean))
}

fn theorem_suite(factor: f64) -> Result<Vec<Check>> {
    let oracle = theorem_problem()?;
    let reference = reference_minimizer(&oracle)?;
    let mu = quadratic::smallest_eigenvalue(&oracle)?;
    let initial = gap_in_f(&oracle, &vec![0.0; oracle.dim()], &reference)?;
    let seeds = 1000u64;
    let mut checks = Vec::new();
    for (m, l) in [(200u64, 1u64), (500, 1), (200, 2)] {
        let (mean, cv) = theorem_monte_carlo(&oracle, m, l, seeds)?;
        let rate = 9.0 / (mu * m as f64);
        let bound = rate.powi(l as i32) * initial * (1.0 + 3.0 * cv / (seeds as f64).sqrt());
        checks.push(Check::at_most(
            format!("m={m} l={l} mean f(T(0)) - f* over {seeds} seeds"),
            mean,
            bound * factor,
        ));
    }
    Ok(checks)
}

/// `max_{1≤k≤k_max} (Eθ̄_k − θ*)ᵀH(Eθ̄_k − θ*)·αk/‖θ*‖²` from the closed form of `E(θ_i)`.
pub fn bias_ratio<P: Quadratic + ?Sized>(problem: &P, alpha: f64, k_max: usize) -> Result<f64> {
    let reference = reference_minimizer(problem)?;
    let theta_star = &reference.theta_star;
    let norm_sq = linalg::norm_sq(theta_star);
    let d = problem.dim();
    let mut sum = vec![0.0; d];
    let mut worst: f64 = 0.0;
    for (i, e) in ExpectedIterates::new(problem, theta_star, alpha)?
        .take(k_max)
        .enumerate()
    {
        linalg::axpy(1.0, &e, &mut sum);
        let k = (i + 1) as f64;
        let diff: Vec<f64> = sum.iter().zip(theta_star).map(|(s, t)| s / k - t).collect();
        let lhs = linalg::dot(&diff, &problem.hessian_times(&diff));
        worst = worst.max(lhs * alpha * k / norm_sq);
    }
    Ok(worst)
}

fn bias_suite(factor: f64) -> Result<Vec<Check>> {
    let oracle = theorem_problem()?;
    let ratio = bias_ratio(&oracle, 1.0, 1000)?;
    Ok(vec![Check::at_most(
        "max_k bias * alpha k / |theta*|^2, k in 1..=1000",
        ratio,
        (1.0 + 1e-12) * factor,
    )])
}

/// Per-`k` mean and standard error of `‖β_k − θ*‖²` for `β_{k+1} = β_k − αQ_kβ_k + αc`,
/// `β₀ = θ*`, over `seeds` independent streams.
pub fn variance_monte_carlo<S: StochasticHessian + ?Sized>(
    oracle: &S,
    theta_star: &[f64],
    alpha: f64,
    k_max: usize,
    seeds: u64,
) -> Vec<(f64, f64)> {
    let d = theta_star.len();
    let c = oracle.linear_term();
    let mut sum = vec![0.0; k_max];
    let mut sq = vec![0.0; k_max];
    let mut q = vec![0.0; d];
    for seed in 0..seeds {
        let mut rng = RngStream::new(seed, 1);
        let mut beta = theta_star.to_vec();
        for k in 0..k_max {
            oracle.apply_sampled(&mut rng, &beta, &mut q);
            for j in 0..d {
                beta[j] += alpha * (c[j] - q[j]);
            }
            let e: f64 = beta
                .iter()
                .zip(theta_star)
                .map(|(b, t)| (b - t).powi(2))
                .sum();
            sum[k] += e;
            sq[k] += e * e;
        }
    }
    let s = seeds as f64;
    (0..k_max)
        .map(|k| {
            let mean = sum[k] / s;
            let var = (sq[k] / s - mean * mean).max(0.0) * s / (s - 1.0);
            (mean, (var / s).sqrt())
        })
        .collect()
}

fn variance_suite(factor: f64) -> Result<Vec<Check>> {
    let (x, y) = synthetic_problem(30, 3, 5.0, 7)?;
    let oracle = least_squares_oracle(x, y)?;
    let reference = reference_minimizer(&oracle)?;
    let mu = materialize_hessian(&oracle)?.symmetric_eigenvalues()[0];
    let alpha = 1.0;
    let ts = &reference.theta_star;
    let bound = alpha / mu * linalg::dot(ts, &oracle.hessian_times(ts));
    let stats = variance_monte_carlo(&oracle, ts, alpha, 50, 10_000);
    let (worst_k, excess) = stats
        .iter()
        .enumerate()
        .map(|(k, (mean, se))| (k + 1, mean - 5.0 * se))
        .fold((0, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a });
    Ok(vec![Check::at_most(
        format!("max_k (mean |beta_k - theta*|^2 - 5 SE), k in 1..=50 (worst k={worst_k})"),
        excess,
        bound * factor,
    )])
}

/// Chi-square p-values of `draws` alias samples for each seed in `0..seeds`.
pub fn sampler_p_values(weights: &[f64], draws: usize, seeds: u64) -> Result<Vec<f64>> {
    let table = AliasTable::new(weights)?;
    let total: f64 = weights.iter().sum();
    let probs: Vec<f64> = weights.iter().map(|w| w / total).collect();
    Ok((0..seeds)
        .map(|seed| {
            let mut rng = RngStream::new(seed, 2);
            let mut counts = vec![0u64; weights.len()];
            for _ in 0..draws {
                counts[table.sample(&mut rng)] += 1;
            }
            chi_square_p_value(&counts, &probs)
        })
        .collect())
}

fn sampler_suite(factor: f64) -> Result<Vec<Check>> {
    let weights: Vec<f64> = (1..=10).map(|i| (i * i) as f64).collect();
    let ps = sampler_p_values(&weights, 1_000_000, 20)?;
    let mut checks: Vec<Check> = ps
        .iter()
        .enumerate()
        .map(|(seed, p)| Check {
            name: format!("seed {seed} chi-square p-value"),
            measured: *p,
            bound: 1e-3,
            lower_bound: true,
            required: false,
        })
        .collect();
    let small = ps.iter().filter(|p| **p < 1e-3).count();
    checks.push(Check::at_most(
        "seeds with p < 0.001 (of 20)",
        small as f64,
        factor,
    ));
    Ok(checks)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.as_str().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn bias_and_factor() {
        let ok = run_suite(Suite::Bias, 1.0).unwrap();
        assert!(ok.passed(), "{ok}");
        let tight = run_suite(Suite::Bias, 1e-6).unwrap();
        assert!(!tight.passed());
        assert!(run_suite(Suite::Bias, 0.0).is_err());
    }

    #[test]
    fn report_formatting() {
        let r = VerifyReport {
            suite: Suite::Bias,
            checks: vec![Check::at_most("x", 1.0, 2.0)],
        };
        let s = r.to_string();
        assert!(s.contains("margin") && s.ends_with("bias passed"));
    }
}

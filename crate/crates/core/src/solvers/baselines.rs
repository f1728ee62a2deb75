//! Comparison methods on the ridge objective `‖Xθ − Y‖²/2n + λ‖θ‖²/2`.
//!
//! These operate on `g` directly (not on the normalized `f`), using the design
//! and response held by a least-squares or ridge oracle.

use super::{effective_passes, Checkpoints, Method, Recorder, RunTrace};
use crate::error::{Error, Result};
use crate::linalg;
use crate::oracles::{DesignMatrix, OracleKind, StochasticOracle};
use crate::quadratic::{self, Quadratic, ReferenceSolution};
use crate::sampling::RngStream;

struct RidgeView<'a> {
    x: &'a DesignMatrix,
    y: &'a [f64],
    lambda: f64,
}

fn ridge_view<'a>(oracle: &'a StochasticOracle, method: Method) -> Result<RidgeView<'a>> {
    match (oracle.kind(), oracle.response()) {
        (OracleKind::LeastSquares | OracleKind::Ridge, Some(y)) => Ok(RidgeView {
            x: oracle.design(),
            y,
            lambda: oracle.lambda(),
        }),
        _ => Err(Error::UnsupportedProblem {
            method: method.as_str(),
        }),
    }
}

impl RidgeView<'_> {
    fn n(&self) -> usize {
        self.x.n()
    }

    /// `XᵀY / n`
    fn mean_xy(&self) -> Vec<f64> {
        let n = self.n() as f64;
        let mut b = self.x.tmul_vec(self.y);
        b.iter_mut().for_each(|v| *v /= n);
        b
    }

    /// `∇g(θ) = Xᵀ(Xθ − Y)/n + λθ`
    fn full_gradient(&self, theta: &[f64], mean_xy: &[f64]) -> Vec<f64> {
        let n = self.n() as f64;
        let mut g = vec![0.0; theta.len()];
        self.x.gram_apply(theta, &mut g);
        for ((gj, bj), tj) in g.iter_mut().zip(mean_xy).zip(theta) {
            *gj = *gj / n - bj + self.lambda * tj;
        }
        g
    }
}

/// The step size each method uses by default (for Q-SVRG, `α = 1/L`).
pub fn default_step_size(method: Method, oracle: &StochasticOracle) -> Result<f64> {
    if method == Method::Qsvrg {
        return Ok(1.0 / oracle.smoothness());
    }
    let view = ridge_view(oracle, method)?;
    let lam = view.lambda;
    let lbar = view.x.lbar();
    let smax = view.x.max_row_sq_norm();
    Ok(match method {
        Method::SgdUniform => 1.0 / (4.0 * (lam + smax)),
        Method::SgdNonuniform | Method::SagNonuniform => 1.0 / (lam + lbar),
        Method::SvrgNonuniform => 0.1 / (lam + lbar),
        Method::LsvrgUniform => 1.0 / (6.0 * (lam + smax)),
        Method::Qsvrg => unreachable!(),
    })
}

fn check_step(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "step size must be positive and finite, got {alpha}"
        )))
    }
}

fn streaming_steps(passes: f64, n: usize) -> Result<u64> {
    if !(passes > 0.0 && passes.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "passes budget must be positive, got {passes}"
        )));
    }
    Ok((passes * n as f64).round() as u64)
}

fn ensure_finite_iterate(theta: &[f64], step: u64) -> Result<()> {
    if linalg::all_finite(theta) {
        Ok(())
    } else {
        Err(Error::Diverged { epoch: 0, step })
    }
}

/// `avg ← avg + (θ − avg)/(k + 1)`, the mean of `k + 1` iterates.
fn update_average(avg: &mut [f64], theta: &[f64], k: u64) {
    let w = 1.0 / (k + 1) as f64;
    for (a, t) in avg.iter_mut().zip(theta) {
        *a += w * (t - *a);
    }
}

fn sub_of(oracle: &StochasticOracle, theta: &[f64], reference: &ReferenceSolution) -> Result<f64> {
    quadratic::suboptimality(oracle, theta, reference)
}

/// Shared loop for the two averaged SGD variants; `step` updates θ in place.
fn averaged_sgd<F>(
    oracle: &StochasticOracle,
    reference: &ReferenceSolution,
    n: usize,
    passes: f64,
    checkpoints: &Checkpoints,
    mut step: F,
) -> Result<RunTrace>
where
    F: FnMut(&mut Vec<f64>),
{
    let total = streaming_steps(passes, n)?;
    let d = oracle.dim();
    let mut theta = vec![0.0; d];
    let mut avg = vec![0.0; d];
    let mut recorder = Recorder::new(checkpoints, sub_of(oracle, &avg, reference)?);
    let every = n.div_ceil(4) as u64;
    for k in 1..=total {
        step(&mut theta);
        ensure_finite_iterate(&theta, k)?;
        update_average(&mut avg, &theta, k);
        let at = effective_passes(k, n);
        if (k % every == 0 && recorder.due(at)) || k == total {
            recorder.push(at, sub_of(oracle, &avg, reference)?);
        }
    }
    Ok(RunTrace {
        points: recorder.finish(),
        final_theta: avg,
        gradient_count: total,
    })
}

/// Averaged SGD with uniform sampling:
/// `θ ← θ − γ((x_iᵀθ − y_i)x_i + λθ)`, reporting the running mean of θ₀…θ_k.
pub fn sgd_uniform_averaged(
    oracle: &StochasticOracle,
    reference: &ReferenceSolution,
    alpha: f64,
    target_passes: f64,
    rng: &mut RngStream,
    checkpoints: &Checkpoints,
) -> Result<RunTrace> {
    check_step(alpha)?;
    let view = ridge_view(oracle, Method::SgdUniform)?;
    let n = view.n();
    let lam = view.lambda;
    averaged_sgd(oracle, reference, n, target_passes, checkpoints, |theta| {
        let i = rng.index(n);
        let row = view.x.row(i);
        let r = linalg::dot(row, theta) - view.y[i];
        for (t, x) in theta.iter_mut().zip(row) {
            *t -= alpha * (r * x + lam * *t);
        }
    })
}

/// Averaged SGD with `i ∝ ‖x_i‖²`:
/// `θ ← θ − γ(λθ + L̄(x_iᵀθ/‖x_i‖²)x_i − XᵀY/n)`, whose expectation is `θ − γ∇g(θ)`.
pub fn sgd_nonuniform_averaged(
    oracle: &StochasticOracle,
    reference: &ReferenceSolution,
    alpha: f64,
    target_passes: f64,
    rng: &mut RngStream,
    checkpoints: &Checkpoints,
) -> Result<RunTrace> {
    check_step(alpha)?;
    let view = ridge_view(oracle, Method::SgdNonuniform)?;
    let n = view.n();
    let lam = view.lambda;
    let lbar = view.x.lbar();
    let b = view.mean_xy();
    let s = view.x.row_sq_norms();
    averaged_sgd(oracle, reference, n, target_passes, checkpoints, |theta| {
        let i = oracle.sample_index(rng);
        let row = view.x.row(i);
        let coef = lbar * linalg::dot(row, theta) / s[i];
        for ((t, x), bj) in theta.iter_mut().zip(row).zip(&b) {
            *t -= alpha * (lam * *t + coef * x - bj);
        }
    })
}

/// Gradient memory for SAG: row `i`'s last gradient is `a_i x_i`.
#[derive(Debug, Clone, PartialEq)]
pub struct SagState {
    coefficients: Vec<f64>,
    sum: Vec<f64>,
}

impl SagState {
    pub fn new(n: usize, d: usize) -> Self {
        SagState {
            coefficients: vec![0.0; n],
            sum: vec![0.0; d],
        }
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coefficients
    }

    /// `Σ_j a_j x_j`, maintained incrementally.
    pub fn sum(&self) -> &[f64] {
        &self.sum
    }

    /// Replaces `a_i` and patches the sum with `(a_new − a_old) x_i`.
    pub fn update(&mut self, i: usize, row: &[f64], a_new: f64) {
        let delta = a_new - self.coefficients[i];
        self.coefficients[i] = a_new;
        linalg::axpy(delta, row, &mut self.sum);
    }

    /// `Σ_j a_j x_j` recomputed from scratch.
    pub fn recompute_sum(&self, design: &DesignMatrix) -> Vec<f64> {
        let mut s = vec![0.0; design.d()];
        for (a, row) in self.coefficients.iter().zip(design.rows()) {
            linalg::axpy(*a, row, &mut s);
        }
        s
    }
}

/// SAG with `i ∝ ‖x_i‖²` and memory `a_i = x_iᵀθ − y_i`:
/// `θ ← θ − γ(Σ_j a_j x_j / n + λθ)`. Each checkpoint reports the better of the
/// current iterate and the running mean of iterates (θ₀ included).
pub fn sag_nonuniform(
    oracle: &StochasticOracle,
    reference: &ReferenceSolution,
    alpha: f64,
    target_passes: f64,
    rng: &mut RngStream,
    checkpoints: &Checkpoints,
) -> Result<RunTrace> {
    check_step(alpha)?;
    let view = ridge_view(oracle, Method::SagNonuniform)?;
    let n = view.n();
    let nf = n as f64;
    let lam = view.lambda;
    let total = streaming_steps(target_passes, n)?;
    let d = oracle.dim();
    let mut theta = vec![0.0; d];
    let mut avg = vec![0.0; d];
    let mut state = SagState::new(n, d);
    let mut recorder = Recorder::new(checkpoints, sub_of(oracle, &theta, reference)?);
    let every = n.div_ceil(4) as u64;

    let better = |theta: &[f64], avg: &[f64]| -> Result<(f64, bool)> {
        let a = sub_of(oracle, theta, reference)?;
        let b = sub_of(oracle, avg, reference)?;
        Ok(if b < a { (b, true) } else { (a, false) })
    };

    for k in 1..=total {
        let i = oracle.sample_index(rng);
        let row = view.x.row(i);
        state.update(i, row, linalg::dot(row, &theta) - view.y[i]);
        for (t, sj) in theta.iter_mut().zip(state.sum()) {
            *t -= alpha * (sj / nf + lam * *t);
        }
        ensure_finite_iterate(&theta, k)?;
        update_average(&mut avg, &theta, k);
        let at = effective_passes(k, n);
        if (k % every == 0 && recorder.due(at)) || k == total {
            recorder.push(at, better(&theta, &avg)?.0);
        }
    }
    let final_theta = if better(&theta, &avg)?.1 { avg } else { theta };
    Ok(RunTrace {
        points: recorder.finish(),
        final_theta,
        gradient_count: total,
    })
}

/// SVRG with `i ∝ ‖x_i‖²`. Each epoch computes `∇g(θ̃)` (n gradients) then
/// takes 2n steps along `λΔ + L̄(x_iᵀΔ/‖x_i‖²)x_i + ∇g(θ̃)`, `Δ = θ − θ̃`;
/// the final iterate becomes the next anchor.
pub fn svrg_nonuniform(
    oracle: &StochasticOracle,
    reference: &ReferenceSolution,
    alpha: f64,
    epochs: u64,
    rng: &mut RngStream,
    checkpoints: &Checkpoints,
) -> Result<RunTrace> {
    check_step(alpha)?;
    let view = ridge_view(oracle, Method::SvrgNonuniform)?;
    let n = view.n();
    let lam = view.lambda;
    let lbar = view.x.lbar();
    let s = view.x.row_sq_norms();
    let b = view.mean_xy();
    let d = oracle.dim();
    let mut theta = vec![0.0; d];
    let mut recorder = Recorder::new(checkpoints, sub_of(oracle, &theta, reference)?);
    let mut gradient_count = 0u64;
    let inner = 2 * n as u64;
    for epoch in 0..epochs {
        let anchor = theta.clone();
        let full = view.full_gradient(&anchor, &b);
        for step in 0..inner {
            let i = oracle.sample_index(rng);
            let row = view.x.row(i);
            let proj: f64 = row
                .iter()
                .zip(theta.iter().zip(&anchor))
                .map(|(x, (t, a))| x * (t - a))
                .sum();
            let coef = lbar * proj / s[i];
            for (((t, a), x), g) in theta.iter_mut().zip(&anchor).zip(row).zip(&full) {
                *t -= alpha * (lam * (*t - a) + coef * x + g);
            }
            if !linalg::all_finite(&theta) {
                return Err(Error::Diverged { epoch, step });
            }
        }
        gradient_count += n as u64 + inner;
        let at = effective_passes(gradient_count, n);
        if recorder.due(at) || epoch + 1 == epochs {
            recorder.push(at, sub_of(oracle, &theta, reference)?);
        }
    }
    Ok(RunTrace {
        points: recorder.finish(),
        final_theta: theta,
        gradient_count,
    })
}

/// Loopless SVRG with uniform sampling. After each step the anchor `w` moves to
/// the pre-step iterate with probability `1/n`, costing `n` gradients.
pub fn lsvrg_uniform(
    oracle: &StochasticOracle,
    reference: &ReferenceSolution,
    alpha: f64,
    target_passes: f64,
    rng: &mut RngStream,
    checkpoints: &Checkpoints,
) -> Result<RunTrace> {
    check_step(alpha)?;
    let view = ridge_view(oracle, Method::LsvrgUniform)?;
    let n = view.n();
    let refresh = 1.0 / n as f64;
    let lam = view.lambda;
    let budget = streaming_steps(target_passes, n)?;
    let b = view.mean_xy();
    let d = oracle.dim();
    let mut theta = vec![0.0; d];
    let mut anchor = theta.clone();
    let mut full = view.full_gradient(&anchor, &b);
    let mut gradient_count = n as u64;
    let mut recorder = Recorder::new(checkpoints, sub_of(oracle, &theta, reference)?);
    let every = n.div_ceil(4) as u64;
    let mut old = vec![0.0; d];
    let mut step = 0u64;
    while gradient_count < budget {
        step += 1;
        let i = rng.index(n);
        let row = view.x.row(i);
        let proj: f64 = row
            .iter()
            .zip(theta.iter().zip(&anchor))
            .map(|(x, (t, a))| x * (t - a))
            .sum();
        old.copy_from_slice(&theta);
        for (((t, a), x), g) in theta.iter_mut().zip(&anchor).zip(row).zip(&full) {
            *t -= alpha * (proj * x + lam * (*t - a) + g);
        }
        ensure_finite_iterate(&theta, step)?;
        gradient_count += 1;
        if rng.uniform() < refresh {
            std::mem::swap(&mut anchor, &mut old);
            full = view.full_gradient(&anchor, &b);
            gradient_count += n as u64;
        }
        let at = effective_passes(gradient_count, n);
        if (step % every == 0 && recorder.due(at)) || gradient_count >= budget {
            recorder.push(at, sub_of(oracle, &theta, reference)?);
        }
    }
    if recorder.last_passes() < effective_passes(gradient_count, n) {
        let at = effective_passes(gradient_count, n);
        recorder.push(at, sub_of(oracle, &theta, reference)?);
    }
    Ok(RunTrace {
        points: recorder.finish(),
        final_theta: theta,
        gradient_count,
    })
}

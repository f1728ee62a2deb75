use super::{effective_passes, Checkpoints, Recorder, RunTrace};
use crate::error::{Error, Result};
use crate::linalg;
use crate::oracles::{OracleKind, StochasticHessian, StochasticOracle};
use crate::quadratic::{self, ReferenceSolution, DEFAULT_DIMENSION_CAP};
use crate::sampling::RngStream;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QsvrgParams {
    /// Step size in units of `1/L`; must lie in `(0, 1/L]`.
    pub alpha: f64,
    /// Inner iterations per epoch.
    pub m: u64,
    /// Number of epochs.
    pub l: u64,
}

/// One epoch: returns `(θ₀ + ⋯ + θ_{m−1}) / m` for the inner recursion
/// `θ_{k+1} = θ_k − α(Q_k(θ_k − θ₀) − c̃)` with `c̃ = c − Hθ₀`.
///
/// When `log` is given, every averaged iterate `θ₀ … θ_{m−1}` is appended.
pub fn qsvrg_epoch<S: StochasticHessian + ?Sized>(
    oracle: &S,
    anchor: &[f64],
    alpha: f64,
    m: u64,
    rng: &mut RngStream,
    epoch: u64,
    mut log: Option<&mut Vec<Vec<f64>>>,
) -> Result<Vec<f64>> {
    let d = anchor.len();
    let c_tilde = oracle.shifted_gradient_anchor(anchor);
    let mut theta = anchor.to_vec();
    let mut sum = vec![0.0; d];
    let mut delta = vec![0.0; d];
    let mut q = vec![0.0; d];
    for step in 0..m {
        linalg::axpy(1.0, &theta, &mut sum);
        if let Some(log) = log.as_deref_mut() {
            log.push(theta.clone());
        }
        for ((dj, tj), aj) in delta.iter_mut().zip(&theta).zip(anchor) {
            *dj = tj - aj;
        }
        oracle.apply_sampled(rng, &delta, &mut q);
        let mut finite = true;
        for ((tj, qj), cj) in theta.iter_mut().zip(&q).zip(&c_tilde) {
            *tj -= alpha * (qj - cj);
            finite &= tj.is_finite();
        }
        if !finite {
            return Err(Error::Diverged { epoch, step });
        }
    }
    let m_f = m as f64;
    sum.iter_mut().for_each(|s| *s /= m_f);
    Ok(sum)
}

/// `T^l_m(0)`: `l` epochs of `m` inner steps, each anchored at the previous
/// epoch's average. Suboptimality is recorded at epoch boundaries.
pub fn qsvrg<S: StochasticHessian + ?Sized>(
    oracle: &S,
    reference: &ReferenceSolution,
    params: QsvrgParams,
    rng: &mut RngStream,
    checkpoints: &Checkpoints,
) -> Result<RunTrace> {
    let QsvrgParams { alpha, m, l } = params;
    let smoothness = oracle.smoothness();
    if !(alpha > 0.0 && alpha * smoothness <= 1.0) {
        return Err(Error::InvalidArgument(format!(
            "Q-SVRG step size must lie in (0, 1/L] with L = {smoothness}, got {alpha}"
        )));
    }
    if m == 0 || l == 0 {
        return Err(Error::InvalidArgument(
            "Q-SVRG needs m >= 1 and l >= 1".into(),
        ));
    }
    let n = oracle.sample_size();
    let mut theta = vec![0.0; oracle.dim()];
    let mut recorder =
        Recorder::new(checkpoints, quadratic::suboptimality(oracle, &theta, reference)?);
    let mut gradient_count = 0u64;
    for epoch in 0..l {
        theta = qsvrg_epoch(oracle, &theta, alpha, m, rng, epoch, None)?;
        gradient_count += n as u64 + m;
        let passes = effective_passes(gradient_count, n);
        if recorder.due(passes) || epoch + 1 == l {
            recorder.push(passes, quadratic::suboptimality(oracle, &theta, reference)?);
        }
    }
    Ok(RunTrace {
        points: recorder.finish(),
        final_theta: theta,
        gradient_count,
    })
}

/// `l = max(4, ⌈N·min(1/n, ratio)⌉)`, `m = ⌊N/l⌋`, where `N` is the target
/// number of inner iterations and `ratio` is `λ/L̄` for ridge problems.
pub fn qsvrg_auto_schedule(total_inner: u64, n: usize, ratio: f64) -> Result<(u64, u64)> {
    if total_inner < 4 {
        return Err(Error::InvalidArgument(format!(
            "auto schedule needs N >= 4, got {total_inner}"
        )));
    }
    if n == 0 || !(ratio > 0.0) {
        return Err(Error::InvalidArgument(
            "auto schedule needs n >= 1 and a positive ratio".into(),
        ));
    }
    let rate = (1.0 / n as f64).min(ratio);
    let l = ((total_inner as f64 * rate).ceil() as u64).max(4);
    Ok((l, total_inner / l))
}

/// Largest `N` whose auto schedule costs at most `passes` effective passes.
/// Returns `(l, m, N)`.
pub fn auto_schedule_for_passes(passes: f64, n: usize, ratio: f64) -> Result<(u64, u64, u64)> {
    let max_total = (passes * n as f64).floor() as u64;
    let mut best = None;
    for total in 4..=max_total {
        let (l, m) = qsvrg_auto_schedule(total, n, ratio)?;
        if effective_passes(l * (n as u64 + m), n) <= passes {
            best = Some((l, m, total));
        }
    }
    best.ok_or_else(|| {
        Error::InvalidArgument(format!(
            "passes budget {passes} is too small for a 4-epoch Q-SVRG schedule"
        ))
    })
}

/// `λ/L̄` for ridge, its analogue `μ/(1 − μ)` otherwise.
pub fn schedule_ratio(oracle: &StochasticOracle) -> f64 {
    let n = oracle.design().n();
    match oracle.kind() {
        OracleKind::Ridge => oracle.lambda() / oracle.lbar(),
        OracleKind::Lda if oracle.lambda() > 0.0 => {
            oracle.lambda() / oracle.design().trace()
        }
        _ => {
            let mu = if oracle.design().d() <= DEFAULT_DIMENSION_CAP {
                quadratic::smallest_eigenvalue(oracle).unwrap_or(0.0)
            } else {
                0.0
            };
            if mu > 0.0 && mu < 1.0 {
                mu / (1.0 - mu)
            } else {
                1.0 / n as f64
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TheoreticalSchedule {
    pub l: u64,
    pub m: u64,
    /// `l (n + m)` stochastic gradients.
    pub total_gradients: u64,
}

/// `m = ⌈9 max(eκ, n)⌉`, `l = ⌈log(gap/ε) / max(1, log(n/κ))⌉`.
pub fn theoretical_schedule(
    kappa: f64,
    n: usize,
    epsilon: f64,
    initial_gap: f64,
) -> Result<TheoreticalSchedule> {
    if !(kappa >= 1.0) || n == 0 || !(epsilon > 0.0) || !(initial_gap > 0.0) {
        return Err(Error::InvalidArgument(
            "theoretical schedule needs kappa >= 1, n >= 1, epsilon > 0, gap > 0".into(),
        ));
    }
    let nf = n as f64;
    let m = (9.0 * (std::f64::consts::E * kappa).max(nf)).ceil() as u64;
    if epsilon >= initial_gap {
        return Ok(TheoreticalSchedule {
            l: 0,
            m,
            total_gradients: 0,
        });
    }
    let l = ((initial_gap / epsilon).ln() / (nf / kappa).ln().max(1.0)).ceil() as u64;
    Ok(TheoreticalSchedule {
        l,
        m,
        total_gradients: l * (n as u64 + m),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::DenseMatrix;
    use crate::oracles::{least_squares_oracle, DesignMatrix};
    use crate::quadratic::{reference_minimizer, DenseQuadratic};

    #[test]
    fn deterministic_identity_hand_simulation() {
        // Q ≡ H = I, α = 1, m = 1: θ₁ = c but the average only holds θ₀ = 0.
        let p = DenseQuadratic::new(DenseMatrix::identity(2), vec![1.0, -2.0]).unwrap();
        let r = reference_minimizer(&p).unwrap();
        let mut rng = RngStream::new(0, 0);
        for l in [1, 2, 5] {
            let t = qsvrg(
                &p,
                &r,
                QsvrgParams { alpha: 1.0, m: 1, l },
                &mut rng,
                &Checkpoints::Every,
            )
            .unwrap();
            assert_eq!(t.final_theta, vec![0.0, 0.0]);
            assert_eq!(t.gradient_count, l * 2);
        }
        // m = 2 averages θ₀ = 0 and θ₁ = c.
        let t = qsvrg(
            &p,
            &r,
            QsvrgParams { alpha: 1.0, m: 2, l: 1 },
            &mut rng,
            &Checkpoints::Every,
        )
        .unwrap();
        assert_eq!(t.final_theta, vec![0.5, -1.0]);
    }

    #[test]
    fn step_size_validated() {
        let p = DenseQuadratic::new(DenseMatrix::identity(1), vec![1.0]).unwrap();
        let r = reference_minimizer(&p).unwrap();
        let mut rng = RngStream::new(0, 0);
        for alpha in [0.0, -1.0, 1.01, f64::NAN] {
            let params = QsvrgParams { alpha, m: 3, l: 1 };
            assert!(qsvrg(&p, &r, params, &mut rng, &Checkpoints::Every).is_err());
        }
        let params = QsvrgParams { alpha: 1.0, m: 0, l: 1 };
        assert!(qsvrg(&p, &r, params, &mut rng, &Checkpoints::Every).is_err());
    }

    #[test]
    fn divergence_reports_location() {
        // a non-PSD "Hessian" with L forced to 1 makes the recursion blow up
        let h = DenseMatrix::from_diagonal(&[-1e3]);
        let p = DenseQuadratic::new(h, vec![1.0])
            .unwrap()
            .with_smoothness(1.0)
            .unwrap();
        let r = ReferenceSolution {
            theta_star: vec![0.0],
            f_star: 0.0,
            g_star: 0.0,
            residual_norm: 0.0,
        };
        let mut rng = RngStream::new(0, 0);
        let err = qsvrg(
            &p,
            &r,
            QsvrgParams { alpha: 1.0, m: 500, l: 1 },
            &mut rng,
            &Checkpoints::Every,
        )
        .unwrap_err();
        assert!(matches!(err, Error::Diverged { epoch: 0, .. }));
    }

    #[test]
    fn epoch_average_is_mean_of_first_m_iterates() {
        let x = DesignMatrix::from_rows(&[
            vec![1.0, 0.3, -0.2],
            vec![0.1, 2.0, 0.5],
            vec![-0.4, 0.2, 1.5],
            vec![0.9, -1.1, 0.3],
        ])
        .unwrap();
        let o = least_squares_oracle(x, vec![1.0, -0.5, 2.0, 0.3]).unwrap();
        for m in 1..=8u64 {
            let anchor = vec![0.1, -0.2, 0.05];
            let mut log = Vec::new();
            let mut rng = RngStream::new(11, m);
            let out = qsvrg_epoch(&o, &anchor, 1.0, m, &mut rng, 0, Some(&mut log)).unwrap();
            assert_eq!(log.len(), m as usize);
            assert_eq!(log[0], anchor);
            let mut sum = vec![0.0; 3];
            for it in &log {
                for (s, v) in sum.iter_mut().zip(it) {
                    *s += v;
                }
            }
            let mean: Vec<f64> = sum.iter().map(|s| s / m as f64).collect();
            assert_eq!(out, mean, "m = {m}");
        }
    }

    #[test]
    fn auto_schedule_examples() {
        assert_eq!(qsvrg_auto_schedule(1000, 100, 0.01).unwrap(), (10, 100));
        // min(1/1000, 1) = 1e-3, so N·rate = 1 and the floor of 4 applies
        assert_eq!(qsvrg_auto_schedule(1000, 1000, 1.0).unwrap(), (4, 250));
        assert_eq!(qsvrg_auto_schedule(400, 1_000_000, 1e-9).unwrap(), (4, 100));
        assert!(qsvrg_auto_schedule(3, 10, 0.1).is_err());
    }

    #[test]
    fn auto_schedule_for_passes_respects_budget() {
        // ridge with λ = L̄/n: m = n once l > 4, so each epoch is two passes
        let (l, m, _) = auto_schedule_for_passes(54.0, 208, 1.0 / 208.0).unwrap();
        assert_eq!((l, m), (27, 208));
        let (l, m, total) = auto_schedule_for_passes(8.0, 208, 1.0 / 208.0).unwrap();
        assert_eq!(l, 4);
        assert_eq!(total, 4 * 208);
        assert_eq!(m, 208);
        assert!(auto_schedule_for_passes(3.0, 208, 1.0 / 208.0).is_err());
    }

    #[test]
    fn theoretical_schedule_examples() {
        for n in [1, 2] {
            assert_eq!(theoretical_schedule(1.0, n, 0.1, 1.0).unwrap().m, 25);
        }
        let s = theoretical_schedule(1.0, 2, 0.5, 1.0).unwrap();
        assert_eq!(s.l, 1);
        let s = theoretical_schedule(10.0, 10_000, 1e-8, 1.0).unwrap();
        assert_eq!((s.l, s.m), (3, 90_000));
        assert_eq!(s.total_gradients, 3 * (10_000 + 90_000));
        let s = theoretical_schedule(10.0, 100, 2.0, 1.0).unwrap();
        assert_eq!((s.l, s.total_gradients), (0, 0));
    }
}

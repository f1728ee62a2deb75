//! Quadratic objectives `f(θ) = ½ θᵀHθ − cᵀθ` and their exact evaluation.
//!
//! A problem only needs to expose `v ↦ Hv`; dense routines (reference solve,
//! spectrum, closed-form expected iterates) materialize `H` column by column
//! and are limited to `dim() <= DEFAULT_DIMENSION_CAP`.
//!
//! The user-facing objective is `g(θ) = scale · f(θ) + g_offset`; all
//! suboptimality traces are reported in `g`.

use nalgebra::DVector;

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, DenseMatrix};

/// Largest dimension for which `H` is materialized as a dense matrix.
pub const DEFAULT_DIMENSION_CAP: usize = 5000;

/// Relative residual target for reference solves.
pub const REFERENCE_RESIDUAL_TOL: f64 = 1e-10;

const MAX_REFINEMENT_STEPS: usize = 20;

/// A strongly convex quadratic accessed through Hessian-vector products.
pub trait Quadratic {
    fn dim(&self) -> usize;

    /// The linear term `c`.
    fn linear_term(&self) -> &[f64];

    /// `out = H v`.
    fn apply_hessian(&self, v: &[f64], out: &mut [f64]);

    /// Strong-convexity constant, when known in closed form.
    fn mu(&self) -> Option<f64>;

    /// Smoothness constant `L` of the stochastic Hessians.
    fn smoothness(&self) -> f64;

    /// Factor between `f` and the user objective `g`.
    fn scale(&self) -> f64 {
        1.0
    }

    /// `g(0)`.
    fn g_offset(&self) -> f64 {
        0.0
    }

    fn hessian_times(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        self.apply_hessian(v, &mut out);
        out
    }
}

/// Quadratic with an explicit dense Hessian.
#[derive(Debug, Clone)]
pub struct DenseQuadratic {
    hessian: DenseMatrix,
    c: Vec<f64>,
    mu: Option<f64>,
    smoothness: f64,
    scale: f64,
    g_offset: f64,
}

impl DenseQuadratic {
    /// Builds `f` from `H` and `c`; `L` defaults to the largest eigenvalue of `H`.
    pub fn new(hessian: DenseMatrix, c: Vec<f64>) -> Result<Self> {
        check_len(hessian.dim(), c.len())?;
        linalg::ensure_finite(&c, "linear term c")?;
        if !hessian.is_symmetric(1e-12) {
            return Err(Error::InvalidArgument(format!(
                "hessian is not symmetric (asymmetry {:.3e})",
                hessian.asymmetry()
            )));
        }
        let smoothness = hessian
            .symmetric_eigenvalues()
            .last()
            .copied()
            .unwrap_or(1.0)
            .max(f64::MIN_POSITIVE);
        Ok(DenseQuadratic {
            hessian,
            c,
            mu: None,
            smoothness,
            scale: 1.0,
            g_offset: 0.0,
        })
    }

    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        if !(mu > 0.0 && mu <= self.smoothness) {
            return Err(Error::InvalidArgument(format!(
                "mu must satisfy 0 < mu <= L = {}, got {mu}",
                self.smoothness
            )));
        }
        self.mu = Some(mu);
        Ok(self)
    }

    pub fn with_smoothness(mut self, smoothness: f64) -> Result<Self> {
        if !(smoothness > 0.0) {
            return Err(Error::InvalidArgument("L must be positive".into()));
        }
        self.smoothness = smoothness;
        Ok(self)
    }

    pub fn with_objective(mut self, scale: f64, g_offset: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite() && g_offset.is_finite()) {
            return Err(Error::InvalidArgument(
                "scale must be positive and finite".into(),
            ));
        }
        self.scale = scale;
        self.g_offset = g_offset;
        Ok(self)
    }

    pub fn hessian(&self) -> &DenseMatrix {
        &self.hessian
    }
}

impl Quadratic for DenseQuadratic {
    fn dim(&self) -> usize {
        self.c.len()
    }

    fn linear_term(&self) -> &[f64] {
        &self.c
    }

    fn apply_hessian(&self, v: &[f64], out: &mut [f64]) {
        self.hessian.mul_vec_into(v, out);
    }

    fn mu(&self) -> Option<f64> {
        self.mu
    }

    fn smoothness(&self) -> f64 {
        self.smoothness
    }

    fn scale(&self) -> f64 {
        self.scale
    }

    fn g_offset(&self) -> f64 {
        self.g_offset
    }
}

/// The exact minimizer `θ*` with `Hθ* = c`, and the optimal values.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceSolution {
    pub theta_star: Vec<f64>,
    pub f_star: f64,
    pub g_star: f64,
    /// `‖Hθ* − c‖₂`
    pub residual_norm: f64,
}

/// `½ θᵀHθ − cᵀθ`, using one Hessian application.
pub fn evaluate_f<P: Quadratic + ?Sized>(problem: &P, theta: &[f64]) -> Result<f64> {
    check_len(problem.dim(), theta.len())?;
    linalg::ensure_finite(theta, "theta")?;
    let h_theta = problem.hessian_times(theta);
    let value = 0.5 * linalg::dot(theta, &h_theta) - linalg::dot(problem.linear_term(), theta);
    if !value.is_finite() {
        return Err(Error::NonFinite {
            quantity: "objective f(theta)".into(),
        });
    }
    Ok(value)
}

pub fn evaluate_g<P: Quadratic + ?Sized>(problem: &P, theta: &[f64]) -> Result<f64> {
    let value = problem.scale() * evaluate_f(problem, theta)? + problem.g_offset();
    if !value.is_finite() {
        return Err(Error::NonFinite {
            quantity: "objective g(theta)".into(),
        });
    }
    Ok(value)
}

/// `∇f(θ) = Hθ − c`.
pub fn gradient_f<P: Quadratic + ?Sized>(problem: &P, theta: &[f64]) -> Vec<f64> {
    let mut g = problem.hessian_times(theta);
    linalg::axpy(-1.0, problem.linear_term(), &mut g);
    g
}

/// Dense `H` with column `j` equal to `H e_j`.
pub fn materialize_hessian<P: Quadratic + ?Sized>(problem: &P) -> Result<DenseMatrix> {
    materialize_hessian_capped(problem, DEFAULT_DIMENSION_CAP)
}

pub fn materialize_hessian_capped<P: Quadratic + ?Sized>(
    problem: &P,
    cap: usize,
) -> Result<DenseMatrix> {
    let d = problem.dim();
    if d > cap {
        return Err(Error::DimensionCap { d, cap });
    }
    let mut h = DenseMatrix::zeros(d);
    let mut e = vec![0.0; d];
    let mut col = vec![0.0; d];
    for j in 0..d {
        e[j] = 1.0;
        problem.apply_hessian(&e, &mut col);
        e[j] = 0.0;
        linalg::ensure_finite(&col, "hessian column")?;
        for (i, v) in col.iter().enumerate() {
            h.set(i, j, *v);
        }
    }
    let asym = h.asymmetry();
    if asym > 1e-12 {
        return Err(Error::InvalidArgument(format!(
            "hessian_apply is not symmetric (asymmetry {asym:.3e})"
        )));
    }
    h.symmetrize();
    Ok(h)
}

/// Smallest eigenvalue of the materialized Hessian.
pub fn smallest_eigenvalue<P: Quadratic + ?Sized>(problem: &P) -> Result<f64> {
    let h = materialize_hessian(problem)?;
    Ok(h.symmetric_eigenvalues().first().copied().unwrap_or(0.0))
}

/// Solves `Hθ = c` by Cholesky factorization of the materialized Hessian with
/// iterative refinement against the matrix-free operator.
pub fn reference_minimizer<P: Quadratic + ?Sized>(problem: &P) -> Result<ReferenceSolution> {
    let h = materialize_hessian(problem)?;
    let c = problem.linear_term();
    let tolerance = REFERENCE_RESIDUAL_TOL * linalg::norm(c).max(1.0);

    let chol = h.to_nalgebra().cholesky().ok_or(Error::SingularHessian {
        residual: f64::INFINITY,
        tolerance,
    })?;

    let mut theta = vec![0.0; c.len()];
    let mut residual = c.to_vec();
    let mut residual_norm = linalg::norm(&residual);
    for _ in 0..MAX_REFINEMENT_STEPS {
        if residual_norm <= tolerance {
            break;
        }
        let delta = chol.solve(&DVector::from_column_slice(&residual));
        linalg::axpy(1.0, delta.as_slice(), &mut theta);
        let h_theta = problem.hessian_times(&theta);
        let next: Vec<f64> = c.iter().zip(&h_theta).map(|(ci, hi)| ci - hi).collect();
        let next_norm = linalg::norm(&next);
        if !next_norm.is_finite() {
            break;
        }
        residual = next;
        residual_norm = next_norm;
    }
    if !(residual_norm <= tolerance) {
        return Err(Error::SingularHessian {
            residual: residual_norm,
            tolerance,
        });
    }

    let f_star = evaluate_f(problem, &theta)?;
    let g_star = problem.scale() * f_star + problem.g_offset();
    Ok(ReferenceSolution {
        theta_star: theta,
        f_star,
        g_star,
        residual_norm,
    })
}

/// `E(θ_k) = (I − (I − αH)^k) θ*` for the recursion started at `θ₀ = 0`.
pub fn expected_iterate<P: Quadratic + ?Sized>(
    problem: &P,
    theta_star: &[f64],
    alpha: f64,
    k: usize,
) -> Result<Vec<f64>> {
    check_len(problem.dim(), theta_star.len())?;
    check_step(problem, alpha)?;
    let mut w = theta_star.to_vec();
    let mut hw = vec![0.0; w.len()];
    for _ in 0..k {
        problem.apply_hessian(&w, &mut hw);
        linalg::axpy(-alpha, &hw, &mut w);
    }
    Ok(linalg::sub(theta_star, &w))
}

/// Iterator over `E(θ_0), E(θ_1), …` computed incrementally.
pub struct ExpectedIterates<'a, P: Quadratic + ?Sized> {
    problem: &'a P,
    theta_star: &'a [f64],
    alpha: f64,
    decay: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a, P: Quadratic + ?Sized> ExpectedIterates<'a, P> {
    pub fn new(problem: &'a P, theta_star: &'a [f64], alpha: f64) -> Result<Self> {
        check_len(problem.dim(), theta_star.len())?;
        check_step(problem, alpha)?;
        Ok(ExpectedIterates {
            problem,
            theta_star,
            alpha,
            decay: theta_star.to_vec(),
            scratch: vec![0.0; theta_star.len()],
        })
    }
}

impl<P: Quadratic + ?Sized> Iterator for ExpectedIterates<'_, P> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let current = linalg::sub(self.theta_star, &self.decay);
        self.problem.apply_hessian(&self.decay, &mut self.scratch);
        linalg::axpy(-self.alpha, &self.scratch, &mut self.decay);
        Some(current)
    }
}

fn check_step<P: Quadratic + ?Sized>(problem: &P, alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha * problem.smoothness() <= 1.0 + 1e-12) {
        return Err(Error::InvalidArgument(format!(
            "step size must satisfy 0 < alpha * L <= 1, got alpha = {alpha}, L = {}",
            problem.smoothness()
        )));
    }
    Ok(())
}

/// `max(0, g(θ) − g*)`.
pub fn suboptimality<P: Quadratic + ?Sized>(
    problem: &P,
    theta: &[f64],
    reference: &ReferenceSolution,
) -> Result<f64> {
    Ok((evaluate_g(problem, theta)? - reference.g_star).max(0.0))
}

/// `½ (θ − θ*)ᵀ H (θ − θ*)`, the gap in `f` without cancellation against `f*`.
pub fn gap_in_f<P: Quadratic + ?Sized>(
    problem: &P,
    theta: &[f64],
    reference: &ReferenceSolution,
) -> Result<f64> {
    check_len(problem.dim(), theta.len())?;
    let diff = linalg::sub(theta, &reference.theta_star);
    let h_diff = problem.hessian_times(&diff);
    Ok(0.5 * linalg::dot(&diff, &h_diff))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn diag21() -> DenseQuadratic {
        DenseQuadratic::new(DenseMatrix::from_diagonal(&[2.0, 1.0]), vec![2.0, 1.0]).unwrap()
    }

    #[test]
    fn f_examples() {
        let p = diag21();
        assert_eq!(evaluate_f(&p, &[0.0, 0.0]).unwrap(), 0.0);
        assert_relative_eq!(evaluate_f(&p, &[1.0, 1.0]).unwrap(), -1.5);
        assert_relative_eq!(evaluate_f(&p, &[0.0, 1.0]).unwrap(), -0.5);
    }

    #[test]
    fn f_rejects_bad_input() {
        let p = diag21();
        assert!(matches!(
            evaluate_f(&p, &[1.0]),
            Err(Error::DimensionMismatch { expected: 2, got: 1 })
        ));
        match evaluate_f(&p, &[f64::NAN, 0.0]) {
            Err(Error::NonFinite { quantity }) => assert!(quantity.contains("theta")),
            other => panic!("unexpected {other:?}"),
        }
        match evaluate_f(&p, &[1e200, 1e200]) {
            Err(Error::NonFinite { quantity }) => assert!(quantity.contains("f(theta)")),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn g_examples() {
        let p = diag21().with_objective(2.0, 3.0).unwrap();
        assert_eq!(evaluate_g(&p, &[0.0, 0.0]).unwrap(), 3.0);
        assert_relative_eq!(evaluate_g(&p, &[1.0, 1.0]).unwrap(), 0.0);
    }

    #[test]
    fn reference_examples() {
        let id = DenseQuadratic::new(DenseMatrix::identity(2), vec![3.0, 4.0]).unwrap();
        let r = reference_minimizer(&id).unwrap();
        assert_relative_eq!(r.theta_star[0], 3.0, epsilon = 1e-14);
        assert_relative_eq!(r.theta_star[1], 4.0, epsilon = 1e-14);
        assert_relative_eq!(r.f_star, -12.5, epsilon = 1e-14);

        let r = reference_minimizer(&diag21()).unwrap();
        assert_relative_eq!(r.theta_star[0], 1.0, epsilon = 1e-14);
        assert_relative_eq!(r.theta_star[1], 1.0, epsilon = 1e-14);
        assert_relative_eq!(r.f_star, -1.5, epsilon = 1e-14);
        assert_relative_eq!(r.f_star, -0.5 * linalg::dot(&r.theta_star, &[2.0, 1.0]));
    }

    #[test]
    fn singular_hessian_is_reported() {
        let p = DenseQuadratic::new(DenseMatrix::from_diagonal(&[1.0, 0.0]), vec![1.0, 1.0])
            .unwrap();
        let err = reference_minimizer(&p).unwrap_err();
        assert!(matches!(err, Error::SingularHessian { .. }));
        assert!(err.to_string().contains("regularization"));
    }

    #[test]
    fn ill_conditioned_hessian_refined() {
        let p = DenseQuadratic::new(DenseMatrix::from_diagonal(&[1.0, 1e-9]), vec![1.0, 1.0])
            .unwrap();
        let r = reference_minimizer(&p).unwrap();
        assert!(r.residual_norm <= REFERENCE_RESIDUAL_TOL * linalg::norm(&[1.0, 1.0]));
    }

    #[test]
    fn materialize_identity_and_cap() {
        let id = DenseQuadratic::new(DenseMatrix::identity(3), vec![0.0; 3]).unwrap();
        assert_eq!(materialize_hessian(&id).unwrap(), DenseMatrix::identity(3));
        assert!(matches!(
            materialize_hessian_capped(&id, 2),
            Err(Error::DimensionCap { d: 3, cap: 2 })
        ));
    }

    #[test]
    fn expected_iterate_examples() {
        let h = DenseQuadratic::new(DenseMatrix::from_diagonal(&[0.2, 0.8]), vec![0.2, 0.8])
            .unwrap()
            .with_smoothness(1.0)
            .unwrap();
        let star = [1.0, 1.0];
        assert_eq!(expected_iterate(&h, &star, 1.0, 0).unwrap(), vec![0.0, 0.0]);
        let e2 = expected_iterate(&h, &star, 1.0, 2).unwrap();
        assert_relative_eq!(e2[0], 1.0 - 0.8 * 0.8, epsilon = 1e-15);
        assert_relative_eq!(e2[1], 1.0 - 0.2 * 0.2, epsilon = 1e-15);
        // long horizon: within (1 - αμ)^k ‖θ*‖
        let e = expected_iterate(&h, &star, 1.0, 200).unwrap();
        let err = linalg::norm(&linalg::sub(&e, &star));
        assert!(err <= 0.8f64.powi(200) * linalg::norm(&star) + 1e-15);
        assert!(expected_iterate(&h, &star, 1.5, 2).is_err());
    }

    #[test]
    fn expected_iterates_iterator_matches_direct() {
        let h = DenseQuadratic::new(DenseMatrix::from_diagonal(&[0.2, 0.8]), vec![0.2, 0.8])
            .unwrap()
            .with_smoothness(1.0)
            .unwrap();
        let star = [1.0, -2.0];
        for (k, e) in ExpectedIterates::new(&h, &star, 0.7)
            .unwrap()
            .take(20)
            .enumerate()
        {
            let direct = expected_iterate(&h, &star, 0.7, k).unwrap();
            for (a, b) in e.iter().zip(&direct) {
                assert_relative_eq!(a, b, epsilon = 1e-15);
            }
        }
    }

    #[test]
    fn suboptimality_examples() {
        let p = diag21();
        let r = reference_minimizer(&p).unwrap();
        assert_eq!(suboptimality(&p, &r.theta_star, &r).unwrap(), 0.0);
        assert_relative_eq!(suboptimality(&p, &[0.0, 0.0], &r).unwrap(), 1.5, epsilon = 1e-14);
        let theta = [0.3, -0.7];
        assert_relative_eq!(
            suboptimality(&p, &theta, &r).unwrap(),
            gap_in_f(&p, &theta, &r).unwrap(),
            max_relative = 1e-9
        );
    }

    #[test]
    fn asymmetric_hessian_rejected() {
        let h = DenseMatrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(DenseQuadratic::new(h, vec![0.0, 0.0]).is_err());
    }
}

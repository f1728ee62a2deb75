//! Stochastic Hessian oracles built from a data matrix.
//!
//! Every oracle has the form
//!
//! ```text
//! H   = (λ + ρ)⁻¹ (λ I + (ρ / T) XᵀX)          T = tr(XᵀX)
//! Q_i = (λ + ρ)⁻¹ (λ I + ρ u_i u_iᵀ)           u_i = x_i / ‖x_i‖,  P(i) = ‖x_i‖² / T
//! ```
//!
//! so `E(Q_i) = H` and `0 ≤ Q_i ≤ I` (L = 1). Least squares and LDA use
//! `λ = 0`; ridge uses `ρ = L̄ = T / n`; regularized LDA uses `ρ = T`.
//! Rows with zero norm have zero sampling weight and never produce a `u_i`.

use crate::error::{check_len, Error, Result};
use crate::linalg::{self, kahan_sum};
use crate::quadratic::{self, DenseQuadratic, Quadratic};
use crate::sampling::{AliasTable, RngStream};

/// Row-major `n × d` data matrix with cached squared row norms.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignMatrix {
    n: usize,
    d: usize,
    values: Vec<f64>,
    row_sq_norms: Vec<f64>,
    trace: f64,
}

impl DesignMatrix {
    pub fn new(n: usize, d: usize, values: Vec<f64>) -> Result<Self> {
        if n == 0 || d == 0 {
            return Err(Error::InvalidArgument(
                "design matrix needs n >= 1 and d >= 1".into(),
            ));
        }
        check_len(n * d, values.len())?;
        linalg::ensure_finite(&values, "design matrix")?;
        let row_sq_norms: Vec<f64> = values.chunks_exact(d).map(linalg::norm_sq).collect();
        let trace = kahan_sum(row_sq_norms.iter().copied());
        if !(trace > 0.0) {
            return Err(Error::InvalidArgument(
                "design matrix is zero (tr(XᵀX) = 0)".into(),
            ));
        }
        Ok(DesignMatrix {
            n,
            d,
            values,
            row_sq_norms,
            trace,
        })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let d = rows.first().map_or(0, Vec::len);
        let mut values = Vec::with_capacity(rows.len() * d);
        for row in rows {
            check_len(d, row.len())?;
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), d, values)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn d(&self) -> usize {
        self.d
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d..(i + 1) * self.d]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks_exact(self.d)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn row_sq_norms(&self) -> &[f64] {
        &self.row_sq_norms
    }

    /// `tr(XᵀX)`
    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// `L̄ = tr(XᵀX) / n`, the mean squared row norm.
    pub fn lbar(&self) -> f64 {
        self.trace / self.n as f64
    }

    pub fn max_row_sq_norm(&self) -> f64 {
        self.row_sq_norms.iter().copied().fold(0.0, f64::max)
    }

    /// `X v`
    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        self.rows().map(|r| linalg::dot(r, v)).collect()
    }

    /// `Xᵀ r`
    pub fn tmul_vec(&self, r: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        for (row, ri) in self.rows().zip(r) {
            linalg::axpy(*ri, row, &mut out);
        }
        out
    }

    /// `out = XᵀX v`, one pass over the rows.
    pub fn gram_apply(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for row in self.rows() {
            let s = linalg::dot(row, v);
            linalg::axpy(s, row, out);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OracleKind {
    LeastSquares,
    Ridge,
    Lda,
}

impl OracleKind {
    pub fn as_str(self) -> &'static str {
        match self {
            OracleKind::LeastSquares => "least_squares",
            OracleKind::Ridge => "ridge",
            OracleKind::Lda => "lda",
        }
    }
}

/// A quadratic problem whose Hessian is the mean of cheap random matrices.
pub trait StochasticHessian: Quadratic {
    /// Number of stochastic gradients one full gradient costs.
    fn sample_size(&self) -> usize;

    /// `out = Q v` for a freshly sampled `Q`.
    fn apply_sampled(&self, rng: &mut RngStream, v: &[f64], out: &mut [f64]);

    /// `c − H θ₀`.
    fn shifted_gradient_anchor(&self, theta0: &[f64]) -> Vec<f64> {
        let mut out = self.hessian_times(theta0);
        for (o, ci) in out.iter_mut().zip(self.linear_term()) {
            *o = ci - *o;
        }
        out
    }
}

/// The deterministic instance `Q ≡ H`.
impl StochasticHessian for DenseQuadratic {
    fn sample_size(&self) -> usize {
        1
    }

    fn apply_sampled(&self, _rng: &mut RngStream, v: &[f64], out: &mut [f64]) {
        self.apply_hessian(v, out);
    }
}

#[derive(Debug, Clone)]
pub struct StochasticOracle {
    kind: OracleKind,
    design: DesignMatrix,
    response: Option<Vec<f64>>,
    c: Vec<f64>,
    sampler: AliasTable,
    lambda: f64,
    data_weight: f64,
    mu_known: Option<f64>,
    scale: f64,
    g_offset: f64,
}

/// Least squares `g(θ) = ‖Xθ − Y‖² / 2n`.
pub fn least_squares_oracle(design: DesignMatrix, response: Vec<f64>) -> Result<StochasticOracle> {
    check_len(design.n(), response.len())?;
    linalg::ensure_finite(&response, "response")?;
    let t = design.trace();
    let c: Vec<f64> = design.tmul_vec(&response).iter().map(|v| v / t).collect();
    let g_offset = linalg::norm_sq(&response) / (2.0 * design.n() as f64);
    let lbar = design.lbar();
    StochasticOracle::assemble(
        OracleKind::LeastSquares,
        design,
        Some(response),
        c,
        0.0,
        lbar,
        lbar,
        g_offset,
    )
}

/// Ridge `g(θ) = ‖Xθ − Y‖² / 2n + λ‖θ‖² / 2`; `μ = λ / (λ + L̄)`.
pub fn ridge_oracle(
    design: DesignMatrix,
    response: Vec<f64>,
    lambda: f64,
) -> Result<StochasticOracle> {
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "ridge requires lambda > 0, got {lambda}"
        )));
    }
    check_len(design.n(), response.len())?;
    linalg::ensure_finite(&response, "response")?;
    let n = design.n() as f64;
    let lbar = design.lbar();
    let denom = lambda * n + lbar * n;
    let c: Vec<f64> = design
        .tmul_vec(&response)
        .iter()
        .map(|v| v / denom)
        .collect();
    let g_offset = linalg::norm_sq(&response) / (2.0 * n);
    StochasticOracle::assemble(
        OracleKind::Ridge,
        design,
        Some(response),
        c,
        lambda,
        lbar,
        lambda + lbar,
        g_offset,
    )
}

impl StochasticOracle {
    #[allow(clippy::too_many_arguments)]
    fn assemble(
        kind: OracleKind,
        design: DesignMatrix,
        response: Option<Vec<f64>>,
        c: Vec<f64>,
        lambda: f64,
        data_weight: f64,
        scale: f64,
        g_offset: f64,
    ) -> Result<Self> {
        linalg::ensure_finite(&c, "linear term c")?;
        let sampler = AliasTable::new(design.row_sq_norms())?;
        let mu_known = (lambda > 0.0).then(|| lambda / (lambda + data_weight));
        Ok(StochasticOracle {
            kind,
            design,
            response,
            c,
            sampler,
            lambda,
            data_weight,
            mu_known,
            scale,
            g_offset,
        })
    }

    pub fn kind(&self) -> OracleKind {
        self.kind
    }

    pub fn design(&self) -> &DesignMatrix {
        &self.design
    }

    pub fn response(&self) -> Option<&[f64]> {
        self.response.as_deref()
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// `L̄` of the underlying design.
    pub fn lbar(&self) -> f64 {
        self.design.lbar()
    }

    pub fn sampler(&self) -> &AliasTable {
        &self.sampler
    }

    /// Sampling probabilities `p_i = ‖x_i‖² / T`.
    pub fn probabilities(&self) -> Vec<f64> {
        let t = self.design.trace();
        self.design.row_sq_norms().iter().map(|s| s / t).collect()
    }

    #[inline]
    pub fn sample_index(&self, rng: &mut RngStream) -> usize {
        self.sampler.sample(rng)
    }

    /// `out = Q_i v` for a given row index.
    #[inline]
    pub fn apply_q_at(&self, i: usize, v: &[f64], out: &mut [f64]) {
        let row = self.design.row(i);
        let s = self.design.row_sq_norms()[i];
        let coef = linalg::dot(row, v) / s;
        if self.lambda == 0.0 {
            for (o, x) in out.iter_mut().zip(row) {
                *o = coef * x;
            }
        } else {
            let inv = 1.0 / (self.lambda + self.data_weight);
            let lam = self.lambda;
            let wcoef = self.data_weight * coef;
            for ((o, x), vi) in out.iter_mut().zip(row).zip(v) {
                *o = inv * (lam * vi + wcoef * x);
            }
        }
    }

    /// Dense `Q_i`, for spectral checks on small problems.
    pub fn materialize_q_at(&self, i: usize) -> linalg::DenseMatrix {
        let d = self.design.d();
        let mut m = linalg::DenseMatrix::zeros(d);
        let mut e = vec![0.0; d];
        let mut col = vec![0.0; d];
        for j in 0..d {
            e[j] = 1.0;
            self.apply_q_at(i, &e, &mut col);
            e[j] = 0.0;
            for (r, v) in col.iter().enumerate() {
                m.set(r, j, *v);
            }
        }
        m
    }
}

impl Quadratic for StochasticOracle {
    fn dim(&self) -> usize {
        self.design.d()
    }

    fn linear_term(&self) -> &[f64] {
        &self.c
    }

    fn apply_hessian(&self, v: &[f64], out: &mut [f64]) {
        self.design.gram_apply(v, out);
        let t = self.design.trace();
        if self.lambda == 0.0 {
            out.iter_mut().for_each(|o| *o /= t);
        } else {
            let inv = 1.0 / (self.lambda + self.data_weight);
            let w = self.data_weight / t;
            for (o, vi) in out.iter_mut().zip(v) {
                *o = inv * (self.lambda * vi + w * *o);
            }
        }
    }

    fn mu(&self) -> Option<f64> {
        self.mu_known
    }

    fn smoothness(&self) -> f64 {
        1.0
    }

    fn scale(&self) -> f64 {
        self.scale
    }

    fn g_offset(&self) -> f64 {
        self.g_offset
    }
}

impl StochasticHessian for StochasticOracle {
    fn sample_size(&self) -> usize {
        self.design.n()
    }

    fn apply_sampled(&self, rng: &mut RngStream, v: &[f64], out: &mut [f64]) {
        let i = self.sample_index(rng);
        self.apply_q_at(i, v, out);
    }
}

/// Class statistics for linear discriminant analysis.
///
/// Classes are labelled `1..=K`.
#[derive(Debug, Clone)]
pub struct LdaModel {
    class_means: Vec<Vec<f64>>,
    class_counts: Vec<usize>,
    centered_design: DesignMatrix,
    discriminant_vectors: Vec<Option<Vec<f64>>>,
    trace_sigma: f64,
}

impl LdaModel {
    pub fn fit(points: &[Vec<f64>], labels: &[usize]) -> Result<Self> {
        check_len(points.len(), labels.len())?;
        let n = points.len();
        let d = points.first().map_or(0, Vec::len);
        let classes = labels.iter().copied().max().unwrap_or(0);
        if labels.contains(&0) {
            return Err(Error::InvalidArgument("class labels start at 1".into()));
        }
        if n <= classes {
            return Err(Error::InvalidArgument(format!(
                "LDA needs more points than classes (n = {n}, K = {classes})"
            )));
        }
        let mut sums = vec![vec![0.0; d]; classes];
        let mut counts = vec![0usize; classes];
        for (x, &g) in points.iter().zip(labels) {
            check_len(d, x.len())?;
            linalg::axpy(1.0, x, &mut sums[g - 1]);
            counts[g - 1] += 1;
        }
        if let Some(empty) = counts.iter().position(|&c| c == 0) {
            return Err(Error::InvalidArgument(format!(
                "class {} has no observations",
                empty + 1
            )));
        }
        let means: Vec<Vec<f64>> = sums
            .into_iter()
            .zip(&counts)
            .map(|(s, &c)| s.into_iter().map(|v| v / c as f64).collect())
            .collect();

        let inv_sqrt = 1.0 / ((n - classes) as f64).sqrt();
        let mut values = Vec::with_capacity(n * d);
        for (x, &g) in points.iter().zip(labels) {
            values.extend(x.iter().zip(&means[g - 1]).map(|(a, m)| (a - m) * inv_sqrt));
        }
        let centered_design = DesignMatrix::new(n, d, values).map_err(|e| match e {
            Error::InvalidArgument(_) => Error::InvalidArgument(
                "pooled covariance is zero; every class is a single repeated point".into(),
            ),
            other => other,
        })?;
        let trace_sigma = centered_design.trace();
        Ok(LdaModel {
            class_means: means,
            class_counts: counts,
            centered_design,
            discriminant_vectors: vec![None; classes],
            trace_sigma,
        })
    }

    pub fn classes(&self) -> usize {
        self.class_counts.len()
    }

    pub fn class_means(&self) -> &[Vec<f64>] {
        &self.class_means
    }

    pub fn class_counts(&self) -> &[usize] {
        &self.class_counts
    }

    pub fn centered_design(&self) -> &DesignMatrix {
        &self.centered_design
    }

    /// `tr(Σ̂)`
    pub fn trace_sigma(&self) -> f64 {
        self.trace_sigma
    }

    /// Oracle with `H = tr(Σ̂)⁻¹ Σ̂` and `c = tr(Σ̂)⁻¹ μ̂_k`, or its
    /// regularized form `H = (λ + tr Σ̂)⁻¹(λI + Σ̂)` when `lambda > 0`.
    /// The objective is measured in `f` directly.
    pub fn oracle(&self, class: usize, lambda: f64) -> Result<StochasticOracle> {
        let mean = self.class_mean(class)?;
        if !(lambda >= 0.0 && lambda.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "LDA regularization must be >= 0, got {lambda}"
            )));
        }
        let t = self.trace_sigma;
        let c: Vec<f64> = mean.iter().map(|m| m / (lambda + t)).collect();
        StochasticOracle::assemble(
            OracleKind::Lda,
            self.centered_design.clone(),
            None,
            c,
            lambda,
            t,
            1.0,
            0.0,
        )
    }

    fn class_mean(&self, class: usize) -> Result<&[f64]> {
        if class == 0 || class > self.classes() {
            return Err(Error::InvalidArgument(format!(
                "class {class} out of range 1..={}",
                self.classes()
            )));
        }
        Ok(&self.class_means[class - 1])
    }

    /// Stores `Σ̂⁻¹ μ̂_k` for class `k`.
    pub fn set_discriminant(&mut self, class: usize, vector: Vec<f64>) -> Result<()> {
        self.class_mean(class)?;
        check_len(self.centered_design.d(), vector.len())?;
        self.discriminant_vectors[class - 1] = Some(vector);
        Ok(())
    }

    pub fn discriminant(&self, class: usize) -> Option<&[f64]> {
        self.discriminant_vectors.get(class.wrapping_sub(1))?.as_deref()
    }

    /// Solves every discriminant vector exactly.
    pub fn solve_reference(&mut self) -> Result<()> {
        for k in 1..=self.classes() {
            let oracle = self.oracle(k, 0.0)?;
            let reference = quadratic::reference_minimizer(&oracle)?;
            self.set_discriminant(k, reference.theta_star)?;
        }
        Ok(())
    }

    /// `δ_k(x) = (x − ½μ̂_k)ᵀ Σ̂⁻¹μ̂_k + log(n_k / n)`.
    pub fn discriminant_scores(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_len(self.centered_design.d(), x.len())?;
        let n: usize = self.class_counts.iter().sum();
        (1..=self.classes())
            .map(|k| {
                let w = self.discriminant(k).ok_or_else(|| {
                    Error::InvalidArgument(format!("discriminant for class {k} is not solved"))
                })?;
                let mean = &self.class_means[k - 1];
                let shifted: f64 = x
                    .iter()
                    .zip(mean)
                    .zip(w)
                    .map(|((xi, mi), wi)| (xi - 0.5 * mi) * wi)
                    .sum();
                Ok(shifted + (self.class_counts[k - 1] as f64 / n as f64).ln())
            })
            .collect()
    }

    /// `argmax_k δ_k(x)`, ties to the lowest class.
    pub fn classify(&self, x: &[f64]) -> Result<usize> {
        let scores = self.discriminant_scores(x)?;
        let mut best = 0;
        for (k, s) in scores.iter().enumerate() {
            if *s > scores[best] {
                best = k;
            }
        }
        Ok(best + 1)
    }
}

/// Fits the class statistics and returns the oracle for `target_class`.
pub fn lda_oracle(
    points: &[Vec<f64>],
    labels: &[usize],
    target_class: usize,
) -> Result<(StochasticOracle, LdaModel)> {
    let model = LdaModel::fit(points, labels)?;
    let oracle = model.oracle(target_class, 0.0)?;
    Ok((oracle, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadratic::{evaluate_g, materialize_hessian, reference_minimizer};
    use approx::assert_relative_eq;

    fn x2() -> DesignMatrix {
        DesignMatrix::from_rows(&[vec![1.0, 0.0], vec![0.0, 2.0]]).unwrap()
    }

    #[test]
    fn design_invariants() {
        let x = DesignMatrix::from_rows(&[vec![1.0, 2.0], vec![3.0, -1.0], vec![0.5, 0.5]])
            .unwrap();
        assert_relative_eq!(x.trace(), 5.0 + 10.0 + 0.5);
        assert_eq!(x.row_sq_norms(), &[5.0, 10.0, 0.5]);
        assert!(DesignMatrix::from_rows(&[vec![0.0, 0.0]]).is_err());
    }

    #[test]
    fn least_squares_example() {
        let o = least_squares_oracle(x2(), vec![1.0, 2.0]).unwrap();
        assert_relative_eq!(o.linear_term()[0], 0.2);
        assert_relative_eq!(o.linear_term()[1], 0.8);
        let p = o.probabilities();
        assert_relative_eq!(p[0], 0.2);
        assert_relative_eq!(p[1], 0.8);
        let h = materialize_hessian(&o).unwrap();
        assert_relative_eq!(h.get(0, 0), 0.2);
        assert_relative_eq!(h.get(1, 1), 0.8);
        assert_eq!(h.get(0, 1), 0.0);
        assert_eq!(o.smoothness(), 1.0);
        assert_eq!(o.mu(), None);
    }

    #[test]
    fn identity_design_is_uniform() {
        let rows: Vec<Vec<f64>> = (0..4)
            .map(|i| (0..4).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
            .collect();
        let o = least_squares_oracle(DesignMatrix::from_rows(&rows).unwrap(), vec![1.0; 4])
            .unwrap();
        assert!(o.probabilities().iter().all(|p| (p - 0.25).abs() < 1e-15));
        let h = materialize_hessian(&o).unwrap();
        for i in 0..4 {
            assert_relative_eq!(h.get(i, i), 0.25);
        }
    }

    #[test]
    fn ridge_example() {
        let o = ridge_oracle(x2(), vec![1.0, 2.0], 1.0).unwrap();
        assert_relative_eq!(o.mu().unwrap(), 1.0 / 3.5);
        let h = materialize_hessian(&o).unwrap();
        assert_relative_eq!(h.get(0, 0), 1.5 / 3.5, epsilon = 1e-15);
        assert_relative_eq!(h.get(1, 1), 3.0 / 3.5, epsilon = 1e-15);
        assert!(ridge_oracle(x2(), vec![1.0, 2.0], 0.0).is_err());
        assert!(ridge_oracle(x2(), vec![1.0, 2.0], -1.0).is_err());
    }

    #[test]
    fn ridge_large_lambda_is_identity() {
        let o = ridge_oracle(x2(), vec![1.0, 2.0], 1e12).unwrap();
        assert!(o.mu().unwrap() > 1.0 - 1e-11);
        let mut out = [0.0; 2];
        o.apply_q_at(1, &[1.0, 1.0], &mut out);
        assert_relative_eq!(out[0], 1.0, epsilon = 1e-11);
        assert_relative_eq!(out[1], 1.0, epsilon = 1e-11);
    }

    #[test]
    fn ridge_g_offset_on_scalar_data() {
        let x = DesignMatrix::from_rows(&[vec![2.0]]).unwrap();
        let o = ridge_oracle(x, vec![4.0], 1.0).unwrap();
        assert_relative_eq!(evaluate_g(&o, &[0.0]).unwrap(), 8.0);
        // g(θ) = (2θ − 4)² / 2 + θ² / 2
        let theta = 0.7;
        let direct = (2.0f64 * theta - 4.0).powi(2) / 2.0 + theta * theta / 2.0;
        assert_relative_eq!(evaluate_g(&o, &[theta]).unwrap(), direct, max_relative = 1e-12);
    }

    #[test]
    fn q_application_basics() {
        let x = DesignMatrix::from_rows(&[vec![3.0, 4.0], vec![1.0, -1.0]]).unwrap();
        let o = least_squares_oracle(x, vec![1.0, 1.0]).unwrap();
        let mut out = [1.0; 2];
        o.apply_q_at(0, &[0.0, 0.0], &mut out);
        assert_eq!(out, [0.0, 0.0]);
        let u = [0.6, 0.8];
        o.apply_q_at(0, &u, &mut out);
        assert_relative_eq!(out[0], 0.6, epsilon = 1e-15);
        assert_relative_eq!(out[1], 0.8, epsilon = 1e-15);
    }

    #[test]
    fn anchor_examples() {
        let x = DesignMatrix::from_rows(&[vec![1.0, 0.5], vec![0.2, 2.0], vec![1.0, 1.0]])
            .unwrap();
        let o = ridge_oracle(x, vec![1.0, -1.0, 0.5], 0.3).unwrap();
        assert_eq!(o.shifted_gradient_anchor(&[0.0, 0.0]), o.linear_term());
        let r = reference_minimizer(&o).unwrap();
        let a = o.shifted_gradient_anchor(&r.theta_star);
        assert!(linalg::norm(&a) <= 1e-12);
    }

    #[test]
    fn lda_hand_example() {
        let points = vec![
            vec![0.0, 0.0],
            vec![2.0, 0.0],
            vec![0.0, 2.0],
            vec![2.0, 2.0],
        ];
        let labels = [1, 1, 2, 2];
        let (o, model) = lda_oracle(&points, &labels, 1).unwrap();
        assert_eq!(model.class_means()[0], vec![1.0, 0.0]);
        assert_eq!(model.class_means()[1], vec![1.0, 2.0]);
        let s = 1.0 / 2f64.sqrt();
        let expected = [[-s, 0.0], [s, 0.0], [-s, 0.0], [s, 0.0]];
        for (row, e) in model.centered_design().rows().zip(expected) {
            assert_relative_eq!(row[0], e[0], epsilon = 1e-15);
            assert_relative_eq!(row[1], e[1], epsilon = 1e-15);
        }
        // Σ̂ = diag(2, 0): only the first coordinate carries spread
        assert_relative_eq!(model.trace_sigma(), 2.0, epsilon = 1e-14);
        assert_eq!(o.kind(), OracleKind::Lda);
        assert_eq!(o.scale(), 1.0);
        assert_eq!(o.g_offset(), 0.0);
    }

    #[test]
    fn lda_errors() {
        let repeated = vec![vec![1.0, 1.0], vec![1.0, 1.0], vec![3.0, 0.0], vec![3.0, 0.0]];
        let err = lda_oracle(&repeated, &[1, 1, 2, 2], 1).unwrap_err();
        assert!(err.to_string().contains("pooled covariance"));
        let pts = vec![vec![0.0], vec![1.0], vec![2.0]];
        assert!(LdaModel::fit(&pts, &[1, 3, 3]).is_err()); // class 2 empty
        assert!(LdaModel::fit(&pts[..2], &[1, 2]).is_err()); // n <= K
        assert!(LdaModel::fit(&pts, &[0, 1, 1]).is_err());
    }

    #[test]
    fn lda_classify_rules() {
        let points = vec![
            vec![0.0, 0.0],
            vec![0.3, -0.2],
            vec![-0.3, 0.2],
            vec![4.0, 4.0],
            vec![4.3, 4.1],
            vec![3.7, 4.2],
        ];
        let labels = [1, 1, 1, 2, 2, 2];
        let mut model = LdaModel::fit(&points, &labels).unwrap();
        assert!(model.classify(&[0.0, 0.0]).is_err());
        model.solve_reference().unwrap();
        for k in 1..=2 {
            let mean = model.class_means()[k - 1].clone();
            assert_eq!(model.classify(&mean).unwrap(), k);
        }

        let single = LdaModel::fit(&[vec![0.0], vec![1.0], vec![3.0]], &[1, 1, 1]).unwrap();
        let mut single = single;
        single.solve_reference().unwrap();
        assert_eq!(single.classify(&[100.0]).unwrap(), 1);

        // identical discriminants and counts tie to class 1
        let mut tied = LdaModel::fit(&points, &labels).unwrap();
        tied.set_discriminant(1, vec![0.0, 0.0]).unwrap();
        tied.set_discriminant(2, vec![0.0, 0.0]).unwrap();
        assert_eq!(tied.classify(&[5.0, 5.0]).unwrap(), 1);
    }
}

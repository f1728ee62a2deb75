//! Variance-reduced stochastic solvers for quadratic objectives whose Hessian
//! is the expectation of a random symmetric matrix.
//!
//! The central method, [`solvers::qsvrg`], runs epochs of `m` inner steps
//! anchored at the average of the previous epoch's iterates. Least squares,
//! ridge regression and linear discriminant analysis are expressed as
//! [`oracles::StochasticOracle`]s whose sampled Hessians cost O(d) to apply.

pub mod datasets;
pub mod error;
pub mod linalg;
pub mod oracles;
pub mod quadratic;
pub mod sampling;
pub mod solvers;
pub mod verify;

pub use error::{Error, Result};
pub use oracles::{
    least_squares_oracle, lda_oracle, ridge_oracle, DesignMatrix, LdaModel, OracleKind,
    StochasticHessian, StochasticOracle,
};
pub use quadratic::{
    evaluate_f, evaluate_g, expected_iterate, materialize_hessian, reference_minimizer,
    suboptimality, DenseQuadratic, Quadratic, ReferenceSolution,
};
pub use sampling::{AliasTable, RngStream};

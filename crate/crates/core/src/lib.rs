//! Fast Euclidean projections onto `ℓ_{1,q}` mixed-norm balls and the
//! constrained first-order solvers built on them.
//!
//! The projection onto `{x : Σ_i ‖x^i‖_q <= γ}` is computed by finding the
//! root of a monotone scalar residual in the prox multiplier `θ`
//! ([`ballproj::project_mixed_ball`]). The same machinery projects block
//! lists of matrices onto Schatten mixed-norm balls. Two solvers use the
//! projection: spectral projected gradient and mini-batch stochastic
//! projected gradient ([`solvers`]), applied to the multitask lasso in
//! [`mtl`].

pub mod ballproj;
pub mod error;
pub mod grouped;
pub mod io;
pub mod matrix;
pub mod mtl;
pub mod norms;
pub mod prox;
pub mod solvers;

pub use ballproj::{
    find_root, project_matrix_mixed_ball, project_mixed_ball, prox_schatten, svd,
    ProjectionResult, RootConfig, Svd,
};
pub use error::{Error, Result};
pub use grouped::{make_grouped, GroupPartition, GroupedVector};
pub use matrix::{sparse_matvec, DenseMatrix, SparseMatrix};
pub use mtl::{
    generate_synthetic, load_mtl, mtl_gradient, mtl_objective, mtl_stoch_gradient, save_mtl,
    MtlProblem, MtlTask, SynthSpec,
};
pub use norms::{
    dual_exponent, dual_mixed_norm, dual_witness, lq_norm, matrix_mixed_norm, mixed_norm,
    schatten_norm, Exponent, NormSpec,
};
pub use prox::{
    project_l1_ball, project_lq_ball, prox_grouped, prox_l1, prox_l2, prox_linf, prox_lq,
    ProxTolerance,
};
pub use solvers::{
    sgd_solve, spg_solve, BallConstraint, ConstrainedProblem, IterRecord, Objective, SgdOptions,
    SolverReport, SpgOptions, StochasticObjective, Termination,
};

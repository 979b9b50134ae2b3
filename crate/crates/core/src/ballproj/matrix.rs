//! Schatten-norm prox and projection onto matrix `(1, q)` mixed-norm balls.
//!
//! Both the Frobenius norm and Schatten norms are unitarily invariant, so the
//! prox acts on singular values alone and the ball projection reduces to the
//! vector projection of the stacked singular values, one group per block.

use rayon::prelude::*;

use super::{project_mixed_ball, ProjectionResult, RootConfig};
use crate::ballproj::svd::{svd, Svd};
use crate::error::{Error, Result};
use crate::grouped::{GroupPartition, GroupedVector};
use crate::matrix::DenseMatrix;
use crate::norms::{lq_norm, Exponent};
use crate::prox::{prox_lq, ProxTolerance};

/// `argmin ½‖X − Y‖_F² + θ‖X‖_q` with `‖·‖_q` the Schatten norm. For `q = 1`
/// this is singular value thresholding.
pub fn prox_schatten(y: &DenseMatrix, theta: f64, q: Exponent, tol: &ProxTolerance) -> Result<DenseMatrix> {
    let d = svd(y)?;
    let s = prox_lq(&d.singular_values, theta, q, tol)?;
    Ok(d.reconstruct_with(&s))
}

/// Projection of `{X^i}` onto `{Σ_i ‖X^i‖_q <= γ}`.
///
/// Each block is decomposed once. For interior inputs the original blocks
/// are returned untouched.
pub fn project_matrix_mixed_ball(
    blocks: &[DenseMatrix],
    gamma: f64,
    q: Exponent,
    cfg: &RootConfig,
    tol: &ProxTolerance,
) -> Result<ProjectionResult<Vec<DenseMatrix>>> {
    if blocks.is_empty() {
        return Err(Error::InvalidArgument("empty block list".into()));
    }
    let decomps: Vec<Svd> = blocks.par_iter().map(svd).collect::<Result<_>>()?;
    let sizes: Vec<usize> = decomps.iter().map(|d| d.singular_values.len()).collect();
    let partition = GroupPartition::from_sizes(&sizes)?;
    let sigma = GroupedVector::new(
        decomps.iter().flat_map(|d| d.singular_values.iter().copied()).collect(),
        partition,
    )?;

    let total: f64 = sigma.groups().map(|g| lq_norm(g, q)).sum();
    if total <= gamma {
        return Ok(ProjectionResult {
            x: blocks.to_vec(),
            theta: 0.0,
            residual: 0.0,
            evaluations: 0,
            interior: true,
        });
    }

    let proj = project_mixed_ball(&sigma, gamma, q, cfg, tol)?;
    let x = decomps
        .par_iter()
        .enumerate()
        .map(|(i, d)| d.reconstruct_with(proj.x.group(i)))
        .collect();
    Ok(ProjectionResult {
        x,
        theta: proj.theta,
        residual: proj.residual,
        evaluations: proj.evaluations,
        interior: false,
    })
}

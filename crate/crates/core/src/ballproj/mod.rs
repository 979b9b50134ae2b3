//! Projection onto `ℓ_{1,q}` mixed-norm balls via proximity.
//!
//! For an infeasible `y` the projection equals `prox_grouped(y, θ*, q)` where
//! `θ*` is the unique root of
//!
//! ```text
//! g(θ) = ‖prox_grouped(y, θ, q)‖_{1,q} − γ
//! ```
//!
//! on `[0, θ_max]`, `θ_max = ‖y‖_{∞,q*}`. `g` is nonincreasing there, positive
//! at 0 and equal to `−γ` at `θ_max`, so a safeguarded bracketing search
//! always succeeds.

pub mod matrix;
pub mod root;
pub mod svd;

use std::cell::RefCell;

use rayon::prelude::*;

pub use matrix::{project_matrix_mixed_ball, prox_schatten};
pub use root::{find_root, find_root_with_hint, RootConfig, RootSolution};
pub use svd::{svd, Svd};

use crate::error::{Error, Result};
use crate::grouped::GroupedVector;
use crate::norms::{lq_norm, mixed_norm, Exponent, NormSpec};
use crate::prox::{
    l1_threshold_sorted, prox_grouped, prox_lq, sorted_abs_with_prefix, ProxTolerance,
};

/// Output of a ball projection.
#[derive(Clone, Debug, PartialEq)]
pub struct ProjectionResult<T> {
    pub x: T,
    /// Optimal multiplier `θ*`; zero for interior inputs.
    pub theta: f64,
    /// `|‖x‖_{1,q} − γ|` at the returned point; zero for interior inputs.
    pub residual: f64,
    /// Number of residual evaluations (each one a full grouped prox).
    pub evaluations: usize,
    /// The input already satisfied the constraint and was returned unchanged.
    pub interior: bool,
}

enum GroupCache {
    /// Per-group magnitudes for soft thresholding.
    One,
    /// Per-group Euclidean norms.
    Two(Vec<f64>),
    /// Per-group sorted magnitudes, their prefix sums and the group `ℓ₁` norms.
    Inf {
        sorted: Vec<f64>,
        prefix: Vec<f64>,
        l1: Vec<f64>,
    },
    General,
}

/// The residual `g(θ)` of a fixed projection problem.
///
/// Per-group data that does not depend on `θ` (norms, sorted magnitudes) is
/// computed once, so each evaluation for `q ∈ {1, 2, ∞}` costs far less than
/// a full prox.
pub struct MixedBallResidual<'a> {
    y: &'a GroupedVector,
    gamma: f64,
    q: Exponent,
    tol: ProxTolerance,
    theta_max: f64,
    cache: GroupCache,
}

impl<'a> MixedBallResidual<'a> {
    pub fn new(y: &'a GroupedVector, gamma: f64, q: Exponent, tol: &ProxTolerance) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {gamma}")));
        }
        tol.validate()?;
        let spec = NormSpec::l1q(q);
        let theta_max = crate::norms::dual_mixed_norm(y, spec);
        let cache = match q {
            Exponent::Infinity => {
                let mut sorted = Vec::with_capacity(y.len());
                let mut prefix = Vec::with_capacity(y.len());
                let mut l1 = Vec::with_capacity(y.num_groups());
                for g in y.groups() {
                    let (s, p) = sorted_abs_with_prefix(g);
                    sorted.extend(s);
                    prefix.extend(p);
                    l1.push(g.iter().fold(0.0, |acc, x| acc + x.abs()));
                }
                GroupCache::Inf { sorted, prefix, l1 }
            }
            _ if q.is_one() => GroupCache::One,
            _ if q.is_two() => GroupCache::Two(y.groups().map(|g| lq_norm(g, q)).collect()),
            _ => GroupCache::General,
        };
        Ok(Self {
            y,
            gamma,
            q,
            tol: *tol,
            theta_max,
            cache,
        })
    }

    /// `‖y‖_{∞,q*}`: the smallest `θ` at which the grouped prox vanishes.
    pub fn theta_max(&self) -> f64 {
        self.theta_max
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    /// `g(θ) = ‖prox_grouped(y, θ, q)‖_{1,q} − γ`.
    pub fn eval(&self, theta: f64) -> Result<f64> {
        if !(theta >= 0.0) {
            return Err(Error::InvalidArgument(format!("theta must be nonnegative, got {theta}")));
        }
        let partition = self.y.partition();
        let norm = match &self.cache {
            GroupCache::One => self
                .y
                .groups()
                .map(|g| g.iter().fold(0.0, |acc, x| acc + (x.abs() - theta).max(0.0)))
                .fold(0.0, |acc, n| acc + n),
            GroupCache::Two(norms) => norms.iter().fold(0.0, |acc, n| acc + (n - theta).max(0.0)),
            GroupCache::Inf { sorted, prefix, l1 } => {
                let mut total = 0.0;
                for (i, &l1_i) in l1.iter().enumerate() {
                    if theta == 0.0 {
                        total += sorted[partition.offsets()[i]];
                    } else if l1_i > theta {
                        let r = partition.range(i);
                        total += l1_threshold_sorted(&sorted[r.clone()], &prefix[r], theta);
                    }
                }
                total
            }
            GroupCache::General => {
                let data = self.y.data();
                let group_norm = |i: usize| -> Result<f64> {
                    let x = prox_lq(&data[partition.range(i)], theta, self.q, &self.tol)?;
                    Ok(lq_norm(&x, self.q))
                };
                let norms: Vec<f64> = if data.len() >= 1 << 15 {
                    (0..partition.num_groups())
                        .into_par_iter()
                        .map(group_norm)
                        .collect::<Result<_>>()?
                } else {
                    (0..partition.num_groups()).map(group_norm).collect::<Result<_>>()?
                };
                norms.iter().fold(0.0, |acc, n| acc + n)
            }
        };
        Ok(norm - self.gamma)
    }
}

/// Euclidean projection of `y` onto `{x : ‖x‖_{1,q} <= γ}`.
pub fn project_mixed_ball(
    y: &GroupedVector,
    gamma: f64,
    q: Exponent,
    cfg: &RootConfig,
    tol: &ProxTolerance,
) -> Result<ProjectionResult<GroupedVector>> {
    project_mixed_ball_with_hint(y, gamma, q, cfg, tol, None)
}

/// [`project_mixed_ball`] with an optional first trial multiplier, typically
/// `θ*` from a previous nearby projection. The hint only changes which point
/// is tried first; the bracket is still `[0, θ_max]`.
pub fn project_mixed_ball_with_hint(
    y: &GroupedVector,
    gamma: f64,
    q: Exponent,
    cfg: &RootConfig,
    tol: &ProxTolerance,
    hint: Option<f64>,
) -> Result<ProjectionResult<GroupedVector>> {
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::InvalidArgument(format!("radius must be positive, got {gamma}")));
    }
    cfg.validate()?;
    let spec = NormSpec::l1q(q);
    if mixed_norm(y, spec) <= gamma {
        return Ok(ProjectionResult {
            x: y.clone(),
            theta: 0.0,
            residual: 0.0,
            evaluations: 0,
            interior: true,
        });
    }

    let g = MixedBallResidual::new(y, gamma, q, tol)?;
    let theta_max = g.theta_max();
    let abs_cfg = cfg.scaled(gamma.max(1.0), theta_max);
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let solution = find_root_with_hint(
        |theta| match g.eval(theta) {
            Ok(v) => v,
            Err(e) => {
                failure.borrow_mut().get_or_insert(e);
                f64::NAN
            }
        },
        0.0,
        theta_max,
        hint,
        &abs_cfg,
    );
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    let solution = solution?;
    let x = prox_grouped(y, solution.root, q, tol)?;
    let residual = (mixed_norm(&x, spec) - gamma).abs();
    Ok(ProjectionResult {
        x,
        theta: solution.root,
        residual,
        evaluations: solution.evaluations,
        interior: false,
    })
}

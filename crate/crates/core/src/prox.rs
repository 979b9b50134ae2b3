//! Proximity operators of `ℓ_q` norms and the `ℓ_q`-ball projections they
//! are dual to.
//!
//! `prox_lq(v, θ, q)` minimizes `½‖x − v‖² + θ‖x‖_q`. The cases `q ∈ {1, 2,
//! ∞}` have closed forms (the last through the `ℓ₁`-ball projection). Every
//! other `q` goes through the Moreau decomposition `prox = v − P(v)` where `P`
//! projects onto the `ℓ_{q*}` ball of radius `θ`, and that projection is
//! solved by nested scalar root finding on its KKT system.

use rayon::prelude::*;

use crate::ballproj::root::{find_root, RootConfig};
use crate::error::{Error, Result};
use crate::grouped::GroupedVector;
use crate::norms::{lq_norm, Exponent};

/// Tolerances for the iterative `ℓ_q` computations.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProxTolerance {
    /// Relative tolerance on each scalar coordinate equation.
    pub inner_tol: f64,
    /// Relative tolerance on the ball constraint `‖x‖_q = r`.
    pub outer_tol: f64,
    /// Iteration cap for each root solve.
    pub max_iter: usize,
}

impl Default for ProxTolerance {
    fn default() -> Self {
        Self {
            inner_tol: 1e-12,
            outer_tol: 1e-10,
            max_iter: 200,
        }
    }
}

impl ProxTolerance {
    pub fn validate(&self) -> Result<()> {
        let ok = |t: f64| t > 0.0 && t <= 1e-2;
        if !(ok(self.inner_tol) && ok(self.outer_tol) && self.max_iter >= 1) {
            return Err(Error::InvalidArgument(format!(
                "prox tolerances must lie in (0, 1e-2] with max_iter >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Soft thresholding: `sign(v) ⊙ max(|v| − θ, 0)`.
pub fn prox_l1(v: &[f64], theta: f64) -> Vec<f64> {
    v.iter()
        .map(|&x| x.signum() * (x.abs() - theta).max(0.0))
        .map(|x| if x == 0.0 { 0.0 } else { x })
        .collect()
}

/// Block shrinkage: `max(1 − θ/‖v‖₂, 0) v`, with `0 ↦ 0`.
pub fn prox_l2(v: &[f64], theta: f64) -> Vec<f64> {
    let norm = lq_norm(v, Exponent::TWO);
    if norm == 0.0 {
        return vec![0.0; v.len()];
    }
    let factor = (1.0 - theta / norm).max(0.0);
    v.iter().map(|x| factor * x).collect()
}

/// Threshold `τ` with `Σ max(a_k − τ, 0) = r` for `a` sorted descending with
/// prefix sums `prefix[k] = a_0 + … + a_k`. Requires `prefix.last() > r`.
pub(crate) fn l1_threshold_sorted(sorted_abs: &[f64], prefix: &[f64], r: f64) -> f64 {
    // largest k (1-based count) with a_{k-1} > (prefix_{k-1} − r) / k; the
    // predicate is true for a prefix of k values.
    let (mut lo, mut hi) = (1usize, sorted_abs.len());
    while lo < hi {
        let mid = lo + (hi - lo + 1) / 2;
        if sorted_abs[mid - 1] * mid as f64 > prefix[mid - 1] - r {
            lo = mid;
        } else {
            hi = mid - 1;
        }
    }
    ((prefix[lo - 1] - r) / lo as f64).max(0.0)
}

pub(crate) fn sorted_abs_with_prefix(v: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let mut a: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    a.sort_unstable_by(|x, y| y.total_cmp(x));
    let mut acc = 0.0;
    let prefix = a
        .iter()
        .map(|x| {
            acc += x;
            acc
        })
        .collect();
    (a, prefix)
}

/// Soft-threshold level of the `ℓ₁`-ball projection, or `None` when `v` is
/// already inside the ball.
fn l1_ball_threshold(v: &[f64], r: f64) -> Option<f64> {
    let l1 = v.iter().fold(0.0, |acc, x| acc + x.abs());
    if l1 <= r {
        return None;
    }
    let (a, prefix) = sorted_abs_with_prefix(v);
    Some(l1_threshold_sorted(&a, &prefix, r))
}

/// Euclidean projection onto `{x : ‖x‖₁ <= r}` by sorting and scanning the
/// soft-threshold breakpoints.
pub fn project_l1_ball(v: &[f64], r: f64) -> Vec<f64> {
    match l1_ball_threshold(v, r) {
        None => v.to_vec(),
        Some(tau) => prox_l1(v, tau),
    }
}

/// `prox` of `θ‖·‖_∞`: `v − P_{‖·‖₁ <= θ}(v)`, i.e. `v` clipped to `[−τ, τ]`.
pub fn prox_linf(v: &[f64], theta: f64) -> Vec<f64> {
    if theta == 0.0 {
        return v.to_vec();
    }
    match l1_ball_threshold(v, theta) {
        None => vec![0.0; v.len()],
        Some(tau) => v.iter().map(|x| x.clamp(-tau, tau)).collect(),
    }
}

/// `ℓ_q`-ball projection together with its KKT multiplier.
#[derive(Clone, Debug, PartialEq)]
pub struct LqProjection {
    pub x: Vec<f64>,
    /// Multiplier `μ` of the constraint `‖x‖_q <= r`: each coordinate solves
    /// `|x_j| + μ (|x_j| / r)^{q−1} = |v_j|`. Zero for interior points.
    pub multiplier: f64,
    /// Final `|‖x‖_q − r|`, zero for interior points.
    pub residual: f64,
}

/// Euclidean projection onto `{x : ‖x‖_q <= r}` for `1 < q < ∞`.
pub fn project_lq_ball(v: &[f64], r: f64, q: Exponent, tol: &ProxTolerance) -> Result<Vec<f64>> {
    project_lq_ball_kkt(v, r, q, tol).map(|p| p.x)
}

/// [`project_lq_ball`] returning the multiplier as well.
pub fn project_lq_ball_kkt(
    v: &[f64],
    r: f64,
    q: Exponent,
    tol: &ProxTolerance,
) -> Result<LqProjection> {
    let qv = match q {
        Exponent::Finite(e) if e > 1.0 => e,
        _ => {
            return Err(Error::UnsupportedExponent(format!(
                "general lq-ball projection needs 1 < q < inf, got {q}"
            )))
        }
    };
    if !(r > 0.0) {
        return Err(Error::InvalidArgument(format!("ball radius must be positive, got {r}")));
    }
    tol.validate()?;
    let interior = || LqProjection {
        x: v.to_vec(),
        multiplier: 0.0,
        residual: 0.0,
    };
    if lq_norm(v, q) <= r {
        return Ok(interior());
    }

    // Work on v / ‖v‖_∞; the projection commutes with positive scaling.
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    let mags: Vec<f64> = v.iter().map(|x| x.abs() / scale).collect();
    let radius = r / scale;
    let solver = CoordinateSolver::new(qv, radius, tol);

    let mut t = vec![0.0; mags.len()];
    let residual = |lam: f64, t: &mut [f64]| -> f64 {
        for (tj, &a) in t.iter_mut().zip(&mags) {
            *tj = solver.magnitude(a, lam);
        }
        lq_norm(t, q) - radius
    };

    // Geometric bracket growth: h(0) > 0 and h decreases in λ.
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let mut grow = 0;
    while residual(hi, &mut t) > 0.0 {
        lo = hi;
        hi *= 4.0;
        grow += 1;
        if grow > tol.max_iter || !hi.is_finite() {
            return Err(Error::NonConvergence {
                what: "lq-ball multiplier bracket",
                iterations: grow,
                residual: residual(hi, &mut t),
            });
        }
    }
    let cfg = RootConfig {
        residual_tol: tol.outer_tol * radius,
        width_tol: f64::EPSILON * hi,
        max_iter: tol.max_iter,
    };
    let sol = find_root(|lam| residual(lam, &mut t), lo, hi, &cfg)?;
    let h = residual(sol.root, &mut t);

    let x = v
        .iter()
        .zip(&t)
        .map(|(vj, tj)| if *tj == 0.0 { 0.0 } else { vj.signum() * tj * scale })
        .collect();
    Ok(LqProjection {
        x,
        multiplier: sol.root * scale,
        residual: h.abs() * scale,
    })
}

/// Solves `t + λ (t / r)^{q−1} = a` for `t ∈ [0, a]`.
///
/// For `q >= 2` the equation is convex and increasing in `u = t / r`; for
/// `q < 2` it is convex and increasing in `w = u^{q−1}`. Either way Newton
/// started from the right end converges monotonically; a bisection step is
/// taken whenever an iterate leaves the bracket.
struct CoordinateSolver {
    q: f64,
    radius: f64,
    tol: f64,
    max_iter: usize,
}

impl CoordinateSolver {
    fn new(q: f64, radius: f64, tol: &ProxTolerance) -> Self {
        Self {
            q,
            radius,
            tol: tol.inner_tol,
            max_iter: tol.max_iter,
        }
    }

    fn magnitude(&self, a: f64, lam: f64) -> f64 {
        if a == 0.0 {
            return 0.0;
        }
        if lam == 0.0 {
            return a;
        }
        let (q, r) = (self.q, self.radius);
        let u0 = a / r;
        let tol = self.tol * a;
        // Both terms are nonnegative, so each alone gives an upper bound on
        // the root; starting from the tighter one avoids a long crawl down
        // the steep side when q is large.
        let u = if q >= 2.0 {
            let f = |u: f64| r * u + lam * u.powf(q - 1.0) - a;
            let df = |u: f64| r + lam * (q - 1.0) * u.powf(q - 2.0);
            let start = u0.min((a / lam).powf(1.0 / (q - 1.0)));
            newton_from_right(f, df, start, tol, self.max_iter)
        } else {
            let alpha = q - 1.0;
            let inv = 1.0 / alpha;
            let f = |w: f64| r * w.powf(inv) + lam * w - a;
            let df = |w: f64| (r / alpha) * w.powf(inv - 1.0) + lam;
            let start = u0.powf(alpha).min(a / lam);
            let w = newton_from_right(f, df, start, tol, self.max_iter);
            w.powf(inv)
        };
        // near zero the q < 2 derivative blows up; treat it as an exact zero
        if u < 1e-14 * u0 {
            0.0
        } else {
            (r * u).min(a)
        }
    }
}

fn newton_from_right(
    f: impl Fn(f64) -> f64,
    df: impl Fn(f64) -> f64,
    x0: f64,
    tol: f64,
    max_iter: usize,
) -> f64 {
    let (mut lo, mut hi) = (0.0f64, x0);
    let mut x = x0;
    for _ in 0..max_iter {
        let fx = f(x);
        if fx.abs() <= tol {
            return x;
        }
        if fx > 0.0 {
            hi = x;
        } else {
            lo = x;
        }
        let mut next = x - fx / df(x);
        if !(next > lo && next < hi) {
            next = 0.5 * (lo + hi);
        }
        if next == x || hi - lo <= f64::EPSILON * x0 {
            return next;
        }
        x = next;
    }
    x
}

/// `prox` of `θ‖·‖_q` for any `q ∈ [1, ∞]`.
pub fn prox_lq(v: &[f64], theta: f64, q: Exponent, tol: &ProxTolerance) -> Result<Vec<f64>> {
    if !(theta >= 0.0) {
        return Err(Error::InvalidArgument(format!("theta must be nonnegative, got {theta}")));
    }
    match q {
        Exponent::Infinity => Ok(prox_linf(v, theta)),
        _ if q.is_one() => Ok(prox_l1(v, theta)),
        _ if q.is_two() => Ok(prox_l2(v, theta)),
        _ if theta == 0.0 => Ok(v.to_vec()),
        _ => match q.dual() {
            // q within the cutoff of 1: the polar ball is a box
            Exponent::Infinity => Ok(prox_l1(v, theta)),
            dual => {
                if lq_norm(v, dual) <= theta {
                    return Ok(vec![0.0; v.len()]);
                }
                let p = project_lq_ball(v, theta, dual, tol)?;
                Ok(v.iter().zip(&p).map(|(a, b)| a - b).collect())
            }
        },
    }
}

/// Groups at or above this total dimension are processed in parallel.
const PARALLEL_MIN_DIM: usize = 1 << 15;

/// Applies `prox_lq` independently to every group.
pub fn prox_grouped(
    y: &GroupedVector,
    theta: f64,
    q: Exponent,
    tol: &ProxTolerance,
) -> Result<GroupedVector> {
    if theta == 0.0 {
        return Ok(y.clone());
    }
    let partition = y.partition();
    let data = y.data();
    let per_group = |i: usize| prox_lq(&data[partition.range(i)], theta, q, tol);
    let parts: Vec<Vec<f64>> = if data.len() >= PARALLEL_MIN_DIM && partition.num_groups() > 1 {
        (0..partition.num_groups())
            .into_par_iter()
            .map(per_group)
            .collect::<Result<_>>()?
    } else {
        (0..partition.num_groups())
            .map(per_group)
            .collect::<Result<_>>()?
    };
    Ok(y.with_data(parts.concat()))
}

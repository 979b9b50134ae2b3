//! Bisection-only reference implementations, deliberately naive and free of
//! any code from the library under test.
#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| rng.sample(StandardNormal)).collect()
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    assert_eq!(a.len(), b.len());
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

/// `ℓ_q` norm straight from the definition; `q = ∞` is `f64::INFINITY`.
pub fn norm(v: &[f64], q: f64) -> f64 {
    if q.is_infinite() {
        v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    } else {
        v.iter().map(|x| x.abs().powf(q)).sum::<f64>().powf(1.0 / q)
    }
}

pub fn conjugate(q: f64) -> f64 {
    if q == 1.0 {
        f64::INFINITY
    } else if q.is_infinite() {
        1.0
    } else {
        q / (q - 1.0)
    }
}

/// Bisects a nonincreasing `f` for its sign change on `[lo, hi]` until the
/// bracket is below `width` or stops shrinking.
pub fn bisect(mut f: impl FnMut(f64) -> f64, mut lo: f64, mut hi: f64, width: f64) -> f64 {
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Projection onto `{‖x‖_1 <= r}` via bisection on the soft threshold.
pub fn l1_ball(v: &[f64], r: f64) -> Vec<f64> {
    if norm(v, 1.0) <= r {
        return v.to_vec();
    }
    let top = norm(v, f64::INFINITY);
    let tau = bisect(
        |t| v.iter().map(|x| (x.abs() - t).max(0.0)).sum::<f64>() - r,
        0.0,
        top,
        1e-16 * top,
    );
    v.iter().map(|x| x.signum() * (x.abs() - tau).max(0.0)).collect()
}

/// Projection onto `{‖x‖_p <= r}` for `1 < p < ∞` from the KKT conditions
/// `t_j + λ t_j^{p−1} = |v_j|`, bisecting both the coordinates and `λ`.
pub fn lp_ball(v: &[f64], r: f64, p: f64) -> Vec<f64> {
    if norm(v, p) <= r {
        return v.to_vec();
    }
    let coord = |a: f64, lam: f64| -> f64 {
        if a == 0.0 {
            return 0.0;
        }
        bisect(|t| a - t - lam * t.powf(p - 1.0), 0.0, a, 1e-16 * a)
    };
    let mags: Vec<f64> = v.iter().map(|x| x.abs()).collect();
    let h = |lam: f64| norm(&mags.iter().map(|&a| coord(a, lam)).collect::<Vec<_>>(), p) - r;
    let mut hi = 1.0;
    while h(hi) > 0.0 {
        hi *= 2.0;
    }
    let lam = bisect(h, 0.0, hi, 1e-15 * hi);
    v.iter().zip(&mags).map(|(x, &a)| x.signum() * coord(a, lam)).collect()
}

/// `argmin ½‖x − v‖² + θ‖x‖_q` through Moreau's decomposition with the
/// oracle ball projections above.
pub fn prox(v: &[f64], theta: f64, q: f64) -> Vec<f64> {
    if theta == 0.0 {
        return v.to_vec();
    }
    if q == 1.0 {
        return v.iter().map(|x| x.signum() * (x.abs() - theta).max(0.0)).collect();
    }
    let qs = conjugate(q);
    if norm(v, qs) <= theta {
        return vec![0.0; v.len()];
    }
    let p = if q.is_infinite() {
        l1_ball(v, theta)
    } else if q == 2.0 {
        let s = theta / norm(v, 2.0);
        v.iter().map(|x| x * s).collect()
    } else {
        lp_ball(v, theta, qs)
    };
    v.iter().zip(&p).map(|(a, b)| a - b).collect()
}

/// Projection of the concatenated `groups` onto `{Σ_i ‖x^i‖_q <= γ}` by
/// bisection on the prox multiplier.
pub fn mixed_ball(groups: &[Vec<f64>], gamma: f64, q: f64) -> Vec<f64> {
    let f: f64 = groups.iter().map(|g| norm(g, q)).sum();
    if f <= gamma {
        return groups.concat();
    }
    let qs = conjugate(q);
    let theta_max = groups.iter().map(|g| norm(g, qs)).fold(0.0, f64::max);
    let g = |theta: f64| groups.iter().map(|y| norm(&prox(y, theta, q), q)).sum::<f64>() - gamma;
    let theta = bisect(g, 0.0, theta_max, 1e-14 * theta_max);
    groups.iter().flat_map(|y| prox(y, theta, q)).collect()
}

/// Soft-thresholds singular values.
pub fn soft_threshold(s: &[f64], theta: f64) -> Vec<f64> {
    s.iter().map(|x| (x - theta).max(0.0)).collect()
}

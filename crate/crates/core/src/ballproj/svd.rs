//! Thin singular value decomposition.
//!
//! Matrices whose smaller dimension is at most [`JACOBI_MAX_DIM`] use
//! one-sided (Hestenes) Jacobi, which is simple and accurate to roughly
//! machine precision. Larger ones go through nalgebra's Golub-Kahan
//! bidiagonalization with implicit-shift QR.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::matrix::DenseMatrix;

pub const JACOBI_MAX_DIM: usize = 64;
const MAX_SWEEPS: usize = 80;

/// `A = U diag(s) Vᵀ` with `U` of size `m × k`, `V` of size `n × k`,
/// `k = min(m, n)` and `s` sorted descending.
#[derive(Clone, Debug, PartialEq)]
pub struct Svd {
    pub u: DenseMatrix,
    pub singular_values: Vec<f64>,
    pub v: DenseMatrix,
}

impl Svd {
    /// `U diag(s) Vᵀ` for replacement singular values `s`.
    pub fn reconstruct_with(&self, s: &[f64]) -> DenseMatrix {
        let (m, n, k) = (self.u.rows(), self.v.rows(), s.len());
        let mut out = DenseMatrix::zeros(m, n);
        let data = out.as_mut_slice();
        for (c, &sc) in s.iter().enumerate().take(k) {
            if sc == 0.0 {
                continue;
            }
            for i in 0..m {
                let a = self.u.get(i, c) * sc;
                if a == 0.0 {
                    continue;
                }
                let row = &mut data[i * n..(i + 1) * n];
                for (j, o) in row.iter_mut().enumerate() {
                    *o += a * self.v.get(j, c);
                }
            }
        }
        out
    }

    pub fn reconstruct(&self) -> DenseMatrix {
        self.reconstruct_with(&self.singular_values)
    }
}

pub fn svd(a: &DenseMatrix) -> Result<Svd> {
    let (m, n) = (a.rows(), a.cols());
    if m == 0 || n == 0 {
        return Err(Error::InvalidArgument(format!("cannot decompose an empty {m}x{n} matrix")));
    }
    if a.as_slice().iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("matrix passed to svd".into()));
    }
    if m.min(n) <= JACOBI_MAX_DIM {
        if m >= n {
            jacobi_tall(a)
        } else {
            let t = jacobi_tall(&a.transpose())?;
            Ok(Svd {
                u: t.v,
                singular_values: t.singular_values,
                v: t.u,
            })
        }
    } else {
        golub_kahan(a)
    }
}

/// One-sided Jacobi for `m >= n`: rotate column pairs of `A V` until all are
/// mutually orthogonal to working precision.
fn jacobi_tall(a: &DenseMatrix) -> Result<Svd> {
    let (m, n) = (a.rows(), a.cols());
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut vcols: Vec<Vec<f64>> = (0..n)
        .map(|j| {
            let mut e = vec![0.0; n];
            e[j] = 1.0;
            e
        })
        .collect();

    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let mut rotated = false;
        for p in 0..n {
            for q in p + 1..n {
                let (alpha, beta, gamma) = {
                    let (cp, cq) = (&cols[p], &cols[q]);
                    let mut al = 0.0;
                    let mut be = 0.0;
                    let mut ga = 0.0;
                    for (x, y) in cp.iter().zip(cq) {
                        al += x * x;
                        be += y * y;
                        ga += x * y;
                    }
                    (al, be, ga)
                };
                if gamma == 0.0 || gamma.abs() <= f64::EPSILON * (alpha * beta).sqrt() {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut cols, p, q, c, s);
                rotate(&mut vcols, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NonConvergence {
            what: "Jacobi SVD",
            iterations: MAX_SWEEPS,
            residual: f64::NAN,
        });
    }

    let mut order: Vec<(f64, usize)> = cols
        .iter()
        .enumerate()
        .map(|(j, c)| (crate::norms::lq_norm(c, crate::norms::Exponent::TWO), j))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0));

    let mut ucols: Vec<Option<Vec<f64>>> = Vec::with_capacity(n);
    let mut s = Vec::with_capacity(n);
    let mut v = DenseMatrix::zeros(n, n);
    for (k, &(sigma, j)) in order.iter().enumerate() {
        s.push(sigma);
        for i in 0..n {
            v.set(i, k, vcols[j][i]);
        }
        if sigma > f64::MIN_POSITIVE * 1e10 {
            ucols.push(Some(cols[j].iter().map(|x| x / sigma).collect()));
        } else {
            ucols.push(None);
        }
    }
    let ucols = complete_orthonormal(ucols, m);
    let mut u = DenseMatrix::zeros(m, n);
    for (k, col) in ucols.iter().enumerate() {
        for i in 0..m {
            u.set(i, k, col[i]);
        }
    }
    Ok(Svd {
        u,
        singular_values: s,
        v,
    })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (left, right) = cols.split_at_mut(q);
    let (cp, cq) = (&mut left[p], &mut right[0]);
    for (x, y) in cp.iter_mut().zip(cq.iter_mut()) {
        let (xp, xq) = (*x, *y);
        *x = c * xp - s * xq;
        *y = s * xp + c * xq;
    }
}

/// Fills missing columns (zero singular values) with unit vectors orthogonal
/// to the others, by twice-repeated Gram-Schmidt against coordinate vectors.
fn complete_orthonormal(cols: Vec<Option<Vec<f64>>>, m: usize) -> Vec<Vec<f64>> {
    let mut known: Vec<Vec<f64>> = cols.iter().flatten().cloned().collect();
    let mut candidate = 0usize;
    let mut out = Vec::with_capacity(cols.len());
    for col in cols {
        match col {
            Some(c) => out.push(c),
            None => loop {
                assert!(candidate < m, "ran out of completion candidates");
                let mut e = vec![0.0; m];
                e[candidate] = 1.0;
                candidate += 1;
                for _ in 0..2 {
                    for k in &known {
                        let d = crate::grouped::dot(k, &e);
                        for (x, y) in e.iter_mut().zip(k) {
                            *x -= d * y;
                        }
                    }
                }
                let norm = crate::norms::lq_norm(&e, crate::norms::Exponent::TWO);
                if norm > 0.5 {
                    e.iter_mut().for_each(|x| *x /= norm);
                    known.push(e.clone());
                    out.push(e);
                    break;
                }
            },
        }
    }
    out
}

fn golub_kahan(a: &DenseMatrix) -> Result<Svd> {
    let (m, n) = (a.rows(), a.cols());
    let k = m.min(n);
    let mat = DMatrix::from_row_slice(m, n, a.as_slice());
    let dec = nalgebra::linalg::SVD::try_new(mat, true, true, f64::EPSILON, 10_000).ok_or(
        Error::NonConvergence {
            what: "Golub-Kahan SVD",
            iterations: 10_000,
            residual: f64::NAN,
        },
    )?;
    let (uu, vt) = match (dec.u, dec.v_t) {
        (Some(u), Some(vt)) => (u, vt),
        _ => unreachable!("both factors were requested"),
    };
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&i, &j| dec.singular_values[j].total_cmp(&dec.singular_values[i]));
    let mut u = DenseMatrix::zeros(m, k);
    let mut v = DenseMatrix::zeros(n, k);
    let mut s = Vec::with_capacity(k);
    for (c, &src) in order.iter().enumerate() {
        s.push(dec.singular_values[src]);
        for i in 0..m {
            u.set(i, c, uu[(i, src)]);
        }
        for j in 0..n {
            v.set(j, c, vt[(src, j)]);
        }
    }
    Ok(Svd {
        u,
        singular_values: s,
        v,
    })
}

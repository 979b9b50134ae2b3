//! Vector and matrix mixed norms, conjugate exponents and dual norms.
//!
//! All power sums are evaluated on values divided by the largest absolute
//! entry and rescaled afterwards, which is exact by homogeneity and keeps
//! `|v|^q` from overflowing. Reductions are sequential, left to right.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::ballproj::svd;
use crate::error::{Error, Result};
use crate::grouped::GroupedVector;
use crate::matrix::DenseMatrix;

/// Finite exponents above this value are treated as infinity.
pub const INFINITE_EXPONENT_CUTOFF: f64 = 1e6;

/// A norm exponent in `[1, ∞]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Exponent {
    Finite(f64),
    Infinity,
}

impl Exponent {
    pub const ONE: Exponent = Exponent::Finite(1.0);
    pub const TWO: Exponent = Exponent::Finite(2.0);
    pub const INF: Exponent = Exponent::Infinity;

    pub fn new(e: f64) -> Result<Self> {
        if e.is_nan() || e < 1.0 {
            return Err(Error::InvalidExponent(e));
        }
        if e > INFINITE_EXPONENT_CUTOFF {
            Ok(Exponent::Infinity)
        } else {
            Ok(Exponent::Finite(e))
        }
    }

    /// The conjugate exponent `e*` with `1/e + 1/e* = 1`.
    pub fn dual(self) -> Exponent {
        match self {
            Exponent::Infinity => Exponent::ONE,
            Exponent::Finite(e) if e == 1.0 => Exponent::Infinity,
            Exponent::Finite(e) => {
                let d = e / (e - 1.0);
                if d > INFINITE_EXPONENT_CUTOFF {
                    Exponent::Infinity
                } else {
                    Exponent::Finite(d)
                }
            }
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Exponent::Finite(e) => e,
            Exponent::Infinity => f64::INFINITY,
        }
    }

    pub fn is_one(self) -> bool {
        self == Exponent::ONE
    }

    pub fn is_two(self) -> bool {
        self == Exponent::TWO
    }

    pub fn is_infinite(self) -> bool {
        self == Exponent::Infinity
    }
}

impl fmt::Display for Exponent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Exponent::Finite(e) => write!(f, "{e}"),
            Exponent::Infinity => f.write_str("inf"),
        }
    }
}

impl FromStr for Exponent {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "∞" => Ok(Exponent::Infinity),
            other => {
                let e: f64 = other
                    .parse()
                    .map_err(|_| Error::InvalidArgument(format!("bad exponent {s:?}")))?;
                Exponent::new(e)
            }
        }
    }
}

// Finite exponents serialize as JSON numbers, infinity as the string "inf".
impl Serialize for Exponent {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Exponent::Finite(e) => s.serialize_f64(*e),
            Exponent::Infinity => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Exponent {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(e) => Exponent::new(e).map_err(serde::de::Error::custom),
            Raw::Str(s) => s.parse().map_err(serde::de::Error::custom),
        }
    }
}

/// Conjugate of a raw exponent value.
pub fn dual_exponent(e: f64) -> Result<Exponent> {
    Ok(Exponent::new(e)?.dual())
}

/// Outer/inner exponents `(p, q)` of an `ℓ_{p,q}` mixed norm.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NormSpec {
    pub p: Exponent,
    pub q: Exponent,
}

impl NormSpec {
    pub fn new(p: Exponent, q: Exponent) -> Self {
        Self { p, q }
    }

    /// The `ℓ_{1,q}` norm used by the ball projections.
    pub fn l1q(q: Exponent) -> Self {
        Self { p: Exponent::ONE, q }
    }

    pub fn conjugate(self) -> Self {
        Self {
            p: self.p.dual(),
            q: self.q.dual(),
        }
    }
}

/// `ℓ_q` norm of `v`; zero for an empty slice.
pub fn lq_norm(v: &[f64], q: Exponent) -> f64 {
    let scale = v.iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 || !scale.is_finite() {
        return scale;
    }
    match q {
        Exponent::Infinity => scale,
        Exponent::Finite(e) if e == 1.0 => v.iter().fold(0.0, |acc, x| acc + x.abs()),
        Exponent::Finite(e) if e == 2.0 => {
            let s = v.iter().fold(0.0, |acc, x| {
                let t = x / scale;
                acc + t * t
            });
            scale * s.sqrt()
        }
        Exponent::Finite(e) => {
            let s = v.iter().fold(0.0, |acc, x| acc + (x.abs() / scale).powf(e));
            scale * s.powf(1.0 / e)
        }
    }
}

/// `ℓ_{p,q}` norm over the vector of per-group norms.
pub fn mixed_norm_parts(data: &[f64], partition: &crate::GroupPartition, spec: NormSpec) -> f64 {
    match spec.p {
        Exponent::Finite(p) if p == 1.0 => partition
            .slices(data)
            .fold(0.0, |acc, g| acc + lq_norm(g, spec.q)),
        Exponent::Infinity => partition
            .slices(data)
            .fold(0.0f64, |acc, g| acc.max(lq_norm(g, spec.q))),
        p => {
            let norms: Vec<f64> = partition.slices(data).map(|g| lq_norm(g, spec.q)).collect();
            lq_norm(&norms, p)
        }
    }
}

pub fn mixed_norm(x: &GroupedVector, spec: NormSpec) -> f64 {
    mixed_norm_parts(x.data(), x.partition(), spec)
}

/// `‖u‖_{p*,q*}`, the polar of `‖·‖_{p,q}` evaluated at `u`.
pub fn dual_mixed_norm(u: &GroupedVector, spec: NormSpec) -> f64 {
    mixed_norm(u, spec.conjugate())
}

/// A vector `x` with `‖x‖_{p,q} = 1` and `⟨x, u⟩ = ‖u‖_{p*,q*}`.
///
/// Only finite exponents `1 < p, q < ∞` are supported.
pub fn dual_witness(u: &GroupedVector, spec: NormSpec) -> Result<GroupedVector> {
    let (p, q) = match (spec.p, spec.q) {
        (Exponent::Finite(p), Exponent::Finite(q)) if p > 1.0 && q > 1.0 => (p, q),
        _ => {
            return Err(Error::UnsupportedExponent(format!(
                "dual witness needs 1 < p, q < inf, got p = {}, q = {}",
                spec.p, spec.q
            )))
        }
    };
    let scale = u.data().iter().fold(0.0f64, |m, x| m.max(x.abs()));
    if scale == 0.0 {
        return Err(Error::ZeroInput);
    }
    // The witness is invariant under positive scaling of u.
    let (ps, qs) = (p / (p - 1.0), q / (q - 1.0));
    let qs_exp = Exponent::Finite(qs);
    let group_norms: Vec<f64> = u
        .groups()
        .map(|g| {
            let scaled: Vec<f64> = g.iter().map(|x| x / scale).collect();
            lq_norm(&scaled, qs_exp)
        })
        .collect();
    let beta = group_norms.iter().fold(0.0, |acc, n| acc + n.powf(ps));
    let inv_beta = beta.powf(-1.0 / p);

    let mut out = Vec::with_capacity(u.len());
    for (g, &norm) in u.groups().zip(&group_norms) {
        if norm == 0.0 {
            out.extend(std::iter::repeat_n(0.0, g.len()));
            continue;
        }
        let factor = inv_beta * norm.powf(ps - qs);
        out.extend(
            g.iter()
                .map(|&x| factor * (x / scale).signum() * (x.abs() / scale).powf(qs - 1.0)),
        );
    }
    Ok(u.with_data(out))
}

/// Schatten-`q` norm: the `ℓ_q` norm of the singular values.
pub fn schatten_norm(x: &DenseMatrix, q: Exponent) -> Result<f64> {
    let s = svd(x)?.singular_values;
    Ok(lq_norm(&s, q))
}

/// `(Σ_i ‖X^i‖_q^p)^{1/p}` over Schatten norms of the blocks.
pub fn matrix_mixed_norm(blocks: &[DenseMatrix], spec: NormSpec) -> Result<f64> {
    if blocks.is_empty() {
        return Err(Error::InvalidArgument("empty block list".into()));
    }
    let norms = blocks
        .iter()
        .map(|b| schatten_norm(b, spec.q))
        .collect::<Result<Vec<_>>>()?;
    Ok(match spec.p {
        Exponent::Finite(p) if p == 1.0 => norms.iter().sum(),
        p => lq_norm(&norms, p),
    })
}

//! Safeguarded bracketing root finder (bisection, secant and inverse
//! quadratic interpolation) for monotone scalar functions.

use crate::error::{Error, Result};

/// Tolerances for [`find_root`].
///
/// `find_root` reads both tolerances as absolute. The ball projections treat
/// them as relative: the residual tolerance is multiplied by `max(1, γ)` and
/// the width tolerance by the bracket length `θ_max`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootConfig {
    pub residual_tol: f64,
    pub width_tol: f64,
    pub max_iter: usize,
}

impl Default for RootConfig {
    fn default() -> Self {
        Self {
            residual_tol: 1e-10,
            width_tol: 1e-13,
            max_iter: 200,
        }
    }
}

impl RootConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.residual_tol > 0.0 && self.width_tol > 0.0 && self.max_iter >= 1) {
            return Err(Error::InvalidArgument(format!(
                "root config needs positive tolerances and iterations, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Absolute tolerances for a residual of scale `residual_scale` on a
    /// bracket of length `bracket_len`.
    pub fn scaled(&self, residual_scale: f64, bracket_len: f64) -> Self {
        Self {
            residual_tol: self.residual_tol * residual_scale,
            width_tol: self.width_tol * bracket_len,
            max_iter: self.max_iter,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RootSolution {
    pub root: f64,
    /// `g(root)`.
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
    /// Set when a monotonicity violation forced pure bisection.
    pub bisection_fallback: bool,
}

/// Finds a root of a monotone `g` on `[lo, hi]`.
///
/// Terminates when `|g(θ)| <= cfg.residual_tol` or the bracket is narrower
/// than `cfg.width_tol`. Interpolation steps are accepted only when they land
/// strictly inside the current bracket; otherwise the step bisects. If an
/// evaluation falls outside the range spanned by the bracket end values (a
/// monotone function cannot do that, a noisy one can) the search switches to
/// pure bisection.
pub fn find_root<G>(g: G, lo: f64, hi: f64, cfg: &RootConfig) -> Result<RootSolution>
where
    G: FnMut(f64) -> f64,
{
    find_root_with_hint(g, lo, hi, None, cfg)
}

/// [`find_root`] with an optional first trial point inside the bracket.
pub fn find_root_with_hint<G>(
    mut g: G,
    lo: f64,
    hi: f64,
    hint: Option<f64>,
    cfg: &RootConfig,
) -> Result<RootSolution>
where
    G: FnMut(f64) -> f64,
{
    cfg.validate()?;
    if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
        return Err(Error::InvalidArgument(format!("bad bracket [{lo}, {hi}]")));
    }
    let eps = cfg.residual_tol;
    let mut evals = 0usize;
    let mut eval = |x: f64, evals: &mut usize| {
        *evals += 1;
        g(x)
    };

    let f_lo = eval(lo, &mut evals);
    let done = |root, value, iterations, evaluations, bisection_fallback| {
        Ok(RootSolution {
            root,
            value,
            iterations,
            evaluations,
            bisection_fallback,
        })
    };
    if f_lo.abs() <= eps {
        return done(lo, f_lo, 0, evals, false);
    }
    let f_hi = eval(hi, &mut evals);
    if f_hi.abs() <= eps {
        return done(hi, f_hi, 0, evals, false);
    }
    if !(f_lo.is_finite() && f_hi.is_finite()) || f_lo.signum() == f_hi.signum() {
        return Err(Error::NoSignChange {
            lo,
            hi,
            g_lo: f_lo,
            g_hi: f_hi,
        });
    }

    // Explicit bracket: `a` keeps the sign of g(lo), `b` the other sign.
    let (mut a, mut fa, mut b, mut fb) = (lo, f_lo, hi, f_hi);
    if let Some(h) = hint.filter(|h| *h > lo && *h < hi) {
        let fh = eval(h, &mut evals);
        if fh.abs() <= eps {
            return done(h, fh, 0, evals, false);
        }
        if fh.is_finite() && fh >= fa.min(fb) && fh <= fa.max(fb) {
            if fh.signum() == fa.signum() {
                a = h;
                fa = fh;
            } else {
                b = h;
                fb = fh;
            }
        }
    }

    // Brent's method on (xpre, xcur, xblk) in the classic brentq layout.
    let (mut xpre, mut fpre, mut xcur, mut fcur) = (a, fa, b, fb);
    let (mut xblk, mut fblk) = (0.0f64, 0.0f64);
    let (mut spre, mut scur) = (0.0f64, 0.0f64);
    let mut bisect_only = false;

    for iter in 1..=cfg.max_iter {
        if fpre != 0.0 && fcur != 0.0 && fpre.signum() != fcur.signum() {
            xblk = xpre;
            fblk = fpre;
            spre = xcur - xpre;
            scur = spre;
        }
        if fblk.abs() < fcur.abs() {
            xpre = xcur;
            xcur = xblk;
            xblk = xpre;
            fpre = fcur;
            fcur = fblk;
            fblk = fpre;
        }
        let delta = 0.5 * cfg.width_tol;
        let sbis = 0.5 * (xblk - xcur);
        if fcur.abs() <= eps || sbis.abs() < delta {
            return done(xcur, fcur, iter, evals, bisect_only);
        }

        let mut step = sbis;
        if !bisect_only && spre.abs() > delta && fcur.abs() < fpre.abs() {
            let stry = if xpre == xblk {
                -fcur * (xcur - xpre) / (fcur - fpre)
            } else {
                let dpre = (fpre - fcur) / (xpre - xcur);
                let dblk = (fblk - fcur) / (xblk - xcur);
                -fcur * (fblk * dblk - fpre * dpre) / (dblk * dpre * (fblk - fpre))
            };
            let trial = xcur + stry;
            let inside = trial > xcur.min(xblk) && trial < xcur.max(xblk);
            if stry.is_finite() && inside && 2.0 * stry.abs() < spre.abs().min(3.0 * sbis.abs() - delta) {
                spre = scur;
                step = stry;
            } else {
                spre = sbis;
            }
        } else {
            spre = sbis;
        }
        scur = step;

        xpre = xcur;
        fpre = fcur;
        xcur += if scur.abs() > delta {
            scur
        } else if sbis > 0.0 {
            delta
        } else {
            -delta
        };
        fcur = eval(xcur, &mut evals);

        // A monotone g evaluated inside the bracket stays within the range of
        // the bracket end values.
        let (fl, fh) = (fpre.min(fblk), fpre.max(fblk));
        if !bisect_only && !(fcur >= fl && fcur <= fh) {
            bisect_only = true;
        }
        if !fcur.is_finite() {
            return Err(Error::NonConvergence {
                what: "root finder (non-finite residual)",
                iterations: iter,
                residual: fcur,
            });
        }
    }
    Err(Error::NonConvergence {
        what: "root finder",
        iterations: cfg.max_iter,
        residual: fcur.abs().min(fblk.abs()),
    })
}

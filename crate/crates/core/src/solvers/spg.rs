//! Spectral projected gradient.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use super::{
    inf_norm_diff, ConstrainedProblem, IterRecord, Objective, ProjectionStats, SolverClock,
    SolverReport, Termination,
};
use crate::error::{Error, Result};
use crate::grouped::dot;

const MAX_BACKTRACKS: usize = 50;

/// Which Barzilai-Borwein quotient to use.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BbVariant {
    /// `⟨Δx,Δx⟩ / ⟨Δg,Δx⟩`, the long step.
    Bb1,
    /// `⟨Δx,Δg⟩ / ⟨Δg,Δg⟩`, the short step.
    Bb2,
    /// BB1, switching to BB2 for one step after a line search that rejected
    /// two or more trial steps in a row.
    Adaptive,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepBounds {
    pub min: f64,
    pub max: f64,
}

impl Default for StepBounds {
    fn default() -> Self {
        Self {
            min: 1e-10,
            max: 1e10,
        }
    }
}

impl StepBounds {
    pub fn clamp(&self, eta: f64) -> f64 {
        eta.clamp(self.min, self.max)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SpgOptions {
    pub max_iter: usize,
    /// Stop once `‖x − P(x − ∇L(x))‖∞ <= tol`.
    pub tol: f64,
    /// Nonmonotone memory: the line search compares against the max of the
    /// last `memory` accepted objective values.
    pub memory: usize,
    /// Sufficient-decrease constant.
    pub decrease: f64,
    pub step_bounds: StepBounds,
    pub variant: BbVariant,
    /// Keep every `k`-th iterate in the report.
    pub keep_iterates_every: Option<usize>,
}

impl Default for SpgOptions {
    fn default() -> Self {
        Self {
            max_iter: 1000,
            tol: 1e-5,
            memory: 10,
            decrease: 1e-4,
            step_bounds: StepBounds::default(),
            variant: BbVariant::Adaptive,
            keep_iterates_every: None,
        }
    }
}

impl SpgOptions {
    pub fn validate(&self) -> Result<()> {
        let b = &self.step_bounds;
        if self.memory == 0 {
            return Err(Error::InvalidArgument("nonmonotone memory must be at least 1".into()));
        }
        if !(b.min > 0.0 && b.min < b.max && b.max.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "step bounds must satisfy 0 < min < max < inf, got [{}, {}]",
                b.min, b.max
            )));
        }
        if !(self.decrease > 0.0 && self.decrease < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "decrease constant must lie in (0, 1), got {}",
                self.decrease
            )));
        }
        if !(self.tol >= 0.0) {
            return Err(Error::InvalidArgument(format!("tolerance must be nonnegative, got {}", self.tol)));
        }
        if self.keep_iterates_every == Some(0) {
            return Err(Error::InvalidArgument("iterate thinning period must be at least 1".into()));
        }
        Ok(())
    }
}

/// Barzilai-Borwein step from `Δx = x_t − x_{t−1}` and `Δg = ∇L(x_t) − ∇L(x_{t−1})`,
/// clamped to `bounds`. A non-finite or nonpositive quotient is replaced by
/// `prev` (or `bounds.max` when there is no previous step).
///
/// `BbVariant::Adaptive` evaluates as BB1 here.
pub fn bb_stepsize(dx: &[f64], dg: &[f64], variant: BbVariant, bounds: StepBounds, prev: Option<f64>) -> f64 {
    debug_assert_eq!(dx.len(), dg.len());
    let sy = dot(dx, dg);
    let raw = match variant {
        BbVariant::Bb1 | BbVariant::Adaptive => dot(dx, dx) / sy,
        BbVariant::Bb2 => sy / dot(dg, dg),
    };
    if raw.is_finite() && raw > 0.0 {
        bounds.clamp(raw)
    } else {
        prev.map_or(bounds.max, |p| bounds.clamp(p))
    }
}

/// Minimizes `L` over the ball by spectral projected gradient with a
/// nonmonotone Armijo search along the projection arc.
///
/// `x0` is projected before the first iteration. Line-search failure is not
/// an error: the best iterate found so far is returned with
/// [`Termination::LineSearchFailure`].
pub fn spg_solve<O: Objective>(
    prob: &ConstrainedProblem<O>,
    x0: &[f64],
    opts: &SpgOptions,
) -> Result<(Vec<f64>, SolverReport)> {
    opts.validate()?;
    let obj = &prob.objective;
    let con = &prob.constraint;
    let d = obj.dim();
    if x0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x0.len(),
        });
    }

    let mut clock = SolverClock::start();
    let mut proj = ProjectionStats::new();
    let mut records = Vec::new();
    let mut iterates = Vec::new();
    let mut gradients = 0usize;

    let p0 = proj.project(con, x0, None)?;
    let mut hint = Some(p0.theta);
    let mut x = p0.x;
    let mut f = obj.loss(&x);
    let mut g = vec![0.0; d];
    obj.gradient(&x, &mut g);
    gradients += 1;
    check_finite(f, 0)?;

    let mut window: VecDeque<f64> = VecDeque::with_capacity(opts.memory);
    window.push_back(f);
    let mut best = (f, x.clone());

    let record = |clock: &mut SolverClock,
                      records: &mut Vec<IterRecord>,
                      iterates: &mut Vec<(usize, Vec<f64>)>,
                      iter: usize,
                      x: &[f64],
                      f: f64,
                      gradients: usize| {
        clock.pause();
        records.push(IterRecord {
            iter,
            seconds: clock.seconds(),
            objective: f,
            feasibility_error: con.violation(x),
            work: gradients as f64,
        });
        if let Some(k) = opts.keep_iterates_every {
            if iter % k == 0 {
                iterates.push((iter, x.to_vec()));
            }
        }
        clock.resume();
    };
    record(&mut clock, &mut records, &mut iterates, 0, &x, f, gradients);

    // Projected-gradient residual at unit step; also seeds the first step.
    let step_unit = |x: &[f64], g: &[f64]| -> Vec<f64> { x.iter().zip(g).map(|(a, b)| a - b).collect() };
    let pu = proj.project(con, &step_unit(&x, &g), hint)?;
    let mut residual = inf_norm_diff(&pu.x, &x);
    let mut eta = if residual > 0.0 {
        opts.step_bounds.clamp(1.0 / residual)
    } else {
        opts.step_bounds.max
    };

    let mut trial = vec![0.0; d];
    let mut g_new = vec![0.0; d];
    let mut use_short = false;
    let mut termination = Termination::IterationLimit;

    for iter in 1..=opts.max_iter {
        if residual <= opts.tol {
            termination = Termination::Converged;
            break;
        }
        let f_ref = window.iter().copied().fold(f64::NEG_INFINITY, f64::max);

        let mut step = eta;
        let mut rejections = 0usize;
        let mut consecutive = 0usize;
        let mut max_consecutive = 0usize;
        let accepted = loop {
            for ((t, a), b) in trial.iter_mut().zip(&x).zip(&g) {
                *t = a - step * b;
            }
            let p = proj.project(con, &trial, hint)?;
            let delta: Vec<f64> = p.x.iter().zip(&x).map(|(a, b)| a - b).collect();
            let slope = dot(&g, &delta);
            let f_trial = obj.loss(&p.x);
            if f_trial.is_finite() && f_trial <= f_ref + opts.decrease * slope {
                break Some((p, f_trial));
            }
            rejections += 1;
            consecutive += 1;
            max_consecutive = max_consecutive.max(consecutive);
            if rejections >= MAX_BACKTRACKS {
                break None;
            }
            // Quadratic model φ(s) = f + (slope/step)·s + a·s², fitted to φ(step) = f_trial.
            let curvature = f_trial - f - slope;
            let next = if f_trial.is_finite() && curvature > 0.0 {
                -slope * step / (2.0 * curvature)
            } else {
                0.5 * step
            };
            step = next.clamp(0.1 * step, 0.9 * step);
        };
        let Some((p, f_trial)) = accepted else {
            termination = Termination::LineSearchFailure;
            break;
        };

        hint = Some(p.theta);
        obj.gradient(&p.x, &mut g_new);
        gradients += 1;
        check_finite(f_trial, iter)?;
        let dx: Vec<f64> = p.x.iter().zip(&x).map(|(a, b)| a - b).collect();
        let dg: Vec<f64> = g_new.iter().zip(&g).map(|(a, b)| a - b).collect();
        let variant = match opts.variant {
            BbVariant::Adaptive if use_short => BbVariant::Bb2,
            BbVariant::Adaptive => BbVariant::Bb1,
            v => v,
        };
        use_short = max_consecutive >= 2;
        eta = bb_stepsize(&dx, &dg, variant, opts.step_bounds, Some(eta));

        x = p.x;
        f = f_trial;
        std::mem::swap(&mut g, &mut g_new);
        if window.len() == opts.memory {
            window.pop_front();
        }
        window.push_back(f);
        if f < best.0 {
            best = (f, x.clone());
        }
        record(&mut clock, &mut records, &mut iterates, iter, &x, f, gradients);

        let pu = proj.project(con, &step_unit(&x, &g), hint)?;
        residual = inf_norm_diff(&pu.x, &x);
    }
    if termination == Termination::IterationLimit && residual <= opts.tol {
        termination = Termination::Converged;
    }

    let x_out = if termination == Termination::LineSearchFailure { best.1 } else { x };
    Ok((
        x_out,
        SolverReport {
            records,
            iterates,
            projections: proj.count,
            projection_seconds: proj.seconds,
            termination,
        },
    ))
}

fn check_finite(f: f64, iter: usize) -> Result<()> {
    if f.is_finite() {
        Ok(())
    } else {
        Err(Error::NonFinite(format!("objective at iteration {iter}")))
    }
}

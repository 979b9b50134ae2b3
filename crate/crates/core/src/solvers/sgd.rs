//! Mini-batch stochastic projected gradient.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{
    ConstrainedProblem, IterRecord, ProjectionStats, SolverClock, SolverReport, StochasticObjective,
    Termination,
};
use crate::error::{Error, Result};

const PROBE_STEPS: usize = 10;
const PROBE_GRID: [f64; 7] = [1.0, 1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SgdOptions {
    pub batch_size: usize,
    /// Initial stepsize. `None` runs a short probe over
    /// `{1, 1e-1, …, 1e-6} / curvature_hint` and keeps the best.
    pub eta0: Option<f64>,
    /// `T₀` in `η_t = η₀ / (1 + t / T₀)`, in steps. `None` means one epoch;
    /// infinity gives a constant step.
    pub decay_horizon: Option<f64>,
    /// Project every `k`-th step (and always on the last one).
    pub projection_period: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Optional cap on the total number of steps.
    pub max_steps: Option<usize>,
    /// Keep every `k`-th projected iterate in the report.
    pub keep_iterates_every: Option<usize>,
}

impl Default for SgdOptions {
    fn default() -> Self {
        Self {
            batch_size: 10,
            eta0: None,
            decay_horizon: None,
            projection_period: 10,
            epochs: 1,
            seed: 0,
            max_steps: None,
            keep_iterates_every: None,
        }
    }
}

impl SgdOptions {
    pub fn validate(&self, components: usize) -> Result<()> {
        if self.batch_size == 0 || self.batch_size > components {
            return Err(Error::InvalidArgument(format!(
                "batch size must lie in [1, {components}], got {}",
                self.batch_size
            )));
        }
        if self.projection_period == 0 {
            return Err(Error::InvalidArgument("projection period must be at least 1".into()));
        }
        if let Some(eta) = self.eta0 {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::InvalidArgument(format!("eta0 must be positive, got {eta}")));
            }
        }
        if let Some(t0) = self.decay_horizon {
            if !(t0 > 0.0) {
                return Err(Error::InvalidArgument(format!("decay horizon must be positive, got {t0}")));
            }
        }
        if self.keep_iterates_every == Some(0) {
            return Err(Error::InvalidArgument("iterate thinning period must be at least 1".into()));
        }
        Ok(())
    }
}

/// Stochastic projected gradient: each step draws a mini-batch without
/// replacement (the permutation is reshuffled every epoch), steps along the
/// unbiased gradient estimate and projects every `projection_period` steps.
///
/// Only projected iterates are recorded, so every record is feasible. The
/// objective evaluations behind the records are excluded from the timings.
pub fn sgd_solve<O: StochasticObjective>(
    prob: &ConstrainedProblem<O>,
    x0: &[f64],
    opts: &SgdOptions,
) -> Result<(Vec<f64>, SolverReport)> {
    let obj = &prob.objective;
    let con = &prob.constraint;
    let d = obj.dim();
    let r = obj.components();
    if r == 0 {
        return Err(Error::InvalidArgument("objective has no components".into()));
    }
    opts.validate(r)?;
    if x0.len() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: x0.len(),
        });
    }
    let b = opts.batch_size;
    let steps_per_epoch = r.div_ceil(b);
    let mut total = opts.epochs * steps_per_epoch;
    if let Some(cap) = opts.max_steps {
        total = total.min(cap);
    }
    let horizon = opts.decay_horizon.unwrap_or(steps_per_epoch as f64);

    let mut clock = SolverClock::start();
    let mut proj = ProjectionStats::new();
    let mut records = Vec::new();
    let mut iterates = Vec::new();
    let mut work = 0.0;

    let p0 = proj.project(con, x0, None)?;
    let mut hint = Some(p0.theta);
    let mut x = p0.x;

    let eta0 = match opts.eta0 {
        Some(e) => e,
        None => {
            let (e, probe_work) = probe_eta0(prob, &x, opts, horizon, &mut proj, hint)?;
            work += probe_work;
            e
        }
    };

    let record = |clock: &mut SolverClock,
                  records: &mut Vec<IterRecord>,
                  iterates: &mut Vec<(usize, Vec<f64>)>,
                  iter: usize,
                  x: &[f64],
                  work: f64|
     -> Result<()> {
        clock.pause();
        let f = obj.loss(x);
        if !f.is_finite() {
            return Err(Error::NonFinite(format!("objective at step {iter}")));
        }
        records.push(IterRecord {
            iter,
            seconds: clock.seconds(),
            objective: f,
            feasibility_error: con.violation(x),
            work,
        });
        if let Some(k) = opts.keep_iterates_every {
            if (records.len() - 1) % k == 0 {
                iterates.push((iter, x.to_vec()));
            }
        }
        clock.resume();
        Ok(())
    };
    record(&mut clock, &mut records, &mut iterates, 0, &x, work)?;

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut perm: Vec<usize> = (0..r).collect();
    let mut batch = Vec::with_capacity(b);
    let mut g = vec![0.0; d];
    for t in 0..total {
        let pos = (t % steps_per_epoch) * b;
        if pos == 0 {
            perm.shuffle(&mut rng);
        }
        batch.clear();
        batch.extend_from_slice(&perm[pos..(pos + b).min(r)]);
        batch.sort_unstable();
        obj.batch_gradient(&x, &batch, &mut g);
        work += batch.len() as f64 / r as f64;

        let eta = eta0 / (1.0 + t as f64 / horizon);
        for (xi, gi) in x.iter_mut().zip(&g) {
            *xi -= eta * gi;
        }
        let step = t + 1;
        if step % opts.projection_period == 0 || step == total {
            let p = proj.project(con, &x, hint)?;
            hint = Some(p.theta);
            x = p.x;
            record(&mut clock, &mut records, &mut iterates, step, &x, work)?;
        }
    }

    Ok((
        x,
        SolverReport {
            records,
            iterates,
            projections: proj.count,
            projection_seconds: proj.seconds,
            termination: Termination::BudgetExhausted,
        },
    ))
}

/// Runs `PROBE_STEPS` steps per candidate on shared mini-batches and scores
/// each candidate with a sampled loss. Returns the winner and the gradient
/// work spent, in full-gradient units.
fn probe_eta0<O: StochasticObjective>(
    prob: &ConstrainedProblem<O>,
    x0: &[f64],
    opts: &SgdOptions,
    horizon: f64,
    proj: &mut ProjectionStats,
    hint: Option<f64>,
) -> Result<(f64, f64)> {
    let obj = &prob.objective;
    let r = obj.components();
    let b = opts.batch_size;
    let scale = obj.curvature_hint();
    let scale = if scale > 0.0 && scale.is_finite() { scale } else { 1.0 };

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    rng.set_stream(1);
    let mut perm: Vec<usize> = (0..r).collect();
    let mut draw = |size: usize| -> Vec<usize> {
        let (chosen, _) = perm.partial_shuffle(&mut rng, size);
        let mut s = chosen.to_vec();
        s.sort_unstable();
        s
    };
    let batches: Vec<Vec<usize>> = (0..PROBE_STEPS).map(|_| draw(b)).collect();
    let eval = draw((PROBE_STEPS * b).min(r));

    let mut g = vec![0.0; x0.len()];
    let mut best = (f64::INFINITY, PROBE_GRID[PROBE_GRID.len() - 1] / scale);
    for &c in &PROBE_GRID {
        let eta0 = c / scale;
        let mut x = x0.to_vec();
        let mut finite = true;
        for (t, batch) in batches.iter().enumerate() {
            obj.batch_gradient(&x, batch, &mut g);
            let eta = eta0 / (1.0 + t as f64 / horizon);
            for (xi, gi) in x.iter_mut().zip(&g) {
                *xi -= eta * gi;
            }
            if x.iter().any(|v| !v.is_finite()) {
                finite = false;
                break;
            }
        }
        if !finite {
            continue;
        }
        let x = proj.project(&prob.constraint, &x, hint)?.x;
        let f = obj.batch_loss(&x, &eval);
        if f.is_finite() && f < best.0 {
            best = (f, eta0);
        }
    }
    let rows = PROBE_GRID.len() * (PROBE_STEPS * b + eval.len());
    Ok((best.1, rows as f64 / r as f64))
}

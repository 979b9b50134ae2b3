//! First-order solvers for `min L(x) s.t. ‖x‖_{1,q} <= γ`.
//!
//! [`spg_solve`] is spectral projected gradient with Barzilai-Borwein steps
//! and a nonmonotone line search; [`sgd_solve`] is mini-batch stochastic
//! projected gradient for losses that split into `r` components.

mod sgd;
mod spg;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

pub use sgd::{sgd_solve, SgdOptions};
pub use spg::{bb_stepsize, spg_solve, BbVariant, SpgOptions, StepBounds};

use crate::ballproj::{project_mixed_ball_with_hint, RootConfig};
use crate::error::{Error, Result};
use crate::grouped::{dot, GroupPartition, GroupedVector};
use crate::norms::{mixed_norm_parts, Exponent, NormSpec};
use crate::prox::ProxTolerance;

/// A differentiable loss on `R^d`.
pub trait Objective {
    fn dim(&self) -> usize;

    fn loss(&self, x: &[f64]) -> f64;

    /// Writes `∇L(x)` into `grad`.
    fn gradient(&self, x: &[f64], grad: &mut [f64]);
}

/// A loss `L = Σ_{i<r} ℓ_i` whose component gradients can be sampled.
pub trait StochasticObjective: Objective {
    /// Number of components `r`.
    fn components(&self) -> usize;

    /// Writes the unbiased estimate `(r / b) Σ_{i ∈ batch} ∇ℓ_i(x)` into
    /// `grad`, with `b = batch.len()`. `batch` is sorted ascending.
    fn batch_gradient(&self, x: &[f64], batch: &[usize], grad: &mut [f64]);

    /// Unbiased loss estimate `(r / b) Σ_{i ∈ batch} ℓ_i(x)`.
    fn batch_loss(&self, x: &[f64], batch: &[usize]) -> f64;

    /// Curvature scale used to size the default stepsize probe, e.g. the
    /// squared Frobenius norm of a least-squares design.
    fn curvature_hint(&self) -> f64 {
        1.0
    }
}

impl<T: Objective + ?Sized> Objective for &T {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn loss(&self, x: &[f64]) -> f64 {
        (**self).loss(x)
    }
    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        (**self).gradient(x, grad)
    }
}

impl<T: StochasticObjective + ?Sized> StochasticObjective for &T {
    fn components(&self) -> usize {
        (**self).components()
    }
    fn batch_gradient(&self, x: &[f64], batch: &[usize], grad: &mut [f64]) {
        (**self).batch_gradient(x, batch, grad)
    }
    fn batch_loss(&self, x: &[f64], batch: &[usize]) -> f64 {
        (**self).batch_loss(x, batch)
    }
    fn curvature_hint(&self) -> f64 {
        (**self).curvature_hint()
    }
}

/// The feasible set `{x : ‖x‖_{1,q} <= γ}` plus the tolerances used to
/// project onto it.
#[derive(Clone, Debug)]
pub struct BallConstraint {
    pub partition: GroupPartition,
    pub q: Exponent,
    pub gamma: f64,
    pub root: RootConfig,
    pub prox: ProxTolerance,
}

/// A projected point and the multiplier that produced it.
pub struct Projected {
    pub x: Vec<f64>,
    pub theta: f64,
}

impl BallConstraint {
    pub fn new(partition: GroupPartition, q: Exponent, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be positive, got {gamma}")));
        }
        Ok(Self {
            partition,
            q,
            gamma,
            root: RootConfig::default(),
            prox: ProxTolerance::default(),
        })
    }

    pub fn norm(&self, x: &[f64]) -> f64 {
        mixed_norm_parts(x, &self.partition, NormSpec::l1q(self.q))
    }

    /// `max(0, ‖x‖_{1,q} − γ)`.
    pub fn violation(&self, x: &[f64]) -> f64 {
        (self.norm(x) - self.gamma).max(0.0)
    }

    /// Absolute feasibility slack granted to projected points.
    pub fn slack(&self) -> f64 {
        self.root.residual_tol * self.gamma.max(1.0)
    }

    pub fn project(&self, x: &[f64]) -> Result<Vec<f64>> {
        Ok(self.project_with_hint(x, None)?.x)
    }

    pub fn project_with_hint(&self, x: &[f64], hint: Option<f64>) -> Result<Projected> {
        let y = GroupedVector::new(x.to_vec(), self.partition.clone())?;
        let hint = hint.filter(|h| *h > 0.0);
        let r = project_mixed_ball_with_hint(&y, self.gamma, self.q, &self.root, &self.prox, hint)?;
        Ok(Projected {
            x: r.x.into_data(),
            theta: r.theta,
        })
    }
}

/// `min L(x) s.t. ‖x‖_{1,q} <= γ`.
#[derive(Clone, Debug)]
pub struct ConstrainedProblem<O> {
    pub objective: O,
    pub constraint: BallConstraint,
}

/// Outcome of a finite-difference gradient check.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GradientCheck {
    pub worst_relative_error: f64,
    pub points: usize,
}

impl<O: Objective> ConstrainedProblem<O> {
    pub fn new(objective: O, constraint: BallConstraint) -> Result<Self> {
        if objective.dim() != constraint.partition.dim() {
            return Err(Error::DimensionMismatch {
                expected: constraint.partition.dim(),
                found: objective.dim(),
            });
        }
        Ok(Self {
            objective,
            constraint,
        })
    }

    /// Compares directional central differences of the loss with `⟨∇L, v⟩`
    /// at `points` random `(x, v)` pairs. Fails when the worst relative error
    /// exceeds `tolerance`.
    pub fn check_gradient(&self, points: usize, seed: u64, tolerance: f64) -> Result<GradientCheck> {
        let d = self.objective.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut grad = vec![0.0; d];
        let mut worst = 0.0f64;
        for _ in 0..points {
            let x: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            let v: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
            self.objective.gradient(&x, &mut grad);
            let analytic = dot(&grad, &v);
            let scale = 1.0 + x.iter().fold(0.0f64, |m, t| m.max(t.abs()));
            let h = 1e-6 * scale;
            let plus: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a + h * b).collect();
            let minus: Vec<f64> = x.iter().zip(&v).map(|(a, b)| a - h * b).collect();
            let numeric = (self.objective.loss(&plus) - self.objective.loss(&minus)) / (2.0 * h);
            let denom = analytic.abs().max(numeric.abs()).max(1e-8);
            worst = worst.max((analytic - numeric).abs() / denom);
        }
        if worst > tolerance {
            return Err(Error::GradientCheck {
                relative_error: worst,
                tolerance,
            });
        }
        Ok(GradientCheck {
            worst_relative_error: worst,
            points,
        })
    }
}

/// Why a solver stopped.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Projected-gradient residual fell below the tolerance.
    Converged,
    IterationLimit,
    /// The line search exhausted its backtracking budget.
    LineSearchFailure,
    /// All requested epochs (or the step budget) were used.
    BudgetExhausted,
}

/// One row of a solver trace.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct IterRecord {
    pub iter: usize,
    /// Solver wall-clock time since start, excluding trace bookkeeping.
    pub seconds: f64,
    pub objective: f64,
    /// `max(0, ‖x‖_{1,q} − γ)`.
    pub feasibility_error: f64,
    /// Gradient work so far, in units of full gradients.
    pub work: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SolverReport {
    pub records: Vec<IterRecord>,
    /// Thinned `(iteration, iterate)` snapshots, when requested.
    pub iterates: Vec<(usize, Vec<f64>)>,
    pub projections: usize,
    pub projection_seconds: f64,
    pub termination: Termination,
}

impl SolverReport {
    pub fn final_objective(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.objective)
    }

    pub fn best_objective(&self) -> f64 {
        self.records.iter().map(|r| r.objective).fold(f64::INFINITY, f64::min)
    }

    pub fn iterations(&self) -> usize {
        self.records.last().map_or(0, |r| r.iter)
    }

    pub fn total_seconds(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.seconds)
    }
}

/// Wall clock that can be paused while the solver does bookkeeping.
pub(crate) struct SolverClock {
    elapsed: f64,
    started: Option<Instant>,
}

impl SolverClock {
    pub fn start() -> Self {
        Self {
            elapsed: 0.0,
            started: Some(Instant::now()),
        }
    }

    pub fn pause(&mut self) {
        if let Some(s) = self.started.take() {
            self.elapsed += s.elapsed().as_secs_f64();
        }
    }

    pub fn resume(&mut self) {
        if self.started.is_none() {
            self.started = Some(Instant::now());
        }
    }

    pub fn seconds(&self) -> f64 {
        self.elapsed + self.started.map_or(0.0, |s| s.elapsed().as_secs_f64())
    }
}

/// Projection counter shared by both solvers.
pub(crate) struct ProjectionStats {
    pub count: usize,
    pub seconds: f64,
}

impl ProjectionStats {
    pub fn new() -> Self {
        Self {
            count: 0,
            seconds: 0.0,
        }
    }

    pub fn project(
        &mut self,
        c: &BallConstraint,
        x: &[f64],
        hint: Option<f64>,
    ) -> Result<Projected> {
        let t = Instant::now();
        let p = c.project_with_hint(x, hint)?;
        self.seconds += t.elapsed().as_secs_f64();
        self.count += 1;
        Ok(p)
    }
}

pub(crate) fn inf_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

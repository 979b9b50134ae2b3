//! Multitask lasso: `min Σ_j ½‖y_j − X_j w_j‖²  s.t.  Σ_i ‖w^i‖_q <= γ`.
//!
//! `W` is `d × n` (one column per task) and stored row-major, so its flat
//! buffer already has the grouped layout the projection wants: `d` groups of
//! `n` consecutive entries, one per feature row.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Normal, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grouped::{GroupPartition, GroupedVector};
use crate::io::{read_matrix_market, read_vector_csv, write_matrix_market, write_vector_csv};
use crate::matrix::{DenseMatrix, SparseMatrix};
use crate::norms::{mixed_norm, Exponent, NormSpec};
use crate::solvers::{BallConstraint, Objective, StochasticObjective};

#[derive(Clone, Debug, PartialEq)]
pub struct MtlTask {
    pub design: SparseMatrix,
    pub labels: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MtlProblem {
    tasks: Vec<MtlTask>,
    d: usize,
    /// Global component index where each task's rows start, plus the total.
    row_offsets: Vec<usize>,
    pub gamma: f64,
    pub q: Exponent,
}

impl MtlProblem {
    pub fn new(tasks: Vec<MtlTask>, d: usize, gamma: f64, q: Exponent) -> Result<Self> {
        if tasks.is_empty() {
            return Err(Error::InvalidArgument("a multitask problem needs at least one task".into()));
        }
        let mut row_offsets = Vec::with_capacity(tasks.len() + 1);
        row_offsets.push(0);
        for (j, t) in tasks.iter().enumerate() {
            if t.design.cols() != d {
                return Err(Error::InvalidArgument(format!(
                    "task {j} has {} columns, expected {d}",
                    t.design.cols()
                )));
            }
            if t.labels.len() != t.design.rows() {
                return Err(Error::InvalidArgument(format!(
                    "task {j} has {} labels for {} rows",
                    t.labels.len(),
                    t.design.rows()
                )));
            }
            row_offsets.push(row_offsets[j] + t.design.rows());
        }
        if !(gamma >= 0.0 && gamma.is_finite()) {
            return Err(Error::InvalidArgument(format!("radius must be nonnegative, got {gamma}")));
        }
        Ok(Self {
            tasks,
            d,
            row_offsets,
            gamma,
            q,
        })
    }

    pub fn tasks(&self) -> &[MtlTask] {
        &self.tasks
    }

    pub fn num_features(&self) -> usize {
        self.d
    }

    pub fn num_tasks(&self) -> usize {
        self.tasks.len()
    }

    /// Total number of rows across tasks.
    pub fn num_rows(&self) -> usize {
        self.row_offsets[self.tasks.len()]
    }

    /// Maps a global component index to `(task, row)`.
    pub fn locate(&self, k: usize) -> (usize, usize) {
        let j = self.row_offsets.partition_point(|&o| o <= k) - 1;
        (j, k - self.row_offsets[j])
    }

    /// One group per feature row of `W`, each of size `n`.
    pub fn partition(&self) -> GroupPartition {
        GroupPartition::uniform(self.d, self.tasks.len()).expect("nonempty problem")
    }

    pub fn constraint(&self) -> Result<BallConstraint> {
        BallConstraint::new(self.partition(), self.q, self.gamma)
    }

    /// Scales every column of every design to unit Euclidean norm and returns
    /// the per-task factors applied (all-zero columns keep factor 1).
    pub fn normalize_columns(&mut self) -> Vec<Vec<f64>> {
        let d = self.d;
        self.tasks
            .iter_mut()
            .map(|t| {
                let mut sq = vec![0.0; d];
                for (_, c, v) in t.design.triplets() {
                    sq[c] += v * v;
                }
                let factors: Vec<f64> = sq.iter().map(|s| if *s > 0.0 { 1.0 / s.sqrt() } else { 1.0 }).collect();
                let cols = t.design.col_indices().to_vec();
                for (v, c) in t.design.values_mut().iter_mut().zip(cols) {
                    *v *= factors[c];
                }
                factors
            })
            .collect()
    }

    #[inline]
    fn residual(&self, w: &[f64], j: usize, i: usize) -> f64 {
        let t = &self.tasks[j];
        t.design.row_dot_strided(i, w, self.tasks.len(), j) - t.labels[i]
    }

    fn loss_flat(&self, w: &[f64]) -> f64 {
        let per_task: Vec<f64> = (0..self.tasks.len())
            .into_par_iter()
            .map(|j| {
                (0..self.tasks[j].labels.len()).fold(0.0, |acc, i| {
                    let r = self.residual(w, j, i);
                    acc + 0.5 * r * r
                })
            })
            .collect();
        per_task.iter().fold(0.0, |acc, v| acc + v)
    }

    /// Adds row `i` of task `j`'s gradient contribution into the flat buffer.
    #[inline]
    fn add_row(&self, w: &[f64], j: usize, i: usize, out: &mut [f64]) {
        let n = self.tasks.len();
        let r = self.residual(w, j, i);
        let (cols, vals) = self.tasks[j].design.row(i);
        for (&c, &a) in cols.iter().zip(vals) {
            out[c * n + j] += r * a;
        }
    }

    fn gradient_flat(&self, w: &[f64], out: &mut [f64]) {
        let n = self.tasks.len();
        let columns: Vec<Vec<f64>> = (0..n)
            .into_par_iter()
            .map(|j| {
                let t = &self.tasks[j];
                let mut col = vec![0.0; self.d];
                for i in 0..t.labels.len() {
                    let r = self.residual(w, j, i);
                    let (cols, vals) = t.design.row(i);
                    for (&c, &a) in cols.iter().zip(vals) {
                        col[c] += r * a;
                    }
                }
                col
            })
            .collect();
        for (j, col) in columns.iter().enumerate() {
            for (c, v) in col.iter().enumerate() {
                out[c * n + j] = *v;
            }
        }
    }
}

impl Objective for MtlProblem {
    fn dim(&self) -> usize {
        self.d * self.tasks.len()
    }

    fn loss(&self, x: &[f64]) -> f64 {
        self.loss_flat(x)
    }

    fn gradient(&self, x: &[f64], grad: &mut [f64]) {
        self.gradient_flat(x, grad)
    }
}

impl StochasticObjective for MtlProblem {
    fn components(&self) -> usize {
        self.num_rows()
    }

    fn batch_gradient(&self, x: &[f64], batch: &[usize], grad: &mut [f64]) {
        grad.fill(0.0);
        for &k in batch {
            let (j, i) = self.locate(k);
            self.add_row(x, j, i, grad);
        }
        let s = self.num_rows() as f64 / batch.len() as f64;
        grad.iter_mut().for_each(|g| *g *= s);
    }

    fn batch_loss(&self, x: &[f64], batch: &[usize]) -> f64 {
        let s = self.num_rows() as f64 / batch.len() as f64;
        s * batch.iter().fold(0.0, |acc, &k| {
            let (j, i) = self.locate(k);
            let r = self.residual(x, j, i);
            acc + 0.5 * r * r
        })
    }

    fn curvature_hint(&self) -> f64 {
        self.tasks.iter().map(|t| t.design.frobenius_norm_sq()).sum()
    }
}

fn check_shape(w: &DenseMatrix, prob: &MtlProblem) -> Result<()> {
    if w.rows() != prob.d || w.cols() != prob.tasks.len() {
        return Err(Error::InvalidArgument(format!(
            "W is {}x{}, expected {}x{}",
            w.rows(),
            w.cols(),
            prob.d,
            prob.tasks.len()
        )));
    }
    Ok(())
}

/// `Σ_j ½‖y_j − X_j w_j‖²`.
pub fn mtl_objective(w: &DenseMatrix, prob: &MtlProblem) -> Result<f64> {
    check_shape(w, prob)?;
    Ok(prob.loss_flat(w.as_slice()))
}

/// Column `j` is `X_jᵀ(X_j w_j − y_j)`.
pub fn mtl_gradient(w: &DenseMatrix, prob: &MtlProblem) -> Result<DenseMatrix> {
    check_shape(w, prob)?;
    let mut out = DenseMatrix::zeros(prob.d, prob.tasks.len());
    prob.gradient_flat(w.as_slice(), out.as_mut_slice());
    Ok(out)
}

/// `(r / b) Σ_{(j,i) ∈ batch} X_j[i,:]ᵀ (X_j[i,:] w_j − y_j[i])` placed in
/// column `j`, with `r` the total row count and `b = batch.len()`.
pub fn mtl_stoch_gradient(w: &DenseMatrix, prob: &MtlProblem, batch: &[(usize, usize)]) -> Result<DenseMatrix> {
    check_shape(w, prob)?;
    if batch.is_empty() {
        return Err(Error::InvalidArgument("empty batch".into()));
    }
    let mut global = Vec::with_capacity(batch.len());
    for &(j, i) in batch {
        if j >= prob.tasks.len() || i >= prob.tasks[j].labels.len() {
            return Err(Error::InvalidArgument(format!("batch index ({j}, {i}) out of range")));
        }
        global.push(prob.row_offsets[j] + i);
    }
    global.sort_unstable();
    let mut out = DenseMatrix::zeros(prob.d, prob.tasks.len());
    prob.batch_gradient(w.as_slice(), &global, out.as_mut_slice());
    Ok(out)
}

/// Views the rows of `W` as groups.
pub fn rows_as_groups(w: &DenseMatrix) -> Result<GroupedVector> {
    GroupedVector::new(w.as_slice().to_vec(), GroupPartition::uniform(w.rows(), w.cols())?)
}

/// Inverse of [`rows_as_groups`].
pub fn groups_as_rows(g: &GroupedVector) -> Result<DenseMatrix> {
    let p = g.partition();
    let n = if p.num_groups() == 0 { 0 } else { p.group_size(0) };
    if (0..p.num_groups()).any(|i| p.group_size(i) != n) {
        return Err(Error::InvalidGroups("rows need equal-size groups".into()));
    }
    DenseMatrix::from_row_major(p.num_groups(), n, g.data().to_vec())
}

/// `Σ_i ‖w^i‖_q`.
pub fn row_norm(w: &DenseMatrix, q: Exponent) -> Result<f64> {
    Ok(mixed_norm(&rows_as_groups(w)?, NormSpec::l1q(q)))
}

/// Rows whose `ℓ∞` norm exceeds `rel_threshold` times the largest row's.
pub fn row_support(w: &DenseMatrix, rel_threshold: f64) -> Vec<usize> {
    let norms: Vec<f64> = (0..w.rows())
        .map(|i| w.row(i).iter().fold(0.0f64, |m, v| m.max(v.abs())))
        .collect();
    let top = norms.iter().copied().fold(0.0f64, f64::max);
    if top == 0.0 {
        return Vec::new();
    }
    (0..w.rows()).filter(|&i| norms[i] > rel_threshold * top).collect()
}

/// F1 score of a recovered index set against the truth; 1 when both are empty.
pub fn support_f1(found: &[usize], truth: &[usize]) -> f64 {
    if found.is_empty() && truth.is_empty() {
        return 1.0;
    }
    let hits = found.iter().filter(|i| truth.contains(i)).count() as f64;
    2.0 * hits / (found.len() + truth.len()) as f64
}

/// Shape of a synthetic multitask problem: `n` tasks sharing an `m × d`
/// design size, with `active_rows` nonzero rows in the planted `W`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub m: usize,
    pub d: usize,
    pub n: usize,
    /// Probability that a design entry is nonzero.
    pub density: f64,
    pub active_rows: usize,
    /// Label noise standard deviation; `None` means 1% of the signal RMS.
    pub noise_std: Option<f64>,
    pub seed: u64,
}

impl SynthSpec {
    pub fn validate(&self) -> Result<()> {
        if self.m == 0 || self.d == 0 || self.n == 0 {
            return Err(Error::InvalidArgument("m, d and n must be positive".into()));
        }
        if !(self.density > 0.0 && self.density <= 1.0) {
            return Err(Error::InvalidArgument(format!("density must lie in (0, 1], got {}", self.density)));
        }
        if self.active_rows > self.d {
            return Err(Error::InvalidArgument(format!(
                "{} active rows exceed {} features",
                self.active_rows, self.d
            )));
        }
        if let Some(s) = self.noise_std {
            if !(s >= 0.0 && s.is_finite()) {
                return Err(Error::InvalidArgument(format!("noise std must be nonnegative, got {s}")));
            }
        }
        Ok(())
    }
}

/// A synthetic problem, the planted `W` and its active rows.
#[derive(Clone, Debug, PartialEq)]
pub struct Synthetic {
    pub problem: MtlProblem,
    pub planted: DenseMatrix,
    pub support: Vec<usize>,
}

/// Draws designs with Bernoulli(`density`) sparsity and standard normal
/// values, a planted `W` with standard normal entries on `active_rows`
/// random rows, and labels `X_j w_j + noise`. The problem's radius is the
/// planted `Σ_i ‖w^i‖_∞` and its exponent is `∞`.
pub fn generate_synthetic(spec: &SynthSpec) -> Result<Synthetic> {
    spec.validate()?;
    let SynthSpec { m, d, n, .. } = *spec;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);

    let mut support = index::sample(&mut rng, d, spec.active_rows).into_vec();
    support.sort_unstable();
    let mut planted = DenseMatrix::zeros(d, n);
    for &i in &support {
        for j in 0..n {
            planted.set(i, j, rng.sample(StandardNormal));
        }
    }

    let mut designs = Vec::with_capacity(n);
    for _ in 0..n {
        let mut triplets = Vec::new();
        for i in 0..m {
            for c in 0..d {
                if spec.density >= 1.0 || rng.random::<f64>() < spec.density {
                    triplets.push((i, c, rng.sample::<f64, _>(StandardNormal)));
                }
            }
        }
        designs.push(SparseMatrix::from_triplets(m, d, &triplets)?);
    }

    let signals: Vec<Vec<f64>> = designs
        .iter()
        .enumerate()
        .map(|(j, x)| (0..m).map(|i| x.row_dot_strided(i, planted.as_slice(), n, j)).collect())
        .collect();
    let noise_std = match spec.noise_std {
        Some(s) => s,
        None => {
            let sq: f64 = signals.iter().flatten().map(|v| v * v).sum();
            let rms = (sq / (m * n) as f64).sqrt();
            if rms > 0.0 {
                0.01 * rms
            } else {
                0.01
            }
        }
    };
    let noise = Normal::new(0.0, noise_std).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    let tasks = designs
        .into_iter()
        .zip(signals)
        .map(|(design, signal)| {
            let labels = signal
                .into_iter()
                .map(|s| if noise_std > 0.0 { s + rng.sample(noise) } else { s })
                .collect();
            MtlTask { design, labels }
        })
        .collect();

    let gamma = row_norm(&planted, Exponent::INF)?;
    let problem = MtlProblem::new(tasks, d, gamma, Exponent::INF)?;
    Ok(Synthetic {
        problem,
        planted,
        support,
    })
}

/// On-disk description of a multitask problem. Paths are relative to the
/// manifest's directory unless absolute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub d: usize,
    pub n: usize,
    pub gamma: f64,
    pub q: Exponent,
    pub tasks: Vec<TaskFiles>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TaskFiles {
    pub matrix: PathBuf,
    pub labels: PathBuf,
}

/// Writes `task_<j>.mtx`, `task_<j>.csv` and `manifest.json` into `dir`
/// and returns the manifest path.
pub fn save_mtl(prob: &MtlProblem, dir: impl AsRef<Path>) -> Result<PathBuf> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir)?;
    let mut files = Vec::with_capacity(prob.tasks.len());
    for (j, t) in prob.tasks.iter().enumerate() {
        let entry = TaskFiles {
            matrix: PathBuf::from(format!("task_{j}.mtx")),
            labels: PathBuf::from(format!("task_{j}.csv")),
        };
        write_matrix_market(dir.join(&entry.matrix), &t.design)?;
        write_vector_csv(dir.join(&entry.labels), &t.labels)?;
        files.push(entry);
    }
    let manifest = Manifest {
        d: prob.d,
        n: prob.tasks.len(),
        gamma: prob.gamma,
        q: prob.q,
        tasks: files,
    };
    let path = dir.join("manifest.json");
    fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(path)
}

/// Loads a problem from a manifest written by [`save_mtl`] or by hand.
/// Errors name the file at fault.
pub fn load_mtl(manifest: impl AsRef<Path>) -> Result<MtlProblem> {
    let path = manifest.as_ref();
    let data_err = |p: &Path, message: String| Error::Data {
        path: p.to_path_buf(),
        message,
    };
    let text = fs::read_to_string(path).map_err(|e| data_err(path, e.to_string()))?;
    let m: Manifest = serde_json::from_str(&text).map_err(|e| data_err(path, e.to_string()))?;
    if m.tasks.len() != m.n {
        return Err(data_err(path, format!("lists {} tasks but n = {}", m.tasks.len(), m.n)));
    }
    let base = path.parent().unwrap_or(Path::new("."));
    let mut tasks = Vec::with_capacity(m.n);
    for files in &m.tasks {
        let mpath = base.join(&files.matrix);
        let lpath = base.join(&files.labels);
        let design = read_matrix_market(&mpath).map_err(|e| match e {
            Error::Io(io) => data_err(&mpath, io.to_string()),
            other => other,
        })?;
        if design.cols() != m.d {
            return Err(data_err(&mpath, format!("has {} columns, manifest says d = {}", design.cols(), m.d)));
        }
        let labels = read_vector_csv(&lpath).map_err(|e| match e {
            Error::Io(io) => data_err(&lpath, io.to_string()),
            other => other,
        })?;
        if labels.len() != design.rows() {
            return Err(data_err(
                &lpath,
                format!("has {} labels but {} has {} rows", labels.len(), mpath.display(), design.rows()),
            ));
        }
        tasks.push(MtlTask { design, labels });
    }
    MtlProblem::new(tasks, m.d, m.gamma, m.q)
}

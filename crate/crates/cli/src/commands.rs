use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;
use std::time::Instant;

use anyhow::{bail, Context, Result};
use mixnorm::ballproj::{project_mixed_ball, RootConfig};
use mixnorm::io::read_matrix_market;
use mixnorm::mtl::{row_norm, Synthetic};
use mixnorm::norms::{mixed_norm, Exponent, NormSpec};
use mixnorm::prox::ProxTolerance;
use mixnorm::solvers::{
    sgd_solve, spg_solve, BbVariant, ConstrainedProblem, SgdOptions, SolverReport, SpgOptions, Termination,
};
use mixnorm::{generate_synthetic, load_mtl, save_mtl, GroupPartition, GroupedVector, MtlProblem, SynthSpec};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::records::{GenSummary, RunRecord, SolveSummary, TRACE_HEADER};
use crate::{GenArgs, ProjectArgs, SolveArgs, SolverKind, SynthArgs, Variant};

fn open_output(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("creating {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn project(a: &ProjectArgs) -> Result<()> {
    if a.q.is_empty() || a.ratios.is_empty() {
        bail!("--q and --ratios must be non-empty");
    }
    if let Some(r) = a.ratios.iter().find(|r| !(**r > 0.0 && r.is_finite())) {
        bail!("radius ratios must be positive, got {r}");
    }
    let (rows, cols, data, seed) = match &a.matrix_file {
        Some(path) => {
            let m = read_matrix_market(path)?.to_dense();
            (m.rows(), m.cols(), m.into_vec(), None)
        }
        None => {
            if a.rows == 0 || a.cols == 0 {
                bail!("--rows and --cols must be positive");
            }
            let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
            let data = (0..a.rows * a.cols).map(|_| rng.sample(StandardNormal)).collect();
            (a.rows, a.cols, data, Some(a.seed))
        }
    };
    let v = GroupedVector::new(data, GroupPartition::uniform(rows, cols)?)?;
    let cfg = RootConfig {
        residual_tol: a.residual_tol,
        ..RootConfig::default()
    };
    cfg.validate()?;
    let tol = ProxTolerance::default();

    let mut out = open_output(a.output.as_deref())?;
    for &q in &a.q {
        let spec = NormSpec::l1q(q);
        let norm = mixed_norm(&v, spec);
        if norm == 0.0 {
            bail!("input matrix is zero; every radius would be zero");
        }
        for &ratio in &a.ratios {
            let gamma = ratio * norm;
            let start = Instant::now();
            let r = project_mixed_ball(&v, gamma, q, &cfg, &tol)?;
            let seconds = start.elapsed().as_secs_f64();
            let feasibility_error = if r.interior {
                0.0
            } else {
                (gamma - mixed_norm(&r.x, spec)).abs()
            };
            let objective = 0.5 * r.x.data().iter().zip(v.data()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>();
            let record = RunRecord {
                experiment: a.experiment.clone(),
                q,
                gamma_ratio: ratio,
                gamma,
                rows,
                cols,
                seed,
                seconds: round_micros(seconds),
                feasibility_error,
                objective,
                theta: r.theta,
                evaluations: r.evaluations,
                interior: r.interior,
            };
            serde_json::to_writer(&mut out, &record)?;
            writeln!(out)?;
        }
    }
    out.flush()?;
    Ok(())
}

fn round_micros(s: f64) -> f64 {
    (s * 1e6).round() / 1e6
}

fn synth_spec(s: &SynthArgs) -> SynthSpec {
    SynthSpec {
        m: s.m,
        d: s.d,
        n: s.n,
        density: s.density,
        active_rows: s.active_rows,
        noise_std: s.noise_std,
        seed: s.data_seed,
    }
}

pub fn solve(a: &SolveArgs) -> Result<()> {
    let mut problem: MtlProblem = match &a.manifest {
        Some(path) => load_mtl(path)?,
        None => generate_synthetic(&synth_spec(&a.synth))?.problem,
    };
    if let Some(g) = a.gamma {
        problem.gamma = g;
    }
    if let Some(q) = a.q {
        problem.q = q;
    }
    if a.normalize {
        problem.normalize_columns();
    }
    let constraint = problem.constraint()?;
    let (features, tasks, rows, gamma, q) =
        (problem.num_features(), problem.num_tasks(), problem.num_rows(), problem.gamma, problem.q);
    let dim = features * tasks;
    let prob = ConstrainedProblem::new(problem, constraint)?;
    let x0 = vec![0.0; dim];

    let (name, report): (&'static str, SolverReport) = match a.solver {
        SolverKind::Spg => {
            let mut o = SpgOptions::default();
            if let Some(v) = a.max_iter {
                o.max_iter = v;
            }
            if let Some(v) = a.tol {
                o.tol = v;
            }
            if let Some(v) = a.memory {
                o.memory = v;
            }
            if let Some(v) = a.bb_variant {
                o.variant = match v {
                    Variant::Bb1 => BbVariant::Bb1,
                    Variant::Bb2 => BbVariant::Bb2,
                    Variant::Adaptive => BbVariant::Adaptive,
                };
            }
            ("spg", spg_solve(&prob, &x0, &o)?.1)
        }
        SolverKind::Sgd => {
            let mut o = SgdOptions {
                seed: a.seed,
                eta0: a.eta0,
                decay_horizon: a.decay_horizon,
                max_steps: a.max_steps,
                ..Default::default()
            };
            if let Some(v) = a.batch_size {
                o.batch_size = v;
            }
            if let Some(v) = a.projection_period {
                o.projection_period = v;
            }
            if let Some(v) = a.epochs {
                o.epochs = v;
            }
            ("sgd", sgd_solve(&prob, &x0, &o)?.1)
        }
    };

    if let Some(path) = &a.trace {
        write_trace(path, &report)?;
    }
    let last = report.records.last().context("solver produced no records")?;
    let summary = SolveSummary {
        solver: name,
        termination: report.termination,
        features,
        tasks,
        rows,
        gamma,
        q,
        seed: a.seed,
        iterations: report.iterations(),
        projections: report.projections,
        projection_seconds: round_micros(report.projection_seconds),
        total_seconds: round_micros(report.total_seconds()),
        initial_objective: report.records[0].objective,
        final_objective: report.final_objective(),
        best_objective: report.best_objective(),
        feasibility_error: last.feasibility_error,
        work: last.work,
    };
    let mut out = open_output(a.summary.as_deref())?;
    serde_json::to_writer_pretty(&mut out, &summary)?;
    writeln!(out)?;
    out.flush()?;
    if report.termination == Termination::LineSearchFailure {
        bail!("line search failed after {} iterations; partial results written", summary.iterations);
    }
    Ok(())
}

fn write_trace(path: &Path, report: &SolverReport) -> Result<()> {
    let mut w = csv::Writer::from_path(path).with_context(|| format!("creating {}", path.display()))?;
    w.write_record(TRACE_HEADER)?;
    for r in &report.records {
        w.write_record([
            r.iter.to_string(),
            format!("{:.6}", r.seconds),
            r.objective.to_string(),
            r.feasibility_error.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn gen(a: &GenArgs) -> Result<()> {
    let Synthetic { problem, planted, support } = generate_synthetic(&synth_spec(&a.synth))?;
    let manifest = save_mtl(&problem, &a.out)?;
    let summary = GenSummary {
        manifest: manifest.display().to_string(),
        support,
        planted_norm: row_norm(&planted, Exponent::INF)?,
    };
    println!("{}", serde_json::to_string(&summary)?);
    Ok(())
}

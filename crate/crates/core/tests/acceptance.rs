//! Acceptance gate: runs every criterion, prints one PASS/FAIL line each and
//! exits nonzero if any fails.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::Rng;

use common::{max_abs_diff, normal_vec, rng};
use mixnorm::ballproj::MixedBallResidual;
use mixnorm::mtl::{row_support, support_f1};
use mixnorm::prox::project_lq_ball;
use mixnorm::solvers::ConstrainedProblem;
use mixnorm::*;

type Outcome = std::result::Result<String, String>;

fn check(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn exp(q: f64) -> Exponent {
    if q.is_infinite() {
        Exponent::INF
    } else {
        Exponent::new(q).unwrap()
    }
}

fn grouped(groups: &[Vec<f64>]) -> GroupedVector {
    let sizes: Vec<usize> = groups.iter().map(|g| g.len()).collect();
    GroupedVector::new(groups.concat(), GroupPartition::from_sizes(&sizes).unwrap()).unwrap()
}

fn random_groups(r: &mut rand_chacha::ChaCha8Rng, max_groups: usize, max_dim: usize) -> Vec<Vec<f64>> {
    let m = r.random_range(1..=max_groups);
    let d = r.random_range(m..=max_dim);
    let mut sizes = vec![1; m];
    for _ in m..d {
        sizes[r.random_range(0..m)] += 1;
    }
    sizes.iter().map(|&s| normal_vec(r, s)).collect()
}

fn defaults() -> (RootConfig, ProxTolerance) {
    (RootConfig::default(), ProxTolerance::default())
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn projection_oracle() -> Outcome {
    let mut r = rng(1);
    let (cfg, tol) = defaults();
    let qs = [1.0, 2.0, 3.0, f64::INFINITY];
    let ratios = [0.1, 0.5, 0.9];
    let mut worst = 0.0f64;
    for k in 0..200 {
        let q = qs[k % 4];
        let ratio = ratios[(k / 4) % 3];
        let groups = random_groups(&mut r, 4, 20);
        let f: f64 = groups.iter().map(|g| common::norm(g, q)).sum();
        let gamma = ratio * f;
        let got = project_mixed_ball(&grouped(&groups), gamma, exp(q), &cfg, &tol).map_err(|e| e.to_string())?;
        let want = common::mixed_ball(&groups, gamma, q);
        let diff = max_abs_diff(got.x.data(), &want);
        worst = worst.max(diff);
        check(diff <= 1e-8, || format!("instance {k} (q={q}, ratio={ratio}): diff {diff:e}"))?;
    }
    Ok(format!("200 instances, max diff {worst:.1e}"))
}

fn feasibility_accuracy() -> Outcome {
    let mut r = rng(2);
    let (rows, cols) = (10_000, 300);
    let data = normal_vec(&mut r, rows * cols);
    let y = GroupedVector::new(data, GroupPartition::uniform(rows, cols).unwrap()).unwrap();
    let spec = NormSpec::l1q(Exponent::INF);
    let f = mixed_norm(&y, spec);
    let (cfg, tol) = defaults();
    let mut worst = 0.0f64;
    for ratio in [0.01, 0.05, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6] {
        let gamma = ratio * f;
        let p = project_mixed_ball(&y, gamma, Exponent::INF, &cfg, &tol).map_err(|e| e.to_string())?;
        let err = (gamma - mixed_norm(&p.x, spec)).abs() / gamma;
        worst = worst.max(err);
        check(err <= 1e-9, || format!("ratio {ratio}: relative error {err:e}"))?;
    }
    Ok(format!("8 ratios, max relative error {worst:.1e}"))
}

fn lemma_one() -> Outcome {
    let mut r = rng(3);
    let tol = ProxTolerance::default();
    let qs = [1.0, 1.5, 2.0, 3.0, f64::INFINITY];
    for k in 0..100 {
        let q = qs[k % qs.len()];
        let groups = random_groups(&mut r, 6, 30);
        let f: f64 = groups.iter().map(|g| common::norm(g, q)).sum();
        let gamma = r.random_range(0.05..0.95) * f;
        let y = grouped(&groups);
        let g = MixedBallResidual::new(&y, gamma, exp(q), &tol).map_err(|e| e.to_string())?;
        let tmax = g.theta_max();
        let vals: Vec<f64> = (0..50)
            .map(|i| g.eval(tmax * i as f64 / 49.0))
            .collect::<Result<_>>()
            .map_err(|e| e.to_string())?;
        check(vals[0] > 0.0, || format!("instance {k}: g(0) = {}", vals[0]))?;
        check(vals.windows(2).all(|w| w[1] <= w[0] + 1e-9), || format!("instance {k} (q={q}) increases"))?;
        let end = g.eval(tmax).map_err(|e| e.to_string())?;
        check((end + gamma).abs() <= 1e-9 * gamma.max(1.0), || {
            format!("instance {k}: g(θmax) + γ = {:e}", end + gamma)
        })?;
        for t in [tmax, tmax * 1.5] {
            let x = prox_grouped(&y, t, exp(q), &tol).map_err(|e| e.to_string())?;
            check(x.data().iter().all(|v| *v == 0.0), || format!("instance {k}: prox nonzero at θ = {t}"))?;
        }
    }
    Ok("100 inputs".into())
}

fn lemma_two() -> Outcome {
    let mut r = rng(4);
    let es = [1.0, 1.5, 2.0, 3.0, f64::INFINITY];
    let mut witnesses = 0;
    for k in 0..1000 {
        let (p, q) = (es[k % 5], es[(k / 5) % 5]);
        let spec = NormSpec::new(exp(p), exp(q));
        let groups = random_groups(&mut r, 5, 15);
        let sizes: Vec<usize> = groups.iter().map(|g| g.len()).collect();
        let x = grouped(&groups);
        let u = GroupedVector::new(normal_vec(&mut r, x.len()), GroupPartition::from_sizes(&sizes).unwrap()).unwrap();
        let lhs = x.dot(&u).abs();
        let rhs = mixed_norm(&x, spec) * dual_mixed_norm(&u, spec);
        check(lhs <= rhs * (1.0 + 1e-10), || format!("pair {k} (p={p}, q={q}): {lhs} > {rhs}"))?;

        if p.is_finite() && q.is_finite() && p > 1.0 && q > 1.0 {
            witnesses += 1;
            let w = dual_witness(&u, spec).map_err(|e| e.to_string())?;
            let dual = dual_mixed_norm(&u, spec);
            let attained = w.dot(&u);
            check((attained - dual).abs() <= 1e-9 * dual, || {
                format!("pair {k}: witness gives {attained}, dual norm {dual}")
            })?;
            let unit = mixed_norm(&w, spec);
            check((unit - 1.0).abs() <= 1e-10, || format!("pair {k}: witness norm {unit}"))?;
        }
    }
    Ok(format!("1000 pairs, {witnesses} witnesses"))
}

fn prox_consistency() -> Outcome {
    let mut r = rng(5);
    let tol = ProxTolerance::default();
    let mut worst = 0.0f64;
    for k in 0..500 {
        let n = r.random_range(1..=12);
        let v = normal_vec(&mut r, n);
        let theta = r.random_range(0.01..2.0) * common::norm(&v, 2.0);
        let closed = prox_l2(&v, theta);
        // the general path: v minus the Euclidean-ball projection found by root finding
        let ball = project_lq_ball(&v, theta, Exponent::TWO, &tol).map_err(|e| e.to_string())?;
        let general: Vec<f64> = v.iter().zip(&ball).map(|(a, b)| a - b).collect();
        let diff = max_abs_diff(&general, &closed);
        worst = worst.max(diff);
        check(diff <= 1e-9, || format!("input {k}: diff {diff:e}"))?;
    }

    let near_one = prox_lq(&[3.0, -1.0, 0.5], 1.0, Exponent::new(1.0001).unwrap(), &tol).map_err(|e| e.to_string())?;
    let d1 = max_abs_diff(&near_one, &prox_l1(&[3.0, -1.0, 0.5], 1.0));
    check(d1 <= 1e-3, || format!("q=1.0001 differs from l1 prox by {d1:e}"))?;
    let large = prox_lq(&[3.0, 1.0], 1.0, Exponent::new(50.0).unwrap(), &tol).map_err(|e| e.to_string())?;
    let d2 = max_abs_diff(&large, &prox_linf(&[3.0, 1.0], 1.0));
    check(d2 <= 1e-2, || format!("q=50 differs from linf prox by {d2:e}"))?;

    let mut moreau = 0.0f64;
    for q in [1.5, 2.0, 3.0, f64::INFINITY] {
        for _ in 0..50 {
            let v = normal_vec(&mut r, 10);
            let theta = r.random_range(0.05..2.0);
            let x = prox_lq(&v, theta, exp(q), &tol).map_err(|e| e.to_string())?;
            // θ · P_{dual unit ball}(v / θ), from the independent oracle
            let scaled: Vec<f64> = v.iter().map(|a| a / theta).collect();
            let qs = common::conjugate(q);
            let p = if common::norm(&scaled, qs) <= 1.0 {
                scaled
            } else if qs == 1.0 {
                common::l1_ball(&scaled, 1.0)
            } else if qs == 2.0 {
                let s = 1.0 / common::norm(&scaled, 2.0);
                scaled.iter().map(|a| a * s).collect()
            } else {
                common::lp_ball(&scaled, 1.0, qs)
            };
            let res: Vec<f64> = x.iter().zip(&p).map(|(a, b)| a + theta * b).collect();
            let d = max_abs_diff(&res, &v);
            moreau = moreau.max(d);
            check(d <= 1e-9, || format!("Moreau residual {d:e} at q={q}"))?;
        }
    }
    Ok(format!("closed form {worst:.1e}, q=1.0001 {d1:.1e}, q=50 {d2:.1e}, Moreau {moreau:.1e}"))
}

fn matrix_suite() -> Outcome {
    let mut r = rng(6);
    let tol = ProxTolerance::default();
    let mut random = |m: usize, n: usize| DenseMatrix::from_row_major(m, n, normal_vec(&mut r, m * n)).unwrap();

    let mut svt = 0.0f64;
    for &(m, n) in &[(5, 3), (3, 5), (8, 12), (30, 20), (40, 40)] {
        let y = random(m, n);
        let theta = 1.5;
        let got = prox_schatten(&y, theta, Exponent::ONE, &tol).map_err(|e| e.to_string())?;
        let ny = DMatrix::from_row_slice(m, n, y.as_slice());
        let d = ny.svd(true, true);
        let s = common::soft_threshold(d.singular_values.as_slice(), theta);
        let (u, vt) = (d.u.unwrap(), d.v_t.unwrap());
        let want = &u * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(s)) * &vt;
        let want: Vec<f64> = (0..m).flat_map(|i| (0..n).map(move |j| (i, j))).map(|(i, j)| want[(i, j)]).collect();
        let diff = max_abs_diff(got.as_slice(), &want);
        svt = svt.max(diff);
        check(diff <= 1e-8, || format!("SVT {m}x{n}: diff {diff:e}"))?;
    }

    let (cfg, _) = defaults();
    let mut r2 = rng(60);
    let mut diag = 0.0f64;
    for q in [1.0, 2.0, 3.0, f64::INFINITY] {
        let diags: Vec<Vec<f64>> = (0..4).map(|_| normal_vec(&mut r2, 3)).collect();
        let blocks: Vec<DenseMatrix> = diags.iter().map(|d| DenseMatrix::from_diag(d)).collect();
        let f: f64 = diags.iter().map(|d| common::norm(d, q)).sum();
        let gamma = 0.4 * f;
        let pm = project_matrix_mixed_ball(&blocks, gamma, exp(q), &cfg, &tol).map_err(|e| e.to_string())?;
        let pv = project_mixed_ball(&grouped(&diags), gamma, exp(q), &cfg, &tol).map_err(|e| e.to_string())?;
        for (b, blk) in pm.x.iter().enumerate() {
            for i in 0..3 {
                for j in 0..3 {
                    let want = if i == j { pv.x.group(b)[i] } else { 0.0 };
                    let d = (blk.get(i, j) - want).abs();
                    diag = diag.max(d);
                    check(d <= 1e-8, || format!("diagonal blocks q={q}: diff {d:e}"))?;
                }
            }
        }
    }

    let mut resid = 0.0f64;
    for &(m, n) in &[(200, 100), (100, 200), (64, 64), (65, 70), (150, 20), (1, 9)] {
        let a = random(m, n);
        let dec = svd(&a).map_err(|e| e.to_string())?;
        let fro = a.frobenius_norm();
        let k = dec.singular_values.len();
        let eye = DenseMatrix::identity(k);
        let rec = a.sub(&dec.reconstruct()).unwrap().frobenius_norm();
        let ou = dec.u.transpose().matmul(&dec.u).unwrap().sub(&eye).unwrap().frobenius_norm();
        let ov = dec.v.transpose().matmul(&dec.v).unwrap().sub(&eye).unwrap().frobenius_norm();
        let worst = rec.max(ou).max(ov) / fro;
        resid = resid.max(worst);
        check(worst <= 1e-12, || format!("SVD {m}x{n}: relative residual {worst:e}"))?;
    }
    Ok(format!("SVT {svt:.1e}, diagonal {diag:.1e}, SVD {resid:.1e}"))
}

struct Shift(Vec<f64>);

impl Objective for Shift {
    fn dim(&self) -> usize {
        self.0.len()
    }
    fn loss(&self, x: &[f64]) -> f64 {
        0.5 * x.iter().zip(&self.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }
    fn gradient(&self, x: &[f64], g: &mut [f64]) {
        for ((gi, a), b) in g.iter_mut().zip(x).zip(&self.0) {
            *gi = a - b;
        }
    }
}

fn solver_correctness() -> Outcome {
    let mut r = rng(7);
    let (cfg, tol) = defaults();
    let mut spg_gap = 0.0f64;
    for q in [Exponent::TWO, Exponent::INF] {
        for _ in 0..5 {
            let groups: Vec<Vec<f64>> = (0..6).map(|_| normal_vec(&mut r, 4)).collect();
            let y = grouped(&groups);
            let gamma = 0.2 * mixed_norm(&y, NormSpec::l1q(q));
            let want = project_mixed_ball(&y, gamma, q, &cfg, &tol).map_err(|e| e.to_string())?;
            let con = BallConstraint::new(y.partition().clone(), q, gamma).map_err(|e| e.to_string())?;
            let prob = ConstrainedProblem::new(Shift(y.data().to_vec()), con).map_err(|e| e.to_string())?;
            let (x, _) = spg_solve(&prob, &vec![0.0; y.len()], &SpgOptions::default()).map_err(|e| e.to_string())?;
            let d = max_abs_diff(&x, want.x.data());
            spg_gap = spg_gap.max(d);
            check(d <= 1e-6, || format!("SPG at q={q} is {d:e} from the projection"))?;
        }
    }

    let synth = generate_synthetic(&SynthSpec {
        m: 8,
        d: 5,
        n: 2,
        density: 0.6,
        active_rows: 2,
        noise_std: None,
        seed: 7,
    })
    .map_err(|e| e.to_string())?;
    let p = synth.problem;
    let shift = ConstrainedProblem::new(
        Shift(normal_vec(&mut r, 10)),
        BallConstraint::new(GroupPartition::uniform(5, 2).unwrap(), Exponent::INF, 1.0).unwrap(),
    )
    .unwrap();
    shift.check_gradient(20, 1, 1e-5).map_err(|e| e.to_string())?;
    let mtl = ConstrainedProblem::new(p.clone(), p.constraint().unwrap()).unwrap();
    let fd = mtl.check_gradient(20, 2, 1e-5).map_err(|e| e.to_string())?;

    // full batch, every step projected, constant step
    let eta = 0.5 / p.curvature_hint();
    let opts = SgdOptions {
        batch_size: p.num_rows(),
        eta0: Some(eta),
        decay_horizon: Some(f64::INFINITY),
        projection_period: 1,
        epochs: 30,
        seed: 11,
        ..Default::default()
    };
    let (xs, _) = sgd_solve(&mtl, &vec![0.0; 10], &opts).map_err(|e| e.to_string())?;
    let con = &mtl.constraint;
    let first = con.project_with_hint(&[0.0; 10], None).map_err(|e| e.to_string())?;
    let (mut w, mut hint) = (first.x, Some(first.theta));
    let mut g = vec![0.0; 10];
    for _ in 0..30 {
        p.gradient(&w, &mut g);
        let step: Vec<f64> = w.iter().zip(&g).map(|(a, b)| a - eta * b).collect();
        let next = con.project_with_hint(&step, hint).map_err(|e| e.to_string())?;
        w = next.x;
        hint = Some(next.theta);
    }
    check(xs == w, || "full-batch SGD differs from projected gradient".into())?;

    let wm = DenseMatrix::from_row_major(5, 2, normal_vec(&mut r, 10)).unwrap();
    let rows: Vec<(usize, usize)> = (0..p.num_rows()).map(|k| p.locate(k)).collect();
    check(rows.len() <= 20, || "too many rows for enumeration".into())?;
    let mut mean = vec![0.0; 10];
    for &b in &rows {
        let gs = mtl_stoch_gradient(&wm, &p, &[b]).map_err(|e| e.to_string())?;
        for (m, v) in mean.iter_mut().zip(gs.as_slice()) {
            *m += v / rows.len() as f64;
        }
    }
    let full = mtl_gradient(&wm, &p).map_err(|e| e.to_string())?;
    let scale = 1.0 + full.as_slice().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let enum_gap = max_abs_diff(&mean, full.as_slice()) / scale;
    check(enum_gap <= 1e-12, || format!("singleton average off by {enum_gap:e}"))?;
    Ok(format!(
        "SPG gap {spg_gap:.1e}, FD {:.1e}, enumeration {enum_gap:.1e}",
        fd.worst_relative_error
    ))
}

fn mtl_recovery() -> Outcome {
    let s = generate_synthetic(&SynthSpec {
        m: 200,
        d: 100,
        n: 10,
        density: 1.0,
        active_rows: 5,
        noise_std: Some(0.0),
        seed: 8,
    })
    .map_err(|e| e.to_string())?;
    let p = &s.problem;
    let prob = ConstrainedProblem::new(p, p.constraint().unwrap()).unwrap();
    let opts = SpgOptions {
        tol: 1e-5,
        max_iter: 5000,
        ..Default::default()
    };
    let (x, rep) = spg_solve(&prob, &vec![0.0; 1000], &opts).map_err(|e| e.to_string())?;
    let w = DenseMatrix::from_row_major(100, 10, x).unwrap();
    let f1 = support_f1(&row_support(&w, 1e-3), &s.support);
    let obj = mtl_objective(&w, p).map_err(|e| e.to_string())?;
    check(f1 == 1.0, || format!("support F1 {f1}"))?;
    check(obj < 1e-6, || format!("objective {obj:e} after {} iterations", rep.iterations()))?;
    Ok(format!("F1 1.0, objective {obj:.1e}, {} iterations", rep.iterations()))
}

fn linear_scaling() -> Outcome {
    let mut r = rng(9);
    let (cfg, tol) = defaults();
    let mut time = |rows: usize, cols: usize| -> std::result::Result<f64, String> {
        let y = GroupedVector::new(normal_vec(&mut r, rows * cols), GroupPartition::uniform(rows, cols).unwrap())
            .unwrap();
        let gamma = 0.3 * mixed_norm(&y, NormSpec::l1q(Exponent::TWO));
        let mut runs = Vec::new();
        for _ in 0..5 {
            let start = Instant::now();
            let mut reps = 0u32;
            while start.elapsed() < Duration::from_millis(40) || reps < 3 {
                project_mixed_ball(&y, gamma, Exponent::TWO, &cfg, &tol).map_err(|e| e.to_string())?;
                reps += 1;
            }
            runs.push(start.elapsed().as_secs_f64() / reps as f64);
        }
        Ok(median(runs))
    };
    let small = time(1000, 100)?;
    let large = time(2000, 200)?;
    let ratio = large / small;
    check(ratio <= 8.0, || format!("time ratio {ratio:.2}"))?;
    Ok(format!("time ratio {ratio:.2} for 4x parameters"))
}

fn sgd_head_start() -> Outcome {
    let mut wins = Vec::new();
    let mut detail = Vec::new();
    for seed in 0..5 {
        let s = generate_synthetic(&SynthSpec {
            m: 5000,
            d: 20,
            n: 20,
            density: 0.2,
            active_rows: 5,
            noise_std: None,
            seed: 100 + seed,
        })
        .map_err(|e| e.to_string())?;
        let p = &s.problem;
        let prob = ConstrainedProblem::new(p, p.constraint().unwrap()).unwrap();
        let dim = p.num_features() * p.num_tasks();
        let (_, spg) = spg_solve(&prob, &vec![0.0; dim], &SpgOptions { max_iter: 1, ..Default::default() })
            .map_err(|e| e.to_string())?;
        let spg_one = spg.records[1].objective;

        let b = 10;
        let budget = 0.1;
        let opts = SgdOptions {
            batch_size: b,
            projection_period: 10,
            max_steps: Some((budget * p.num_rows() as f64 / b as f64) as usize),
            seed,
            ..Default::default()
        };
        let (_, sgd) = sgd_solve(&prob, &vec![0.0; dim], &opts).map_err(|e| e.to_string())?;
        let best = sgd
            .records
            .iter()
            .filter(|t| t.work <= budget + 1e-12)
            .map(|t| t.objective)
            .fold(f64::INFINITY, f64::min);
        wins.push(best / spg_one);
        detail.push(format!("{best:.3e} vs {spg_one:.3e}"));
    }
    let med = median(wins);
    check(med < 1.0, || format!("median SGD/SPG objective ratio {med:.3} ({})", detail.join(", ")))?;
    Ok(format!("median SGD/SPG objective ratio {med:.3}"))
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("projection oracle equivalence", projection_oracle),
        ("feasibility accuracy", feasibility_accuracy),
        ("residual bracket and monotonicity", lemma_one),
        ("duality and Hölder", lemma_two),
        ("prox consistency", prox_consistency),
        ("matrix suite", matrix_suite),
        ("solver correctness", solver_correctness),
        ("multitask support recovery", mtl_recovery),
        ("linear scaling", linear_scaling),
        ("SGD head start", sgd_head_start),
    ];
    let limits = [10.0, 60.0, f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY, f64::INFINITY, 60.0, f64::INFINITY, 120.0];
    let mut failed = 0;
    for (i, ((name, run), limit)) in criteria.iter().zip(limits).enumerate() {
        let start = Instant::now();
        let outcome = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panic".into());
            Err(format!("panicked: {msg}"))
        });
        let secs = start.elapsed().as_secs_f64();
        let outcome = match outcome {
            Ok(d) if secs > limit => Err(format!("{d}; took {secs:.1} s, limit {limit} s")),
            o => o,
        };
        match outcome {
            Ok(d) => println!("PASS {:>2} {name}: {d} ({secs:.2} s)", i + 1),
            Err(d) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {d} ({secs:.2} s)", i + 1);
            }
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
}

//! Acceptance gate: one PASS/FAIL line per criterion, nonzero exit on any failure.

use adjquat::extract::{
    extract_quat2_noisy, extract_quat3_exact, profile_2d, profile_from_rot3_measured, quadratic_form_matrix, SectorId,
};
use adjquat::linalg::{adjugate, eigenvalues_sym4, max_eigenvalue_sym4, Mat, Mat2, Mat3, Mat4, SymMat4};
use adjquat::matching::profile_matrix_3d;
use adjquat::pose::{ortho_project, perspective_project, solve_focal_length};
use adjquat::rotations::{quat_from_axis_angle, rot3_from_axis_angle, rot3_from_quat, shepperd_extract};
use adjquat::{
    cross_covariance, extract_quat3_noisy, match3d, pose3d_ortho, pose3d_perspective, AxisAngle, CameraConvention,
    CameraTag, PointCloud, Quaternion, Rotation2,
};
use adjquat_bench::experiment::{run_experiment, trial_rng, ExperimentConfig, Summary, Task};
use adjquat_bench::synth::{apply_noise, gen_cloud, random_unit_quaternion};
use rand::Rng;
use std::f64::consts::PI;
use std::time::Instant;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn qdist(a: &Quaternion, b: &Quaternion) -> f64 {
    let m: f64 = (0..4).map(|i| (a.0[i] - b.0[i]).powi(2)).sum();
    let p: f64 = (0..4).map(|i| (a.0[i] + b.0[i]).powi(2)).sum();
    m.min(p).sqrt()
}

fn sector_quat<R: Rng>(rng: &mut R, zeros: [bool; 4]) -> Quaternion {
    loop {
        let v: [f64; 4] = std::array::from_fn(|i| if zeros[i] { 0.0 } else { rng.random_range(-1.0..1.0) });
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if v.iter().zip(zeros).all(|(x, z)| z || x.abs() > 1e-3 * n) {
            return Quaternion::normalized(v).unwrap();
        }
    }
}

fn experiment(task: Task, sigma: f64, f: Option<f64>) -> Summary {
    let mut cfg = ExperimentConfig::new(task, 50, 100, sigma, 0);
    if let Some(f) = f {
        cfg.camera = CameraConvention::CameraAtOrigin { f };
    }
    let report = run_experiment(&cfg).expect("valid config");
    report.summary
}

fn c1_round_trip() -> Outcome {
    let start = Instant::now();
    let mut rng = trial_rng(1, 0);
    let mut worst: f64 = 0.0;
    for _ in 0..100_000 {
        let q = random_unit_quaternion(&mut rng);
        let r = rot3_from_quat(&q).map_err(|e| e.to_string())?;
        let back = extract_quat3_noisy(&r).map_err(|e| e.to_string())?;
        worst = worst.max(qdist(&back.q_opt, &q));
    }
    let mut sector_worst: f64 = 0.0;
    let patterns = SectorId::singular_patterns();
    for zeros in &patterns {
        for _ in 0..1000 {
            let q = sector_quat(&mut rng, *zeros);
            let back = extract_quat3_noisy(&rot3_from_quat(&q).unwrap()).map_err(|e| format!("{zeros:?}: {e}"))?;
            sector_worst = sector_worst.max(qdist(&back.q_opt, &q));
        }
    }
    let secs = start.elapsed().as_secs_f64();
    check(
        worst <= 1e-10 && sector_worst <= 1e-10 && secs < 30.0,
        format!(
            "10^5 random max err {worst:.2e}, {} sectors x 1000 max err {sector_worst:.2e}, {secs:.1} s",
            patterns.len()
        ),
    )
}

fn c2_shepperd() -> Outcome {
    let mut rng = trial_rng(2, 0);
    let mut worst: f64 = 0.0;
    for theta in [1e-8, PI - 1e-8, PI, PI + 1e-8] {
        for _ in 0..2500 {
            let v: [f64; 3] = std::array::from_fn(|_| rng.random_range(-1.0..1.0));
            let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
            if n < 1e-3 {
                continue;
            }
            let aa = AxisAngle::new(theta, v.map(|x| x / n)).unwrap();
            let r = rot3_from_axis_angle(&aa);
            let a = shepperd_extract(&r);
            let b = extract_quat3_noisy(&r).map_err(|e| e.to_string())?.q_opt;
            worst = worst.max(qdist(&a, &b));
        }
    }
    check(worst <= 1e-9, format!("10^4 rotations near 0 and pi, max disagreement {worst:.2e}"))
}

fn c3_eigen_facts() -> Outcome {
    let mut rng = trial_rng(3, 0);
    let (mut k0_err, mut kq_err, mut l2_err): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for _ in 0..10_000 {
        let q = random_unit_quaternion(&mut rng);
        let k0 = profile_from_rot3_measured(&rot3_from_quat(&q).unwrap());
        k0_err = k0_err.max((max_eigenvalue_sym4(&k0).map_err(|e| e.to_string())? - 3.0).abs());
        let kq = SymMat4::from_rows(std::array::from_fn(|i| std::array::from_fn(|j| q.0[i] * q.0[j])));
        let roots = eigenvalues_sym4(&kq).map_err(|e| e.to_string())?.roots;
        for (a, b) in roots.iter().zip([1.0, 0.0, 0.0, 0.0]) {
            kq_err = kq_err.max((a - b).abs());
        }
        let m: [[f64; 2]; 2] = std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0)));
        let m = Rotation2::measured(m).unwrap();
        let (_, lam, _) = extract_quat2_noisy(&m).map_err(|e| e.to_string())?;
        // independent eigen-solve of the 2×2 profile; its top eigenvalue is 2√(d²+t²)
        let k = profile_2d(&m);
        let top = nalgebra::SymmetricEigen::new(nalgebra::Matrix2::new(k[0][0], k[0][1], k[1][0], k[1][1]))
            .eigenvalues
            .max();
        l2_err = l2_err.max((lam - 0.5 * top).abs());
    }
    check(
        k0_err <= 1e-10 && kq_err <= 1e-10 && l2_err <= 1e-12,
        format!("K0 max-eig err {k0_err:.2e}, K(q) spectrum err {kq_err:.2e}, 2D lambda err {l2_err:.2e}"),
    )
}

fn c4_invariance() -> Outcome {
    let mut worst: f64 = 0.0;
    for t in 0..100 {
        let mut rng = trial_rng(4, t);
        let x = gen_cloud(20, 3, &mut rng, 1.0);
        let r = rot3_from_quat(&random_unit_quaternion(&mut rng)).unwrap();
        let u = x.map(3, |p| r.apply(&[p[0], p[1], p[2]]).to_vec()).unwrap();
        let e = cross_covariance(&x, &u).map_err(|e| e.to_string())?;
        let lam = max_eigenvalue_sym4(&profile_matrix_3d(&e.as_mat3())).map_err(|e| e.to_string())?;
        worst = worst.max((lam - x.sum_sq()).abs() / x.sum_sq());
    }
    check(worst <= 1e-9, format!("100 clouds, max relative gap to tr(X Xt) {worst:.2e}"))
}

fn c5_zero_noise() -> Outcome {
    let bound = 1e-18 * 50.0;
    let p2 = experiment(Task::Pose2d, 0.0, None);
    let p3 = experiment(Task::Pose3dOrtho, 0.0, None);
    let worst2 = p2.sorted_loss_bi.last().copied().unwrap_or(f64::INFINITY);
    let worst3 = p3.sorted_loss_bi.last().copied().unwrap_or(f64::INFINITY);
    let ok = p2.n_success == 100 && p3.n_success == 100 && worst2 <= bound && worst3 <= bound;
    check(ok, format!("max loss pose2d {worst2:.2e}, pose3d-ortho {worst3:.2e} (bound {bound:.0e})"))
}

fn c6_noisy() -> Outcome {
    let p2 = experiment(Task::Pose2d, 0.1, None);
    let p3 = experiment(Task::Pose3dOrtho, 0.1, None);
    let (b2, g2) = (p2.mean.loss_bi.unwrap(), p2.mean.loss_gen.unwrap());
    let (r3, b3, g3) = (p3.mean.loss_raw.unwrap(), p3.mean.loss_bi.unwrap(), p3.mean.loss_gen.unwrap());
    check(
        p2.n_failed == 0 && p3.n_failed == 0 && b2 <= g2 && r3 <= b3 && b3 <= g3,
        format!("pose2d mean {b2:.4} vs gen {g2:.4}; pose3d raw {r3:.4} <= bi {b3:.4} <= gen {g3:.4}"),
    )
}

fn c7_perspective() -> Outcome {
    let ortho = experiment(Task::Pose3dOrtho, 0.1, None).mean.loss_bi.unwrap();
    let mut ok = true;
    let mut parts = Vec::new();
    let mut prev = f64::INFINITY;
    let mut last = 0.0;
    for f in [2.0, 4.0, 8.0, 16.0, 32.0, 64.0] {
        let s = experiment(Task::Pose3dPersp, 0.1, Some(f));
        let (b, g) = (s.mean.loss_bi.unwrap_or(f64::NAN), s.mean.loss_gen.unwrap_or(f64::NAN));
        let good = s.n_failed == 0 && b <= g && b < prev;
        ok &= good;
        parts.push(format!("f={f}: {b:.4}/{g:.4}{}", if good { "" } else { " !" }));
        prev = b;
        last = b;
    }
    let conv = (last - ortho).abs() <= 0.1 * ortho;
    ok &= conv;
    check(ok, format!("mean loss bi/gen {}; ortho mean {ortho:.4}, gap at f=64 {:.1}%", parts.join(", "), 100.0 * (last - ortho).abs() / ortho))
}

/// Same sweep point with one depth-undo refinement round; reported, not scored.
fn c7_note() -> String {
    let mut cfg = ExperimentConfig::new(Task::Pose3dPersp, 50, 100, 0.1, 0);
    cfg.camera = CameraConvention::CameraAtOrigin { f: 2.0 };
    cfg.refine = 1;
    let s = run_experiment(&cfg).unwrap().summary;
    format!(
        "note: at f=2 with one refinement round, mean loss bi/gen {:.4}/{:.4}",
        s.mean.loss_bi.unwrap(),
        s.mean.loss_gen.unwrap()
    )
}

fn c8_focal() -> Outcome {
    let f = 6.0;
    let mut exact_worst: f64 = 0.0;
    for t in 0..100 {
        let mut rng = trial_rng(8, t);
        let xh = gen_cloud(50, 3, &mut rng, 1.0);
        let r = rot3_from_quat(&random_unit_quaternion(&mut rng)).unwrap();
        let shift = r.m[2].map(|v| v * f);
        let x = xh.map(3, |p| (0..3).map(|i| p[i] + shift[i]).collect()).unwrap();
        let u = perspective_project(&r, &CameraConvention::CameraAtOrigin { f }, &x).map_err(|e| e.to_string())?;
        let est = solve_focal_length(&r, CameraTag::CameraAtOrigin, &x, &u).map_err(|e| e.to_string())?;
        exact_worst = exact_worst.max((est - f).abs() / f);
    }
    let mut cfg = ExperimentConfig::new(Task::Pose3dPersp, 50, 100, 0.1, 0);
    cfg.camera = CameraConvention::CameraAtOrigin { f };
    let report = run_experiment(&cfg).unwrap();
    let errs: Vec<f64> = report
        .records
        .iter()
        .filter_map(|r| r.outcome.as_ref().ok().and_then(|v| v.focal_est))
        .map(|e| (e - f).abs() / f)
        .collect();
    let mean_err = errs.iter().sum::<f64>() / errs.len().max(1) as f64;
    check(
        exact_worst <= 1e-9 && errs.len() == 100 && mean_err <= 0.1,
        format!("exact max rel err {exact_worst:.2e}; noisy mean rel err {:.2}% over {} trials", 100.0 * mean_err, errs.len()),
    )
}

fn adjugate_residual<const N: usize>(m: &Mat<N>) -> f64 {
    let det = nalgebra::DMatrix::from_fn(N, N, |i, j| m.m[i][j]).determinant();
    let p = m.mul(&adjugate(m));
    let mut worst: f64 = 0.0;
    for i in 0..N {
        for j in 0..N {
            worst = worst.max((p.m[i][j] - if i == j { det } else { 0.0 }).abs());
        }
    }
    worst / (1.0 + m.frobenius_norm().powi(N as i32))
}

fn bench_exe(dir: &std::path::Path, threads: &str, tag: &str) -> Result<(Vec<u8>, Vec<u8>), String> {
    let out = dir.join(format!("{tag}.csv"));
    let status = std::process::Command::new(env!("CARGO_BIN_EXE_bench"))
        .args(["pose3d-persp", "--points", "30", "--trials", "40", "--sigma", "0.1", "--focal", "6", "--seed", "7", "--out"])
        .arg(&out)
        .env("BENCH_THREADS", threads)
        .stdout(std::process::Stdio::null())
        .status()
        .map_err(|e| e.to_string())?;
    if !status.success() {
        return Err(format!("bench exited with {status}"));
    }
    let csv = std::fs::read(&out).map_err(|e| e.to_string())?;
    let json = std::fs::read(out.with_extension("json")).map_err(|e| e.to_string())?;
    Ok((csv, json))
}

fn c9_properties() -> Outcome {
    let mut rng = trial_rng(9, 0);
    let mut adj: f64 = 0.0;
    for _ in 0..10_000 {
        adj = adj.max(adjugate_residual(&Mat2::from_rows(std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))))));
        adj = adj.max(adjugate_residual(&Mat3::from_rows(std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))))));
        adj = adj.max(adjugate_residual(&Mat4::from_rows(std::array::from_fn(|_| std::array::from_fn(|_| rng.random_range(-1.0..1.0))))));
    }

    // orthonormality of returned rotations and the constraint set on exact-path adjugates
    let (mut ortho, mut constraint, mut trace): (f64, f64, f64) = (0.0, 0.0, 0.0);
    for t in 0..300 {
        let mut rng = trial_rng(9, t + 1);
        let q = random_unit_quaternion(&mut rng);
        let r = rot3_from_quat(&q).unwrap();
        let x = gen_cloud(50, 3, &mut rng, 1.0);
        let s = (1.0 - q.0[0] * q.0[0]).sqrt();
        if s > 1e-6 {
            let aa = AxisAngle::new(2.0 * q.0[0].clamp(-1.0, 1.0).acos(), [q.0[1] / s, q.0[2] / s, q.0[3] / s]).unwrap();
            constraint = constraint.max(extract_quat3_exact(&aa).max_constraint_violation());
            constraint = constraint.max(quadratic_form_matrix(&quat_from_axis_angle(&aa)).unwrap().max_constraint_violation());
        }
        let ex = extract_quat3_noisy(&r).map_err(|e| e.to_string())?;
        constraint = constraint.max(ex.adjugate.max_constraint_violation());
        ortho = ortho.max(ex.r_opt.orthonormality_error());
        let u = x.map(3, |p| r.apply(&[p[0], p[1], p[2]]).to_vec()).unwrap();
        let m = match3d(&x, &u).map_err(|e| e.to_string())?;
        constraint = constraint.max(m.adjugate.max_constraint_violation());
        ortho = ortho.max(m.r_opt.orthonormality_error());
        let img = ortho_project(&r, &x).unwrap();
        let p = pose3d_ortho(&x, &img).map_err(|e| e.to_string())?;
        constraint = constraint.max(p.adjugate.max_constraint_violation());
        ortho = ortho.max(p.r_bi.orthonormality_error());
        // noisy paths: orthonormal output and unit trace, no rank-one guarantee
        let noisy = apply_noise(&img, 0.1, &mut rng);
        let pn = pose3d_ortho(&x, &noisy).map_err(|e| e.to_string())?;
        ortho = ortho.max(pn.r_bi.orthonormality_error());
        trace = trace.max((pn.adjugate.m.trace() - 1.0).abs());
        let shift = r.m[2].map(|v| v * 6.0);
        let xs: PointCloud = x.map(3, |p| (0..3).map(|i| p[i] + shift[i]).collect()).unwrap();
        let pimg = perspective_project(&r, &CameraConvention::CameraAtOrigin { f: 6.0 }, &xs).unwrap();
        let pp = pose3d_perspective(&xs, &apply_noise(&pimg, 0.1, &mut rng), CameraTag::CameraAtOrigin)
            .map_err(|e| e.to_string())?;
        ortho = ortho.max(pp.r_bi.orthonormality_error());
        trace = trace.max((pp.adjugate.m.trace() - 1.0).abs());
    }

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let a = bench_exe(dir.path(), "1", "a")?;
    let b = bench_exe(dir.path(), "1", "b")?;
    let c = bench_exe(dir.path(), "4", "c")?;
    let deterministic = a == b && a == c;

    check(
        adj <= 1e-12 && ortho <= 1e-10 && constraint <= 1e-9 && trace <= 1e-12 && deterministic,
        format!(
            "adjugate identity {adj:.2e}, orthonormality {ortho:.2e}, exact constraints {constraint:.2e}, \
             unit trace {trace:.2e}, cli outputs identical across runs/threads: {deterministic}"
        ),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("1 round-trip extraction", c1_round_trip),
        ("2 shepperd equivalence", c2_shepperd),
        ("3 eigenvalue facts", c3_eigen_facts),
        ("4 rotation invariance of max eigenvalue", c4_invariance),
        ("5 zero-noise pose exactness", c5_zero_noise),
        ("6 noisy-pose outperformance", c6_noisy),
        ("7 perspective behavior", c7_perspective),
        ("8 focal recovery", c8_focal),
        ("9 property suites", c9_properties),
    ];
    let mut failed = 0;
    for (name, f) in criteria {
        let outcome = std::panic::catch_unwind(f).unwrap_or_else(|_| Err("panicked".into()));
        match outcome {
            Ok(d) => println!("PASS criterion {name}: {d}"),
            Err(d) => {
                failed += 1;
                println!("FAIL criterion {name}: {d}");
            }
        }
        if name.starts_with('7') {
            println!("     {}", c7_note());
        }
    }
    println!("acceptance: {} passed, {failed} failed", 9 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

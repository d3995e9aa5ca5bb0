//! Pose estimation: 2D clouds seen as 1D images, and 3D clouds seen as 2D
//! images under orthographic or pinhole projection.

use crate::cloud::{require_pair, PointCloud};
use crate::error::{Error, Result};
use crate::extract::{maximal_adjugate, normalize_adjugate_row, AdjugateMatrix4, SECTOR_TOL};
use crate::linalg::{cross3, dot3, Mat5, SymMat4};
use crate::rotations::{rot2_from_quat2, rot3_from_quat_unchecked, Quat2, Quaternion, Rotation2, Rotation3};

/// 2×2 subdeterminants of the 2D pose cross-covariance array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovDet2 {
    pub d1: f64,
    pub d2: f64,
    pub d3: f64,
}

pub fn cov_determinants2(x: &PointCloud, u: &PointCloud) -> Result<CovDet2> {
    require_pair(x, u, 2, 1)?;
    let (mut xx, mut yy, mut xy, mut ux, mut uy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for (p, q) in x.points().zip(u.points()) {
        xx += p[0] * p[0];
        yy += p[1] * p[1];
        xy += p[0] * p[1];
        ux += q[0] * p[0];
        uy += q[0] * p[1];
    }
    Ok(CovDet2 {
        d1: xx * yy - xy * xy,
        d2: ux * yy - uy * xy,
        d3: ux * xy - uy * xx,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pose2dResult {
    pub det: CovDet2,
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Unnormalized projection row [d2/d1, −d3/d1].
    pub p_tilde: [f64; 2],
    pub q: Quat2,
    pub r: Rotation2,
    /// Loss of the normalized rotation.
    pub loss: f64,
    /// Loss of `p_tilde`.
    pub loss_raw: f64,
}

/// Σ(r₀·x_k − u_k)² using only the first row of `r`.
pub fn pose2d_loss(row: &[f64; 2], x: &PointCloud, u: &PointCloud) -> f64 {
    x.points()
        .zip(u.points())
        .map(|(p, q)| (row[0] * p[0] + row[1] * p[1] - q[0]).powi(2))
        .sum()
}

pub fn pose2d(x: &PointCloud, u: &PointCloud) -> Result<Pose2dResult> {
    let det = cov_determinants2(x, u)?;
    let CovDet2 { d1, d2, d3 } = det;
    let (xx, yy) = (x.row(0).iter().map(|v| v * v).sum::<f64>(), x.row(1).iter().map(|v| v * v).sum::<f64>());
    if !(d1 > 1e-14 * (xx + yy).powi(2)) {
        return Err(Error::DegenerateReference { d1 });
    }
    let n = d2.hypot(d3);
    if !(n > 1e-14 * d1) {
        return Err(Error::AmbiguousPose);
    }
    let alpha = 0.5 * (1.0 + d2 / d1);
    let beta = 0.5 * (1.0 - d2 / d1);
    let gamma = 0.5 * d3 / d1;
    let p_tilde = [d2 / d1, -d3 / d1];
    let (c, s) = (d2 / n, d3 / n);
    let r = Rotation2 { m: [[c, -s], [s, c]] };
    // (a, b) from the half-angle of (c, s), picking the better-conditioned column
    let q = if c >= 0.0 {
        Quat2::normalized(1.0 + c, s)?
    } else {
        Quat2::normalized(s, 1.0 - c)?
    }
    .canonical();
    debug_assert!(rot2_from_quat2(&q).is_ok());
    let loss = pose2d_loss(&r.m[0], x, u);
    let loss_raw = pose2d_loss(&p_tilde, x, u);
    Ok(Pose2dResult { det, alpha, beta, gamma, p_tilde, q, r, loss, loss_raw })
}

/// The ten 3×3 subdeterminants d1..d10 of the 5×5 cross-covariance array (d[0] is d1).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CovDet3 {
    pub d: [f64; 10],
}

impl CovDet3 {
    pub fn d1(&self) -> f64 {
        self.d[0]
    }
}

/// Column choices (x=0, y=1, z=2, u=3, v=4) for d1..d10, all over the x, y, z rows.
pub const COVDET3_COLUMNS: [[usize; 3]; 10] = [
    [0, 1, 2],
    [0, 1, 3],
    [0, 1, 4],
    [0, 2, 3],
    [0, 2, 4],
    [0, 3, 4],
    [1, 2, 3],
    [1, 2, 4],
    [1, 3, 4],
    [2, 3, 4],
];

/// Symmetric 5×5 array of all sums Σ a_k b_k over a, b ∈ {x, y, z, u, v}.
pub fn cross_covariance5(x: &PointCloud, u: &PointCloud) -> Result<Mat5> {
    require_pair(x, u, 3, 2)?;
    let mut c = [[0.0; 5]; 5];
    for (p, q) in x.points().zip(u.points()) {
        let w = [p[0], p[1], p[2], q[0], q[1]];
        for i in 0..5 {
            for j in 0..5 {
                c[i][j] += w[i] * w[j];
            }
        }
    }
    Ok(Mat5::from_rows(c))
}

pub fn cov_determinants3(x: &PointCloud, u: &PointCloud) -> Result<CovDet3> {
    let c = cross_covariance5(x, u)?;
    Ok(CovDet3 { d: COVDET3_COLUMNS.map(|cols| c.subdet(&[0, 1, 2], &cols)) })
}

/// Raw least-squares solution of the orthographic pose problem.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthoRaw {
    pub det: CovDet3,
    pub r_tilde: [[f64; 3]; 3],
    /// q00, q11, q22, q33, q01, q02, q03, q23, q13, q12.
    pub adjugate_vars: [f64; 10],
}

impl OrthoRaw {
    pub fn adjugate_matrix(&self) -> SymMat4 {
        let [q00, q11, q22, q33, q01, q02, q03, q23, q13, q12] = self.adjugate_vars;
        SymMat4::from_rows([
            [q00, q01, q02, q03],
            [q01, q11, q12, q13],
            [q02, q12, q22, q23],
            [q03, q13, q23, q33],
        ])
    }
}

pub fn pose3d_ortho_raw(x: &PointCloud, u: &PointCloud) -> Result<OrthoRaw> {
    let det = cov_determinants3(x, u)?;
    let [d1, d2, d3, d4, d5, d6, d7, d8, d9, d10] = det.d;
    let gram_trace = x.sum_sq();
    if !(d1 > 1e-12 * gram_trace.powi(3)) {
        return Err(Error::DegenerateReference { d1 });
    }
    let r_tilde = [
        [d7 / d1, -d4 / d1, d2 / d1],
        [d8 / d1, -d5 / d1, d3 / d1],
        [d6 / d1, d9 / d1, d10 / d1],
    ];
    let f = 0.25 / d1;
    let adjugate_vars = [
        (d1 + d10 - d5 + d7) * f,
        (d1 - d10 + d5 + d7) * f,
        (d1 - d10 - d5 - d7) * f,
        (d1 + d10 + d5 - d7) * f,
        (d9 - d3) * f,
        (d2 - d6) * f,
        (d4 + d8) * f,
        (d3 + d9) * f,
        (d2 + d6) * f,
        (d8 - d4) * f,
    ];
    Ok(OrthoRaw { det, r_tilde, adjugate_vars })
}

/// d1·K₀(R̃) written directly in the subdeterminants; its maximal eigenvector
/// is the quaternion of the rotation closest to R̃.
pub fn bar_itzhack_profile(det: &CovDet3) -> SymMat4 {
    let [_, d2, d3, d4, d5, d6, d7, d8, d9, d10] = det.d;
    let a = d7 - d5 + d10;
    let b = d7 + d5 - d10;
    let c = -d7 - d5 - d10;
    SymMat4::from_rows([
        [a, d9 - d3, d2 - d6, d8 + d4],
        [d9 - d3, b, d8 - d4, d6 + d2],
        [d2 - d6, d8 - d4, c, d3 + d9],
        [d8 + d4, d6 + d2, d3 + d9, -((a + b) + c)],
    ])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CameraConvention {
    /// Cloud centred at the origin, camera at (0, 0, 1/f̄).
    CloudAtOrigin { fbar: f64 },
    /// Camera at the origin with focal length f.
    CameraAtOrigin { f: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CameraTag {
    CloudAtOrigin,
    CameraAtOrigin,
}

impl CameraConvention {
    pub fn tag(&self) -> CameraTag {
        match self {
            CameraConvention::CloudAtOrigin { .. } => CameraTag::CloudAtOrigin,
            CameraConvention::CameraAtOrigin { .. } => CameraTag::CameraAtOrigin,
        }
    }

    /// f̄ or f, depending on the convention.
    pub fn value(&self) -> f64 {
        match *self {
            CameraConvention::CloudAtOrigin { fbar } => fbar,
            CameraConvention::CameraAtOrigin { f } => f,
        }
    }

    pub fn with_value(tag: CameraTag, v: f64) -> Self {
        match tag {
            CameraTag::CloudAtOrigin => CameraConvention::CloudAtOrigin { fbar: v },
            CameraTag::CameraAtOrigin => CameraConvention::CameraAtOrigin { f: v },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoseSolution {
    pub r_tilde: [[f64; 3]; 3],
    pub q_opt: Quaternion,
    pub r_bi: Rotation3,
    pub lambda_opt: f64,
    /// Loss of R̃ (perspective poses: at the fitted focal value; infinite if R̃'s depths are unusable).
    pub loss_raw: f64,
    pub loss_bi: f64,
    /// f for CameraAtOrigin, f̄ for CloudAtOrigin; `None` for orthographic poses.
    pub focal: Option<f64>,
    pub adjugate: AdjugateMatrix4,
    /// Adjugate variables of the raw least-squares solution.
    pub clean_adjugate: [f64; 10],
}

fn row_dot(r: &[f64; 3], p: &[f64; 3]) -> f64 {
    dot3(r, p)
}

/// u_k = top two rows of r times x_k.
pub fn ortho_project(r: &Rotation3, x: &PointCloud) -> Result<PointCloud> {
    if x.dim() != 3 {
        return Err(Error::ShapeMismatch("orthographic projection needs a 3D cloud".into()));
    }
    PointCloud::new(2, x.points3().flat_map(|p| [row_dot(&r.m[0], &p), row_dot(&r.m[1], &p)]).collect())
}

/// Σ‖P x_k − u_k‖² with P the top two rows of `r` (any 3×3 matrix).
pub fn ortho_pose_loss(r: &[[f64; 3]; 3], x: &PointCloud, u: &PointCloud) -> f64 {
    x.points3()
        .zip(u.points2())
        .map(|(p, q)| (row_dot(&r[0], &p) - q[0]).powi(2) + (row_dot(&r[1], &p) - q[1]).powi(2))
        .sum()
}

pub fn pose3d_ortho(x: &PointCloud, u: &PointCloud) -> Result<PoseSolution> {
    let raw = pose3d_ortho_raw(x, u)?;
    let profile = bar_itzhack_profile(&raw.det);
    let (adjugate, lambda) = maximal_adjugate(&profile)?;
    let (q_opt, _) = normalize_adjugate_row(&adjugate, SECTOR_TOL)?;
    let r_bi = rot3_from_quat_unchecked(&q_opt);
    Ok(PoseSolution {
        r_tilde: raw.r_tilde,
        q_opt,
        r_bi,
        lambda_opt: lambda / raw.det.d1(),
        loss_raw: ortho_pose_loss(&raw.r_tilde, x, u),
        loss_bi: ortho_pose_loss(&r_bi.m, x, u),
        focal: None,
        adjugate,
        clean_adjugate: raw.adjugate_vars,
    })
}

/// Projection denominators per point: 1 − f̄ z′ or z′.
fn denominators(r: &[[f64; 3]; 3], cam: &CameraConvention, x: &PointCloud) -> Result<Vec<f64>> {
    let dens: Vec<f64> = x
        .points3()
        .map(|p| {
            let z = row_dot(&r[2], &p);
            match *cam {
                CameraConvention::CloudAtOrigin { fbar } => 1.0 - fbar * z,
                CameraConvention::CameraAtOrigin { .. } => z,
            }
        })
        .collect();
    let floor = match cam {
        CameraConvention::CloudAtOrigin { .. } => 1e-9,
        CameraConvention::CameraAtOrigin { .. } => 1e-9 * x.radius(),
    };
    let positive = dens[0] > 0.0;
    let ok = dens.iter().all(|&d| d.is_finite() && d.abs() > floor && (d > 0.0) == positive);
    let cloud_side = matches!(cam, CameraConvention::CloudAtOrigin { .. });
    if !ok || (cloud_side && !positive) {
        return Err(Error::CameraInsideCloud);
    }
    Ok(dens)
}

fn project_with(r: &[[f64; 3]; 3], cam: &CameraConvention, x: &PointCloud) -> Result<PointCloud> {
    let dens = denominators(r, cam, x)?;
    let gain = match *cam {
        CameraConvention::CloudAtOrigin { .. } => 1.0,
        CameraConvention::CameraAtOrigin { f } => f,
    };
    let coords = x
        .points3()
        .zip(&dens)
        .flat_map(|(p, &w)| [gain * row_dot(&r[0], &p) / w, gain * row_dot(&r[1], &p) / w])
        .collect();
    PointCloud::new(2, coords)
}

/// Pinhole image of `x` under rotation `r`; depth is the third row of `r`.
pub fn perspective_project(r: &Rotation3, cam: &CameraConvention, x: &PointCloud) -> Result<PointCloud> {
    if x.dim() != 3 {
        return Err(Error::ShapeMismatch("perspective projection needs a 3D cloud".into()));
    }
    project_with(&r.m, cam, x)
}

/// Σ‖proj(x_k) − u_k‖² under the given convention; `r` may be any 3×3 matrix.
pub fn perspective_loss(r: &[[f64; 3]; 3], cam: &CameraConvention, x: &PointCloud, u: &PointCloud) -> Result<f64> {
    require_pair(x, u, 3, 2)?;
    let proj = project_with(r, cam, x)?;
    Ok(proj
        .points2()
        .zip(u.points2())
        .map(|(p, q)| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2))
        .sum())
}

/// Focal length (CameraAtOrigin) in closed form, or f̄ (CloudAtOrigin) by a
/// scanned root search of dS/df̄ over the admissible range.
pub fn solve_focal_length(r: &Rotation3, tag: CameraTag, x: &PointCloud, u: &PointCloud) -> Result<f64> {
    match tag {
        CameraTag::CameraAtOrigin => solve_focal_closed_form(r, x, u),
        CameraTag::CloudAtOrigin => solve_fbar(r, x, u, None),
    }
}

fn solve_focal_closed_form(r: &Rotation3, x: &PointCloud, u: &PointCloud) -> Result<f64> {
    require_pair(x, u, 3, 2)?;
    let floor = 1e-9 * x.radius();
    let mut num = 0.0;
    let mut den = 0.0;
    let mut sign = 0.0;
    for (p, q) in x.points3().zip(u.points2()) {
        let xp = row_dot(&r.m[0], &p);
        let yp = row_dot(&r.m[1], &p);
        let zp = row_dot(&r.m[2], &p);
        if !(zp.abs() > floor) || (sign != 0.0 && zp.signum() != sign) {
            return Err(Error::DepthDegenerate);
        }
        sign = zp.signum();
        num += (q[0] * xp + q[1] * yp) / zp;
        den += (xp * xp + yp * yp) / (zp * zp);
    }
    if !(den > 0.0) {
        return Err(Error::DepthDegenerate);
    }
    Ok(num / den)
}

/// S(f̄), S′(f̄), S″(f̄) for the cloud-at-origin loss; a_k = P x_k, z_k = D x_k.
fn fbar_derivs(a: &[[f64; 2]], z: &[f64], u: &[[f64; 2]], fbar: f64) -> (f64, f64, f64) {
    let (mut s, mut g, mut h) = (0.0, 0.0, 0.0);
    for k in 0..z.len() {
        let w = 1.0 - fbar * z[k];
        for i in 0..2 {
            let pred = a[k][i] / w;
            let res = pred - u[k][i];
            let d1 = a[k][i] * z[k] / (w * w);
            let d2 = 2.0 * a[k][i] * z[k] * z[k] / (w * w * w);
            s += res * res;
            g += 2.0 * res * d1;
            h += 2.0 * (d1 * d1 + res * d2);
        }
    }
    (s, g, h)
}

const FBAR_SCAN_POINTS: usize = 400;

/// Minimizer of S(f̄) over `bracket` (default: 0 up to just short of the
/// nearest point). Stationary points are found by scanning S′ for sign
/// changes and refining with safeguarded Newton; the boundary f̄ = lo also
/// counts when S′(lo) ≥ 0. Ties go to the smaller loss, then the smaller f̄.
pub fn solve_fbar(r: &Rotation3, x: &PointCloud, u: &PointCloud, bracket: Option<(f64, f64)>) -> Result<f64> {
    require_pair(x, u, 3, 2)?;
    let a: Vec<[f64; 2]> = x.points3().map(|p| [row_dot(&r.m[0], &p), row_dot(&r.m[1], &p)]).collect();
    let z: Vec<f64> = x.points3().map(|p| row_dot(&r.m[2], &p)).collect();
    let uu: Vec<[f64; 2]> = u.points2().collect();
    let zmax = z.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
    let (lo, hi) = bracket.unwrap_or_else(|| {
        let hi = if zmax > 0.0 { 0.99 / zmax } else { 1e3 / x.radius().max(f64::MIN_POSITIVE) };
        (0.0, hi)
    });
    if !(hi > lo) || (zmax > 0.0 && hi >= 1.0 / zmax) {
        return Err(Error::NoRootInBracket { lo, hi });
    }
    let eval = |f: f64| fbar_derivs(&a, &z, &uu, f);

    let mut candidates: Vec<(f64, f64)> = Vec::new();
    let (s_lo, g_lo, _) = eval(lo);
    if g_lo >= 0.0 {
        candidates.push((s_lo, lo));
    }
    let step = (hi - lo) / FBAR_SCAN_POINTS as f64;
    let mut prev = (lo, g_lo);
    for i in 1..=FBAR_SCAN_POINTS {
        let f = if i == FBAR_SCAN_POINTS { hi } else { lo + step * i as f64 };
        let (_, g, _) = eval(f);
        if prev.1 < 0.0 && g >= 0.0 {
            let root = refine_root(&eval, prev.0, f);
            candidates.push((eval(root).0, root));
        }
        prev = (f, g);
    }
    candidates
        .into_iter()
        .min_by(|p, q| {
            let tie = (p.0 - q.0).abs() <= 1e-12 * p.0.abs().max(q.0.abs());
            if tie {
                p.1.total_cmp(&q.1)
            } else {
                p.0.total_cmp(&q.0)
            }
        })
        .map(|(_, f)| f)
        .ok_or(Error::NoRootInBracket { lo, hi })
}

/// Root of S′ in [a, b] with S′(a) < 0 ≤ S′(b): Newton, falling back to bisection.
fn refine_root<F: Fn(f64) -> (f64, f64, f64)>(eval: &F, mut a: f64, mut b: f64) -> f64 {
    let mut x = 0.5 * (a + b);
    for _ in 0..200 {
        let (_, g, h) = eval(x);
        if g == 0.0 {
            return x;
        }
        if g < 0.0 {
            a = x;
        } else {
            b = x;
        }
        let newton = x - g / h;
        x = if h > 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if (b - a) <= 4.0 * f64::EPSILON * x.abs().max(f64::MIN_POSITIVE) {
            break;
        }
    }
    x
}

/// Three steps: orthographic least squares, rotation correction, then focal
/// solve with the rotation held fixed.
pub fn pose3d_perspective(x: &PointCloud, u: &PointCloud, tag: CameraTag) -> Result<PoseSolution> {
    pose3d_perspective_refined(x, u, tag, 0)
}

/// As [`pose3d_perspective`], then `iterations` rounds of undoing the depth
/// division with the current estimate and re-solving.
pub fn pose3d_perspective_refined(x: &PointCloud, u: &PointCloud, tag: CameraTag, iterations: usize) -> Result<PoseSolution> {
    require_pair(x, u, 3, 2)?;
    let mut sol = pose3d_ortho(x, u)?;
    let mut focal = solve_focal_length(&sol.r_bi, tag, x, u)?;
    for _ in 0..iterations {
        let cam = CameraConvention::with_value(tag, focal);
        let dens = denominators(&sol.r_bi.m, &cam, x)?;
        let scale = |w: f64| match cam {
            CameraConvention::CloudAtOrigin { .. } => w,
            CameraConvention::CameraAtOrigin { f } => w / f,
        };
        let flat = PointCloud::new(
            2,
            u.points2().zip(&dens).flat_map(|(q, &w)| [q[0] * scale(w), q[1] * scale(w)]).collect(),
        )?;
        sol = pose3d_ortho(x, &flat)?;
        focal = solve_focal_length(&sol.r_bi, tag, x, u)?;
    }
    let cam = CameraConvention::with_value(tag, focal);
    sol.loss_bi = perspective_loss(&sol.r_bi.m, &cam, x, u)?;
    sol.loss_raw = perspective_loss(&sol.r_tilde, &cam, x, u).unwrap_or(f64::INFINITY);
    sol.focal = Some(focal);
    Ok(sol)
}

/// 2·arccos(|q_a·q_b|), in [0, π].
pub fn rotation_error(qa: &Quaternion, qb: &Quaternion) -> Result<f64> {
    qa.check_unit()?;
    qb.check_unit()?;
    Ok(2.0 * qa.dot(qb).abs().min(1.0).acos())
}

/// 2·arccos(q_a·q_b) without folding the double cover, in [0, 2π].
pub fn rotation_error_signed(qa: &Quaternion, qb: &Quaternion) -> Result<f64> {
    qa.check_unit()?;
    qb.check_unit()?;
    Ok(2.0 * qa.dot(qb).clamp(-1.0, 1.0).acos())
}

/// Angle between two planar rotations given as half-angle pairs.
pub fn rotation_error_2d(pa: &Quat2, pb: &Quat2) -> Result<f64> {
    pa.check_unit()?;
    pb.check_unit()?;
    Ok(2.0 * pa.dot(pb).abs().min(1.0).acos())
}

/// Third row of a rotation from its first two rows.
pub fn complete_rotation(p: &[[f64; 3]; 2]) -> [[f64; 3]; 3] {
    [p[0], p[1], cross3(&p[0], &p[1])]
}

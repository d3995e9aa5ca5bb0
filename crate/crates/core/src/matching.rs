//! Closed-form rotational alignment of matched point clouds.

use crate::cloud::{require_pair, PointCloud};
use crate::error::{Error, Result};
use crate::extract::{maximal_adjugate, normalize_adjugate_row, Adjugate2, AdjugateMatrix4, SECTOR_TOL};
use crate::linalg::{Mat3, SymMat4};
use crate::rotations::{rot3_from_quat_unchecked, Quat2, Quaternion, Rotation2, Rotation3};

/// E = Σ_k x_k u_kᵀ, a `rows`×`cols` block stored in a 3×3 array.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossCov {
    pub rows: usize,
    pub cols: usize,
    pub e: [[f64; 3]; 3],
}

impl CrossCov {
    pub fn get(&self, a: usize, b: usize) -> f64 {
        self.e[a][b]
    }

    pub fn as_mat3(&self) -> Mat3 {
        Mat3::from_rows(self.e)
    }
}

pub fn cross_covariance(x: &PointCloud, u: &PointCloud) -> Result<CrossCov> {
    let dims = (x.dim(), u.dim());
    if !matches!(dims, (2, 2) | (3, 3) | (3, 2) | (2, 1)) {
        return Err(Error::ShapeMismatch(format!("unsupported dimension pair {dims:?}")));
    }
    require_pair(x, u, dims.0, dims.1)?;
    let mut e = [[0.0; 3]; 3];
    for (p, q) in x.points().zip(u.points()) {
        for (a, pa) in p.iter().enumerate() {
            for (b, qb) in q.iter().enumerate() {
                e[a][b] += pa * qb;
            }
        }
    }
    Ok(CrossCov { rows: dims.0, cols: dims.1, e })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match2dResult {
    pub adjugate: Adjugate2,
    pub q_opt: Quat2,
    pub r_opt: Rotation2,
    pub lambda_opt: f64,
    pub loss: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Match3dResult {
    pub adjugate: AdjugateMatrix4,
    pub q_opt: Quaternion,
    pub r_opt: Rotation3,
    pub lambda_opt: f64,
    pub loss: f64,
}

/// Σ‖R x_k − u_k‖² for 2D clouds.
pub fn match_loss2(r: &[[f64; 2]; 2], x: &PointCloud, u: &PointCloud) -> f64 {
    x.points2()
        .zip(u.points2())
        .map(|(p, q)| {
            let a = r[0][0] * p[0] + r[0][1] * p[1] - q[0];
            let b = r[1][0] * p[0] + r[1][1] * p[1] - q[1];
            a * a + b * b
        })
        .sum()
}

/// Σ‖R x_k − u_k‖² for 3D clouds.
pub fn match_loss3(r: &[[f64; 3]; 3], x: &PointCloud, u: &PointCloud) -> f64 {
    x.points3()
        .zip(u.points3())
        .map(|(p, q)| {
            (0..3)
                .map(|i| {
                    let d = r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2] - q[i];
                    d * d
                })
                .sum::<f64>()
        })
        .sum()
}

pub fn match2d(x: &PointCloud, u: &PointCloud) -> Result<Match2dResult> {
    require_pair(x, u, 2, 2)?;
    let e = cross_covariance(x, u)?;
    let (xu, xv, yu, yv) = (e.get(0, 0), e.get(0, 1), e.get(1, 0), e.get(1, 1));
    let cos_part = xu + yv;
    let sin_part = xv - yu;
    let lambda = cos_part.hypot(sin_part);
    if !(lambda > 1e-14 * (x.sum_sq() * u.sum_sq()).sqrt()) {
        return Err(Error::DegenerateData);
    }
    let (c, s) = (cos_part / lambda, sin_part / lambda);
    let adjugate = Adjugate2 {
        alpha: 0.5 * (1.0 + c),
        beta: 0.5 * (1.0 - c),
        gamma: 0.5 * s,
        scale: 1.0,
    };
    let q_opt = adjugate.quat2()?;
    let r_opt = Rotation2 { m: [[c, -s], [s, c]] };
    let loss = match_loss2(&r_opt.m, x, u);
    Ok(Match2dResult { adjugate, q_opt, r_opt, lambda_opt: lambda, loss })
}

/// M(E), the traceless profile with q·M(E)·q = tr R(q)·E.
pub fn profile_matrix_3d(e: &Mat3) -> SymMat4 {
    let e = &e.m;
    let (xx, xy, xz) = (e[0][0], e[0][1], e[0][2]);
    let (yx, yy, yz) = (e[1][0], e[1][1], e[1][2]);
    let (zx, zy, zz) = (e[2][0], e[2][1], e[2][2]);
    let d0 = xx + yy + zz;
    let d1 = xx - yy - zz;
    let d2 = -xx + yy - zz;
    let d3 = -((d0 + d1) + d2);
    SymMat4::from_rows([
        [d0, yz - zy, zx - xz, xy - yx],
        [yz - zy, d1, xy + yx, zx + xz],
        [zx - xz, xy + yx, d2, yz + zy],
        [xy - yx, zx + xz, yz + zy, d3],
    ])
}

pub fn match3d(x: &PointCloud, u: &PointCloud) -> Result<Match3dResult> {
    require_pair(x, u, 3, 3)?;
    let e = cross_covariance(x, u)?;
    let profile = profile_matrix_3d(&e.as_mat3());
    let (adjugate, lambda_opt) = maximal_adjugate(&profile)?;
    let (q_opt, _) = normalize_adjugate_row(&adjugate, SECTOR_TOL)?;
    let r_opt = rot3_from_quat_unchecked(&q_opt);
    let loss = match_loss3(&r_opt.m, x, u);
    Ok(Match3dResult { adjugate, q_opt, r_opt, lambda_opt, loss })
}

/// Largest eigenvalue of M(X·Xᵀ), which is just Σ‖x_k‖².
pub fn exact_data_eigenvalue(x: &PointCloud) -> f64 {
    x.sum_sq()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_eigenvalue_sym4;

    #[test]
    fn cross_covariance_examples() {
        let x = PointCloud::from_points3(&[[1.0, 0.0, 0.0]]).unwrap();
        let e = cross_covariance(&x, &x).unwrap();
        assert_eq!(e.e, [[1.0, 0.0, 0.0], [0.0; 3], [0.0; 3]]);
        let x = PointCloud::from_points3(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]).unwrap();
        let e = cross_covariance(&x, &x).unwrap();
        assert_eq!(e.e, [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0; 3]]);
        let u = PointCloud::from_points3(&[[1.0, 0.0, 0.0]]).unwrap();
        assert!(matches!(cross_covariance(&x, &u), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn profile_examples() {
        assert_eq!(profile_matrix_3d(&Mat3::identity()), SymMat4::diag([3.0, -1.0, -1.0, -1.0]));
        let e = Mat3::from_rows([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, -1.0]]);
        assert_eq!(profile_matrix_3d(&e), SymMat4::diag([1.0, 1.0, 1.0, -3.0]));
        assert_eq!(profile_matrix_3d(&Mat3::zero()), SymMat4::zero());
    }

    #[test]
    fn identity_match_2d() {
        let x = PointCloud::from_points2(&[[1.0, 0.5], [-0.3, 2.0], [0.7, -1.1]]).unwrap();
        let r = match2d(&x, &x).unwrap();
        assert_eq!((r.adjugate.alpha, r.adjugate.beta, r.adjugate.gamma), (1.0, 0.0, 0.0));
        assert_eq!(r.r_opt.m, [[1.0, -0.0], [0.0, 1.0]]);
    }

    #[test]
    fn identity_match_3d() {
        let x = PointCloud::from_points3(&[[1.0, 0.5, 0.0], [-0.3, 2.0, 1.0], [0.7, -1.1, 0.4]]).unwrap();
        let r = match3d(&x, &x).unwrap();
        assert_eq!(r.q_opt.0, [1.0, 0.0, 0.0, 0.0]);
        assert!((r.lambda_opt - exact_data_eigenvalue(&x)).abs() < 1e-12);
    }

    #[test]
    fn exact_eigenvalue_examples() {
        let x = PointCloud::from_points3(&[[1.0, 2.0, 2.0]]).unwrap();
        assert_eq!(exact_data_eigenvalue(&x), 9.0);
        let e = cross_covariance(&x, &x).unwrap();
        let lam = max_eigenvalue_sym4(&profile_matrix_3d(&e.as_mat3())).unwrap();
        assert!((lam - 9.0).abs() < 1e-12);
        let z = PointCloud::from_points3(&[[0.0, 0.0, 0.0]]).unwrap();
        assert_eq!(exact_data_eigenvalue(&z), 0.0);
    }

    #[test]
    fn degenerate_2d_data() {
        let x = PointCloud::from_points2(&[[1.0, 0.0], [-1.0, 0.0]]).unwrap();
        let u = PointCloud::from_points2(&[[0.0, 0.0], [0.0, 0.0]]).unwrap();
        assert!(matches!(match2d(&x, &u), Err(Error::DegenerateData)));
    }
}

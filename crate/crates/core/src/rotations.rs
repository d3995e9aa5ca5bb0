//! Quaternions, axis-angle pairs and rotation matrices in 2D and 3D.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::linalg::{dot4, Mat2, Mat3};

/// Tolerance on |q·q − 1| accepted by functions that require a unit quaternion.
pub const UNIT_TOL: f64 = 1e-9;

/// Components smaller than this are treated as zero when fixing the overall sign.
pub const SIGN_TIE_TOL: f64 = 1e-10;

const EXACT_ROTATION_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion(pub [f64; 4]);

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion([1.0, 0.0, 0.0, 0.0]);

    /// Raw components, no normalization.
    pub const fn new(q0: f64, q1: f64, q2: f64, q3: f64) -> Self {
        Quaternion([q0, q1, q2, q3])
    }

    /// Scales `q` to unit length. Fails on a zero or non-finite vector.
    pub fn normalized(q: [f64; 4]) -> Result<Self> {
        let n = dot4(&q, &q).sqrt();
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NotUnit { norm_sq: n * n });
        }
        Ok(Quaternion(q.map(|v| v / n)))
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.0
    }

    pub fn norm_sq(&self) -> f64 {
        dot4(&self.0, &self.0)
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        dot4(&self.0, &other.0)
    }

    pub fn neg(&self) -> Self {
        Quaternion(self.0.map(|v| -v))
    }

    pub fn conj(&self) -> Self {
        let [a, b, c, d] = self.0;
        Quaternion([a, -b, -c, -d])
    }

    /// Hamilton product, ordered so that R(p ⊗ q) = R(p)·R(q).
    pub fn mul(&self, other: &Quaternion) -> Self {
        let [a1, b1, c1, d1] = self.0;
        let [a2, b2, c2, d2] = other.0;
        Quaternion([
            a1 * a2 - b1 * b2 - c1 * c2 - d1 * d2,
            a1 * b2 + b1 * a2 + c1 * d2 - d1 * c2,
            a1 * c2 - b1 * d2 + c1 * a2 + d1 * b2,
            a1 * d2 + b1 * c2 - c1 * b2 + d1 * a2,
        ])
    }

    pub fn check_unit(&self) -> Result<()> {
        let n = self.norm_sq();
        if (n - 1.0).abs() <= UNIT_TOL {
            Ok(())
        } else {
            Err(Error::NotUnit { norm_sq: n })
        }
    }

    /// Representative of {q, −q} with q0 > 0. When |q0| < 1e-10 the first
    /// component that is not below that threshold is made positive instead.
    pub fn canonical(&self) -> Self {
        let lead = self
            .0
            .iter()
            .copied()
            .find(|v| v.abs() >= SIGN_TIE_TOL)
            .unwrap_or(0.0);
        if lead < 0.0 {
            self.neg()
        } else {
            *self
        }
    }

    /// min(‖p − q‖, ‖p + q‖), the distance on the double cover.
    pub fn distance_up_to_sign(&self, other: &Quaternion) -> f64 {
        let mut minus = 0.0;
        let mut plus = 0.0;
        for i in 0..4 {
            minus += (self.0[i] - other.0[i]).powi(2);
            plus += (self.0[i] + other.0[i]).powi(2);
        }
        minus.min(plus).sqrt()
    }
}

/// Rotation by `theta` about the unit `axis`; theta is kept in [0, 4π).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisAngle {
    theta: f64,
    axis: [f64; 3],
}

impl AxisAngle {
    pub fn new(theta: f64, axis: [f64; 3]) -> Result<Self> {
        let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
        if !((n - 1.0).abs() <= UNIT_TOL) || !theta.is_finite() {
            return Err(Error::AxisNotUnit { norm: n });
        }
        Ok(Self {
            theta: theta.rem_euclid(4.0 * PI),
            axis: axis.map(|v| v / n),
        })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn axis(&self) -> [f64; 3] {
        self.axis
    }
}

/// 3×3 rotation. `exact` enforces orthonormality; `measured` admits any finite matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3 {
    pub m: [[f64; 3]; 3],
}

impl Rotation3 {
    pub fn exact(m: [[f64; 3]; 3]) -> Result<Self> {
        let r = Self::measured(m)?;
        let err = r.orthonormality_error();
        let det = Mat3::from_rows(m).det();
        if err > EXACT_ROTATION_TOL || (det - 1.0).abs() > EXACT_ROTATION_TOL {
            return Err(Error::NotRotation { error: err.max((det - 1.0).abs()) });
        }
        Ok(r)
    }

    pub fn measured(m: [[f64; 3]; 3]) -> Result<Self> {
        Mat3::new(m)?;
        Ok(Self { m })
    }

    pub fn identity() -> Self {
        Self { m: Mat3::identity().m }
    }

    pub fn as_mat3(&self) -> Mat3 {
        Mat3::from_rows(self.m)
    }

    pub fn transpose(&self) -> Self {
        Self { m: self.as_mat3().transpose().m }
    }

    pub fn apply(&self, v: &[f64; 3]) -> [f64; 3] {
        self.as_mat3().mul_vec(v)
    }

    /// ‖RᵀR − I‖_F.
    pub fn orthonormality_error(&self) -> f64 {
        let r = self.as_mat3();
        r.transpose().mul(&r).sub(&Mat3::identity()).frobenius_norm()
    }

    pub fn det(&self) -> f64 {
        self.as_mat3().det()
    }

    /// ‖self − other‖_F.
    pub fn frobenius_distance(&self, other: &Rotation3) -> f64 {
        self.as_mat3().sub(&other.as_mat3()).frobenius_norm()
    }
}

/// R(q) for a quaternion known to be unit length.
pub(crate) fn rot3_from_quat_unchecked(q: &Quaternion) -> Rotation3 {
    let [q0, q1, q2, q3] = q.0;
    Rotation3 {
        m: [
            [
                q0 * q0 + q1 * q1 - q2 * q2 - q3 * q3,
                2.0 * q1 * q2 - 2.0 * q0 * q3,
                2.0 * q1 * q3 + 2.0 * q0 * q2,
            ],
            [
                2.0 * q1 * q2 + 2.0 * q0 * q3,
                q0 * q0 - q1 * q1 + q2 * q2 - q3 * q3,
                2.0 * q2 * q3 - 2.0 * q0 * q1,
            ],
            [
                2.0 * q1 * q3 - 2.0 * q0 * q2,
                2.0 * q2 * q3 + 2.0 * q0 * q1,
                q0 * q0 - q1 * q1 - q2 * q2 + q3 * q3,
            ],
        ],
    }
}

pub fn rot3_from_quat(q: &Quaternion) -> Result<Rotation3> {
    q.check_unit()?;
    Ok(rot3_from_quat_unchecked(q))
}

pub fn rot3_from_axis_angle(aa: &AxisAngle) -> Rotation3 {
    let (s, c) = aa.theta.sin_cos();
    let [n1, n2, n3] = aa.axis;
    let v = 1.0 - c;
    Rotation3 {
        m: [
            [c + v * n1 * n1, v * n1 * n2 - s * n3, v * n1 * n3 + s * n2],
            [v * n1 * n2 + s * n3, c + v * n2 * n2, v * n2 * n3 - s * n1],
            [v * n1 * n3 - s * n2, v * n2 * n3 + s * n1, c + v * n3 * n3],
        ],
    }
}

pub fn quat_from_axis_angle(aa: &AxisAngle) -> Quaternion {
    let (s, c) = (0.5 * aa.theta).sin_cos();
    let [n1, n2, n3] = aa.axis;
    Quaternion([c, s * n1, s * n2, s * n3])
}

/// Classic branchy extraction: trace first, then the largest diagonal.
///
/// Ties between diagonals go to the lower index. The overall sign is
/// canonicalized. Input far from a rotation yields a meaningless answer.
pub fn shepperd_extract(r: &Rotation3) -> Quaternion {
    let m = &r.m;
    let (m11, m22, m33) = (m[0][0], m[1][1], m[2][2]);
    let tr = m11 + m22 + m33;
    let q = if tr > 0.0 {
        let s = 0.5 / (tr + 1.0).sqrt();
        [0.25 / s, (m[2][1] - m[1][2]) * s, (m[0][2] - m[2][0]) * s, (m[1][0] - m[0][1]) * s]
    } else if m11 >= m22 && m11 >= m33 {
        let s = 0.5 / (1.0 + m11 - m22 - m33).sqrt();
        [(m[2][1] - m[1][2]) * s, 0.25 / s, (m[1][0] + m[0][1]) * s, (m[0][2] + m[2][0]) * s]
    } else if m22 >= m33 {
        let s = 0.5 / (1.0 + m22 - m11 - m33).sqrt();
        [(m[0][2] - m[2][0]) * s, (m[1][0] + m[0][1]) * s, 0.25 / s, (m[2][1] + m[1][2]) * s]
    } else {
        let s = 0.5 / (1.0 + m33 - m11 - m22).sqrt();
        [(m[1][0] - m[0][1]) * s, (m[0][2] + m[2][0]) * s, (m[2][1] + m[1][2]) * s, 0.25 / s]
    };
    let n = dot4(&q, &q).sqrt();
    Quaternion(q.map(|v| v / n)).canonical()
}

/// 2D rotation quaternion (a, b) = (cos θ/2, sin θ/2).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quat2 {
    pub a: f64,
    pub b: f64,
}

impl Quat2 {
    pub fn from_angle(theta: f64) -> Self {
        let (b, a) = (0.5 * theta).sin_cos();
        Self { a, b }
    }

    pub fn normalized(a: f64, b: f64) -> Result<Self> {
        let n = a.hypot(b);
        if !(n.is_finite() && n > 0.0) {
            return Err(Error::NotUnit { norm_sq: n * n });
        }
        Ok(Self { a: a / n, b: b / n })
    }

    pub fn check_unit(&self) -> Result<()> {
        let n = self.a * self.a + self.b * self.b;
        if (n - 1.0).abs() <= UNIT_TOL {
            Ok(())
        } else {
            Err(Error::NotUnit { norm_sq: n })
        }
    }

    /// a > 0, or b > 0 when |a| is below the tie threshold.
    pub fn canonical(&self) -> Self {
        let lead = if self.a.abs() >= SIGN_TIE_TOL { self.a } else { self.b };
        if lead < 0.0 {
            Self { a: -self.a, b: -self.b }
        } else {
            *self
        }
    }

    pub fn dot(&self, other: &Quat2) -> f64 {
        self.a * other.a + self.b * other.b
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation2 {
    pub m: [[f64; 2]; 2],
}

impl Rotation2 {
    pub fn exact(m: [[f64; 2]; 2]) -> Result<Self> {
        let r = Self::measured(m)?;
        let mm = Mat2::from_rows(m);
        let err = mm.transpose().mul(&mm).sub(&Mat2::identity()).frobenius_norm();
        let det = mm.det();
        if err > EXACT_ROTATION_TOL || (det - 1.0).abs() > EXACT_ROTATION_TOL {
            return Err(Error::NotRotation { error: err.max((det - 1.0).abs()) });
        }
        Ok(r)
    }

    pub fn measured(m: [[f64; 2]; 2]) -> Result<Self> {
        Mat2::new(m)?;
        Ok(Self { m })
    }

    pub fn apply(&self, v: &[f64; 2]) -> [f64; 2] {
        [
            self.m[0][0] * v[0] + self.m[0][1] * v[1],
            self.m[1][0] * v[0] + self.m[1][1] * v[1],
        ]
    }
}

pub fn rot2_from_angle(theta: f64) -> Rotation2 {
    let (s, c) = theta.sin_cos();
    Rotation2 { m: [[c, -s], [s, c]] }
}

pub fn rot2_from_quat2(p: &Quat2) -> Result<Rotation2> {
    p.check_unit()?;
    let (a, b) = (p.a, p.b);
    let c = a * a - b * b;
    let s = 2.0 * a * b;
    Ok(Rotation2 { m: [[c, -s], [s, c]] })
}

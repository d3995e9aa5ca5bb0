//! Quaternion extraction through adjugates of characteristic matrices.
//!
//! Every column of Adj(K − λ_max I) is a multiple of the maximal eigenvector,
//! so at least one row of the adjugate can always be normalized, whichever
//! quaternion components vanish.

use crate::error::{Error, Result};
use crate::linalg::{char_matrix, max_eigenvalue_sym4, SymMat4};
use crate::rotations::{
    rot2_from_quat2, rot3_from_quat_unchecked, AxisAngle, Quat2, Quaternion, Rotation2, Rotation3,
};

/// Default threshold used when reporting singular sectors.
pub const SECTOR_TOL: f64 = 1e-7;

/// Diagonals within this distance of the maximum (trace units) tie; the lowest index wins.
const ROW_TIE_TOL: f64 = 1e-12;

/// Round-off negatives above −CLAMP_TOL·trace are clamped to zero.
const CLAMP_TOL: f64 = 1e-12;

/// Adjugate trace below this multiple of ‖χ‖³ counts as vanished.
const DEGENERATE_ADJ_TOL: f64 = 1e-14;

/// Trace-normalized 2×2 adjugate [[α, γ], [γ, β]] standing for [[a², ab], [ab, b²]].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Adjugate2 {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
    /// Trace of the raw adjugate before normalization.
    pub scale: f64,
}

impl Adjugate2 {
    /// The two columns normalized to (a, b); `None` where a column is singular.
    pub fn normalized_columns(&self, tol: f64) -> [Option<Quat2>; 2] {
        let col = |x: f64, y: f64, d: f64| {
            if d > tol {
                Quat2::normalized(x, y).ok().map(|q| q.canonical())
            } else {
                None
            }
        };
        [col(self.alpha, self.gamma, self.alpha), col(self.gamma, self.beta, self.beta)]
    }

    /// (a, b) from the column with the larger diagonal, first column on ties.
    pub fn quat2(&self) -> Result<Quat2> {
        let (x, y, d) = if self.alpha >= self.beta {
            (self.alpha, self.gamma, self.alpha)
        } else {
            (self.gamma, self.beta, self.beta)
        };
        if !(d > 0.0) {
            return Err(Error::DegenerateAdjugate { trace: self.alpha + self.beta });
        }
        let n = (d * (self.alpha + self.beta)).sqrt();
        Ok(Quat2::normalized(x / n, y / n)?.canonical())
    }
}

/// Symmetric 4×4 matrix of unnormalized products q_i q_j, rescaled to unit trace.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdjugateMatrix4 {
    pub m: SymMat4,
    /// Signed trace of the raw matrix that was divided out.
    pub scale: f64,
}

impl AdjugateMatrix4 {
    /// Divides by the trace, which flips the sign when the trace is negative.
    pub fn from_raw(raw: &SymMat4) -> Result<Self> {
        let t = raw.trace();
        if !(t.is_finite() && t != 0.0) {
            return Err(Error::DegenerateAdjugate { trace: t });
        }
        Ok(Self { m: raw.scale(1.0 / t), scale: t })
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.m.get(i, j)
    }

    /// Residuals of q00+q11+q22+q33 = 1 and the six rank-one relations
    /// q00q11 = q01², q00q22 = q02², q00q33 = q03², q22q33 = q23², q11q33 = q13², q11q22 = q12².
    pub fn constraint_residuals(&self) -> [f64; 7] {
        let q = |i, j| self.m.get(i, j);
        [
            self.m.trace() - 1.0,
            q(0, 0) * q(1, 1) - q(0, 1).powi(2),
            q(0, 0) * q(2, 2) - q(0, 2).powi(2),
            q(0, 0) * q(3, 3) - q(0, 3).powi(2),
            q(2, 2) * q(3, 3) - q(2, 3).powi(2),
            q(1, 1) * q(3, 3) - q(1, 3).powi(2),
            q(1, 1) * q(2, 2) - q(1, 2).powi(2),
        ]
    }

    pub fn max_constraint_violation(&self) -> f64 {
        self.constraint_residuals().iter().fold(0.0, |a, r| a.max(r.abs()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SectorClass {
    Generic,
    OneZero,
    TwoZero,
    ThreeZero,
}

/// Which quaternion components vanish.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SectorId {
    pub zeros: [bool; 4],
    pub class: SectorClass,
}

impl SectorId {
    pub fn from_zeros(zeros: [bool; 4]) -> Self {
        let class = match zeros.iter().filter(|&&z| z).count() {
            0 => SectorClass::Generic,
            1 => SectorClass::OneZero,
            2 => SectorClass::TwoZero,
            _ => SectorClass::ThreeZero,
        };
        Self { zeros, class }
    }

    /// The 14 singular zero patterns: four with one zero, six with two, four with three.
    pub fn singular_patterns() -> Vec<[bool; 4]> {
        let mut out: Vec<[bool; 4]> = (1u8..15)
            .map(|bits| [0, 1, 2, 3].map(|i| bits & (1 << i) != 0))
            .collect();
        out.sort_by_key(|z| z.iter().filter(|&&b| b).count());
        out
    }
}

pub fn classify_singular_sector(q: &Quaternion, tol: f64) -> SectorId {
    SectorId::from_zeros(q.0.map(|v| v.abs() < tol))
}

/// Exact q qᵀ for a unit quaternion.
pub fn quadratic_form_matrix(q: &Quaternion) -> Result<AdjugateMatrix4> {
    q.check_unit()?;
    let mut m = SymMat4::zero();
    for i in 0..4 {
        for j in i..4 {
            m.set(i, j, q.0[i] * q.0[j]);
        }
    }
    Ok(AdjugateMatrix4 { m, scale: 1.0 })
}

/// Same matrix written in axis-angle terms: ½[[1+c, s n̂], [s n̂, (1−c) n̂n̂ᵀ]].
pub fn extract_quat3_exact(aa: &AxisAngle) -> AdjugateMatrix4 {
    let (s, c) = aa.theta().sin_cos();
    let n = aa.axis();
    let mut m = SymMat4::zero();
    m.set(0, 0, 0.5 * (1.0 + c));
    for i in 0..3 {
        m.set(0, i + 1, 0.5 * s * n[i]);
        for j in i..3 {
            m.set(i + 1, j + 1, 0.5 * (1.0 - c) * n[i] * n[j]);
        }
    }
    AdjugateMatrix4 { m, scale: 1.0 }
}

fn select_row(adj: &AdjugateMatrix4, tol: f64) -> Result<(usize, Quaternion, SectorId)> {
    let t = adj.m.trace();
    if !(t > 0.0) {
        return Err(Error::DegenerateAdjugate { trace: t });
    }
    let diag = adj.m.diagonal().map(|d| if d < 0.0 && d > -CLAMP_TOL * t { 0.0 } else { d });
    let dmax = diag.iter().fold(f64::NEG_INFINITY, |a, &d| a.max(d));
    if !(dmax > tol * t) {
        return Err(Error::DegenerateAdjugate { trace: t });
    }
    let k = diag.iter().position(|&d| d >= dmax - ROW_TIE_TOL * t).unwrap_or(0);
    let norm = (diag[k] * t).sqrt();
    let row = [0, 1, 2, 3].map(|j| adj.m.get(k, j) / norm);
    let q = Quaternion::normalized(row)?.canonical();
    let sector = SectorId::from_zeros(diag.map(|d| d < tol * t));
    Ok((k, q, sector))
}

/// Normalizes the row with the largest diagonal into a unit quaternion.
pub fn normalize_adjugate_row(adj: &AdjugateMatrix4, tol: f64) -> Result<(Quaternion, SectorId)> {
    let (_, q, sector) = select_row(adj, tol)?;
    Ok((q, sector))
}

/// K₀(m): traceless profile whose maximal eigenvector maximizes tr R(q)·mᵀ.
pub fn profile_from_rot3_measured(m: &Rotation3) -> SymMat4 {
    let m = &m.m;
    let (m11, m12, m13) = (m[0][0], m[0][1], m[0][2]);
    let (m21, m22, m23) = (m[1][0], m[1][1], m[1][2]);
    let (m31, m32, m33) = (m[2][0], m[2][1], m[2][2]);
    let d0 = m11 + m22 + m33;
    let d1 = m11 - m22 - m33;
    let d2 = -m11 + m22 - m33;
    // written so the floating-point trace cancels exactly
    let d3 = -((d0 + d1) + d2);
    SymMat4::from_rows([
        [d0, m32 - m23, m13 - m31, m21 - m12],
        [m32 - m23, d1, m12 + m21, m13 + m31],
        [m13 - m31, m12 + m21, d2, m23 + m32],
        [m21 - m12, m13 + m31, m23 + m32, d3],
    ])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtractionResult {
    pub adjugate: AdjugateMatrix4,
    pub lambda_opt: f64,
    pub chosen_row: usize,
    pub q_opt: Quaternion,
    pub r_opt: Rotation3,
    /// ‖R(q_opt) − m‖_F.
    pub frobenius_residual: f64,
    pub sector: SectorId,
}

/// Adjugate of χ = profile − λ_max I, normalized to unit trace, plus λ_max.
pub fn maximal_adjugate(profile: &SymMat4) -> Result<(AdjugateMatrix4, f64)> {
    let lambda = max_eigenvalue_sym4(profile)?;
    let chi = char_matrix(profile, lambda);
    let raw = chi.adjugate();
    let t = raw.trace();
    if !(t.abs() >= DEGENERATE_ADJ_TOL * chi.frobenius_norm().powi(3)) || t == 0.0 {
        return Err(Error::DegenerateAdjugate { trace: t });
    }
    Ok((AdjugateMatrix4::from_raw(&raw)?, lambda))
}

/// Optimal rotation (in the Frobenius sense) for a measured 3×3 matrix.
pub fn extract_quat3_noisy(m: &Rotation3) -> Result<ExtractionResult> {
    let profile = profile_from_rot3_measured(m);
    let (adjugate, lambda_opt) = maximal_adjugate(&profile)?;
    let (chosen_row, q_opt, sector) = select_row(&adjugate, SECTOR_TOL)?;
    let r_opt = rot3_from_quat_unchecked(&q_opt);
    let frobenius_residual = r_opt.frobenius_distance(m);
    Ok(ExtractionResult { adjugate, lambda_opt, chosen_row, q_opt, r_opt, frobenius_residual, sector })
}

/// Adjugate of the exact 2D problem: α = (1+c)/2, β = (1−c)/2, γ = s/2.
pub fn extract_quat2_exact(c: f64, s: f64) -> Result<Adjugate2> {
    let r2 = c * c + s * s;
    if !((r2 - 1.0).abs() <= 1e-9) {
        return Err(Error::NotOnCircle { radius_sq: r2 });
    }
    Ok(Adjugate2 { alpha: 0.5 * (1.0 + c), beta: 0.5 * (1.0 - c), gamma: 0.5 * s, scale: 1.0 })
}

/// 2×2 profile K(m) = [[m11+m22, m21−m12], [m21−m12, −(m11+m22)]].
pub fn profile_2d(m: &Rotation2) -> [[f64; 2]; 2] {
    let m = &m.m;
    let d = m[0][0] + m[1][1];
    let t = m[1][0] - m[0][1];
    [[d, t], [t, -d]]
}

/// Optimal (a, b) for a measured 2×2 matrix, with λ = √(d² + t²).
pub fn extract_quat2_noisy(m: &Rotation2) -> Result<(Adjugate2, f64, Quat2)> {
    let mm = &m.m;
    let d = 0.5 * (mm[0][0] + mm[1][1]);
    let t = 0.5 * (mm[1][0] - mm[0][1]);
    let lambda = d.hypot(t);
    if !(lambda > 1e-14) {
        return Err(Error::DegenerateInput);
    }
    let adj = Adjugate2 {
        alpha: (lambda + d) / (2.0 * lambda),
        beta: (lambda - d) / (2.0 * lambda),
        gamma: t / (2.0 * lambda),
        // trace of Adj(K(m) − 2λ I)
        scale: -4.0 * lambda,
    };
    let sq2l = (2.0 * lambda).sqrt();
    let q = if d >= 0.0 {
        Quat2 { a: (lambda + d).sqrt() / sq2l, b: t / (sq2l * (lambda + d).sqrt()) }
    } else {
        Quat2 { a: t / (sq2l * (lambda - d).sqrt()), b: (lambda - d).sqrt() / sq2l }
    };
    Ok((adj, lambda, q.canonical()))
}

/// Convenience: the rotation for a measured 2×2 matrix.
pub fn rot2_opt(m: &Rotation2) -> Result<Rotation2> {
    let (_, _, q) = extract_quat2_noisy(m)?;
    rot2_from_quat2(&q)
}

//! Small fixed-size matrices, adjugates, and a symmetric 4×4 eigenvalue solver.

use crate::error::{Error, Result};

/// Relative residual bound for eigenvalue roots, scaled by ‖m‖_F⁴.
pub const EIGEN_RESIDUAL_TOL: f64 = 1e-9;

/// Roots closer than this (relative to ‖m‖_F) count as clustered. Polynomial
/// roots of multiplicity k are only determined to about eps^(1/k), so clusters
/// are handed to Jacobi, which resolves them to working precision.
const CLUSTER_GAP: f64 = 1e-3;

const NEWTON_STEPS: usize = 3;
const JACOBI_MAX_SWEEPS: usize = 64;

pub fn dot3(a: &[f64; 3], b: &[f64; 3]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub fn cross3(a: &[f64; 3], b: &[f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub fn norm3(a: &[f64; 3]) -> f64 {
    dot3(a, a).sqrt()
}

pub fn dot4(a: &[f64; 4], b: &[f64; 4]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + a[3] * b[3]
}

/// Dense N×N matrix, row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat<const N: usize> {
    pub m: [[f64; N]; N],
}

pub type Mat2 = Mat<2>;
pub type Mat3 = Mat<3>;
pub type Mat4 = Mat<4>;
pub type Mat5 = Mat<5>;

impl<const N: usize> Mat<N> {
    /// Checked constructor: rejects NaN and infinities.
    pub fn new(m: [[f64; N]; N]) -> Result<Self> {
        if m.iter().flatten().all(|v| v.is_finite()) {
            Ok(Self { m })
        } else {
            Err(Error::NonFinite)
        }
    }

    pub const fn from_rows(m: [[f64; N]; N]) -> Self {
        Self { m }
    }

    pub fn zero() -> Self {
        Self { m: [[0.0; N]; N] }
    }

    pub fn identity() -> Self {
        let mut m = [[0.0; N]; N];
        for (i, row) in m.iter_mut().enumerate() {
            row[i] = 1.0;
        }
        Self { m }
    }

    pub fn transpose(&self) -> Self {
        let mut t = [[0.0; N]; N];
        for i in 0..N {
            for j in 0..N {
                t[j][i] = self.m[i][j];
            }
        }
        Self { m: t }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut p = [[0.0; N]; N];
        for i in 0..N {
            for j in 0..N {
                let mut s = 0.0;
                for k in 0..N {
                    s += self.m[i][k] * other.m[k][j];
                }
                p[i][j] = s;
            }
        }
        Self { m: p }
    }

    pub fn mul_vec(&self, v: &[f64; N]) -> [f64; N] {
        let mut out = [0.0; N];
        for i in 0..N {
            out[i] = (0..N).map(|k| self.m[i][k] * v[k]).sum();
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut m = self.m;
        m.iter_mut().flatten().for_each(|v| *v *= s);
        Self { m }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut m = self.m;
        for i in 0..N {
            for j in 0..N {
                m[i][j] -= other.m[i][j];
            }
        }
        Self { m }
    }

    pub fn trace(&self) -> f64 {
        (0..N).map(|i| self.m[i][i]).sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.m.iter().flatten().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.m.iter().flatten().fold(0.0, |a, v| a.max(v.abs()))
    }

    pub fn det(&self) -> f64 {
        let mut buf = [0.0; 25];
        for i in 0..N {
            for j in 0..N {
                buf[i * N + j] = self.m[i][j];
            }
        }
        det_flat(&buf[..N * N], N)
    }

    /// Determinant of the square sub-block picked out by `rows` × `cols`.
    pub fn subdet(&self, rows: &[usize], cols: &[usize]) -> f64 {
        assert_eq!(rows.len(), cols.len());
        let n = rows.len();
        let mut buf = [0.0; 25];
        for (a, &i) in rows.iter().enumerate() {
            for (b, &j) in cols.iter().enumerate() {
                buf[a * n + b] = self.m[i][j];
            }
        }
        det_flat(&buf[..n * n], n)
    }

    /// Transposed cofactor matrix, so that `m · adj(m) = det(m) · I` even for singular m.
    pub fn adjugate(&self) -> Self {
        if N == 1 {
            return Self::identity();
        }
        let mut adj = [[0.0; N]; N];
        let mut buf = [0.0; 16];
        for i in 0..N {
            for j in 0..N {
                let mut k = 0;
                for r in (0..N).filter(|&r| r != i) {
                    for c in (0..N).filter(|&c| c != j) {
                        buf[k] = self.m[r][c];
                        k += 1;
                    }
                }
                let sign = if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                adj[j][i] = sign * det_flat(&buf[..k], N - 1);
            }
        }
        Self { m: adj }
    }
}

/// Free-function form of [`Mat::adjugate`].
pub fn adjugate<const N: usize>(m: &Mat<N>) -> Mat<N> {
    m.adjugate()
}

fn det_flat(a: &[f64], n: usize) -> f64 {
    match n {
        0 => 1.0,
        1 => a[0],
        2 => a[0] * a[3] - a[1] * a[2],
        3 => {
            a[0] * (a[4] * a[8] - a[5] * a[7]) - a[1] * (a[3] * a[8] - a[5] * a[6])
                + a[2] * (a[3] * a[7] - a[4] * a[6])
        }
        _ => {
            // Laplace expansion along the first row; n ≤ 5 keeps this cheap.
            let mut sum = 0.0;
            let mut minor = [0.0; 16];
            for col in 0..n {
                if a[col] == 0.0 {
                    continue;
                }
                let mut k = 0;
                for r in 1..n {
                    for c in (0..n).filter(|&c| c != col) {
                        minor[k] = a[r * n + c];
                        k += 1;
                    }
                }
                let sign = if col % 2 == 0 { 1.0 } else { -1.0 };
                sum += sign * a[col] * det_flat(&minor[..k], n - 1);
            }
            sum
        }
    }
}

/// Symmetric 4×4 matrix stored as its upper triangle, so symmetry is exact.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymMat4 {
    u: [f64; 10],
}

const fn sym_index(i: usize, j: usize) -> usize {
    let (i, j) = if i <= j { (i, j) } else { (j, i) };
    // rows start at 0, 4, 7, 9
    match i {
        0 => j,
        1 => 3 + j,
        2 => 5 + j,
        _ => 6 + j,
    }
}

impl SymMat4 {
    pub fn zero() -> Self {
        Self { u: [0.0; 10] }
    }

    pub fn identity() -> Self {
        Self::diag([1.0; 4])
    }

    pub fn diag(d: [f64; 4]) -> Self {
        let mut s = Self::zero();
        for (i, v) in d.into_iter().enumerate() {
            s.set(i, i, v);
        }
        s
    }

    /// Reads the upper triangle of `m`; the lower triangle is ignored.
    pub fn from_upper(m: &Mat4) -> Self {
        let mut s = Self::zero();
        for i in 0..4 {
            for j in i..4 {
                s.set(i, j, m.m[i][j]);
            }
        }
        s
    }

    /// Builds from a full array, averaging the two triangles.
    pub fn from_rows(m: [[f64; 4]; 4]) -> Self {
        let mut s = Self::zero();
        for i in 0..4 {
            for j in i..4 {
                s.set(i, j, 0.5 * (m[i][j] + m[j][i]));
            }
        }
        s
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.u[sym_index(i, j)]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.u[sym_index(i, j)] = v;
    }

    pub fn to_mat4(&self) -> Mat4 {
        let mut m = [[0.0; 4]; 4];
        for (i, row) in m.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = self.get(i, j);
            }
        }
        Mat4::from_rows(m)
    }

    pub fn to_rows(&self) -> [[f64; 4]; 4] {
        self.to_mat4().m
    }

    pub fn diagonal(&self) -> [f64; 4] {
        [self.get(0, 0), self.get(1, 1), self.get(2, 2), self.get(3, 3)]
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    pub fn frobenius_norm(&self) -> f64 {
        let mut s = 0.0;
        for i in 0..4 {
            for j in 0..4 {
                s += self.get(i, j).powi(2);
            }
        }
        s.sqrt()
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut u = self.u;
        u.iter_mut().for_each(|v| *v *= s);
        Self { u }
    }

    pub fn mul_vec(&self, v: &[f64; 4]) -> [f64; 4] {
        let mut out = [0.0; 4];
        for (i, o) in out.iter_mut().enumerate() {
            *o = (0..4).map(|j| self.get(i, j) * v[j]).sum();
        }
        out
    }

    /// Quadratic form v·M·v.
    pub fn quad_form(&self, v: &[f64; 4]) -> f64 {
        dot4(v, &self.mul_vec(v))
    }

    pub fn det(&self) -> f64 {
        self.to_mat4().det()
    }

    /// Adjugate of a symmetric matrix is symmetric.
    pub fn adjugate(&self) -> SymMat4 {
        SymMat4::from_upper(&self.to_mat4().adjugate())
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().all(|v| v.is_finite())
    }
}

/// χ = M − λ I₄.
pub fn char_matrix(m: &SymMat4, lambda: f64) -> SymMat4 {
    let mut c = *m;
    for i in 0..4 {
        c.set(i, i, m.get(i, i) - lambda);
    }
    c
}

/// Coefficients (p1, p2, p3, p4) of det(e I − M) = e⁴ + p1 e³ + p2 e² + p3 e + p4.
pub fn char_poly_coeffs(m: &SymMat4) -> [f64; 4] {
    let a = m.to_mat4();
    let c1 = a.trace();
    let mut c2 = 0.0;
    for i in 0..4 {
        for j in (i + 1)..4 {
            c2 += a.m[i][i] * a.m[j][j] - a.m[i][j] * a.m[j][i];
        }
    }
    let mut c3 = 0.0;
    for skip in 0..4 {
        let idx: Vec<usize> = (0..4).filter(|&k| k != skip).collect();
        c3 += a.subdet(&idx, &idx);
    }
    let c4 = a.det();
    [-c1, c2, -c3, c4]
}

fn poly_eval(p: &[f64; 4], x: f64) -> (f64, f64) {
    let f = (((x + p[0]) * x + p[1]) * x + p[2]) * x + p[3];
    let df = ((4.0 * x + 3.0 * p[0]) * x + 2.0 * p[1]) * x + p[2];
    (f, df)
}

/// Newton steps that are only accepted while they shrink |p(x)|.
fn newton_polish(p: &[f64; 4], mut x: f64, steps: usize) -> f64 {
    for _ in 0..steps {
        let (f, df) = poly_eval(p, x);
        if f == 0.0 || df == 0.0 || !df.is_finite() {
            break;
        }
        let nx = x - f / df;
        if !nx.is_finite() || poly_eval(p, nx).0.abs() > f.abs() {
            break;
        }
        x = nx;
    }
    x
}

/// Real roots of z³ + a z² + b z + c, assuming all three are real.
fn cubic_real_roots(a: f64, b: f64, c: f64) -> [f64; 3] {
    let a3 = a / 3.0;
    let p = b - a * a3;
    let q = 2.0 * a3 * a3 * a3 - a3 * b + c;
    if p >= 0.0 {
        // Only reachable at a (numerically) triple root.
        let t = (-q).cbrt();
        return [t - a3; 3];
    }
    let r = 2.0 * (-p / 3.0).sqrt();
    let arg = ((3.0 * q / (2.0 * p)) * (-3.0 / p).sqrt()).clamp(-1.0, 1.0);
    let phi = arg.acos() / 3.0;
    let tau = 2.0 * std::f64::consts::PI / 3.0;
    [
        r * phi.cos() - a3,
        r * (phi - tau).cos() - a3,
        r * (phi - 2.0 * tau).cos() - a3,
    ]
}

/// Ferrari route: shift to a traceless matrix, solve the resolvent cubic
/// for the squared pair sums, recombine.
fn analytic_roots(m: &SymMat4) -> [f64; 4] {
    let shift = m.trace() / 4.0;
    let b = char_matrix(m, shift);
    let [_, p, q, r] = char_poly_coeffs(&b);
    let mut z = cubic_real_roots(2.0 * p, p * p - 4.0 * r, -q * q);
    z.sort_by(|a, b| b.total_cmp(a));
    let s1 = z[0].max(0.0).sqrt();
    let s2 = z[1].max(0.0).sqrt();
    let mut s3 = z[2].max(0.0).sqrt();
    // (y1+y2)(y1+y3)(y1+y4) = −q fixes the sign of the smallest pair sum.
    if q > 0.0 {
        s3 = -s3;
    }
    [
        0.5 * (s1 + s2 + s3) + shift,
        0.5 * (s1 - s2 - s3) + shift,
        0.5 * (-s1 + s2 - s3) + shift,
        0.5 * (-s1 - s2 + s3) + shift,
    ]
}

/// Cyclic Jacobi eigenvalues of a symmetric 4×4 matrix (unsorted).
pub fn jacobi_eigenvalues(m: &SymMat4) -> [f64; 4] {
    let mut a = m.to_rows();
    let norm = m.frobenius_norm();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..4)
            .flat_map(|i| ((i + 1)..4).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum();
        if off.sqrt() <= 1e-18 * norm {
            break;
        }
        for p in 0..3 {
            for q in (p + 1)..4 {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (kp, kq) = (row[p], row[q]);
                    row[p] = c * kp - s * kq;
                    row[q] = s * kp + c * kq;
                }
                for k in 0..4 {
                    let (pk, qk) = (a[p][k], a[q][k]);
                    a[p][k] = c * pk - s * qk;
                    a[q][k] = s * pk + c * qk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
            }
        }
    }
    [a[0][0], a[1][1], a[2][2], a[3][3]]
}

/// Roots of det(M − e I₄) sorted descending, with |det(M − r I₄)| per root.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuarticRoots {
    pub roots: [f64; 4],
    pub residuals: [f64; 4],
}

fn sort_desc(r: &mut [f64; 4]) {
    r.sort_by(|a, b| b.total_cmp(a));
}

fn residuals_of(m: &SymMat4, roots: &[f64; 4]) -> [f64; 4] {
    roots.map(|r| char_matrix(m, r).det().abs())
}

fn clustered(roots: &[f64; 4], gap: f64) -> bool {
    roots.windows(2).any(|w| (w[0] - w[1]).abs() < gap)
}

pub fn eigenvalues_sym4(m: &SymMat4) -> Result<QuarticRoots> {
    if !m.is_finite() {
        return Err(Error::NonFinite);
    }
    let norm = m.frobenius_norm();
    if norm == 0.0 {
        return Ok(QuarticRoots { roots: [0.0; 4], residuals: [0.0; 4] });
    }
    let tol = EIGEN_RESIDUAL_TOL * norm.powi(4);
    let gap = CLUSTER_GAP * norm;
    let coeffs = char_poly_coeffs(m);

    let mut roots = analytic_roots(m).map(|r| newton_polish(&coeffs, r, NEWTON_STEPS));
    sort_desc(&mut roots);
    let residuals = residuals_of(m, &roots);
    let analytic_ok = roots.iter().all(|r| r.is_finite()) && residuals.iter().all(|&r| r <= tol);
    if analytic_ok && !clustered(&roots, gap) {
        return Ok(QuarticRoots { roots, residuals });
    }

    let mut roots = jacobi_eigenvalues(m);
    sort_desc(&mut roots);
    for i in 0..4 {
        let isolated = (i == 0 || roots[i - 1] - roots[i] >= gap)
            && (i == 3 || roots[i] - roots[i + 1] >= gap);
        if isolated {
            roots[i] = newton_polish(&coeffs, roots[i], NEWTON_STEPS);
        }
    }
    sort_desc(&mut roots);
    let residuals = residuals_of(m, &roots);
    let worst = residuals.iter().fold(0.0f64, |a, &r| a.max(r));
    if worst <= tol {
        Ok(QuarticRoots { roots, residuals })
    } else {
        Err(Error::NonConvergence { residual: worst, tolerance: tol })
    }
}

pub fn max_eigenvalue_sym4(m: &SymMat4) -> Result<f64> {
    Ok(eigenvalues_sym4(m)?.roots[0])
}

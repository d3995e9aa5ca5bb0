use crate::error::{Error, Result};

/// K points of dimension D ∈ {1, 2, 3}, stored point-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    coords: Vec<f64>,
}

impl PointCloud {
    /// `coords` holds K consecutive D-tuples.
    pub fn new(dim: usize, coords: Vec<f64>) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::ShapeMismatch(format!("dimension {dim} not in 1..=3")));
        }
        if coords.is_empty() || !coords.len().is_multiple_of(dim) {
            return Err(Error::ShapeMismatch(format!(
                "{} coordinates do not form whole {dim}-D points",
                coords.len()
            )));
        }
        if coords.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self { dim, coords })
    }

    pub fn from_points1(p: &[f64]) -> Result<Self> {
        Self::new(1, p.to_vec())
    }

    pub fn from_points2(p: &[[f64; 2]]) -> Result<Self> {
        Self::new(2, p.iter().flatten().copied().collect())
    }

    pub fn from_points3(p: &[[f64; 3]]) -> Result<Self> {
        Self::new(3, p.iter().flatten().copied().collect())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn point(&self, k: usize) -> &[f64] {
        &self.coords[k * self.dim..(k + 1) * self.dim]
    }

    pub fn points(&self) -> impl Iterator<Item = &[f64]> {
        self.coords.chunks_exact(self.dim)
    }

    pub fn points3(&self) -> impl Iterator<Item = [f64; 3]> + '_ {
        self.points().map(|p| {
            let mut v = [0.0; 3];
            v[..p.len()].copy_from_slice(p);
            v
        })
    }

    pub fn points2(&self) -> impl Iterator<Item = [f64; 2]> + '_ {
        self.points().map(|p| [p[0], if p.len() > 1 { p[1] } else { 0.0 }])
    }

    /// One coordinate row, e.g. all x values.
    pub fn row(&self, axis: usize) -> Vec<f64> {
        self.points().map(|p| p[axis]).collect()
    }

    pub fn centroid(&self) -> Vec<f64> {
        let k = self.len() as f64;
        (0..self.dim).map(|a| self.points().map(|p| p[a]).sum::<f64>() / k).collect()
    }

    pub fn centered(&self) -> Self {
        let c = self.centroid();
        let coords = self.points().flat_map(|p| p.iter().zip(&c).map(|(v, m)| v - m)).collect();
        Self { dim: self.dim, coords }
    }

    /// Applies `f` to every point, producing a cloud of dimension `dim`.
    pub fn map<F: Fn(&[f64]) -> Vec<f64>>(&self, dim: usize, f: F) -> Result<Self> {
        Self::new(dim, self.points().flat_map(f).collect())
    }

    /// Largest point norm.
    pub fn radius(&self) -> f64 {
        self.points().map(|p| p.iter().map(|v| v * v).sum::<f64>().sqrt()).fold(0.0, f64::max)
    }

    /// Σ‖x_k‖².
    pub fn sum_sq(&self) -> f64 {
        self.coords.iter().map(|v| v * v).sum()
    }
}

pub(crate) fn require_pair(x: &PointCloud, u: &PointCloud, dx: usize, du: usize) -> Result<()> {
    if x.dim() != dx || u.dim() != du {
        return Err(Error::ShapeMismatch(format!(
            "expected dimensions ({dx}, {du}), got ({}, {})",
            x.dim(),
            u.dim()
        )));
    }
    if x.len() != u.len() {
        return Err(Error::ShapeMismatch(format!("{} reference vs {} sample points", x.len(), u.len())));
    }
    Ok(())
}

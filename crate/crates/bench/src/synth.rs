//! Synthetic data: random rotations, reference clouds and observation noise.

use adjquat::linalg::{Mat2, Mat3};
use adjquat::{PointCloud, Quaternion};
use rand::Rng;
use rand_distr::StandardNormal;

/// Haar-uniform rotation: four standard normals, normalized.
pub fn random_unit_quaternion<R: Rng>(rng: &mut R) -> Quaternion {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        if v.iter().map(|x| x * x).sum::<f64>() > 1e-12 {
            return Quaternion::normalized(v).expect("nonzero vector normalizes");
        }
    }
}

/// Relative Gram determinant below which a generated cloud is redrawn.
pub const GRAM_REL_TOL: f64 = 1e-6;

/// det(X Xᵀ) / (tr(X Xᵀ)/D)^D: 1 for an isotropic cloud, 0 for a flat one.
pub fn relative_gram_det(x: &PointCloud) -> f64 {
    let d = x.dim();
    let mut g = [[0.0; 3]; 3];
    for p in x.points() {
        for i in 0..d {
            for j in 0..d {
                g[i][j] += p[i] * p[j];
            }
        }
    }
    let tr: f64 = (0..d).map(|i| g[i][i]).sum();
    if tr <= 0.0 {
        return 0.0;
    }
    let det = match d {
        1 => g[0][0],
        2 => Mat2::from_rows([[g[0][0], g[0][1]], [g[1][0], g[1][1]]]).det(),
        _ => Mat3::from_rows(g).det(),
    };
    det / (tr / d as f64).powi(d as i32)
}

/// K points i.i.d. uniform in the cube [−spread, spread]^dim.
pub fn gen_cloud<R: Rng>(k: usize, dim: usize, rng: &mut R, spread: f64) -> PointCloud {
    assert!(k >= 1 && (1..=3).contains(&dim) && spread > 0.0);
    loop {
        let coords = (0..k * dim).map(|_| rng.random_range(-spread..=spread)).collect();
        let x = PointCloud::new(dim, coords).expect("finite coordinates");
        if k < dim || relative_gram_det(&x) >= GRAM_REL_TOL {
            return x;
        }
    }
}

/// Adds N(0, sigma²) to every coordinate.
pub fn apply_noise<R: Rng>(points: &PointCloud, sigma: f64, rng: &mut R) -> PointCloud {
    if sigma == 0.0 {
        return points.clone();
    }
    let coords = points
        .coords()
        .iter()
        .map(|v| v + sigma * rng.sample::<f64, _>(StandardNormal))
        .collect();
    PointCloud::new(points.dim(), coords).expect("finite coordinates")
}

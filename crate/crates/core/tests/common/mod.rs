#![allow(dead_code)]

use adjquat::{PointCloud, Quaternion};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn rand_quat<R: Rng>(rng: &mut R) -> Quaternion {
    loop {
        let v: [f64; 4] = std::array::from_fn(|_| rng.sample(StandardNormal));
        if let Ok(q) = Quaternion::normalized(v) {
            return q;
        }
    }
}

/// Random unit quaternion whose components flagged in `zeros` are exactly 0.
pub fn sector_quat<R: Rng>(rng: &mut R, zeros: [bool; 4]) -> Quaternion {
    loop {
        let v: [f64; 4] = std::array::from_fn(|i| if zeros[i] { 0.0 } else { rng.sample(StandardNormal) });
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        // keep live components clear of the sector tolerance
        if v.iter().zip(zeros).all(|(x, z)| z || x.abs() > 1e-3 * n) {
            return Quaternion::normalized(v).unwrap();
        }
    }
}

pub fn normal<R: Rng>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn rand_cloud<R: Rng>(rng: &mut R, dim: usize, k: usize) -> PointCloud {
    PointCloud::new(dim, (0..dim * k).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap()
}

pub fn add_noise<R: Rng>(rng: &mut R, c: &PointCloud, sigma: f64) -> PointCloud {
    PointCloud::new(c.dim(), c.coords().iter().map(|v| v + sigma * normal(rng)).collect()).unwrap()
}

pub fn na3(m: &[[f64; 3]; 3]) -> nalgebra::Matrix3<f64> {
    nalgebra::Matrix3::from_fn(|i, j| m[i][j])
}

pub fn unit_quat() -> impl Strategy<Value = Quaternion> {
    prop::array::uniform4(-1.0f64..1.0)
        .prop_filter("norm away from 0", |v| v.iter().map(|x| x * x).sum::<f64>() > 0.01)
        .prop_map(|v| Quaternion::normalized(v).unwrap())
}

/// min(‖a − b‖, ‖a + b‖).
pub fn quat_dist(a: &Quaternion, b: &Quaternion) -> f64 {
    let m: f64 = (0..4).map(|i| (a.0[i] - b.0[i]).powi(2)).sum();
    let p: f64 = (0..4).map(|i| (a.0[i] + b.0[i]).powi(2)).sum();
    m.min(p).sqrt()
}

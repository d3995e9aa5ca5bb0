//! Trial loop, per-trial records and the CSV/JSON reports.

use crate::synth::{apply_noise, gen_cloud, random_unit_quaternion};
use adjquat::matching::{match_loss2, match_loss3};
use adjquat::pose::{
    ortho_pose_loss, ortho_project, perspective_loss, perspective_project, pose2d_loss, pose3d_perspective_refined,
    rotation_error_2d,
};
use adjquat::rotations::{rot2_from_quat2, rot3_from_quat};
use adjquat::{match2d, match3d, pose2d, pose3d_ortho, rotation_error, CameraConvention, CameraTag, PointCloud, Quat2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Match2d,
    Match3d,
    Pose2d,
    Pose3dOrtho,
    Pose3dPersp,
}

impl Task {
    pub fn name(self) -> &'static str {
        match self {
            Task::Match2d => "match2d",
            Task::Match3d => "match3d",
            Task::Pose2d => "pose2d",
            Task::Pose3dOrtho => "pose3d-ortho",
            Task::Pose3dPersp => "pose3d-persp",
        }
    }

    /// Dimension of the reference cloud.
    pub fn reference_dim(self) -> usize {
        match self {
            Task::Match2d | Task::Pose2d => 2,
            _ => 3,
        }
    }

    pub fn min_points(self) -> usize {
        match self {
            Task::Match2d | Task::Pose2d => 2,
            Task::Match3d => 3,
            Task::Pose3dOrtho | Task::Pose3dPersp => 4,
        }
    }
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("cannot write {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("csv output: {0}")]
    Csv(#[from] csv::Error),
    #[error("json output: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Load(#[from] crate::io::LoadError),
}

impl BenchError {
    pub fn exit_code(&self) -> i32 {
        match self {
            BenchError::Config(_) => 2,
            _ => 1,
        }
    }
}

pub const DEFAULT_FOCAL: f64 = 6.0;
pub const DEFAULT_FBAR: f64 = 0.1;

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub task: Task,
    pub points: usize,
    pub trials: usize,
    pub sigma: f64,
    /// Only used by `pose3d-persp`.
    pub camera: CameraConvention,
    pub seed: u64,
    /// Half-width of the sampling cube.
    pub spread: f64,
    /// Center each reference cloud on its centroid before use.
    pub precenter: bool,
    /// Extra depth-undo rounds after the focal solve (perspective only).
    pub refine: usize,
    /// Fixed reference cloud used for every trial instead of a random one.
    pub reference: Option<PointCloud>,
}

impl ExperimentConfig {
    pub fn new(task: Task, points: usize, trials: usize, sigma: f64, seed: u64) -> Self {
        Self {
            task,
            points,
            trials,
            sigma,
            camera: CameraConvention::CameraAtOrigin { f: DEFAULT_FOCAL },
            seed,
            spread: 1.0,
            precenter: false,
            refine: 0,
            reference: None,
        }
    }

    /// Upper bound on the reference cloud's radius.
    fn radius_bound(&self) -> f64 {
        match &self.reference {
            Some(c) => c.radius() * if self.precenter { 2.0 } else { 1.0 },
            None => self.spread * (self.task.reference_dim() as f64).sqrt() * if self.precenter { 2.0 } else { 1.0 },
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let bad = |m: String| Err(BenchError::Config(m));
        if self.trials < 1 {
            return bad("trials must be at least 1".into());
        }
        if let Some(r) = &self.reference {
            if r.dim() != self.task.reference_dim() {
                return bad(format!("{} needs a {}-D reference cloud, got {}-D", self.task.name(), self.task.reference_dim(), r.dim()));
            }
            if r.len() != self.points {
                return bad(format!("reference cloud has {} points, config says {}", r.len(), self.points));
            }
        }
        if self.points < self.task.min_points() {
            return bad(format!("{} needs at least {} points", self.task.name(), self.task.min_points()));
        }
        if !(self.sigma.is_finite() && self.sigma >= 0.0) {
            return bad(format!("sigma must be finite and non-negative, got {}", self.sigma));
        }
        if !(self.spread.is_finite() && self.spread > 0.0) {
            return bad(format!("spread must be finite and positive, got {}", self.spread));
        }
        if self.task == Task::Pose3dPersp {
            let rad = self.radius_bound();
            match self.camera {
                CameraConvention::CameraAtOrigin { f } => {
                    if !(f.is_finite() && f > rad) {
                        return bad(format!("focal length {f} must exceed the cloud radius bound {rad}"));
                    }
                }
                CameraConvention::CloudAtOrigin { fbar } => {
                    if !(fbar.is_finite() && fbar >= 0.0 && fbar * rad < 1.0) {
                        return bad(format!("fbar {fbar} must be in [0, {}) to keep the camera outside the cloud", 1.0 / rad));
                    }
                }
            }
        } else if self.refine != 0 {
            return bad("refinement only applies to pose3d-persp".into());
        }
        Ok(())
    }
}

/// Values of one successful trial; `None` marks a column that does not apply.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialValues {
    pub loss_raw: Option<f64>,
    pub loss_bi: f64,
    pub loss_gen: f64,
    pub rot_err_bi: f64,
    pub focal_est: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub trial: usize,
    pub outcome: Result<TrialValues, String>,
}

/// ChaCha8 seeded from `seed`, one stream per trial index.
pub fn trial_rng(seed: u64, trial: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial as u64);
    rng
}

fn rotate2(r: &[[f64; 2]; 2], x: &PointCloud) -> PointCloud {
    x.map(2, |p| vec![r[0][0] * p[0] + r[0][1] * p[1], r[1][0] * p[0] + r[1][1] * p[1]])
        .expect("finite")
}

fn rotate3(r: &[[f64; 3]; 3], x: &PointCloud) -> PointCloud {
    x.map(3, |p| (0..3).map(|i| r[i][0] * p[0] + r[i][1] * p[1] + r[i][2] * p[2]).collect())
        .expect("finite")
}

/// Draws the data for one trial (cloud, rotation, noise, in that order) and runs the solver.
pub fn run_trial(cfg: &ExperimentConfig, trial: usize) -> Result<TrialValues, adjquat::Error> {
    let mut rng = trial_rng(cfg.seed, trial);
    let dim = cfg.task.reference_dim();
    let mut x = match &cfg.reference {
        Some(c) => c.clone(),
        None => gen_cloud(cfg.points, dim, &mut rng, cfg.spread),
    };
    if cfg.precenter {
        x = x.centered();
    }
    match cfg.task {
        Task::Match2d | Task::Pose2d => {
            let q_gen = Quat2::from_angle(rng.random_range(0.0..std::f64::consts::TAU));
            let r_gen = rot2_from_quat2(&q_gen)?;
            let full = rotate2(&r_gen.m, &x);
            if cfg.task == Task::Match2d {
                let u = apply_noise(&full, cfg.sigma, &mut rng);
                let res = match2d(&x, &u)?;
                Ok(TrialValues {
                    loss_raw: None,
                    loss_bi: res.loss,
                    loss_gen: match_loss2(&r_gen.m, &x, &u),
                    rot_err_bi: rotation_error_2d(&res.q_opt, &q_gen)?,
                    focal_est: None,
                })
            } else {
                let u = apply_noise(&full.map(1, |p| vec![p[0]])?, cfg.sigma, &mut rng);
                let res = pose2d(&x, &u)?;
                Ok(TrialValues {
                    loss_raw: Some(res.loss_raw),
                    loss_bi: res.loss,
                    loss_gen: pose2d_loss(&r_gen.m[0], &x, &u),
                    rot_err_bi: rotation_error_2d(&res.q, &q_gen)?,
                    focal_est: None,
                })
            }
        }
        Task::Match3d => {
            let q_gen = random_unit_quaternion(&mut rng);
            let r_gen = rot3_from_quat(&q_gen)?;
            let u = apply_noise(&rotate3(&r_gen.m, &x), cfg.sigma, &mut rng);
            let res = match3d(&x, &u)?;
            Ok(TrialValues {
                loss_raw: None,
                loss_bi: res.loss,
                loss_gen: match_loss3(&r_gen.m, &x, &u),
                rot_err_bi: rotation_error(&res.q_opt, &q_gen)?,
                focal_est: None,
            })
        }
        Task::Pose3dOrtho => {
            let q_gen = random_unit_quaternion(&mut rng);
            let r_gen = rot3_from_quat(&q_gen)?;
            let u = apply_noise(&ortho_project(&r_gen, &x)?, cfg.sigma, &mut rng);
            let sol = pose3d_ortho(&x, &u)?;
            Ok(TrialValues {
                loss_raw: Some(sol.loss_raw),
                loss_bi: sol.loss_bi,
                loss_gen: ortho_pose_loss(&r_gen.m, &x, &u),
                rot_err_bi: rotation_error(&sol.q_opt, &q_gen)?,
                focal_est: None,
            })
        }
        Task::Pose3dPersp => {
            let q_gen = random_unit_quaternion(&mut rng);
            let r_gen = rot3_from_quat(&q_gen)?;
            if let CameraConvention::CameraAtOrigin { f } = cfg.camera {
                // move the cloud so its rotated image sits at depth f in front of the camera
                let shift = r_gen.m[2].map(|v| v * f);
                x = x.map(3, |p| (0..3).map(|i| p[i] + shift[i]).collect())?;
            }
            let u = apply_noise(&perspective_project(&r_gen, &cfg.camera, &x)?, cfg.sigma, &mut rng);
            let sol = pose3d_perspective_refined(&x, &u, cfg.camera.tag(), cfg.refine)?;
            Ok(TrialValues {
                loss_raw: Some(sol.loss_raw).filter(|v| v.is_finite()),
                loss_bi: sol.loss_bi,
                loss_gen: perspective_loss(&r_gen.m, &cfg.camera, &x, &u)?,
                rot_err_bi: rotation_error(&sol.q_opt, &q_gen)?,
                focal_est: sol.focal,
            })
        }
    }
}

/// Runs every trial on the current rayon pool; records come back in trial order.
pub fn run_trials(cfg: &ExperimentConfig) -> Result<Vec<TrialRecord>, BenchError> {
    cfg.validate()?;
    Ok((0..cfg.trials)
        .into_par_iter()
        .map(|trial| TrialRecord { trial, outcome: run_trial(cfg, trial).map_err(|e| e.to_string()) })
        .collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Stats {
    pub loss_raw: Option<f64>,
    pub loss_bi: Option<f64>,
    pub loss_gen: Option<f64>,
    pub rot_err_bi: Option<f64>,
    pub focal_est: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormalizedStats {
    pub loss_raw: Option<f64>,
    pub loss_bi: Option<f64>,
    pub loss_gen: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigSummary {
    pub points: usize,
    pub trials: usize,
    pub sigma: f64,
    pub camera: Option<String>,
    pub focal: Option<f64>,
    pub fbar: Option<f64>,
    pub seed: u64,
    pub spread: f64,
    pub precenter: bool,
    pub refine: usize,
    pub fixed_reference: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    pub trial: usize,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub task: Task,
    pub config: ConfigSummary,
    pub n_success: usize,
    pub n_failed: usize,
    pub mean: Stats,
    pub median: Stats,
    pub sorted_loss_bi: Vec<f64>,
    /// K·spread², the normalizer for `mean_normalized`.
    pub loss_scale: f64,
    pub mean_normalized: NormalizedStats,
    pub failures: Vec<Failure>,
}

/// Sum in the given order divided by the count.
pub fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

/// Middle value, or the average of the two middle values.
pub fn median(v: &[f64]) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    let mut s = v.to_vec();
    s.sort_by(f64::total_cmp);
    let n = s.len();
    Some(if n % 2 == 1 { s[n / 2] } else { 0.5 * (s[n / 2 - 1] + s[n / 2]) })
}

fn column<F: Fn(&TrialValues) -> Option<f64>>(records: &[TrialRecord], f: F) -> Vec<f64> {
    records.iter().filter_map(|r| r.outcome.as_ref().ok().and_then(&f)).collect()
}

fn stats_with(records: &[TrialRecord], g: fn(&[f64]) -> Option<f64>) -> Stats {
    Stats {
        loss_raw: g(&column(records, |v| v.loss_raw)),
        loss_bi: g(&column(records, |v| Some(v.loss_bi))),
        loss_gen: g(&column(records, |v| Some(v.loss_gen))),
        rot_err_bi: g(&column(records, |v| Some(v.rot_err_bi))),
        focal_est: g(&column(records, |v| v.focal_est)),
    }
}

pub fn summarize(cfg: &ExperimentConfig, records: &[TrialRecord]) -> Summary {
    let mean_stats = stats_with(records, mean);
    let mut sorted_loss_bi = column(records, |v| Some(v.loss_bi));
    sorted_loss_bi.sort_by(f64::total_cmp);
    let loss_scale = cfg.points as f64 * cfg.spread * cfg.spread;
    let persp = cfg.task == Task::Pose3dPersp;
    let (focal, fbar) = match cfg.camera {
        CameraConvention::CameraAtOrigin { f } => (Some(f), None),
        CameraConvention::CloudAtOrigin { fbar } => (None, Some(fbar)),
    };
    let camera = match cfg.camera.tag() {
        CameraTag::CameraAtOrigin => "origin",
        CameraTag::CloudAtOrigin => "cloud",
    };
    let failures: Vec<Failure> = records
        .iter()
        .filter_map(|r| r.outcome.as_ref().err().map(|e| Failure { trial: r.trial, error: e.clone() }))
        .collect();
    Summary {
        task: cfg.task,
        config: ConfigSummary {
            points: cfg.points,
            trials: cfg.trials,
            sigma: cfg.sigma,
            camera: persp.then(|| camera.to_string()),
            focal: focal.filter(|_| persp),
            fbar: fbar.filter(|_| persp),
            seed: cfg.seed,
            spread: cfg.spread,
            precenter: cfg.precenter,
            refine: cfg.refine,
            fixed_reference: cfg.reference.is_some(),
        },
        n_success: records.len() - failures.len(),
        n_failed: failures.len(),
        mean_normalized: NormalizedStats {
            loss_raw: mean_stats.loss_raw.map(|v| v / loss_scale),
            loss_bi: mean_stats.loss_bi.map(|v| v / loss_scale),
            loss_gen: mean_stats.loss_gen.map(|v| v / loss_scale),
        },
        mean: mean_stats,
        median: stats_with(records, median),
        sorted_loss_bi,
        loss_scale,
        failures,
    }
}

pub struct Report {
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report, BenchError> {
    let records = run_trials(cfg)?;
    let summary = summarize(cfg, &records);
    Ok(Report { records, summary })
}

pub const CSV_HEADER: [&str; 6] = ["trial", "loss_raw", "loss_bi", "loss_gen", "rot_err_bi", "focal_est"];

fn fmt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:?}")).unwrap_or_default()
}

pub fn write_csv<W: std::io::Write>(records: &[TrialRecord], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for r in records {
        let row = match &r.outcome {
            Ok(v) => [
                r.trial.to_string(),
                fmt(v.loss_raw),
                fmt(Some(v.loss_bi)),
                fmt(Some(v.loss_gen)),
                fmt(Some(v.rot_err_bi)),
                fmt(v.focal_est),
            ],
            Err(_) => [r.trial.to_string(), String::new(), String::new(), String::new(), String::new(), String::new()],
        };
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| BenchError::Io { path: "<csv>".into(), source })?;
    Ok(())
}

/// JSON summary path next to the CSV path.
pub fn json_path(csv_path: &Path) -> PathBuf {
    csv_path.with_extension("json")
}

pub fn summary_json(summary: &Summary) -> Result<String, BenchError> {
    Ok(serde_json::to_string_pretty(summary)?)
}

/// Writes `path` (CSV) and its `.json` sibling; returns the JSON text.
pub fn write_outputs(report: &Report, path: &Path) -> Result<String, BenchError> {
    let io_err = |p: &Path| {
        let p = p.display().to_string();
        move |source| BenchError::Io { path: p, source }
    };
    let mut buf = Vec::new();
    write_csv(&report.records, &mut buf)?;
    std::fs::write(path, buf).map_err(io_err(path))?;
    let json = summary_json(&report.summary)?;
    let jp = json_path(path);
    std::fs::write(&jp, format!("{json}\n")).map_err(io_err(&jp))?;
    Ok(json)
}

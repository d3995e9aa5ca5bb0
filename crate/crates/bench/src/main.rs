use adjquat::CameraConvention;
use adjquat_bench::experiment::{write_outputs, DEFAULT_FBAR, DEFAULT_FOCAL};
use adjquat_bench::io::load_cloud_csv;
use adjquat_bench::{run_experiment, BenchError, ExperimentConfig, Task};
use clap::{Parser, ValueEnum};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Camera {
    /// Camera at the origin, focal length f.
    Origin,
    /// Cloud at the origin, inverse focal length f̄.
    Cloud,
}

/// Run a synthetic rotation-recovery experiment and write CSV + JSON reports.
#[derive(Debug, Parser)]
#[command(name = "bench", version)]
struct Args {
    task: Task,
    /// Points per cloud (K).
    #[arg(long, conflicts_with = "reference")]
    points: Option<usize>,
    #[arg(long, default_value_t = 100)]
    trials: usize,
    /// Standard deviation of the Gaussian noise on observed coordinates.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    /// Focal length for `--camera origin`.
    #[arg(long, conflicts_with = "fbar")]
    focal: Option<f64>,
    /// Inverse focal length for `--camera cloud`.
    #[arg(long)]
    fbar: Option<f64>,
    #[arg(long, value_enum)]
    camera: Option<Camera>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// CSV output path; the JSON summary goes next to it with a .json extension.
    #[arg(long)]
    out: PathBuf,
    /// Center every reference cloud on its centroid.
    #[arg(long)]
    precenter: bool,
    /// Half-width of the sampling cube.
    #[arg(long, default_value_t = 1.0)]
    spread: f64,
    /// Depth-undo refinement rounds for pose3d-persp.
    #[arg(long, default_value_t = 0)]
    refine: usize,
    /// Use this CSV cloud (header x,y[,z]) as the reference in every trial.
    #[arg(long)]
    reference: Option<PathBuf>,
}

fn build_config(a: &Args) -> Result<ExperimentConfig, BenchError> {
    let persp = a.task == Task::Pose3dPersp;
    if !persp && (a.focal.is_some() || a.fbar.is_some() || a.camera.is_some()) {
        return Err(BenchError::Config("--focal, --fbar and --camera only apply to pose3d-persp".into()));
    }
    let camera = match (a.camera, a.focal, a.fbar) {
        (Some(Camera::Origin), _, Some(_)) => return Err(BenchError::Config("--fbar needs --camera cloud".into())),
        (Some(Camera::Cloud), Some(_), _) => return Err(BenchError::Config("--focal needs --camera origin".into())),
        (Some(Camera::Cloud), _, fb) | (None, None, fb @ Some(_)) => {
            CameraConvention::CloudAtOrigin { fbar: fb.unwrap_or(DEFAULT_FBAR) }
        }
        (_, f, _) => CameraConvention::CameraAtOrigin { f: f.unwrap_or(DEFAULT_FOCAL) },
    };
    let reference = a.reference.as_deref().map(load_cloud_csv).transpose()?;
    let points = match &reference {
        Some(r) => r.len(),
        None => a.points.unwrap_or(50),
    };
    if a.out.extension().is_some_and(|e| e == "json") {
        return Err(BenchError::Config("--out must not end in .json; the summary is written there".into()));
    }
    let mut cfg = ExperimentConfig::new(a.task, points, a.trials, a.sigma, a.seed);
    cfg.camera = camera;
    cfg.spread = a.spread;
    cfg.precenter = a.precenter;
    cfg.refine = a.refine;
    cfg.reference = reference;
    cfg.validate()?;
    Ok(cfg)
}

fn thread_count() -> Result<Option<usize>, BenchError> {
    match std::env::var("BENCH_THREADS") {
        Err(_) => Ok(None),
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n >= 1 => Ok(Some(n)),
            _ => Err(BenchError::Config(format!("BENCH_THREADS must be a positive integer, got {s:?}"))),
        },
    }
}

fn run(a: &Args) -> Result<(), BenchError> {
    let cfg = build_config(a)?;
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count()? {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| BenchError::Config(format!("thread pool: {e}")))?;
    let report = pool.install(|| run_experiment(&cfg))?;
    let json = write_outputs(&report, &a.out)?;
    println!("{json}");
    Ok(())
}

fn main() -> ExitCode {
    let args = Args::parse();
    match run(&args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bench: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

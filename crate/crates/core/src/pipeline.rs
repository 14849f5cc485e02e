//! End-to-end runs: data, both training stages, the coarse-only ablation,
//! and evaluation of all four variants.

use std::path::Path;

use crate::dataset::{eval_windows, generate_synthetic, load_frame_directory, split_indices, windows_for, DataSource, EvalWindow, Video};
use crate::error::{DgganError, Result};
use crate::inference::{CoarseOnly, CopyLast, FullModel, GuideOnly, Predictor};
use crate::metrics::{evaluate_predictors, MetricsReport};
use crate::trainer::{train_cfgan, train_stage1, train_stage2, Checkpoint, RunConfig, TrainOptions};

/// Videos described by the config: generated, or read from `data_dir`.
pub fn load_videos(config: &RunConfig) -> Result<Vec<Video>> {
    let manifest = config.manifest();
    match config.source {
        DataSource::Synthetic => generate_synthetic(&manifest),
        DataSource::FrameDirectory => {
            let dir = config
                .data_dir
                .as_deref()
                .ok_or_else(|| DgganError::Config("source = \"frame_directory\" needs data_dir".into()))?;
            load_frame_directory(dir, &manifest)
        }
    }
}

/// Training windows and evaluation windows of the deterministic split.
pub struct Splits {
    pub train: Vec<crate::dataset::SampleWindow>,
    pub test: Vec<EvalWindow>,
}

pub fn splits(config: &RunConfig, videos: &[Video], horizon: usize) -> Splits {
    let split = split_indices(videos.len(), config.data_seed);
    Splits {
        train: windows_for(videos, &split.train, config.input_frames, config.window_stride),
        test: eval_windows(videos, &split.test, config.input_frames, horizon, config.window_stride),
    }
}

pub struct Experiment {
    pub stage1: Checkpoint,
    pub stage2: Checkpoint,
    pub cfgan: Checkpoint,
    pub report: MetricsReport,
}

/// Scores Copy, CFGAN, DGN and DGGAN on `windows` at horizons `1..=horizon`.
pub fn evaluate_all(stage2: &Checkpoint, cfgan: &Checkpoint, windows: &[EvalWindow], horizon: usize) -> Result<MetricsReport> {
    let copy = CopyLast { t: stage2.config.input_frames };
    let coarse = CoarseOnly { cfg: cfgan.require("cfg")? };
    let guide = GuideOnly { dgg: stage2.require("dgg")? };
    let full = FullModel { cfg: stage2.require("cfg")?, dgg: stage2.require("dgg")?, rn: stage2.require("rn")? };
    let predictors: [&dyn Predictor; 4] = [&copy, &coarse, &guide, &full];
    evaluate_predictors(&predictors, windows, horizon)
}

/// Runs everything for one config. With `run_root`, each stage logs and
/// checkpoints into its own subdirectory.
pub fn run_experiment(config: &RunConfig, run_root: Option<&Path>, horizon: usize) -> Result<Experiment> {
    let videos = load_videos(config)?;
    let data = splits(config, &videos, horizon);
    if data.test.is_empty() {
        return Err(DgganError::Config(format!(
            "no evaluation windows: sequences need at least {} frames",
            config.input_frames + horizon
        )));
    }
    let opts = |name: &str| TrainOptions { run_dir: run_root.map(|r| r.join(name)), ..Default::default() };
    log::info!("stage I on {} windows", data.train.len());
    let stage1 = train_stage1(config, &data.train, opts("stage1"))?.checkpoint;
    log::info!("stage II");
    let stage2 = train_stage2(config, &data.train, &stage1, opts("stage2"))?.checkpoint;
    log::info!("coarse-only ablation");
    let cfgan = train_cfgan(config, &data.train, &stage1, opts("cfgan"))?.checkpoint;
    let report = evaluate_all(&stage2, &cfgan, &data.test, horizon)?;
    Ok(Experiment { stage1, stage2, cfgan, report })
}

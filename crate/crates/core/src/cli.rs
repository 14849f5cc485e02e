//! The `dggan` command line: data generation, the three training commands,
//! evaluation, rollouts and qualitative grids.

use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use crate::dataset::{read_cache, write_cache, EvalWindow, Video};
use crate::error::{DgganError, Result};
use crate::inference::{rollout, CoarseOnly, CopyLast, FullModel, GuideOnly, Predictor, Variant};
use crate::metrics::{evaluate_predictors, mse, psnr, ssim};
use crate::pipeline::{load_videos, splits};
use crate::render::{grid_image, prediction_grid, save_png};
use crate::trainer::{train_cfgan, train_stage1, train_stage2, Checkpoint, RunConfig, Stage, Track, TrainOptions};

pub const RUNS_DIR_ENV: &str = "DGGAN_RUNS_DIR";

#[derive(Parser, Debug)]
#[command(name = "dggan", version, about = "Difference-guided GAN for next-frame video prediction")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate the synthetic dataset and write it with its manifest.
    GenData(Common),
    /// Train the coarse and difference generators jointly.
    TrainStage1(TrainArgs),
    /// Train the refine network and critic with stage-I networks frozen.
    TrainStage2(TrainArgs),
    /// Fine-tune the stage-I coarse generator against its own critic.
    TrainCfgan(TrainArgs),
    /// Score Copy, CFGAN, DGN and DGGAN on the test split.
    Evaluate(EvalArgs),
    /// Autoregressive multi-frame prediction for one test window.
    Rollout(SampleArgs),
    /// Qualitative grid for one test window.
    RenderGrid(SampleArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct Common {
    /// Flat TOML config; keys override the chosen preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Output directory; defaults to $DGGAN_RUNS_DIR/<run-id> (runs/ when unset).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Overrides `seed` (for gen-data: `data_seed`).
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub deterministic: bool,
}

#[derive(Args, Debug, Clone, Default)]
pub struct TrainArgs {
    #[command(flatten)]
    pub common: Common,
    /// Dataset written by gen-data; generated from the config when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Stage-I checkpoint (train-stage2 and train-cfgan).
    #[arg(long)]
    pub stage1_ckpt: Option<PathBuf>,
    /// Continue from a checkpoint of the same stage.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Default)]
pub struct EvalArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: Option<PathBuf>,
    /// Stage-II checkpoint for DGGAN, or stage-I for DGN only.
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    /// Stage-II checkpoint of the coarse-only ablation.
    #[arg(long)]
    pub cfgan_ckpt: Option<PathBuf>,
    /// Comma-separated horizons.
    #[arg(long, default_value = "1,2", value_delimiter = ',')]
    pub horizons: Vec<usize>,
    /// Restrict to these variants (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub variant: Vec<Variant>,
}

#[derive(Args, Debug, Clone)]
pub struct SampleArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub ckpt: Option<PathBuf>,
    #[arg(long)]
    pub cfgan_ckpt: Option<PathBuf>,
    #[arg(long, default_value = "dggan")]
    pub variant: Variant,
    /// Index into the test windows.
    #[arg(long, default_value_t = 0)]
    pub sample: usize,
    /// Frames to roll out.
    #[arg(long, default_value_t = 2)]
    pub frames: usize,
}

/// What every command records about itself in `run.json`.
#[derive(Serialize, Debug)]
pub struct RunDescriptor {
    pub run_id: String,
    pub command: String,
    pub config_path: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub inputs: Vec<(String, PathBuf)>,
    pub created: String,
}

fn runs_root() -> PathBuf {
    std::env::var_os(RUNS_DIR_ENV).map(PathBuf::from).unwrap_or_else(|| PathBuf::from("runs"))
}

/// `<utc timestamp>-s<seed>`, with a numeric suffix when that directory
/// already exists.
pub fn new_run_id(root: &Path, seed: u64) -> String {
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S");
    let base = format!("{stamp}-s{seed}");
    let mut id = base.clone();
    let mut n = 1;
    while root.join(&id).exists() {
        id = format!("{base}-{n}");
        n += 1;
    }
    id
}

struct Run {
    descriptor: RunDescriptor,
    config: RunConfig,
}

impl Run {
    fn start(command: &str, common: &Common, base: Option<RunConfig>, data_seed: bool) -> Result<Self> {
        let mut config = match (&common.config, base) {
            (Some(p), _) => RunConfig::load(p)?,
            (None, Some(c)) => c,
            (None, None) => RunConfig::default(),
        };
        if let Some(s) = common.seed {
            if data_seed {
                config.data_seed = s;
            } else {
                config.seed = s;
            }
        }
        config.deterministic |= common.deterministic;
        config.validate()?;
        let seed = if data_seed { config.data_seed } else { config.seed };
        let output_dir = match &common.out {
            Some(p) => p.clone(),
            None => {
                let root = runs_root();
                root.join(new_run_id(&root, seed))
            }
        };
        std::fs::create_dir_all(&output_dir).map_err(DgganError::io(&output_dir))?;
        let run_id = output_dir.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(Run {
            descriptor: RunDescriptor {
                run_id,
                command: command.into(),
                config_path: common.config.clone(),
                output_dir,
                inputs: Vec::new(),
                created: chrono::Utc::now().to_rfc3339(),
            },
            config,
        })
    }

    fn input(&mut self, name: &str, path: &Path) {
        self.descriptor.inputs.push((name.into(), path.to_path_buf()));
    }

    fn dir(&self) -> &Path {
        &self.descriptor.output_dir
    }

    /// Writes `run.json` and the resolved `config.toml`.
    fn write_manifest(&self) -> Result<()> {
        let p = self.dir().join("run.json");
        let text = serde_json::to_string_pretty(&self.descriptor).expect("descriptor serialises") + "\n";
        std::fs::write(&p, text).map_err(DgganError::io(p))?;
        let p = self.dir().join("config.toml");
        std::fs::write(&p, self.config.to_toml_string()).map_err(DgganError::io(p))
    }
}

fn videos(run: &mut Run, data: &Option<PathBuf>) -> Result<Vec<Video>> {
    match data {
        Some(dir) => {
            run.input("data", dir);
            let (manifest, videos) = read_cache(dir)?;
            if manifest != run.config.manifest() {
                log::warn!("dataset manifest in {} differs from the config; using the dataset as stored", dir.display());
            }
            Ok(videos)
        }
        None => load_videos(&run.config),
    }
}

fn checkpoint(run: &mut Run, flag: &str, path: &Option<PathBuf>) -> Result<Checkpoint> {
    let p = path.as_ref().ok_or_else(|| DgganError::Usage(format!("{flag} is required")))?;
    run.input(flag.trim_start_matches('-'), p);
    Checkpoint::load(p)
}

fn train(command: &str, a: &TrainArgs) -> Result<()> {
    let resume = a.resume.as_ref().map(|p| Checkpoint::load(p)).transpose()?;
    let base = resume.as_ref().map(|c| c.config.clone());
    let mut run = Run::start(command, &a.common, base, false)?;
    let stage1 = match command {
        "train-stage1" => None,
        _ => Some(checkpoint(&mut run, "--stage1-ckpt", &a.stage1_ckpt)?),
    };
    if let Some(p) = &a.resume {
        run.input("resume", p);
    }
    let videos = videos(&mut run, &a.data)?;
    let data = splits(&run.config, &videos, 1).train;
    run.write_manifest()?;
    let opts = TrainOptions { run_dir: Some(run.dir().to_path_buf()), resume, ..Default::default() };
    let out = match (command, &stage1) {
        ("train-stage1", _) => train_stage1(&run.config, &data, opts)?,
        ("train-stage2", Some(s1)) => train_stage2(&run.config, &data, s1, opts)?,
        (_, Some(s1)) => train_cfgan(&run.config, &data, s1, opts)?,
        _ => unreachable!("stage-I checkpoint loaded above"),
    };
    match out.checkpoint_dir {
        Some(p) => println!("{}", p.display()),
        None => println!("{}", run.dir().display()),
    }
    Ok(())
}

fn test_windows(run: &mut Run, data: &Option<PathBuf>, horizon: usize) -> Result<Vec<EvalWindow>> {
    let videos = videos(run, data)?;
    let test = splits(&run.config, &videos, horizon).test;
    if test.is_empty() {
        return Err(DgganError::Data(format!(
            "the test split has no window of {} frames",
            run.config.input_frames + horizon
        )));
    }
    Ok(test)
}

/// Predictors available from the given checkpoints.
struct Models {
    main: Option<Checkpoint>,
    cfgan: Option<Checkpoint>,
}

impl Models {
    fn load(run: &mut Run, ckpt: &Option<PathBuf>, cfgan: &Option<PathBuf>) -> Result<Self> {
        let main = ckpt.as_ref().map(|_| checkpoint(run, "--ckpt", ckpt)).transpose()?;
        let cfgan = cfgan.as_ref().map(|_| checkpoint(run, "--cfgan-ckpt", cfgan)).transpose()?;
        if let Some(c) = &cfgan {
            if (c.stage, c.track) != (Stage::II, Track::Cfgan) {
                return Err(DgganError::Usage("--cfgan-ckpt must be a stage-II checkpoint of train-cfgan".into()));
            }
        }
        if let Some(m) = &main {
            if m.track != Track::Dggan {
                return Err(DgganError::Usage("--ckpt must come from train-stage1 or train-stage2".into()));
            }
        }
        Ok(Models { main, cfgan })
    }

    fn predictor(&self, v: Variant, t: usize) -> Result<Box<dyn Predictor + '_>> {
        let need = |what: &str| DgganError::Usage(format!("variant {v} needs {what}"));
        Ok(match v {
            Variant::Copy => Box::new(CopyLast { t }),
            Variant::Cfgan => Box::new(CoarseOnly { cfg: self.cfgan.as_ref().ok_or_else(|| need("--cfgan-ckpt"))?.require("cfg")? }),
            Variant::Dgn => Box::new(GuideOnly { dgg: self.main.as_ref().ok_or_else(|| need("--ckpt"))?.require("dgg")? }),
            Variant::Dggan => {
                let m = self.main.as_ref().filter(|m| m.stage == Stage::II).ok_or_else(|| need("a stage-II --ckpt"))?;
                Box::new(FullModel { cfg: m.require("cfg")?, dgg: m.require("dgg")?, rn: m.require("rn")? })
            }
        })
    }

    /// Variants that can run, in table order.
    fn available(&self) -> Vec<Variant> {
        let mut v = vec![Variant::Copy];
        if self.cfgan.is_some() {
            v.push(Variant::Cfgan);
        }
        if self.main.is_some() {
            v.push(Variant::Dgn);
        }
        if self.main.as_ref().is_some_and(|m| m.stage == Stage::II) {
            v.push(Variant::Dggan);
        }
        v
    }

    fn config(&self) -> Option<RunConfig> {
        self.main.as_ref().or(self.cfgan.as_ref()).map(|c| c.config.clone())
    }
}

fn preload(ckpt: &Option<PathBuf>, cfgan: &Option<PathBuf>) -> Result<Option<RunConfig>> {
    match ckpt.as_ref().or(cfgan.as_ref()) {
        Some(p) => Ok(Some(RunConfig::load(&p.join("config.toml"))?)),
        None => Ok(None),
    }
}

fn evaluate(a: &EvalArgs) -> Result<()> {
    if a.horizons.is_empty() || a.horizons.contains(&0) {
        return Err(DgganError::Usage("--horizons must list integers >= 1".into()));
    }
    let base = preload(&a.ckpt, &a.cfgan_ckpt)?;
    let mut run = Run::start("evaluate", &a.common, base, false)?;
    let models = Models::load(&mut run, &a.ckpt, &a.cfgan_ckpt)?;
    if let Some(c) = models.config() {
        run.config = RunConfig { seed: run.config.seed, deterministic: run.config.deterministic, ..c };
    }
    let max_h = *a.horizons.iter().max().expect("non-empty");
    let windows = test_windows(&mut run, &a.data, max_h)?;
    let variants = if a.variant.is_empty() { models.available() } else { a.variant.clone() };
    let t = run.config.input_frames;
    let predictors = variants.iter().map(|&v| models.predictor(v, t)).collect::<Result<Vec<_>>>()?;
    let refs: Vec<&dyn Predictor> = predictors.iter().map(|p| p.as_ref()).collect();
    let mut report = evaluate_predictors(&refs, &windows, max_h)?;
    report.per_frame.retain(|r| a.horizons.contains(&r.horizon));
    report.aggregates.retain(|r| a.horizons.contains(&r.horizon));
    run.write_manifest()?;
    report.write(&run.dir().join("metrics.txt"))?;
    let table = report.table();
    std::fs::write(run.dir().join("table.txt"), &table).map_err(DgganError::io(run.dir().join("table.txt")))?;
    print!("{table}");
    Ok(())
}

fn sample_window(a: &SampleArgs, run: &mut Run, horizon: usize) -> Result<EvalWindow> {
    let windows = test_windows(run, &a.data, horizon)?;
    let n = windows.len();
    windows
        .into_iter()
        .nth(a.sample)
        .ok_or_else(|| DgganError::Usage(format!("--sample {} out of range; the test split has {n} windows", a.sample)))
}

fn rollout_cmd(a: &SampleArgs) -> Result<()> {
    if a.frames == 0 {
        return Err(DgganError::Usage("--frames must be at least 1".into()));
    }
    let base = preload(&a.ckpt, &a.cfgan_ckpt)?;
    let mut run = Run::start("rollout", &a.common, base, false)?;
    let models = Models::load(&mut run, &a.ckpt, &a.cfgan_ckpt)?;
    let p = models.predictor(a.variant, run.config.input_frames)?;
    // Truth is shown for as many steps as the sequence provides.
    let available = run.config.frames_per_sequence - run.config.input_frames;
    let w = sample_window(a, &mut run, a.frames.min(available).max(1))?;
    let r = rollout(p.as_ref(), &w.inputs, a.frames);
    for (k, f) in r.frames.iter().enumerate() {
        match w.future.get(k) {
            Some(t) => println!("step={} ssim={:.4} psnr={:.2} mse={:.4e}", k + 1, ssim(f, t)?, psnr(f, t)?, mse(f, t)?),
            None => println!("step={} (no ground truth)", k + 1),
        }
    }
    let rows = vec![
        w.inputs.iter().map(Some).collect(),
        r.frames.iter().map(Some).collect(),
        w.future.iter().map(Some).collect::<Vec<_>>(),
    ];
    run.write_manifest()?;
    let path = run.dir().join(format!("rollout_{}_sample{}.png", a.variant.name().to_lowercase(), a.sample));
    save_png(&grid_image(&rows), &path)?;
    println!("{}", path.display());
    Ok(())
}

fn render_grid(a: &SampleArgs) -> Result<()> {
    let base = preload(&a.ckpt, &a.cfgan_ckpt)?;
    let mut run = Run::start("render-grid", &a.common, base, false)?;
    let models = Models::load(&mut run, &a.ckpt, &a.cfgan_ckpt)?;
    let p = models.predictor(a.variant, run.config.input_frames)?;
    let w = sample_window(a, &mut run, 1)?;
    let pred = p.predict_one(&w.inputs);
    run.write_manifest()?;
    let path = run.dir().join(format!("grid_sample{}.png", a.sample));
    save_png(&prediction_grid(&w.inputs, w.future.first(), &pred), &path)?;
    println!("{}", path.display());
    Ok(())
}

fn gen_data(common: &Common) -> Result<()> {
    let mut run = Run::start("gen-data", common, None, true)?;
    let videos = videos(&mut run, &None)?;
    write_cache(run.dir(), &run.config.manifest(), &videos)?;
    run.write_manifest()?;
    println!("{} videos in {}", videos.len(), run.dir().display());
    Ok(())
}

pub fn run(cli: Cli) -> Result<()> {
    match &cli.command {
        Command::GenData(c) => gen_data(c),
        Command::TrainStage1(a) => train("train-stage1", a),
        Command::TrainStage2(a) => train("train-stage2", a),
        Command::TrainCfgan(a) => train("train-cfgan", a),
        Command::Evaluate(a) => evaluate(a),
        Command::Rollout(a) => rollout_cmd(a),
        Command::RenderGrid(a) => render_grid(a),
    }
}

/// Parses arguments, runs, and returns the process exit status.
pub fn main() -> i32 {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

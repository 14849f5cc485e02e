//! Two-stage optimisation: stage I fits the coarse and difference
//! generators jointly; stage II freezes them and trains the refine network
//! against a gradient-penalised critic. The coarse-only ablation reuses the
//! stage-II loop with the coarse generator in the generator slot.

mod adam;
mod checkpoint;
mod config;

use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use dggan_autograd::{no_grad, Tensor};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub use adam::Adam;
pub use checkpoint::{list_checkpoints, Checkpoint, RngState, Stage, Track};
pub use config::RunConfig;

use crate::dataset::{mix64, SampleWindow, CHANNELS};
use crate::error::{DgganError, Result};
use crate::inference::fuse_value;
use crate::losses::{disc_loss, l1_loss, rn_adv_loss, stage1_loss, Epsilon};
use crate::networks::Network;

/// `start + (end − start)·step/total`.
pub fn lr_schedule(step: usize, total: usize, start: f64, end: f64) -> f64 {
    assert!(total >= 1, "lr_schedule: total must be at least 1");
    assert!(step <= total, "lr_schedule: step {step} beyond total {total}");
    let f = step as f64 / total as f64;
    // Same line as start + (end − start)·f, but exact at both endpoints.
    start * (1.0 - f) + end * f
}

/// Learning rate for `epoch` of an `epochs`-long stage: the first epoch runs
/// at `start`, the last at `end`.
pub fn epoch_lr(epoch: usize, epochs: usize, [start, end]: [f64; 2]) -> f64 {
    lr_schedule(epoch.min(epochs.saturating_sub(1)), epochs.saturating_sub(1).max(1), start, end)
}

const SEED_CFG: u64 = 1;
const SEED_DGG: u64 = 2;
const SEED_RN: u64 = 3;
const SEED_DISC: u64 = 4;
const SEED_CFGAN_DISC: u64 = 5;
const STREAM_STAGE1: u64 = 0x5147_4531;
const STREAM_STAGE2: u64 = 0x5147_4532;
const STREAM_CFGAN: u64 = 0x5147_4533;

/// Step and epoch lines, kept in memory and mirrored to `train.log` and
/// `epochs.log` when a run directory is given.
#[derive(Default)]
pub struct RunLog {
    pub steps: Vec<String>,
    pub epochs: Vec<String>,
    files: Option<(BufWriter<File>, BufWriter<File>)>,
}

impl RunLog {
    pub fn open(run_dir: Option<&Path>) -> Result<Self> {
        let files = match run_dir {
            None => None,
            Some(dir) => {
                fs::create_dir_all(dir).map_err(DgganError::io(dir))?;
                let open = |name: &str| -> Result<BufWriter<File>> {
                    let p = dir.join(name);
                    let f = OpenOptions::new().create(true).append(true).open(&p).map_err(DgganError::io(p))?;
                    Ok(BufWriter::new(f))
                };
                Some((open("train.log")?, open("epochs.log")?))
            }
        };
        Ok(RunLog { steps: Vec::new(), epochs: Vec::new(), files })
    }

    fn step(&mut self, line: String) -> Result<()> {
        if let Some((f, _)) = &mut self.files {
            writeln!(f, "{line}").map_err(|e| DgganError::Io { path: "train.log".into(), source: e })?;
        }
        self.steps.push(line);
        Ok(())
    }

    fn epoch(&mut self, line: String) -> Result<()> {
        log::info!("{line}");
        if let Some((steps, f)) = &mut self.files {
            let io = |e| DgganError::Io { path: "epochs.log".into(), source: e };
            writeln!(f, "{line}").map_err(io)?;
            f.flush().map_err(io)?;
            steps.flush().map_err(io)?;
        }
        self.epochs.push(line);
        Ok(())
    }
}

fn num(v: Option<f64>) -> String {
    v.map_or_else(|| "-".to_string(), |v| format!("{v:.6e}"))
}

/// `step=<n> stage=<I|II> cf=<v> dg=<v> d_loss=<v> gp=<v> rn_adv=<v>`;
/// fields that do not apply to the stage are `-`.
pub fn step_line(step: u64, stage: Stage, cf: Option<f64>, dg: Option<f64>, d_loss: Option<f64>, gp: Option<f64>, rn_adv: Option<f64>) -> String {
    format!(
        "step={step} stage={} cf={} dg={} d_loss={} gp={} rn_adv={}",
        stage.name(),
        num(cf),
        num(dg),
        num(d_loss),
        num(gp),
        num(rn_adv)
    )
}

/// Moments at which [`TrainHooks`] are called.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TrainEvent {
    Start,
    Stage1Step,
    DiscStep,
    GenStep,
    EpochEnd(usize),
}

/// Read-only view of the networks of a running stage. In the coarse-only
/// ablation the trained coarse generator sits in `cfg`.
#[derive(Clone, Copy)]
pub struct NetsView<'a> {
    pub cfg: Option<&'a Network<f32>>,
    pub dgg: Option<&'a Network<f32>>,
    pub rn: Option<&'a Network<f32>>,
    pub disc: Option<&'a Network<f32>>,
}

pub trait TrainHooks {
    fn observe(&mut self, event: TrainEvent, step: u64, nets: NetsView<'_>);
}

/// Optional side channels of a training call.
#[derive(Default)]
pub struct TrainOptions<'h> {
    /// Where logs and checkpoints go; nothing is written when `None`.
    pub run_dir: Option<PathBuf>,
    pub hooks: Option<&'h mut dyn TrainHooks>,
    /// Continue from a checkpoint of the same stage and track.
    pub resume: Option<Checkpoint>,
    /// Stop after this many logged steps, still writing a final checkpoint.
    pub max_steps: Option<u64>,
}

pub struct TrainOutcome {
    pub checkpoint: Checkpoint,
    pub log: RunLog,
    pub checkpoint_dir: Option<PathBuf>,
}

fn shuffled(n: usize, seed: u64, stream: u64, epoch: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(mix64(seed ^ stream, epoch as u64)));
    order
}

fn batch_tensor(data: &[&[f32]], channels: usize, (h, w): (usize, usize)) -> Tensor<f32> {
    let mut flat = Vec::with_capacity(data.len() * channels * h * w);
    for d in data {
        flat.extend_from_slice(d);
    }
    Tensor::from_vec(flat, &[data.len(), channels, h, w])
}

fn check_finite(what: &str, v: f64, step: u64, last_good: &Option<PathBuf>) -> Result<()> {
    if v.is_finite() {
        return Ok(());
    }
    let ckpt = last_good.as_ref().map_or_else(|| "none written".to_string(), |p| p.display().to_string());
    Err(DgganError::Training(format!("{what} became non-finite at step {step}; last good checkpoint: {ckpt}")))
}

fn check_params(net: &Network<f32>, name: &str, step: u64, last_good: &Option<PathBuf>) -> Result<()> {
    if net.params().all_finite() {
        return Ok(());
    }
    check_finite(&format!("{name} parameters"), f64::NAN, step, last_good)
}

fn check_data(config: &RunConfig, data: &[SampleWindow]) -> Result<()> {
    if data.is_empty() {
        return Err(DgganError::Contract("training set is empty".into()));
    }
    let (h, w) = config.resolution();
    let t = config.input_frames;
    for s in data {
        if s.inputs.len() != t || s.target.height() != h || s.target.width() != w {
            return Err(DgganError::Contract(format!(
                "training windows must hold {t} frames of {h}×{w}, got {} of {}×{}",
                s.inputs.len(),
                s.target.height(),
                s.target.width()
            )));
        }
    }
    Ok(())
}

fn check_resume(ckpt: &Checkpoint, stage: Stage, track: Track) -> Result<()> {
    if ckpt.stage != stage || ckpt.track != track {
        return Err(DgganError::Contract(format!(
            "cannot resume a stage-{} {:?} run from a stage-{} {:?} checkpoint",
            stage.name(),
            track,
            ckpt.stage.name(),
            ckpt.track
        )));
    }
    Ok(())
}

fn should_save(epoch: usize, total: usize, every: usize) -> bool {
    epoch == total || epoch % every == 0
}

fn save_checkpoint(run_dir: &Option<PathBuf>, ckpt: &Checkpoint) -> Result<Option<PathBuf>> {
    match run_dir {
        None => Ok(None),
        Some(dir) => {
            let path = dir.join(ckpt.dir_name());
            ckpt.save(&path)?;
            log::info!("checkpoint {}", path.display());
            Ok(Some(path))
        }
    }
}

/// Stage I: CFG and DGG updated jointly by Adam on the sum of the coarse
/// and difference losses, one step per batch.
pub fn train_stage1(config: &RunConfig, data: &[SampleWindow], mut opts: TrainOptions<'_>) -> Result<TrainOutcome> {
    config.validate()?;
    check_data(config, data)?;
    let (mut cfg, mut dgg, mut opt_cfg, mut opt_dgg, rng, start_epoch, mut step) = match opts.resume.take() {
        Some(mut ck) => {
            check_resume(&ck, Stage::I, Track::Dggan)?;
            let cfg = ck.cfg.take().ok_or_else(|| DgganError::Data("stage-I checkpoint without cfg".into()))?;
            let dgg = ck.dgg.take().ok_or_else(|| DgganError::Data("stage-I checkpoint without dgg".into()))?;
            let oc = ck.optimizers.remove("cfg").unwrap_or_else(|| Adam::new(cfg.params(), config.adam_betas));
            let od = ck.optimizers.remove("dgg").unwrap_or_else(|| Adam::new(dgg.params(), config.adam_betas));
            (cfg, dgg, oc, od, ck.rng.restore()?, ck.epoch, ck.step)
        }
        None => {
            let cfg = Network::new(config.cfg_spec(), mix64(config.seed, SEED_CFG))?;
            let dgg = Network::new(config.dgg_spec(), mix64(config.seed, SEED_DGG))?;
            let oc = Adam::new(cfg.params(), config.adam_betas);
            let od = Adam::new(dgg.params(), config.adam_betas);
            let rng = ChaCha8Rng::seed_from_u64(mix64(config.seed, STREAM_STAGE1));
            (cfg, dgg, oc, od, rng, 0, 0)
        }
    };
    let mut log = RunLog::open(opts.run_dir.as_deref())?;
    let res = config.resolution();
    let t = config.input_frames;
    let total = config.stage1_epochs;
    let snapshot = |cfg: &Network<f32>, dgg: &Network<f32>, oc: &Adam, od: &Adam, rng: &ChaCha8Rng, epoch, step| Checkpoint {
        stage: Stage::I,
        track: Track::Dggan,
        epoch,
        step,
        config: config.clone(),
        cfg: Some(cfg.clone()),
        dgg: Some(dgg.clone()),
        rn: None,
        disc: None,
        optimizers: BTreeMap::from([("cfg".to_string(), oc.clone()), ("dgg".to_string(), od.clone())]),
        rng: RngState::capture(rng),
    };
    fn view<'a>(cfg: &'a Network<f32>, dgg: &'a Network<f32>) -> NetsView<'a> {
        NetsView { cfg: Some(cfg), dgg: Some(dgg), rn: None, disc: None }
    }
    if let Some(h) = opts.hooks.as_mut() {
        h.observe(TrainEvent::Start, step, view(&cfg, &dgg));
    }
    let mut last_good = None;
    if start_epoch == 0 && total == 0 {
        last_good = save_checkpoint(&opts.run_dir, &snapshot(&cfg, &dgg, &opt_cfg, &opt_dgg, &rng, 0, step))?;
    }
    let mut epoch = start_epoch;
    while epoch < total {
        if opts.max_steps.is_some_and(|m| step >= m) {
            break;
        }
        let lr = epoch_lr(epoch, total, config.stage1_lr);
        let order = shuffled(data.len(), config.seed, STREAM_STAGE1, epoch);
        let (mut cf_sum, mut dg_sum, mut batches) = (0.0, 0.0, 0usize);
        for idx in order.chunks(config.batch_size) {
            if opts.max_steps.is_some_and(|m| step >= m) {
                break;
            }
            let inputs: Vec<&[f32]> = idx.iter().flat_map(|&i| data[i].inputs.iter().map(|f| f.pixels())).collect();
            let x = batch_tensor(&inputs, CHANNELS, res).reshape(&[idx.len(), CHANNELS * t, res.0, res.1]);
            let targets: Vec<&[f32]> = idx.iter().map(|&i| data[i].target.pixels()).collect();
            let y = batch_tensor(&targets, CHANNELS, res);
            let diffs: Vec<f32> = idx.iter().flat_map(|&i| data[i].diff_target.values().iter().map(|&v| v as f32)).collect();
            let d = Tensor::from_vec(diffs, &[idx.len(), CHANNELS, res.0, res.1]);
            let coarse = cfg.forward_train(&x);
            let guide = dgg.forward_train(&x);
            let loss = stage1_loss(&coarse, &y, &guide, &d);
            let (cf, dg) = (loss.component("cf").unwrap_or(f64::NAN), loss.component("dg").unwrap_or(f64::NAN));
            check_finite("stage-I loss", loss.item(), step, &last_good)?;
            let grads = loss.value.backward();
            opt_cfg.step(cfg.params_mut(), &grads, lr);
            opt_dgg.step(dgg.params_mut(), &grads, lr);
            check_params(&cfg, "cfg", step, &last_good)?;
            check_params(&dgg, "dgg", step, &last_good)?;
            step += 1;
            log.step(step_line(step, Stage::I, Some(cf), Some(dg), None, None, None))?;
            cf_sum += cf;
            dg_sum += dg;
            batches += 1;
            if let Some(h) = opts.hooks.as_mut() {
                h.observe(TrainEvent::Stage1Step, step, view(&cfg, &dgg));
            }
        }
        let n = batches.max(1) as f64;
        log.epoch(format!(
            "epoch={} stage=I lr={lr:.6e} steps={batches} cf_mean={:.6e} dg_mean={:.6e}",
            epoch + 1,
            cf_sum / n,
            dg_sum / n
        ))?;
        epoch += 1;
        if let Some(h) = opts.hooks.as_mut() {
            h.observe(TrainEvent::EpochEnd(epoch), step, view(&cfg, &dgg));
        }
        if should_save(epoch, total, config.checkpoint_every) {
            last_good = save_checkpoint(&opts.run_dir, &snapshot(&cfg, &dgg, &opt_cfg, &opt_dgg, &rng, epoch, step))?;
        }
    }
    let checkpoint = snapshot(&cfg, &dgg, &opt_cfg, &opt_dgg, &rng, epoch, step);
    if epoch < total || (start_epoch == total && total > 0) {
        last_good = save_checkpoint(&opts.run_dir, &checkpoint)?.or(last_good);
    }
    Ok(TrainOutcome { checkpoint, log, checkpoint_dir: last_good })
}

/// One adversarial training example, flattened: generator input, the
/// condition frame `I_T`, and the real next frame.
struct AdvSample {
    gen_in: Vec<f32>,
    cond: Vec<f32>,
    target: Vec<f32>,
}

/// Generator inputs for the refine network: the coarse prediction and the
/// guide-shifted last frame, computed once since stage-I networks are frozen.
fn refine_inputs(cfg: &Network<f32>, dgg: &Network<f32>, data: &[SampleWindow], t: usize) -> Vec<AdvSample> {
    let _g = no_grad();
    let mut out = Vec::with_capacity(data.len());
    for chunk in data.chunks(64) {
        let (h, w) = (chunk[0].target.height(), chunk[0].target.width());
        let x: Vec<&[f32]> = chunk.iter().flat_map(|s| s.inputs.iter().map(|f| f.pixels())).collect();
        let x = batch_tensor(&x, CHANNELS, (h, w)).reshape(&[chunk.len(), CHANNELS * t, h, w]);
        let coarse = cfg.forward(&x);
        let guide = dgg.forward(&x);
        let per = CHANNELS * h * w;
        for (i, s) in chunk.iter().enumerate() {
            let c = &coarse.data()[i * per..(i + 1) * per];
            let g = &guide.data()[i * per..(i + 1) * per];
            let last = s.last_input().pixels();
            let mut gen_in = Vec::with_capacity(2 * per);
            gen_in.extend_from_slice(c);
            gen_in.extend(g.iter().zip(last).map(|(&g, &l)| fuse_value(g as f64, l)));
            out.push(AdvSample { gen_in, cond: last.to_vec(), target: s.target.pixels().to_vec() });
        }
    }
    out
}

fn stacked_inputs(data: &[SampleWindow]) -> Vec<AdvSample> {
    data.iter()
        .map(|s| AdvSample {
            gen_in: s.inputs.iter().flat_map(|f| f.pixels().iter().copied()).collect(),
            cond: s.last_input().pixels().to_vec(),
            target: s.target.pixels().to_vec(),
        })
        .collect()
}

/// Shared state of an adversarial stage.
struct Adversarial<'c> {
    config: &'c RunConfig,
    track: Track,
    frozen: Option<(Network<f32>, Network<f32>)>,
    gen: Network<f32>,
    disc: Network<f32>,
    opt_gen: Adam,
    opt_disc: Adam,
    rng: ChaCha8Rng,
    epoch: usize,
    step: u64,
    disc_updates: u64,
}

impl Adversarial<'_> {
    fn gen_name(&self) -> &'static str {
        match self.track {
            Track::Dggan => "rn",
            Track::Cfgan => "cfg",
        }
    }

    fn view(&self) -> NetsView<'_> {
        match (&self.track, &self.frozen) {
            (Track::Dggan, Some((cfg, dgg))) => {
                NetsView { cfg: Some(cfg), dgg: Some(dgg), rn: Some(&self.gen), disc: Some(&self.disc) }
            }
            _ => NetsView { cfg: Some(&self.gen), dgg: None, rn: None, disc: Some(&self.disc) },
        }
    }

    fn checkpoint(&self) -> Checkpoint {
        let v = self.view();
        Checkpoint {
            stage: Stage::II,
            track: self.track,
            epoch: self.epoch,
            step: self.step,
            config: self.config.clone(),
            cfg: v.cfg.cloned(),
            dgg: v.dgg.cloned(),
            rn: v.rn.cloned(),
            disc: Some(self.disc.clone()),
            optimizers: BTreeMap::from([
                (self.gen_name().to_string(), self.opt_gen.clone()),
                ("disc".to_string(), self.opt_disc.clone()),
            ]),
            rng: RngState::capture(&self.rng),
        }
    }

    fn run(mut self, samples: &[AdvSample], stream: u64, mut opts: TrainOptions<'_>) -> Result<TrainOutcome> {
        let config = self.config;
        let res = config.resolution();
        let gen_channels = self.gen.spec().in_channels;
        let total = config.stage2_epochs;
        let k = config.disc_steps_per_gen_step;
        let b = config.batch_size;
        let mut log = RunLog::open(opts.run_dir.as_deref())?;
        if let Some(h) = opts.hooks.as_mut() {
            h.observe(TrainEvent::Start, self.step, self.view());
        }
        let start_epoch = self.epoch;
        let mut last_good = None;
        if start_epoch == 0 && total == 0 {
            last_good = save_checkpoint(&opts.run_dir, &self.checkpoint())?;
        }
        let batch = |idx: &[usize]| {
            let pick = |f: fn(&AdvSample) -> &[f32], c| batch_tensor(&idx.iter().map(|&i| f(&samples[i])).collect::<Vec<_>>(), c, res);
            (pick(|s| &s.gen_in, gen_channels), pick(|s| &s.cond, CHANNELS), pick(|s| &s.target, CHANNELS))
        };
        while self.epoch < total {
            if opts.max_steps.is_some_and(|m| self.step >= m) {
                break;
            }
            let lr = epoch_lr(self.epoch, total, config.stage2_lr);
            let order = shuffled(samples.len(), config.seed, stream, self.epoch);
            let full: Vec<&[usize]> = order.chunks_exact(b).collect();
            let iterations = full.len() / k;
            let (mut d_sum, mut adv_sum) = (0.0, 0.0);
            let mut done = 0usize;
            for it in 0..iterations {
                if opts.max_steps.is_some_and(|m| self.step >= m) {
                    break;
                }
                let (mut d_last, mut gp_last) = (0.0, 0.0);
                for j in 0..k {
                    let (z, cond, real) = batch(full[it * k + j]);
                    let fake = {
                        let _g = no_grad();
                        self.gen.forward_batch_stats(&z)
                    };
                    let mut eps = Epsilon::Sample(&mut self.rng);
                    let loss = disc_loss(&self.disc, &real, &fake, &cond, config.lambda, &mut eps)
                        .map_err(|e| DgganError::Training(format!("{e} at step {}", self.step)))?;
                    check_finite("critic loss", loss.item(), self.step, &last_good)?;
                    let grads = loss.value.backward();
                    self.opt_disc.step(self.disc.params_mut(), &grads, lr);
                    check_params(&self.disc, "disc", self.step, &last_good)?;
                    self.disc_updates += 1;
                    d_last = loss.item();
                    gp_last = loss.component("gp").unwrap_or(0.0);
                    if let Some(h) = opts.hooks.as_mut() {
                        h.observe(TrainEvent::DiscStep, self.step, self.view());
                    }
                }
                let (z, cond, real) = batch(full[it * k + k - 1]);
                let refined = self.gen.forward_train(&z);
                let adv = rn_adv_loss(&self.disc, &refined, &cond);
                let adv_value = adv.item();
                let mut objective = adv.value;
                if config.aux_pixel_weight > 0.0 {
                    objective = objective.add(&l1_loss(&refined, &real).value.scale(config.aux_pixel_weight as f32));
                }
                check_finite("generator loss", objective.item() as f64, self.step, &last_good)?;
                let grads = objective.backward();
                self.opt_gen.step(self.gen.params_mut(), &grads, lr);
                check_params(&self.gen, self.gen_name(), self.step, &last_good)?;
                self.step += 1;
                log.step(step_line(self.step, Stage::II, None, None, Some(d_last), Some(gp_last), Some(adv_value)))?;
                d_sum += d_last;
                adv_sum += adv_value;
                done += 1;
                if let Some(h) = opts.hooks.as_mut() {
                    h.observe(TrainEvent::GenStep, self.step, self.view());
                }
            }
            let n = done.max(1) as f64;
            log.epoch(format!(
                "epoch={} stage=II lr={lr:.6e} steps={done} d_loss_mean={:.6e} rn_adv_mean={:.6e}",
                self.epoch + 1,
                d_sum / n,
                adv_sum / n
            ))?;
            self.epoch += 1;
            if let Some(h) = opts.hooks.as_mut() {
                h.observe(TrainEvent::EpochEnd(self.epoch), self.step, self.view());
            }
            if should_save(self.epoch, total, config.checkpoint_every) {
                last_good = save_checkpoint(&opts.run_dir, &self.checkpoint())?;
            }
        }
        let checkpoint = self.checkpoint();
        if self.epoch < total || (start_epoch == total && total > 0) {
            last_good = save_checkpoint(&opts.run_dir, &checkpoint)?.or(last_good);
        }
        log::debug!("{} critic updates over {} generator steps", self.disc_updates, self.step);
        Ok(TrainOutcome { checkpoint, log, checkpoint_dir: last_good })
    }
}

fn adversarial_state<'c>(
    config: &'c RunConfig,
    track: Track,
    frozen: Option<(Network<f32>, Network<f32>)>,
    fresh_gen: impl FnOnce() -> Result<Network<f32>>,
    disc_seed: u64,
    stream: u64,
    resume: Option<Checkpoint>,
) -> Result<Adversarial<'c>> {
    let gen_name = match track {
        Track::Dggan => "rn",
        Track::Cfgan => "cfg",
    };
    match resume {
        Some(mut ck) => {
            check_resume(&ck, Stage::II, track)?;
            let gen = match track {
                Track::Dggan => ck.rn.take(),
                Track::Cfgan => ck.cfg.take(),
            }
            .ok_or_else(|| DgganError::Data(format!("stage-II checkpoint without {gen_name}")))?;
            let disc = ck.disc.take().ok_or_else(|| DgganError::Data("stage-II checkpoint without disc".into()))?;
            let opt_gen = ck.optimizers.remove(gen_name).unwrap_or_else(|| Adam::new(gen.params(), config.adam_betas));
            let opt_disc = ck.optimizers.remove("disc").unwrap_or_else(|| Adam::new(disc.params(), config.adam_betas));
            let frozen = match track {
                Track::Dggan => Some((
                    ck.cfg.take().ok_or_else(|| DgganError::Data("stage-II checkpoint without cfg".into()))?,
                    ck.dgg.take().ok_or_else(|| DgganError::Data("stage-II checkpoint without dgg".into()))?,
                )),
                Track::Cfgan => None,
            };
            Ok(Adversarial {
                config,
                track,
                frozen,
                gen,
                disc,
                opt_gen,
                opt_disc,
                rng: ck.rng.restore()?,
                epoch: ck.epoch,
                step: ck.step,
                disc_updates: 0,
            })
        }
        None => {
            let gen = fresh_gen()?;
            let disc = Network::new(config.disc_spec(), mix64(config.seed, disc_seed))?;
            Ok(Adversarial {
                config,
                track,
                frozen,
                opt_gen: Adam::new(gen.params(), config.adam_betas),
                opt_disc: Adam::new(disc.params(), config.adam_betas),
                gen,
                disc,
                rng: ChaCha8Rng::seed_from_u64(mix64(config.seed, stream)),
                epoch: 0,
                step: 0,
                disc_updates: 0,
            })
        }
    }
}

fn stage1_nets(stage1: &Checkpoint) -> Result<(Network<f32>, Network<f32>)> {
    if stage1.stage != Stage::I || stage1.track != Track::Dggan {
        return Err(DgganError::Contract(format!(
            "stage II needs a stage-I checkpoint, got stage {} ({:?})",
            stage1.stage.name(),
            stage1.track
        )));
    }
    Ok((stage1.require("cfg")?.clone(), stage1.require("dgg")?.clone()))
}

/// Stage II: CFG and DGG frozen from `stage1`; per iteration,
/// `disc_steps_per_gen_step` critic updates on distinct full batches, then
/// one refine-network update on the last of those batches.
pub fn train_stage2(config: &RunConfig, data: &[SampleWindow], stage1: &Checkpoint, opts: TrainOptions<'_>) -> Result<TrainOutcome> {
    config.validate()?;
    check_data(config, data)?;
    let (cfg, dgg) = stage1_nets(stage1)?;
    let samples = refine_inputs(&cfg, &dgg, data, config.input_frames);
    let mut opts = opts;
    let resume = opts.resume.take();
    let state = adversarial_state(
        config,
        Track::Dggan,
        Some((cfg, dgg)),
        || Network::new(config.rn_spec(), mix64(config.seed, SEED_RN)),
        SEED_DISC,
        STREAM_STAGE2,
        resume,
    )?;
    if let Some((c, d)) = &state.frozen {
        if c.params().digest() != stage1.require("cfg")?.params().digest()
            || d.params().digest() != stage1.require("dgg")?.params().digest()
        {
            return Err(DgganError::Contract("resumed stage-II checkpoint was trained from a different stage-I checkpoint".into()));
        }
    }
    state.run(&samples, STREAM_STAGE2, opts)
}

/// The coarse-only ablation: the stage-I coarse generator, fine-tuned
/// against its own critic on `(CFG(inputs), I_T)` pairs. No guide, no refine
/// network.
pub fn train_cfgan(config: &RunConfig, data: &[SampleWindow], stage1: &Checkpoint, opts: TrainOptions<'_>) -> Result<TrainOutcome> {
    config.validate()?;
    check_data(config, data)?;
    let (cfg, _) = stage1_nets(stage1)?;
    let samples = stacked_inputs(data);
    let mut opts = opts;
    let resume = opts.resume.take();
    let state = adversarial_state(config, Track::Cfgan, None, || Ok(cfg), SEED_CFGAN_DISC, STREAM_CFGAN, resume)?;
    state.run(&samples, STREAM_CFGAN, opts)
}

#[cfg(test)]
mod tests;

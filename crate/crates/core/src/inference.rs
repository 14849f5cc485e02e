//! Guided fusion, one-step prediction, rollout, and the ablation baselines.

use std::fmt;
use std::str::FromStr;

use dggan_autograd::{no_grad, Tensor};
use serde::{Deserialize, Serialize};

use crate::dataset::{Frame, Grid, CHANNELS};
use crate::error::DgganError;
use crate::networks::Network;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Variant {
    Copy,
    Cfgan,
    Dgn,
    Dggan,
}

impl Variant {
    pub const ALL: [Variant; 4] = [Variant::Copy, Variant::Cfgan, Variant::Dgn, Variant::Dggan];

    pub fn name(self) -> &'static str {
        match self {
            Variant::Copy => "Copy",
            Variant::Cfgan => "CFGAN",
            Variant::Dgn => "DGN",
            Variant::Dggan => "DGGAN",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Variant {
    type Err = DgganError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Variant::ALL
            .into_iter()
            .find(|v| v.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| DgganError::Usage(format!("unknown variant {s:?}; expected one of Copy, CFGAN, DGN, DGGAN")))
    }
}

/// Everything one prediction step produced. Baselines leave the
/// intermediate fields they do not compute empty.
#[derive(Clone, Debug, PartialEq)]
pub struct Prediction {
    pub coarse: Option<Frame>,
    pub guide: Option<Grid>,
    pub guided_frame: Option<Frame>,
    pub refined: Frame,
    pub variant: Variant,
}

/// `clamp(2·g + last, −1, 1)` for one value.
pub fn fuse_value(g: f64, last: f32) -> f32 {
    (2.0 * g + last as f64).clamp(-1.0, 1.0) as f32
}

/// Shifts `last_frame` by twice the guide and clamps to the frame range.
pub fn fuse_guide(guide: &Grid, last_frame: &Frame) -> Frame {
    assert!(
        guide.height() == last_frame.height() && guide.width() == last_frame.width(),
        "fuse_guide: guide and frame shapes differ"
    );
    let pixels = guide.values().iter().zip(last_frame.pixels()).map(|(&g, &l)| fuse_value(g, l)).collect();
    Frame::new(last_frame.height(), last_frame.width(), pixels)
}

/// `B` groups of frames, each group stacked along channels: `B×(3k)×H×W`.
pub fn stack_batch(groups: &[Vec<&Frame>]) -> Tensor<f32> {
    let first = groups.first().and_then(|g| g.first()).expect("non-empty batch");
    let (h, w, k) = (first.height(), first.width(), groups[0].len());
    let mut data = Vec::with_capacity(groups.len() * k * first.len());
    for g in groups {
        assert_eq!(g.len(), k, "every group needs the same number of frames");
        for f in g {
            assert!(f.height() == h && f.width() == w, "frames of different sizes in one batch");
            data.extend_from_slice(f.pixels());
        }
    }
    Tensor::from_vec(data, &[groups.len(), CHANNELS * k, h, w])
}

/// Splits an `N×3×H×W` tensor into frames.
pub fn unstack_frames(t: &Tensor<f32>) -> Vec<Frame> {
    let (h, w) = (t.dim(2), t.dim(3));
    t.data().chunks(CHANNELS * h * w).map(|c| Frame::new(h, w, c.to_vec())).collect()
}

fn unstack_grids(t: &Tensor<f32>) -> Vec<Grid> {
    let (h, w) = (t.dim(2), t.dim(3));
    t.data().chunks(CHANNELS * h * w).map(|c| Grid::new(h, w, c.iter().map(|&v| v as f64).collect())).collect()
}

/// A next-frame predictor over windows of `window_len()` frames.
pub trait Predictor {
    fn variant(&self) -> Variant;

    fn window_len(&self) -> usize;

    fn predict_batch(&self, windows: &[&[Frame]]) -> Vec<Prediction>;

    fn predict_one(&self, inputs: &[Frame]) -> Prediction {
        self.predict_batch(&[inputs]).pop().expect("one prediction per window")
    }
}

fn check_windows(windows: &[&[Frame]], t: usize) {
    for w in windows {
        assert_eq!(w.len(), t, "predictor expects {t} input frames, got {}", w.len());
    }
}

fn run_generator(net: &Network<f32>, windows: &[&[Frame]]) -> Tensor<f32> {
    let groups: Vec<Vec<&Frame>> = windows.iter().map(|w| w.iter().collect()).collect();
    let _g = no_grad();
    net.forward(&stack_batch(&groups))
}

/// Last-frame repetition.
pub struct CopyLast {
    pub t: usize,
}

impl Predictor for CopyLast {
    fn variant(&self) -> Variant {
        Variant::Copy
    }

    fn window_len(&self) -> usize {
        self.t
    }

    fn predict_batch(&self, windows: &[&[Frame]]) -> Vec<Prediction> {
        check_windows(windows, self.t);
        windows.iter().map(|w| baseline_copy(w)).collect()
    }
}

/// The coarse generator alone, adversarially fine-tuned.
pub struct CoarseOnly<'a> {
    pub cfg: &'a Network<f32>,
}

impl Predictor for CoarseOnly<'_> {
    fn variant(&self) -> Variant {
        Variant::Cfgan
    }

    fn window_len(&self) -> usize {
        self.cfg.spec().in_channels / CHANNELS
    }

    fn predict_batch(&self, windows: &[&[Frame]]) -> Vec<Prediction> {
        check_windows(windows, self.window_len());
        let out = unstack_frames(&run_generator(self.cfg, windows));
        out.into_iter()
            .map(|refined| Prediction { coarse: Some(refined.clone()), guide: None, guided_frame: None, refined, variant: Variant::Cfgan })
            .collect()
    }
}

/// The guide applied straight to the last frame.
pub struct GuideOnly<'a> {
    pub dgg: &'a Network<f32>,
}

impl Predictor for GuideOnly<'_> {
    fn variant(&self) -> Variant {
        Variant::Dgn
    }

    fn window_len(&self) -> usize {
        self.dgg.spec().in_channels / CHANNELS
    }

    fn predict_batch(&self, windows: &[&[Frame]]) -> Vec<Prediction> {
        check_windows(windows, self.window_len());
        let guides = unstack_grids(&run_generator(self.dgg, windows));
        guides
            .into_iter()
            .zip(windows)
            .map(|(g, w)| {
                let fused = fuse_guide(&g, w.last().expect("non-empty window"));
                Prediction { coarse: None, guide: Some(g), guided_frame: Some(fused.clone()), refined: fused, variant: Variant::Dgn }
            })
            .collect()
    }
}

/// The full model: coarse and guide paths fused by the refine network.
pub struct FullModel<'a> {
    pub cfg: &'a Network<f32>,
    pub dgg: &'a Network<f32>,
    pub rn: &'a Network<f32>,
}

impl Predictor for FullModel<'_> {
    fn variant(&self) -> Variant {
        Variant::Dggan
    }

    fn window_len(&self) -> usize {
        self.cfg.spec().in_channels / CHANNELS
    }

    fn predict_batch(&self, windows: &[&[Frame]]) -> Vec<Prediction> {
        check_windows(windows, self.window_len());
        let coarse = unstack_frames(&run_generator(self.cfg, windows));
        let guides = unstack_grids(&run_generator(self.dgg, windows));
        let fused: Vec<Frame> =
            guides.iter().zip(windows).map(|(g, w)| fuse_guide(g, w.last().expect("non-empty window"))).collect();
        let groups: Vec<Vec<&Frame>> = coarse.iter().zip(&fused).map(|(c, f)| vec![c, f]).collect();
        let refined = {
            let _g = no_grad();
            unstack_frames(&self.rn.forward(&stack_batch(&groups)))
        };
        coarse
            .into_iter()
            .zip(guides)
            .zip(fused)
            .zip(refined)
            .map(|(((c, g), f), r)| Prediction {
                coarse: Some(c),
                guide: Some(g),
                guided_frame: Some(f),
                refined: r,
                variant: Variant::Dggan,
            })
            .collect()
    }
}

pub fn predict_one(cfg: &Network<f32>, dgg: &Network<f32>, rn: &Network<f32>, inputs: &[Frame]) -> Prediction {
    FullModel { cfg, dgg, rn }.predict_one(inputs)
}

pub fn baseline_copy(inputs: &[Frame]) -> Prediction {
    let last = inputs.last().expect("at least one input frame").clone();
    Prediction { coarse: None, guide: None, guided_frame: None, refined: last, variant: Variant::Copy }
}

pub fn baseline_cfgan(cfg: &Network<f32>, inputs: &[Frame]) -> Prediction {
    CoarseOnly { cfg }.predict_one(inputs)
}

pub fn baseline_dgn(dgg: &Network<f32>, inputs: &[Frame]) -> Prediction {
    GuideOnly { dgg }.predict_one(inputs)
}

/// `n` frames generated autoregressively.
#[derive(Clone, Debug, PartialEq)]
pub struct Rollout {
    pub frames: Vec<Frame>,
    pub horizon: usize,
}

/// Predicts, appends the prediction to the window, drops the oldest frame,
/// and repeats `n` times.
pub fn rollout<P: Predictor + ?Sized>(predictor: &P, inputs: &[Frame], n: usize) -> Rollout {
    rollout_batch(predictor, &[inputs], n).pop().expect("one rollout per window")
}

/// [`rollout`] over many starting windows at once.
pub fn rollout_batch<P: Predictor + ?Sized>(predictor: &P, windows: &[&[Frame]], n: usize) -> Vec<Rollout> {
    assert!(n >= 1, "rollout needs at least one step");
    let mut current: Vec<Vec<Frame>> = windows.iter().map(|w| w.to_vec()).collect();
    let mut produced: Vec<Vec<Frame>> = vec![Vec::with_capacity(n); windows.len()];
    for _ in 0..n {
        let views: Vec<&[Frame]> = current.iter().map(|w| w.as_slice()).collect();
        let preds = predictor.predict_batch(&views);
        for ((window, out), p) in current.iter_mut().zip(&mut produced).zip(preds) {
            window.remove(0);
            window.push(p.refined.clone());
            out.push(p.refined);
        }
    }
    produced.into_iter().map(|frames| Rollout { frames, horizon: n }).collect()
}

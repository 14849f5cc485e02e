//! The four networks: coarse frame generator (CFG), difference guide
//! generator (DGG), refine network (RN) and the conditional critic (DISC).

mod params;

use std::fs;
use std::path::Path;

use dggan_autograd::{Element, Tensor};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::dataset::CHANNELS;
use crate::error::{DgganError, Result};

pub use params::{Param, ParameterSet};

pub const INIT_STD: f64 = 0.02;
pub const BN_MOMENTUM: f64 = 0.1;
pub const NORM_EPS: f64 = 1e-5;
pub const DEFAULT_LEAKY_SLOPE: f64 = 0.2;
const RES_BLOCKS: usize = 3;
const RES_DEPTH: usize = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum NetKind {
    Cfg,
    Dgg,
    Rn,
    Disc,
}

impl NetKind {
    pub fn name(self) -> &'static str {
        match self {
            NetKind::Cfg => "CFG",
            NetKind::Dgg => "DGG",
            NetKind::Rn => "RN",
            NetKind::Disc => "DISC",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkSpec {
    pub kind: NetKind,
    pub in_channels: usize,
    pub base_width: usize,
    pub input_resolution: (usize, usize),
    pub leaky_slope: f64,
}

impl NetworkSpec {
    fn new(kind: NetKind, in_channels: usize, base_width: usize, input_resolution: (usize, usize)) -> Self {
        NetworkSpec { kind, in_channels, base_width, input_resolution, leaky_slope: DEFAULT_LEAKY_SLOPE }
    }

    /// Coarse generator over `t` stacked RGB frames.
    pub fn cfg(t: usize, base_width: usize, resolution: (usize, usize)) -> Self {
        Self::new(NetKind::Cfg, CHANNELS * t, base_width, resolution)
    }

    pub fn dgg(t: usize, base_width: usize, resolution: (usize, usize)) -> Self {
        Self::new(NetKind::Dgg, CHANNELS * t, base_width, resolution)
    }

    /// Refine network over the coarse prediction stacked with the guided frame.
    pub fn rn(base_width: usize, resolution: (usize, usize)) -> Self {
        Self::new(NetKind::Rn, 2 * CHANNELS, base_width, resolution)
    }

    /// Critic over a candidate frame stacked with the last input frame.
    pub fn disc(base_width: usize, resolution: (usize, usize)) -> Self {
        Self::new(NetKind::Disc, 2 * CHANNELS, base_width, resolution)
    }

    pub fn with_leaky_slope(mut self, slope: f64) -> Self {
        self.leaky_slope = slope;
        self
    }

    /// Number of stride-2 halvings the input goes through.
    pub fn downsamplings(&self) -> usize {
        match self.kind {
            NetKind::Disc => 5,
            _ => 3,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let (h, w) = self.input_resolution;
        let factor = 1 << self.downsamplings();
        if h == 0 || w == 0 || h % factor != 0 || w % factor != 0 {
            return Err(DgganError::Config(format!(
                "{} needs a resolution divisible by {factor}, got {h}x{w}",
                self.kind.name()
            )));
        }
        if self.base_width == 0 {
            return Err(DgganError::Config("base_width must be positive".into()));
        }
        let expected = match self.kind {
            NetKind::Cfg | NetKind::Dgg => None,
            NetKind::Rn | NetKind::Disc => Some(2 * CHANNELS),
        };
        if self.in_channels == 0 || self.in_channels % CHANNELS != 0 || expected.is_some_and(|c| c != self.in_channels) {
            return Err(DgganError::Config(format!(
                "{} cannot take {} input channels",
                self.kind.name(),
                self.in_channels
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
enum Layer {
    Conv { w: usize, b: Option<usize>, stride: usize, pad: usize },
    /// 4×4, stride 2, padding 1: doubles the spatial size.
    Deconv { w: usize, b: Option<usize> },
    BatchNorm { gamma: usize, beta: usize, mean: usize, var: usize },
    LayerNorm { gamma: usize, beta: usize },
    Leaky,
    Relu,
    Tanh,
    Residual(Vec<Layer>),
    Linear { w: usize, b: usize },
}

struct Builder<E: Element> {
    params: ParameterSet<E>,
    rng: ChaCha8Rng,
    normal: Normal<f64>,
}

impl<E: Element> Builder<E> {
    fn gaussian(&mut self, n: usize) -> Vec<E> {
        (0..n).map(|_| E::from_f64_lossy(self.normal.sample(&mut self.rng))).collect()
    }

    fn conv(&mut self, name: &str, cin: usize, cout: usize, k: usize, stride: usize, pad: usize, bias: bool) -> Layer {
        let data = self.gaussian(cout * cin * k * k);
        let w = self.params.push(format!("{name}.weight"), data, &[cout, cin, k, k], true);
        let b = bias.then(|| self.params.push(format!("{name}.bias"), vec![E::zero(); cout], &[cout], true));
        Layer::Conv { w, b, stride, pad }
    }

    fn deconv(&mut self, name: &str, cin: usize, cout: usize, bias: bool) -> Layer {
        let data = self.gaussian(cin * cout * 16);
        let w = self.params.push(format!("{name}.weight"), data, &[cin, cout, 4, 4], true);
        let b = bias.then(|| self.params.push(format!("{name}.bias"), vec![E::zero(); cout], &[cout], true));
        Layer::Deconv { w, b }
    }

    fn batch_norm(&mut self, name: &str, c: usize) -> Layer {
        Layer::BatchNorm {
            gamma: self.params.push(format!("{name}.gamma"), vec![E::one(); c], &[c], true),
            beta: self.params.push(format!("{name}.beta"), vec![E::zero(); c], &[c], true),
            mean: self.params.push(format!("{name}.running_mean"), vec![E::zero(); c], &[c], false),
            var: self.params.push(format!("{name}.running_var"), vec![E::one(); c], &[c], false),
        }
    }

    fn layer_norm(&mut self, name: &str, c: usize) -> Layer {
        Layer::LayerNorm {
            gamma: self.params.push(format!("{name}.gamma"), vec![E::one(); c], &[c], true),
            beta: self.params.push(format!("{name}.beta"), vec![E::zero(); c], &[c], true),
        }
    }

    fn linear(&mut self, name: &str, fan_in: usize, fan_out: usize) -> Layer {
        let data = self.gaussian(fan_in * fan_out);
        Layer::Linear {
            w: self.params.push(format!("{name}.weight"), data, &[fan_in, fan_out], true),
            b: self.params.push(format!("{name}.bias"), vec![E::zero(); fan_out], &[fan_out], true),
        }
    }
}

fn build_layers<E: Element>(spec: &NetworkSpec, b: &mut Builder<E>) -> Vec<Layer> {
    let base = spec.base_width;
    let mut layers = Vec::new();
    match spec.kind {
        NetKind::Cfg | NetKind::Dgg => {
            let widths = [spec.in_channels, base, 2 * base, 4 * base];
            for i in 0..3 {
                layers.push(b.conv(&format!("enc{i}"), widths[i], widths[i + 1], 4, 2, 1, false));
                layers.push(b.batch_norm(&format!("enc{i}.bn"), widths[i + 1]));
                layers.push(Layer::Leaky);
            }
            let mid = 4 * base;
            for r in 0..RES_BLOCKS {
                let mut block = Vec::new();
                for j in 0..RES_DEPTH {
                    block.push(b.conv(&format!("res{r}.conv{j}"), mid, mid, 1, 1, 0, false));
                    block.push(b.batch_norm(&format!("res{r}.conv{j}.bn"), mid));
                    block.push(Layer::Relu);
                }
                layers.push(Layer::Residual(block));
            }
            layers.push(b.deconv("dec0", 4 * base, 2 * base, false));
            layers.push(b.batch_norm("dec0.bn", 2 * base));
            layers.push(Layer::Relu);
            layers.push(b.deconv("dec1", 2 * base, base, false));
            layers.push(b.batch_norm("dec1.bn", base));
            layers.push(Layer::Relu);
            layers.push(b.deconv("dec2", base, CHANNELS, true));
            layers.push(Layer::Tanh);
        }
        NetKind::Rn => {
            let widths = [spec.in_channels, base, 2 * base, 4 * base];
            for i in 0..3 {
                layers.push(b.conv(&format!("enc{i}"), widths[i], widths[i + 1], 4, 2, 1, false));
                layers.push(b.batch_norm(&format!("enc{i}.bn"), widths[i + 1]));
                layers.push(Layer::Leaky);
            }
            layers.push(b.deconv("dec0", 4 * base, 2 * base, false));
            layers.push(b.batch_norm("dec0.bn", 2 * base));
            layers.push(Layer::Leaky);
            layers.push(b.deconv("dec1", 2 * base, base, false));
            layers.push(b.batch_norm("dec1.bn", base));
            layers.push(Layer::Leaky);
            layers.push(b.deconv("dec2", base, CHANNELS, true));
            layers.push(Layer::Tanh);
        }
        NetKind::Disc => {
            let widths = [spec.in_channels, base, 2 * base, 4 * base, 8 * base, 8 * base];
            for i in 0..5 {
                layers.push(b.conv(&format!("conv{i}"), widths[i], widths[i + 1], 4, 2, 1, false));
                layers.push(b.layer_norm(&format!("conv{i}.ln"), widths[i + 1]));
                layers.push(Layer::Leaky);
            }
            let (h, w) = spec.input_resolution;
            layers.push(b.linear("fc", 8 * base * (h / 32) * (w / 32), 1));
        }
    }
    layers
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum BnMode {
    Batch,
    Running,
}

struct Pass<'a, E: Element> {
    params: &'a ParameterSet<E>,
    bn: BnMode,
    detach: bool,
    slope: E,
    stats: Option<&'a mut Vec<(usize, Vec<E>)>>,
}

impl<E: Element> Pass<'_, E> {
    fn p(&self, slot: usize) -> Tensor<E> {
        let t = self.params.tensor(slot);
        if self.detach {
            t.detach()
        } else {
            t.clone()
        }
    }

    fn channel(&self, slot: usize) -> Tensor<E> {
        let t = self.p(slot);
        let c = t.numel();
        t.reshape(&[1, c, 1, 1])
    }

    fn run(&mut self, layers: &[Layer], mut x: Tensor<E>) -> Tensor<E> {
        for layer in layers {
            x = match layer {
                Layer::Conv { w, b, stride, pad } => {
                    let y = x.conv2d(&self.p(*w), *stride, *pad);
                    match b {
                        Some(b) => y.add(&self.channel(*b)),
                        None => y,
                    }
                }
                Layer::Deconv { w, b } => {
                    let out = (2 * x.dim(2), 2 * x.dim(3));
                    let y = x.conv_transpose2d(&self.p(*w), 2, 1, out);
                    match b {
                        Some(b) => y.add(&self.channel(*b)),
                        None => y,
                    }
                }
                Layer::BatchNorm { gamma, beta, mean, var } => self.batch_norm(&x, *gamma, *beta, *mean, *var),
                Layer::LayerNorm { gamma, beta } => {
                    let n = x.dim(0);
                    let mu = x.mean_to(&[n, 1, 1, 1]);
                    let c = x.sub(&mu);
                    let var = c.sqr().mean_to(&[n, 1, 1, 1]);
                    let xhat = c.div(&var.add_scalar(E::from_f64_lossy(NORM_EPS)).sqrt());
                    xhat.mul(&self.channel(*gamma)).add(&self.channel(*beta))
                }
                Layer::Leaky => x.leaky_relu(self.slope),
                Layer::Relu => x.relu(),
                Layer::Tanh => x.tanh(),
                Layer::Residual(inner) => {
                    let f = self.run(inner, x.clone());
                    f.add(&x)
                }
                Layer::Linear { w, b } => {
                    let b = self.p(*b);
                    let fan_out = b.numel();
                    x.flatten_from1().matmul(&self.p(*w)).add(&b.reshape(&[1, fan_out]))
                }
            };
        }
        x
    }

    fn batch_norm(&mut self, x: &Tensor<E>, gamma: usize, beta: usize, mean: usize, var: usize) -> Tensor<E> {
        let c = x.dim(1);
        let eps = E::from_f64_lossy(NORM_EPS);
        let xhat = match self.bn {
            BnMode::Running => {
                let mu = self.params.tensor(mean).reshape(&[1, c, 1, 1]);
                let sd = self.params.tensor(var).add_scalar(eps).sqrt().reshape(&[1, c, 1, 1]);
                x.sub(&mu.detach()).div(&sd.detach())
            }
            BnMode::Batch => {
                let mu = x.mean_to(&[1, c, 1, 1]);
                let centred = x.sub(&mu);
                let v = centred.sqr().mean_to(&[1, c, 1, 1]);
                if let Some(stats) = self.stats.as_deref_mut() {
                    let n = x.numel() / c;
                    let unbias = if n > 1 { n as f64 / (n - 1) as f64 } else { 1.0 };
                    let m = E::from_f64_lossy(BN_MOMENTUM);
                    let keep = E::one() - m;
                    let old_mu = self.params.tensor(mean).data();
                    let old_var = self.params.tensor(var).data();
                    let new_mu = old_mu.iter().zip(mu.data()).map(|(&o, &b)| keep * o + m * b).collect();
                    let new_var = old_var
                        .iter()
                        .zip(v.data())
                        .map(|(&o, &b)| keep * o + m * b * E::from_f64_lossy(unbias))
                        .collect();
                    stats.push((mean, new_mu));
                    stats.push((var, new_var));
                }
                centred.div(&v.add_scalar(eps).sqrt())
            }
        };
        xhat.mul(&self.channel(gamma)).add(&self.channel(beta))
    }
}

/// A built network: its spec, layer graph and parameters.
#[derive(Clone, Debug)]
pub struct Network<E: Element> {
    spec: NetworkSpec,
    seed: u64,
    layers: Vec<Layer>,
    params: ParameterSet<E>,
}

/// Metadata written next to every parameter archive.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct NetworkMeta {
    pub kind: NetKind,
    pub in_channels: usize,
    pub base_width: usize,
    pub input_resolution: [usize; 2],
    pub leaky_slope: f64,
    pub seed: u64,
    pub init: String,
    pub bn_momentum: f64,
    pub norm_eps: f64,
    pub parameter_count: usize,
    pub dtype: String,
    pub digest: String,
}

pub fn init_scheme() -> String {
    format!("conv/deconv/linear weights normal(0, {INIT_STD}); biases 0; norm gamma 1, beta 0; running mean 0, var 1")
}

impl<E: Element> Network<E> {
    /// Builds `spec` with weights drawn from `seed`.
    pub fn new(spec: NetworkSpec, seed: u64) -> Result<Self> {
        spec.validate()?;
        let mut b = Builder {
            params: ParameterSet::default(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            normal: Normal::new(0.0, INIT_STD).expect("valid std"),
        };
        let layers = build_layers(&spec, &mut b);
        Ok(Network { spec, seed, layers, params: b.params })
    }

    pub fn spec(&self) -> &NetworkSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn params(&self) -> &ParameterSet<E> {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParameterSet<E> {
        &mut self.params
    }

    /// Sets every tensor, running statistics included, to zero.
    pub fn zero_parameters(&mut self) {
        self.params.map_values(|p| vec![E::zero(); p.value.numel()]);
    }

    fn check_input(&self, x: &Tensor<E>) {
        let (h, w) = self.spec.input_resolution;
        assert!(
            x.rank() == 4 && x.dim(1) == self.spec.in_channels && x.dim(2) == h && x.dim(3) == w,
            "{} expects N×{}×{h}×{w}, got {:?}",
            self.spec.kind.name(),
            self.spec.in_channels,
            x.shape()
        );
    }

    fn pass(&self, x: &Tensor<E>, bn: BnMode, detach: bool, stats: Option<&mut Vec<(usize, Vec<E>)>>) -> Tensor<E> {
        self.check_input(x);
        let mut pass = Pass { params: &self.params, bn, detach, slope: E::from_f64_lossy(self.spec.leaky_slope), stats };
        let out = pass.run(&self.layers, x.clone());
        match self.spec.kind {
            NetKind::Disc => out.reshape(&[x.dim(0)]),
            _ => out,
        }
    }

    /// Inference mode: batch norm uses running statistics.
    pub fn forward(&self, x: &Tensor<E>) -> Tensor<E> {
        self.pass(x, BnMode::Running, false, None)
    }

    /// Inference mode with every parameter cut from the graph.
    pub fn forward_frozen(&self, x: &Tensor<E>) -> Tensor<E> {
        self.pass(x, BnMode::Running, true, None)
    }

    /// Training mode (batch statistics) without touching running statistics.
    pub fn forward_batch_stats(&self, x: &Tensor<E>) -> Tensor<E> {
        self.pass(x, BnMode::Batch, false, None)
    }

    /// Training mode; running statistics are updated from this batch.
    pub fn forward_train(&mut self, x: &Tensor<E>) -> Tensor<E> {
        let mut stats = Vec::new();
        let out = self.pass(x, BnMode::Batch, false, Some(&mut stats));
        for (slot, data) in stats {
            self.params.set(slot, data);
        }
        out
    }

    pub fn meta(&self) -> NetworkMeta {
        let s = &self.spec;
        NetworkMeta {
            kind: s.kind,
            in_channels: s.in_channels,
            base_width: s.base_width,
            input_resolution: [s.input_resolution.0, s.input_resolution.1],
            leaky_slope: s.leaky_slope,
            seed: self.seed,
            init: init_scheme(),
            bn_momentum: BN_MOMENTUM,
            norm_eps: NORM_EPS,
            parameter_count: self.params.count(),
            dtype: E::DTYPE.into(),
            digest: self.params.digest(),
        }
    }

    /// Writes `<stem>.safetensors` and the `<stem>.meta.toml` sidecar.
    pub fn save(&self, dir: &Path, stem: &str) -> Result<()> {
        self.params.save(&dir.join(format!("{stem}.safetensors")))?;
        let meta = toml::to_string(&self.meta()).expect("metadata serialises");
        let path = dir.join(format!("{stem}.meta.toml"));
        fs::write(&path, meta).map_err(DgganError::io(path))
    }

    pub fn load(dir: &Path, stem: &str) -> Result<Self> {
        let path = dir.join(format!("{stem}.meta.toml"));
        let text = fs::read_to_string(&path).map_err(DgganError::io(&path))?;
        let meta: NetworkMeta =
            toml::from_str(&text).map_err(|e| DgganError::Data(format!("{}: {e}", path.display())))?;
        let spec = NetworkSpec {
            kind: meta.kind,
            in_channels: meta.in_channels,
            base_width: meta.base_width,
            input_resolution: (meta.input_resolution[0], meta.input_resolution[1]),
            leaky_slope: meta.leaky_slope,
        };
        let mut net = Network::new(spec, meta.seed)?;
        net.params.load(&dir.join(format!("{stem}.safetensors")))?;
        Ok(net)
    }

    pub fn cast<F: Element>(&self) -> Network<F> {
        Network { spec: self.spec.clone(), seed: self.seed, layers: self.layers.clone(), params: self.params.cast() }
    }
}

pub fn build_cfg<E: Element>(spec: NetworkSpec, seed: u64) -> Result<Network<E>> {
    expect_kind(&spec, NetKind::Cfg)?;
    Network::new(spec, seed)
}

pub fn build_dgg<E: Element>(spec: NetworkSpec, seed: u64) -> Result<Network<E>> {
    expect_kind(&spec, NetKind::Dgg)?;
    Network::new(spec, seed)
}

pub fn build_rn<E: Element>(spec: NetworkSpec, seed: u64) -> Result<Network<E>> {
    expect_kind(&spec, NetKind::Rn)?;
    Network::new(spec, seed)
}

pub fn build_disc<E: Element>(spec: NetworkSpec, seed: u64) -> Result<Network<E>> {
    expect_kind(&spec, NetKind::Disc)?;
    Network::new(spec, seed)
}

fn expect_kind(spec: &NetworkSpec, kind: NetKind) -> Result<()> {
    if spec.kind != kind {
        return Err(DgganError::Contract(format!("expected a {} spec, got {}", kind.name(), spec.kind.name())));
    }
    Ok(())
}

/// Anything that scores 6-channel (candidate, condition) pairs.
pub trait Critic<E: Element> {
    /// Scores for an `N×6×H×W` batch, shape `[N]`.
    fn score(&self, pairs: &Tensor<E>) -> Tensor<E>;

    /// Same scores, with the critic's own parameters held constant.
    fn score_frozen(&self, pairs: &Tensor<E>) -> Tensor<E>;
}

impl<E: Element> Critic<E> for Network<E> {
    fn score(&self, pairs: &Tensor<E>) -> Tensor<E> {
        self.forward(pairs)
    }

    fn score_frozen(&self, pairs: &Tensor<E>) -> Tensor<E> {
        self.forward_frozen(pairs)
    }
}

/// A parameter-free critic given by a closure; for tests and analysis.
pub struct FnCritic<F>(pub F);

impl<E: Element, F: Fn(&Tensor<E>) -> Tensor<E>> Critic<E> for FnCritic<F> {
    fn score(&self, pairs: &Tensor<E>) -> Tensor<E> {
        (self.0)(pairs)
    }

    fn score_frozen(&self, pairs: &Tensor<E>) -> Tensor<E> {
        (self.0)(pairs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn input(n: usize, c: usize, h: usize, w: usize) -> Tensor<f32> {
        let data = (0..n * c * h * w).map(|i| (i as f32 * 0.731).sin()).collect();
        Tensor::from_vec(data, &[n, c, h, w])
    }

    #[test]
    fn generator_shapes_and_range() {
        for res in [(32, 32), (64, 64), (32, 64)] {
            for spec in [NetworkSpec::cfg(4, 4, res), NetworkSpec::dgg(4, 4, res), NetworkSpec::rn(4, res)] {
                let net = Network::<f32>::new(spec.clone(), 1).unwrap();
                let y = net.forward(&input(2, spec.in_channels, res.0, res.1));
                assert_eq!(y.shape(), &[2, 3, res.0, res.1]);
                assert!(y.data().iter().all(|v| v.abs() < 1.0));
            }
        }
    }

    #[test]
    fn disc_scores_one_per_example() {
        let net = Network::<f32>::new(NetworkSpec::disc(4, (64, 64)), 1).unwrap();
        let s = net.score(&input(8, 6, 64, 64));
        assert_eq!(s.shape(), &[8]);
        assert!(s.all_finite());
    }

    #[test]
    fn cfg_and_dgg_share_structure() {
        let a = Network::<f32>::new(NetworkSpec::cfg(4, 8, (32, 32)), 1).unwrap();
        let b = Network::<f32>::new(NetworkSpec::dgg(4, 8, (32, 32)), 2).unwrap();
        assert_eq!(a.params().count(), b.params().count());
        assert_ne!(a.params().digest(), b.params().digest());
    }

    #[test]
    fn zeroed_generator_outputs_zero() {
        let mut net = Network::<f32>::new(NetworkSpec::cfg(4, 4, (32, 32)), 3).unwrap();
        net.zero_parameters();
        let y = net.forward(&input(1, 12, 32, 32));
        assert!(y.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn resolution_checks() {
        assert!(Network::<f32>::new(NetworkSpec::cfg(4, 4, (30, 32)), 0).is_err());
        assert!(Network::<f32>::new(NetworkSpec::disc(4, (48, 48)), 0).is_err());
        assert!(Network::<f32>::new(NetworkSpec::rn(4, (48, 48)), 0).is_ok());
        assert!(build_cfg::<f32>(NetworkSpec::rn(4, (32, 32)), 0).is_err());
    }

    #[test]
    fn same_seed_same_parameters() {
        let spec = NetworkSpec::disc(4, (32, 32));
        let a = Network::<f32>::new(spec.clone(), 9).unwrap();
        let b = Network::<f32>::new(spec, 9).unwrap();
        assert_eq!(a.params().digest(), b.params().digest());
    }

    #[test]
    fn training_pass_moves_running_stats() {
        let mut net = Network::<f32>::new(NetworkSpec::rn(4, (32, 32)), 3).unwrap();
        let before = net.params().digest();
        let _ = net.forward_batch_stats(&input(2, 6, 32, 32));
        assert_eq!(before, net.params().digest());
        let _ = net.forward_train(&input(2, 6, 32, 32));
        assert_ne!(before, net.params().digest());
    }

    #[test]
    fn archive_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut net = Network::<f32>::new(NetworkSpec::cfg(4, 4, (32, 32)), 5).unwrap();
        let _ = net.forward_train(&input(2, 12, 32, 32));
        net.save(dir.path(), "cfg").unwrap();
        let back = Network::<f32>::load(dir.path(), "cfg").unwrap();
        assert_eq!(back.params().digest(), net.params().digest());
        assert_eq!(back.spec(), net.spec());
        let meta = std::fs::read_to_string(dir.path().join("cfg.meta.toml")).unwrap();
        assert!(meta.contains("kind = \"CFG\"") && meta.contains("seed = 5"), "{meta}");
    }
}

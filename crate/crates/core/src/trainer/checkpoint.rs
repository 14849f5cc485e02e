use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::adam::Adam;
use super::config::RunConfig;
use crate::error::{DgganError, Result};
use crate::networks::Network;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stage {
    I,
    II,
}

impl Stage {
    pub fn name(self) -> &'static str {
        match self {
            Stage::I => "I",
            Stage::II => "II",
        }
    }
}

/// Which model a checkpoint trains: the full method or the coarse-only
/// ablation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Track {
    Dggan,
    Cfgan,
}

/// Position of a ChaCha stream, enough to resume it exactly.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: String,
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        RngState {
            seed: rng.get_seed().iter().map(|b| format!("{b:02x}")).collect(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng> {
        let bad = || DgganError::Data("checkpoint has a malformed random-stream state".into());
        if self.seed.len() != 64 {
            return Err(bad());
        }
        let mut seed = [0u8; 32];
        for (i, b) in seed.iter_mut().enumerate() {
            *b = u8::from_str_radix(&self.seed[2 * i..2 * i + 2], 16).map_err(|_| bad())?;
        }
        let mut rng = ChaCha8Rng::from_seed(seed);
        rng.set_word_pos(self.word_pos.parse().map_err(|_| bad())?);
        Ok(rng)
    }
}

/// Everything needed to continue a run or to predict with its networks.
#[derive(Clone, Debug)]
pub struct Checkpoint {
    pub stage: Stage,
    pub track: Track,
    /// Completed epochs.
    pub epoch: usize,
    /// Completed logged steps.
    pub step: u64,
    pub config: RunConfig,
    pub cfg: Option<Network<f32>>,
    pub dgg: Option<Network<f32>>,
    pub rn: Option<Network<f32>>,
    pub disc: Option<Network<f32>>,
    pub optimizers: BTreeMap<String, Adam>,
    pub rng: RngState,
}

#[derive(Serialize, Deserialize)]
struct StateFile {
    stage: Stage,
    track: Track,
    epoch: usize,
    step: u64,
    rng: RngState,
    networks: Vec<String>,
    optimizers: Vec<String>,
}

const NETS: [&str; 4] = ["cfg", "dgg", "rn", "disc"];

impl Checkpoint {
    pub fn dir_name(&self) -> String {
        format!("ckpt_stage{}_{}", self.stage.name(), self.epoch)
    }

    fn net(&self, name: &str) -> Option<&Network<f32>> {
        match name {
            "cfg" => self.cfg.as_ref(),
            "dgg" => self.dgg.as_ref(),
            "rn" => self.rn.as_ref(),
            "disc" => self.disc.as_ref(),
            _ => None,
        }
    }

    pub fn require(&self, name: &str) -> Result<&Network<f32>> {
        self.net(name).ok_or_else(|| {
            DgganError::Usage(format!("stage-{} {:?} checkpoint has no {name} network", self.stage.name(), self.track))
        })
    }

    /// Writes into `dir` through a temporary sibling and a rename, so a
    /// reader never sees a half-written checkpoint.
    pub fn save(&self, dir: &Path) -> Result<()> {
        let parent = dir.parent().unwrap_or(Path::new("."));
        fs::create_dir_all(parent).map_err(DgganError::io(parent))?;
        let name = dir.file_name().and_then(|n| n.to_str()).unwrap_or("ckpt");
        let tmp = parent.join(format!(".{name}.tmp"));
        if tmp.exists() {
            fs::remove_dir_all(&tmp).map_err(DgganError::io(&tmp))?;
        }
        fs::create_dir_all(&tmp).map_err(DgganError::io(&tmp))?;
        let mut networks = Vec::new();
        for name in NETS {
            if let Some(net) = self.net(name) {
                net.save(&tmp, name)?;
                networks.push(name.to_string());
            }
        }
        for (name, opt) in &self.optimizers {
            let p = tmp.join(format!("adam_{name}.safetensors"));
            fs::write(&p, opt.to_bytes()).map_err(DgganError::io(p))?;
        }
        let state = StateFile {
            stage: self.stage,
            track: self.track,
            epoch: self.epoch,
            step: self.step,
            rng: self.rng.clone(),
            networks,
            optimizers: self.optimizers.keys().cloned().collect(),
        };
        let p = tmp.join("state.json");
        fs::write(&p, serde_json::to_string_pretty(&state).expect("state serialises") + "\n").map_err(DgganError::io(p))?;
        let p = tmp.join("config.toml");
        fs::write(&p, self.config.to_toml_string()).map_err(DgganError::io(p))?;
        if dir.exists() {
            fs::remove_dir_all(dir).map_err(DgganError::io(dir))?;
        }
        fs::rename(&tmp, dir).map_err(DgganError::io(dir))
    }

    pub fn load(dir: &Path) -> Result<Self> {
        let p = dir.join("state.json");
        let text = fs::read_to_string(&p).map_err(|e| DgganError::Usage(format!("not a checkpoint: {}: {e}", dir.display())))?;
        let state: StateFile = serde_json::from_str(&text).map_err(|e| DgganError::Data(format!("{}: {e}", p.display())))?;
        let config = RunConfig::load(&dir.join("config.toml"))?;
        let mut nets: BTreeMap<&str, Network<f32>> = BTreeMap::new();
        for name in &state.networks {
            let key = NETS.iter().find(|n| *n == name).ok_or_else(|| DgganError::Data(format!("unknown network {name}")))?;
            nets.insert(key, Network::load(dir, name)?);
        }
        let mut optimizers = BTreeMap::new();
        for name in &state.optimizers {
            let net = nets.get(name.as_str()).ok_or_else(|| DgganError::Data(format!("optimizer for missing network {name}")))?;
            let mut adam = Adam::new(net.params(), config.adam_betas);
            let p = dir.join(format!("adam_{name}.safetensors"));
            adam.load_bytes(&fs::read(&p).map_err(DgganError::io(p))?)?;
            optimizers.insert(name.clone(), adam);
        }
        Ok(Checkpoint {
            stage: state.stage,
            track: state.track,
            epoch: state.epoch,
            step: state.step,
            config,
            cfg: nets.remove("cfg"),
            dgg: nets.remove("dgg"),
            rn: nets.remove("rn"),
            disc: nets.remove("disc"),
            optimizers,
            rng: state.rng,
        })
    }
}

/// Checkpoint directories under `run_dir`, oldest epoch first.
pub fn list_checkpoints(run_dir: &Path) -> Vec<PathBuf> {
    let mut found: Vec<(usize, PathBuf)> = fs::read_dir(run_dir)
        .into_iter()
        .flatten()
        .flatten()
        .filter_map(|e| {
            let name = e.file_name().into_string().ok()?;
            let epoch = name.strip_prefix("ckpt_stage")?.split('_').nth(1)?.parse().ok()?;
            Some((epoch, e.path()))
        })
        .collect();
    found.sort();
    found.into_iter().map(|(_, p)| p).collect()
}

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::dataset::{DataSource, DatasetManifest, Motion};
use crate::error::{DgganError, Result};
use crate::networks::{NetworkSpec, DEFAULT_LEAKY_SLOPE};

/// Every knob of a run, as one flat key/value document. Dataset keys and
/// training keys share the namespace; `preset` picks the defaults that the
/// remaining keys override.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub preset: String,

    pub source: DataSource,
    pub data_seed: u64,
    pub num_sequences: usize,
    pub frames_per_sequence: usize,
    pub height: usize,
    pub width: usize,
    pub window_stride: usize,
    pub speed_min: f32,
    pub speed_max: f32,
    pub scroll_speed_max: f32,
    pub max_shapes: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub data_dir: Option<PathBuf>,

    pub input_frames: usize,
    pub base_width: usize,
    pub leaky_slope: f64,
    pub batch_size: usize,
    pub stage1_lr: [f64; 2],
    pub stage2_lr: [f64; 2],
    pub stage1_epochs: usize,
    pub stage2_epochs: usize,
    pub lambda: f64,
    pub disc_steps_per_gen_step: usize,
    pub seed: u64,
    pub adam_betas: [f64; 2],
    pub aux_pixel_weight: f64,
    pub checkpoint_every: usize,
    pub deterministic: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig::preset("desk").expect("desk preset exists")
    }
}

const PRESETS: [&str; 3] = ["desk", "test", "paper"];

impl RunConfig {
    /// `desk`: synthetic 32×32 set with 30/60 epochs. `test`: the same at
    /// base width 8. `paper`: 100/200 epochs at base width 32.
    pub fn preset(name: &str) -> Result<Self> {
        let m = Motion::default();
        let desk = RunConfig {
            preset: "desk".into(),
            source: DataSource::Synthetic,
            data_seed: 0,
            num_sequences: 2000,
            frames_per_sequence: 6,
            height: 32,
            width: 32,
            window_stride: 5,
            speed_min: m.speed_min,
            speed_max: m.speed_max,
            scroll_speed_max: m.scroll_speed_max,
            max_shapes: m.max_shapes,
            data_dir: None,
            input_frames: 4,
            base_width: 32,
            leaky_slope: DEFAULT_LEAKY_SLOPE,
            batch_size: 8,
            stage1_lr: [1e-3, 1e-4],
            stage2_lr: [1e-4, 1e-5],
            stage1_epochs: 30,
            stage2_epochs: 60,
            lambda: 10.0,
            disc_steps_per_gen_step: 5,
            seed: 0,
            adam_betas: [0.5, 0.9],
            aux_pixel_weight: 0.0,
            checkpoint_every: 5,
            deterministic: false,
        };
        match name {
            "desk" => Ok(desk),
            "test" => Ok(RunConfig { preset: "test".into(), base_width: 8, ..desk }),
            "paper" => Ok(RunConfig {
                preset: "paper".into(),
                height: 64,
                width: 64,
                stage1_epochs: 100,
                stage2_epochs: 200,
                ..desk
            }),
            other => Err(DgganError::Usage(format!("unknown preset {other:?}; expected one of {}", PRESETS.join(", ")))),
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let user: toml::Table = text.parse().map_err(|e| DgganError::Usage(format!("config: {e}")))?;
        let preset = match user.get("preset") {
            Some(toml::Value::String(s)) => s.clone(),
            Some(other) => return Err(DgganError::Usage(format!("config: preset must be a string, got {other}"))),
            None => "desk".into(),
        };
        let base = RunConfig::preset(&preset)?;
        let mut merged = toml::Table::try_from(&base).expect("config serialises");
        for (k, v) in user {
            merged.insert(k, v);
        }
        let cfg: RunConfig = merged.try_into().map_err(|e: toml::de::Error| {
            DgganError::Usage(format!("config: {}", e.message().trim()))
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| DgganError::Usage(format!("cannot read config {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serialises")
    }

    /// Names of every accepted key.
    pub fn keys() -> Vec<String> {
        toml::Table::try_from(RunConfig::default()).expect("config serialises").keys().cloned().chain(["data_dir".to_string()]).collect()
    }

    pub fn validate(&self) -> Result<()> {
        self.manifest().validate()?;
        let bad = |m: String| Err(DgganError::Config(m));
        if self.input_frames == 0 {
            return bad("input_frames must be at least 1".into());
        }
        if self.frames_per_sequence < self.input_frames + 1 {
            return bad(format!(
                "frames_per_sequence {} leaves no target after {} input frames",
                self.frames_per_sequence, self.input_frames
            ));
        }
        if self.batch_size == 0 || self.disc_steps_per_gen_step == 0 || self.checkpoint_every == 0 || self.base_width == 0 {
            return bad("batch_size, disc_steps_per_gen_step, checkpoint_every and base_width must be positive".into());
        }
        for (name, [start, end]) in [("stage1_lr", self.stage1_lr), ("stage2_lr", self.stage2_lr)] {
            if !(start > 0.0 && end > 0.0 && start >= end) {
                return bad(format!("{name} needs start >= end > 0, got [{start}, {end}]"));
            }
        }
        if !(self.lambda >= 0.0) || !(self.aux_pixel_weight >= 0.0) {
            return bad("lambda and aux_pixel_weight must be non-negative".into());
        }
        if !self.adam_betas.iter().all(|b| (0.0..1.0).contains(b)) {
            return bad(format!("adam_betas must lie in [0, 1), got {:?}", self.adam_betas));
        }
        Ok(())
    }

    pub fn manifest(&self) -> DatasetManifest {
        DatasetManifest {
            source: self.source,
            seed: self.data_seed,
            num_sequences: self.num_sequences,
            frames_per_sequence: self.frames_per_sequence,
            resolution: (self.height, self.width),
            window_stride: self.window_stride,
            motion: Motion {
                speed_min: self.speed_min,
                speed_max: self.speed_max,
                scroll_speed_max: self.scroll_speed_max,
                max_shapes: self.max_shapes,
            },
        }
    }

    pub fn resolution(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    pub fn cfg_spec(&self) -> NetworkSpec {
        NetworkSpec::cfg(self.input_frames, self.base_width, self.resolution()).with_leaky_slope(self.leaky_slope)
    }

    pub fn dgg_spec(&self) -> NetworkSpec {
        NetworkSpec::dgg(self.input_frames, self.base_width, self.resolution()).with_leaky_slope(self.leaky_slope)
    }

    pub fn rn_spec(&self) -> NetworkSpec {
        NetworkSpec::rn(self.base_width, self.resolution()).with_leaky_slope(self.leaky_slope)
    }

    pub fn disc_spec(&self) -> NetworkSpec {
        NetworkSpec::disc(self.base_width, self.resolution()).with_leaky_slope(self.leaky_slope)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_the_documented_protocol() {
        let c = RunConfig::default();
        assert_eq!((c.num_sequences, c.height, c.width, c.data_seed), (2000, 32, 32, 0));
        assert_eq!(c.batch_size, 8);
        assert_eq!(c.stage1_lr, [1e-3, 1e-4]);
        assert_eq!(c.stage2_lr, [1e-4, 1e-5]);
        assert_eq!(c.lambda, 10.0);
        assert_eq!(c.disc_steps_per_gen_step, 5);
        assert_eq!(c.adam_betas, [0.5, 0.9]);
        assert_eq!((c.stage1_epochs, c.stage2_epochs), (30, 60));
        let p = RunConfig::preset("paper").unwrap();
        assert_eq!((p.stage1_epochs, p.stage2_epochs), (100, 200));
    }

    #[test]
    fn keys_override_the_preset() {
        let c = RunConfig::from_toml_str("preset = \"test\"\nstage1_epochs = 3\nstage1_lr = [0.002, 0.001]\n").unwrap();
        assert_eq!(c.base_width, 8);
        assert_eq!(c.stage1_epochs, 3);
        assert_eq!(c.stage1_lr, [0.002, 0.001]);
        let round = RunConfig::from_toml_str(&c.to_toml_string()).unwrap();
        assert_eq!(round, c);
    }

    #[test]
    fn unknown_keys_list_the_valid_ones() {
        let err = RunConfig::from_toml_str("learning_rate = 0.1\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, DgganError::Usage(_)));
        assert!(msg.contains("learning_rate") && msg.contains("stage1_lr") && msg.contains("batch_size"), "{msg}");
    }

    #[test]
    fn invalid_values() {
        assert!(matches!(RunConfig::from_toml_str("height = 30\nwidth = 30\n"), Err(DgganError::Config(_))));
        assert!(RunConfig::from_toml_str("stage1_lr = [0.0001, 0.001]\n").is_err());
        assert!(RunConfig::from_toml_str("disc_steps_per_gen_step = 0\n").is_err());
        assert!(RunConfig::from_toml_str("preset = \"huge\"\n").is_err());
    }
}

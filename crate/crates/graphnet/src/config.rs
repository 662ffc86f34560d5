//! Plain `key = value` run configuration.
//!
//! One setting per line; `#` starts a comment; blank lines are ignored.
//! Lists are comma separated. Later settings override earlier ones, and
//! command-line values are applied after the file. Unknown keys are errors.

use std::fmt::Write as _;
use std::path::PathBuf;

use graphnet_core::nn::GraphNetConfig;
use graphnet_core::synth::SynthConfig;
use graphnet_core::train::{AdamConfig, LossConfig, TrainConfig};
use graphnet_core::Real;
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ConfigError {
    #[error("{origin}: unknown key {key:?}")]
    UnknownKey { origin: String, key: String },
    #[error("{origin}: bad value {value:?} for {key}: {msg}")]
    BadValue { origin: String, key: String, value: String, msg: String },
    #[error("{origin}: expected `key = value`, found {line:?}")]
    Syntax { origin: String, line: String },
    #[error("missing required setting {0:?}")]
    Missing(&'static str),
    #[error("{0}")]
    Invalid(String),
}

/// Every setting of every command. Paths are optional; each command checks
/// the ones it needs.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    // dataset generation
    pub samples: usize,
    pub seed: u64,
    pub nodes: usize,
    pub class_ratio: Real,
    pub lobulation: Real,
    pub bump_radius_min: Real,
    pub bump_radius_max: Real,
    pub n_clinical: usize,
    pub n_morph: usize,
    pub grid_segments: usize,
    pub grid_rings: usize,
    // model
    pub enc1: Vec<usize>,
    pub enc2: Vec<usize>,
    pub cls_hidden: Vec<usize>,
    pub seg1: Vec<usize>,
    pub seg2_hidden: Vec<usize>,
    pub pointnet: bool,
    pub first_layer_adjacency_only: bool,
    pub init_seed: u64,
    // training
    pub epochs: usize,
    pub batch_size: usize,
    pub lr: Real,
    pub decay_rate: Real,
    pub decay_every: usize,
    pub adam_beta1: Real,
    pub adam_beta2: Real,
    pub adam_eps: Real,
    pub train_seed: u64,
    pub shuffle: bool,
    pub standardize_aux: bool,
    pub cls_weight: Real,
    pub seg_weight: Real,
    pub dsc_smooth: Real,
    pub dice_background: bool,
    // inputs and outputs
    pub data: Option<PathBuf>,
    pub out: Option<PathBuf>,
    pub checkpoint: Option<PathBuf>,
    pub mesh: Option<PathBuf>,
    pub aux: Option<Vec<Real>>,
    pub aux_zeros: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let synth = SynthConfig::default();
        let model = GraphNetConfig::standard(0, 2, 2);
        let train = TrainConfig::default();
        let adam = AdamConfig::default();
        let loss = LossConfig::default();
        let hidden = |v: &[usize]| v[..v.len() - 1].to_vec();
        Self {
            samples: synth.num_samples,
            seed: synth.seed,
            nodes: synth.target_nodes,
            class_ratio: synth.class_ratio,
            lobulation: synth.lobulation_amplitude,
            bump_radius_min: synth.bump_radius_range.0,
            bump_radius_max: synth.bump_radius_range.1,
            n_clinical: synth.n_clinical,
            n_morph: synth.n_morph,
            grid_segments: synth.grid_segments,
            grid_rings: synth.grid_rings,
            enc1: model.enc_block1.clone(),
            enc2: model.enc_block2.clone(),
            cls_hidden: hidden(&model.cls_head),
            seg1: model.seg_block1.clone(),
            seg2_hidden: hidden(&model.seg_block2),
            pointnet: false,
            first_layer_adjacency_only: model.first_layer_only_adjacency,
            init_seed: 0,
            epochs: train.epochs,
            batch_size: train.batch_size,
            lr: adam.base_lr,
            decay_rate: adam.decay_rate,
            decay_every: adam.decay_every,
            adam_beta1: adam.beta1,
            adam_beta2: adam.beta2,
            adam_eps: adam.eps,
            train_seed: train.seed,
            shuffle: train.shuffle,
            standardize_aux: train.standardize_aux,
            cls_weight: loss.cls_weight,
            seg_weight: loss.seg_weight,
            dsc_smooth: loss.dsc_smooth,
            dice_background: loss.dice_background,
            data: None,
            out: None,
            checkpoint: None,
            mesh: None,
            aux: None,
            aux_zeros: false,
        }
    }
}

struct Parse<'a> {
    origin: &'a str,
    key: &'a str,
    value: &'a str,
}

impl Parse<'_> {
    fn fail(&self, msg: impl Into<String>) -> ConfigError {
        ConfigError::BadValue { origin: self.origin.into(), key: self.key.into(), value: self.value.into(), msg: msg.into() }
    }

    fn num<T: std::str::FromStr>(&self) -> Result<T, ConfigError> {
        self.value.parse().map_err(|_| self.fail("not a valid number"))
    }

    fn real(&self) -> Result<Real, ConfigError> {
        let v: Real = self.num()?;
        if v.is_finite() { Ok(v) } else { Err(self.fail("must be finite")) }
    }

    fn flag(&self) -> Result<bool, ConfigError> {
        match self.value {
            "true" | "1" | "yes" | "on" => Ok(true),
            "false" | "0" | "no" | "off" => Ok(false),
            _ => Err(self.fail("expected true or false")),
        }
    }

    fn widths(&self, allow_empty: bool) -> Result<Vec<usize>, ConfigError> {
        if self.value.is_empty() {
            return if allow_empty { Ok(Vec::new()) } else { Err(self.fail("needs at least one width")) };
        }
        let v: Vec<usize> = self
            .value
            .split(',')
            .map(|t| t.trim().parse::<usize>().map_err(|_| self.fail("expected comma-separated positive integers")))
            .collect::<Result<_, _>>()?;
        if v.contains(&0) {
            return Err(self.fail("widths must be positive"));
        }
        Ok(v)
    }

    fn reals(&self) -> Result<Vec<Real>, ConfigError> {
        if self.value.is_empty() {
            return Ok(Vec::new());
        }
        self.value
            .split(',')
            .map(|t| match t.trim().parse::<Real>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(self.fail("expected comma-separated finite numbers")),
            })
            .collect()
    }

    fn path(&self) -> Result<Option<PathBuf>, ConfigError> {
        if self.value.is_empty() { Err(self.fail("empty path")) } else { Ok(Some(PathBuf::from(self.value))) }
    }
}

fn list<T: std::fmt::Display>(v: &[T]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(",")
}

fn reals(v: &[Real]) -> String {
    v.iter().map(|x| format!("{x:?}")).collect::<Vec<_>>().join(",")
}

impl RunConfig {
    /// Applies one setting. `origin` names where it came from for messages.
    pub fn set(&mut self, key: &str, value: &str, origin: &str) -> Result<(), ConfigError> {
        let p = Parse { origin, key, value: value.trim() };
        match key {
            "samples" => self.samples = p.num()?,
            "seed" => self.seed = p.num()?,
            "nodes" => self.nodes = p.num()?,
            "class_ratio" => self.class_ratio = p.real()?,
            "lobulation" => self.lobulation = p.real()?,
            "bump_radius_min" => self.bump_radius_min = p.real()?,
            "bump_radius_max" => self.bump_radius_max = p.real()?,
            "n_clinical" => self.n_clinical = p.num()?,
            "n_morph" => self.n_morph = p.num()?,
            "grid_segments" => self.grid_segments = p.num()?,
            "grid_rings" => self.grid_rings = p.num()?,
            "enc1" => self.enc1 = p.widths(false)?,
            "enc2" => self.enc2 = p.widths(false)?,
            "cls_hidden" => self.cls_hidden = p.widths(true)?,
            "seg1" => self.seg1 = p.widths(false)?,
            "seg2_hidden" => self.seg2_hidden = p.widths(true)?,
            "pointnet" => self.pointnet = p.flag()?,
            "first_layer_adjacency_only" => self.first_layer_adjacency_only = p.flag()?,
            "init_seed" => self.init_seed = p.num()?,
            "epochs" => self.epochs = p.num()?,
            "batch_size" => self.batch_size = p.num()?,
            "lr" => self.lr = p.real()?,
            "decay_rate" => self.decay_rate = p.real()?,
            "decay_every" => self.decay_every = p.num()?,
            "adam_beta1" => self.adam_beta1 = p.real()?,
            "adam_beta2" => self.adam_beta2 = p.real()?,
            "adam_eps" => self.adam_eps = p.real()?,
            "train_seed" => self.train_seed = p.num()?,
            "shuffle" => self.shuffle = p.flag()?,
            "standardize_aux" => self.standardize_aux = p.flag()?,
            "cls_weight" => self.cls_weight = p.real()?,
            "seg_weight" => self.seg_weight = p.real()?,
            "dsc_smooth" => self.dsc_smooth = p.real()?,
            "dice_background" => self.dice_background = p.flag()?,
            "data" => self.data = p.path()?,
            "out" => self.out = p.path()?,
            "checkpoint" => self.checkpoint = p.path()?,
            "mesh" => self.mesh = p.path()?,
            "aux" => self.aux = Some(p.reals()?),
            "aux_zeros" => self.aux_zeros = p.flag()?,
            _ => return Err(ConfigError::UnknownKey { origin: origin.into(), key: key.into() }),
        }
        Ok(())
    }

    /// Applies every line of a config file.
    pub fn apply_text(&mut self, text: &str, origin: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let at = format!("{origin}:{}", i + 1);
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax { origin: at.clone(), line: line.into() })?;
            self.set(k.trim(), v, &at)?;
        }
        Ok(())
    }

    /// Applies a `key=value` override.
    pub fn apply_override(&mut self, kv: &str) -> Result<(), ConfigError> {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| ConfigError::Syntax { origin: "command line".into(), line: kv.into() })?;
        self.set(k.trim(), v, "command line")
    }

    pub fn from_text(text: &str) -> Result<Self, ConfigError> {
        let mut c = Self::default();
        c.apply_text(text, "config")?;
        Ok(c)
    }

    /// Every setting in a form [`RunConfig::from_text`] reads back to an
    /// equal value. Unset paths are omitted.
    pub fn dump(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: String| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("samples", self.samples.to_string());
        kv("seed", self.seed.to_string());
        kv("nodes", self.nodes.to_string());
        kv("class_ratio", format!("{:?}", self.class_ratio));
        kv("lobulation", format!("{:?}", self.lobulation));
        kv("bump_radius_min", format!("{:?}", self.bump_radius_min));
        kv("bump_radius_max", format!("{:?}", self.bump_radius_max));
        kv("n_clinical", self.n_clinical.to_string());
        kv("n_morph", self.n_morph.to_string());
        kv("grid_segments", self.grid_segments.to_string());
        kv("grid_rings", self.grid_rings.to_string());
        kv("enc1", list(&self.enc1));
        kv("enc2", list(&self.enc2));
        kv("cls_hidden", list(&self.cls_hidden));
        kv("seg1", list(&self.seg1));
        kv("seg2_hidden", list(&self.seg2_hidden));
        kv("pointnet", self.pointnet.to_string());
        kv("first_layer_adjacency_only", self.first_layer_adjacency_only.to_string());
        kv("init_seed", self.init_seed.to_string());
        kv("epochs", self.epochs.to_string());
        kv("batch_size", self.batch_size.to_string());
        kv("lr", format!("{:?}", self.lr));
        kv("decay_rate", format!("{:?}", self.decay_rate));
        kv("decay_every", self.decay_every.to_string());
        kv("adam_beta1", format!("{:?}", self.adam_beta1));
        kv("adam_beta2", format!("{:?}", self.adam_beta2));
        kv("adam_eps", format!("{:?}", self.adam_eps));
        kv("train_seed", self.train_seed.to_string());
        kv("shuffle", self.shuffle.to_string());
        kv("standardize_aux", self.standardize_aux.to_string());
        kv("cls_weight", format!("{:?}", self.cls_weight));
        kv("seg_weight", format!("{:?}", self.seg_weight));
        kv("dsc_smooth", format!("{:?}", self.dsc_smooth));
        kv("dice_background", self.dice_background.to_string());
        for (k, p) in [("data", &self.data), ("out", &self.out), ("checkpoint", &self.checkpoint), ("mesh", &self.mesh)] {
            if let Some(p) = p {
                kv(k, p.display().to_string());
            }
        }
        if let Some(a) = &self.aux {
            kv("aux", reals(a));
        }
        kv("aux_zeros", self.aux_zeros.to_string());
        s
    }

    pub fn synth_config(&self) -> SynthConfig {
        SynthConfig {
            num_samples: self.samples,
            target_nodes: self.nodes,
            class_ratio: self.class_ratio,
            bump_radius_range: (self.bump_radius_min, self.bump_radius_max),
            lobulation_amplitude: self.lobulation,
            seed: self.seed,
            n_clinical: self.n_clinical,
            n_morph: self.n_morph,
            grid_segments: self.grid_segments,
            grid_rings: self.grid_rings,
        }
    }

    /// Binary classifier and binary segmentation head over `n_aux` features.
    pub fn model_config(&self, n_aux: usize, nodes: usize) -> GraphNetConfig {
        let with_classes = |hidden: &[usize]| {
            let mut v = hidden.to_vec();
            v.push(2);
            v
        };
        GraphNetConfig {
            in_features: 3,
            enc_block1: self.enc1.clone(),
            enc_block2: self.enc2.clone(),
            cls_head: with_classes(&self.cls_hidden),
            seg_block1: self.seg1.clone(),
            seg_block2: with_classes(&self.seg2_hidden),
            n_aux,
            pointnet_mode: self.pointnet,
            first_layer_only_adjacency: self.first_layer_adjacency_only,
            expected_nodes: Some(nodes),
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            batch_size: self.batch_size,
            epochs: self.epochs,
            seed: self.train_seed,
            shuffle: self.shuffle,
            standardize_aux: self.standardize_aux,
        }
    }

    pub fn adam_config(&self) -> AdamConfig {
        AdamConfig {
            base_lr: self.lr,
            beta1: self.adam_beta1,
            beta2: self.adam_beta2,
            eps: self.adam_eps,
            decay_rate: self.decay_rate,
            decay_every: self.decay_every,
        }
    }

    pub fn loss_config(&self) -> LossConfig {
        LossConfig {
            cls_weight: self.cls_weight,
            seg_weight: self.seg_weight,
            dsc_smooth: self.dsc_smooth,
            dice_background: self.dice_background,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_follow_training_protocol() {
        let c = RunConfig::default();
        assert_eq!((c.batch_size, c.epochs), (32, 100));
        assert_eq!((c.lr, c.decay_rate), (0.001, 0.7));
        assert_eq!((c.cls_weight, c.seg_weight), (1.0, 1.0));
        let m = c.model_config(35, 1024);
        assert_eq!(m, GraphNetConfig { expected_nodes: Some(1024), ..GraphNetConfig::standard(35, 2, 2) });
    }

    #[test]
    fn file_then_override() {
        let mut c = RunConfig::from_text("# demo\nepochs = 5\n\nenc2 = 8, 16 ,32  # widths\ndata = some/dir\n").unwrap();
        assert_eq!(c.epochs, 5);
        assert_eq!(c.enc2, vec![8, 16, 32]);
        assert_eq!(c.data, Some(PathBuf::from("some/dir")));
        c.apply_override("epochs=7").unwrap();
        assert_eq!(c.epochs, 7);
    }

    #[test]
    fn rejects_unknown_and_malformed() {
        let e = RunConfig::from_text("epochs = 5\nepoch = 4\n").unwrap_err();
        assert_eq!(e, ConfigError::UnknownKey { origin: "config:2".into(), key: "epoch".into() });
        assert!(matches!(RunConfig::from_text("lr = fast").unwrap_err(), ConfigError::BadValue { .. }));
        assert!(matches!(RunConfig::from_text("lr = inf").unwrap_err(), ConfigError::BadValue { .. }));
        assert!(matches!(RunConfig::from_text("just words").unwrap_err(), ConfigError::Syntax { .. }));
        assert!(matches!(RunConfig::from_text("enc1 = 4,0").unwrap_err(), ConfigError::BadValue { .. }));
        assert!(matches!(RunConfig::from_text("shuffle = maybe").unwrap_err(), ConfigError::BadValue { .. }));
        assert!(RunConfig::default().apply_override("epochs").is_err());
    }

    #[test]
    fn dump_roundtrips() {
        let mut c = RunConfig::default();
        for kv in ["lr=0.00123", "cls_hidden=", "out=x/y", "aux=1.5,-2,0.1", "pointnet=true", "class_ratio=0.31"] {
            c.apply_override(kv).unwrap();
        }
        assert!(c.cls_hidden.is_empty());
        let again = RunConfig::from_text(&c.dump()).unwrap();
        assert_eq!(again, c);
        assert_eq!(RunConfig::from_text(&RunConfig::default().dump()).unwrap(), RunConfig::default());
    }
}

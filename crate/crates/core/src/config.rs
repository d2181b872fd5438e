//! Run configuration: presets plus TOML overrides.
//!
//! A config file is TOML. Every key is optional; missing keys take the value
//! of the selected preset (`preset = "paper"` when absent). Lengths are in
//! meters, frequencies in Hz and angles in degrees.
//!
//! ```toml
//! preset = "desk"
//!
//! [geometry]
//! f_min_hz = 213.6e9
//! f_max_hz = 226.4e9
//! num_freq = 64
//! phi_min_deg = -1.68
//! phi_max_deg = 1.67
//! num_angle = 48
//! region_x_m = 0.192
//! region_y_m = 0.192
//! pixels_x = 64
//! pixels_y = 64
//! sigma_x_m = 0.004
//! sigma_y_m = 0.004
//!
//! [scene]
//! min_scatterers = 4
//! max_scatterers = 22
//!
//! [network]
//! width = 8            # complex channels per hidden layer
//! hidden_layers = 3
//! kernel = 5
//! activation = "crelu" # or "leaky-crelu"
//! leaky_slope = 0.01
//! rv_width = 12        # real channels per hidden layer of the counterpart
//!
//! [train]
//! examples = 2000
//! batch_size = 50
//! epochs = 5
//! momentum = 0.9
//! weight_decay = 0.001
//! lr_hidden = 3e-5
//! lr_output = 1e-5
//! seed = 1
//! snr_low_db = -10.0
//! snr_high_db = 10.0
//! normalization_examples = 200
//!
//! [eval]
//! trials = 25
//! snr_db = [-10.0, -5.0, 0.0, 5.0, 10.0]
//! ista_iters = 200
//! ```

use std::path::Path;

use serde::Deserialize;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::geometry::ImagingGeometry;
use crate::nn::{complex_specs, real_specs, Activation, ConvLayerSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Preset {
    Paper,
    Desk,
}

impl std::str::FromStr for Preset {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper" => Ok(Preset::Paper),
            "desk" => Ok(Preset::Desk),
            other => Err(Error::InvalidField { field: "preset", reason: format!("unknown preset {other:?}") }),
        }
    }
}

/// Scatterer count per random scene, drawn uniformly from the inclusive range.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneConfig {
    pub min_scatterers: usize,
    pub max_scatterers: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NetworkConfig {
    pub width: usize,
    pub hidden_layers: usize,
    pub kernel: usize,
    pub activation: Activation,
    pub rv_width: usize,
}

impl NetworkConfig {
    pub fn complex_specs(&self) -> Vec<ConvLayerSpec> {
        complex_specs(self.width, self.hidden_layers, self.kernel, self.activation)
    }

    pub fn real_specs(&self) -> Vec<ConvLayerSpec> {
        real_specs(self.rv_width, self.hidden_layers, self.kernel, self.activation)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub examples_total: usize,
    pub batch_size: usize,
    pub epochs: usize,
    pub momentum: f64,
    pub weight_decay: f64,
    /// Learning rate of every layer but the last.
    pub lr_hidden: f64,
    /// Learning rate of the output layer.
    pub lr_output: f64,
    pub seed: u64,
    pub snr_range_db: (f64, f64),
    /// Training examples whose matched-filter images set the input scale.
    pub normalization_examples: usize,
}

impl TrainConfig {
    pub fn steps_per_epoch(&self) -> usize {
        self.examples_total / self.batch_size
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |field: &'static str, reason: &str| Err(Error::InvalidField { field, reason: reason.into() });
        if self.batch_size == 0 {
            return bad("batch_size", "must be >= 1");
        }
        if self.examples_total == 0 || self.examples_total % self.batch_size != 0 {
            return bad("examples", "must be a positive multiple of batch_size");
        }
        if self.epochs == 0 {
            return bad("epochs", "must be >= 1");
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return bad("momentum", "must lie in [0, 1)");
        }
        if !(self.weight_decay.is_finite() && self.weight_decay >= 0.0) {
            return bad("weight_decay", "must be finite and >= 0");
        }
        if !(self.lr_hidden.is_finite() && self.lr_hidden > 0.0) {
            return bad("lr_hidden", "must be > 0");
        }
        if !(self.lr_output.is_finite() && self.lr_output > 0.0) {
            return bad("lr_output", "must be > 0");
        }
        let (lo, hi) = self.snr_range_db;
        if !(lo.is_finite() && hi.is_finite() && lo <= hi) {
            return bad("snr_low_db", "SNR range must be finite with low <= high");
        }
        if self.normalization_examples == 0 {
            return bad("normalization_examples", "must be >= 1");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalConfig {
    pub trials: usize,
    pub snr_db: Vec<f64>,
    pub ista_iters: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Config {
    pub preset: Preset,
    pub geometry: ImagingGeometry,
    pub scene: SceneConfig,
    pub network: NetworkConfig,
    pub train: TrainConfig,
    pub eval: EvalConfig,
}

impl Config {
    pub fn preset(preset: Preset) -> Self {
        let train = TrainConfig {
            examples_total: 50_000,
            batch_size: 50,
            epochs: 5,
            momentum: 0.9,
            weight_decay: 0.001,
            lr_hidden: 3e-5,
            lr_output: 1e-5,
            seed: 1,
            snr_range_db: (-10.0, 10.0),
            normalization_examples: 200,
        };
        let eval = EvalConfig { trials: 100, snr_db: vec![-10.0, -5.0, 0.0, 5.0, 10.0], ista_iters: 200 };
        match preset {
            Preset::Paper => Self {
                preset,
                geometry: ImagingGeometry::paper(),
                scene: SceneConfig { min_scatterers: 50, max_scatterers: 300 },
                network: NetworkConfig {
                    width: 16,
                    hidden_layers: 3,
                    kernel: 5,
                    activation: Activation::CRelu,
                    rv_width: 23,
                },
                train,
                eval,
            },
            Preset::Desk => Self {
                preset,
                geometry: ImagingGeometry::desk(),
                scene: SceneConfig { min_scatterers: 4, max_scatterers: 22 },
                network: NetworkConfig {
                    width: 8,
                    hidden_layers: 3,
                    kernel: 5,
                    activation: Activation::CRelu,
                    rv_width: 12,
                },
                train: TrainConfig { examples_total: 2000, ..train },
                eval: EvalConfig { trials: 25, ..eval },
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.geometry.validate()?;
        if self.scene.min_scatterers == 0 {
            return Err(Error::InvalidField { field: "min_scatterers", reason: "must be >= 1".into() });
        }
        if self.scene.max_scatterers < self.scene.min_scatterers {
            return Err(Error::InvalidField { field: "max_scatterers", reason: "must be >= min_scatterers".into() });
        }
        let n = &self.network;
        if n.width == 0 {
            return Err(Error::InvalidField { field: "width", reason: "must be >= 1".into() });
        }
        if n.rv_width == 0 {
            return Err(Error::InvalidField { field: "rv_width", reason: "must be >= 1".into() });
        }
        if n.kernel % 2 == 0 {
            return Err(Error::InvalidField { field: "kernel", reason: "must be odd".into() });
        }
        if let Activation::LeakyCRelu(s) = n.activation {
            if !(s.is_finite() && s >= 0.0) {
                return Err(Error::InvalidField { field: "leaky_slope", reason: "must be finite and >= 0".into() });
            }
        }
        self.train.validate()?;
        if self.eval.trials == 0 {
            return Err(Error::InvalidField { field: "trials", reason: "must be >= 1".into() });
        }
        if self.eval.ista_iters == 0 {
            return Err(Error::InvalidField { field: "ista_iters", reason: "must be >= 1".into() });
        }
        Ok(())
    }

    /// Identifier of everything that influences training, stored in checkpoints.
    pub fn training_id(&self) -> u64 {
        let text = format!("{:?}|{:?}|{:?}|{:?}", self.geometry, self.scene, self.network, self.train);
        let digest = Sha256::digest(text.as_bytes());
        u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
    }

    pub fn parse(text: &str) -> Result<Self> {
        let file: FileConfig = toml::from_str(text).map_err(|e| Error::ConfigParse(e.to_string()))?;
        file.apply()
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::ConfigParse(msg) => Error::ConfigParse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }
}

/// Loads and validates a configuration file.
pub fn load_config(path: impl AsRef<Path>) -> Result<Config> {
    Config::load(path)
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct FileConfig {
    preset: Option<String>,
    #[serde(default)]
    geometry: GeometryFile,
    #[serde(default)]
    scene: SceneFile,
    #[serde(default)]
    network: NetworkFile,
    #[serde(default)]
    train: TrainFile,
    #[serde(default)]
    eval: EvalFile,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct GeometryFile {
    f_min_hz: Option<f64>,
    f_max_hz: Option<f64>,
    num_freq: Option<usize>,
    phi_min_deg: Option<f64>,
    phi_max_deg: Option<f64>,
    num_angle: Option<usize>,
    region_x_m: Option<f64>,
    region_y_m: Option<f64>,
    pixels_x: Option<usize>,
    pixels_y: Option<usize>,
    sigma_x_m: Option<f64>,
    sigma_y_m: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct SceneFile {
    min_scatterers: Option<usize>,
    max_scatterers: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct NetworkFile {
    width: Option<usize>,
    hidden_layers: Option<usize>,
    kernel: Option<usize>,
    activation: Option<String>,
    leaky_slope: Option<f64>,
    rv_width: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct TrainFile {
    examples: Option<usize>,
    batch_size: Option<usize>,
    epochs: Option<usize>,
    momentum: Option<f64>,
    weight_decay: Option<f64>,
    lr_hidden: Option<f64>,
    lr_output: Option<f64>,
    seed: Option<u64>,
    snr_low_db: Option<f64>,
    snr_high_db: Option<f64>,
    normalization_examples: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvalFile {
    trials: Option<usize>,
    snr_db: Option<Vec<f64>>,
    ista_iters: Option<usize>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

impl FileConfig {
    fn apply(self) -> Result<Config> {
        let preset = match &self.preset {
            Some(p) => p.parse()?,
            None => Preset::Paper,
        };
        let mut c = Config::preset(preset);
        let g = self.geometry;
        set(&mut c.geometry.f_min, g.f_min_hz);
        set(&mut c.geometry.f_max, g.f_max_hz);
        set(&mut c.geometry.num_freq, g.num_freq);
        set(&mut c.geometry.phi_min, g.phi_min_deg.map(f64::to_radians));
        set(&mut c.geometry.phi_max, g.phi_max_deg.map(f64::to_radians));
        set(&mut c.geometry.num_angle, g.num_angle);
        set(&mut c.geometry.region_x, g.region_x_m);
        set(&mut c.geometry.region_y, g.region_y_m);
        set(&mut c.geometry.pixels_x, g.pixels_x);
        set(&mut c.geometry.pixels_y, g.pixels_y);
        set(&mut c.geometry.sigma_x, g.sigma_x_m);
        set(&mut c.geometry.sigma_y, g.sigma_y_m);

        set(&mut c.scene.min_scatterers, self.scene.min_scatterers);
        set(&mut c.scene.max_scatterers, self.scene.max_scatterers);

        let n = self.network;
        set(&mut c.network.width, n.width);
        set(&mut c.network.hidden_layers, n.hidden_layers);
        set(&mut c.network.kernel, n.kernel);
        set(&mut c.network.rv_width, n.rv_width);
        let slope = n.leaky_slope.unwrap_or(crate::nn::activation::DEFAULT_LEAKY_SLOPE);
        if let Some(a) = n.activation.as_deref() {
            c.network.activation = match a {
                "crelu" => Activation::CRelu,
                "leaky-crelu" => Activation::LeakyCRelu(slope),
                other => {
                    return Err(Error::InvalidField {
                        field: "activation",
                        reason: format!("unknown activation {other:?} (expected \"crelu\" or \"leaky-crelu\")"),
                    })
                }
            };
        } else if n.leaky_slope.is_some() {
            c.network.activation = Activation::LeakyCRelu(slope);
        }

        let t = self.train;
        set(&mut c.train.examples_total, t.examples);
        set(&mut c.train.batch_size, t.batch_size);
        set(&mut c.train.epochs, t.epochs);
        set(&mut c.train.momentum, t.momentum);
        set(&mut c.train.weight_decay, t.weight_decay);
        set(&mut c.train.lr_hidden, t.lr_hidden);
        set(&mut c.train.lr_output, t.lr_output);
        set(&mut c.train.seed, t.seed);
        set(&mut c.train.snr_range_db.0, t.snr_low_db);
        set(&mut c.train.snr_range_db.1, t.snr_high_db);
        set(&mut c.train.normalization_examples, t.normalization_examples);

        set(&mut c.eval.trials, self.eval.trials);
        set(&mut c.eval.snr_db, self.eval.snr_db);
        set(&mut c.eval.ista_iters, self.eval.ista_iters);

        c.validate()?;
        Ok(c)
    }
}

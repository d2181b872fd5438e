use rand::Rng;

use crate::config::{Config, SceneConfig};
use crate::echo::{add_noise, simulate_echo, EchoMatrix};
use crate::error::{Error, Result};
use crate::geometry::ImagingGeometry;
use crate::image::ImageReal;
use crate::rng;
use crate::scene::{generate_scene, render_ground_truth, Scene};

pub const TRAIN_TAG: &str = "train";
const HELDOUT_TAG: &str = "heldout";
const EVAL_TAG: &str = "eval";

/// One synthetic input/target pair.
#[derive(Debug, Clone)]
pub struct Example {
    pub index: u64,
    pub scene: Scene,
    pub snr_db: f64,
    /// Echo before noise.
    pub clean_echo: EchoMatrix,
    pub echo: EchoMatrix,
    pub target: ImageReal,
}

/// Lazily generated examples. Example `i` depends only on the seed, the
/// stream tag and `i`: the scatterer count, positions, amplitudes and SNR come
/// from one stream, the noise from another. Noise streams use odd indices
/// for training epochs and even ones for fixed-SNR slots.
#[derive(Debug, Clone)]
pub struct Dataset {
    geometry: ImagingGeometry,
    scene: SceneConfig,
    seed: u64,
    snr_range_db: (f64, f64),
    tag: &'static str,
    len: usize,
}

/// Training set of `examples_total` examples.
pub fn make_dataset(config: &Config) -> Result<Dataset> {
    config.validate()?;
    Ok(Dataset {
        geometry: config.geometry.clone(),
        scene: config.scene,
        seed: config.train.seed,
        snr_range_db: config.train.snr_range_db,
        tag: TRAIN_TAG,
        len: config.train.examples_total,
    })
}

impl Dataset {
    /// Held-out examples for monitoring; disjoint streams from training.
    pub fn heldout(config: &Config) -> Result<Self> {
        Ok(Self { tag: HELDOUT_TAG, len: usize::MAX, ..make_dataset(config)? })
    }

    /// Evaluation scenes for sweeps, keyed by their own seed.
    pub fn evaluation(config: &Config, seed: u64) -> Result<Self> {
        Ok(Self { tag: EVAL_TAG, seed, len: usize::MAX, ..make_dataset(config)? })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn geometry(&self) -> &ImagingGeometry {
        &self.geometry
    }

    fn scene_and_snr(&self, index: u64) -> (Scene, f64) {
        let mut r = rng::stream(self.seed, self.tag, index, 0);
        let n = r.gen_range(self.scene.min_scatterers..=self.scene.max_scatterers);
        let scene = generate_scene(&self.geometry, n, &mut r);
        let (lo, hi) = self.snr_range_db;
        let snr = if lo < hi { r.gen_range(lo..hi) } else { lo };
        (scene, snr)
    }

    pub fn scene(&self, index: u64) -> Scene {
        self.scene_and_snr(index).0
    }

    fn build(&self, index: u64, scene: Scene, snr_db: f64, noise_stream: u64) -> Result<Example> {
        let clean_echo = simulate_echo(&scene, &self.geometry);
        let mut r = rng::stream(self.seed, self.tag, index, noise_stream);
        let echo = add_noise(&clean_echo, snr_db, &mut r)?;
        let target = render_ground_truth(&scene, &self.geometry);
        Ok(Example { index, scene, snr_db, clean_echo, echo, target })
    }

    /// Example `index` with its own SNR draw and the noise of epoch 0.
    pub fn example(&self, index: u64) -> Result<Example> {
        self.example_in_epoch(index, 0)
    }

    /// Example `index` as presented in `epoch`: same scene and SNR every
    /// epoch, fresh noise.
    pub fn example_in_epoch(&self, index: u64, epoch: u64) -> Result<Example> {
        let (scene, snr) = self.scene_and_snr(index);
        self.build(index, scene, snr, 1 + 2 * epoch)
    }

    /// Example `index` at a fixed SNR; `slot` selects an independent noise
    /// draw so one scene can be reused across an SNR list.
    pub fn example_at_snr(&self, index: u64, snr_db: f64, slot: u64) -> Result<Example> {
        if !(snr_db.is_finite() || snr_db == f64::INFINITY) {
            return Err(Error::InvalidField { field: "snr_db", reason: format!("{snr_db} is not a valid SNR") });
        }
        let scene = self.scene(index);
        self.build(index, scene, snr_db, 2 + 2 * slot)
    }
}

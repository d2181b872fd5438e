//! Synthetic dataset and the momentum-SGD training loop.

mod dataset;
mod sgd;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::seq::SliceRandom;

pub use dataset::{make_dataset, Dataset, Example, TRAIN_TAG};
pub use sgd::{sgd_step, SgdParams};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::eval::{rmse, Imager};
use crate::nn::{Checkpoint, ConvLayerSpec, LayerParams, Network, NetworkKind, TrainingProgress};
use crate::operators::OperatorPlan;
use crate::rng;

/// One optimizer step as written to the training log.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub step: u64,
    pub epoch: u64,
    /// Batch-mean loss before the update.
    pub loss: f64,
    pub wall_ms: f64,
}

impl StepRecord {
    pub fn log_line(&self) -> String {
        format!("step {} epoch {} loss {:.9e} wall_ms {:.3}", self.step, self.epoch, self.loss, self.wall_ms)
    }
}

#[derive(Debug, Clone)]
pub struct TrainingRun {
    /// Steps executed by this call, in order.
    pub steps: Vec<StepRecord>,
    /// Mean step loss of each epoch completed by this call.
    pub epoch_losses: Vec<f64>,
    /// Checkpoint files written, one per completed epoch.
    pub checkpoints: Vec<PathBuf>,
    /// State after the last completed epoch.
    pub state: Checkpoint,
}

impl TrainingRun {
    pub fn loss_history(&self) -> Vec<f64> {
        self.steps.iter().map(|s| s.loss).collect()
    }
}

#[derive(Default)]
pub struct TrainOptions<'a> {
    /// Directory for per-epoch checkpoints; none are written when absent.
    pub checkpoint_dir: Option<PathBuf>,
    /// File-name prefix for checkpoints.
    pub checkpoint_prefix: String,
    /// Stop once this many epochs in total are done.
    pub stop_after_epochs: Option<u64>,
    /// Receives one log line per step.
    pub log: Option<&'a mut dyn Write>,
}

fn layer_specs(kind: NetworkKind, config: &Config) -> Vec<ConvLayerSpec> {
    match kind {
        NetworkKind::Complex => config.network.complex_specs(),
        NetworkKind::Real => config.network.real_specs(),
    }
}

/// 99th-percentile pixel magnitude over the matched-filter images of the
/// first `normalization_examples` training examples.
pub fn input_scale(config: &Config, plan: &OperatorPlan) -> Result<f64> {
    let data = make_dataset(config)?;
    let n = config.train.normalization_examples.min(data.len());
    let mut mags = Vec::with_capacity(n * config.geometry.pixel_count());
    for index in 0..n {
        let ex = data.example(index as u64)?;
        mags.extend(plan.adjoint_image(&ex.echo)?.values.iter().map(|v| v.norm()));
    }
    let k = ((mags.len() as f64 * 0.99).ceil() as usize).clamp(1, mags.len()) - 1;
    let (_, &mut q, _) = mags.select_nth_unstable_by(k, f64::total_cmp);
    if !(q.is_finite() && q > 0.0) {
        return Err(Error::ZeroSignal);
    }
    Ok(q)
}

/// Freshly initialized network plus zero momentum, ready for [`train`].
pub fn initial_checkpoint(kind: NetworkKind, config: &Config, plan: &OperatorPlan) -> Result<Checkpoint> {
    config.validate()?;
    let scale = input_scale(config, plan)?;
    let tag = match kind {
        NetworkKind::Complex => "init-complex",
        NetworkKind::Real => "init-real",
    };
    let mut r = rng::stream(config.train.seed, tag, 0, 0);
    let network = Network::init(kind, &layer_specs(kind, config), config.geometry.id(), scale, &mut r)?;
    let momentum = network.layers.iter().map(|l| LayerParams::zeros_like(&l.params)).collect();
    Ok(Checkpoint {
        network,
        momentum: Some(momentum),
        progress: TrainingProgress { epochs_done: 0, steps_done: 0, config_id: config.training_id() },
    })
}

pub fn checkpoint_path(dir: &Path, prefix: &str, epoch: u64) -> PathBuf {
    let name = if prefix.is_empty() { format!("epoch{epoch}.ckpt") } else { format!("{prefix}-epoch{epoch}.ckpt") };
    dir.join(name)
}

/// Runs the remaining epochs of `start`. Each step averages gradients over a
/// batch of consecutive examples from the epoch's shuffled order, then
/// applies [`sgd_step`].
pub fn train(start: Checkpoint, config: &Config, plan: &OperatorPlan, opts: TrainOptions<'_>) -> Result<TrainingRun> {
    config.validate()?;
    let TrainOptions { checkpoint_dir, checkpoint_prefix, stop_after_epochs, mut log } = opts;
    let cfg = &config.train;
    if start.progress.config_id != config.training_id() {
        return Err(Error::InvalidNetwork("checkpoint was trained with a different configuration".into()));
    }
    if start.network.geometry_id != config.geometry.id() || plan.geometry_id() != config.geometry.id() {
        return Err(Error::GeometryMismatch { expected: config.geometry.id(), found: start.network.geometry_id });
    }
    start.network.validate()?;
    let expected_specs = layer_specs(start.network.kind, config);
    if start.network.specs() != expected_specs {
        return Err(Error::InvalidNetwork("checkpoint layers do not match the configured network".into()));
    }
    let data = make_dataset(config)?;
    let sgd = SgdParams {
        momentum: cfg.momentum,
        weight_decay: cfg.weight_decay,
        lr_hidden: cfg.lr_hidden,
        lr_output: cfg.lr_output,
    };
    let mut net = start.network;
    let mut momentum = start
        .momentum
        .unwrap_or_else(|| net.layers.iter().map(|l| LayerParams::zeros_like(&l.params)).collect());
    let mut progress = start.progress;
    let total_epochs = stop_after_epochs.unwrap_or(cfg.epochs as u64).min(cfg.epochs as u64);
    let (h, w) = (config.geometry.pixels_y, config.geometry.pixels_x);

    let mut steps = Vec::new();
    let mut epoch_losses = Vec::new();
    let mut checkpoints = Vec::new();
    while progress.epochs_done < total_epochs {
        let epoch = progress.epochs_done;
        let order = epoch_order(cfg.seed, epoch, data.len());
        let mut epoch_loss = 0.0;
        for batch in order.chunks(cfg.batch_size) {
            let started = Instant::now();
            let prepared = net.prepare(h, w)?;
            let mut acc = prepared.accumulator();
            for &index in batch {
                let ex = data.example_in_epoch(index, epoch)?;
                let pass = prepared.forward(&ex.echo, plan)?;
                prepared.accumulate(&pass, &ex.target, &mut acc)?;
            }
            let grads = prepared.mean_gradients(&acc)?;
            drop(prepared);
            let loss = acc.loss_sum() / batch.len() as f64;
            let step = progress.steps_done + 1;
            check_finite(step, loss, &grads)?;
            sgd_step(&mut net, &grads, &mut momentum, &sgd);
            if let Some(layer) = net.layers.iter().position(|l| l.params.weights.iter().chain(&l.params.bias).any(|v| !v.is_finite())) {
                return Err(Error::NonFinite { step, layer });
            }
            progress.steps_done = step;
            let record = StepRecord { step, epoch: epoch + 1, loss, wall_ms: started.elapsed().as_secs_f64() * 1e3 };
            if let Some(out) = log.as_mut() {
                writeln!(out, "{}", record.log_line())?;
            }
            epoch_loss += loss;
            steps.push(record);
        }
        progress.epochs_done += 1;
        epoch_losses.push(epoch_loss / cfg.steps_per_epoch() as f64);
        if let Some(dir) = &checkpoint_dir {
            std::fs::create_dir_all(dir)?;
            let path = checkpoint_path(dir, &checkpoint_prefix, progress.epochs_done);
            Checkpoint { network: net.clone(), momentum: Some(momentum.clone()), progress }.save(&path)?;
            checkpoints.push(path);
        }
        log::info!("epoch {} mean loss {:.6e}", progress.epochs_done, epoch_losses.last().copied().unwrap_or(0.0));
    }
    Ok(TrainingRun { steps, epoch_losses, checkpoints, state: Checkpoint { network: net, momentum: Some(momentum), progress } })
}

/// Example order of one epoch; depends only on the seed and epoch number.
pub fn epoch_order(seed: u64, epoch: u64, len: usize) -> Vec<u64> {
    let mut order: Vec<u64> = (0..len as u64).collect();
    order.shuffle(&mut rng::stream(seed, "shuffle", epoch, 0));
    order
}

fn first_non_finite(params: &[LayerParams]) -> Option<usize> {
    params.iter().position(|p| p.weights.iter().chain(&p.bias).any(|v| !v.is_finite()))
}

fn check_finite(step: u64, loss: f64, grads: &[LayerParams]) -> Result<()> {
    if let Some(layer) = first_non_finite(grads) {
        return Err(Error::NonFinite { step, layer });
    }
    if !loss.is_finite() {
        return Err(Error::NonFinite { step, layer: grads.len().saturating_sub(1) });
    }
    Ok(())
}

/// Mean RMSE of `imager` over `count` held-out scenes at each SNR in
/// `snr_db`. Held-out scenes come from a stream disjoint from training.
pub fn evaluate_during_training(imager: &dyn Imager, config: &Config, snr_db: &[f64], count: usize) -> Result<f64> {
    let data = Dataset::heldout(config)?;
    let mut total = 0.0;
    let mut n = 0usize;
    for (s, &snr) in snr_db.iter().enumerate() {
        for index in 0..count as u64 {
            let ex = data.example_at_snr(index, snr, s as u64)?;
            total += rmse(&imager.image_for_trial(&ex.echo, &ex.target)?, &ex.target)?;
            n += 1;
        }
    }
    if n == 0 {
        return Ok(0.0);
    }
    Ok(total / n as f64)
}

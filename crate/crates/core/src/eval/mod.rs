//! RMSE sweeps, timing, grayscale rendering and letter-scene demos.

mod demo;
mod letters;
mod render;

use std::time::{Duration, Instant};

pub use demo::{demo, DemoPanel, DemoReport};
pub use letters::{letter_scene, GLYPH_HEIGHT, GLYPH_WIDTH};
pub use render::{intensity, render, render_pgm, Rendered};

use crate::config::Config;
use crate::echo::EchoMatrix;
use crate::error::{Error, Result};
use crate::image::ImageReal;
use crate::nn::{Network, NetworkKind, PreparedNetwork};
use crate::operators::{ista_reconstruct, IstaOptions, OperatorPlan};
use crate::train::Dataset;

/// `sqrt(mean (pred - truth)^2)`.
pub fn rmse(pred: &ImageReal, truth: &ImageReal) -> Result<f64> {
    pred.check_same_dims(truth)?;
    let n = pred.values.len();
    if n == 0 {
        return Ok(0.0);
    }
    let sum: f64 = pred.values.iter().zip(&truth.values).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sum / n as f64).sqrt())
}

/// Durations of the two stages of an imaging method. Single-stage methods
/// report everything as `operator`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct StageTimes {
    pub operator: Duration,
    pub network: Option<Duration>,
}

impl StageTimes {
    pub fn total(&self) -> Duration {
        self.operator + self.network.unwrap_or_default()
    }
}

/// An imaging method under evaluation.
pub trait Imager {
    fn name(&self) -> &str;

    fn image(&self, echo: &EchoMatrix) -> Result<ImageReal>;

    /// Image together with per-stage wall-clock times.
    fn image_staged(&self, echo: &EchoMatrix) -> Result<(ImageReal, StageTimes)> {
        let t = Instant::now();
        let img = self.image(echo)?;
        Ok((img, StageTimes { operator: t.elapsed(), network: None }))
    }

    /// Entry point used by [`sweep`]. Methods that may look at the ground
    /// truth (test oracles) override this.
    fn image_for_trial(&self, echo: &EchoMatrix, _truth: &ImageReal) -> Result<ImageReal> {
        self.image(echo)
    }
}

/// `|A^H y|` under the unit-scatterer normalization.
pub struct MatchedFilter<'a> {
    plan: &'a OperatorPlan,
}

impl<'a> MatchedFilter<'a> {
    pub fn new(plan: &'a OperatorPlan) -> Self {
        Self { plan }
    }
}

impl Imager for MatchedFilter<'_> {
    fn name(&self) -> &str {
        "matched-filter"
    }

    fn image(&self, echo: &EchoMatrix) -> Result<ImageReal> {
        Ok(self.plan.adjoint_image(echo)?.magnitude())
    }
}

/// Magnitude of the l1-regularized least-squares estimate.
pub struct Ista<'a> {
    plan: &'a OperatorPlan,
    opts: IstaOptions,
}

impl<'a> Ista<'a> {
    pub fn new(plan: &'a OperatorPlan, opts: IstaOptions) -> Self {
        Self { plan, opts }
    }
}

impl Imager for Ista<'_> {
    fn name(&self) -> &str {
        "ista"
    }

    fn image(&self, echo: &EchoMatrix) -> Result<ImageReal> {
        Ok(ista_reconstruct(echo, self.plan, self.opts)?.image.magnitude())
    }
}

/// Matched filter followed by a trained network.
pub struct Cnn<'a> {
    name: String,
    plan: &'a OperatorPlan,
    prepared: PreparedNetwork<'a>,
}

impl<'a> Cnn<'a> {
    pub fn new(net: &'a Network, plan: &'a OperatorPlan) -> Result<Self> {
        if net.geometry_id != plan.geometry_id() {
            return Err(Error::GeometryMismatch { expected: plan.geometry_id(), found: net.geometry_id });
        }
        let g = plan.geometry();
        let prepared = net.prepare(g.pixels_y, g.pixels_x)?;
        let name = match net.kind {
            NetworkKind::Complex => "cv-cnn",
            NetworkKind::Real => "rv-cnn",
        };
        Ok(Self { name: name.into(), plan, prepared })
    }
}

impl Imager for Cnn<'_> {
    fn name(&self) -> &str {
        &self.name
    }

    fn image(&self, echo: &EchoMatrix) -> Result<ImageReal> {
        self.prepared.infer(echo, self.plan)
    }

    fn image_staged(&self, echo: &EchoMatrix) -> Result<(ImageReal, StageTimes)> {
        let t = Instant::now();
        let mf = self.plan.adjoint_image(echo)?;
        let operator = t.elapsed();
        let t = Instant::now();
        let img = self.prepared.infer_image(&mf)?;
        Ok((img, StageTimes { operator, network: Some(t.elapsed()) }))
    }
}

/// Mean and sample standard deviation in milliseconds.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct MsStats {
    pub mean: f64,
    pub std: f64,
}

impl MsStats {
    fn of(samples: &[Duration]) -> Self {
        let ms: Vec<f64> = samples.iter().map(|d| d.as_secs_f64() * 1e3).collect();
        let n = ms.len() as f64;
        if ms.is_empty() {
            return Self::default();
        }
        let mean = ms.iter().sum::<f64>() / n;
        let var = if ms.len() > 1 { ms.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        Self { mean, std: var.sqrt() }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TimingStats {
    pub method: String,
    pub runs: usize,
    pub total: MsStats,
    pub operator: MsStats,
    /// Present for two-stage methods.
    pub network: Option<MsStats>,
}

/// Runs that are discarded before timing starts.
pub const WARMUP_RUNS: usize = 3;

/// Times each method on `echoes` (cycled) `runs` times after
/// [`WARMUP_RUNS`] discarded runs. Methods run one after another.
pub fn time_methods(methods: &[&dyn Imager], echoes: &[EchoMatrix], runs: usize) -> Result<Vec<TimingStats>> {
    if echoes.is_empty() || runs == 0 {
        return Err(Error::InvalidField { field: "runs", reason: "need at least one echo and one run".into() });
    }
    methods
        .iter()
        .map(|m| {
            for k in 0..WARMUP_RUNS {
                m.image_staged(&echoes[k % echoes.len()])?;
            }
            let mut totals = Vec::with_capacity(runs);
            let mut ops = Vec::with_capacity(runs);
            let mut nets = Vec::with_capacity(runs);
            for k in 0..runs {
                let (_, t) = m.image_staged(&echoes[k % echoes.len()])?;
                totals.push(t.total());
                ops.push(t.operator);
                if let Some(n) = t.network {
                    nets.push(n);
                }
            }
            Ok(TimingStats {
                method: m.name().to_string(),
                runs,
                total: MsStats::of(&totals),
                operator: MsStats::of(&ops),
                network: (!nets.is_empty()).then(|| MsStats::of(&nets)),
            })
        })
        .collect()
}

/// RMSE-versus-SNR table plus optional timings.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub methods: Vec<String>,
    pub snr_db: Vec<f64>,
    /// Trials behind every cell.
    pub trials: usize,
    pub seed: u64,
    /// `rmse[method][snr]`, mean over trials.
    pub rmse: Vec<Vec<f64>>,
    pub timing: Vec<TimingStats>,
}

/// Scaling policy stated at the top of every report.
pub const SCALING_NOTE: &str = "network outputs are compared to ground truth as produced; \
matched-filter images use the unit-scatterer normalization; ista images are raw magnitudes";

impl EvalReport {
    pub fn cell(&self, method: &str, snr_db: f64) -> Option<f64> {
        let m = self.methods.iter().position(|n| n == method)?;
        let s = self.snr_db.iter().position(|&v| v == snr_db)?;
        Some(self.rmse[m][s])
    }

    /// Aligned text table.
    pub fn to_table(&self) -> String {
        let mut out = format!("# {SCALING_NOTE}\n# trials per cell: {}, seed: {}\n", self.trials, self.seed);
        let w = self.methods.iter().map(|m| m.len()).max().unwrap_or(6).max(6);
        out.push_str(&format!("{:<w$}", "method"));
        for s in &self.snr_db {
            out.push_str(&format!(" {:>11}", format!("{s} dB")));
        }
        out.push('\n');
        for (m, row) in self.methods.iter().zip(&self.rmse) {
            out.push_str(&format!("{m:<w$}"));
            for v in row {
                out.push_str(&format!(" {v:>11.6}"));
            }
            out.push('\n');
        }
        if !self.timing.is_empty() {
            out.push_str(&format!("\n{:<w$} {:>12} {:>10} {:>12} {:>12}\n", "method", "total ms", "std", "operator ms", "network ms"));
            for t in &self.timing {
                let net = t.network.map_or("-".to_string(), |n| format!("{:.3}", n.mean));
                out.push_str(&format!(
                    "{:<w$} {:>12.3} {:>10.3} {:>12.3} {:>12}\n",
                    t.method, t.total.mean, t.total.std, t.operator.mean, net
                ));
            }
        }
        out
    }

    /// `method,snr_db,rmse,trials` rows with a header line.
    pub fn rmse_csv(&self) -> String {
        let mut out = String::from("method,snr_db,rmse,trials\n");
        for (m, row) in self.methods.iter().zip(&self.rmse) {
            for (s, v) in self.snr_db.iter().zip(row) {
                out.push_str(&format!("{m},{s},{v:.17e},{}\n", self.trials));
            }
        }
        out
    }

    /// Timing rows with a header line; empty network columns for
    /// single-stage methods.
    pub fn timing_csv(&self) -> String {
        let mut out = String::from("method,runs,total_ms,total_std_ms,operator_ms,operator_std_ms,network_ms,network_std_ms\n");
        for t in &self.timing {
            let (nm, ns) = t.network.map_or((String::new(), String::new()), |n| (n.mean.to_string(), n.std.to_string()));
            out.push_str(&format!(
                "{},{},{},{},{},{},{nm},{ns}\n",
                t.method, t.runs, t.total.mean, t.total.std, t.operator.mean, t.operator.std
            ));
        }
        out
    }
}

/// RMSE of each method against ground truth, averaged over `trials`
/// scenes per SNR. Trial `t` uses the same scene at every SNR with an
/// independent noise draw per SNR. Scenes come from an evaluation stream
/// disjoint from the training and held-out streams.
pub fn sweep(methods: &[&dyn Imager], config: &Config, snr_db: &[f64], trials: usize, seed: u64) -> Result<EvalReport> {
    if trials == 0 {
        return Err(Error::InvalidField { field: "trials", reason: "must be >= 1".into() });
    }
    let data = Dataset::evaluation(config, seed)?;
    let mut sums = vec![vec![0.0; snr_db.len()]; methods.len()];
    for trial in 0..trials as u64 {
        for (s, &snr) in snr_db.iter().enumerate() {
            let ex = data.example_at_snr(trial, snr, s as u64)?;
            for (m, method) in methods.iter().enumerate() {
                let img = method.image_for_trial(&ex.echo, &ex.target)?;
                sums[m][s] += rmse(&img, &ex.target)?;
            }
        }
    }
    let rmse = sums.into_iter().map(|row| row.into_iter().map(|v| v / trials as f64).collect()).collect();
    Ok(EvalReport {
        methods: methods.iter().map(|m| m.name().to_string()).collect(),
        snr_db: snr_db.to_vec(),
        trials,
        seed,
        rmse,
        timing: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rmse_basics() {
        let a = ImageReal::from_values(2, 1, vec![1.0, 1.0], 0).unwrap();
        let z = ImageReal::from_values(2, 1, vec![0.0, 0.0], 0).unwrap();
        assert_eq!(rmse(&a, &a).unwrap(), 0.0);
        assert_eq!(rmse(&z, &a).unwrap(), 1.0);
        let c = ImageReal::from_values(1, 1, vec![0.0], 0).unwrap();
        assert!(rmse(&a, &c).is_err());
    }

    #[test]
    fn ms_stats() {
        let s = MsStats::of(&[Duration::from_millis(1), Duration::from_millis(3)]);
        assert!((s.mean - 2.0).abs() < 1e-12);
        assert!((s.std - 2f64.sqrt()).abs() < 1e-12);
    }
}

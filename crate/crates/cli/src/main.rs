use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use cvradar_core::config::{Config, Preset};
use cvradar_core::echo::EchoMatrix;
use cvradar_core::eval::{self, Cnn, Imager, Ista, MatchedFilter};
use cvradar_core::io;
use cvradar_core::nn::{Checkpoint, NetworkKind};
use cvradar_core::operators::{IstaOptions, OperatorPlan};
use cvradar_core::train::{self, make_dataset, Dataset, TrainOptions};

#[derive(Parser)]
#[command(
    name = "cvradar",
    version,
    about = "Turntable radar imaging with complex-valued CNNs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct ConfigArgs {
    /// TOML configuration file.
    #[arg(long, conflicts_with = "preset")]
    config: Option<PathBuf>,
    /// Built-in configuration to use without a file.
    #[arg(long, value_enum)]
    preset: Option<PresetArg>,
    /// Overrides the configured seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Paper,
    Desk,
}

#[derive(Clone, Copy, ValueEnum)]
enum KindArg {
    Cv,
    Rv,
}

impl From<KindArg> for NetworkKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Cv => NetworkKind::Complex,
            KindArg::Rv => NetworkKind::Real,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Write random scenes, noisy echoes and ground-truth images.
    Generate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Fixed SNR in dB; drawn from the training range when absent.
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long, default_value_t = 1)]
        count: u64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a network, writing a checkpoint after every epoch.
    Train {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long, value_enum, default_value = "cv")]
        kind: KindArg,
        /// Continue from this checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
        /// Output directory for checkpoints and the step log.
        #[arg(long)]
        out: PathBuf,
    },
    /// Image an echo file with a trained network.
    Infer {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// Echo file.
        echo: PathBuf,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Output image; `.pgm` renders, anything else writes the binary image.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 35.0)]
        dynamic_range: f64,
    },
    /// RMSE-versus-SNR sweep and timings.
    Evaluate {
        #[command(flatten)]
        cfg: ConfigArgs,
        /// CV-CNN checkpoint.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        /// RV-CNN checkpoint.
        #[arg(long)]
        rv_checkpoint: Option<PathBuf>,
        /// SNR list in dB; defaults to the configured list.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        snr: Vec<f64>,
        #[arg(long)]
        trials: Option<usize>,
        /// Timed runs per method after warm-up; 0 skips timing.
        #[arg(long, default_value_t = 10)]
        timing_runs: usize,
        #[arg(long)]
        no_ista: bool,
        /// Directory for report.txt, rmse.csv and timing.csv.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render an image file as a log-magnitude grayscale PGM.
    Render {
        image: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 35.0)]
        dynamic_range: f64,
    },
    /// Letter scene imaged by every method, one panel each.
    Demo {
        #[command(flatten)]
        cfg: ConfigArgs,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        rv_checkpoint: PathBuf,
        #[arg(long, default_value = "ISAR")]
        text: String,
        /// Echo SNR in dB; noiseless when absent.
        #[arg(long)]
        snr: Option<f64>,
        #[arg(long, default_value_t = 35.0)]
        dynamic_range: f64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn load_config(args: &ConfigArgs) -> Result<Config> {
    let mut config = match (&args.config, args.preset) {
        (Some(path), _) => Config::load(path)?,
        (None, Some(PresetArg::Paper)) => Config::preset(Preset::Paper),
        (None, Some(PresetArg::Desk)) | (None, None) => Config::preset(Preset::Desk),
    };
    if let Some(seed) = args.seed {
        config.train.seed = seed;
    }
    config.validate()?;
    Ok(config)
}

fn load_checkpoint(path: &Path, kind: NetworkKind) -> Result<Checkpoint> {
    let ckpt = Checkpoint::load(path).with_context(|| format!("loading {}", path.display()))?;
    if ckpt.network.kind != kind {
        bail!(
            "{} holds a {:?} network, expected {:?}",
            path.display(),
            ckpt.network.kind,
            kind
        );
    }
    Ok(ckpt)
}

fn generate(config: &Config, snr: Option<f64>, count: u64, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let data = make_dataset(config)?;
    for i in 0..count {
        let ex = match snr {
            Some(s) => Dataset::evaluation(config, config.train.seed)?.example_at_snr(i, s, 0)?,
            None => data.example(i)?,
        };
        fs::write(out.join(format!("scene-{i}.txt")), ex.scene.to_text())?;
        io::write_echo(out.join(format!("echo-{i}.echo")), &ex.echo)?;
        io::write_real_image(out.join(format!("truth-{i}.img")), &ex.target)?;
        log::info!(
            "example {i}: {} scatterers, snr {:.2} dB",
            ex.scene.scatterers.len(),
            ex.snr_db
        );
    }
    Ok(())
}

fn run_train(config: &Config, kind: NetworkKind, resume: Option<&Path>, out: &Path) -> Result<()> {
    fs::create_dir_all(out)?;
    let plan = OperatorPlan::new(&config.geometry)?;
    let start = match resume {
        Some(p) => load_checkpoint(p, kind)?,
        None => train::initial_checkpoint(kind, config, &plan)?,
    };
    let prefix = match kind {
        NetworkKind::Complex => "cv",
        NetworkKind::Real => "rv",
    };
    let log_path = out.join(format!("{prefix}-train.log"));
    let log_file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(&log_path)?;
    let mut log_writer = BufWriter::new(log_file);
    let run = train::train(
        start,
        config,
        &plan,
        TrainOptions {
            checkpoint_dir: Some(out.to_path_buf()),
            checkpoint_prefix: prefix.into(),
            stop_after_epochs: None,
            log: Some(&mut log_writer),
        },
    )?;
    log_writer.flush()?;
    let final_path = out.join(format!("{prefix}.ckpt"));
    run.state.save(&final_path)?;
    println!(
        "trained {} steps; epoch losses {:?}; wrote {}",
        run.steps.len(),
        run.epoch_losses,
        final_path.display()
    );
    Ok(())
}

fn write_image(img: &cvradar_core::image::ImageReal, out: &Path, dynamic_range: f64) -> Result<()> {
    if out.extension().is_some_and(|e| e == "pgm") {
        if let Some(w) = eval::render(img, dynamic_range, out)? {
            eprintln!("warning: {w}");
        }
    } else {
        io::write_real_image(out, img)?;
    }
    Ok(())
}

fn infer(
    config: &Config,
    echo: &Path,
    checkpoint: &Path,
    out: &Path,
    dynamic_range: f64,
) -> Result<()> {
    let ckpt = Checkpoint::load(checkpoint)
        .with_context(|| format!("loading {}", checkpoint.display()))?;
    let echo: EchoMatrix = io::read_echo(echo)?;
    let geometry = &config.geometry;
    if ckpt.network.geometry_id != geometry.id() {
        bail!(
            "{} was trained for a different imaging geometry than the configured one",
            checkpoint.display()
        );
    }
    let plan = OperatorPlan::new(geometry)?;
    let img = ckpt
        .network
        .prepare(geometry.pixels_y, geometry.pixels_x)?
        .infer(&echo, &plan)?;
    write_image(&img, out, dynamic_range)
}

#[allow(clippy::too_many_arguments)]
fn evaluate(
    config: &Config,
    cv: Option<&Path>,
    rv: Option<&Path>,
    snr: &[f64],
    trials: Option<usize>,
    timing_runs: usize,
    no_ista: bool,
    out: Option<&Path>,
) -> Result<()> {
    let plan = OperatorPlan::new(&config.geometry)?;
    let cv = cv
        .map(|p| load_checkpoint(p, NetworkKind::Complex))
        .transpose()?;
    let rv = rv
        .map(|p| load_checkpoint(p, NetworkKind::Real))
        .transpose()?;
    let mf = MatchedFilter::new(&plan);
    let ista = Ista::new(
        &plan,
        IstaOptions {
            iters: config.eval.ista_iters,
            ..IstaOptions::default()
        },
    );
    let rv_imager = rv
        .as_ref()
        .map(|c| Cnn::new(&c.network, &plan))
        .transpose()?;
    let cv_imager = cv
        .as_ref()
        .map(|c| Cnn::new(&c.network, &plan))
        .transpose()?;
    let mut methods: Vec<&dyn Imager> = vec![&mf];
    if !no_ista {
        methods.push(&ista);
    }
    if let Some(m) = &rv_imager {
        methods.push(m);
    }
    if let Some(m) = &cv_imager {
        methods.push(m);
    }
    let snr = if snr.is_empty() {
        config.eval.snr_db.clone()
    } else {
        snr.to_vec()
    };
    let trials = trials.unwrap_or(config.eval.trials);
    let seed = config.train.seed;
    let mut report = eval::sweep(&methods, config, &snr, trials, seed)?;
    if timing_runs > 0 {
        let data = Dataset::evaluation(config, seed)?;
        let echoes = (0..4)
            .map(|i| Ok(data.example_at_snr(i, 0.0, 0)?.echo))
            .collect::<Result<Vec<_>>>()?;
        report.timing = eval::time_methods(&methods, &echoes, timing_runs)?;
    }
    let table = report.to_table();
    print!("{table}");
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("report.txt"), &table)?;
        fs::write(dir.join("rmse.csv"), report.rmse_csv())?;
        fs::write(dir.join("timing.csv"), report.timing_csv())?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Generate {
            cfg,
            snr,
            count,
            out,
        } => generate(&load_config(&cfg)?, snr, count, &out),
        Command::Train {
            cfg,
            kind,
            resume,
            out,
        } => run_train(&load_config(&cfg)?, kind.into(), resume.as_deref(), &out),
        Command::Infer {
            cfg,
            echo,
            checkpoint,
            out,
            dynamic_range,
        } => infer(&load_config(&cfg)?, &echo, &checkpoint, &out, dynamic_range),
        Command::Evaluate {
            cfg,
            checkpoint,
            rv_checkpoint,
            snr,
            trials,
            timing_runs,
            no_ista,
            out,
        } => evaluate(
            &load_config(&cfg)?,
            checkpoint.as_deref(),
            rv_checkpoint.as_deref(),
            &snr,
            trials,
            timing_runs,
            no_ista,
            out.as_deref(),
        ),
        Command::Render {
            image,
            out,
            dynamic_range,
        } => {
            let img = io::read_real_image(&image)?;
            write_image(&img, &out, dynamic_range)
        }
        Command::Demo {
            cfg,
            checkpoint,
            rv_checkpoint,
            text,
            snr,
            dynamic_range,
            out,
        } => {
            let config = load_config(&cfg)?;
            let plan = OperatorPlan::new(&config.geometry)?;
            let cv = load_checkpoint(&checkpoint, NetworkKind::Complex)?;
            let rv = load_checkpoint(&rv_checkpoint, NetworkKind::Real)?;
            let report = eval::demo(
                &config,
                &plan,
                &cv.network,
                &rv.network,
                &text,
                snr.unwrap_or(f64::INFINITY),
                dynamic_range,
                &out,
            )?;
            println!("{:<16} {:>10}  file", "panel", "rmse");
            for p in &report.panels {
                println!("{:<16} {:>10.6}  {}", p.name, p.rmse, p.pgm.display());
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", format!("{e:#}").replace('\n', " "));
            ExitCode::FAILURE
        }
    }
}

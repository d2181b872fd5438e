use std::path::{Path, PathBuf};

use super::letters::letter_scene;
use super::render::render;
use super::{rmse, Cnn, Imager, Ista, MatchedFilter};
use crate::config::Config;
use crate::echo::{add_noise, simulate_echo};
use crate::error::Result;
use crate::image::ImageReal;
use crate::io::write_real_image;
use crate::nn::Network;
use crate::operators::{IstaOptions, OperatorPlan};
use crate::rng;
use crate::scene::render_ground_truth;

#[derive(Debug, Clone, PartialEq)]
pub struct DemoPanel {
    pub name: String,
    pub pgm: PathBuf,
    pub image: PathBuf,
    /// RMSE against the ground-truth panel.
    pub rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemoReport {
    pub text: String,
    pub scatterers: usize,
    pub panels: Vec<DemoPanel>,
}

impl DemoReport {
    pub fn panel(&self, name: &str) -> Option<&DemoPanel> {
        self.panels.iter().find(|p| p.name == name)
    }
}

/// Images the letter scene `text` with every method and writes one PGM and
/// one binary image per panel into `out_dir`: matched filter, ISTA, RV-CNN,
/// CV-CNN and ground truth.
#[allow(clippy::too_many_arguments)]
pub fn demo(
    config: &Config,
    plan: &OperatorPlan,
    cv: &Network,
    rv: &Network,
    text: &str,
    snr_db: f64,
    dynamic_range_db: f64,
    out_dir: &Path,
) -> Result<DemoReport> {
    let geom = &config.geometry;
    let scene = letter_scene(text, geom)?;
    let clean = simulate_echo(&scene, geom);
    let echo = add_noise(&clean, snr_db, &mut rng::stream(config.train.seed, "demo", 0, 0))?;
    let truth = render_ground_truth(&scene, geom);
    let ista_opts = IstaOptions { iters: config.eval.ista_iters, ..IstaOptions::default() };
    let mf = MatchedFilter::new(plan);
    let ista = Ista::new(plan, ista_opts);
    let rv = Cnn::new(rv, plan)?;
    let cv = Cnn::new(cv, plan)?;
    let methods: [&dyn Imager; 4] = [&mf, &ista, &rv, &cv];

    std::fs::create_dir_all(out_dir)?;
    let mut panels = Vec::with_capacity(5);
    let mut emit = |name: &str, img: &ImageReal| -> Result<()> {
        let pgm = out_dir.join(format!("{name}.pgm"));
        let bin = out_dir.join(format!("{name}.img"));
        render(img, dynamic_range_db, &pgm)?;
        write_real_image(&bin, img)?;
        panels.push(DemoPanel { name: name.to_string(), pgm, image: bin, rmse: rmse(img, &truth)? });
        Ok(())
    };
    for m in methods {
        let img = m.image(&echo)?;
        emit(m.name(), &img)?;
    }
    emit("ground-truth", &truth)?;
    Ok(DemoReport { text: text.to_string(), scatterers: scene.scatterers.len(), panels })
}

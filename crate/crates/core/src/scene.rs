//! Point-scatterer scenes and their Gaussian-PSF ground-truth images.

use std::fmt::Write as _;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::ImagingGeometry;
use crate::image::ImageReal;

/// An ideal point scatterer at a continuous (off-grid) position.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scatterer {
    pub x: f64,
    pub y: f64,
    pub amp: Complex64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub scatterers: Vec<Scatterer>,
    pub geometry_id: u64,
}

impl Scene {
    pub fn new(scatterers: Vec<Scatterer>, geom: &ImagingGeometry) -> Self {
        Self { scatterers, geometry_id: geom.id() }
    }

    /// Scene with every amplitude multiplied by `factor`.
    pub fn scaled(&self, factor: Complex64) -> Self {
        Self {
            scatterers: self
                .scatterers
                .iter()
                .map(|s| Scatterer { amp: s.amp * factor, ..*s })
                .collect(),
            geometry_id: self.geometry_id,
        }
    }

    pub fn check_geometry(&self, geom: &ImagingGeometry) -> Result<()> {
        let id = geom.id();
        if self.geometry_id != id {
            return Err(Error::GeometryMismatch { expected: id, found: self.geometry_id });
        }
        Ok(())
    }

    /// One scatterer per line: `x y re im`, preceded by a comment header.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# cvradar scene v1 geometry={:016x}", self.geometry_id);
        let _ = writeln!(out, "# x_m y_m re im");
        for s in &self.scatterers {
            let _ = writeln!(out, "{:e} {:e} {:e} {:e}", s.x, s.y, s.amp.re, s.amp.im);
        }
        out
    }

    /// Parses the text form. Blank lines and `#` comments are skipped; the
    /// scene is bound to `geom`.
    pub fn from_text(text: &str, geom: &ImagingGeometry) -> Result<Self> {
        let mut scatterers = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<f64> = line
                .split(|c: char| c.is_whitespace() || c == ',')
                .filter(|f| !f.is_empty())
                .map(str::parse)
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Format(format!("scene line {}: {e}", lineno + 1)))?;
            if fields.len() != 4 {
                return Err(Error::Format(format!(
                    "scene line {}: expected 4 fields, found {}",
                    lineno + 1,
                    fields.len()
                )));
            }
            scatterers.push(Scatterer {
                x: fields[0],
                y: fields[1],
                amp: Complex64::new(fields[2], fields[3]),
            });
        }
        Ok(Scene::new(scatterers, geom))
    }
}

/// Draws `n_scatterers` positions uniformly over the imaging region and
/// amplitudes as `N(0,1) + j N(0,1)`.
pub fn generate_scene<R: Rng + ?Sized>(geom: &ImagingGeometry, n_scatterers: usize, rng: &mut R) -> Scene {
    let hx = 0.5 * geom.region_x;
    let hy = 0.5 * geom.region_y;
    let scatterers = (0..n_scatterers)
        .map(|_| {
            let x = rng.gen_range(-hx..=hx);
            let y = rng.gen_range(-hy..=hy);
            let re: f64 = StandardNormal.sample(rng);
            let im: f64 = StandardNormal.sample(rng);
            Scatterer { x, y, amp: Complex64::new(re, im) }
        })
        .collect();
    Scene::new(scatterers, geom)
}

/// `O(x_p, y_q) = sum_i |amp_i| exp(-(x_p - x_i)^2 / sigma_x^2 - (y_q - y_i)^2 / sigma_y^2)`
/// at every pixel center, with untruncated tails.
pub fn render_ground_truth(scene: &Scene, geom: &ImagingGeometry) -> ImageReal {
    let mut img = ImageReal::zeros(geom);
    let (w, h) = (geom.pixels_x, geom.pixels_y);
    let mut gx = vec![0.0; w];
    let mut gy = vec![0.0; h];
    let (isx2, isy2) = (1.0 / (geom.sigma_x * geom.sigma_x), 1.0 / (geom.sigma_y * geom.sigma_y));
    for s in &scene.scatterers {
        let a = s.amp.norm();
        if a == 0.0 {
            continue;
        }
        for (p, g) in gx.iter_mut().enumerate() {
            let d = geom.pixel_x(p) - s.x;
            *g = (-d * d * isx2).exp();
        }
        for (q, g) in gy.iter_mut().enumerate() {
            let d = geom.pixel_y(q) - s.y;
            *g = a * (-d * d * isy2).exp();
        }
        for (row, &wy) in img.values.chunks_exact_mut(w).zip(&gy) {
            if wy == 0.0 {
                continue;
            }
            for (v, &wx) in row.iter_mut().zip(&gx) {
                *v += wy * wx;
            }
        }
    }
    img
}

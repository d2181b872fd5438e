use std::path::Path;

use crate::error::{Error, Result};
use crate::image::ImageReal;

/// 8-bit grayscale rendering of an image in decibels relative to its peak.
#[derive(Debug, Clone, PartialEq)]
pub struct Rendered {
    pub width: usize,
    pub height: usize,
    /// Row-major, top row first.
    pub pixels: Vec<u8>,
    pub warning: Option<String>,
}

impl Rendered {
    /// Binary PGM (`P5`) bytes.
    pub fn to_pgm(&self) -> Vec<u8> {
        let mut out = format!("P5\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.pixels);
        out
    }
}

/// `clamp(20 log10(v / vmax), -dr, 0)` mapped linearly onto `0..=255`.
/// Zero maps to the floor.
pub fn intensity(v: f64, vmax: f64, dynamic_range_db: f64) -> u8 {
    if v <= 0.0 || vmax <= 0.0 {
        return 0;
    }
    let db = (20.0 * (v / vmax).log10()).clamp(-dynamic_range_db, 0.0);
    (255.0 * (db + dynamic_range_db) / dynamic_range_db).round() as u8
}

/// Log-magnitude display. Image row 0 (lowest y) ends up at the bottom.
pub fn render_pgm(image: &ImageReal, dynamic_range_db: f64) -> Result<Rendered> {
    if !(dynamic_range_db.is_finite() && dynamic_range_db > 0.0) {
        return Err(Error::InvalidField { field: "dynamic_range", reason: format!("{dynamic_range_db} must be > 0") });
    }
    if image.values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::InvalidField { field: "image", reason: "values must be finite and non-negative".into() });
    }
    let vmax = image.max();
    let warning = (vmax <= 0.0).then(|| "image is all zero; rendered at the floor".to_string());
    let (w, h) = (image.width, image.height);
    let mut pixels = Vec::with_capacity(w * h);
    for r in (0..h).rev() {
        pixels.extend(image.values[r * w..(r + 1) * w].iter().map(|&v| intensity(v, vmax, dynamic_range_db)));
    }
    Ok(Rendered { width: w, height: h, pixels, warning })
}

/// Writes a PGM file and returns the warning, if any.
pub fn render(image: &ImageReal, dynamic_range_db: f64, out: impl AsRef<Path>) -> Result<Option<String>> {
    let r = render_pgm(image, dynamic_range_db)?;
    std::fs::write(out, r.to_pgm())?;
    if let Some(w) = &r.warning {
        log::warn!("{w}");
    }
    Ok(r.warning)
}

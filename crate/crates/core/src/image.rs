//! Pixel grids shared by the simulator, the operators and the networks.
//!
//! Both image types are stored row-major with `pixels_y` rows of `pixels_x`
//! columns; row `q` corresponds to `y_q`, column `p` to `x_p`.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::geometry::ImagingGeometry;

/// Non-negative magnitude image.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageReal {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
    pub geometry_id: u64,
}

impl ImageReal {
    pub fn zeros(geom: &ImagingGeometry) -> Self {
        Self {
            width: geom.pixels_x,
            height: geom.pixels_y,
            values: vec![0.0; geom.pixel_count()],
            geometry_id: geom.id(),
        }
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f64>, geometry_id: u64) -> Result<Self> {
        if values.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {width}x{height} image",
                values.len()
            )));
        }
        Ok(Self { width, height, values, geometry_id })
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.width + col]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Index (row, col) of the largest value; first occurrence wins.
    pub fn argmax(&self) -> (usize, usize) {
        let mut best = 0;
        for (i, &v) in self.values.iter().enumerate() {
            if v > self.values[best] {
                best = i;
            }
        }
        (best / self.width, best % self.width)
    }

    pub fn check_same_dims(&self, other: &ImageReal) -> Result<()> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

/// Complex reflectivity image, e.g. the matched-filter output.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageComplex {
    pub width: usize,
    pub height: usize,
    pub values: Vec<Complex64>,
    pub geometry_id: u64,
}

impl ImageComplex {
    pub fn zeros(geom: &ImagingGeometry) -> Self {
        Self {
            width: geom.pixels_x,
            height: geom.pixels_y,
            values: vec![Complex64::new(0.0, 0.0); geom.pixel_count()],
            geometry_id: geom.id(),
        }
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.values[row * self.width + col]
    }

    pub fn magnitude(&self) -> ImageReal {
        ImageReal {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|v| v.norm()).collect(),
            geometry_id: self.geometry_id,
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Largest pixel magnitude.
    pub fn max_abs(&self) -> f64 {
        self.values.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

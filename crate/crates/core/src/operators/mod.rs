//! The sensing operator `A`, its adjoint (matched-filter imaging), a direct
//! evaluation oracle and an l1 iterative-shrinkage baseline.
//!
//! The fast path treats the polar samples `(k_m, phi_n)` as a rectangular
//! spatial-frequency grid, `k_x = 2 k_m` and `k_y = 2 k_c phi_n`, so the
//! matched filter separates into one transform per axis. Each axis transform
//! is a zero-padded FFT (chirp-z form) evaluated directly on the pixel
//! centers, which keeps `forward_echo` the exact adjoint of `adjoint_image`.
//! The rectangular approximation defocuses scatterers away from the rotation
//! center; that modeling error is kept on purpose and is what
//! [`oracle_adjoint`] measures.

mod czt;
mod ista;
mod oracle;

use num_complex::Complex64;
use rustfft::FftPlanner;

pub use czt::{ChirpZ, UniformAxis};
pub use ista::{ista_reconstruct, IstaOptions, IstaOutput};
pub use oracle::{oracle_adjoint, ORACLE_MAX_TERMS};

use crate::echo::EchoMatrix;
use crate::error::{Error, Result};
use crate::geometry::ImagingGeometry;
use crate::image::ImageComplex;

/// Precomputed transforms for one geometry. Immutable and shareable.
#[derive(Debug, Clone)]
pub struct OperatorPlan {
    geometry: ImagingGeometry,
    geometry_id: u64,
    /// spectral k_x -> image x
    range_fwd: ChirpZ,
    /// spectral k_y -> image y
    cross_fwd: ChirpZ,
    range_adj: ChirpZ,
    cross_adj: ChirpZ,
    scale: f64,
}

impl OperatorPlan {
    pub fn new(geom: &ImagingGeometry) -> Result<Self> {
        geom.validate()?;
        let kc = geom.center_wavenumber();
        let kx = UniformAxis {
            start: 2.0 * geom.wavenumber(0),
            step: 2.0 * (geom.wavenumber(1) - geom.wavenumber(0)),
            len: geom.num_freq,
        };
        let ky = UniformAxis { start: 2.0 * kc * geom.phi_min, step: 2.0 * kc * geom.angle_step(), len: geom.num_angle };
        let xs = UniformAxis { start: geom.pixel_x(0), step: geom.pitch_x(), len: geom.pixels_x };
        let ys = UniformAxis { start: geom.pixel_y(0), step: geom.pitch_y(), len: geom.pixels_y };
        let mut planner = FftPlanner::new();
        let mut plan = Self {
            geometry: geom.clone(),
            geometry_id: geom.id(),
            range_fwd: ChirpZ::new(kx, xs, 1.0, &mut planner),
            cross_fwd: ChirpZ::new(ky, ys, 1.0, &mut planner),
            range_adj: ChirpZ::new(xs, kx, -1.0, &mut planner),
            cross_adj: ChirpZ::new(ys, ky, -1.0, &mut planner),
            scale: 1.0,
        };
        let mut ones = EchoMatrix::zeros(geom);
        ones.values.fill(Complex64::new(1.0, 0.0));
        plan.scale = 1.0 / plan.adjoint_image(&ones)?.max_abs();
        Ok(plan)
    }

    pub fn geometry(&self) -> &ImagingGeometry {
        &self.geometry
    }

    pub fn geometry_id(&self) -> u64 {
        self.geometry_id
    }

    /// Factor applied to the raw matched-filter sum so that a unit scatterer
    /// at the origin images to peak magnitude 1.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    /// Zero-padded transform lengths along (range, cross-range).
    pub fn pad_sizes(&self) -> (usize, usize) {
        (self.range_fwd.pad_len(), self.cross_fwd.pad_len())
    }

    fn scratch(&self) -> Vec<Complex64> {
        let len = [&self.range_fwd, &self.cross_fwd, &self.range_adj, &self.cross_adj]
            .iter()
            .map(|c| c.scratch_len())
            .max()
            .unwrap_or(0);
        vec![Complex64::new(0.0, 0.0); len]
    }

    /// Matched-filter image `A^H y`.
    pub fn adjoint_image(&self, echo: &EchoMatrix) -> Result<ImageComplex> {
        echo.check_geometry(&self.geometry)?;
        let g = &self.geometry;
        let (m_len, n_len, px, py) = (g.num_freq, g.num_angle, g.pixels_x, g.pixels_y);
        let zero = Complex64::new(0.0, 0.0);
        let mut scratch = self.scratch();

        // stage 1: frequency -> x, per angle; result laid out [n][p]
        let mut stage = vec![zero; n_len * px];
        let mut column = vec![zero; m_len];
        for n in 0..n_len {
            for (m, c) in column.iter_mut().enumerate() {
                *c = echo.values[m * n_len + n];
            }
            self.range_fwd.apply(&column, &mut stage[n * px..(n + 1) * px], &mut scratch);
        }

        // stage 2: angle -> y, per x column
        let mut img = ImageComplex::zeros(g);
        let mut line = vec![zero; n_len];
        let mut out = vec![zero; py];
        for p in 0..px {
            for (n, l) in line.iter_mut().enumerate() {
                *l = stage[n * px + p];
            }
            self.cross_fwd.apply(&line, &mut out, &mut scratch);
            for (q, &v) in out.iter().enumerate() {
                img.values[q * px + p] = v * self.scale;
            }
        }
        Ok(img)
    }

    /// Forward model `A x`, the exact adjoint of [`Self::adjoint_image`].
    pub fn forward_echo(&self, image: &ImageComplex) -> Result<EchoMatrix> {
        let g = &self.geometry;
        if image.width != g.pixels_x || image.height != g.pixels_y {
            return Err(Error::DimensionMismatch(format!(
                "image is {}x{}, geometry expects {}x{}",
                image.width, image.height, g.pixels_x, g.pixels_y
            )));
        }
        let (m_len, n_len, px, py) = (g.num_freq, g.num_angle, g.pixels_x, g.pixels_y);
        let zero = Complex64::new(0.0, 0.0);
        let mut scratch = self.scratch();

        // y -> angle, per x column; result laid out [p][n]
        let mut stage = vec![zero; px * n_len];
        let mut col = vec![zero; py];
        for p in 0..px {
            for (q, c) in col.iter_mut().enumerate() {
                *c = image.values[q * px + p];
            }
            self.cross_adj.apply(&col, &mut stage[p * n_len..(p + 1) * n_len], &mut scratch);
        }

        // x -> frequency, per angle
        let mut echo = EchoMatrix::zeros(g);
        let mut line = vec![zero; px];
        let mut out = vec![zero; m_len];
        for n in 0..n_len {
            for (p, l) in line.iter_mut().enumerate() {
                *l = stage[p * n_len + n];
            }
            self.range_adj.apply(&line, &mut out, &mut scratch);
            for (m, &v) in out.iter().enumerate() {
                echo.values[m * n_len + n] = v * self.scale;
            }
        }
        Ok(echo)
    }
}

/// Free-function form of [`OperatorPlan::adjoint_image`].
pub fn adjoint_image(echo: &EchoMatrix, plan: &OperatorPlan) -> Result<ImageComplex> {
    plan.adjoint_image(echo)
}

/// Free-function form of [`OperatorPlan::forward_echo`].
pub fn forward_echo(image: &ImageComplex, plan: &OperatorPlan) -> Result<EchoMatrix> {
    plan.forward_echo(image)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::echo::simulate_echo;
    use crate::scene::{Scatterer, Scene};

    #[test]
    fn origin_scatterer_unit_peak_at_center() {
        let g = ImagingGeometry::desk();
        let plan = OperatorPlan::new(&g).unwrap();
        let e = simulate_echo(&Scene::new(vec![Scatterer { x: 0.0, y: 0.0, amp: 1.0.into() }], &g), &g);
        let img = plan.adjoint_image(&e).unwrap().magnitude();
        assert!((img.max() - 1.0).abs() < 1e-6);
        // even grid: the four pixels around the origin tie
        let (r, c) = img.argmax();
        assert!((31..=32).contains(&r) && (31..=32).contains(&c), "{r} {c}");
    }

    #[test]
    fn zero_in_zero_out() {
        let g = ImagingGeometry::desk();
        let plan = OperatorPlan::new(&g).unwrap();
        assert!(plan.adjoint_image(&EchoMatrix::zeros(&g)).unwrap().values.iter().all(|v| v.norm() == 0.0));
        assert!(plan.forward_echo(&ImageComplex::zeros(&g)).unwrap().values.iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn impulse_has_flat_spectrum() {
        let g = ImagingGeometry::desk();
        let plan = OperatorPlan::new(&g).unwrap();
        let mut img = ImageComplex::zeros(&g);
        img.values[32 * 64 + 32] = 1.0.into();
        let e = plan.forward_echo(&img).unwrap();
        for v in &e.values {
            assert!((v.norm() - plan.scale()).abs() < 1e-12 * plan.scale());
        }
    }

    #[test]
    fn dimension_mismatch_rejected() {
        let g = ImagingGeometry::desk();
        let plan = OperatorPlan::new(&g).unwrap();
        let other = ImagingGeometry { num_freq: 10, ..g.clone() };
        assert!(plan.adjoint_image(&EchoMatrix::zeros(&other)).is_err());
        let other = ImagingGeometry { pixels_x: 10, ..g };
        assert!(plan.forward_echo(&ImageComplex::zeros(&other)).is_err());
    }
}

//! Turntable imaging geometry and the quantities derived from it.
//!
//! Every operator, simulator and network in the crate is parameterised by an
//! [`ImagingGeometry`]. Frequencies and angles are sampled uniformly with both
//! endpoints included; pixel `p` of an axis with extent `R` and `P` pixels sits
//! at `-R/2 + (p + 0.5) R / P`.

use sha2::{Digest, Sha256};
use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Speed of light in vacuum, m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Ratio between the -3 dB width of `exp(-x^2/sigma^2)` and `sigma`.
pub const PSF_RESOLUTION_FACTOR: f64 = 1.18;

#[derive(Debug, Clone, PartialEq)]
pub struct ImagingGeometry {
    /// Lowest probing frequency, Hz.
    pub f_min: f64,
    /// Highest probing frequency, Hz.
    pub f_max: f64,
    pub num_freq: usize,
    /// Rotation angle range, radians.
    pub phi_min: f64,
    pub phi_max: f64,
    pub num_angle: usize,
    /// Imaging region extent in meters, centered on the rotation axis.
    pub region_x: f64,
    pub region_y: f64,
    pub pixels_x: usize,
    pub pixels_y: usize,
    /// Ground-truth PSF widths in meters.
    pub sigma_x: f64,
    pub sigma_y: f64,
}

impl ImagingGeometry {
    /// Table-scale geometry: 213.6-226.4 GHz, -1.68..1.67 deg, 0.7 m, 236 px.
    pub fn paper() -> Self {
        Self {
            f_min: 213.6e9,
            f_max: 226.4e9,
            num_freq: 500,
            phi_min: (-1.68f64).to_radians(),
            phi_max: 1.67f64.to_radians(),
            num_angle: 300,
            region_x: 0.7,
            region_y: 0.7,
            pixels_x: 236,
            pixels_y: 236,
            sigma_x: 0.004,
            sigma_y: 0.004,
        }
    }

    /// Desk-scale geometry: same band, aperture and PSF (so the same
    /// resolutions and super-resolution ratio), 64 x 48 samples and a 64 x 64
    /// grid at 3 mm pitch. The region shrinks so the sampling stays free of
    /// aliasing over it.
    pub fn desk() -> Self {
        Self {
            num_freq: 64,
            num_angle: 48,
            region_x: 0.192,
            region_y: 0.192,
            pixels_x: 64,
            pixels_y: 64,
            ..Self::paper()
        }
    }

    /// Checks every structural invariant, naming the first offending field.
    pub fn validate(&self) -> Result<()> {
        fn bad(field: &'static str, reason: impl Into<String>) -> Result<()> {
            Err(Error::InvalidField { field, reason: reason.into() })
        }
        let finite = [
            ("f_min", self.f_min),
            ("f_max", self.f_max),
            ("phi_min", self.phi_min),
            ("phi_max", self.phi_max),
            ("region_x", self.region_x),
            ("region_y", self.region_y),
            ("sigma_x", self.sigma_x),
            ("sigma_y", self.sigma_y),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return bad(field, "must be finite");
            }
        }
        if self.f_min <= 0.0 {
            return bad("f_min", "must be > 0");
        }
        if self.f_max <= self.f_min {
            return bad("f_max", "must exceed f_min");
        }
        if self.phi_max <= self.phi_min {
            return bad("phi_max", "must exceed phi_min");
        }
        if self.num_freq < 2 {
            return bad("num_freq", "must be >= 2");
        }
        if self.num_angle < 2 {
            return bad("num_angle", "must be >= 2");
        }
        if self.pixels_x < 1 {
            return bad("pixels_x", "must be >= 1");
        }
        if self.pixels_y < 1 {
            return bad("pixels_y", "must be >= 1");
        }
        if self.region_x <= 0.0 {
            return bad("region_x", "must be > 0");
        }
        if self.region_y <= 0.0 {
            return bad("region_y", "must be > 0");
        }
        if self.sigma_x <= 0.0 {
            return bad("sigma_x", "must be > 0");
        }
        if self.sigma_y <= 0.0 {
            return bad("sigma_y", "must be > 0");
        }
        Ok(())
    }

    pub fn freq_step(&self) -> f64 {
        (self.f_max - self.f_min) / (self.num_freq - 1) as f64
    }

    pub fn angle_step(&self) -> f64 {
        (self.phi_max - self.phi_min) / (self.num_angle - 1) as f64
    }

    pub fn frequency(&self, m: usize) -> f64 {
        self.f_min + m as f64 * self.freq_step()
    }

    pub fn angle(&self, n: usize) -> f64 {
        self.phi_min + n as f64 * self.angle_step()
    }

    /// Wavenumber `2 pi f_m / c`.
    pub fn wavenumber(&self, m: usize) -> f64 {
        2.0 * PI * self.frequency(m) / SPEED_OF_LIGHT
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.num_freq).map(|m| self.wavenumber(m)).collect()
    }

    pub fn angles(&self) -> Vec<f64> {
        (0..self.num_angle).map(|n| self.angle(n)).collect()
    }

    pub fn center_frequency(&self) -> f64 {
        0.5 * (self.f_min + self.f_max)
    }

    pub fn center_wavenumber(&self) -> f64 {
        2.0 * PI * self.center_frequency() / SPEED_OF_LIGHT
    }

    pub fn pitch_x(&self) -> f64 {
        self.region_x / self.pixels_x as f64
    }

    pub fn pitch_y(&self) -> f64 {
        self.region_y / self.pixels_y as f64
    }

    /// x coordinate of the center of pixel column `p`.
    pub fn pixel_x(&self, p: usize) -> f64 {
        -0.5 * self.region_x + (p as f64 + 0.5) * self.pitch_x()
    }

    /// y coordinate of the center of pixel row `q`.
    pub fn pixel_y(&self, q: usize) -> f64 {
        -0.5 * self.region_y + (q as f64 + 0.5) * self.pitch_y()
    }

    pub fn pixel_count(&self) -> usize {
        self.pixels_x * self.pixels_y
    }

    pub fn sample_count(&self) -> usize {
        self.num_freq * self.num_angle
    }

    /// Stable 64-bit identifier of this geometry, used to tag files and
    /// checkpoints.
    pub fn id(&self) -> u64 {
        let mut h = Sha256::new();
        h.update(b"cvradar-geometry-v1");
        for v in [
            self.f_min,
            self.f_max,
            self.phi_min,
            self.phi_max,
            self.region_x,
            self.region_y,
            self.sigma_x,
            self.sigma_y,
        ] {
            h.update(v.to_bits().to_le_bytes());
        }
        for n in [self.num_freq, self.num_angle, self.pixels_x, self.pixels_y] {
            h.update((n as u64).to_le_bytes());
        }
        let digest = h.finalize();
        u64::from_le_bytes(digest[..8].try_into().expect("digest is 32 bytes"))
    }
}

/// Conventional and target resolutions of a geometry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DerivedResolution {
    /// `c / (2 B)`, meters.
    pub range_res: f64,
    /// `lambda_center / (2 delta_phi)`, meters.
    pub azimuth_res: f64,
    pub target_res_x: f64,
    pub target_res_y: f64,
    /// `range_res / target_res_x`.
    pub superres_ratio: f64,
}

pub fn derive_resolution(geom: &ImagingGeometry) -> DerivedResolution {
    let range_res = SPEED_OF_LIGHT / (2.0 * (geom.f_max - geom.f_min));
    let lambda_center = SPEED_OF_LIGHT / geom.center_frequency();
    let azimuth_res = lambda_center / (2.0 * (geom.phi_max - geom.phi_min));
    let target_res_x = PSF_RESOLUTION_FACTOR * geom.sigma_x;
    let target_res_y = PSF_RESOLUTION_FACTOR * geom.sigma_y;
    DerivedResolution {
        range_res,
        azimuth_res,
        target_res_x,
        target_res_y,
        superres_ratio: range_res / target_res_x,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_geometry_resolutions() {
        let r = derive_resolution(&ImagingGeometry::paper());
        assert!((r.range_res - 0.0117).abs() < 1e-4, "{}", r.range_res);
        // lambda_c / (2 * 3.35 deg)
        assert!((r.azimuth_res - 0.011_653_217_485).abs() < 1e-11, "{}", r.azimuth_res);
        assert!((r.target_res_x - 0.00472).abs() < 1e-12);
        assert!((r.superres_ratio - 2.5).abs() < 0.05, "{}", r.superres_ratio);
    }

    #[test]
    fn desk_keeps_superres_ratio() {
        let d = derive_resolution(&ImagingGeometry::desk());
        let p = derive_resolution(&ImagingGeometry::paper());
        assert_eq!(d.superres_ratio, p.superres_ratio);
        let g = ImagingGeometry::desk();
        // unambiguous extents of the sampled spectrum cover the region
        let range_extent = SPEED_OF_LIGHT / (2.0 * g.freq_step());
        let cross_extent = PI / (g.center_wavenumber() * g.angle_step());
        assert!(range_extent > g.region_x);
        assert!(cross_extent > g.region_y);
    }

    #[test]
    fn bandwidth_scaling_scales_range_resolution() {
        let g = ImagingGeometry::paper();
        let base = derive_resolution(&g).range_res;
        let s = 1.7;
        let wider = ImagingGeometry { f_max: g.f_min + s * (g.f_max - g.f_min), ..g };
        let scaled = derive_resolution(&wider).range_res;
        assert!((scaled * s - base).abs() <= 1e-15 * base);
    }

    #[test]
    fn derive_is_pure() {
        let g = ImagingGeometry::desk();
        assert_eq!(derive_resolution(&g), derive_resolution(&g));
    }

    #[test]
    fn wavenumbers_increase() {
        let k = ImagingGeometry::paper().wavenumbers();
        assert!(k.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn pixel_centers() {
        let g = ImagingGeometry::desk();
        assert!((g.pixel_x(0) + 0.096 - 0.0015).abs() < 1e-15);
        assert!((g.pixel_x(63) - 0.096 + 0.0015).abs() < 1e-15);
    }

    #[test]
    fn validation_names_field() {
        let g = ImagingGeometry { pixels_x: 0, ..ImagingGeometry::desk() };
        match g.validate() {
            Err(Error::InvalidField { field, .. }) => assert_eq!(field, "pixels_x"),
            other => panic!("unexpected {other:?}"),
        }
        let g = ImagingGeometry { f_max: 1.0, ..ImagingGeometry::desk() };
        assert!(matches!(g.validate(), Err(Error::InvalidField { field: "f_max", .. })));
    }

    #[test]
    fn id_distinguishes_geometries() {
        assert_ne!(ImagingGeometry::paper().id(), ImagingGeometry::desk().id());
        assert_eq!(ImagingGeometry::desk().id(), ImagingGeometry::desk().id());
    }
}

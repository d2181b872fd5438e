//! Turntable echo synthesis and calibrated noise injection.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::geometry::ImagingGeometry;
use crate::scene::Scene;

/// Echo samples over (frequency, angle). Row `m` holds frequency `f_m`,
/// column `n` holds angle `phi_n`; storage is row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct EchoMatrix {
    pub num_freq: usize,
    pub num_angle: usize,
    pub values: Vec<Complex64>,
    pub geometry_id: u64,
}

impl EchoMatrix {
    pub fn zeros(geom: &ImagingGeometry) -> Self {
        Self {
            num_freq: geom.num_freq,
            num_angle: geom.num_angle,
            values: vec![Complex64::new(0.0, 0.0); geom.sample_count()],
            geometry_id: geom.id(),
        }
    }

    #[inline]
    pub fn get(&self, m: usize, n: usize) -> Complex64 {
        self.values[m * self.num_angle + n]
    }

    pub fn mean_power(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>() / self.values.len() as f64
    }

    pub fn check_geometry(&self, geom: &ImagingGeometry) -> Result<()> {
        if self.num_freq != geom.num_freq || self.num_angle != geom.num_angle {
            return Err(Error::DimensionMismatch(format!(
                "echo is {}x{}, geometry expects {}x{}",
                self.num_freq, self.num_angle, geom.num_freq, geom.num_angle
            )));
        }
        Ok(())
    }
}

/// `E(k_m, phi_n) = sum_i amp_i exp(-2j k_m (x_i cos phi_n + y_i sin phi_n))`.
pub fn simulate_echo(scene: &Scene, geom: &ImagingGeometry) -> EchoMatrix {
    let mut echo = EchoMatrix::zeros(geom);
    let ks = geom.wavenumbers();
    let (cos_phi, sin_phi): (Vec<f64>, Vec<f64>) = geom.angles().iter().map(|p| (p.cos(), p.sin())).unzip();
    let n_ang = geom.num_angle;
    let mut proj = vec![0.0; n_ang];
    for s in &scene.scatterers {
        for n in 0..n_ang {
            proj[n] = s.x * cos_phi[n] + s.y * sin_phi[n];
        }
        for (row, &k) in echo.values.chunks_exact_mut(n_ang).zip(&ks) {
            for (v, &r) in row.iter_mut().zip(&proj) {
                let (sn, cs) = (-2.0 * k * r).sin_cos();
                *v += s.amp * Complex64::new(cs, sn);
            }
        }
    }
    echo
}

/// Signal-to-noise ratio in dB; `f64::INFINITY` disables noise.
pub type SnrDb = f64;

/// Adds circular complex Gaussian noise with per-sample variance
/// `P_s / 10^(snr/10)`, `P_s` being the mean per-sample power of `echo`.
pub fn add_noise<R: Rng + ?Sized>(echo: &EchoMatrix, snr_db: SnrDb, rng: &mut R) -> Result<EchoMatrix> {
    if snr_db == f64::INFINITY {
        return Ok(echo.clone());
    }
    let power = echo.mean_power();
    if power == 0.0 {
        return Err(Error::ZeroSignal);
    }
    let sigma = (0.5 * power / 10f64.powf(snr_db / 10.0)).sqrt();
    let mut out = echo.clone();
    for v in &mut out.values {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *v += Complex64::new(sigma * re, sigma * im);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::Scatterer;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn origin_scatterer_is_constant() {
        let g = ImagingGeometry::desk();
        let a = Complex64::new(0.3, -1.2);
        let e = simulate_echo(&Scene::new(vec![Scatterer { x: 0.0, y: 0.0, amp: a }], &g), &g);
        assert!(e.values.iter().all(|&v| v == a));
    }

    #[test]
    fn broadside_column_phase() {
        // phi = 0 is not a sample of the desk grid, so use a symmetric aperture
        let g = ImagingGeometry { phi_min: -0.02, phi_max: 0.02, num_angle: 5, ..ImagingGeometry::desk() };
        assert_eq!(g.angle(2), 0.0);
        let x0 = 0.037;
        let a = Complex64::new(1.5, 0.5);
        let e = simulate_echo(&Scene::new(vec![Scatterer { x: x0, y: 0.0, amp: a }], &g), &g);
        for m in 0..g.num_freq {
            let want = a * Complex64::new(0.0, -2.0 * g.wavenumber(m) * x0).exp();
            assert!((e.get(m, 2) - want).norm() < 1e-12);
        }
    }

    #[test]
    fn infinite_snr_is_identity() {
        let g = ImagingGeometry::desk();
        let e = simulate_echo(&Scene::new(vec![Scatterer { x: 0.01, y: 0.0, amp: 1.0.into() }], &g), &g);
        let out = add_noise(&e, f64::INFINITY, &mut ChaCha8Rng::seed_from_u64(1)).unwrap();
        assert_eq!(out, e);
    }

    #[test]
    fn zero_echo_rejected() {
        let g = ImagingGeometry::desk();
        let e = EchoMatrix::zeros(&g);
        assert!(matches!(add_noise(&e, 0.0, &mut ChaCha8Rng::seed_from_u64(1)), Err(Error::ZeroSignal)));
    }

    #[test]
    fn noise_power_matches_snr() {
        // unit-power echo with 10^6 samples
        let g = ImagingGeometry { num_freq: 1000, num_angle: 1000, ..ImagingGeometry::desk() };
        let e = simulate_echo(&Scene::new(vec![Scatterer { x: 0.0, y: 0.0, amp: 1.0.into() }], &g), &g);
        let noisy = add_noise(&e, 0.0, &mut ChaCha8Rng::seed_from_u64(5)).unwrap();
        let p = noisy.values.iter().zip(&e.values).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>()
            / e.values.len() as f64;
        assert!((p - 1.0).abs() < 0.01, "{p}");
    }

    #[test]
    fn noise_is_seeded() {
        let g = ImagingGeometry::desk();
        let e = simulate_echo(&Scene::new(vec![Scatterer { x: 0.01, y: 0.02, amp: 1.0.into() }], &g), &g);
        let a = add_noise(&e, -5.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        let b = add_noise(&e, -5.0, &mut ChaCha8Rng::seed_from_u64(9)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, e);
    }
}

use num_complex::Complex64;

use crate::echo::EchoMatrix;
use crate::error::{Error, Result};
use crate::geometry::ImagingGeometry;
use crate::image::ImageComplex;

/// Upper bound on `M * N * P` for direct evaluation.
pub const ORACLE_MAX_TERMS: u64 = 100_000_000;

/// Exact matched filter by direct summation,
/// `x(x_p, y_q) = sum_{m,n} E(k_m, phi_n) exp(2j k_m (x_p cos phi_n + y_q sin phi_n))`,
/// without the rectangular-grid approximation. Normalized so that a unit
/// scatterer at the origin images to peak magnitude 1.
pub fn oracle_adjoint(echo: &EchoMatrix, geom: &ImagingGeometry) -> Result<ImageComplex> {
    echo.check_geometry(geom)?;
    let terms = (geom.sample_count() as u64).saturating_mul(geom.pixel_count() as u64);
    if terms > ORACLE_MAX_TERMS {
        return Err(Error::TooLarge { terms, limit: ORACLE_MAX_TERMS });
    }
    let mut ones = EchoMatrix::zeros(geom);
    ones.values.fill(Complex64::new(1.0, 0.0));
    let peak = direct_sum(&ones, geom).max_abs();
    let mut img = direct_sum(echo, geom);
    for v in &mut img.values {
        *v /= peak;
    }
    Ok(img)
}

fn direct_sum(echo: &EchoMatrix, geom: &ImagingGeometry) -> ImageComplex {
    let ks = geom.wavenumbers();
    let phis = geom.angles();
    let (n_len, px) = (geom.num_angle, geom.pixels_x);
    let mn = echo.values.len();
    // per-sample spatial frequencies, row-major over (m, n)
    let mut kx = Vec::with_capacity(mn);
    let mut ky = Vec::with_capacity(mn);
    for &k in &ks {
        for &phi in &phis {
            kx.push(2.0 * k * phi.cos());
            ky.push(2.0 * k * phi.sin());
        }
    }
    // x-phase table laid out [p][mn]
    let mut x_phase = Vec::with_capacity(px * mn);
    for p in 0..px {
        let x = geom.pixel_x(p);
        x_phase.extend(kx.iter().map(|&u| Complex64::from_polar(1.0, u * x)));
    }
    let mut img = ImageComplex::zeros(geom);
    let mut weighted = vec![Complex64::new(0.0, 0.0); mn];
    for q in 0..geom.pixels_y {
        let y = geom.pixel_y(q);
        for ((w, &e), &v) in weighted.iter_mut().zip(&echo.values).zip(&ky) {
            *w = e * Complex64::from_polar(1.0, v * y);
        }
        for p in 0..px {
            let row = &x_phase[p * mn..(p + 1) * mn];
            img.values[q * px + p] = weighted.iter().zip(row).map(|(a, b)| a * b).sum();
        }
    }
    debug_assert_eq!(n_len * ks.len(), mn);
    img
}

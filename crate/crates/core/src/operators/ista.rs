//! Iterative shrinkage-thresholding for `min ||y - A x||^2 + lambda ||x||_1`.
//!
//! `A` is the rectangular-grid forward model at physical amplitude scale
//! (a unit on-grid scatterer produces unit-magnitude echo samples), so the
//! recovered image is in scattering-amplitude units.

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::OperatorPlan;
use crate::echo::EchoMatrix;
use crate::error::{Error, Result};
use crate::image::ImageComplex;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IstaOptions {
    /// Regularization weight; `None` uses `0.05 * ||A^H y||_inf`.
    pub lambda: Option<f64>,
    pub iters: usize,
    /// Power iterations used to estimate `||A^H A||`.
    pub power_iters: usize,
}

impl Default for IstaOptions {
    fn default() -> Self {
        Self { lambda: None, iters: 200, power_iters: 20 }
    }
}

#[derive(Debug, Clone)]
pub struct IstaOutput {
    pub image: ImageComplex,
    /// Objective at the starting point and after every iteration.
    pub objective: Vec<f64>,
    pub lambda: f64,
    /// Lipschitz constant of the data-term gradient.
    pub lipschitz: f64,
}

pub const DEFAULT_LAMBDA_FRACTION: f64 = 0.05;

struct PhysicalOps<'a> {
    plan: &'a OperatorPlan,
    inv_scale: f64,
}

impl PhysicalOps<'_> {
    fn forward(&self, x: &ImageComplex) -> Result<EchoMatrix> {
        let mut e = self.plan.forward_echo(x)?;
        e.values.iter_mut().for_each(|v| *v *= self.inv_scale);
        Ok(e)
    }

    fn adjoint(&self, y: &EchoMatrix) -> Result<ImageComplex> {
        let mut img = self.plan.adjoint_image(y)?;
        img.values.iter_mut().for_each(|v| *v *= self.inv_scale);
        Ok(img)
    }
}

fn l1(x: &ImageComplex) -> f64 {
    x.values.iter().map(|v| v.norm()).sum()
}

/// Largest eigenvalue of `A^H A` by power iteration from a fixed start.
fn normal_operator_norm(ops: &PhysicalOps<'_>, iters: usize) -> Result<f64> {
    let g = ops.plan.geometry();
    let mut rng = ChaCha8Rng::seed_from_u64(0x15_7A);
    let mut x = ImageComplex::zeros(g);
    for v in &mut x.values {
        *v = Complex64::new(StandardNormal.sample(&mut rng), StandardNormal.sample(&mut rng));
    }
    let mut estimate = 0.0;
    for _ in 0..iters.max(1) {
        let n = x.norm();
        x.values.iter_mut().for_each(|v| *v /= n);
        let ax = ops.adjoint(&ops.forward(&x)?)?;
        estimate = ax.norm();
        x = ax;
    }
    Ok(estimate)
}

pub fn ista_reconstruct(echo: &EchoMatrix, plan: &OperatorPlan, opts: IstaOptions) -> Result<IstaOutput> {
    if opts.iters == 0 {
        return Err(Error::InvalidField { field: "iters", reason: "must be >= 1".into() });
    }
    let ops = PhysicalOps { plan, inv_scale: 1.0 / plan.scale() };
    let aty = ops.adjoint(echo)?;
    let lambda = match opts.lambda {
        Some(l) if l > 0.0 => l,
        Some(_) => return Err(Error::InvalidField { field: "lambda", reason: "must be > 0".into() }),
        None => DEFAULT_LAMBDA_FRACTION * aty.max_abs(),
    };
    // gradient of ||y - Ax||^2 is 2 A^H (A x - y)
    let lipschitz = 2.0 * normal_operator_norm(&ops, opts.power_iters)?;
    let step = 1.0 / lipschitz;
    let threshold = step * lambda;

    let mut x = ImageComplex::zeros(plan.geometry());
    let mut objective = Vec::with_capacity(opts.iters + 1);
    for _ in 0..opts.iters {
        let mut residual = ops.forward(&x)?;
        for (r, &y) in residual.values.iter_mut().zip(&echo.values) {
            *r -= y;
        }
        let data: f64 = residual.values.iter().map(|r| r.norm_sqr()).sum();
        objective.push(data + lambda * l1(&x));
        let grad = ops.adjoint(&residual)?;
        for (v, g) in x.values.iter_mut().zip(&grad.values) {
            let z = *v - 2.0 * step * g;
            let mag = z.norm();
            *v = if mag > threshold { z * ((mag - threshold) / mag) } else { Complex64::new(0.0, 0.0) };
        }
    }
    let residual = ops.forward(&x)?;
    let data: f64 = residual.values.iter().zip(&echo.values).map(|(a, y)| (a - y).norm_sqr()).sum();
    objective.push(data + lambda * l1(&x));
    Ok(IstaOutput { image: x, objective, lambda, lipschitz })
}

//! Chirp-z evaluation of separable phase sums via zero-padded FFTs.
//!
//! Computes `y[o] = sum_i v[i] exp(s j (a0 + i da)(b0 + o db))` for
//! `o < n_out` with two length-`L` FFTs, where `L` is the smallest power of
//! two with `L >= n_in + n_out - 1`.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// One-dimensional uniform grid `start + i * step`, `len` points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UniformAxis {
    pub start: f64,
    pub step: f64,
    pub len: usize,
}

#[derive(Clone)]
pub struct ChirpZ {
    n_in: usize,
    n_out: usize,
    pad: usize,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
    kernel_spectrum: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
    ifft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for ChirpZ {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ChirpZ")
            .field("n_in", &self.n_in)
            .field("n_out", &self.n_out)
            .field("pad", &self.pad)
            .finish()
    }
}

fn cis(theta: f64) -> Complex64 {
    let (s, c) = theta.sin_cos();
    Complex64::new(c, s)
}

impl ChirpZ {
    /// `sign` is `+1.0` or `-1.0`, the sign of the exponent.
    pub fn new(input: UniformAxis, output: UniformAxis, sign: f64, planner: &mut FftPlanner<f64>) -> Self {
        let (n_in, n_out) = (input.len, output.len);
        let pad = (n_in + n_out - 1).next_power_of_two();
        let alpha = sign * input.step * output.step;
        let pre = (0..n_in)
            .map(|i| {
                let i = i as f64;
                cis(sign * input.step * output.start * i + 0.5 * alpha * i * i)
            })
            .collect();
        let post = (0..n_out)
            .map(|o| {
                let o = o as f64;
                cis(sign * input.start * (output.start + o * output.step) + 0.5 * alpha * o * o)
            })
            .collect();
        let mut kernel = vec![Complex64::new(0.0, 0.0); pad];
        for d in 0..n_out {
            let d = d as f64;
            kernel[d as usize] = cis(-0.5 * alpha * d * d);
        }
        for d in 1..n_in {
            let df = d as f64;
            kernel[pad - d] = cis(-0.5 * alpha * df * df);
        }
        let fft = planner.plan_fft_forward(pad);
        let ifft = planner.plan_fft_inverse(pad);
        fft.process(&mut kernel);
        let inv = 1.0 / pad as f64;
        for k in &mut kernel {
            *k *= inv;
        }
        Self { n_in, n_out, pad, pre, post, kernel_spectrum: kernel, fft, ifft }
    }

    pub fn pad_len(&self) -> usize {
        self.pad
    }

    pub fn scratch_len(&self) -> usize {
        self.pad + self.fft.get_inplace_scratch_len().max(self.ifft.get_inplace_scratch_len())
    }

    /// Evaluates the sum for `input` into `output`. `scratch` must hold at
    /// least [`Self::scratch_len`] values.
    pub fn apply(&self, input: &[Complex64], output: &mut [Complex64], scratch: &mut [Complex64]) {
        debug_assert_eq!(input.len(), self.n_in);
        debug_assert_eq!(output.len(), self.n_out);
        let (buf, fft_scratch) = scratch.split_at_mut(self.pad);
        for ((b, &v), &w) in buf.iter_mut().zip(input).zip(&self.pre) {
            *b = v * w;
        }
        buf[self.n_in..].fill(Complex64::new(0.0, 0.0));
        self.fft.process_with_scratch(buf, fft_scratch);
        for (b, &k) in buf.iter_mut().zip(&self.kernel_spectrum) {
            *b *= k;
        }
        self.ifft.process_with_scratch(buf, fft_scratch);
        for ((o, &b), &w) in output.iter_mut().zip(buf.iter()).zip(&self.post) {
            *o = b * w;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn direct(v: &[Complex64], a: UniformAxis, b: UniformAxis, sign: f64) -> Vec<Complex64> {
        (0..b.len)
            .map(|o| {
                let bo = b.start + o as f64 * b.step;
                v.iter()
                    .enumerate()
                    .map(|(i, &x)| x * Complex64::new(0.0, sign * (a.start + i as f64 * a.step) * bo).exp())
                    .sum()
            })
            .collect()
    }

    #[test]
    fn matches_direct_sum() {
        let mut planner = FftPlanner::new();
        let a = UniformAxis { start: 8950.0, step: 8.51, len: 37 };
        let b = UniformAxis { start: -0.0945, step: 0.003, len: 29 };
        let v: Vec<Complex64> = (0..a.len).map(|i| Complex64::new((i as f64).sin(), (0.3 * i as f64).cos())).collect();
        for sign in [1.0, -1.0] {
            let czt = ChirpZ::new(a, b, sign, &mut planner);
            let mut out = vec![Complex64::new(0.0, 0.0); b.len];
            let mut scratch = vec![Complex64::new(0.0, 0.0); czt.scratch_len()];
            czt.apply(&v, &mut out, &mut scratch);
            let want = direct(&v, a, b, sign);
            let err: f64 = out.iter().zip(&want).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt();
            let norm: f64 = want.iter().map(|y| y.norm_sqr()).sum::<f64>().sqrt();
            assert!(err < 1e-11 * norm, "{err} vs {norm}");
        }
    }
}

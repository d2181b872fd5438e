//! Zero-padded 2-D FFTs used to evaluate the network convolutions as
//! products of spectra.
//!
//! A plane of `h x w` samples is embedded in an `hp x wp` grid with
//! `hp >= h + kh/2` and `wp >= w + kw/2`, which is enough for a "same"
//! correlation with an odd kernel to come out of a circular convolution
//! without wrap-around. Spectra are stored column-major (`[kx][ky]`).

use std::cell::RefCell;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Smallest `n >= m` whose only prime factors are 2, 3 and 5.
pub(crate) fn smooth_len(m: usize) -> usize {
    let mut n = m.max(1);
    loop {
        let mut r = n;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return n;
        }
        n += 1;
    }
}

pub(crate) struct Fft2 {
    pub h: usize,
    pub w: usize,
    pub hp: usize,
    pub wp: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
    scratch: RefCell<Scratch>,
}

#[derive(Default)]
struct Scratch {
    fft: Vec<Complex64>,
    rows: Vec<Complex64>,
}

impl Fft2 {
    /// Transforms for `h x w` planes and kernels up to `max_kh x max_kw`.
    pub fn new(h: usize, w: usize, max_kh: usize, max_kw: usize) -> Self {
        let hp = smooth_len(h + max_kh / 2);
        let wp = smooth_len(w + max_kw / 2);
        let mut planner = FftPlanner::new();
        let row_fwd = planner.plan_fft_forward(wp);
        let row_inv = planner.plan_fft_inverse(wp);
        let col_fwd = planner.plan_fft_forward(hp);
        let col_inv = planner.plan_fft_inverse(hp);
        let scratch_len = [&row_fwd, &row_inv, &col_fwd, &col_inv]
            .iter()
            .map(|f| f.get_inplace_scratch_len())
            .max()
            .unwrap_or(0);
        let scratch = Scratch { fft: vec![Complex64::default(); scratch_len], rows: Vec::with_capacity(hp * wp) };
        Self { h, w, hp, wp, row_fwd, row_inv, col_fwd, col_inv, scratch: RefCell::new(scratch) }
    }

    pub fn spec_len(&self) -> usize {
        self.hp * self.wp
    }

    /// Row FFTs of `rows` (`n_rows x wp`), transpose into `out`, column FFTs.
    fn finish_forward(&self, rows: &mut [Complex64], n_rows: usize, out: &mut [Complex64], fft_scratch: &mut [Complex64]) {
        self.row_fwd.process_with_scratch(rows, fft_scratch);
        out.fill(Complex64::default());
        for y in 0..n_rows {
            for x in 0..self.wp {
                out[x * self.hp + y] = rows[y * self.wp + x];
            }
        }
        self.col_fwd.process_with_scratch(out, fft_scratch);
    }

    /// Spectrum of one plane. `im` of `None` means a real plane.
    pub fn forward_plane(&self, re: &[f64], im: Option<&[f64]>, out: &mut [Complex64]) {
        let (h, w, wp) = (self.h, self.w, self.wp);
        let mut guard = self.scratch.borrow_mut();
        let Scratch { fft, rows } = &mut *guard;
        rows.clear();
        rows.resize(h * wp, Complex64::default());
        for y in 0..h {
            let dst = &mut rows[y * wp..y * wp + w];
            match im {
                Some(im) => {
                    for (x, d) in dst.iter_mut().enumerate() {
                        *d = Complex64::new(re[y * w + x], im[y * w + x]);
                    }
                }
                None => {
                    for (x, d) in dst.iter_mut().enumerate() {
                        *d = Complex64::new(re[y * w + x], 0.0);
                    }
                }
            }
        }
        self.finish_forward(rows, h, out, fft);
    }

    /// Spectrum of a `kh x kw` correlation kernel, placed so that
    /// multiplying by it performs a "same" cross-correlation.
    pub fn forward_kernel(&self, taps: &[Complex64], kh: usize, kw: usize, out: &mut [Complex64]) {
        let (hp, wp) = (self.hp, self.wp);
        let (ph, pw) = (kh / 2, kw / 2);
        let mut guard = self.scratch.borrow_mut();
        let Scratch { fft, rows } = &mut *guard;
        rows.clear();
        rows.resize(hp * wp, Complex64::default());
        for ky in 0..kh {
            let r = (hp + ph - ky) % hp;
            for kx in 0..kw {
                let c = (wp + pw - kx) % wp;
                rows[r * wp + c] = taps[ky * kw + kx];
            }
        }
        self.finish_forward(rows, hp, out, fft);
    }

    /// Column inverse FFTs in place, then row inverse FFTs of the
    /// requested grid rows, scaled by `1/(hp wp)`.
    /// The result is left in the row scratch buffer and handed to `read`.
    fn inverse_rows<T>(
        &self,
        spec: &mut [Complex64],
        rows_wanted: impl Iterator<Item = usize>,
        read: impl FnOnce(&[Complex64]) -> T,
    ) -> T {
        let (hp, wp) = (self.hp, self.wp);
        let mut guard = self.scratch.borrow_mut();
        let Scratch { fft, rows } = &mut *guard;
        self.col_inv.process_with_scratch(spec, fft);
        rows.clear();
        for y in rows_wanted {
            rows.extend((0..wp).map(|x| spec[x * hp + y]));
        }
        self.row_inv.process_with_scratch(rows, fft);
        let s = 1.0 / (hp * wp) as f64;
        rows.iter_mut().for_each(|v| *v *= s);
        read(rows)
    }

    /// Inverse transform cropped to the `h x w` plane. `spec` is clobbered.
    pub fn inverse_plane(&self, spec: &mut [Complex64], re: &mut [f64], im: Option<&mut [f64]>) {
        let (h, w, wp) = (self.h, self.w, self.wp);
        self.inverse_rows(spec, 0..h, |rows| {
            for y in 0..h {
                for x in 0..w {
                    re[y * w + x] = rows[y * wp + x].re;
                }
            }
            if let Some(im) = im {
                for y in 0..h {
                    for x in 0..w {
                        im[y * w + x] = rows[y * wp + x].im;
                    }
                }
            }
        })
    }

    /// Inverse transform sampled at the kernel tap positions used by
    /// [`Fft2::forward_kernel`], returned as `[ky][kx]`. `spec` is clobbered.
    pub fn inverse_kernel(&self, spec: &mut [Complex64], kh: usize, kw: usize) -> Vec<Complex64> {
        let (hp, wp) = (self.hp, self.wp);
        let (ph, pw) = (kh / 2, kw / 2);
        self.inverse_rows(spec, (0..kh).map(|ky| (hp + ph - ky) % hp), |rows| {
            let mut taps = Vec::with_capacity(kh * kw);
            for ky in 0..kh {
                for kx in 0..kw {
                    taps.push(rows[ky * wp + (wp + pw - kx) % wp]);
                }
            }
            taps
        })
    }
}

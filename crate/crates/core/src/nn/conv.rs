//! Direct "same"-padded 2-D cross-correlation for complex and real tensors.
//!
//! Weights are indexed `[out][in][ky][kx]`. Complex weights and biases are
//! stored interleaved `(re, im)`. Every kernel walks output rows and kernel
//! taps in a fixed order, so results are bit-reproducible.

use super::tensor::{ComplexTensor, RealTensor};

/// Kernel geometry shared by all conv kernels.
#[derive(Debug, Clone, Copy)]
pub(crate) struct ConvShape {
    pub in_c: usize,
    pub out_c: usize,
    pub kh: usize,
    pub kw: usize,
}

impl ConvShape {
    #[inline]
    fn tap(&self, o: usize, i: usize, ky: usize, kx: usize) -> usize {
        ((o * self.in_c + i) * self.kh + ky) * self.kw + kx
    }
}

/// Output columns computed per register tile.
const BLOCK: usize = 8;

/// Zero-padded copy of a stack of planes: `pad_y` rows above and below,
/// `pad_x` columns left, and enough columns right for whole column blocks.
struct Padded {
    data: Vec<f64>,
    rows: usize,
    cols: usize,
}

impl Padded {
    fn new(src: &[f64], channels: usize, h: usize, w: usize, pad_y: usize, pad_x: usize) -> Self {
        let rows = h + 2 * pad_y;
        let cols = w.div_ceil(BLOCK) * BLOCK + 2 * pad_x;
        let mut data = vec![0.0; channels * rows * cols];
        for c in 0..channels {
            for y in 0..h {
                let dst = (c * rows + y + pad_y) * cols + pad_x;
                data[dst..dst + w].copy_from_slice(&src[(c * h + y) * w..(c * h + y + 1) * w]);
            }
        }
        Self { data, rows, cols }
    }

    #[inline]
    fn row(&self, c: usize, r: usize) -> &[f64] {
        let start = (c * self.rows + r) * self.cols;
        &self.data[start..start + self.cols]
    }
}

/// Complex "same" correlation of `(in_re, in_im)` with interleaved weights
/// `w[o][i][ky][kx]`, writing `out_c` planes.
#[allow(clippy::too_many_arguments)]
fn complex_correlate(
    in_re: &[f64],
    in_im: &[f64],
    h: usize,
    wd: usize,
    w: &[f64],
    b: &[f64],
    s: ConvShape,
    out_re: &mut [f64],
    out_im: &mut [f64],
) {
    let (ph, pw) = (s.kh / 2, s.kw / 2);
    let pr = Padded::new(in_re, s.in_c, h, wd, ph, pw);
    let pi = Padded::new(in_im, s.in_c, h, wd, ph, pw);
    let hw = h * wd;
    for o in 0..s.out_c {
        for y in 0..h {
            for xb in (0..wd).step_by(BLOCK) {
                let mut acc_r = [b[2 * o]; BLOCK];
                let mut acc_i = [b[2 * o + 1]; BLOCK];
                for i in 0..s.in_c {
                    for ky in 0..s.kh {
                        let row_r = pr.row(i, y + ky);
                        let row_i = pi.row(i, y + ky);
                        let taps = &w[2 * s.tap(o, i, ky, 0)..2 * s.tap(o, i, ky, 0) + 2 * s.kw];
                        for kx in 0..s.kw {
                            let (wr, wi) = (taps[2 * kx], taps[2 * kx + 1]);
                            let sr: &[f64; BLOCK] = row_r[xb + kx..xb + kx + BLOCK].try_into().expect("block");
                            let si: &[f64; BLOCK] = row_i[xb + kx..xb + kx + BLOCK].try_into().expect("block");
                            for l in 0..BLOCK {
                                acc_r[l] += wr * sr[l] - wi * si[l];
                                acc_i[l] += wr * si[l] + wi * sr[l];
                            }
                        }
                    }
                }
                let n = BLOCK.min(wd - xb);
                let base = o * hw + y * wd + xb;
                out_re[base..base + n].copy_from_slice(&acc_r[..n]);
                out_im[base..base + n].copy_from_slice(&acc_i[..n]);
            }
        }
    }
}

pub(crate) fn complex_forward(input: &ComplexTensor, w: &[f64], b: &[f64], s: ConvShape) -> ComplexTensor {
    let (h, wd) = (input.height, input.width);
    let mut out = ComplexTensor::zeros(s.out_c, h, wd);
    complex_correlate(&input.re, &input.im, h, wd, w, b, s, &mut out.re, &mut out.im);
    out
}

fn real_correlate(input: &[f64], h: usize, wd: usize, w: &[f64], b: &[f64], s: ConvShape, out: &mut [f64]) {
    let (ph, pw) = (s.kh / 2, s.kw / 2);
    let p = Padded::new(input, s.in_c, h, wd, ph, pw);
    let hw = h * wd;
    for o in 0..s.out_c {
        for y in 0..h {
            for xb in (0..wd).step_by(BLOCK) {
                let mut acc = [b[o]; BLOCK];
                for i in 0..s.in_c {
                    for ky in 0..s.kh {
                        let row = p.row(i, y + ky);
                        let taps = &w[s.tap(o, i, ky, 0)..s.tap(o, i, ky, 0) + s.kw];
                        for (kx, &wv) in taps.iter().enumerate() {
                            let src: &[f64; BLOCK] = row[xb + kx..xb + kx + BLOCK].try_into().expect("block");
                            for l in 0..BLOCK {
                                acc[l] += wv * src[l];
                            }
                        }
                    }
                }
                let n = BLOCK.min(wd - xb);
                let base = o * hw + y * wd + xb;
                out[base..base + n].copy_from_slice(&acc[..n]);
            }
        }
    }
}

pub(crate) fn real_forward(input: &RealTensor, w: &[f64], b: &[f64], s: ConvShape) -> RealTensor {
    let mut out = RealTensor::zeros(s.out_c, input.height, input.width);
    real_correlate(&input.data, input.height, input.width, w, b, s, &mut out.data);
    out
}

//! Split-complex activations and their derivatives.

use num_complex::Complex64;

use super::tensor::{ComplexTensor, RealTensor};

/// Guard for the magnitude derivative near the origin.
pub const ABS_EPS: f64 = 1e-12;

pub const DEFAULT_LEAKY_SLOPE: f64 = 0.01;

/// Layer activation. For the real-valued network `CRelu` is the plain ReLU
/// and `Abs` combines the two output channels as `sqrt(c1^2 + c2^2)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Activation {
    Identity,
    CRelu,
    LeakyCRelu(f64),
    Abs,
}

impl Activation {
    /// Applies the part-wise activation to one real component.
    #[inline]
    pub fn apply_part(self, v: f64) -> f64 {
        match self {
            Activation::CRelu => v.max(0.0),
            Activation::LeakyCRelu(s) => {
                if v > 0.0 {
                    v
                } else {
                    s * v
                }
            }
            Activation::Identity | Activation::Abs => v,
        }
    }

    /// Derivative of [`Self::apply_part`]; strict `> 0` at the kink.
    #[inline]
    pub fn derivative_part(self, v: f64) -> f64 {
        match self {
            Activation::CRelu => {
                if v > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::LeakyCRelu(s) => {
                if v > 0.0 {
                    1.0
                } else {
                    s
                }
            }
            Activation::Identity | Activation::Abs => 1.0,
        }
    }
}

/// `max(v_R, 0) + j max(v_I, 0)`, elementwise.
pub fn crelu(t: &ComplexTensor) -> ComplexTensor {
    let mut out = t.clone();
    out.re.iter_mut().chain(out.im.iter_mut()).for_each(|v| *v = v.max(0.0));
    out
}

/// Pair of cReLU derivative indicators for one element.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GradMask {
    pub re: bool,
    pub im: bool,
}

/// Indicators `v_R > 0` and `v_I > 0`; zero maps to `false`.
pub fn crelu_grad_mask(t: &ComplexTensor) -> Vec<GradMask> {
    t.re.iter().zip(&t.im).map(|(&r, &i)| GradMask { re: r > 0.0, im: i > 0.0 }).collect()
}

/// Elementwise magnitude of a single-channel tensor.
pub fn abs_activation(t: &ComplexTensor) -> RealTensor {
    RealTensor {
        channels: t.channels,
        height: t.height,
        width: t.width,
        data: t.re.iter().zip(&t.im).map(|(&r, &i)| r.hypot(i)).collect(),
    }
}

/// `(v_R / f, v_I / f)` with `f` floored at [`ABS_EPS`]; `(0, 0)` at the origin.
#[inline]
pub fn abs_grad(v: Complex64, f_o: f64) -> (f64, f64) {
    if v.re == 0.0 && v.im == 0.0 {
        return (0.0, 0.0);
    }
    let d = f_o.max(ABS_EPS);
    (v.re / d, v.im / d)
}

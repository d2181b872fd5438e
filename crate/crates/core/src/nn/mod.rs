//! Complex-valued CNN and its real-valued counterpart, with hand-derived
//! backpropagation.

pub mod activation;
pub mod checkpoint;
mod conv;
pub mod network;
mod spectral;
pub mod tensor;

pub use activation::{abs_activation, abs_grad, crelu, crelu_grad_mask, Activation, GradMask};
pub use checkpoint::{Checkpoint, TrainingProgress};
pub use network::{
    complex_specs, cv_param_count, loss, real_specs, rv_param_count, validate_specs, ConvLayerSpec, ForwardPass,
    GradAccumulator, Gradients, Layer, LayerParams, Network, NetworkKind, PreparedNetwork,
};
pub use tensor::{ComplexTensor, RealTensor};

use crate::error::{Error, Result};

/// One complex "same"-padded convolution, `v[o] = sum_i w[o,i] * f[i] + b[o]`,
/// without the layer activation.
pub fn conv2d_complex(input: &ComplexTensor, layer: &Layer) -> Result<ComplexTensor> {
    let s = layer.spec;
    if input.channels != s.in_channels {
        return Err(Error::DimensionMismatch(format!(
            "layer takes {} channels, input has {}",
            s.in_channels, input.channels
        )));
    }
    let taps = s.out_channels * s.in_channels * s.kernel_h * s.kernel_w;
    if layer.params.weights.len() != 2 * taps || layer.params.bias.len() != 2 * s.out_channels {
        return Err(Error::DimensionMismatch("layer parameters do not match a complex spec".into()));
    }
    Ok(conv::complex_forward(input, &layer.params.weights, &layer.params.bias, s.shape()))
}

/// Real counterpart of [`conv2d_complex`].
pub fn conv2d_real(input: &RealTensor, layer: &Layer) -> Result<RealTensor> {
    let s = layer.spec;
    if input.channels != s.in_channels {
        return Err(Error::DimensionMismatch(format!(
            "layer takes {} channels, input has {}",
            s.in_channels, input.channels
        )));
    }
    let taps = s.out_channels * s.in_channels * s.kernel_h * s.kernel_w;
    if layer.params.weights.len() != taps || layer.params.bias.len() != s.out_channels {
        return Err(Error::DimensionMismatch("layer parameters do not match a real spec".into()));
    }
    Ok(conv::real_forward(input, &layer.params.weights, &layer.params.bias, s.shape()))
}

//! Versioned binary checkpoint container.
//!
//! All integers and floats are little-endian:
//!
//! ```text
//! magic        4 bytes  "CVCK"
//! version      u32      1
//! kind         u32      0 = complex network, 1 = real network
//! geometry_id  u64
//! input_scale  f64
//! epochs_done  u64
//! steps_done   u64
//! config_id    u64      identifier of the training config (0 if none)
//! n_layers     u32
//! per layer:   in u32, out u32, kh u32, kw u32, activation u32, slope f64
//!              (activation: 0 identity, 1 cReLU, 2 leaky cReLU, 3 magnitude)
//! has_momentum u32      0 or 1
//! per layer:   n_weights u64, weights f64 x n, n_bias u64, bias f64 x n
//! if momentum: the same block again for the momentum buffers
//! ```
//!
//! Complex parameters are stored as interleaved `(re, im)` pairs.

use std::path::Path;

use super::activation::Activation;
use super::network::{ConvLayerSpec, Layer, LayerParams, Network, NetworkKind};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"CVCK";
const VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct TrainingProgress {
    pub epochs_done: u64,
    pub steps_done: u64,
    pub config_id: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub network: Network,
    pub momentum: Option<Vec<LayerParams>>,
    pub progress: TrainingProgress,
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() - self.pos < n {
            return Err(Error::Format(format!("checkpoint truncated at byte {}", self.pos)));
        }
        let s = &self.buf[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_bits(self.u64()?))
    }
    fn f64s(&mut self) -> Result<Vec<f64>> {
        let n = self.u64()? as usize;
        if n > (self.buf.len() - self.pos) / 8 {
            return Err(Error::Format(format!("checkpoint array of {n} values exceeds file size")));
        }
        (0..n).map(|_| self.f64()).collect()
    }
}

fn put_f64s(out: &mut Vec<u8>, v: &[f64]) {
    out.extend((v.len() as u64).to_le_bytes());
    for x in v {
        out.extend(x.to_bits().to_le_bytes());
    }
}

fn activation_code(a: Activation) -> (u32, f64) {
    match a {
        Activation::Identity => (0, 0.0),
        Activation::CRelu => (1, 0.0),
        Activation::LeakyCRelu(s) => (2, s),
        Activation::Abs => (3, 0.0),
    }
}

impl Checkpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let net = &self.network;
        let mut out = Vec::new();
        out.extend(MAGIC);
        out.extend(VERSION.to_le_bytes());
        out.extend(match net.kind {
            NetworkKind::Complex => 0u32,
            NetworkKind::Real => 1u32,
        }
        .to_le_bytes());
        out.extend(net.geometry_id.to_le_bytes());
        out.extend(net.input_scale.to_bits().to_le_bytes());
        out.extend(self.progress.epochs_done.to_le_bytes());
        out.extend(self.progress.steps_done.to_le_bytes());
        out.extend(self.progress.config_id.to_le_bytes());
        out.extend((net.layers.len() as u32).to_le_bytes());
        for layer in &net.layers {
            let s = layer.spec;
            for v in [s.in_channels, s.out_channels, s.kernel_h, s.kernel_w] {
                out.extend((v as u32).to_le_bytes());
            }
            let (code, slope) = activation_code(s.activation);
            out.extend(code.to_le_bytes());
            out.extend(slope.to_bits().to_le_bytes());
        }
        out.extend(u32::from(self.momentum.is_some()).to_le_bytes());
        for layer in &net.layers {
            put_f64s(&mut out, &layer.params.weights);
            put_f64s(&mut out, &layer.params.bias);
        }
        if let Some(m) = &self.momentum {
            for p in m {
                put_f64s(&mut out, &p.weights);
                put_f64s(&mut out, &p.bias);
            }
        }
        out
    }

    pub fn from_bytes(buf: &[u8]) -> Result<Self> {
        let mut r = Reader { buf, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::Format("not a checkpoint (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Format(format!("unsupported checkpoint version {version}")));
        }
        let kind = match r.u32()? {
            0 => NetworkKind::Complex,
            1 => NetworkKind::Real,
            k => return Err(Error::Format(format!("unknown network kind {k}"))),
        };
        let geometry_id = r.u64()?;
        let input_scale = r.f64()?;
        let progress = TrainingProgress { epochs_done: r.u64()?, steps_done: r.u64()?, config_id: r.u64()? };
        let n_layers = r.u32()? as usize;
        if n_layers > 4096 {
            return Err(Error::Format(format!("implausible layer count {n_layers}")));
        }
        let mut specs = Vec::with_capacity(n_layers);
        for _ in 0..n_layers {
            let in_channels = r.u32()? as usize;
            let out_channels = r.u32()? as usize;
            let kernel_h = r.u32()? as usize;
            let kernel_w = r.u32()? as usize;
            let code = r.u32()?;
            let slope = r.f64()?;
            let activation = match code {
                0 => Activation::Identity,
                1 => Activation::CRelu,
                2 => Activation::LeakyCRelu(slope),
                3 => Activation::Abs,
                c => return Err(Error::Format(format!("unknown activation code {c}"))),
            };
            specs.push(ConvLayerSpec { in_channels, out_channels, kernel_h, kernel_w, activation });
        }
        let has_momentum = match r.u32()? {
            0 => false,
            1 => true,
            v => return Err(Error::Format(format!("bad momentum flag {v}"))),
        };
        let mut layers = Vec::with_capacity(n_layers);
        for spec in specs {
            let weights = r.f64s()?;
            let bias = r.f64s()?;
            layers.push(Layer { spec, params: LayerParams { weights, bias } });
        }
        let momentum = if has_momentum {
            let mut m = Vec::with_capacity(n_layers);
            for _ in 0..n_layers {
                let weights = r.f64s()?;
                let bias = r.f64s()?;
                m.push(LayerParams { weights, bias });
            }
            Some(m)
        } else {
            None
        };
        if r.pos != buf.len() {
            return Err(Error::Format(format!("{} trailing bytes in checkpoint", buf.len() - r.pos)));
        }
        let network = Network { kind, layers, input_scale, geometry_id };
        network.validate()?;
        if let Some(m) = &momentum {
            for (l, (p, layer)) in m.iter().zip(&network.layers).enumerate() {
                if p.weights.len() != layer.params.weights.len() || p.bias.len() != layer.params.bias.len() {
                    return Err(Error::Format(format!("momentum shape mismatch in layer {l}")));
                }
            }
        }
        Ok(Self { network, momentum, progress })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&std::fs::read(path)?)
    }
}

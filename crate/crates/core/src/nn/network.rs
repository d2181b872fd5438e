//! Layer topology, parameters and the forward/backward passes of the
//! complex-valued network and its real-valued counterpart.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::activation::{abs_grad, Activation};
use super::conv::ConvShape;
use super::spectral::Fft2;
use super::tensor::ComplexTensor;
use crate::echo::EchoMatrix;
use crate::error::{Error, Result};
use crate::image::{ImageComplex, ImageReal};
use crate::operators::OperatorPlan;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NetworkKind {
    /// Complex weights, split-complex activations, magnitude output neuron.
    Complex,
    /// Real and imaginary parts as two real channels, ReLU, two-channel
    /// magnitude output.
    Real,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConvLayerSpec {
    pub in_channels: usize,
    pub out_channels: usize,
    pub kernel_h: usize,
    pub kernel_w: usize,
    pub activation: Activation,
}

impl ConvLayerSpec {
    pub fn new(in_channels: usize, out_channels: usize, kernel: usize, activation: Activation) -> Self {
        Self { in_channels, out_channels, kernel_h: kernel, kernel_w: kernel, activation }
    }

    pub(crate) fn shape(&self) -> ConvShape {
        ConvShape { in_c: self.in_channels, out_c: self.out_channels, kh: self.kernel_h, kw: self.kernel_w }
    }

    fn taps(&self) -> usize {
        self.out_channels * self.in_channels * self.kernel_h * self.kernel_w
    }
}

/// Trainable parameters of one layer, flattened to real components.
/// Complex layers interleave `(re, im)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub weights: Vec<f64>,
    pub bias: Vec<f64>,
}

impl LayerParams {
    pub fn zeros_like(other: &LayerParams) -> Self {
        Self { weights: vec![0.0; other.weights.len()], bias: vec![0.0; other.bias.len()] }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Layer {
    pub spec: ConvLayerSpec,
    pub params: LayerParams,
}

/// Network topology and weights. The matched-filter stage in front of the
/// first layer is fixed and carries no parameters; its output is divided by
/// `input_scale` before the first convolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    pub kind: NetworkKind,
    pub layers: Vec<Layer>,
    pub input_scale: f64,
    pub geometry_id: u64,
}

/// Per-layer caches recorded by the forward pass: input spectra and
/// pre-activation values.
#[derive(Debug, Clone)]
struct LayerCaches {
    input_spectra: Vec<Vec<Complex64>>,
    pre: Vec<ComplexTensor>,
}

#[derive(Debug, Clone)]
pub struct ForwardPass {
    pub output: ImageReal,
    caches: LayerCaches,
}

pub type Gradients = Vec<LayerParams>;

/// Topology used by both presets: `hidden_layers` activated layers of width
/// `width` followed by the magnitude output layer, all with `kernel` x `kernel`
/// taps.
pub fn complex_specs(width: usize, hidden_layers: usize, kernel: usize, activation: Activation) -> Vec<ConvLayerSpec> {
    let mut specs = Vec::with_capacity(hidden_layers + 1);
    let mut in_c = 1;
    for _ in 0..hidden_layers {
        specs.push(ConvLayerSpec::new(in_c, width, kernel, activation));
        in_c = width;
    }
    specs.push(ConvLayerSpec::new(in_c, 1, kernel, Activation::Abs));
    specs
}

pub fn real_specs(width: usize, hidden_layers: usize, kernel: usize, activation: Activation) -> Vec<ConvLayerSpec> {
    let mut specs = Vec::with_capacity(hidden_layers + 1);
    let mut in_c = 2;
    for _ in 0..hidden_layers {
        specs.push(ConvLayerSpec::new(in_c, width, kernel, activation));
        in_c = width;
    }
    specs.push(ConvLayerSpec::new(in_c, 2, kernel, Activation::Abs));
    specs
}

/// Real degrees of freedom of a complex network; each complex value counts twice.
pub fn cv_param_count(specs: &[ConvLayerSpec]) -> usize {
    specs.iter().map(|s| 2 * s.taps() + 2 * s.out_channels).sum()
}

pub fn rv_param_count(specs: &[ConvLayerSpec]) -> usize {
    specs.iter().map(|s| s.taps() + s.out_channels).sum()
}

pub fn validate_specs(kind: NetworkKind, specs: &[ConvLayerSpec]) -> Result<()> {
    let bad = |msg: String| Err(Error::InvalidNetwork(msg));
    if specs.is_empty() {
        return bad("no layers".into());
    }
    let (in0, out_last) = match kind {
        NetworkKind::Complex => (1, 1),
        NetworkKind::Real => (2, 2),
    };
    if specs[0].in_channels != in0 {
        return bad(format!("first layer must take {in0} input channel(s)"));
    }
    for (l, s) in specs.iter().enumerate() {
        if s.kernel_h % 2 == 0 || s.kernel_w % 2 == 0 {
            return bad(format!("layer {l}: kernel {}x{} is not odd", s.kernel_h, s.kernel_w));
        }
        if s.in_channels == 0 || s.out_channels == 0 {
            return bad(format!("layer {l}: zero channels"));
        }
        if l > 0 && s.in_channels != specs[l - 1].out_channels {
            return bad(format!("layer {l}: takes {} channels, previous emits {}", s.in_channels, specs[l - 1].out_channels));
        }
        let last = l + 1 == specs.len();
        match (s.activation, last) {
            (Activation::Abs, false) => return bad(format!("layer {l}: magnitude activation only allowed last")),
            (Activation::Abs, true) if s.out_channels != out_last => {
                return bad(format!("layer {l}: magnitude output needs {out_last} channel(s)"))
            }
            (a, true) if a != Activation::Abs => return bad("last layer must use the magnitude activation".into()),
            (Activation::LeakyCRelu(slope), _) if !(slope.is_finite() && slope >= 0.0) => {
                return bad(format!("layer {l}: invalid leaky slope {slope}"))
            }
            _ => {}
        }
    }
    Ok(())
}

impl Network {
    /// Random initialization: every real weight component is drawn from
    /// `N(0, s^2)` with `s = 1/sqrt(2 fan_in)` for complex layers and
    /// `1/sqrt(fan_in)` for real ones; biases start at zero.
    pub fn init<R: Rng + ?Sized>(
        kind: NetworkKind,
        specs: &[ConvLayerSpec],
        geometry_id: u64,
        input_scale: f64,
        rng: &mut R,
    ) -> Result<Self> {
        validate_specs(kind, specs)?;
        let layers = specs
            .iter()
            .map(|&spec| {
                let fan_in = (spec.in_channels * spec.kernel_h * spec.kernel_w) as f64;
                let (std, comps) = match kind {
                    NetworkKind::Complex => ((0.5 / fan_in).sqrt(), 2),
                    NetworkKind::Real => ((1.0 / fan_in).sqrt(), 1),
                };
                let normal = Normal::new(0.0, std).expect("finite std");
                let weights = (0..comps * spec.taps()).map(|_| normal.sample(rng)).collect();
                let bias = vec![0.0; comps * spec.out_channels];
                Layer { spec, params: LayerParams { weights, bias } }
            })
            .collect();
        Ok(Self { kind, layers, input_scale, geometry_id })
    }

    /// Network with every weight and bias zero.
    pub fn zeros(kind: NetworkKind, specs: &[ConvLayerSpec], geometry_id: u64, input_scale: f64) -> Result<Self> {
        validate_specs(kind, specs)?;
        let comps = if kind == NetworkKind::Complex { 2 } else { 1 };
        let layers = specs
            .iter()
            .map(|&spec| Layer {
                spec,
                params: LayerParams {
                    weights: vec![0.0; comps * spec.taps()],
                    bias: vec![0.0; comps * spec.out_channels],
                },
            })
            .collect();
        Ok(Self { kind, layers, input_scale, geometry_id })
    }

    pub fn specs(&self) -> Vec<ConvLayerSpec> {
        self.layers.iter().map(|l| l.spec).collect()
    }

    pub fn validate(&self) -> Result<()> {
        validate_specs(self.kind, &self.specs())?;
        let comps = if self.kind == NetworkKind::Complex { 2 } else { 1 };
        for (l, layer) in self.layers.iter().enumerate() {
            if layer.params.weights.len() != comps * layer.spec.taps()
                || layer.params.bias.len() != comps * layer.spec.out_channels
            {
                return Err(Error::InvalidNetwork(format!("layer {l}: parameter count does not match spec")));
            }
            if layer.params.weights.iter().chain(&layer.params.bias).any(|v| !v.is_finite()) {
                return Err(Error::InvalidNetwork(format!("layer {l}: non-finite parameter")));
            }
        }
        if !(self.input_scale.is_finite() && self.input_scale > 0.0) {
            return Err(Error::InvalidNetwork(format!("invalid input scale {}", self.input_scale)));
        }
        Ok(())
    }

    pub fn param_count(&self) -> usize {
        match self.kind {
            NetworkKind::Complex => cv_param_count(&self.specs()),
            NetworkKind::Real => rv_param_count(&self.specs()),
        }
    }

    /// Full pipeline from echo: fixed matched filter, then the trainable layers.
    pub fn forward(&self, echo: &EchoMatrix, plan: &OperatorPlan) -> Result<ForwardPass> {
        if plan.geometry_id() != self.geometry_id {
            return Err(Error::GeometryMismatch { expected: self.geometry_id, found: plan.geometry_id() });
        }
        let mf = plan.adjoint_image(echo)?;
        self.forward_image(&mf)
    }

    /// Trainable part only, starting from an unnormalized matched-filter image.
    pub fn forward_image(&self, mf: &ImageComplex) -> Result<ForwardPass> {
        self.prepare(mf.height, mf.width)?.forward_image(mf)
    }

    /// Gradients of `0.5 * sum (target - output)^2` with respect to every
    /// weight and bias component. Nothing flows into the matched filter.
    pub fn backward(&self, pass: &ForwardPass, target: &ImageReal) -> Result<Gradients> {
        let prepared = self.prepare(pass.output.height, pass.output.width)?;
        let mut acc = prepared.accumulator();
        prepared.accumulate(pass, target, &mut acc)?;
        prepared.mean_gradients(&acc)
    }

    /// Precomputes the kernel spectra for `height x width` images. The
    /// result is tied to the current weights.
    pub fn prepare(&self, height: usize, width: usize) -> Result<PreparedNetwork<'_>> {
        self.validate()?;
        if height == 0 || width == 0 {
            return Err(Error::DimensionMismatch("empty image".into()));
        }
        let max_kh = self.layers.iter().map(|l| l.spec.kernel_h).max().unwrap_or(1);
        let max_kw = self.layers.iter().map(|l| l.spec.kernel_w).max().unwrap_or(1);
        let fft = Fft2::new(height, width, max_kh, max_kw);
        let len = fft.spec_len();
        let spectra = self
            .layers
            .iter()
            .map(|layer| {
                let s = layer.spec;
                let k = s.kernel_h * s.kernel_w;
                let mut out = vec![Complex64::default(); s.out_channels * s.in_channels * len];
                for (pair, chunk) in out.chunks_mut(len).enumerate() {
                    let taps: Vec<Complex64> = match self.kind {
                        NetworkKind::Complex => layer.params.weights[2 * pair * k..2 * (pair + 1) * k]
                            .chunks(2)
                            .map(|c| Complex64::new(c[0], c[1]))
                            .collect(),
                        NetworkKind::Real => layer.params.weights[pair * k..(pair + 1) * k]
                            .iter()
                            .map(|&v| Complex64::new(v, 0.0))
                            .collect(),
                    };
                    fft.forward_kernel(&taps, s.kernel_h, s.kernel_w, chunk);
                }
                out
            })
            .collect();
        Ok(PreparedNetwork { net: self, fft, spectra })
    }
}

/// A network with kernel spectra computed for one image size. Valid until
/// the weights change.
pub struct PreparedNetwork<'a> {
    net: &'a Network,
    fft: Fft2,
    /// Per layer, `[out][in]` kernel spectra.
    spectra: Vec<Vec<Complex64>>,
}

/// Gradient sums over a batch, kept as weight spectra until [`GradAccumulator::mean`].
pub struct GradAccumulator {
    weight_spectra: Vec<Vec<Complex64>>,
    bias: Vec<Vec<f64>>,
    examples: usize,
    loss: f64,
    hp: usize,
    wp: usize,
}

impl<'a> PreparedNetwork<'a> {
    pub fn network(&self) -> &'a Network {
        self.net
    }

    fn is_complex(&self) -> bool {
        self.net.kind == NetworkKind::Complex
    }

    pub fn forward(&self, echo: &EchoMatrix, plan: &OperatorPlan) -> Result<ForwardPass> {
        if plan.geometry_id() != self.net.geometry_id {
            return Err(Error::GeometryMismatch { expected: self.net.geometry_id, found: plan.geometry_id() });
        }
        let mf = plan.adjoint_image(echo)?;
        self.forward_image(&mf)
    }

    fn normalized_input(&self, mf: &ImageComplex) -> Result<ComplexTensor> {
        if mf.geometry_id != self.net.geometry_id {
            return Err(Error::GeometryMismatch { expected: self.net.geometry_id, found: mf.geometry_id });
        }
        if (mf.height, mf.width) != (self.fft.h, self.fft.w) {
            return Err(Error::DimensionMismatch(format!(
                "network prepared for {}x{}, image is {}x{}",
                self.fft.h, self.fft.w, mf.height, mf.width
            )));
        }
        let inv = 1.0 / self.net.input_scale;
        Ok(match self.net.kind {
            NetworkKind::Complex => {
                let vals: Vec<Complex64> = mf.values.iter().map(|v| v * inv).collect();
                ComplexTensor::from_complex(1, mf.height, mf.width, &vals)?
            }
            NetworkKind::Real => {
                let mut x = ComplexTensor::zeros(2, mf.height, mf.width);
                let hw = mf.values.len();
                for (k, v) in mf.values.iter().enumerate() {
                    x.re[k] = v.re * inv;
                    x.re[hw + k] = v.im * inv;
                }
                x
            }
        })
    }

    pub fn forward_image(&self, mf: &ImageComplex) -> Result<ForwardPass> {
        let x = self.normalized_input(mf)?;
        self.run(x, mf.geometry_id)
    }

    /// Forward pass from an already normalized input: one complex channel
    /// for the complex network, or two real channels (in the real parts)
    /// for the real one.
    pub fn forward_tensor(&self, input: ComplexTensor, geometry_id: u64) -> Result<ForwardPass> {
        let want = self.net.layers[0].spec.in_channels;
        if input.channels != want || (input.height, input.width) != (self.fft.h, self.fft.w) {
            return Err(Error::DimensionMismatch(format!(
                "expected {want}x{}x{} input, got {}x{}x{}",
                self.fft.h, self.fft.w, input.channels, input.height, input.width
            )));
        }
        self.run(input, geometry_id)
    }

    /// Input spectra `xs` and pre-activation output `v` of layer `l`.
    fn layer_forward(&self, l: usize, x: &ComplexTensor, xs: &mut [Complex64], acc: &mut [Complex64], v: &mut ComplexTensor) {
        let layer = &self.net.layers[l];
        let s = layer.spec;
        let (hw, len) = (self.fft.h * self.fft.w, self.fft.spec_len());
        let complex = self.is_complex();
        for (i, chunk) in xs.chunks_mut(len).take(s.in_channels).enumerate() {
            let im = complex.then(|| &x.im[i * hw..(i + 1) * hw]);
            self.fft.forward_plane(&x.re[i * hw..(i + 1) * hw], im, chunk);
        }
        v.channels = s.out_channels;
        v.re.resize(s.out_channels * hw, 0.0);
        v.im.resize(s.out_channels * hw, 0.0);
        for o in 0..s.out_channels {
            acc.fill(Complex64::default());
            for i in 0..s.in_channels {
                let g = &self.spectra[l][(o * s.in_channels + i) * len..][..len];
                let f = &xs[i * len..(i + 1) * len];
                for ((a, gk), fk) in acc.iter_mut().zip(g).zip(f) {
                    *a += gk * fk;
                }
            }
            let re = &mut v.re[o * hw..(o + 1) * hw];
            let im = &mut v.im[o * hw..(o + 1) * hw];
            if complex {
                self.fft.inverse_plane(acc, re, Some(&mut *im));
                let (br, bi) = (layer.params.bias[2 * o], layer.params.bias[2 * o + 1]);
                re.iter_mut().for_each(|p| *p += br);
                im.iter_mut().for_each(|p| *p += bi);
            } else {
                self.fft.inverse_plane(acc, re, None);
                let b = layer.params.bias[o];
                re.iter_mut().for_each(|p| *p += b);
                im.fill(0.0);
            }
        }
    }

    fn magnitude(&self, v: &ComplexTensor, geometry_id: u64) -> Result<ImageReal> {
        let hw = v.plane_len();
        let values: Vec<f64> = if self.is_complex() {
            v.re.iter().zip(&v.im).map(|(&r, &i)| r.hypot(i)).collect()
        } else {
            (0..hw).map(|k| v.re[k].hypot(v.re[hw + k])).collect()
        };
        ImageReal::from_values(v.width, v.height, values, geometry_id)
    }

    fn run(&self, input: ComplexTensor, geometry_id: u64) -> Result<ForwardPass> {
        let (h, w, len) = (self.fft.h, self.fft.w, self.fft.spec_len());
        let n = self.net.layers.len();
        let mut input_spectra = Vec::with_capacity(n);
        let mut pre = Vec::with_capacity(n);
        let mut x = input;
        let mut acc = vec![Complex64::default(); len];
        for (l, layer) in self.net.layers.iter().enumerate() {
            let s = layer.spec;
            let mut xs = vec![Complex64::default(); s.in_channels * len];
            let mut v = ComplexTensor::zeros(s.out_channels, h, w);
            self.layer_forward(l, &x, &mut xs, &mut acc, &mut v);
            input_spectra.push(xs);
            match s.activation {
                Activation::Abs => {
                    let output = self.magnitude(&v, geometry_id)?;
                    pre.push(v);
                    return Ok(ForwardPass { output, caches: LayerCaches { input_spectra, pre } });
                }
                act => {
                    let mut f = v.clone();
                    f.re.iter_mut().chain(f.im.iter_mut()).for_each(|p| *p = act.apply_part(*p));
                    pre.push(v);
                    x = f;
                }
            }
        }
        Err(Error::InvalidNetwork("network has no magnitude output layer".into()))
    }

    /// Output image only. Keeps no backpropagation caches and reuses its
    /// buffers across layers.
    pub fn infer(&self, echo: &EchoMatrix, plan: &OperatorPlan) -> Result<ImageReal> {
        if plan.geometry_id() != self.net.geometry_id {
            return Err(Error::GeometryMismatch { expected: self.net.geometry_id, found: plan.geometry_id() });
        }
        let mf = plan.adjoint_image(echo)?;
        self.infer_image(&mf)
    }

    pub fn infer_image(&self, mf: &ImageComplex) -> Result<ImageReal> {
        let x = self.normalized_input(mf)?;
        let len = self.fft.spec_len();
        let max_in = self.net.layers.iter().map(|l| l.spec.in_channels).max().unwrap_or(1);
        let mut xs = vec![Complex64::default(); max_in * len];
        let mut acc = vec![Complex64::default(); len];
        let (mut x, mut v) = (x, ComplexTensor::zeros(0, self.fft.h, self.fft.w));
        for (l, layer) in self.net.layers.iter().enumerate() {
            self.layer_forward(l, &x, &mut xs, &mut acc, &mut v);
            match layer.spec.activation {
                Activation::Abs => return self.magnitude(&v, mf.geometry_id),
                act => {
                    v.re.iter_mut().chain(v.im.iter_mut()).for_each(|p| *p = act.apply_part(*p));
                    std::mem::swap(&mut x, &mut v);
                }
            }
        }
        Err(Error::InvalidNetwork("network has no magnitude output layer".into()))
    }

    pub fn accumulator(&self) -> GradAccumulator {
        let len = self.fft.spec_len();
        GradAccumulator {
            weight_spectra: self
                .net
                .layers
                .iter()
                .map(|l| vec![Complex64::default(); l.spec.out_channels * l.spec.in_channels * len])
                .collect(),
            bias: self.net.layers.iter().map(|l| vec![0.0; l.params.bias.len()]).collect(),
            examples: 0,
            loss: 0.0,
            hp: self.fft.hp,
            wp: self.fft.wp,
        }
    }

    /// Adds one example's gradients of `0.5 * sum (target - output)^2` to
    /// `acc` and returns its loss. Gradients follow the split-real rules
    /// `dE/dw = sum delta * conj(f)` and `dE/df = sum delta * conj(w)`.
    pub fn accumulate(&self, pass: &ForwardPass, target: &ImageReal, acc: &mut GradAccumulator) -> Result<f64> {
        pass.output.check_same_dims(target)?;
        let LayerCaches { input_spectra, pre } = &pass.caches;
        let n = self.net.layers.len();
        if input_spectra.len() != n || pre.len() != n {
            return Err(Error::InvalidNetwork(format!("forward caches cover {} layers, network has {n}", pre.len())));
        }
        if (acc.hp, acc.wp) != (self.fft.hp, self.fft.wp) || acc.bias.len() != n {
            return Err(Error::DimensionMismatch("accumulator belongs to a different preparation".into()));
        }
        let (h, w) = (self.fft.h, self.fft.w);
        let (hw, len) = (h * w, self.fft.spec_len());
        if pass.output.values.len() != hw || input_spectra.iter().zip(&self.net.layers).any(|(x, l)| x.len() != l.spec.in_channels * len) {
            return Err(Error::DimensionMismatch("forward pass was made for a different image size".into()));
        }
        let complex = self.is_complex();
        let last = n - 1;

        // output error: (f - O) * (v_R / f, v_I / f)
        let v = &pre[last];
        let mut delta = ComplexTensor::zeros(v.channels, h, w);
        for k in 0..hw {
            let f = pass.output.values[k];
            let e = f - target.values[k];
            if complex {
                let (gr, gi) = abs_grad(Complex64::new(v.re[k], v.im[k]), f);
                delta.re[k] = e * gr;
                delta.im[k] = e * gi;
            } else {
                let (g1, g2) = abs_grad(Complex64::new(v.re[k], v.re[hw + k]), f);
                delta.re[k] = e * g1;
                delta.re[hw + k] = e * g2;
            }
        }
        let loss = loss(&pass.output, target)?;

        let mut work = vec![Complex64::default(); len];
        for l in (0..=last).rev() {
            let s = self.net.layers[l].spec;
            let (ic, oc) = (s.in_channels, s.out_channels);
            let mut ds = vec![Complex64::default(); oc * len];
            for (o, chunk) in ds.chunks_mut(len).enumerate() {
                let im = complex.then(|| &delta.im[o * hw..(o + 1) * hw]);
                self.fft.forward_plane(&delta.re[o * hw..(o + 1) * hw], im, chunk);
                let bias = &mut acc.bias[l];
                if complex {
                    bias[2 * o] += delta.re[o * hw..(o + 1) * hw].iter().sum::<f64>();
                    bias[2 * o + 1] += delta.im[o * hw..(o + 1) * hw].iter().sum::<f64>();
                } else {
                    bias[o] += delta.re[o * hw..(o + 1) * hw].iter().sum::<f64>();
                }
            }
            let xs = &input_spectra[l];
            for o in 0..oc {
                let d = &ds[o * len..(o + 1) * len];
                for i in 0..ic {
                    let q = &mut acc.weight_spectra[l][(o * ic + i) * len..][..len];
                    let f = &xs[i * len..(i + 1) * len];
                    for ((qk, dk), fk) in q.iter_mut().zip(d).zip(f) {
                        *qk += dk * fk.conj();
                    }
                }
            }
            if l == 0 {
                break;
            }
            let mut eps = ComplexTensor::zeros(ic, h, w);
            for i in 0..ic {
                work.fill(Complex64::default());
                for o in 0..oc {
                    let g = &self.spectra[l][(o * ic + i) * len..][..len];
                    let d = &ds[o * len..(o + 1) * len];
                    for ((a, gk), dk) in work.iter_mut().zip(g).zip(d) {
                        *a += gk.conj() * dk;
                    }
                }
                let re = &mut eps.re[i * hw..(i + 1) * hw];
                let im = complex.then_some(&mut eps.im[i * hw..(i + 1) * hw]);
                self.fft.inverse_plane(&mut work, re, im);
            }
            let act = self.net.layers[l - 1].spec.activation;
            let v = &pre[l - 1];
            for (e, &p) in eps.re.iter_mut().zip(&v.re) {
                *e *= act.derivative_part(p);
            }
            if complex {
                for (e, &p) in eps.im.iter_mut().zip(&v.im) {
                    *e *= act.derivative_part(p);
                }
            }
            delta = eps;
        }
        acc.examples += 1;
        acc.loss += loss;
        Ok(loss)
    }

    /// Batch mean of the accumulated gradients.
    pub fn mean_gradients(&self, acc: &GradAccumulator) -> Result<Gradients> {
        if (acc.hp, acc.wp) != (self.fft.hp, self.fft.wp) {
            return Err(Error::DimensionMismatch("accumulator belongs to a different preparation".into()));
        }
        Ok(acc.mean_with(&self.fft, self.net))
    }
}

impl GradAccumulator {
    pub fn examples(&self) -> usize {
        self.examples
    }

    /// Sum of the per-example losses.
    pub fn loss_sum(&self) -> f64 {
        self.loss
    }

    fn mean_with(&self, fft: &Fft2, net: &Network) -> Gradients {
        let len = fft.spec_len();
        let scale = if self.examples == 0 { 0.0 } else { 1.0 / self.examples as f64 };
        let complex = net.kind == NetworkKind::Complex;
        net.layers
            .iter()
            .enumerate()
            .map(|(l, layer)| {
                let s = layer.spec;
                let mut weights = Vec::with_capacity(layer.params.weights.len());
                for pair in 0..s.out_channels * s.in_channels {
                    let mut spec = self.weight_spectra[l][pair * len..(pair + 1) * len].to_vec();
                    for t in fft.inverse_kernel(&mut spec, s.kernel_h, s.kernel_w) {
                        weights.push(t.re * scale);
                        if complex {
                            weights.push(t.im * scale);
                        }
                    }
                }
                let bias = self.bias[l].iter().map(|b| b * scale).collect();
                LayerParams { weights, bias }
            })
            .collect()
    }
}

/// `0.5 * sum (target - pred)^2`.
pub fn loss(pred: &ImageReal, target: &ImageReal) -> Result<f64> {
    pred.check_same_dims(target)?;
    Ok(0.5 * pred.values.iter().zip(&target.values).map(|(p, t)| (t - p) * (t - p)).sum::<f64>())
}

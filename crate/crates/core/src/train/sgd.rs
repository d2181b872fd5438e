use crate::nn::{LayerParams, Network};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SgdParams {
    pub momentum: f64,
    pub weight_decay: f64,
    /// Rate for every layer but the last.
    pub lr_hidden: f64,
    /// Rate for the output layer.
    pub lr_output: f64,
}

/// Heavy-ball update of every real parameter component:
/// `m <- momentum*m - lr*(g + decay*p); p <- p + m`. Biases get no decay.
pub fn sgd_step(net: &mut Network, grads: &[LayerParams], momentum: &mut [LayerParams], p: &SgdParams) {
    let last = net.layers.len().saturating_sub(1);
    for (l, ((layer, g), m)) in net.layers.iter_mut().zip(grads).zip(momentum.iter_mut()).enumerate() {
        let lr = if l == last { p.lr_output } else { p.lr_hidden };
        for ((w, &gw), mw) in layer.params.weights.iter_mut().zip(&g.weights).zip(m.weights.iter_mut()) {
            *mw = p.momentum * *mw - lr * (gw + p.weight_decay * *w);
            *w += *mw;
        }
        for ((b, &gb), mb) in layer.params.bias.iter_mut().zip(&g.bias).zip(m.bias.iter_mut()) {
            *mb = p.momentum * *mb - lr * gb;
            *b += *mb;
        }
    }
}

//! Layer forward passes and their analytic reverse-mode gradients.
//!
//! Every layer is a pure function of `(weights, input)`: `forward` returns the
//! output together with a cache of the intermediates the backward pass needs,
//! and `backward` turns an output gradient into parameter gradients plus the
//! input gradient. Nothing is mutated, so a frozen network is safe to share
//! across threads.

mod conv;
mod dense;
mod lstm;

pub use conv::{AvgPool1d, Conv1d, Padding};
pub use dense::{Dense, Dropout, Flatten};
pub use lstm::{BiLstm, Lstm};

use ndarray::{s, Array2};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;

pub(crate) type Mat = Array2<f64>;

/// Whether a forward pass samples dropout masks.
pub enum ForwardMode<'a> {
    Infer,
    Train { rng: &'a mut ChaCha8Rng },
}

/// One layer of the fixed set supported by the engine.
#[derive(Clone, Debug)]
pub enum Layer {
    Conv1d(Conv1d),
    AvgPool1d(AvgPool1d),
    Relu,
    Lstm(Lstm),
    BiLstm(BiLstm),
    Dense(Dense),
    Dropout(Dropout),
    Flatten,
}

/// Intermediates cached by a forward pass, consumed by `backward`.
#[derive(Clone, Debug)]
pub enum LayerCache {
    Conv1d(conv::ConvCache),
    AvgPool1d { in_steps: usize, channels: usize },
    Relu { mask: Mat },
    Lstm(lstm::LstmCache),
    BiLstm(lstm::BiLstmCache),
    Dense { input: Mat },
    Dropout { mask: Option<Mat> },
    Flatten { rows: usize, cols: usize },
}

impl Layer {
    pub fn forward(&self, x: &Mat, mode: &mut ForwardMode) -> Result<(Mat, LayerCache)> {
        match self {
            Layer::Conv1d(l) => l.forward(x),
            Layer::AvgPool1d(l) => l.forward(x),
            Layer::Relu => {
                let mask = x.mapv(|v| if v > 0.0 { 1.0 } else { 0.0 });
                Ok((x * &mask, LayerCache::Relu { mask }))
            }
            Layer::Lstm(l) => l.forward(x),
            Layer::BiLstm(l) => l.forward(x),
            Layer::Dense(l) => l.forward(x),
            Layer::Dropout(l) => l.forward(x, mode),
            Layer::Flatten => {
                let (rows, cols) = (x.nrows(), x.ncols());
                let flat = x
                    .to_shape((1, rows * cols))
                    .expect("row-major reshape")
                    .to_owned();
                Ok((flat, LayerCache::Flatten { rows, cols }))
            }
        }
    }

    /// Returns the input gradient and one gradient array per parameter array
    /// (same order as `param_arrays`).
    pub fn backward(&self, cache: &LayerCache, grad_out: &Mat) -> (Mat, Vec<Mat>) {
        match (self, cache) {
            (Layer::Conv1d(l), LayerCache::Conv1d(c)) => l.backward(c, grad_out),
            (Layer::AvgPool1d(l), LayerCache::AvgPool1d { in_steps, channels }) => {
                (l.backward(*in_steps, *channels, grad_out), Vec::new())
            }
            (Layer::Relu, LayerCache::Relu { mask }) => (grad_out * mask, Vec::new()),
            (Layer::Lstm(l), LayerCache::Lstm(c)) => l.backward(c, grad_out),
            (Layer::BiLstm(l), LayerCache::BiLstm(c)) => l.backward(c, grad_out),
            (Layer::Dense(l), LayerCache::Dense { input }) => l.backward(input, grad_out),
            (Layer::Dropout(_), LayerCache::Dropout { mask }) => match mask {
                Some(m) => (grad_out * m, Vec::new()),
                None => (grad_out.clone(), Vec::new()),
            },
            (Layer::Flatten, LayerCache::Flatten { rows, cols }) => (
                grad_out
                    .to_shape((*rows, *cols))
                    .expect("row-major reshape")
                    .to_owned(),
                Vec::new(),
            ),
            _ => unreachable!("layer cache kind mismatch"),
        }
    }

    /// Trainable parameter arrays in declaration order.
    pub fn param_arrays(&self) -> Vec<&Mat> {
        match self {
            Layer::Conv1d(l) => vec![&l.kernel, &l.bias],
            Layer::Lstm(l) => vec![&l.kernel, &l.recurrent, &l.bias],
            Layer::BiLstm(l) => vec![
                &l.forward_cell.kernel,
                &l.forward_cell.recurrent,
                &l.forward_cell.bias,
                &l.backward_cell.kernel,
                &l.backward_cell.recurrent,
                &l.backward_cell.bias,
            ],
            Layer::Dense(l) => vec![&l.weight, &l.bias],
            _ => Vec::new(),
        }
    }

    pub fn param_arrays_mut(&mut self) -> Vec<&mut Mat> {
        match self {
            Layer::Conv1d(l) => vec![&mut l.kernel, &mut l.bias],
            Layer::Lstm(l) => vec![&mut l.kernel, &mut l.recurrent, &mut l.bias],
            Layer::BiLstm(l) => {
                let (f, b) = (&mut l.forward_cell, &mut l.backward_cell);
                vec![
                    &mut f.kernel,
                    &mut f.recurrent,
                    &mut f.bias,
                    &mut b.kernel,
                    &mut b.recurrent,
                    &mut b.bias,
                ]
            }
            Layer::Dense(l) => vec![&mut l.weight, &mut l.bias],
            _ => Vec::new(),
        }
    }

    pub fn param_count(&self) -> usize {
        self.param_arrays().iter().map(|a| a.len()).sum()
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn reverse_rows(m: &Mat) -> Mat {
    m.slice(s![..;-1, ..]).to_owned()
}

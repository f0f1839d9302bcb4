//! LSTM and bidirectional LSTM layers with backpropagation through time.

use ndarray::{s, Array1, Array2, Axis};

use super::{reverse_rows, sigmoid, LayerCache, Mat};
use crate::error::{Error, Result};

/// Single-direction LSTM. Gate order in all `4*units` arrays is
/// `[input, forget, candidate, output]`.
///
/// `h_t = o_t * tanh(c_t)` with sigmoid gates and tanh candidate, zero initial
/// states. With `return_sequences` the output is `(time_steps, units)`,
/// otherwise the last hidden state `(1, units)`.
#[derive(Clone, Debug)]
pub struct Lstm {
    /// Input kernel `(in_channels, 4 * units)`.
    pub kernel: Mat,
    /// Recurrent kernel `(units, 4 * units)`.
    pub recurrent: Mat,
    /// `(1, 4 * units)`.
    pub bias: Mat,
    pub units: usize,
    pub return_sequences: bool,
}

#[derive(Clone, Debug)]
pub struct LstmCache {
    pub input: Mat,
    /// Activated gates `(T, 4u)` in `[i, f, g, o]` order.
    pub acts: Mat,
    /// Cell states `(T, u)`.
    pub cells: Mat,
    /// `tanh(c_t)` `(T, u)`.
    pub tanh_cells: Mat,
    /// Hidden state fed INTO step t, `(T, u)` (row 0 is zeros).
    pub h_prev: Mat,
}

impl Lstm {
    pub fn forward(&self, x: &Mat) -> Result<(Mat, LayerCache)> {
        if x.ncols() != self.kernel.nrows() {
            return Err(Error::Dimension(format!(
                "lstm kernel expects {} input channels but input has shape ({}, {})",
                self.kernel.nrows(),
                x.nrows(),
                x.ncols()
            )));
        }
        let steps = x.nrows();
        let u = self.units;
        if steps == 0 {
            return Err(Error::Dimension("lstm input has zero time steps".into()));
        }

        // Input contribution for every step at once; the recurrence below only
        // adds h_{t-1} * U per step.
        let pre = x.dot(&self.kernel) + &self.bias;

        let mut acts = Array2::zeros((steps, 4 * u));
        let mut cells = Array2::zeros((steps, u));
        let mut tanh_cells = Array2::zeros((steps, u));
        let mut h_prev = Array2::zeros((steps, u));
        let mut hs = Array2::zeros((steps, u));

        let mut h: Array1<f64> = Array1::zeros(u);
        let mut c: Array1<f64> = Array1::zeros(u);
        let mut z: Array1<f64> = Array1::zeros(4 * u);

        for t in 0..steps {
            z.assign(&pre.row(t));
            for i in 0..u {
                let hi = h[i];
                if hi != 0.0 {
                    z.scaled_add(hi, &self.recurrent.row(i));
                }
            }
            h_prev.row_mut(t).assign(&h);
            for j in 0..u {
                let ig = sigmoid(z[j]);
                let fg = sigmoid(z[u + j]);
                let gg = z[2 * u + j].tanh();
                let og = sigmoid(z[3 * u + j]);
                let c_new = fg * c[j] + ig * gg;
                let tc = c_new.tanh();
                acts[(t, j)] = ig;
                acts[(t, u + j)] = fg;
                acts[(t, 2 * u + j)] = gg;
                acts[(t, 3 * u + j)] = og;
                c[j] = c_new;
                h[j] = og * tc;
                cells[(t, j)] = c_new;
                tanh_cells[(t, j)] = tc;
            }
            hs.row_mut(t).assign(&h);
        }

        let output = if self.return_sequences {
            hs
        } else {
            hs.slice(s![steps - 1..steps, ..]).to_owned()
        };
        let cache = LstmCache {
            input: x.clone(),
            acts,
            cells,
            tanh_cells,
            h_prev,
        };
        Ok((output, LayerCache::Lstm(cache)))
    }

    pub fn backward(&self, cache: &LstmCache, grad_out: &Mat) -> (Mat, Vec<Mat>) {
        let steps = cache.cells.nrows();
        let u = self.units;

        let mut d_z = Array2::zeros((steps, 4 * u));
        let mut dh_rec: Array1<f64> = Array1::zeros(u);
        let mut dc_rec: Array1<f64> = Array1::zeros(u);

        for t in (0..steps).rev() {
            for j in 0..u {
                let mut dh = dh_rec[j];
                if self.return_sequences {
                    dh += grad_out[(t, j)];
                } else if t == steps - 1 {
                    dh += grad_out[(0, j)];
                }

                let ig = cache.acts[(t, j)];
                let fg = cache.acts[(t, u + j)];
                let gg = cache.acts[(t, 2 * u + j)];
                let og = cache.acts[(t, 3 * u + j)];
                let tc = cache.tanh_cells[(t, j)];
                let c_prev = if t > 0 { cache.cells[(t - 1, j)] } else { 0.0 };

                let dc = dc_rec[j] + dh * og * (1.0 - tc * tc);
                let d_og = dh * tc;
                d_z[(t, 3 * u + j)] = d_og * og * (1.0 - og);
                d_z[(t, u + j)] = dc * c_prev * fg * (1.0 - fg);
                d_z[(t, j)] = dc * gg * ig * (1.0 - ig);
                d_z[(t, 2 * u + j)] = dc * ig * (1.0 - gg * gg);
                dc_rec[j] = dc * fg;
            }
            let dz_row = d_z.row(t);
            for i in 0..u {
                dh_rec[i] = self.recurrent.row(i).dot(&dz_row);
            }
        }

        let d_kernel = cache.input.t().dot(&d_z);
        let d_recurrent = cache.h_prev.t().dot(&d_z);
        let d_bias = d_z.sum_axis(Axis(0)).insert_axis(Axis(0));
        let dx = d_z.dot(&self.kernel.t());
        (dx, vec![d_kernel, d_recurrent, d_bias])
    }
}

/// Two LSTMs over the same input in opposite time directions, hidden states
/// concatenated per step: output channels are `2 * units`.
#[derive(Clone, Debug)]
pub struct BiLstm {
    pub forward_cell: Lstm,
    pub backward_cell: Lstm,
}

#[derive(Clone, Debug)]
pub struct BiLstmCache {
    forward: Box<LstmCache>,
    backward: Box<LstmCache>,
}

impl BiLstm {
    fn units(&self) -> usize {
        self.forward_cell.units
    }

    fn return_sequences(&self) -> bool {
        self.forward_cell.return_sequences
    }

    pub fn forward(&self, x: &Mat) -> Result<(Mat, LayerCache)> {
        let (y_fwd, cache_fwd) = self.forward_cell.forward(x)?;
        let x_rev = reverse_rows(x);
        let (y_bwd_rev, cache_bwd) = self.backward_cell.forward(&x_rev)?;
        let y_bwd = if self.return_sequences() {
            reverse_rows(&y_bwd_rev)
        } else {
            y_bwd_rev
        };

        let mut out = Array2::zeros((y_fwd.nrows(), 2 * self.units()));
        out.slice_mut(s![.., ..self.units()]).assign(&y_fwd);
        out.slice_mut(s![.., self.units()..]).assign(&y_bwd);

        let (f, b) = match (cache_fwd, cache_bwd) {
            (LayerCache::Lstm(f), LayerCache::Lstm(b)) => (f, b),
            _ => unreachable!(),
        };
        Ok((
            out,
            LayerCache::BiLstm(BiLstmCache {
                forward: Box::new(f),
                backward: Box::new(b),
            }),
        ))
    }

    pub fn backward(&self, cache: &BiLstmCache, grad_out: &Mat) -> (Mat, Vec<Mat>) {
        let u = self.units();
        let d_fwd = grad_out.slice(s![.., ..u]).to_owned();
        let d_bwd_aligned = grad_out.slice(s![.., u..]).to_owned();
        let d_bwd = if self.return_sequences() {
            reverse_rows(&d_bwd_aligned)
        } else {
            d_bwd_aligned
        };

        let (dx_fwd, grads_fwd) = self.forward_cell.backward(&cache.forward, &d_fwd);
        let (dx_bwd_rev, grads_bwd) = self.backward_cell.backward(&cache.backward, &d_bwd);
        let dx = dx_fwd + reverse_rows(&dx_bwd_rev);

        let mut grads = grads_fwd;
        grads.extend(grads_bwd);
        (dx, grads)
    }
}

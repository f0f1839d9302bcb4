//! 1-D convolution (stride 1) and average pooling over the time axis.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::{LayerCache, Mat};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Padding {
    /// Zero padding so the output keeps the input's time steps.
    Same,
    /// No padding; output has `time_steps - kernel_size + 1` steps.
    Valid,
}

/// Temporal convolution: `y[t, o] = bias[o] + sum_{tap,i} x[t + tap - pad, i] * k[tap, i, o]`.
///
/// The kernel is stored as a `(kernel_size * in_channels, filters)` matrix so
/// the whole forward pass is one im2col + matrix product. The activation is a
/// separate layer.
#[derive(Clone, Debug)]
pub struct Conv1d {
    /// `(kernel_size * in_channels, filters)`, tap-major rows.
    pub kernel: Mat,
    /// `(1, filters)`.
    pub bias: Mat,
    pub kernel_size: usize,
    pub in_channels: usize,
    pub filters: usize,
    pub padding: Padding,
}

#[derive(Clone, Debug)]
pub struct ConvCache {
    /// `(out_steps, kernel_size * in_channels)` patch matrix.
    pub xcol: Mat,
    pub in_steps: usize,
}

impl Conv1d {
    pub fn forward(&self, x: &Mat) -> Result<(Mat, LayerCache)> {
        if x.ncols() != self.in_channels {
            return Err(Error::Dimension(format!(
                "conv1d kernel expects {} input channels but input has shape ({}, {})",
                self.in_channels,
                x.nrows(),
                x.ncols()
            )));
        }
        let xcol = self.im2col(x)?;
        let y = xcol.dot(&self.kernel) + &self.bias;
        let cache = ConvCache {
            xcol,
            in_steps: x.nrows(),
        };
        Ok((y, LayerCache::Conv1d(cache)))
    }

    pub fn backward(&self, cache: &ConvCache, grad_out: &Mat) -> (Mat, Vec<Mat>) {
        let d_kernel = cache.xcol.t().dot(grad_out);
        let d_bias = grad_out
            .sum_axis(ndarray::Axis(0))
            .insert_axis(ndarray::Axis(0));
        let d_xcol = grad_out.dot(&self.kernel.t());

        let mut dx = Array2::zeros((cache.in_steps, self.in_channels));
        let pad_left = self.pad_left();
        for (t_out, row) in d_xcol.rows().into_iter().enumerate() {
            for tap in 0..self.kernel_size {
                let t_in = t_out as isize + tap as isize - pad_left as isize;
                if t_in < 0 || t_in >= cache.in_steps as isize {
                    continue;
                }
                for i in 0..self.in_channels {
                    dx[(t_in as usize, i)] += row[tap * self.in_channels + i];
                }
            }
        }
        (dx, vec![d_kernel, d_bias])
    }

    fn pad_left(&self) -> usize {
        match self.padding {
            Padding::Same => (self.kernel_size - 1) / 2,
            Padding::Valid => 0,
        }
    }

    fn im2col(&self, x: &Mat) -> Result<Mat> {
        let t_in = x.nrows();
        let k = self.kernel_size;
        let t_out = match self.padding {
            Padding::Same => t_in,
            Padding::Valid => {
                if t_in < k {
                    return Err(Error::Dimension(format!(
                        "conv1d valid padding needs at least {k} steps, input has {t_in}"
                    )));
                }
                t_in - k + 1
            }
        };
        let pad_left = self.pad_left();
        let mut xcol = Array2::zeros((t_out, k * self.in_channels));
        for t_out_idx in 0..t_out {
            for tap in 0..k {
                let t_in_idx = t_out_idx as isize + tap as isize - pad_left as isize;
                if t_in_idx < 0 || t_in_idx >= t_in as isize {
                    continue;
                }
                for i in 0..self.in_channels {
                    xcol[(t_out_idx, tap * self.in_channels + i)] = x[(t_in_idx as usize, i)];
                }
            }
        }
        Ok(xcol)
    }
}

/// Non-overlapping mean pooling along the time axis, per channel.
#[derive(Clone, Debug)]
pub struct AvgPool1d {
    pub pool: usize,
}

impl AvgPool1d {
    pub fn forward(&self, x: &Mat) -> Result<(Mat, LayerCache)> {
        if self.pool == 0 || x.nrows() % self.pool != 0 {
            return Err(Error::Dimension(format!(
                "avg_pool1d with pool size {} cannot divide {} time steps",
                self.pool,
                x.nrows()
            )));
        }
        let t_out = x.nrows() / self.pool;
        let mut y = Array2::zeros((t_out, x.ncols()));
        for t in 0..t_out {
            for c in 0..x.ncols() {
                let mut acc = 0.0;
                for j in 0..self.pool {
                    acc += x[(t * self.pool + j, c)];
                }
                y[(t, c)] = acc / self.pool as f64;
            }
        }
        let cache = LayerCache::AvgPool1d {
            in_steps: x.nrows(),
            channels: x.ncols(),
        };
        Ok((y, cache))
    }

    pub fn backward(&self, in_steps: usize, channels: usize, grad_out: &Mat) -> Mat {
        let mut dx = Array2::zeros((in_steps, channels));
        let scale = 1.0 / self.pool as f64;
        for t in 0..grad_out.nrows() {
            for c in 0..channels {
                let g = grad_out[(t, c)] * scale;
                for j in 0..self.pool {
                    dx[(t * self.pool + j, c)] = g;
                }
            }
        }
        dx
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn conv(kernel: Mat, bias: Mat, k: usize, in_ch: usize, filters: usize) -> Conv1d {
        Conv1d {
            kernel,
            bias,
            kernel_size: k,
            in_channels: in_ch,
            filters,
            padding: Padding::Same,
        }
    }

    #[test]
    fn hand_convolution_same_padding() {
        // input [1,2,3], kernel [1,1,1], bias 0 -> [3,6,5] with zero padding.
        let c = conv(array![[1.0], [1.0], [1.0]], array![[0.0]], 3, 1, 1);
        let x = array![[1.0], [2.0], [3.0]];
        let (y, _) = c.forward(&x).unwrap();
        assert_eq!(y, array![[3.0], [6.0], [5.0]]);
    }

    #[test]
    fn zero_kernel_yields_bias() {
        let c = conv(Array2::zeros((1, 2)), array![[0.5, -1.0]], 1, 1, 2);
        let x = array![[3.0], [7.0], [-2.0]];
        let (y, _) = c.forward(&x).unwrap();
        for row in y.rows() {
            assert_eq!(row.to_vec(), vec![0.5, -1.0]);
        }
    }

    #[test]
    fn channel_mismatch_reports_both_shapes() {
        let c = conv(Array2::zeros((2, 1)), Array2::zeros((1, 1)), 1, 2, 1);
        let err = c.forward(&array![[1.0], [2.0]]).unwrap_err().to_string();
        assert!(err.contains("2 input channels"), "{err}");
        assert!(err.contains("(2, 1)"), "{err}");
    }

    #[test]
    fn pooling_halves_and_averages() {
        let p = AvgPool1d { pool: 2 };
        let x = array![[2.0], [4.0], [1.0], [3.0]];
        let (y, _) = p.forward(&x).unwrap();
        assert_eq!(y, array![[3.0], [2.0]]);
        assert!(p.forward(&array![[1.0], [2.0], [3.0]]).is_err());
    }

    #[test]
    fn pooling_constant_input_is_identity_on_values() {
        let p = AvgPool1d { pool: 2 };
        let x = Array2::from_elem((6, 3), 4.25);
        let (y, _) = p.forward(&x).unwrap();
        assert!(y.iter().all(|&v| v == 4.25));
        assert_eq!(y.shape(), &[3, 3]);
    }
}

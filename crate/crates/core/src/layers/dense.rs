//! Dense, dropout, and flatten layers.

use ndarray::Array2;
use rand::Rng;

use super::{ForwardMode, LayerCache, Mat};
use crate::error::{Error, Result};

/// Affine map applied independently at every time step: `y = x W + b`.
#[derive(Clone, Debug)]
pub struct Dense {
    /// `(in_channels, units)`.
    pub weight: Mat,
    /// `(1, units)`.
    pub bias: Mat,
}

impl Dense {
    pub fn forward(&self, x: &Mat) -> Result<(Mat, LayerCache)> {
        if x.ncols() != self.weight.nrows() {
            return Err(Error::Dimension(format!(
                "dense weight expects {} input channels but input has shape ({}, {})",
                self.weight.nrows(),
                x.nrows(),
                x.ncols()
            )));
        }
        let y = x.dot(&self.weight) + &self.bias;
        Ok((y, LayerCache::Dense { input: x.clone() }))
    }

    pub fn backward(&self, input: &Mat, grad_out: &Mat) -> (Mat, Vec<Mat>) {
        let d_weight = input.t().dot(grad_out);
        let d_bias = grad_out
            .sum_axis(ndarray::Axis(0))
            .insert_axis(ndarray::Axis(0));
        let dx = grad_out.dot(&self.weight.t());
        (dx, vec![d_weight, d_bias])
    }
}

/// Inverted dropout: scales kept units by `1/(1-rate)` at train time and is
/// the identity at inference.
#[derive(Clone, Debug)]
pub struct Dropout {
    pub rate: f64,
}

impl Dropout {
    pub fn forward(&self, x: &Mat, mode: &mut ForwardMode) -> Result<(Mat, LayerCache)> {
        if !(0.0..1.0).contains(&self.rate) {
            return Err(Error::Argument(format!(
                "dropout rate must lie in [0, 1), got {}",
                self.rate
            )));
        }
        match mode {
            ForwardMode::Train { rng } if self.rate > 0.0 => {
                let keep = 1.0 - self.rate;
                let mask = Array2::from_shape_simple_fn((x.nrows(), x.ncols()), || {
                    if rng.random::<f64>() < keep {
                        1.0 / keep
                    } else {
                        0.0
                    }
                });
                Ok((x * &mask, LayerCache::Dropout { mask: Some(mask) }))
            }
            _ => Ok((x.clone(), LayerCache::Dropout { mask: None })),
        }
    }
}

/// Marker type for documentation; flattening is handled in `Layer`.
#[derive(Clone, Debug)]
pub struct Flatten;

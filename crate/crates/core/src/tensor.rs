//! Dense rank-2 tensor with (time_steps, channels) semantics.
//!
//! All layer math runs on 64-bit floats; trainable weights are kept on the
//! 32-bit float grid so the on-disk format round-trips bit-exactly (see
//! `network::quantize_to_f32`).

use ndarray::Array2;

use crate::error::{Error, Result};

/// A `(time_steps, channels)` array of f64 in row-major order.
#[derive(Clone, Debug, PartialEq)]
pub struct Tensor2 {
    inner: Array2<f64>,
}

impl Tensor2 {
    pub fn from_array(inner: Array2<f64>) -> Self {
        Tensor2 { inner }
    }

    pub fn zeros(time_steps: usize, channels: usize) -> Self {
        Tensor2 {
            inner: Array2::zeros((time_steps, channels)),
        }
    }

    /// Builds from a row-major buffer; errors when the length does not match.
    pub fn from_vec(time_steps: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != time_steps * channels {
            return Err(Error::Dimension(format!(
                "buffer of {} values cannot form a ({time_steps}, {channels}) tensor",
                data.len()
            )));
        }
        let inner = Array2::from_shape_vec((time_steps, channels), data)
            .map_err(|e| Error::Dimension(e.to_string()))?;
        Ok(Tensor2 { inner })
    }

    /// Single-channel tensor `(values.len(), 1)`.
    pub fn column(values: &[f64]) -> Self {
        Tensor2 {
            inner: Array2::from_shape_vec((values.len(), 1), values.to_vec())
                .expect("column shape always consistent"),
        }
    }

    pub fn time_steps(&self) -> usize {
        self.inner.nrows()
    }

    pub fn channels(&self) -> usize {
        self.inner.ncols()
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.inner.nrows(), self.inner.ncols())
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.inner
    }

    pub fn into_array(self) -> Array2<f64> {
        self.inner
    }

    /// Row-major copy of the contents.
    pub fn to_vec(&self) -> Vec<f64> {
        self.inner.iter().copied().collect()
    }

    pub fn is_finite(&self) -> bool {
        self.inner.iter().all(|v| v.is_finite())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn from_vec_checks_length() {
        assert!(Tensor2::from_vec(2, 3, vec![0.0; 6]).is_ok());
        assert!(Tensor2::from_vec(2, 3, vec![0.0; 5]).is_err());
    }

    #[test]
    fn column_shape() {
        let t = Tensor2::column(&[1.0, 2.0, 3.0]);
        assert_eq!(t.shape(), (3, 1));
        assert_eq!(t.to_vec(), vec![1.0, 2.0, 3.0]);
    }

    #[test]
    fn finiteness() {
        let mut t = Tensor2::zeros(2, 2);
        assert!(t.is_finite());
        t = Tensor2::from_vec(1, 2, vec![f64::NAN, 0.0]).unwrap();
        assert!(!t.is_finite());
    }
}

//! Min-max scaling to [0, 1], fitted on training data only.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Maps `min -> 0` and `max -> 1` for one feature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureScaler {
    min: f64,
    max: f64,
}

impl FeatureScaler {
    pub fn new(min: f64, max: f64) -> Result<Self> {
        if !min.is_finite() || !max.is_finite() || !(max > min) {
            return Err(Error::Data(format!(
                "degenerate scaler: min {min} must be strictly below max {max}"
            )));
        }
        Ok(FeatureScaler { min, max })
    }

    /// Fits from observed values; errors on fewer than two distinct values.
    pub fn fit(values: impl IntoIterator<Item = f64>) -> Result<Self> {
        let mut min = f64::INFINITY;
        let mut max = f64::NEG_INFINITY;
        for v in values {
            min = min.min(v);
            max = max.max(v);
        }
        if !min.is_finite() || !max.is_finite() {
            return Err(Error::Data("cannot fit scaler on empty data".into()));
        }
        FeatureScaler::new(min, max)
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn apply(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }

    pub fn invert(&self, y: f64) -> f64 {
        y * (self.max - self.min) + self.min
    }

    pub fn apply_slice(&self, xs: &[f64]) -> Vec<f64> {
        xs.iter().map(|&x| self.apply(x)).collect()
    }

    pub fn invert_slice(&self, ys: &[f64]) -> Vec<f64> {
        ys.iter().map(|&y| self.invert(y)).collect()
    }

    pub fn validate(&self) -> Result<()> {
        FeatureScaler::new(self.min, self.max).map(|_| ())
    }
}

/// One scaler per feature: internal (TEM) and external (TEXT) temperature.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub tem: FeatureScaler,
    pub text: FeatureScaler,
}

impl ScalerParams {
    pub fn validate(&self) -> Result<()> {
        self.tem.validate()?;
        self.text.validate()
    }
}

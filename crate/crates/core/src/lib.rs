//! Day-long gap filling for sensor time series with CNN/LSTM models.
//!
//! The crate provides:
//! - a small dense-tensor engine with analytic gradients for the fixed layer
//!   set (conv1d, average pooling, LSTM, BiLSTM, dense, dropout, flatten),
//! - the three model families (baseline LSTM forward/reverse, CNN-LSTM
//!   onwards/backwards with sigmoid combination, CNN-BiLSTM),
//! - the data pipeline (CSV ingestion, 15-minute resampling, gap exclusion,
//!   min-max scaling, sliding windows, date-range splits, synthetic data),
//! - MAE training with early stopping, and the five-metric evaluation suite.

pub mod data;
pub mod error;
pub mod layers;
pub mod network;
pub mod optim;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::Tensor2;

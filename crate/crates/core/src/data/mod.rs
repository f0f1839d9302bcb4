//! Data pipeline: raw series, resampling, scaling, windowing, splits, and
//! the synthetic dataset generator.

pub mod csv_io;
pub mod resample;
pub mod scaler;
pub mod series;
pub mod split;
pub mod synthetic;
pub mod windows;

pub use scaler::{FeatureScaler, ScalerParams};
pub use series::{RawSeries, RAW_STEP_MINUTES, RESAMPLED_STEP_MINUTES, STEPS_PER_DAY};
pub use split::DateRange;
pub use windows::{Sample, SampleSet, WindowDirection, WindowKind};

//! Timestamped scalar sensor readings on a fixed grid with explicit gaps.

use chrono::{Duration, NaiveDateTime};

use crate::error::{Error, Result};

pub const RAW_STEP_MINUTES: u32 = 5;
pub const RESAMPLED_STEP_MINUTES: u32 = 15;
/// 15-minute steps in one day.
pub const STEPS_PER_DAY: usize = 96;

/// A sensor series on a regular grid: `timestamp(i) = start + i * step`.
/// Masked steps carry no value (stored as NaN behind the mask).
#[derive(Clone, Debug)]
pub struct RawSeries {
    pub source_id: String,
    pub start: NaiveDateTime,
    pub step_minutes: u32,
    values: Vec<f64>,
    gap_mask: Vec<bool>,
}

impl PartialEq for RawSeries {
    /// Bitwise value equality, so masked (NaN) steps compare equal.
    fn eq(&self, other: &Self) -> bool {
        self.source_id == other.source_id
            && self.start == other.start
            && self.step_minutes == other.step_minutes
            && self.gap_mask == other.gap_mask
            && self.values.len() == other.values.len()
            && self
                .values
                .iter()
                .zip(&other.values)
                .all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl RawSeries {
    pub fn new(
        source_id: impl Into<String>,
        start: NaiveDateTime,
        step_minutes: u32,
        values: Vec<f64>,
        gap_mask: Vec<bool>,
    ) -> Result<Self> {
        if values.len() != gap_mask.len() {
            return Err(Error::Data(format!(
                "series has {} values but {} mask entries",
                values.len(),
                gap_mask.len()
            )));
        }
        if step_minutes == 0 {
            return Err(Error::Data("series step must be positive".into()));
        }
        let mut values = values;
        for (v, &masked) in values.iter_mut().zip(&gap_mask) {
            if masked {
                *v = f64::NAN;
            } else if !v.is_finite() {
                return Err(Error::Data(
                    "unmasked series values must be finite".into(),
                ));
            }
        }
        Ok(RawSeries {
            source_id: source_id.into(),
            start,
            step_minutes,
            values,
            gap_mask,
        })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn timestamp_at(&self, index: usize) -> NaiveDateTime {
        self.start + Duration::minutes(self.step_minutes as i64 * index as i64)
    }

    /// Grid index of `ts`, or None when off-grid or out of range.
    pub fn index_of(&self, ts: NaiveDateTime) -> Option<usize> {
        let delta = (ts - self.start).num_minutes();
        if delta < 0 || delta % self.step_minutes as i64 != 0 {
            return None;
        }
        let idx = (delta / self.step_minutes as i64) as usize;
        (idx < self.len()).then_some(idx)
    }

    pub fn is_masked(&self, index: usize) -> bool {
        self.gap_mask[index]
    }

    /// Value at `index`, or None when masked.
    pub fn value(&self, index: usize) -> Option<f64> {
        (!self.gap_mask[index]).then(|| self.values[index])
    }

    pub fn raw_values(&self) -> &[f64] {
        &self.values
    }

    pub fn mask(&self) -> &[bool] {
        &self.gap_mask
    }

    pub fn masked_count(&self) -> usize {
        self.gap_mask.iter().filter(|&&m| m).count()
    }

    pub fn set_masked(&mut self, index: usize) {
        self.gap_mask[index] = true;
        self.values[index] = f64::NAN;
    }

    /// Unmasked values of the subrange `[start, end)`, or None when the range
    /// leaves the grid or touches a gap.
    pub fn contiguous_range(&self, start: isize, end: isize) -> Option<Vec<f64>> {
        if start < 0 || end <= start || end as usize > self.len() {
            return None;
        }
        let (start, end) = (start as usize, end as usize);
        if self.gap_mask[start..end].iter().any(|&m| m) {
            return None;
        }
        Some(self.values[start..end].to_vec())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn dt(s: &str) -> NaiveDateTime {
        NaiveDateTime::parse_from_str(s, "%Y-%m-%dT%H:%M:%S").unwrap()
    }

    #[test]
    fn index_round_trip_and_masking() {
        let start = dt("2021-01-01T00:00:00");
        let mut s = RawSeries::new(
            "apt01",
            start,
            5,
            vec![1.0, 2.0, 3.0],
            vec![false, false, false],
        )
        .unwrap();
        assert_eq!(s.index_of(dt("2021-01-01T00:10:00")), Some(2));
        assert_eq!(s.index_of(dt("2021-01-01T00:07:00")), None);
        assert_eq!(s.timestamp_at(1), dt("2021-01-01T00:05:00"));
        s.set_masked(1);
        assert_eq!(s.value(1), None);
        assert_eq!(s.masked_count(), 1);
        assert_eq!(s.contiguous_range(0, 3), None);
        assert_eq!(s.contiguous_range(2, 3), Some(vec![3.0]));
    }

    #[test]
    fn masked_values_are_nan_behind_the_mask() {
        let start = NaiveDate::from_ymd_opt(2021, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap();
        let s = RawSeries::new("x", start, 5, vec![1.0, 99.0], vec![false, true]).unwrap();
        assert!(s.raw_values()[1].is_nan());
    }

    #[test]
    fn unmasked_nan_rejected() {
        let start = dt("2021-01-01T00:00:00");
        assert!(RawSeries::new("x", start, 5, vec![f64::NAN], vec![false]).is_err());
    }
}

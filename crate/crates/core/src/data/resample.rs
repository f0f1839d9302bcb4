//! 5-minute to 15-minute resampling by bucket means.

use chrono::Timelike;

use crate::data::series::{RawSeries, RAW_STEP_MINUTES, RESAMPLED_STEP_MINUTES};
use crate::error::{Error, Result};

/// Averages each aligned 15-minute bucket of three 5-minute values. A bucket
/// with any masked constituent is masked; partial buckets at the edges are
/// dropped.
pub fn resample_15min(series: &RawSeries) -> Result<RawSeries> {
    if series.step_minutes != RAW_STEP_MINUTES {
        return Err(Error::Data(format!(
            "resampling expects a {RAW_STEP_MINUTES}-minute series, got {}-minute",
            series.step_minutes
        )));
    }
    if series.is_empty() {
        return Err(Error::Data(format!(
            "cannot resample empty series '{}'",
            series.source_id
        )));
    }
    if series.start.second() != 0 || series.start.minute() % RAW_STEP_MINUTES != 0 {
        return Err(Error::Data(format!(
            "series '{}' does not start on the {RAW_STEP_MINUTES}-minute grid",
            series.source_id
        )));
    }

    let per_bucket = (RESAMPLED_STEP_MINUTES / RAW_STEP_MINUTES) as usize;
    let offset_slots = (series.start.minute() % RESAMPLED_STEP_MINUTES / RAW_STEP_MINUTES) as usize;
    let first = (per_bucket - offset_slots) % per_bucket;
    if series.len() < first + per_bucket {
        return Err(Error::Data(format!(
            "series '{}' is too short for one full 15-minute bucket",
            series.source_id
        )));
    }
    let buckets = (series.len() - first) / per_bucket;

    let mut values = Vec::with_capacity(buckets);
    let mut mask = Vec::with_capacity(buckets);
    for b in 0..buckets {
        let base = first + b * per_bucket;
        let mut acc = 0.0;
        let mut any_masked = false;
        for j in 0..per_bucket {
            match series.value(base + j) {
                Some(v) => acc += v,
                None => any_masked = true,
            }
        }
        if any_masked {
            values.push(f64::NAN);
            mask.push(true);
        } else {
            values.push(acc / per_bucket as f64);
            mask.push(false);
        }
    }

    RawSeries::new(
        series.source_id.clone(),
        series.timestamp_at(first),
        RESAMPLED_STEP_MINUTES,
        values,
        mask,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::{NaiveDate, NaiveDateTime};

    fn at(h: u32, m: u32) -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2021, 1, 1)
            .unwrap()
            .and_hms_opt(h, m, 0)
            .unwrap()
    }

    fn series(start: NaiveDateTime, values: Vec<f64>, mask: Vec<bool>) -> RawSeries {
        RawSeries::new("apt01", start, 5, values, mask).unwrap()
    }

    #[test]
    fn bucket_mean_of_three() {
        let s = series(at(0, 0), vec![1.0, 2.0, 3.0], vec![false; 3]);
        let r = resample_15min(&s).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r.value(0), Some(2.0));
        assert_eq!(r.step_minutes, 15);
    }

    #[test]
    fn one_masked_constituent_masks_the_bucket() {
        let s = series(at(0, 0), vec![1.0, 2.0, 3.0], vec![false, true, false]);
        let r = resample_15min(&s).unwrap();
        assert_eq!(r.value(0), None);
    }

    #[test]
    fn one_day_becomes_96_buckets() {
        let s = series(at(0, 0), vec![20.0; 288], vec![false; 288]);
        let r = resample_15min(&s).unwrap();
        assert_eq!(r.len(), 96);
        assert!((0..96).all(|i| r.value(i) == Some(20.0)));
    }

    #[test]
    fn misaligned_start_skips_partial_bucket() {
        // Starts at 00:05 -> first full bucket is 00:15.
        let s = series(at(0, 5), (0..8).map(|i| i as f64).collect(), vec![false; 8]);
        let r = resample_15min(&s).unwrap();
        assert_eq!(r.start, at(0, 15));
        assert_eq!(r.len(), 2);
        // Values 2,3,4 and 5,6,7.
        assert_eq!(r.value(0), Some(3.0));
        assert_eq!(r.value(1), Some(6.0));
    }

    #[test]
    fn empty_and_wrong_step_error() {
        let empty = series(at(0, 0), vec![], vec![]);
        assert!(resample_15min(&empty).is_err());
        let fifteen = RawSeries::new("x", at(0, 0), 15, vec![1.0], vec![false]).unwrap();
        assert!(resample_15min(&fifteen).is_err());
    }
}

//! Date-range splits keyed on the target day's anchor date.

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::data::windows::SampleSet;
use crate::error::{Error, Result};

/// Inclusive calendar-date range.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DateRange {
    pub start: NaiveDate,
    pub end: NaiveDate,
}

impl DateRange {
    pub fn contains(&self, date: NaiveDate) -> bool {
        self.start <= date && date <= self.end
    }

    fn overlaps(&self, other: &DateRange) -> bool {
        self.start <= other.end && other.start <= self.end
    }
}

fn validate_ranges(groups: &[&[DateRange]]) -> Result<()> {
    let all: Vec<DateRange> = groups.iter().flat_map(|g| g.iter().copied()).collect();
    for r in &all {
        if r.start > r.end {
            return Err(Error::Config(format!(
                "date range {} - {} is reversed",
                r.start, r.end
            )));
        }
    }
    for i in 0..all.len() {
        for j in i + 1..all.len() {
            if all[i].overlaps(&all[j]) {
                return Err(Error::Config(format!(
                    "date ranges {} - {} and {} - {} overlap",
                    all[i].start, all[i].end, all[j].start, all[j].end
                )));
            }
        }
    }
    Ok(())
}

fn in_any(ranges: &[DateRange], date: NaiveDate) -> bool {
    ranges.iter().any(|r| r.contains(date))
}

/// Assigns each sample to train/validation/test by its anchor date; samples
/// outside all ranges are discarded.
pub fn split_by_dates(
    set: SampleSet,
    train: &[DateRange],
    val: &[DateRange],
    test: &[DateRange],
) -> Result<(SampleSet, SampleSet, SampleSet)> {
    validate_ranges(&[train, val, test])?;
    let mut train_set = SampleSet::empty(set.window_kind, set.direction);
    let mut val_set = SampleSet::empty(set.window_kind, set.direction);
    let mut test_set = SampleSet::empty(set.window_kind, set.direction);
    for sample in set.samples {
        let date = sample.anchor.date();
        if in_any(train, date) {
            train_set.samples.push(sample);
        } else if in_any(val, date) {
            val_set.samples.push(sample);
        } else if in_any(test, date) {
            test_set.samples.push(sample);
        }
    }
    Ok((train_set, val_set, test_set))
}

//! Sliding-window sample extraction with gap exclusion.
//!
//! A sample predicts one day (96 steps at 15 minutes). Window shapes:
//! - `SixToOne`: 6 input days of TEM (576) and 7 days of TEXT (672, the six
//!   input days plus the target day).
//! - `ThirteenDay`: 12 days of TEM (1152, six before plus six after the
//!   target day) and 13 days of TEXT (1248).
//!
//! `Backwards` windows mirror `SixToOne` for networks trained on reversed
//! time: the 576 TEM values after the target day and the 672 TEXT values of
//! the target day plus the six following days, all time-reversed (target
//! included). Windows touching a gap are dropped, never interpolated.

use chrono::NaiveDateTime;
use serde::{Deserialize, Serialize};

use crate::data::scaler::{FeatureScaler, ScalerParams};
use crate::data::series::{RawSeries, RESAMPLED_STEP_MINUTES, STEPS_PER_DAY};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowKind {
    SixToOne,
    ThirteenDay,
}

impl WindowKind {
    pub fn tem_len(self) -> usize {
        match self {
            WindowKind::SixToOne => 6 * STEPS_PER_DAY,
            WindowKind::ThirteenDay => 12 * STEPS_PER_DAY,
        }
    }

    pub fn text_len(self) -> usize {
        match self {
            WindowKind::SixToOne => 7 * STEPS_PER_DAY,
            WindowKind::ThirteenDay => 13 * STEPS_PER_DAY,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WindowDirection {
    Onwards,
    Backwards,
}

/// One model-ready input/target pair. `anchor` is the first timestamp of the
/// target day in chronological time, also for backwards samples.
#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    pub tem_input: Vec<f64>,
    pub text_input: Vec<f64>,
    pub target: Vec<f64>,
    pub source_id: String,
    pub anchor: NaiveDateTime,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleSet {
    pub window_kind: WindowKind,
    pub direction: WindowDirection,
    pub samples: Vec<Sample>,
}

impl SampleSet {
    pub fn empty(window_kind: WindowKind, direction: WindowDirection) -> Self {
        SampleSet {
            window_kind,
            direction,
            samples: Vec::new(),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Appends another set of the same kind and direction.
    pub fn extend(&mut self, other: SampleSet) -> Result<()> {
        if other.window_kind != self.window_kind || other.direction != self.direction {
            return Err(Error::Argument(
                "cannot merge sample sets of different window kinds".into(),
            ));
        }
        self.samples.extend(other.samples);
        Ok(())
    }
}

/// Extracts every stride-aligned window whose TEM input, TEXT input, and
/// target are entirely gap-free.
pub fn make_windows(
    tem: &RawSeries,
    text: &RawSeries,
    kind: WindowKind,
    direction: WindowDirection,
    stride: usize,
) -> Result<SampleSet> {
    if stride == 0 {
        return Err(Error::Argument("stride must be at least 1".into()));
    }
    if kind == WindowKind::ThirteenDay && direction == WindowDirection::Backwards {
        return Err(Error::Argument(
            "thirteen-day windows are chronological only".into(),
        ));
    }
    if tem.step_minutes != RESAMPLED_STEP_MINUTES || text.step_minutes != RESAMPLED_STEP_MINUTES {
        return Err(Error::Data(
            "windowing expects 15-minute resampled series".into(),
        ));
    }
    let offset_minutes = (tem.start - text.start).num_minutes();
    if offset_minutes % RESAMPLED_STEP_MINUTES as i64 != 0 {
        return Err(Error::Data(format!(
            "TEM '{}' and TEXT '{}' grids are misaligned by {offset_minutes} minutes",
            tem.source_id, text.source_id
        )));
    }
    // TEM index i corresponds to TEXT index i + text_offset.
    let text_offset = offset_minutes / RESAMPLED_STEP_MINUTES as i64;

    let day = STEPS_PER_DAY as isize;
    let six = 6 * day;
    let len = tem.len() as isize;

    // Anchor = TEM index of the first target step.
    let (lo, hi) = match (kind, direction) {
        (WindowKind::SixToOne, WindowDirection::Onwards) => (six, len - day),
        (WindowKind::SixToOne, WindowDirection::Backwards) => (0, len - 7 * day),
        (WindowKind::ThirteenDay, _) => (six, len - 7 * day),
    };

    let mut samples = Vec::new();
    let mut anchor = lo;
    while anchor <= hi {
        let window = extract_window(tem, text, text_offset, kind, direction, anchor);
        if let Some(sample) = window {
            samples.push(sample);
        }
        anchor += stride as isize;
    }
    Ok(SampleSet {
        window_kind: kind,
        direction,
        samples,
    })
}

fn extract_window(
    tem: &RawSeries,
    text: &RawSeries,
    text_offset: i64,
    kind: WindowKind,
    direction: WindowDirection,
    anchor: isize,
) -> Option<Sample> {
    let day = STEPS_PER_DAY as isize;
    let six = 6 * day;
    let text_range = |from: isize, to: isize| {
        text.contiguous_range(from + text_offset as isize, to + text_offset as isize)
    };

    let (tem_input, text_input, target) = match (kind, direction) {
        (WindowKind::SixToOne, WindowDirection::Onwards) => (
            tem.contiguous_range(anchor - six, anchor)?,
            text_range(anchor - six, anchor + day)?,
            tem.contiguous_range(anchor, anchor + day)?,
        ),
        (WindowKind::SixToOne, WindowDirection::Backwards) => {
            let mut tem_after = tem.contiguous_range(anchor + day, anchor + 7 * day)?;
            let mut text_after = text_range(anchor, anchor + 7 * day)?;
            let mut target = tem.contiguous_range(anchor, anchor + day)?;
            tem_after.reverse();
            text_after.reverse();
            target.reverse();
            (tem_after, text_after, target)
        }
        (WindowKind::ThirteenDay, _) => {
            let mut before = tem.contiguous_range(anchor - six, anchor)?;
            let after = tem.contiguous_range(anchor + day, anchor + 7 * day)?;
            before.extend(after);
            (
                before,
                text_range(anchor - six, anchor + 7 * day)?,
                tem.contiguous_range(anchor, anchor + day)?,
            )
        }
    };

    Some(Sample {
        tem_input,
        text_input,
        target,
        source_id: tem.source_id.clone(),
        anchor: tem.timestamp_at(anchor as usize),
    })
}

/// Fits TEM and TEXT min-max scalers over all values the given (training)
/// sample sets expose to a model.
pub fn fit_scaler(train_sets: &[&SampleSet]) -> Result<ScalerParams> {
    let tem_values = train_sets.iter().flat_map(|set| {
        set.samples.iter().flat_map(|s| {
            s.tem_input
                .iter()
                .chain(s.target.iter())
                .copied()
        })
    });
    let text_values = train_sets
        .iter()
        .flat_map(|set| set.samples.iter().flat_map(|s| s.text_input.iter().copied()));
    Ok(ScalerParams {
        tem: FeatureScaler::fit(tem_values)?,
        text: FeatureScaler::fit(text_values)?,
    })
}

/// Applies the scaler to every sample (inputs and target).
pub fn scale_samples(set: &SampleSet, scaler: &ScalerParams) -> SampleSet {
    SampleSet {
        window_kind: set.window_kind,
        direction: set.direction,
        samples: set
            .samples
            .iter()
            .map(|s| Sample {
                tem_input: scaler.tem.apply_slice(&s.tem_input),
                text_input: scaler.text.apply_slice(&s.text_input),
                target: scaler.tem.apply_slice(&s.target),
                source_id: s.source_id.clone(),
                anchor: s.anchor,
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use chrono::NaiveDate;

    fn start() -> NaiveDateTime {
        NaiveDate::from_ymd_opt(2021, 1, 1)
            .unwrap()
            .and_hms_opt(0, 0, 0)
            .unwrap()
    }

    fn flat_series(id: &str, len: usize) -> RawSeries {
        let values: Vec<f64> = (0..len).map(|i| 15.0 + (i % 96) as f64 * 0.05).collect();
        RawSeries::new(id, start(), 15, values, vec![false; len]).unwrap()
    }

    #[test]
    fn exactly_seven_days_gives_one_sample() {
        let tem = flat_series("apt01", 7 * 96);
        let text = flat_series("text", 7 * 96);
        let set = make_windows(&tem, &text, WindowKind::SixToOne, WindowDirection::Onwards, 1)
            .unwrap();
        assert_eq!(set.len(), 1);
        let s = &set.samples[0];
        assert_eq!(s.tem_input.len(), 576);
        assert_eq!(s.text_input.len(), 672);
        assert_eq!(s.target.len(), 96);
        assert_eq!(s.anchor, tem.timestamp_at(576));
    }

    #[test]
    fn counting_formulas_hold_on_gap_free_input() {
        for extra in [0usize, 5, 96, 200] {
            let len = 13 * 96 + extra;
            let tem = flat_series("apt01", len);
            let text = flat_series("text", len);
            let six =
                make_windows(&tem, &text, WindowKind::SixToOne, WindowDirection::Onwards, 1)
                    .unwrap();
            assert_eq!(six.len(), len - 7 * 96 + 1);
            let back = make_windows(
                &tem,
                &text,
                WindowKind::SixToOne,
                WindowDirection::Backwards,
                1,
            )
            .unwrap();
            assert_eq!(back.len(), len - 7 * 96 + 1);
            let thirteen = make_windows(
                &tem,
                &text,
                WindowKind::ThirteenDay,
                WindowDirection::Onwards,
                1,
            )
            .unwrap();
            assert_eq!(thirteen.len(), len - 13 * 96 + 1);
        }
    }

    #[test]
    fn one_masked_step_drops_every_window_containing_it() {
        let len = 9 * 96;
        let mut tem = flat_series("apt01", len);
        let text = flat_series("text", len);
        let masked = 7 * 96 / 2 + 96; // inside the series
        tem.set_masked(masked);
        let set = make_windows(&tem, &text, WindowKind::SixToOne, WindowDirection::Onwards, 1)
            .unwrap();
        // A six-to-one window spans TEM [anchor-576, anchor+96); it contains
        // `masked` iff anchor in (masked-96, masked+576].
        let lo = 576.max(masked as isize - 96 + 1) as usize;
        let hi = (len - 96).min(masked + 576);
        let removed = hi + 1 - lo;
        assert_eq!(set.len(), len - 7 * 96 + 1 - removed);
        assert!(set.samples.iter().all(|s| {
            let anchor_idx = tem.index_of(s.anchor).unwrap();
            masked >= anchor_idx + 96 || masked + 576 < anchor_idx + 576
        }));
    }

    #[test]
    fn backwards_windows_mirror_onwards() {
        let len = 13 * 96;
        let tem = flat_series("apt01", len);
        let text = flat_series("text", len);
        let back = make_windows(
            &tem,
            &text,
            WindowKind::SixToOne,
            WindowDirection::Backwards,
            1,
        )
        .unwrap();
        let s = back
            .samples
            .iter()
            .find(|s| tem.index_of(s.anchor) == Some(576))
            .unwrap();
        // First reversed TEM value is the last value of the six days after the gap.
        assert_eq!(s.tem_input[0], tem.value(576 + 96 + 576 - 1).unwrap());
        // First reversed target value is the last step of the target day.
        assert_eq!(s.target[0], tem.value(576 + 95).unwrap());
        // Reversed TEXT starts at the end of the sixth following day.
        assert_eq!(s.text_input[0], text.value(576 + 672 - 1).unwrap());
    }

    #[test]
    fn thirteen_day_window_excludes_target_day_from_tem() {
        let len = 13 * 96;
        let tem = flat_series("apt01", len);
        let text = flat_series("text", len);
        let set = make_windows(
            &tem,
            &text,
            WindowKind::ThirteenDay,
            WindowDirection::Onwards,
            1,
        )
        .unwrap();
        let s = &set.samples[0];
        assert_eq!(s.tem_input.len(), 1152);
        assert_eq!(s.tem_input[575], tem.value(575).unwrap());
        assert_eq!(s.tem_input[576], tem.value(576 + 96).unwrap());
        assert_eq!(s.text_input.len(), 1248);
    }

    #[test]
    fn stride_and_alignment_checks() {
        let tem = flat_series("apt01", 9 * 96);
        let text = flat_series("text", 9 * 96);
        assert!(make_windows(&tem, &text, WindowKind::SixToOne, WindowDirection::Onwards, 0)
            .is_err());
        let strided =
            make_windows(&tem, &text, WindowKind::SixToOne, WindowDirection::Onwards, 96)
                .unwrap();
        assert_eq!(strided.len(), 3);

        let shifted = RawSeries::new(
            "text",
            start() + chrono::Duration::minutes(5),
            15,
            vec![1.0; 9 * 96],
            vec![false; 9 * 96],
        )
        .unwrap();
        assert!(
            make_windows(&tem, &shifted, WindowKind::SixToOne, WindowDirection::Onwards, 1)
                .is_err()
        );
    }

    #[test]
    fn scaling_keeps_training_inputs_in_unit_range() {
        let tem = flat_series("apt01", 9 * 96);
        let text = flat_series("text", 9 * 96);
        let set = make_windows(&tem, &text, WindowKind::SixToOne, WindowDirection::Onwards, 1)
            .unwrap();
        let scaler = fit_scaler(&[&set]).unwrap();
        let scaled = scale_samples(&set, &scaler);
        for s in &scaled.samples {
            assert!(s
                .tem_input
                .iter()
                .chain(s.text_input.iter())
                .chain(s.target.iter())
                .all(|&v| (-1e-12..=1.0 + 1e-12).contains(&v)));
        }
    }
}

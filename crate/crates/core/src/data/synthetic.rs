//! Synthetic TEM/TEXT dataset generator for desk-scale experiments.
//!
//! TEXT is a daily plus seasonal sinusoid with AR(1) noise. Each TEM source
//! responds affinely to lagged TEXT, adds daily/weekly occupancy components,
//! and switches into a heating regime on cold days that pulls values toward a
//! setpoint and compresses variance. Value streams and gap streams use
//! separate RNGs, so the same seed yields identical values whether or not
//! gaps are injected.

use chrono::{Datelike, NaiveDate, NaiveDateTime};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::data::series::{RawSeries, RAW_STEP_MINUTES};
use crate::error::{Error, Result};

/// A deterministic gap, mainly for tests and demos.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ForcedGap {
    /// Zero-based TEM source index.
    pub source_index: usize,
    pub start: NaiveDateTime,
    pub duration_minutes: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SynthParams {
    pub n_sources: usize,
    pub days: u32,
    pub start_date: NaiveDate,
    /// Master noise scale; 0 gives fully deterministic signals.
    pub noise: f64,
    pub text_base: f64,
    pub text_daily_amp: f64,
    pub text_seasonal_amp: f64,
    pub ar1_phi: f64,
    /// Expected random gaps per source per 30 days.
    pub gap_rate_per_30_days: f64,
    pub gap_duration_mean_days: f64,
    pub gap_duration_sd_days: f64,
    /// TEXT level below which the heating regime is active.
    pub heating_threshold: f64,
    pub forced_gaps: Vec<ForcedGap>,
}

impl Default for SynthParams {
    fn default() -> Self {
        SynthParams {
            n_sources: 17,
            days: 90,
            start_date: NaiveDate::from_ymd_opt(2020, 1, 15).unwrap(),
            noise: 1.0,
            text_base: 12.0,
            text_daily_amp: 6.0,
            text_seasonal_amp: 8.0,
            ar1_phi: 0.9,
            gap_rate_per_30_days: 0.75,
            gap_duration_mean_days: 0.64,
            gap_duration_sd_days: 0.74,
            heating_threshold: 10.0,
            forced_gaps: Vec::new(),
        }
    }
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E3779B97F4A7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D049BB133111EB);
    x ^ (x >> 31)
}

/// Independent deterministic RNG stream per (seed, stream id).
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(splitmix64(seed ^ splitmix64(stream)))
}

const STEPS_PER_DAY_5MIN: usize = 288;

fn seasonal(params: &SynthParams, day_of_year: f64) -> f64 {
    params.text_seasonal_amp * (std::f64::consts::TAU * (day_of_year - 200.0) / 365.0).cos()
}

/// Generates `n_sources` TEM series and one TEXT series at 5-minute
/// granularity. Identical `(seed, params)` produce bit-identical output.
pub fn generate_synthetic(seed: u64, params: &SynthParams) -> Result<(Vec<RawSeries>, RawSeries)> {
    if params.days < 14 {
        return Err(Error::Config(format!(
            "synthetic dataset needs at least 14 days for one thirteen-day window, got {}",
            params.days
        )));
    }
    if params.n_sources == 0 {
        return Err(Error::Config("synthetic dataset needs n_sources >= 1".into()));
    }
    if params.noise < 0.0 || params.gap_rate_per_30_days < 0.0 {
        return Err(Error::Config(
            "noise and gap rate must be non-negative".into(),
        ));
    }

    let steps = params.days as usize * STEPS_PER_DAY_5MIN;
    let start = params
        .start_date
        .and_hms_opt(0, 0, 0)
        .expect("midnight exists");
    let doy0 = params.start_date.ordinal() as f64;

    // TEXT signal.
    let mut text_rng = stream_rng(seed, 0);
    let ar_sigma = params.noise * 0.35;
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut text_values = Vec::with_capacity(steps);
    let mut ar = 0.0;
    for i in 0..steps {
        let hours = i as f64 * RAW_STEP_MINUTES as f64 / 60.0;
        let days_f = hours / 24.0;
        let daily =
            params.text_daily_amp * (std::f64::consts::TAU * (hours - 9.0) / 24.0).sin();
        if ar_sigma > 0.0 {
            ar = params.ar1_phi * ar + ar_sigma * normal.sample(&mut text_rng);
        }
        text_values.push(params.text_base + seasonal(params, doy0 + days_f) + daily + ar);
    }
    let text = RawSeries::new(
        "text",
        start,
        RAW_STEP_MINUTES,
        text_values.clone(),
        vec![false; steps],
    )?;

    // TEM sources.
    let mut tems = Vec::with_capacity(params.n_sources);
    for k in 0..params.n_sources {
        let mut rng = stream_rng(seed, 1 + k as u64);
        let base: f64 = rng.random_range(19.0..23.0);
        let gain: f64 = rng.random_range(0.30..0.50);
        let lag_steps: usize = rng.random_range(6..=24);
        let occ_daily: f64 = rng.random_range(0.20..0.50);
        let occ_weekly: f64 = rng.random_range(0.10..0.30);
        let phase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let wphase: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let sigma: f64 = params.noise * rng.random_range(0.06..0.12);
        let setpoint: f64 = rng.random_range(20.5..22.0);
        let alpha: f64 = rng.random_range(0.40..0.55);

        let mut values = Vec::with_capacity(steps);
        let mut ar = 0.0;
        for i in 0..steps {
            let hours = i as f64 * RAW_STEP_MINUTES as f64 / 60.0;
            let days_f = hours / 24.0;
            let lagged_text = text_values[i.saturating_sub(lag_steps)];
            if sigma > 0.0 {
                ar = 0.9 * ar + sigma * normal.sample(&mut rng);
            }
            let raw = base
                + gain * (lagged_text - params.text_base)
                + occ_daily * (std::f64::consts::TAU * (hours - 7.0) / 24.0 + phase).sin()
                + occ_weekly * (std::f64::consts::TAU * days_f / 7.0 + wphase).sin()
                + ar;
            // Slow external level decides the heating regime deterministically.
            let ext_slow = params.text_base + seasonal(params, doy0 + days_f);
            let v = if ext_slow < params.heating_threshold {
                setpoint + alpha * (raw - base)
            } else {
                raw
            };
            values.push(v);
        }
        let mut series = RawSeries::new(
            format!("apt{:02}", k + 1),
            start,
            RAW_STEP_MINUTES,
            values,
            vec![false; steps],
        )?;
        inject_gaps(&mut series, seed, k, params)?;
        tems.push(series);
    }

    for gap in &params.forced_gaps {
        let series = tems.get_mut(gap.source_index).ok_or_else(|| {
            Error::Config(format!(
                "forced gap names source index {} but only {} sources exist",
                gap.source_index, params.n_sources
            ))
        })?;
        let idx = series.index_of(gap.start).ok_or_else(|| {
            Error::Config(format!(
                "forced gap start {} is off the 5-minute grid or out of range",
                gap.start
            ))
        })?;
        let gap_steps = (gap.duration_minutes / RAW_STEP_MINUTES as u64).max(1) as usize;
        for i in idx..(idx + gap_steps).min(series.len()) {
            series.set_masked(i);
        }
    }

    Ok((tems, text))
}

fn inject_gaps(series: &mut RawSeries, seed: u64, source: usize, params: &SynthParams) -> Result<()> {
    if params.gap_rate_per_30_days == 0.0 {
        return Ok(());
    }
    let mut rng = stream_rng(seed, 1_000_000 + source as u64);
    let expected = params.gap_rate_per_30_days * params.days as f64 / 30.0;
    let count = Poisson::new(expected)
        .map_err(|e| Error::Config(format!("invalid gap rate: {e}")))?
        .sample(&mut rng) as usize;

    let mean = params.gap_duration_mean_days;
    let sd = params.gap_duration_sd_days;
    if mean <= 0.0 {
        return Err(Error::Config("gap duration mean must be positive".into()));
    }
    let sigma2 = (1.0 + (sd / mean).powi(2)).ln();
    let log_normal = LogNormal::new(mean.ln() - sigma2 / 2.0, sigma2.sqrt())
        .map_err(|e| Error::Config(format!("invalid gap duration distribution: {e}")))?;

    for _ in 0..count {
        let at = rng.random_range(0..series.len());
        let duration_days: f64 = log_normal.sample(&mut rng);
        let steps = ((duration_days * STEPS_PER_DAY_5MIN as f64).round() as usize)
            .clamp(1, 3 * STEPS_PER_DAY_5MIN);
        for i in at..(at + steps).min(series.len()) {
            series.set_masked(i);
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_params(noise: f64, gap_rate: f64) -> SynthParams {
        SynthParams {
            n_sources: 2,
            days: 30,
            noise,
            gap_rate_per_30_days: gap_rate,
            ..SynthParams::default()
        }
    }

    fn pearson(a: &[f64], b: &[f64]) -> f64 {
        let n = a.len() as f64;
        let ma = a.iter().sum::<f64>() / n;
        let mb = b.iter().sum::<f64>() / n;
        let mut cov = 0.0;
        let mut va = 0.0;
        let mut vb = 0.0;
        for (&x, &y) in a.iter().zip(b) {
            cov += (x - ma) * (y - mb);
            va += (x - ma).powi(2);
            vb += (y - mb).powi(2);
        }
        cov / (va.sqrt() * vb.sqrt())
    }

    #[test]
    fn same_seed_is_bit_identical() {
        let params = small_params(1.0, 1.0);
        let (a_tems, a_text) = generate_synthetic(7, &params).unwrap();
        let (b_tems, b_text) = generate_synthetic(7, &params).unwrap();
        assert_eq!(a_text, b_text);
        assert_eq!(a_tems, b_tems);
    }

    #[test]
    fn values_are_independent_of_gap_injection() {
        let clean = generate_synthetic(3, &small_params(0.5, 0.0)).unwrap();
        let gappy = generate_synthetic(3, &small_params(0.5, 2.0)).unwrap();
        let (ct, gt) = (&clean.0[0], &gappy.0[0]);
        for i in 0..ct.len() {
            if !gt.is_masked(i) {
                assert_eq!(ct.value(i), gt.value(i));
            }
        }
    }

    #[test]
    fn zero_noise_zero_gaps_correlates_with_text() {
        let (tems, text) = generate_synthetic(11, &small_params(0.0, 0.0)).unwrap();
        for tem in &tems {
            let a: Vec<f64> = (0..tem.len()).map(|i| tem.value(i).unwrap()).collect();
            let b: Vec<f64> = (0..text.len()).map(|i| text.value(i).unwrap()).collect();
            let r = pearson(&a, &b);
            assert!(r > 0.8, "TEM '{}' vs TEXT correlation {r}", tem.source_id);
        }
    }

    #[test]
    fn gap_rate_zero_means_no_gaps() {
        let (tems, text) = generate_synthetic(5, &small_params(1.0, 0.0)).unwrap();
        assert!(tems.iter().all(|t| t.masked_count() == 0));
        assert_eq!(text.masked_count(), 0);
    }

    #[test]
    fn too_few_days_is_a_config_error() {
        let params = SynthParams {
            days: 13,
            ..SynthParams::default()
        };
        assert!(matches!(
            generate_synthetic(1, &params).unwrap_err(),
            Error::Config(_)
        ));
    }

    #[test]
    fn forced_gap_masks_exact_range() {
        let mut params = small_params(1.0, 0.0);
        params.forced_gaps = vec![ForcedGap {
            source_index: 0,
            start: params.start_date.and_hms_opt(0, 0, 0).unwrap() + chrono::Duration::days(10),
            duration_minutes: 24 * 60,
        }];
        let (tems, _) = generate_synthetic(2, &params).unwrap();
        assert_eq!(tems[0].masked_count(), 288);
        assert_eq!(tems[1].masked_count(), 0);
    }
}

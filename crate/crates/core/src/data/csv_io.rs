//! Reading and writing the two-column series CSV (`timestamp,value`,
//! ISO-8601 timestamps, empty value field = gap).

use std::fs;
use std::path::Path;

use chrono::NaiveDateTime;

use crate::data::series::{RawSeries, RAW_STEP_MINUTES};
use crate::error::{Error, Result};

const TS_FORMAT: &str = "%Y-%m-%dT%H:%M:%S";

/// Reads a 5-minute series. Rows must be strictly increasing on the 5-minute
/// grid; missing rows become masked steps, as do rows with an empty value.
pub fn read_series_csv(path: &Path, source_id: &str) -> Result<RawSeries> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::Data(format!("cannot read {}: {e}", path.display())))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header.trim() == "timestamp,value" => {}
        other => {
            return Err(Error::Data(format!(
                "{}: expected header 'timestamp,value', got {:?}",
                path.display(),
                other.unwrap_or_default()
            )))
        }
    }

    let mut rows: Vec<(NaiveDateTime, Option<f64>)> = Vec::new();
    for (lineno, line) in lines.enumerate() {
        let line = line.trim_end();
        if line.is_empty() {
            continue;
        }
        let (ts_str, val_str) = line.split_once(',').ok_or_else(|| {
            Error::Data(format!(
                "{} line {}: expected 'timestamp,value'",
                path.display(),
                lineno + 2
            ))
        })?;
        let ts = NaiveDateTime::parse_from_str(ts_str, TS_FORMAT).map_err(|e| {
            Error::Data(format!(
                "{} line {}: bad timestamp '{ts_str}': {e}",
                path.display(),
                lineno + 2
            ))
        })?;
        let value = if val_str.trim().is_empty() {
            None
        } else {
            let v: f64 = val_str.trim().parse().map_err(|e| {
                Error::Data(format!(
                    "{} line {}: bad value '{val_str}': {e}",
                    path.display(),
                    lineno + 2
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Data(format!(
                    "{} line {}: non-finite value",
                    path.display(),
                    lineno + 2
                )));
            }
            Some(v)
        };
        if let Some((prev_ts, _)) = rows.last() {
            if ts <= *prev_ts {
                return Err(Error::Data(format!(
                    "{} line {}: timestamps must be strictly increasing",
                    path.display(),
                    lineno + 2
                )));
            }
        }
        rows.push((ts, value));
    }
    if rows.is_empty() {
        return Err(Error::Data(format!("{}: no data rows", path.display())));
    }

    let start = rows[0].0;
    let step = RAW_STEP_MINUTES as i64;
    let span_minutes = (rows.last().unwrap().0 - start).num_minutes();
    if span_minutes % step != 0 {
        return Err(Error::Data(format!(
            "{}: timestamps are not on a {RAW_STEP_MINUTES}-minute grid",
            path.display()
        )));
    }
    let len = (span_minutes / step) as usize + 1;
    let mut values = vec![f64::NAN; len];
    let mut mask = vec![true; len];
    for (ts, value) in rows {
        let delta = (ts - start).num_minutes();
        if delta % step != 0 {
            return Err(Error::Data(format!(
                "{}: timestamp {ts} is off the {RAW_STEP_MINUTES}-minute grid",
                path.display()
            )));
        }
        let idx = (delta / step) as usize;
        if let Some(v) = value {
            values[idx] = v;
            mask[idx] = false;
        }
    }
    RawSeries::new(source_id, start, RAW_STEP_MINUTES, values, mask)
}

/// Writes a series in the same format; masked steps get an empty value field.
pub fn write_series_csv(series: &RawSeries, path: &Path) -> Result<()> {
    let mut out = String::with_capacity(series.len() * 28 + 16);
    out.push_str("timestamp,value\n");
    for i in 0..series.len() {
        let ts = series.timestamp_at(i).format(TS_FORMAT);
        match series.value(i) {
            Some(v) => out.push_str(&format!("{ts},{v}\n")),
            None => out.push_str(&format!("{ts},\n")),
        }
    }
    fs::write(path, out)?;
    Ok(())
}

// Copyright 2026 The weakbell Authors
// SPDX-License-Identifier: Apache-2.0

//! CSV persistence for trial and prediction records. Reals are written with
//! 17 significant digits, which round-trips every `f64` exactly.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::predictor::PredictionRecord;
use crate::protocol::TrialRecord;

pub const RECORD_HEADER: [&str; 9] = [
    "trial_index",
    "settings_id",
    "raw1",
    "raw2",
    "alpha1",
    "alpha2",
    "beta1",
    "beta2",
    "seed",
];

pub const PREDICTION_HEADER: [&str; 9] = [
    "trial_index",
    "settings_id",
    "trajectory_mean1",
    "trajectory_mean2",
    "predicted1",
    "predicted2",
    "actual1",
    "actual2",
    "seed",
];

/// Scientific notation with 17 significant digits.
pub fn format_real(x: f64) -> String {
    format!("{x:.16e}")
}

fn format_id(id: u64) -> String {
    format!("{id:016x}")
}

fn parse<T: std::str::FromStr>(row: &csv::StringRecord, col: usize, line: u64) -> Result<T> {
    let raw = row.get(col).unwrap_or_default();
    raw.trim().parse().map_err(|_| Error::MalformedRecord {
        index: line,
        reason: format!("cannot parse column {col} value `{raw}`"),
    })
}

fn parse_id(row: &csv::StringRecord, col: usize, line: u64) -> Result<u64> {
    let raw = row.get(col).unwrap_or_default();
    u64::from_str_radix(raw.trim(), 16).map_err(|_| Error::MalformedRecord {
        index: line,
        reason: format!("bad settings_id `{raw}`"),
    })
}

fn check_header<R: Read>(reader: &mut csv::Reader<R>, expected: &[&str]) -> Result<()> {
    let header = reader.headers()?;
    if header.iter().ne(expected.iter().copied()) {
        return Err(Error::InvalidParameter(format!(
            "unexpected CSV header `{}` (expected `{}`)",
            header.iter().collect::<Vec<_>>().join(","),
            expected.join(",")
        )));
    }
    Ok(())
}

pub fn write_records<W: Write>(records: &[TrialRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(RECORD_HEADER)?;
    for r in records {
        w.write_record([
            r.trial_index.to_string(),
            format_id(r.settings_id),
            format_real(r.raw1),
            format_real(r.raw2),
            format_real(r.alpha1),
            format_real(r.alpha2),
            r.beta1.to_string(),
            r.beta2.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<R: Read>(reader: R) -> Result<Vec<TrialRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    check_header(&mut rdr, &RECORD_HEADER)?;
    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let line = line as u64 + 2;
        out.push(TrialRecord {
            trial_index: parse(&row, 0, line)?,
            settings_id: parse_id(&row, 1, line)?,
            raw1: parse(&row, 2, line)?,
            raw2: parse(&row, 3, line)?,
            alpha1: parse(&row, 4, line)?,
            alpha2: parse(&row, 5, line)?,
            beta1: parse(&row, 6, line)?,
            beta2: parse(&row, 7, line)?,
            seed: parse(&row, 8, line)?,
        });
    }
    Ok(out)
}

pub fn emit_records(records: &[TrialRecord], path: &Path) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    write_records(records, file)
}

pub fn write_predictions<W: Write>(records: &[PredictionRecord], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(PREDICTION_HEADER)?;
    for r in records {
        w.write_record([
            r.trial_index.to_string(),
            format_id(r.settings_id),
            format_real(r.trajectory_mean1),
            format_real(r.trajectory_mean2),
            r.predicted1.to_string(),
            r.predicted2.to_string(),
            r.actual1.to_string(),
            r.actual2.to_string(),
            r.seed.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_predictions<R: Read>(reader: R) -> Result<Vec<PredictionRecord>> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_reader(reader);
    check_header(&mut rdr, &PREDICTION_HEADER)?;
    let mut out = Vec::new();
    for (line, row) in rdr.records().enumerate() {
        let row = row?;
        let line = line as u64 + 2;
        out.push(PredictionRecord {
            trial_index: parse(&row, 0, line)?,
            settings_id: parse_id(&row, 1, line)?,
            trajectory_mean1: parse(&row, 2, line)?,
            trajectory_mean2: parse(&row, 3, line)?,
            predicted1: parse(&row, 4, line)?,
            predicted2: parse(&row, 5, line)?,
            actual1: parse(&row, 6, line)?,
            actual2: parse(&row, 7, line)?,
            seed: parse(&row, 8, line)?,
        });
    }
    Ok(out)
}

pub fn emit_predictions(records: &[PredictionRecord], path: &Path) -> Result<()> {
    let file = BufWriter::new(File::create(path)?);
    write_predictions(records, file)
}

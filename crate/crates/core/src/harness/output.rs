//! Persistence of experiment results.

use std::io::Write;
use std::path::Path;

use super::run::{ExperimentOutput, IntervalRecord, McRecord};
use crate::error::{Error, Result};
use crate::io::{fmt_f64, write_atomic, write_json_atomic};

pub const RECORDS_HEADER: [&str; 10] = [
    "experiment_id",
    "replicate",
    "n",
    "h",
    "x0",
    "estimate",
    "truth",
    "squared_error",
    "standardized",
    "seed",
];

pub fn write_records(w: &mut dyn Write, records: &[McRecord]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(RECORDS_HEADER)?;
    for r in records {
        csv.write_record([
            r.experiment_id.clone(),
            r.replicate.to_string(),
            r.n.to_string(),
            fmt_f64(r.h),
            fmt_f64(r.x0),
            fmt_f64(r.estimate),
            fmt_f64(r.truth),
            fmt_f64(r.squared_error),
            r.standardized.map(fmt_f64).unwrap_or_default(),
            r.seed.to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

pub fn write_intervals(w: &mut dyn Write, intervals: &[IntervalRecord]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["experiment_id", "replicate", "n", "h", "x0", "estimate", "kde", "lo", "hi", "truth", "covered"])?;
    for r in intervals {
        csv.write_record([
            r.experiment_id.clone(),
            r.replicate.to_string(),
            r.n.to_string(),
            fmt_f64(r.h),
            fmt_f64(r.x0),
            fmt_f64(r.estimate),
            fmt_f64(r.kde),
            fmt_f64(r.lo),
            fmt_f64(r.hi),
            fmt_f64(r.truth),
            u8::from(r.lo <= r.truth && r.truth <= r.hi).to_string(),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

/// Writes `records.csv`, `summary.json` and (when present) `intervals.csv`
/// into `dir`, each atomically.
pub fn write_outputs(dir: &Path, out: &ExperimentOutput) -> Result<()> {
    write_atomic(&dir.join("records.csv"), |w| write_records(w, &out.records))?;
    if !out.intervals.is_empty() {
        write_atomic(&dir.join("intervals.csv"), |w| write_intervals(w, &out.intervals))?;
    }
    write_json_atomic(&dir.join("summary.json"), &out.summary)
}

/// Reads a records CSV written by [`write_records`].
pub fn read_records(path: &Path) -> Result<Vec<McRecord>> {
    let mut rdr = csv::Reader::from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(RECORDS_HEADER.iter().copied()) {
        return Err(Error::Data(format!("{}: unexpected records header", path.display())));
    }
    let num = |s: &str, line: usize| -> Result<f64> {
        s.parse()
            .map_err(|_| Error::Data(format!("{}: row {line}: '{s}' is not a number", path.display())))
    };
    let int = |s: &str, line: usize| -> Result<u64> {
        s.parse()
            .map_err(|_| Error::Data(format!("{}: row {line}: '{s}' is not an integer", path.display())))
    };
    let mut out = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        out.push(McRecord {
            experiment_id: rec[0].to_string(),
            replicate: int(&rec[1], line)? as usize,
            n: int(&rec[2], line)? as usize,
            h: num(&rec[3], line)?,
            x0: num(&rec[4], line)?,
            estimate: num(&rec[5], line)?,
            truth: num(&rec[6], line)?,
            squared_error: num(&rec[7], line)?,
            standardized: if rec[8].is_empty() { None } else { Some(num(&rec[8], line)?) },
            seed: int(&rec[9], line)?,
        });
    }
    Ok(out)
}

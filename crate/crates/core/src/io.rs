//! CSV/JSON persistence: series files, estimate tables and atomic writes.

use std::fs;
use std::io::{BufWriter, Write};
use std::path::Path;

use serde::Serialize;
use tempfile::NamedTempFile;

use crate::error::{Error, Result};
use crate::estimators::EstimateResult;

/// Locale-independent shortest round-trip decimal representation.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:?}")
    }
}

/// Writes through a temporary file in the target directory and renames it
/// into place, so an interrupted run never leaves a partial file at `path`.
pub fn write_atomic<F>(path: &Path, fill: F) -> Result<()>
where
    F: FnOnce(&mut dyn Write) -> Result<()>,
{
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    fs::create_dir_all(dir)?;
    let tmp = NamedTempFile::new_in(dir)?;
    {
        let mut w = BufWriter::new(tmp.as_file());
        fill(&mut w)?;
        w.flush()?;
    }
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn write_json_atomic<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    write_atomic(path, |w| {
        serde_json::to_writer_pretty(&mut *w, value)?;
        w.write_all(b"\n")?;
        Ok(())
    })
}

/// Writes `index,x,y`; with `y = None` only `index,x`.
pub fn write_series(path: &Path, x: &[f64], y: Option<&[f64]>) -> Result<()> {
    write_atomic(path, |w| {
        let mut csv = csv::Writer::from_writer(w);
        match y {
            Some(y) => {
                csv.write_record(["index", "x", "y"])?;
                for (i, (a, b)) in x.iter().zip(y).enumerate() {
                    csv.write_record([i.to_string(), fmt_f64(*a), fmt_f64(*b)])?;
                }
            }
            None => {
                csv.write_record(["index", "x"])?;
                for (i, a) in x.iter().enumerate() {
                    csv.write_record([i.to_string(), fmt_f64(*a)])?;
                }
            }
        }
        csv.flush()?;
        Ok(())
    })
}

/// Reads the observations from a CSV with a header row. The `y` column is
/// used when present, otherwise `x`, otherwise the only column.
pub fn read_series(path: &Path) -> Result<Vec<f64>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let headers = rdr.headers()?.clone();
    if headers.is_empty() {
        return Err(Error::Data(format!("{}: no observations", path.display())));
    }
    let col = ["y", "x"]
        .iter()
        .find_map(|name| headers.iter().position(|h| h == *name))
        .or(if headers.len() == 1 { Some(0) } else { None })
        .ok_or_else(|| Error::Data(format!("{}: no 'y' or 'x' column", path.display())))?;
    let mut out = Vec::new();
    for (line, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let field = rec
            .get(col)
            .ok_or_else(|| Error::Data(format!("{}: row {} is short", path.display(), line + 2)))?;
        let v: f64 = field
            .parse()
            .map_err(|_| Error::Data(format!("{}: row {}: '{field}' is not a number", path.display(), line + 2)))?;
        if !v.is_finite() {
            return Err(Error::Data(format!("{}: row {}: non-finite value", path.display(), line + 2)));
        }
        out.push(v);
    }
    if out.is_empty() {
        return Err(Error::Data(format!("{}: no observations", path.display())));
    }
    Ok(out)
}

/// Estimate table with header `kind,x0,n,h,value`.
pub fn write_estimates(w: &mut dyn Write, results: &[EstimateResult]) -> Result<()> {
    let mut csv = csv::Writer::from_writer(w);
    csv.write_record(["kind", "x0", "n", "h", "value"])?;
    for r in results {
        csv.write_record([
            r.kind.as_str().to_string(),
            fmt_f64(r.x0),
            r.n.to_string(),
            fmt_f64(r.h),
            fmt_f64(r.value),
        ])?;
    }
    csv.flush()?;
    Ok(())
}

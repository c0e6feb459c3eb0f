//! Endmember spectra as CSV: a `band` column followed by one column per
//! endmember (`em1 … emK`), one row per band.

use std::io::{Read, Write};

use ndarray::Array2;

use crate::error::{Error, Result};
use crate::types::EndmemberMatrix;

const WHAT: &str = "endmember table";

fn csv_err(e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::Io(io),
        other => Error::format(WHAT, format!("{other:?}")),
    }
}

/// Writes `m` with row labels `band_ids` (1-based band numbers when `None`).
pub fn write_endmembers<W: Write>(
    m: &EndmemberMatrix,
    band_ids: Option<&[usize]>,
    writer: W,
) -> Result<()> {
    if let Some(ids) = band_ids {
        if ids.len() != m.bands() {
            return Err(Error::shape(format!(
                "{} band ids for {} bands",
                ids.len(),
                m.bands()
            )));
        }
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header = vec!["band".to_string()];
    header.extend((1..=m.count()).map(|k| format!("em{k}")));
    w.write_record(&header).map_err(csv_err)?;
    for (l, row) in m.data().rows().into_iter().enumerate() {
        let id = band_ids.map_or(l + 1, |ids| ids[l]);
        let mut record = vec![id.to_string()];
        record.extend(row.iter().map(|v| format!("{v:e}")));
        w.write_record(&record).map_err(csv_err)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a table written by [`write_endmembers`], returning the matrix and
/// its band labels. Values must be finite and nonnegative.
pub fn read_endmembers<R: Read>(reader: R) -> Result<(EndmemberMatrix, Vec<usize>)> {
    let mut r = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let header = r.headers().map_err(csv_err)?.clone();
    if header.get(0) != Some("band") {
        return Err(Error::format(WHAT, "first column must be `band`"));
    }
    let k = header.len() - 1;
    if k == 0 {
        return Err(Error::format(WHAT, "no endmember columns"));
    }
    let mut ids = Vec::new();
    let mut values = Vec::new();
    for (line, record) in r.records().enumerate() {
        let record = record.map_err(csv_err)?;
        let at = |what: &str| format!("row {}: {what}", line + 1);
        let id: usize = record[0]
            .trim()
            .parse()
            .map_err(|_| Error::format(WHAT, at("bad band id")))?;
        for field in record.iter().skip(1) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::format(WHAT, at("bad value")))?;
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::format(WHAT, at("value must be finite and nonnegative")));
            }
            values.push(v);
        }
        ids.push(id);
    }
    if ids.is_empty() {
        return Err(Error::format(WHAT, "no rows"));
    }
    let data = Array2::from_shape_vec((ids.len(), k), values)
        .map_err(|e| Error::format(WHAT, e.to_string()))?;
    Ok((EndmemberMatrix::new(data)?, ids))
}

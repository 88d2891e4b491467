//! Panel import/export: CSV with a `y1..yn` header, and a compact binary
//! layout (u64 LE `T`, u64 LE `n`, then `T*n` f64 LE values row-major).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use nalgebra::DMatrix;

use crate::dgp::TimeSeriesPanel;
use crate::error::{Error, Result};
use crate::scalar::Scalar;

pub fn write_csv<T: Scalar, W: Write>(panel: &TimeSeriesPanel<T>, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record((1..=panel.n()).map(|j| format!("y{j}")))?;
    let mut rec = Vec::with_capacity(panel.n());
    for t in 0..panel.len() {
        rec.clear();
        // shortest round-trip representation
        rec.extend(panel.data.row(t).iter().map(|v| v.as_f64().to_string()));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_csv<T: Scalar, R: Read>(input: R) -> Result<TimeSeriesPanel<T>> {
    let mut r = csv::Reader::from_reader(input);
    let n = r.headers()?.len();
    if n == 0 {
        return Err(Error::Format("CSV panel has no columns".into()));
    }
    let mut vals = Vec::new();
    let mut rows = 0;
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != n {
            return Err(Error::Format(format!("row {} has {} fields, expected {n}", line + 1, rec.len())));
        }
        for f in rec.iter() {
            let v: f64 = f
                .trim()
                .parse()
                .map_err(|_| Error::Format(format!("row {}: cannot parse {f:?}", line + 1)))?;
            vals.push(T::of(v));
        }
        rows += 1;
    }
    TimeSeriesPanel::new(DMatrix::from_row_slice(rows, n, &vals))
}

pub fn write_binary<T: Scalar, W: Write>(panel: &TimeSeriesPanel<T>, mut out: W) -> Result<()> {
    out.write_all(&(panel.len() as u64).to_le_bytes())?;
    out.write_all(&(panel.n() as u64).to_le_bytes())?;
    for t in 0..panel.len() {
        for v in panel.data.row(t).iter() {
            out.write_all(&v.as_f64().to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

pub fn read_binary<T: Scalar, R: Read>(mut input: R) -> Result<TimeSeriesPanel<T>> {
    let mut word = [0u8; 8];
    input.read_exact(&mut word)?;
    let rows = u64::from_le_bytes(word) as usize;
    input.read_exact(&mut word)?;
    let n = u64::from_le_bytes(word) as usize;
    let len = rows
        .checked_mul(n)
        .ok_or_else(|| Error::Format("binary header dimensions overflow".into()))?;
    let mut vals = Vec::with_capacity(len.min(1 << 28));
    for _ in 0..len {
        input
            .read_exact(&mut word)
            .map_err(|_| Error::Format(format!("binary panel truncated: expected {rows}x{n} values")))?;
        vals.push(T::of(f64::from_le_bytes(word)));
    }
    let mut rest = [0u8; 1];
    if input.read(&mut rest)? != 0 {
        return Err(Error::Format("trailing bytes after binary panel".into()));
    }
    TimeSeriesPanel::new(DMatrix::from_row_slice(rows, n, &vals))
}

/// Reads a panel, picking the format from the extension (`.bin` or CSV).
pub fn load_panel<T: Scalar>(path: &Path) -> Result<TimeSeriesPanel<T>> {
    let f = BufReader::new(File::open(path)?);
    if path.extension().is_some_and(|e| e == "bin") {
        read_binary(f)
    } else {
        read_csv(f)
    }
}

pub fn save_csv<T: Scalar>(panel: &TimeSeriesPanel<T>, path: &Path) -> Result<()> {
    write_csv(panel, BufWriter::new(File::create(path)?))
}

pub fn save_binary<T: Scalar>(panel: &TimeSeriesPanel<T>, path: &Path) -> Result<()> {
    write_binary(panel, BufWriter::new(File::create(path)?))
}

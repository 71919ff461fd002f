//! Small helpers for the CSV files the crate reads and writes.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::Result;

/// Shortest round-trip decimal for `x`; scientific notation only for very
/// small or very large magnitudes so the files stay readable.
pub fn fmt_f64(x: f64) -> String {
    let ax = x.abs();
    if x != 0.0 && x.is_finite() && !(1e-5..1e16).contains(&ax) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

/// Write a header line and rows of already-formatted fields.
pub fn write_rows<P: AsRef<Path>>(path: P, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    writeln!(out, "{}", header.join(","))?;
    for row in rows {
        writeln!(out, "{}", row.join(","))?;
    }
    out.flush()?;
    Ok(())
}

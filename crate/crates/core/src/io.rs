//! CSV and JSON artifacts. Numbers are written with 17 significant digits
//! so files are byte-identical across runs with the same seeds.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::pulse::PulseTrace;
use crate::trajectory::Trajectory;

/// Fixed 17-significant-digit scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// CSV text from named columns of equal length.
pub fn columns_csv(headers: &[&str], columns: &[&[f64]]) -> Result<String> {
    if headers.len() != columns.len() {
        return Err(Error::Config(format!("{} headers for {} columns", headers.len(), columns.len())));
    }
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return Err(Error::GridMismatch("CSV columns differ in length".into()));
    }
    let mut out = headers.join(",");
    out.push('\n');
    for r in 0..rows {
        let line: Vec<String> = columns.iter().map(|c| fmt_f64(c[r])).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    Ok(out)
}

pub fn trajectory_csv(t: &Trajectory) -> String {
    columns_csv(&["t", "value"], &[&t.grid(), &t.values]).expect("matching columns")
}

pub fn pulse_csv(p: &PulseTrace) -> String {
    columns_csv(&["s", "value"], &[&p.s_grid(), &p.values]).expect("matching columns")
}

/// Parse CSV written by [`columns_csv`]: header row plus numeric rows.
pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<f64>>)> {
    let mut lines = text.lines();
    let header: Vec<String> = lines
        .next()
        .ok_or_else(|| Error::Config("empty CSV".into()))?
        .split(',')
        .map(str::to_string)
        .collect();
    let mut cols = vec![Vec::new(); header.len()];
    for (k, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != header.len() {
            return Err(Error::Config(format!("CSV row {} has {} fields, expected {}", k + 1, fields.len(), header.len())));
        }
        for (c, f) in cols.iter_mut().zip(fields) {
            c.push(f.trim().parse::<f64>().map_err(|e| Error::Config(format!("CSV row {}: {e}", k + 1)))?);
        }
    }
    Ok((header, cols))
}

/// Read a `t,value` CSV back into a trajectory on its (uniform) grid.
pub fn read_trajectory_csv(text: &str, generator: &str, seed: u64) -> Result<Trajectory> {
    let (_, cols) = parse_csv(text)?;
    if cols.len() != 2 || cols[0].len() < 2 {
        return Err(Error::Config("trajectory CSV needs two columns and at least two rows".into()));
    }
    let dt = cols[0][1] - cols[0][0];
    Trajectory::new(cols[0][0], dt, cols[1].clone(), generator, seed)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)?;
    }
    let mut f = fs::File::create(path)?;
    f.write_all(text.as_bytes())?;
    Ok(())
}

pub fn to_json<T: Serialize>(v: &T) -> Result<String> {
    let mut s = serde_json::to_string_pretty(v)?;
    s.push('\n');
    Ok(s)
}

//! On-disk interchange for real-valued grids (magnitudes, phases, phase
//! differences).
//!
//! The binary layout is a 16-byte header followed by the cells:
//!
//! ```text
//! bytes 0..4   magic "GRD1"
//! bytes 4..8   rows as u32 little-endian
//! bytes 8..12  cols as u32 little-endian
//! bytes 12..16 reserved, zero
//! data         rows * cols f64 little-endian, row-major
//! ```
//!
//! Paths ending in `.csv` are written and read as plain CSV instead, one
//! row per line, for inspection with external tools.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{io, HarnessError};

const MAGIC: &[u8; 4] = b"GRD1";

fn is_csv(path: &Path) -> bool {
    path.extension()
        .map(|e| e.eq_ignore_ascii_case("csv"))
        .unwrap_or(false)
}

/// Writes a grid, choosing CSV or the binary layout from the extension.
pub fn write_grid(path: &Path, grid: &Array2<f64>) -> Result<(), HarnessError> {
    if is_csv(path) {
        write_csv(path, grid)
    } else {
        write_binary(path, grid)
    }
}

/// Reads a grid written by [`write_grid`].
pub fn read_grid(path: &Path) -> Result<Array2<f64>, HarnessError> {
    if is_csv(path) {
        read_csv(path)
    } else {
        read_binary(path)
    }
}

fn write_binary(path: &Path, grid: &Array2<f64>) -> Result<(), HarnessError> {
    let (rows, cols) = grid.dim();
    if rows > u32::MAX as usize || cols > u32::MAX as usize {
        return Err(HarnessError::Format(format!(
            "grid {rows}x{cols} exceeds the header range"
        )));
    }
    let file = File::create(path).map_err(|e| io(path, e))?;
    let mut w = BufWriter::new(file);
    w.write_all(MAGIC).map_err(|e| io(path, e))?;
    w.write_all(&(rows as u32).to_le_bytes())
        .map_err(|e| io(path, e))?;
    w.write_all(&(cols as u32).to_le_bytes())
        .map_err(|e| io(path, e))?;
    w.write_all(&0u32.to_le_bytes()).map_err(|e| io(path, e))?;
    for row in grid.rows() {
        for &v in row {
            w.write_all(&v.to_le_bytes()).map_err(|e| io(path, e))?;
        }
    }
    w.flush().map_err(|e| io(path, e))
}

fn read_binary(path: &Path) -> Result<Array2<f64>, HarnessError> {
    let file = File::open(path).map_err(|e| io(path, e))?;
    let mut r = BufReader::new(file);
    let mut header = [0u8; 16];
    r.read_exact(&mut header).map_err(|e| io(path, e))?;
    if &header[0..4] != MAGIC {
        return Err(HarnessError::Format(format!(
            "{}: bad magic, not a grid file",
            path.display()
        )));
    }
    let rows = u32::from_le_bytes(header[4..8].try_into().unwrap()) as usize;
    let cols = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let count = rows.checked_mul(cols).ok_or_else(|| {
        HarnessError::Format(format!("{}: grid dimensions overflow", path.display()))
    })?;
    let mut data = Vec::with_capacity(count);
    let mut buf = [0u8; 8];
    for _ in 0..count {
        r.read_exact(&mut buf).map_err(|e| io(path, e))?;
        data.push(f64::from_le_bytes(buf));
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(|e| io(path, e))? != 0 {
        return Err(HarnessError::Format(format!(
            "{}: trailing bytes after grid data",
            path.display()
        )));
    }
    Array2::from_shape_vec((rows, cols), data)
        .map_err(|e| HarnessError::Format(format!("{}: {e}", path.display())))
}

fn write_csv(path: &Path, grid: &Array2<f64>) -> Result<(), HarnessError> {
    let file = File::create(path).map_err(|e| io(path, e))?;
    let mut w = csv::WriterBuilder::new()
        .has_headers(false)
        .from_writer(BufWriter::new(file));
    for row in grid.rows() {
        let record: Vec<String> = row.iter().map(|v| format!("{v:e}")).collect();
        w.write_record(&record)
            .map_err(|e| HarnessError::Format(format!("{}: {e}", path.display())))?;
    }
    w.flush().map_err(|e| io(path, e))
}

fn read_csv(path: &Path) -> Result<Array2<f64>, HarnessError> {
    let file = File::open(path).map_err(|e| io(path, e))?;
    let mut r = csv::ReaderBuilder::new()
        .has_headers(false)
        .from_reader(BufReader::new(file));
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for record in r.records() {
        let record =
            record.map_err(|e| HarnessError::Format(format!("{}: {e}", path.display())))?;
        match cols {
            None => cols = Some(record.len()),
            Some(c) if c != record.len() => {
                return Err(HarnessError::Format(format!(
                    "{}: ragged row of {} cells, expected {c}",
                    path.display(),
                    record.len()
                )))
            }
            _ => {}
        }
        for cell in record.iter() {
            let v: f64 = cell.trim().parse().map_err(|e| {
                HarnessError::Format(format!("{}: bad cell {cell:?}: {e}", path.display()))
            })?;
            data.push(v);
        }
        rows += 1;
    }
    let cols = cols.unwrap_or(0);
    Array2::from_shape_vec((rows, cols), data)
        .map_err(|e| HarnessError::Format(format!("{}: {e}", path.display())))
}

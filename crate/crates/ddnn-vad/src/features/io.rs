//! On-disk feature matrices: a small binary container (magic, dims header,
//! row-major 64-bit floats) plus a sidecar text file of one 0/1 label per
//! frame.

use std::io::{Read, Write};
use std::path::Path;

use crate::{Error, Result};

const MAGIC: &[u8; 4] = b"DDNF";

pub fn save_feature_matrix(rows: &[Vec<f64>], path: &Path) -> Result<()> {
    let cols = rows.first().map(|r| r.len()).unwrap_or(0);
    let file = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(file);
    w.write_all(MAGIC)?;
    w.write_all(&(rows.len() as u64).to_le_bytes())?;
    w.write_all(&(cols as u32).to_le_bytes())?;
    for row in rows {
        if row.len() != cols {
            return Err(Error::dim(cols, row.len(), "feature matrix row"));
        }
        for v in row {
            w.write_all(&v.to_le_bytes())?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn load_feature_matrix(path: &Path) -> Result<Vec<Vec<f64>>> {
    let file = std::fs::File::open(path)?;
    let mut r = std::io::BufReader::new(file);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Data(format!(
            "{} is not a feature matrix file",
            path.display()
        )));
    }
    let mut b8 = [0u8; 8];
    r.read_exact(&mut b8)?;
    let n_rows = u64::from_le_bytes(b8) as usize;
    let mut b4 = [0u8; 4];
    r.read_exact(&mut b4)?;
    let cols = u32::from_le_bytes(b4) as usize;
    let mut rows = Vec::with_capacity(n_rows);
    for _ in 0..n_rows {
        let mut row = Vec::with_capacity(cols);
        for _ in 0..cols {
            r.read_exact(&mut b8)?;
            row.push(f64::from_le_bytes(b8));
        }
        rows.push(row);
    }
    Ok(rows)
}

pub fn save_labels(labels: &[u8], path: &Path) -> Result<()> {
    let mut text = String::with_capacity(labels.len() * 2);
    for &l in labels {
        text.push(if l == 1 { '1' } else { '0' });
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

pub fn load_labels(path: &Path) -> Result<Vec<u8>> {
    let text = std::fs::read_to_string(path)?;
    text.lines()
        .map(|line| match line.trim() {
            "0" => Ok(0),
            "1" => Ok(1),
            other => Err(Error::Data(format!("bad label line {other:?}"))),
        })
        .collect()
}

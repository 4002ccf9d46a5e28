//! File formats for matrices, labels and masks.
//!
//! RMAT is the canonical binary matrix format:
//!
//! ```text
//! offset  size        content
//! 0       4           b"RMAT"
//! 4       1           version (= 1)
//! 5       8           rows, u64 little-endian
//! 13      8           cols, u64 little-endian
//! 21      8*rows*cols row-major IEEE-754 f64, little-endian
//! ```
//!
//! CSV matrices use `,` as delimiter and `.` as decimal separator, no header.
//! Files are read as RMAT when they start with the magic bytes and as CSV
//! otherwise. Labels are one integer per line.

use std::fs;
use std::path::Path;

use crate::dataset::LabelVector;
use crate::error::{Error, Result};
use crate::masking::Mask;
use crate::matrix::Matrix;

pub const RMAT_MAGIC: [u8; 4] = *b"RMAT";
pub const RMAT_VERSION: u8 = 1;
pub const RMAT_HEADER_LEN: usize = 21;

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(&RMAT_MAGIC) {
        return decode_rmat(&bytes);
    }
    let is_csv = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("csv") || e.eq_ignore_ascii_case("txt"));
    if !is_csv && bytes.iter().any(|b| !b.is_ascii()) {
        return Err(Error::Format(format!(
            "{}: neither RMAT magic nor text content",
            path.display()
        )));
    }
    let text = String::from_utf8(bytes)
        .map_err(|_| Error::Format(format!("{}: CSV is not valid UTF-8", path.display())))?;
    parse_csv_matrix(&text)
}

pub fn write_matrix(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_rmat(m)).map_err(|e| Error::io(path, e))
}

pub fn encode_rmat(m: &Matrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(RMAT_HEADER_LEN + 8 * m.data().len());
    out.extend_from_slice(&RMAT_MAGIC);
    out.push(RMAT_VERSION);
    out.extend_from_slice(&(m.rows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.cols() as u64).to_le_bytes());
    for x in m.data() {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

pub fn decode_rmat(bytes: &[u8]) -> Result<Matrix> {
    if bytes.len() < RMAT_HEADER_LEN {
        return Err(Error::Format(format!(
            "RMAT header needs {RMAT_HEADER_LEN} bytes, got {}",
            bytes.len()
        )));
    }
    if bytes[..4] != RMAT_MAGIC {
        return Err(Error::Format("missing RMAT magic".into()));
    }
    if bytes[4] != RMAT_VERSION {
        return Err(Error::Format(format!(
            "unsupported RMAT version {}",
            bytes[4]
        )));
    }
    let rows = u64::from_le_bytes(bytes[5..13].try_into().unwrap());
    let cols = u64::from_le_bytes(bytes[13..21].try_into().unwrap());
    let expected = rows
        .checked_mul(cols)
        .and_then(|c| c.checked_mul(8))
        .and_then(|b| usize::try_from(b).ok())
        .ok_or_else(|| Error::Format(format!("RMAT dimensions {rows}x{cols} overflow")))?;
    let payload = &bytes[RMAT_HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::Length(format!(
            "{rows}x{cols} RMAT needs {expected} payload bytes, found {}",
            payload.len()
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Matrix::new(rows as usize, cols as usize, data)
}

pub fn parse_csv_matrix(text: &str) -> Result<Matrix> {
    let mut data = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let before = data.len();
        for tok in line.split(',') {
            let tok = tok.trim();
            let x: f64 = tok.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                message: format!("not a number: {tok:?}"),
            })?;
            data.push(x);
        }
        let width = data.len() - before;
        match cols {
            None => cols = Some(width),
            Some(c) if c != width => {
                return Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("expected {c} fields, found {width}"),
                })
            }
            _ => {}
        }
        rows += 1;
    }
    Matrix::new(rows, cols.unwrap_or(0), data)
}

pub fn write_matrix_csv(m: &Matrix, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for row in m.row_iter() {
        let line: Vec<String> = row.iter().map(|x| x.to_string()).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Reads one integer per line and remaps ids to `0..c` by first occurrence.
pub fn read_labels(path: impl AsRef<Path>) -> Result<LabelVector> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text)
}

pub fn parse_labels(text: &str) -> Result<LabelVector> {
    let mut raw = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let tok = line.trim();
        if tok.is_empty() {
            continue;
        }
        let id: i64 = tok.parse().map_err(|_| Error::Parse {
            line: lineno + 1,
            message: format!("not an integer label: {tok:?}"),
        })?;
        raw.push(id);
    }
    Ok(LabelVector::canonical(&raw))
}

pub fn write_labels(labels: &[usize], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::with_capacity(labels.len() * 3);
    for l in labels {
        out.push_str(&l.to_string());
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Mask CSV: one row per sample, one `0`/`1` column per view.
pub fn read_mask(path: impl AsRef<Path>) -> Result<Mask> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mask(&text)
}

pub fn parse_mask(text: &str) -> Result<Mask> {
    let mut table = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let row = line
            .split(',')
            .map(|t| match t.trim() {
                "1" => Ok(true),
                "0" => Ok(false),
                other => Err(Error::Parse {
                    line: lineno + 1,
                    message: format!("mask entries must be 0 or 1, found {other:?}"),
                }),
            })
            .collect::<Result<Vec<_>>>()?;
        table.push(row);
    }
    Mask::new(table)
}

pub fn write_mask(mask: &Mask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::new();
    for p in 0..mask.num_samples() {
        let line: Vec<&str> = mask
            .row(p)
            .iter()
            .map(|&x| if x { "1" } else { "0" })
            .collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

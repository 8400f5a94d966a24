//! Grayscale PFM: "Pf" header, then 32-bit floats in bottom-up row order.
//! The scale line's sign encodes endianness; we always write -1.0
//! (little-endian).

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::field::ScalarField;

pub fn write_pfm(path: &Path, h: &ScalarField) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write!(out, "Pf\n{} {}\n-1.0\n", h.width(), h.height())?;
    for v in (0..h.height()).rev() {
        for u in 0..h.width() {
            out.write_all(&(h.at(u, v) as f32).to_le_bytes())?;
        }
    }
    out.flush()?;
    Ok(())
}

fn malformed(reason: impl Into<String>) -> Error {
    Error::Malformed {
        format: "pfm",
        reason: reason.into(),
    }
}

/// Read one whitespace-delimited header token.
fn read_token(reader: &mut impl Read) -> Result<String> {
    let mut token = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        if reader.read(&mut byte)? == 0 {
            if token.is_empty() {
                return Err(malformed("unexpected end of header"));
            }
            break;
        }
        if byte[0].is_ascii_whitespace() {
            if token.is_empty() {
                continue;
            }
            break;
        }
        token.push(byte[0]);
        if token.len() > 64 {
            return Err(malformed("header token too long"));
        }
    }
    String::from_utf8(token).map_err(|_| malformed("non-utf8 header"))
}

pub fn read_pfm(path: &Path) -> Result<ScalarField> {
    let mut reader = BufReader::new(File::open(path)?);
    let magic = read_token(&mut reader)?;
    if magic != "Pf" {
        return Err(malformed(format!(
            "expected grayscale magic 'Pf', got '{magic}'"
        )));
    }
    let width: usize = read_token(&mut reader)?
        .parse()
        .map_err(|_| malformed("bad width"))?;
    let height: usize = read_token(&mut reader)?
        .parse()
        .map_err(|_| malformed("bad height"))?;
    let scale: f64 = read_token(&mut reader)?
        .parse()
        .map_err(|_| malformed("bad scale"))?;
    if width < 2 || height < 2 {
        return Err(Error::GridTooSmall { width, height });
    }
    if width.checked_mul(height).map(|n| n > 1 << 30).unwrap_or(true) {
        return Err(malformed("dimensions overflow"));
    }
    let little_endian = scale < 0.0;
    let mut raw = vec![0u8; width * height * 4];
    reader.read_exact(&mut raw).map_err(|_| malformed("truncated sample data"))?;
    let mut data = vec![0.0f64; width * height];
    for v_file in 0..height {
        let v = height - 1 - v_file; // stored bottom-up
        for u in 0..width {
            let o = (v_file * width + u) * 4;
            let bytes = [raw[o], raw[o + 1], raw[o + 2], raw[o + 3]];
            let sample = if little_endian {
                f32::from_le_bytes(bytes)
            } else {
                f32::from_be_bytes(bytes)
            };
            data[v * width + u] = sample as f64;
        }
    }
    ScalarField::new(width, height, data)
}

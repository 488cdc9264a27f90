//! Binary matrix exchange format.
//!
//! ```text
//! magic   8 bytes   "RDMDMAT1" (real) or "RDMDCPX1" (complex)
//! rows    u64 LE
//! cols    u64 LE
//! data    row-major f64 LE; complex entries as interleaved (re, im)
//! ```

use std::fs;
use std::path::Path;

use crate::{Complex64, ComplexMatrix, Error, Matrix, Result};

pub const REAL_MAGIC: &[u8; 8] = b"RDMDMAT1";
pub const COMPLEX_MAGIC: &[u8; 8] = b"RDMDCPX1";

pub fn encode_matrix(a: &Matrix) -> Vec<u8> {
    let mut out = header(REAL_MAGIC, a.nrows(), a.ncols(), 8 * a.len());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out.extend_from_slice(&a[(i, j)].to_le_bytes());
        }
    }
    out
}

pub fn encode_complex_matrix(a: &ComplexMatrix) -> Vec<u8> {
    let mut out = header(COMPLEX_MAGIC, a.nrows(), a.ncols(), 16 * a.len());
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            out.extend_from_slice(&a[(i, j)].re.to_le_bytes());
            out.extend_from_slice(&a[(i, j)].im.to_le_bytes());
        }
    }
    out
}

fn header(magic: &[u8; 8], rows: usize, cols: usize, payload: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(24 + payload);
    out.extend_from_slice(magic);
    out.extend_from_slice(&(rows as u64).to_le_bytes());
    out.extend_from_slice(&(cols as u64).to_le_bytes());
    out
}

fn parse_header<'a>(bytes: &'a [u8], magic: &[u8; 8], width: usize, origin: &Path) -> Result<(usize, usize, &'a [u8])> {
    if bytes.len() < 24 {
        return Err(Error::format(origin, "truncated header"));
    }
    if &bytes[..8] != magic {
        return Err(Error::format(
            origin,
            format!("bad magic {:?}, expected {:?}", String::from_utf8_lossy(&bytes[..8]), String::from_utf8_lossy(magic)),
        ));
    }
    let rows = u64::from_le_bytes(bytes[8..16].try_into().unwrap()) as usize;
    let cols = u64::from_le_bytes(bytes[16..24].try_into().unwrap()) as usize;
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(width))
        .ok_or_else(|| Error::format(origin, "shape overflows"))?;
    let body = &bytes[24..];
    if body.len() != expected {
        return Err(Error::format(
            origin,
            format!("{rows}×{cols} needs {expected} payload bytes, found {}", body.len()),
        ));
    }
    Ok((rows, cols, body))
}

fn f64_at(body: &[u8], idx: usize) -> f64 {
    f64::from_le_bytes(body[8 * idx..8 * idx + 8].try_into().unwrap())
}

pub fn decode_matrix(bytes: &[u8]) -> Result<Matrix> {
    decode_matrix_from(bytes, Path::new("<memory>"))
}

pub fn decode_complex_matrix(bytes: &[u8]) -> Result<ComplexMatrix> {
    decode_complex_from(bytes, Path::new("<memory>"))
}

fn decode_matrix_from(bytes: &[u8], origin: &Path) -> Result<Matrix> {
    let (rows, cols, body) = parse_header(bytes, REAL_MAGIC, 8, origin)?;
    Ok(Matrix::from_fn(rows, cols, |i, j| f64_at(body, i * cols + j)))
}

fn decode_complex_from(bytes: &[u8], origin: &Path) -> Result<ComplexMatrix> {
    let (rows, cols, body) = parse_header(bytes, COMPLEX_MAGIC, 16, origin)?;
    Ok(ComplexMatrix::from_fn(rows, cols, |i, j| {
        let at = 2 * (i * cols + j);
        Complex64::new(f64_at(body, at), f64_at(body, at + 1))
    }))
}

pub fn write_matrix(path: impl AsRef<Path>, a: &Matrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_matrix(a)).map_err(|e| Error::io(path, e))
}

pub fn write_complex_matrix(path: impl AsRef<Path>, a: &ComplexMatrix) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, encode_complex_matrix(a)).map_err(|e| Error::io(path, e))
}

pub fn read_matrix(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_matrix_from(&bytes, path)
}

pub fn read_complex_matrix(path: impl AsRef<Path>) -> Result<ComplexMatrix> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_complex_from(&bytes, path)
}

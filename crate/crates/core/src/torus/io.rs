//! Binary field files.
//!
//! Layout (little-endian): magic `DHYM`, `u32` version = 1, `u8` kind
//! (0 scalar, 1 hermitian-form), `u8` n, `u32` N, then the payload. Scalar
//! payload is `N^{2n}` `f64` values; hermitian-form payload is `n²` complex
//! entries per point as interleaved `(re, im)` `f64` pairs, row-major in
//! `(i, j)`. Points are row-major over `(x₁, y₁, x₂, y₂)`.

use std::io::{Read, Write};

use num_complex::Complex64;

use super::field::{HermitianFormField, ScalarField};
use super::grid::TorusGrid;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"DHYM";
pub const VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum FieldData {
    Scalar(ScalarField),
    Hermitian(HermitianFormField),
}

impl FieldData {
    pub fn grid(&self) -> &TorusGrid {
        match self {
            FieldData::Scalar(f) => f.grid(),
            FieldData::Hermitian(f) => f.grid(),
        }
    }
}

fn io_err(e: std::io::Error) -> Error {
    Error::Format(e.to_string())
}

fn write_header(w: &mut impl Write, kind: u8, grid: &TorusGrid) -> Result<()> {
    w.write_all(MAGIC).map_err(io_err)?;
    w.write_all(&VERSION.to_le_bytes()).map_err(io_err)?;
    w.write_all(&[kind, grid.dim() as u8]).map_err(io_err)?;
    w.write_all(&(grid.points_per_axis() as u32).to_le_bytes()).map_err(io_err)
}

pub fn write_field(w: &mut impl Write, field: &FieldData) -> Result<()> {
    let mut buf = Vec::new();
    match field {
        FieldData::Scalar(f) => {
            write_header(&mut buf, 0, f.grid())?;
            buf.reserve(f.values().len() * 8);
            for v in f.values() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        FieldData::Hermitian(f) => {
            write_header(&mut buf, 1, f.grid())?;
            buf.reserve(f.data().len() * 16);
            for v in f.data() {
                buf.extend_from_slice(&v.re.to_le_bytes());
                buf.extend_from_slice(&v.im.to_le_bytes());
            }
        }
    }
    w.write_all(&buf).map_err(io_err)
}

pub fn read_field(r: &mut impl Read) -> Result<FieldData> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes).map_err(io_err)?;
    if bytes.len() < 14 || &bytes[..4] != MAGIC {
        return Err(Error::Format("missing DHYM header".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let kind = bytes[8];
    let n = bytes[9] as usize;
    let big_n = u32::from_le_bytes(bytes[10..14].try_into().unwrap()) as usize;
    let grid = TorusGrid::new(n, big_n)?;
    let payload = &bytes[14..];
    let f64_at = |k: usize| f64::from_le_bytes(payload[8 * k..8 * k + 8].try_into().unwrap());
    match kind {
        0 => {
            let count = grid.len();
            if payload.len() != count * 8 {
                return Err(Error::Format(format!("expected {} payload bytes, found {}", count * 8, payload.len())));
            }
            Ok(FieldData::Scalar(ScalarField::new(grid, (0..count).map(f64_at).collect())?))
        }
        1 => {
            let count = grid.len() * n * n;
            if payload.len() != count * 16 {
                return Err(Error::Format(format!("expected {} payload bytes, found {}", count * 16, payload.len())));
            }
            let data: Vec<Complex64> = (0..count).map(|k| Complex64::new(f64_at(2 * k), f64_at(2 * k + 1))).collect();
            // validate rather than symmetrize so the stored bits survive unchanged
            for (p, m) in data.chunks(n * n).enumerate() {
                for i in 0..n {
                    for j in i..n {
                        if m[i * n + j] != m[j * n + i].conj() {
                            return Err(Error::Format(format!("matrix at point {p} is not Hermitian")));
                        }
                    }
                }
            }
            Ok(FieldData::Hermitian(HermitianFormField::from_vec_unchecked(grid, data)))
        }
        other => Err(Error::Format(format!("unknown field kind {other}"))),
    }
}

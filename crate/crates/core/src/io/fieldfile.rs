//! Binary snapshot format.
//!
//! ```text
//! magic   "SQGF"
//! version u32 = 1
//! n1, n2  u32
//! L1, L2  f64
//! t       f64
//! payload n1 * n2 f64, (i, j) row-major with j fastest
//! ```
//!
//! All numbers are little-endian.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::{Field, GridSpec};

pub const MAGIC: &[u8; 4] = b"SQGF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 4 + 8 + 8 + 8;

pub fn encode(field: &Field, t: f64) -> Result<Vec<u8>> {
    let g = field.grid();
    let dim = |n: usize| u32::try_from(n).map_err(|_| Error::FieldFile(format!("dimension {n} exceeds u32")));
    let mut out = Vec::with_capacity(HEADER_LEN + 8 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&dim(g.n1())?.to_le_bytes());
    out.extend_from_slice(&dim(g.n2())?.to_le_bytes());
    out.extend_from_slice(&g.l1().to_le_bytes());
    out.extend_from_slice(&g.l2().to_le_bytes());
    out.extend_from_slice(&t.to_le_bytes());
    for v in field.values() {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Decodes a snapshot and its time. The grid keeps the default dealiasing
/// fraction since the format does not store one.
pub fn decode(bytes: &[u8]) -> Result<(Field, f64)> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::FieldFile(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::FieldFile("bad magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let version = u32_at(4);
    if version != VERSION {
        return Err(Error::FieldFile(format!("unsupported version {version}")));
    }
    let (n1, n2) = (u32_at(8) as usize, u32_at(12) as usize);
    let (l1, l2, t) = (f64_at(16), f64_at(24), f64_at(32));
    let expected = n1
        .checked_mul(n2)
        .and_then(|n| n.checked_mul(8))
        .ok_or_else(|| Error::FieldFile("dimensions overflow".into()))?;
    let payload = &bytes[HEADER_LEN..];
    if payload.len() != expected {
        return Err(Error::FieldFile(format!("payload is {} bytes, expected {expected}", payload.len())));
    }
    let grid = GridSpec::new(n1, n2, l1, l2).map_err(|e| Error::FieldFile(e.to_string()))?;
    let values = payload.chunks_exact(8).map(|c| f64::from_le_bytes(c.try_into().unwrap())).collect();
    let field = Field::from_values(grid, values).map_err(|e| Error::FieldFile(e.to_string()))?;
    Ok((field, t))
}

pub fn write_field(path: &Path, field: &Field, t: f64) -> Result<()> {
    fs::write(path, encode(field, t)?)?;
    Ok(())
}

pub fn read_field(path: &Path) -> Result<(Field, f64)> {
    decode(&fs::read(path)?)
}

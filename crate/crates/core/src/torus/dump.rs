//! Raw field dump.
//!
//! Layout: 32-byte header `FIELD_MAGIC | dim: u64 | N: u64 | m: u64` followed by
//! `N^d` little-endian `f64` physical samples in row-major order (last axis fastest).
//! Domain lengths are not stored; readers rebuild a unit-torus grid.

use std::io::{Read, Write};

use super::{GridSpec, SpectralField};
use crate::error::{Result, SceError};

pub const FIELD_MAGIC: [u8; 8] = *b"SCEFLD01";
pub const FIELD_HEADER_BYTES: usize = 32;

pub fn write_field<W: Write>(mut w: W, f: &SpectralField) -> Result<()> {
    let g = f.grid();
    let mut buf = Vec::with_capacity(FIELD_HEADER_BYTES + 8 * g.len());
    buf.extend_from_slice(&FIELD_MAGIC);
    for v in [g.dim(), g.points_per_dim(), g.modes()] {
        buf.extend_from_slice(&(v as u64).to_le_bytes());
    }
    for v in f.physical() {
        buf.extend_from_slice(&v.to_le_bytes());
    }
    w.write_all(&buf)?;
    Ok(())
}

pub fn read_field<R: Read>(mut r: R) -> Result<SpectralField> {
    let mut header = [0u8; FIELD_HEADER_BYTES];
    r.read_exact(&mut header)?;
    if header[..8] != FIELD_MAGIC {
        return Err(SceError::Parse("bad field dump magic".into()));
    }
    let word = |i: usize| {
        let mut b = [0u8; 8];
        b.copy_from_slice(&header[8 * i..8 * i + 8]);
        u64::from_le_bytes(b) as usize
    };
    let grid = GridSpec::new(word(1), word(2), word(3))?;
    let mut body = vec![0u8; 8 * grid.len()];
    r.read_exact(&mut body)?;
    let samples = body
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect();
    SpectralField::from_physical(grid, samples)
}

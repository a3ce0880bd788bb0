use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::CovarianceMap;

const MAGIC: &[u8; 4] = b"SVCM";
const VERSION: u8 = 1;
/// magic (4) + version (1) + reserved (3) + width u32 + height u32.
const HEADER_LEN: usize = 16;
const RECORD_LEN: usize = 12;

fn malformed(reason: impl Into<String>) -> Error {
    Error::MalformedFile {
        format: "covariance map",
        reason: reason.into(),
    }
}

/// Reads a binary covariance map: magic `SVCM`, version byte 1, three
/// reserved zero bytes, little-endian u32 width and height, then
/// height x width records of three little-endian f32 (c11, c12, c22),
/// row-major from the top-left. Every record must be positive definite.
pub fn read_covmap(path: &Path) -> Result<CovarianceMap> {
    let bytes = fs::read(path)?;
    if bytes.len() < HEADER_LEN {
        return Err(malformed("file shorter than the 16-byte header"));
    }
    if &bytes[0..4] != MAGIC {
        return Err(malformed("bad magic; expected SVCM"));
    }
    if bytes[4] != VERSION {
        return Err(malformed(format!("unsupported version {}", bytes[4])));
    }
    let width = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
    let expected = HEADER_LEN + RECORD_LEN * width * height;
    if bytes.len() != expected {
        return Err(malformed(format!(
            "byte length {} does not match {width}x{height} (expected {expected})",
            bytes.len()
        )));
    }
    let mut data = Vec::with_capacity(width * height);
    for (i, rec) in bytes[HEADER_LEN..].chunks_exact(RECORD_LEN).enumerate() {
        let f = |o: usize| f32::from_le_bytes(rec[o..o + 4].try_into().unwrap()) as f64;
        let (c11, c12, c22) = (f(0), f(4), f(8));
        if !(c11 > 0.0 && c22 > 0.0 && c11 * c22 - c12 * c12 > 0.0) {
            return Err(malformed(format!(
                "record at pixel ({}, {}) is not positive definite: c11={c11}, c12={c12}, c22={c22}",
                i % width,
                i / width
            )));
        }
        data.push([c11, c12, c22]);
    }
    CovarianceMap::from_raw(width, height, data)
}

/// Writes a covariance map in the binary layout accepted by [`read_covmap`].
/// Entries are rounded to f32; a write/read round trip is bit-identical.
pub fn write_covmap(path: &Path, map: &CovarianceMap) -> Result<()> {
    let mut out = Vec::with_capacity(HEADER_LEN + RECORD_LEN * map.width() * map.height());
    out.extend_from_slice(MAGIC);
    out.push(VERSION);
    out.extend_from_slice(&[0, 0, 0]);
    out.extend_from_slice(&(map.width() as u32).to_le_bytes());
    out.extend_from_slice(&(map.height() as u32).to_le_bytes());
    for rec in map.entries() {
        for &c in rec {
            out.extend_from_slice(&(c as f32).to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

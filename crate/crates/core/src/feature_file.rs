//! The binary `MPFV` feature container.
//!
//! Layout, all integers and floats little-endian:
//!
//! | offset | size | field                                   |
//! |--------|------|-----------------------------------------|
//! | 0      | 4    | magic `"MPFV"`                          |
//! | 4      | 4    | format version (`u32`, currently 1)     |
//! | 8      | 1    | descriptor tag (`u8`)                   |
//! | 9      | 8    | direction bit-weight exponents (`u8x8`) |
//! | 17     | 16   | `c1`, `c2`, `v`, `b` (`u32` each)       |
//! | 33     | 8    | `epsilon` (`f64`)                       |
//! | 41     | 1    | normalize flag (`u8`, 0 or 1)           |
//! | 42     | 8    | resolution rows, cols (`u32` each)      |
//! | 50     | 8    | sample count (`u64`)                    |
//! | 58     | 8    | feature dimension (`u64`)               |
//! | 66     | ...  | `count * dim` feature values (`f64`)    |
//! | ...    | ...  | per sample: id length (`u16`), id bytes (UTF-8), label (`i8`) |
//!
//! No timestamps or other volatile fields are stored, so re-extracting with
//! identical inputs reproduces the file byte for byte.

use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::{ConfigSnapshot, Descriptor, FeatureSet};

pub const MAGIC: [u8; 4] = *b"MPFV";
pub const VERSION: u32 = 1;
/// Byte offset of the descriptor tag, the only field that differs between a
/// `dmp` extraction and the equivalent `mhog` run.
pub const DESCRIPTOR_TAG_OFFSET: usize = 8;
const HEADER_LEN: usize = 66;

pub fn encode(set: &FeatureSet) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + set.values.len() * 8);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(set.descriptor.tag());
    out.extend_from_slice(&set.config.weight_exponents);
    for v in [set.config.c1, set.config.c2, set.config.v, set.config.b] {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out.extend_from_slice(&set.config.epsilon.to_le_bytes());
    out.push(u8::from(set.config.normalize));
    out.extend_from_slice(&set.config.rows.to_le_bytes());
    out.extend_from_slice(&set.config.cols.to_le_bytes());
    out.extend_from_slice(&(set.len() as u64).to_le_bytes());
    out.extend_from_slice(&(set.dim as u64).to_le_bytes());
    for v in &set.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    for (id, label) in set.ids.iter().zip(&set.labels) {
        out.extend_from_slice(&(id.len() as u16).to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        out.push(*label as u8);
    }
    out
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
    origin: &'a Path,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::format(
                self.origin,
                format!("truncated feature file at offset {}", self.pos),
            ));
        }
        let slice = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(slice)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn decode(bytes: &[u8], origin: &Path) -> Result<FeatureSet> {
    let mut r = Reader { bytes, pos: 0, origin };
    if r.take(4)? != MAGIC {
        return Err(Error::format(origin, "not an MPFV feature file"));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::format(
            origin,
            format!("unsupported MPFV version {version}, expected {VERSION}"),
        ));
    }
    let descriptor = Descriptor::from_tag(r.u8()?)
        .map_err(|e| Error::format(origin, e.to_string()))?;
    let mut weight_exponents = [0u8; 8];
    weight_exponents.copy_from_slice(r.take(8)?);
    let c1 = r.u32()?;
    let c2 = r.u32()?;
    let v = r.u32()?;
    let b = r.u32()?;
    let epsilon = r.f64()?;
    let normalize = match r.u8()? {
        0 => false,
        1 => true,
        other => {
            return Err(Error::format(
                origin,
                format!("normalize flag must be 0 or 1, got {other}"),
            ))
        }
    };
    let rows = r.u32()?;
    let cols = r.u32()?;
    let count = r.u64()? as usize;
    let dim = r.u64()? as usize;
    let value_count = count
        .checked_mul(dim)
        .ok_or_else(|| Error::format(origin, "sample count * dim overflows"))?;
    if value_count.checked_mul(8).map(|n| n + HEADER_LEN) > Some(bytes.len()) {
        return Err(Error::format(origin, "feature payload exceeds file size"));
    }
    let mut values = Vec::with_capacity(value_count);
    for _ in 0..value_count {
        values.push(r.f64()?);
    }
    let mut ids = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for _ in 0..count {
        let len = r.u16()? as usize;
        let id = std::str::from_utf8(r.take(len)?)
            .map_err(|_| Error::format(origin, "sample id is not valid UTF-8"))?
            .to_string();
        let label = r.u8()? as i8;
        if label != 1 && label != -1 {
            return Err(Error::format(
                origin,
                format!("label for {id:?} must be +1 or -1, got {label}"),
            ));
        }
        ids.push(id);
        labels.push(label);
    }
    if r.pos != bytes.len() {
        return Err(Error::format(
            origin,
            format!("{} trailing bytes after the sample trailer", bytes.len() - r.pos),
        ));
    }
    Ok(FeatureSet {
        descriptor,
        config: ConfigSnapshot {
            weight_exponents,
            c1,
            c2,
            v,
            b,
            epsilon,
            normalize,
            rows,
            cols,
        },
        dim,
        values,
        ids,
        labels,
    })
}

pub fn write(path: &Path, set: &FeatureSet) -> Result<()> {
    fs::write(path, encode(set)).map_err(|e| Error::io(path, e))
}

pub fn read(path: &Path) -> Result<FeatureSet> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode(&bytes, path)
}

//! MNIST IDX container: big-endian header, unsigned-byte payload.
//!
//! Layout: magic `00 00 <type> <ndims>`, then `ndims` big-endian `u32`
//! sizes, then the payload. Only type `0x08` (unsigned byte) is supported.

use std::fs;
use std::path::Path;

use crate::cp::DenseTensor;
use crate::error::{Error, Result};

pub const TYPE_U8: u8 = 0x08;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct IdxFile {
    pub dims: Vec<u32>,
    pub payload: Vec<u8>,
}

impl IdxFile {
    pub fn new(dims: Vec<u32>, payload: Vec<u8>) -> Result<Self> {
        let count = element_count(&dims)?;
        if count != payload.len() {
            return Err(Error::LengthMismatch {
                expected: count,
                found: payload.len(),
            });
        }
        if dims.len() > u8::MAX as usize {
            return Err(Error::InvalidShape(
                "IDX supports at most 255 dimensions".into(),
            ));
        }
        Ok(IdxFile { dims, payload })
    }

    pub fn magic(&self) -> [u8; 4] {
        [0, 0, TYPE_U8, self.dims.len() as u8]
    }

    pub fn parse(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 4 {
            return Err(Error::Truncated {
                expected: 4,
                found: bytes.len(),
            });
        }
        let magic: [u8; 4] = bytes[..4].try_into().expect("length checked");
        if magic[0] != 0 || magic[1] != 0 {
            return Err(Error::BadMagic(magic));
        }
        if magic[2] != TYPE_U8 {
            return Err(Error::UnsupportedType(magic[2]));
        }
        let ndims = magic[3] as usize;
        let header = 4 + 4 * ndims;
        if bytes.len() < header {
            return Err(Error::Truncated {
                expected: header,
                found: bytes.len(),
            });
        }
        let dims: Vec<u32> = bytes[4..header]
            .chunks_exact(4)
            .map(|c| u32::from_be_bytes(c.try_into().expect("chunk of 4")))
            .collect();
        let count = element_count(&dims)?;
        let expected = header.checked_add(count).ok_or(Error::DimensionOverflow)?;
        if bytes.len() < expected {
            return Err(Error::Truncated {
                expected,
                found: bytes.len(),
            });
        }
        if bytes.len() > expected {
            return Err(Error::TrailingBytes(bytes.len() - expected));
        }
        Ok(IdxFile {
            dims,
            payload: bytes[header..].to_vec(),
        })
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(4 + 4 * self.dims.len() + self.payload.len());
        out.extend_from_slice(&self.magic());
        for d in &self.dims {
            out.extend_from_slice(&d.to_be_bytes());
        }
        out.extend_from_slice(&self.payload);
        out
    }
}

fn element_count(dims: &[u32]) -> Result<usize> {
    dims.iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d as usize))
        .ok_or(Error::DimensionOverflow)
}

pub fn read_idx(path: &Path) -> Result<IdxFile> {
    IdxFile::parse(&fs::read(path)?)
}

pub fn write_idx(path: &Path, f: &IdxFile) -> Result<()> {
    fs::write(path, f.to_bytes())?;
    Ok(())
}

/// Stacks the first `count` images labelled `digit` (file order) into a
/// `H' × W' × count` tensor, where `H'`, `W'` are the image sizes rounded up
/// to powers of two (28 → 32 for MNIST). Each image occupies the top-left
/// block of its slice and pixels are scaled to `[0, 1]`.
pub fn build_digit_tensor(
    images: &IdxFile,
    labels: &IdxFile,
    digit: u8,
    count: usize,
) -> Result<DenseTensor> {
    if images.dims.len() != 3 {
        return Err(Error::InvalidShape(format!(
            "image file must be 3-D (N, rows, cols), got {} dims",
            images.dims.len()
        )));
    }
    if labels.dims.len() != 1 || labels.dims[0] != images.dims[0] {
        return Err(Error::InvalidShape(
            "label file must be 1-D with one label per image".into(),
        ));
    }
    let (rows, cols) = (images.dims[1] as usize, images.dims[2] as usize);
    let (prows, pcols) = (rows.next_power_of_two(), cols.next_power_of_two());
    let picks: Vec<usize> = labels
        .payload
        .iter()
        .enumerate()
        .filter(|(_, &l)| l == digit)
        .map(|(i, _)| i)
        .take(count)
        .collect();
    if picks.len() < count {
        return Err(Error::InsufficientImages {
            digit,
            found: picks.len(),
            requested: count,
        });
    }
    let mut t = DenseTensor::zeros(vec![prows, pcols, count])?;
    let data = t.data_mut();
    for (k, &img) in picks.iter().enumerate() {
        let pixels = &images.payload[img * rows * cols..(img + 1) * rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                data[(r * pcols + c) * count + k] = pixels[r * cols + c] as f64 / 255.0;
            }
        }
    }
    Ok(t)
}

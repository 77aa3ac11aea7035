//! Binary PGM (P5) reading and writing, plus headerless raw input.
//!
//! 16-bit samples are big-endian, as the netpbm format requires.

use std::fs;
use std::path::Path;

use super::{LabelMask, Raster};
use crate::error::{Error, Result};

/// A decoded P5 image before it is interpreted as a raster or a mask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PgmImage {
    pub width: usize,
    pub height: usize,
    pub maxval: u16,
    pub samples: Vec<u16>,
}

pub fn decode_pgm(data: &[u8]) -> Result<PgmImage> {
    if data.len() < 2 {
        return Err(Error::MalformedHeader("file shorter than magic".into()));
    }
    let magic = &data[..2];
    if magic != b"P5" {
        return Err(Error::UnsupportedMagic(
            String::from_utf8_lossy(magic).into_owned(),
        ));
    }
    let mut pos = 2;
    let width = header_number(data, &mut pos, "width")?;
    let height = header_number(data, &mut pos, "height")?;
    let maxval = header_number(data, &mut pos, "maxval")?;
    if width == 0 || height == 0 {
        return Err(Error::MalformedHeader("zero dimension".into()));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(Error::MalformedHeader(format!("maxval {maxval} out of range")));
    }
    // exactly one whitespace byte separates the header from the raster
    match data.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::MalformedHeader("missing separator after maxval".into())),
    }

    let bytes_per_sample = if maxval > 255 { 2 } else { 1 };
    let expected = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(bytes_per_sample))
        .ok_or_else(|| Error::MalformedHeader("dimensions overflow".into()))?;
    let payload = &data[pos..];
    if payload.len() < expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: payload.len(),
        });
    }
    let samples: Vec<u16> = if bytes_per_sample == 1 {
        payload[..expected].iter().map(|&b| u16::from(b)).collect()
    } else {
        payload[..expected]
            .chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    let maxval = maxval as u16;
    if let Some(v) = samples.iter().find(|&&v| v > maxval) {
        return Err(Error::InvalidRaster(format!("sample {v} exceeds maxval {maxval}")));
    }
    Ok(PgmImage {
        width,
        height,
        maxval,
        samples,
    })
}

fn header_number(data: &[u8], pos: &mut usize, field: &str) -> Result<usize> {
    // skip whitespace and '#' comments
    loop {
        match data.get(*pos) {
            Some(b) if b.is_ascii_whitespace() => *pos += 1,
            Some(b'#') => {
                while let Some(&b) = data.get(*pos) {
                    *pos += 1;
                    if b == b'\n' || b == b'\r' {
                        break;
                    }
                }
            }
            Some(_) => break,
            None => return Err(Error::MalformedHeader(format!("missing {field}"))),
        }
    }
    let start = *pos;
    while data.get(*pos).is_some_and(u8::is_ascii_digit) {
        *pos += 1;
    }
    if start == *pos {
        return Err(Error::MalformedHeader(format!("{field} is not a number")));
    }
    std::str::from_utf8(&data[start..*pos])
        .ok()
        .and_then(|s| s.parse().ok())
        .ok_or_else(|| Error::MalformedHeader(format!("{field} out of range")))
}

pub fn encode_pgm(width: usize, height: usize, maxval: u16, samples: &[u16]) -> Vec<u8> {
    let header = format!("P5\n{width} {height}\n{maxval}\n");
    let mut out = Vec::with_capacity(header.len() + samples.len() * 2);
    out.extend_from_slice(header.as_bytes());
    if maxval > 255 {
        for &s in samples {
            out.extend_from_slice(&s.to_be_bytes());
        }
    } else {
        out.extend(samples.iter().map(|&s| s as u8));
    }
    out
}

pub fn load_pgm(path: impl AsRef<Path>) -> Result<Raster> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = decode_pgm(&data)?;
    let depth = if img.maxval > 255 { 16 } else { 8 };
    Raster::new(img.width, img.height, depth, img.samples)
}

/// Writes the raster with maxval 255 (8-bit) or 65535 (16-bit).
pub fn save_pgm(raster: &Raster, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_pgm(
        raster.width(),
        raster.height(),
        raster.max_value(),
        raster.pixels(),
    );
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn load_mask(path: impl AsRef<Path>) -> Result<LabelMask> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let img = decode_pgm(&data)?;
    if img.maxval > 255 {
        return Err(Error::InvalidRaster("label masks must be 8-bit".into()));
    }
    LabelMask::new(
        img.width,
        img.height,
        img.samples.into_iter().map(|s| s as u8).collect(),
    )
}

pub fn save_mask(mask: &LabelMask, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let samples: Vec<u16> = mask.labels().iter().map(|&l| u16::from(l)).collect();
    let bytes = encode_pgm(mask.width(), mask.height(), 255, &samples);
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Reads headerless grayscale. 16-bit samples are big-endian.
pub fn load_raw(path: impl AsRef<Path>, width: usize, height: usize, depth: u8) -> Result<Raster> {
    let path = path.as_ref();
    let data = fs::read(path).map_err(|e| Error::io(path, e))?;
    let bytes_per_sample = match depth {
        8 => 1,
        16 => 2,
        _ => return Err(Error::InvalidRaster(format!("raw depth {depth} unsupported"))),
    };
    let expected = width * height * bytes_per_sample;
    if data.len() != expected {
        return Err(Error::TruncatedPayload {
            expected,
            found: data.len(),
        });
    }
    let pixels = if depth == 8 {
        data.iter().map(|&b| u16::from(b)).collect()
    } else {
        data.chunks_exact(2)
            .map(|c| u16::from_be_bytes([c[0], c[1]]))
            .collect()
    };
    Raster::new(width, height, depth, pixels)
}

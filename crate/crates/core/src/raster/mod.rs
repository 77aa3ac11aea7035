//! Single-band rasters, label masks, PGM I/O and circular neighbourhood
//! sampling.
//!
//! Rasters are immutable once built and can be shared freely between
//! worker threads.

pub(crate) mod circle;
mod pgm;

pub use circle::{sample_circular, CirclePattern, ANGULAR_INDEX_OF_SQUARE, FIXED_ONE};
pub use pgm::{
    decode_pgm, encode_pgm, load_mask, load_pgm, load_raw, save_mask, save_pgm, PgmImage,
};

use crate::error::{Error, Result};

/// A single-band brightness grid in row-major order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    width: usize,
    height: usize,
    depth: u8,
    pixels: Vec<u16>,
}

impl Raster {
    pub fn new(width: usize, height: usize, depth: u8, pixels: Vec<u16>) -> Result<Self> {
        if depth != 8 && depth != 16 {
            return Err(Error::InvalidRaster(format!(
                "depth must be 8 or 16 bits, got {depth}"
            )));
        }
        if width == 0 || height == 0 {
            return Err(Error::InvalidRaster("zero-sized raster".into()));
        }
        if pixels.len() != width * height {
            return Err(Error::InvalidRaster(format!(
                "{} pixels for a {width}x{height} raster",
                pixels.len()
            )));
        }
        let max = max_value(depth);
        if let Some(v) = pixels.iter().find(|&&v| v > max) {
            return Err(Error::InvalidRaster(format!(
                "value {v} exceeds {max} for depth {depth}"
            )));
        }
        Ok(Raster {
            width,
            height,
            depth,
            pixels,
        })
    }

    pub fn filled(width: usize, height: usize, depth: u8, value: u16) -> Result<Self> {
        Raster::new(width, height, depth, vec![value; width * height])
    }

    /// Builds a raster from a function of `(x, y)`.
    pub fn from_fn(
        width: usize,
        height: usize,
        depth: u8,
        mut f: impl FnMut(usize, usize) -> u16,
    ) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Raster::new(width, height, depth, pixels)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn depth(&self) -> u8 {
        self.depth
    }

    pub fn max_value(&self) -> u16 {
        max_value(self.depth)
    }

    pub fn pixels(&self) -> &[u16] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u16 {
        self.pixels[y * self.width + x]
    }

    pub fn contains(&self, rect: &Rect) -> bool {
        rect.w > 0
            && rect.h > 0
            && rect.x.checked_add(rect.w).is_some_and(|r| r <= self.width)
            && rect.y.checked_add(rect.h).is_some_and(|b| b <= self.height)
    }

    pub fn crop(&self, rect: &Rect) -> Result<Raster> {
        check_rect(rect, self.width, self.height)?;
        let mut pixels = Vec::with_capacity(rect.w * rect.h);
        for y in rect.y..rect.y + rect.h {
            let start = y * self.width + rect.x;
            pixels.extend_from_slice(&self.pixels[start..start + rect.w]);
        }
        Ok(Raster {
            width: rect.w,
            height: rect.h,
            depth: self.depth,
            pixels,
        })
    }

    /// Applies `f` to every pixel. Results above the depth maximum are clipped.
    pub fn map(&self, mut f: impl FnMut(u16) -> u32) -> Raster {
        let max = u32::from(self.max_value());
        Raster {
            width: self.width,
            height: self.height,
            depth: self.depth,
            pixels: self.pixels.iter().map(|&v| f(v).min(max) as u16).collect(),
        }
    }

    /// Same pixels reinterpreted at another depth. Fails if a value does not fit.
    pub fn with_depth(&self, depth: u8) -> Result<Raster> {
        Raster::new(self.width, self.height, depth, self.pixels.clone())
    }

    /// Rotates the raster 90 degrees clockwise.
    pub fn rotate90(&self) -> Raster {
        let (w, h) = (self.width, self.height);
        let mut pixels = vec![0; w * h];
        // Source (x, y) lands at (h - 1 - y, x) in the h-wide output.
        for y in 0..h {
            for x in 0..w {
                pixels[x * h + (h - 1 - y)] = self.pixels[y * w + x];
            }
        }
        Raster {
            width: h,
            height: w,
            depth: self.depth,
            pixels,
        }
    }
}

pub(crate) fn max_value(depth: u8) -> u16 {
    if depth >= 16 {
        u16::MAX
    } else {
        (1u16 << depth) - 1
    }
}

/// Per-pixel class identifiers: 0 is unlabeled, 1..=K are classes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMask {
    width: usize,
    height: usize,
    labels: Vec<u8>,
}

impl LabelMask {
    pub fn new(width: usize, height: usize, labels: Vec<u8>) -> Result<Self> {
        if labels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} labels for a {width}x{height} mask",
                labels.len()
            )));
        }
        Ok(LabelMask {
            width,
            height,
            labels,
        })
    }

    pub fn empty(width: usize, height: usize) -> Self {
        LabelMask {
            width,
            height,
            labels: vec![0; width * height],
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn labels_mut(&mut self) -> &mut [u8] {
        &mut self.labels
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.labels[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, label: u8) {
        self.labels[y * self.width + x] = label;
    }

    pub fn max_label(&self) -> u8 {
        self.labels.iter().copied().max().unwrap_or(0)
    }

    /// Checks that no label exceeds the declared class count.
    pub fn validate_classes(&self, class_count: u8) -> Result<()> {
        match self.labels.iter().find(|&&l| l > class_count) {
            Some(l) => Err(Error::DimensionMismatch(format!(
                "label {l} exceeds class count {class_count}"
            ))),
            None => Ok(()),
        }
    }

    pub fn fill_rect(&mut self, rect: &Rect, label: u8) -> Result<()> {
        check_rect(rect, self.width, self.height)?;
        for y in rect.y..rect.y + rect.h {
            let start = y * self.width + rect.x;
            self.labels[start..start + rect.w].fill(label);
        }
        Ok(())
    }
}

/// Axis-aligned rectangle in pixel coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub w: usize,
    pub h: usize,
}

impl Rect {
    pub const fn new(x: usize, y: usize, w: usize, h: usize) -> Self {
        Rect { x, y, w, h }
    }

    #[inline]
    pub fn contains_point(&self, x: usize, y: usize) -> bool {
        x >= self.x && x < self.x + self.w && y >= self.y && y < self.y + self.h
    }

    pub fn area(&self) -> usize {
        self.w * self.h
    }

    pub fn intersects(&self, other: &Rect) -> bool {
        self.x < other.x + other.w
            && other.x < self.x + self.w
            && self.y < other.y + other.h
            && other.y < self.y + self.h
    }

    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (self.y..self.y + self.h).flat_map(move |y| (self.x..self.x + self.w).map(move |x| (x, y)))
    }
}

pub(crate) fn check_rect(rect: &Rect, width: usize, height: usize) -> Result<()> {
    let inside = rect.w > 0
        && rect.h > 0
        && rect.x.checked_add(rect.w).is_some_and(|r| r <= width)
        && rect.y.checked_add(rect.h).is_some_and(|b| b <= height);
    if inside {
        Ok(())
    } else {
        Err(Error::RectOutOfBounds {
            x: rect.x,
            y: rect.y,
            w: rect.w,
            h: rect.h,
            width,
            height,
        })
    }
}

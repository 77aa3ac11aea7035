//! Sparse normalized histograms and window aggregation.
//!
//! Only nonzero bins are stored; LBP layouts reach 2^24 bins at P = 24.

use super::config::combine_layout_ids;
use super::plane::{CodePlane, INVALID_CODE};
use crate::error::{Error, Result};

/// Allowed deviation of a normalized histogram's sum from 1.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    len: usize,
    layout_id: u64,
    indices: Vec<u32>,
    weights: Vec<f64>,
}

impl Histogram {
    pub fn from_dense(bins: &[f64], layout_id: u64) -> Result<Self> {
        let entries = bins
            .iter()
            .enumerate()
            .map(|(i, &w)| (i as u32, w))
            .collect();
        Histogram::from_sparse(bins.len(), layout_id, entries)
    }

    /// Builds a histogram from `(bin, weight)` pairs in any order. Zero
    /// weights are dropped; duplicates, negative or non-finite weights and
    /// out-of-range bins are rejected.
    pub fn from_sparse(len: usize, layout_id: u64, mut entries: Vec<(u32, f64)>) -> Result<Self> {
        entries.sort_by_key(|&(i, _)| i);
        let mut indices = Vec::with_capacity(entries.len());
        let mut weights = Vec::with_capacity(entries.len());
        for (i, w) in entries {
            if !w.is_finite() || w < 0.0 {
                return Err(Error::Histogram(format!("bin {i} has weight {w}")));
            }
            if i as usize >= len {
                return Err(Error::Histogram(format!("bin {i} outside {len} bins")));
            }
            if indices.last() == Some(&i) {
                return Err(Error::Histogram(format!("bin {i} listed twice")));
            }
            if w > 0.0 {
                indices.push(i);
                weights.push(w);
            }
        }
        Ok(Histogram {
            len,
            layout_id,
            indices,
            weights,
        })
    }

    /// Normalized histogram from sorted, distinct bin indices and their
    /// counts: every weight is `count / denominator`.
    pub(crate) fn from_counts(
        len: usize,
        layout_id: u64,
        indices: Vec<u32>,
        counts: &[u32],
        denominator: f64,
    ) -> Self {
        debug_assert!(indices.windows(2).all(|w| w[0] < w[1]));
        let weights = counts.iter().map(|&c| f64::from(c) / denominator).collect();
        Histogram {
            len,
            layout_id,
            indices,
            weights,
        }
    }

    /// Number of bins in the layout (not the number of nonzero bins).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn layout_id(&self) -> u64 {
        self.layout_id
    }

    /// Indices of the nonzero bins, ascending.
    pub fn indices(&self) -> &[u32] {
        &self.indices
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn nonzero(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (u32, f64)> + '_ {
        self.indices.iter().copied().zip(self.weights.iter().copied())
    }

    pub fn get(&self, bin: usize) -> f64 {
        match self.indices.binary_search(&(bin as u32)) {
            Ok(pos) => self.weights[pos],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut dense = vec![0.0; self.len];
        for (i, w) in self.iter() {
            dense[i as usize] = w;
        }
        dense
    }

    pub fn sum(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn is_normalized(&self) -> bool {
        (self.sum() - 1.0).abs() <= NORMALIZATION_TOLERANCE
    }

    /// L1-normalized copy. All-zero histograms cannot be normalized.
    pub fn normalized(&self) -> Result<Histogram> {
        let sum = self.sum();
        if sum <= 0.0 {
            return Err(Error::Histogram("cannot normalize an all-zero histogram".into()));
        }
        Ok(Histogram {
            weights: self.weights.iter().map(|w| w / sum).collect(),
            ..self.clone()
        })
    }
}

/// First row or column of a window of side `window` centred on `c`. Even
/// windows extend one pixel further right/down than left/up.
#[inline]
pub(crate) fn window_start(c: usize, window: usize) -> Option<usize> {
    c.checked_sub((window - 1) / 2)
}

/// Normalized histogram of the codes in the `window`×`window` square
/// centred on `(cx, cy)`.
pub fn window_histogram(plane: &CodePlane, cx: usize, cy: usize, window: usize) -> Result<Histogram> {
    if window == 0 {
        return Err(Error::Histogram("window side must be positive".into()));
    }
    let border = plane.border();
    let outside = || Error::WindowTouchesBorder { cx, cy, window };
    let x0 = window_start(cx, window).ok_or_else(outside)?;
    let y0 = window_start(cy, window).ok_or_else(outside)?;
    if x0 < border
        || y0 < border
        || x0 + window + border > plane.width()
        || y0 + window + border > plane.height()
    {
        return Err(outside());
    }
    let mut codes = Vec::with_capacity(window * window);
    for y in y0..y0 + window {
        let row = &plane.codes()[y * plane.width() + x0..y * plane.width() + x0 + window];
        codes.extend_from_slice(row);
    }
    debug_assert!(!codes.contains(&INVALID_CODE));
    let (indices, counts) = run_lengths(&mut codes);
    Ok(Histogram::from_counts(
        plane.bin_count(),
        plane.layout_id(),
        indices,
        &counts,
        (window * window) as f64,
    ))
}

/// Sorts `codes` and returns the distinct values with their multiplicities.
pub(crate) fn run_lengths(codes: &mut [u32]) -> (Vec<u32>, Vec<u32>) {
    codes.sort_unstable();
    let mut indices = Vec::new();
    let mut counts: Vec<u32> = Vec::new();
    for &c in codes.iter() {
        if indices.last() == Some(&c) {
            *counts.last_mut().unwrap() += 1;
        } else {
            indices.push(c);
            counts.push(1);
        }
    }
    (indices, counts)
}

/// Concatenates normalized histograms in order. Each of the `n` parts
/// keeps total weight `1/n`, so the result is again normalized.
pub fn concat(parts: &[Histogram]) -> Result<Histogram> {
    if parts.is_empty() {
        return Err(Error::Histogram("nothing to concatenate".into()));
    }
    if let Some(p) = parts.iter().find(|p| !p.is_normalized()) {
        return Err(Error::Histogram(format!(
            "concatenation input sums to {}, expected 1",
            p.sum()
        )));
    }
    let n = parts.len() as f64;
    let mut indices = Vec::new();
    let mut weights = Vec::new();
    let mut offset = 0usize;
    for p in parts {
        for (i, w) in p.iter() {
            indices.push((offset + i as usize) as u32);
            weights.push(if parts.len() == 1 { w } else { w / n });
        }
        offset += p.len();
    }
    Ok(Histogram {
        len: offset,
        layout_id: combine_layout_ids(parts.iter().map(Histogram::layout_id)),
        indices,
        weights,
    })
}

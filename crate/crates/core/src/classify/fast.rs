//! Incremental classifier. Code planes are computed once; along each row
//! the window histogram is updated by removing the column that leaves and
//! adding the one that enters. Per-class coefficient sums are patched only
//! for the bins whose counts changed.
//!
//! Bins where every class model is zero never contribute to a coefficient,
//! so counts are kept over the union of the models' nonzero bins ("slots").

use std::collections::HashMap;

use rayon::prelude::*;

use super::distance::{distance_from_sum, term};
use super::model::ModelSet;
use super::{run_in_pool, Interior};
use crate::descriptors::{code_planes, window_start, CodePlane, Histogram, INVALID_CODE};
use crate::error::{Error, Result};
use crate::raster::{LabelMask, Raster};

const NO_SLOT: u32 = u32::MAX;

/// Components with more bins than this use a hash map for slot lookup.
const DENSE_LOOKUP_LIMIT: usize = 1 << 20;

enum Lookup {
    Dense(Vec<u32>),
    Sparse(HashMap<u32, u32>),
}

impl Lookup {
    #[inline]
    fn get(&self, code: u32) -> u32 {
        if code == INVALID_CODE {
            return NO_SLOT;
        }
        match self {
            Lookup::Dense(v) => v[code as usize],
            Lookup::Sparse(m) => m.get(&code).copied().unwrap_or(NO_SLOT),
        }
    }
}

/// Code planes rewritten as slot indices, one plane per component.
struct SlotPlanes {
    width: usize,
    planes: Vec<Vec<u32>>,
}

impl SlotPlanes {
    /// `support` holds sorted global bin indices; the slot of a bin is its
    /// position in `support`.
    fn new(planes: &[CodePlane], support: &[u32]) -> Self {
        let mut offset = 0u32;
        let mut remapped = Vec::with_capacity(planes.len());
        for plane in planes {
            let bins = plane.bin_count();
            let lo = support.partition_point(|&g| g < offset);
            let hi = support.partition_point(|&g| (g as usize) < offset as usize + bins);
            let lookup = if bins <= DENSE_LOOKUP_LIMIT {
                let mut v = vec![NO_SLOT; bins];
                for (slot, &g) in support.iter().enumerate().take(hi).skip(lo) {
                    v[(g - offset) as usize] = slot as u32;
                }
                Lookup::Dense(v)
            } else {
                Lookup::Sparse(
                    (lo..hi)
                        .map(|slot| (support[slot] - offset, slot as u32))
                        .collect(),
                )
            };
            remapped.push(plane.codes().par_iter().map(|&c| lookup.get(c)).collect());
            offset += bins as u32;
        }
        SlotPlanes {
            width: planes.first().map_or(0, CodePlane::width),
            planes: remapped,
        }
    }
}

/// Slot counts of a square window with change tracking.
struct WindowCounts {
    counts: Vec<u32>,
    marked: Vec<bool>,
    touched: Vec<u32>,
}

impl WindowCounts {
    fn new(slots: usize) -> Self {
        WindowCounts {
            counts: vec![0; slots],
            marked: vec![false; slots],
            touched: Vec::new(),
        }
    }

    #[inline]
    fn touch(&mut self, slot: u32) {
        let s = slot as usize;
        if !self.marked[s] {
            self.marked[s] = true;
            self.touched.push(slot);
        }
    }

    /// Adds (or removes) column `x`, rows `y0..y0 + window`, of every plane.
    fn column(&mut self, planes: &SlotPlanes, x: usize, y0: usize, window: usize, add: bool) {
        for plane in &planes.planes {
            for y in y0..y0 + window {
                let slot = plane[y * planes.width + x];
                if slot == NO_SLOT {
                    continue;
                }
                let c = &mut self.counts[slot as usize];
                if add {
                    *c += 1;
                } else {
                    *c -= 1;
                }
                self.touch(slot);
            }
        }
    }

    /// Hands the changed slots to `f` and clears the change set.
    fn drain_touched(&mut self, mut f: impl FnMut(u32, u32)) {
        for &slot in &self.touched {
            self.marked[slot as usize] = false;
            f(slot, self.counts[slot as usize]);
        }
        self.touched.clear();
    }
}

/// Union of the nonzero bins of all class models, and each class's weight
/// in every slot (`weights[slot * K + k]`).
fn model_support(models: &ModelSet) -> (Vec<u32>, Vec<f64>) {
    let mut support: Vec<u32> = models
        .classes()
        .iter()
        .flat_map(|c| c.histogram.indices().iter().copied())
        .collect();
    support.sort_unstable();
    support.dedup();
    let k = models.class_count();
    let mut weights = vec![0.0; support.len() * k];
    for (ci, class) in models.classes().iter().enumerate() {
        for (bin, w) in class.histogram.iter() {
            let slot = support.binary_search(&bin).expect("bin in support");
            weights[slot * k + ci] = w;
        }
    }
    (support, weights)
}

pub fn classify_image_fast(raster: &Raster, models: &ModelSet) -> Result<LabelMask> {
    classify_image_fast_with(raster, models, 0)
}

/// Incremental classification on `workers` threads (0 = all available
/// cores). Produces exactly the labels of the naive classifier.
pub fn classify_image_fast_with(raster: &Raster, models: &ModelSet, workers: usize) -> Result<LabelMask> {
    let interior = Interior::new(raster, models)?;
    let config = models.config();
    let window = models.window();
    let n = config.components().len();
    let denominator = (window * window * n) as f64;
    let k = models.class_count();
    let class_ids: Vec<u8> = models.classes().iter().map(|c| c.class_id).collect();
    let (support, weights) = model_support(models);

    let width = raster.width();
    let mut mask = LabelMask::empty(width, raster.height());
    run_in_pool(workers, || -> Result<()> {
        let planes = code_planes(raster, config)?;
        let slots = SlotPlanes::new(&planes, &support);
        drop(planes);
        mask.labels_mut()
            .par_chunks_mut(width)
            .enumerate()
            .filter(|(y, _)| interior.rows.contains(y))
            .for_each_init(
                || (WindowCounts::new(support.len()), vec![0i64; support.len() * k], vec![0i128; k]),
                |(counts, terms, sums), (cy, row)| {
                    let y0 = window_start(cy, window).expect("interior row");
                    let refresh = |counts: &mut WindowCounts, terms: &mut [i64], sums: &mut [i128]| {
                        counts.drain_touched(|slot, c| {
                            let base = slot as usize * k;
                            let share = f64::from(c) / denominator;
                            for ci in 0..k {
                                let new = term(share, weights[base + ci]);
                                let old = std::mem::replace(&mut terms[base + ci], new);
                                sums[ci] += i128::from(new - old);
                            }
                        });
                    };
                    let first = interior.cols.start;
                    let x0 = window_start(first, window).expect("interior column");
                    for x in x0..x0 + window {
                        counts.column(&slots, x, y0, window, true);
                    }
                    for cx in interior.cols.clone() {
                        if cx > first {
                            let x0 = window_start(cx, window).expect("interior column");
                            counts.column(&slots, x0 - 1, y0, window, false);
                            counts.column(&slots, x0 + window - 1, y0, window, true);
                        }
                        refresh(counts, terms, sums);
                        let mut best = (0u8, f64::INFINITY);
                        for (ci, &sum) in sums.iter().enumerate() {
                            let d = distance_from_sum(sum);
                            if d < best.1 {
                                best = (class_ids[ci], d);
                            }
                        }
                        row[cx] = best.0;
                    }
                    // empty the window so the state can serve the next row
                    let x0 = window_start(interior.cols.end - 1, window).expect("interior column");
                    for x in x0..x0 + window {
                        counts.column(&slots, x, y0, window, false);
                    }
                    refresh(counts, terms, sums);
                    debug_assert!(sums.iter().all(|&s| s == 0));
                },
            );
        Ok(())
    })?;
    Ok(mask)
}

/// A window histogram that slides right across a row of code planes one
/// column at a time, exposing the incremental bookkeeping of the fast
/// classifier.
pub struct SlidingWindow {
    slots: SlotPlanes,
    support: Vec<u32>,
    counts: WindowCounts,
    bin_count: usize,
    layout_id: u64,
    window: usize,
    border: usize,
    height: usize,
    cx: usize,
    cy: usize,
}

impl SlidingWindow {
    /// Window of side `window` centred on `(cx, cy)` over the concatenation
    /// of `planes`, which must share dimensions.
    pub fn new(planes: &[CodePlane], window: usize, cx: usize, cy: usize) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::Histogram("no code planes".into()))?;
        if planes
            .iter()
            .any(|p| p.width() != first.width() || p.height() != first.height())
        {
            return Err(Error::DimensionMismatch("code planes differ in size".into()));
        }
        if window == 0 {
            return Err(Error::Histogram("window side must be positive".into()));
        }
        let mut support = Vec::new();
        let mut offset = 0u32;
        for plane in planes {
            let mut codes: Vec<u32> = plane
                .codes()
                .iter()
                .copied()
                .filter(|&c| c != INVALID_CODE)
                .collect();
            codes.sort_unstable();
            codes.dedup();
            support.extend(codes.into_iter().map(|c| c + offset));
            offset += plane.bin_count() as u32;
        }
        let ids: Vec<u64> = planes.iter().map(CodePlane::layout_id).collect();
        let mut sliding = SlidingWindow {
            slots: SlotPlanes::new(planes, &support),
            counts: WindowCounts::new(support.len()),
            support,
            bin_count: offset as usize,
            layout_id: crate::descriptors::combine_layout_ids(ids.into_iter()),
            window,
            border: planes.iter().map(CodePlane::border).max().unwrap_or(0),
            height: first.height(),
            cx,
            cy,
        };
        let (x0, y0) = sliding.origin(cx)?;
        for x in x0..x0 + window {
            sliding.counts.column(&sliding.slots, x, y0, window, true);
        }
        sliding.counts.drain_touched(|_, _| {});
        Ok(sliding)
    }

    fn origin(&self, cx: usize) -> Result<(usize, usize)> {
        let outside = Error::WindowTouchesBorder {
            cx,
            cy: self.cy,
            window: self.window,
        };
        let (Some(x0), Some(y0)) = (window_start(cx, self.window), window_start(self.cy, self.window)) else {
            return Err(outside);
        };
        if x0 < self.border
            || y0 < self.border
            || x0 + self.window + self.border > self.slots.width
            || y0 + self.window + self.border > self.height
        {
            return Err(outside);
        }
        Ok((x0, y0))
    }

    pub fn center(&self) -> (usize, usize) {
        (self.cx, self.cy)
    }

    /// Moves the window one pixel to the right.
    pub fn slide_right(&mut self) -> Result<()> {
        let (x0, y0) = self.origin(self.cx + 1)?;
        self.counts.column(&self.slots, x0 - 1, y0, self.window, false);
        self.counts.column(&self.slots, x0 + self.window - 1, y0, self.window, true);
        self.counts.drain_touched(|_, _| {});
        self.cx += 1;
        Ok(())
    }

    /// Current window histogram, normalized over all parts.
    pub fn histogram(&self) -> Histogram {
        let n = self.slots.planes.len();
        let (indices, counts): (Vec<u32>, Vec<u32>) = self
            .counts
            .counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(slot, &c)| (self.support[slot], c))
            .unzip();
        Histogram::from_counts(
            self.bin_count,
            self.layout_id,
            indices,
            &counts,
            (self.window * self.window * n) as f64,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{classify_image_naive, train_model_set, TrainingClass};
    use crate::descriptors::{window_histogram, DescriptorConfig, DescriptorKind};
    use crate::raster::Rect;

    fn two_texture_raster() -> Raster {
        Raster::from_fn(48, 40, 8, |x, y| {
            if x < 24 {
                ((x * 37 + y * 11) % 23) as u16 * 5
            } else {
                (((x / 3) + (y / 3)) % 2) as u16 * 120 + 40
            }
        })
        .unwrap()
    }

    #[test]
    fn sliding_matches_recomputed_histogram() {
        let r = two_texture_raster();
        let cfg = DescriptorConfig::single(DescriptorKind::Lbpriu, 8, 1).unwrap();
        let planes = code_planes(&r, &cfg).unwrap();
        let mut s = SlidingWindow::new(&planes, 7, 4, 10).unwrap();
        loop {
            let (cx, cy) = s.center();
            assert_eq!(s.histogram(), window_histogram(&planes[0], cx, cy, 7).unwrap());
            if s.slide_right().is_err() {
                break;
            }
        }
        assert_eq!(s.center().0, 48 - 1 - 1 - 3);
    }

    #[test]
    fn fast_equals_naive() {
        let r = two_texture_raster();
        let classes = [
            TrainingClass::new(1, "a", vec![Rect::new(2, 2, 20, 36)]),
            TrainingClass::new(2, "b", vec![Rect::new(26, 2, 20, 36)]),
        ];
        for kind in DescriptorKind::ALL {
            let cfg = DescriptorConfig::single(kind, 8, 1).unwrap();
            for window in [6, 9] {
                let set = train_model_set(&r, &classes, &cfg, window).unwrap();
                let naive = classify_image_naive(&r, &set).unwrap();
                let fast = classify_image_fast(&r, &set).unwrap();
                assert_eq!(naive, fast, "{kind} W={window}");
            }
        }
    }
}

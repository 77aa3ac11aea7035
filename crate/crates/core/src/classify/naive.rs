//! Reference classifier: every pixel's window histogram is recomputed from
//! the raster, codes included.

use rayon::prelude::*;

use super::distance::classify_pixel;
use super::model::ModelSet;
use super::{run_in_pool, Interior};
use crate::descriptors::{run_lengths, window_start, Histogram, PixelCoder};
use crate::error::Result;
use crate::raster::{LabelMask, Raster};

pub fn classify_image_naive(raster: &Raster, models: &ModelSet) -> Result<LabelMask> {
    classify_image_naive_with(raster, models, 0)
}

/// Naive classification on `workers` threads (0 = all available cores).
pub fn classify_image_naive_with(raster: &Raster, models: &ModelSet, workers: usize) -> Result<LabelMask> {
    let interior = Interior::new(raster, models)?;
    let config = models.config();
    let components = config.components();
    let coders = components
        .iter()
        .map(|c| PixelCoder::new(c, config, raster.width()))
        .collect::<Result<Vec<_>>>()?;
    let offsets: Vec<u32> = components
        .iter()
        .scan(0u32, |acc, c| {
            let start = *acc;
            *acc += config.component_bin_count(c) as u32;
            Some(start)
        })
        .collect();
    let window = models.window();
    let denominator = (window * window * components.len()) as f64;
    let bins = config.bin_count();
    let layout = config.layout_id();
    let pixels = raster.pixels();

    let mut mask = LabelMask::empty(raster.width(), raster.height());
    let width = raster.width();
    run_in_pool(workers, || {
        mask.labels_mut()
            .par_chunks_mut(width)
            .enumerate()
            .filter(|(y, _)| interior.rows.contains(y))
            .try_for_each_init(
                || (coders.clone(), Vec::with_capacity(window * window * offsets.len())),
                |(coders, codes), (cy, row)| -> Result<()> {
                    let y0 = window_start(cy, window).expect("interior row");
                    for cx in interior.cols.clone() {
                        let x0 = window_start(cx, window).expect("interior column");
                        codes.clear();
                        for (coder, &offset) in coders.iter_mut().zip(&offsets) {
                            for y in y0..y0 + window {
                                for x in x0..x0 + window {
                                    codes.push(offset + coder.code(pixels, x, y));
                                }
                            }
                        }
                        let (indices, counts) = run_lengths(codes);
                        let h = Histogram::from_counts(bins, layout, indices, &counts, denominator);
                        row[cx] = classify_pixel(&h, models)?.0;
                    }
                    Ok(())
                },
            )
    })?;
    Ok(mask)
}

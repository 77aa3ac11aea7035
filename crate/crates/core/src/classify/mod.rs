//! Training class models and labelling rasters by nearest Bhattacharyya
//! distance between window histograms and class histograms.
//!
//! Two classifiers produce identical masks: [`classify_image_naive`]
//! recomputes everything per pixel, [`classify_image_fast`] caches code
//! planes and slides the window incrementally.

mod distance;
mod fast;
mod io;
mod model;
mod naive;

use std::ops::Range;

pub use distance::{
    bhattacharyya, bhattacharyya_coefficient, classify_pixel, max_distance, COEFFICIENT_FLOOR,
};
pub use fast::{classify_image_fast, classify_image_fast_with, SlidingWindow};
pub use io::{
    any_model_from_str, load_any_model, load_model, model_from_str, model_to_string, save_model,
    AnyModel, FORMAT_VERSION,
};
pub use model::{
    build_class_model, train_model_set, train_var, ClassModel, ModelSet, TrainingClass,
    DEFAULT_WINDOW,
};
pub use naive::{classify_image_naive, classify_image_naive_with};

pub(crate) use io::{checked_table, from_table, to_toml};

use crate::error::{Error, Result};
use crate::raster::Raster;

/// Which classifier to run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Strategy {
    Naive,
    #[default]
    Fast,
}

/// Classifies with the chosen strategy on `workers` threads (0 = all cores).
pub fn classify_image(
    raster: &Raster,
    models: &ModelSet,
    strategy: Strategy,
    workers: usize,
) -> Result<crate::raster::LabelMask> {
    match strategy {
        Strategy::Naive => classify_image_naive_with(raster, models, workers),
        Strategy::Fast => classify_image_fast_with(raster, models, workers),
    }
}

/// Pixels whose window stays clear of the border band of the largest
/// radius. All other pixels are left unlabeled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interior {
    pub rows: Range<usize>,
    pub cols: Range<usize>,
}

impl Interior {
    pub fn for_window(width: usize, height: usize, radius: usize, window: usize) -> Result<Self> {
        let need = 2 * radius + window;
        if window == 0 || width < need || height < need {
            return Err(Error::RasterTooSmall {
                width,
                height,
                reason: format!("window {window} with radius {radius} needs at least {need}x{need}"),
            });
        }
        let lo = radius + (window - 1) / 2;
        Ok(Interior {
            rows: lo..height - radius - window / 2,
            cols: lo..width - radius - window / 2,
        })
    }

    pub(crate) fn new(raster: &Raster, models: &ModelSet) -> Result<Self> {
        Interior::for_window(
            raster.width(),
            raster.height(),
            models.config().max_radius() as usize,
            models.window(),
        )
    }

    pub fn contains(&self, x: usize, y: usize) -> bool {
        self.rows.contains(&y) && self.cols.contains(&x)
    }
}

/// Runs `f` on a dedicated pool of `workers` threads (0 = rayon's default).
pub(crate) fn run_in_pool<T: Send>(workers: usize, f: impl FnOnce() -> Result<T> + Send) -> Result<T> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start {workers} workers: {e}")))?;
    pool.install(f)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn interior_bounds() {
        let i = Interior::for_window(20, 12, 1, 4).unwrap();
        assert_eq!(i.cols, 2..17);
        assert_eq!(i.rows, 2..9);
        assert!(Interior::for_window(5, 5, 1, 4).is_err());
        let i = Interior::for_window(6, 6, 1, 4).unwrap();
        assert_eq!(i.cols, 2..3);
    }
}

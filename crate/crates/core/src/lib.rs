//! Texture descriptors (LBP, rotation-invariant uniform LBP, local variance
//! and the Weber local descriptor), sliding-window histogram classification
//! with the Bhattacharyya distance, a GLCM baseline, accuracy assessment,
//! synthetic mosaics and a benchmark harness.

pub mod bench;
pub mod classify;
pub mod descriptors;
mod error;
pub mod evaluate;
pub mod glcm;
pub mod raster;
pub mod synth;

pub use classify::{
    classify_image, classify_image_fast, classify_image_naive, load_model, save_model,
    train_model_set, ModelSet, Strategy, TrainingClass,
};
pub use descriptors::{DescriptorConfig, DescriptorKind, Histogram, Scale};
pub use error::{Error, Result};
pub use evaluate::{assess, confusion, Assessment, ConfusionMatrix};
pub use raster::{LabelMask, Raster, Rect};
pub use synth::{Mosaic, Recipe};

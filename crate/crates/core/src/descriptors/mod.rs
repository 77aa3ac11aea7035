//! Texture descriptors: per-pixel kernels, cached code planes, window
//! histograms and their concatenation.

mod config;
mod histogram;
mod kernels;
mod plane;

pub use config::{
    Component, ComponentKind, DescriptorConfig, DescriptorKind, Scale, WldParams,
    DEFAULT_VAR_BINS, MAX_LBP_POINTS, MULTI_SCALE,
};
pub use histogram::{concat, window_histogram, Histogram, NORMALIZATION_TOLERANCE};
pub use kernels::{
    lbp_code, lbpriu_code, orientation_angle, orientation_bin, quantize_var,
    train_var_boundaries, uniformity, var_value, wld_bin, wld_excitation, wld_orientation,
    EXCITATION_LIMIT, WLD_EPSILON,
};
pub use plane::{code_plane, code_planes, CodePlane, INVALID_CODE};

pub(crate) use config::combine_layout_ids;
pub(crate) use histogram::{run_lengths, window_start};
pub(crate) use plane::{check_size, PixelCoder, Sampler};

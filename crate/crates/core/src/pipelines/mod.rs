//! Applications built on the filters: detail enhancement, exposure fusion
//! and row profiles.

pub mod detail;
pub mod fusion;
pub mod profile;
pub mod pyramid;

pub use detail::{
    base_layer, decompose_with, detail_enhance, detail_enhance_with, detail_layer, recompose,
    DEFAULT_AMPLIFICATION,
};
pub use fusion::{
    default_levels, exposure_fuse, fuse_with_weights, fusion_params, mertens_weights,
    smooth_weight_maps, ExposureSequence, WeightMaps,
};
pub use profile::row_profile;
pub use pyramid::{collapse, gaussian_pyramid, laplacian_pyramid};

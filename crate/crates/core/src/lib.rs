//! Edge-perceptual guided image filtering.
//!
//! The crate implements the guided filter (GIF), its weighted (WGIF) and
//! gradient-domain (GGIF) variants, and the enhanced edge-perceptual guided
//! filter (EPGIF) on one O(N) windowed-statistics core, together with
//! detail enhancement, exposure fusion and PSNR/SSIM evaluation.
//!
//! ```
//! use epgif::{epgif_filter, EpgifParams, ImagePlane};
//!
//! let x = ImagePlane::from_fn(32, 32, 1.0, |x, _| if x < 16 { 0.2 } else { 0.8 });
//! let r = epgif_filter(&x, &x, &EpgifParams::new(4, 0.01)).unwrap();
//! assert_eq!(r.width(), 32);
//! ```

pub mod baseline;
pub mod cli;
pub mod epgif;
pub mod error;
pub mod filters;
pub mod image;
pub mod metrics;
pub mod pipelines;
pub mod synth;

pub use baseline::{ggif_filter, gif_filter, wgif_filter, BaselineParams, CoefficientField};
pub use epgif::{
    compute_psi, compute_tau, dump_diagnostics, epgif_filter, ConstraintField, Diagnostics,
    EdgeWeightField, EpgifParams, RhoMode, WeightSign,
};
pub use error::{Error, Result};
pub use filters::{FilterConfig, FilterKind};
pub use image::{
    load_image, save_image, to_luminance, BitDepth, ImagePlane, MultiPlaneImage, WindowStats,
};
pub use metrics::{emit_report, psnr, ssim, MetricReport, MetricRow};

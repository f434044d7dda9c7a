//! Base/detail decomposition and detail enhancement.

use crate::epgif::{epgif_filter, EpgifParams};
use crate::error::{Error, Result};
use crate::filters::{FilterConfig, FilterKind};
use crate::image::MultiPlaneImage;

/// Detail boost used by default: the result is `X + 5 (X - base)`.
pub const DEFAULT_AMPLIFICATION: f64 = 5.0;

/// Self-guided smoothing of every plane.
pub fn base_layer(x: &MultiPlaneImage, params: &EpgifParams) -> Result<MultiPlaneImage> {
    x.try_map_planes(|_, p| epgif_filter(p, p, params))
}

/// `X - base`, signed and unclamped.
pub fn detail_layer(x: &MultiPlaneImage, params: &EpgifParams) -> Result<MultiPlaneImage> {
    let base = base_layer(x, params)?;
    subtract(x, &base)
}

/// Base and detail layer of the chosen filter.
pub fn decompose_with(
    x: &MultiPlaneImage,
    filter: &FilterConfig,
) -> Result<(MultiPlaneImage, MultiPlaneImage)> {
    let base = filter.apply_image(x, None)?;
    let detail = subtract(x, &base)?;
    Ok((base, detail))
}

fn subtract(x: &MultiPlaneImage, base: &MultiPlaneImage) -> Result<MultiPlaneImage> {
    x.try_map_planes(|i, p| Ok(p.zip_map(base.plane(i), |a, b| a - b)))
}

fn check_amplification(amplification: f64) -> Result<()> {
    if amplification.is_finite() && amplification >= 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "amplification must be finite and nonnegative, got {amplification}"
        )))
    }
}

/// `X + amplification * detail`, clamped to `[0, L]`.
pub fn recompose(
    x: &MultiPlaneImage,
    detail: &MultiPlaneImage,
    amplification: f64,
) -> Result<MultiPlaneImage> {
    check_amplification(amplification)?;
    x.try_map_planes(|i, p| {
        let l = p.range();
        Ok(p.zip_map(detail.plane(i), |v, d| {
            (v + amplification * d).clamp(0.0, l)
        }))
    })
}

/// Detail enhancement with the edge-perceptual filter as smoother.
pub fn detail_enhance(
    x: &MultiPlaneImage,
    params: &EpgifParams,
    amplification: f64,
) -> Result<MultiPlaneImage> {
    check_amplification(amplification)?;
    let detail = detail_layer(x, params)?;
    recompose(x, &detail, amplification)
}

/// Detail enhancement with any of the four filters as smoother.
pub fn detail_enhance_with(
    x: &MultiPlaneImage,
    filter: &FilterConfig,
    amplification: f64,
) -> Result<MultiPlaneImage> {
    check_amplification(amplification)?;
    if filter.kind == FilterKind::Epgif {
        return detail_enhance(x, &filter.params, amplification);
    }
    let (_, detail) = decompose_with(x, filter)?;
    recompose(x, &detail, amplification)
}

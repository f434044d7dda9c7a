//! Multi-scale exposure fusion with edge-perceptual smoothing of the weights.
//!
//! Per-frame weights are contrast x saturation x well-exposedness, smoothed
//! at full resolution by the filter under each frame's luminance, then used
//! to blend the frames' Laplacian pyramids level by level.

use super::pyramid::{collapse, gaussian_pyramid, laplacian_pyramid, max_levels};
use crate::epgif::{epgif_filter, EpgifParams};
use crate::error::{Error, Result};
use crate::image::{to_luminance, ImagePlane, MultiPlaneImage};

/// Floor added to the contrast and saturation factors so that a frame with
/// no texture still competes through its exposure.
pub const WEIGHT_FLOOR: f64 = 1e-12;
/// Smallest smoothed per-pixel sum that is renormalized rather than
/// replaced by uniform weights.
pub const SUM_FLOOR: f64 = 1e-12;
/// Spread of the well-exposedness Gaussian around mid-gray.
pub const EXPOSEDNESS_SIGMA: f64 = 0.2;

/// Filter parameters for weight-map smoothing (`beta = 1/50`).
pub fn fusion_params() -> EpgifParams {
    EpgifParams {
        beta: 1.0 / 50.0,
        ..EpgifParams::default()
    }
}

/// Frames of one scene at different exposures.
#[derive(Debug, Clone)]
pub struct ExposureSequence {
    frames: Vec<MultiPlaneImage>,
}

impl ExposureSequence {
    /// Requires at least one frame; all frames must share size, plane count
    /// and dynamic range.
    pub fn new(frames: Vec<MultiPlaneImage>) -> Result<Self> {
        let first = frames
            .first()
            .ok_or_else(|| Error::param("an exposure sequence needs at least one frame"))?;
        for (k, f) in frames.iter().enumerate().skip(1) {
            if !f.same_shape(first) {
                return Err(Error::shape(format!(
                    "frame {k} is {}x{}, frame 0 is {}x{}",
                    f.width(),
                    f.height(),
                    first.width(),
                    first.height()
                )));
            }
            if f.num_planes() != first.num_planes() || f.range() != first.range() {
                return Err(Error::shape(format!(
                    "frame {k} differs from frame 0 in plane count or range"
                )));
            }
        }
        Ok(Self { frames })
    }

    pub fn frames(&self) -> &[MultiPlaneImage] {
        &self.frames
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn width(&self) -> usize {
        self.frames[0].width()
    }

    pub fn height(&self) -> usize {
        self.frames[0].height()
    }
}

/// One nonnegative map per frame, summing to one at every pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMaps {
    pub maps: Vec<ImagePlane>,
}

impl WeightMaps {
    /// Largest deviation of the per-pixel sum from one.
    pub fn max_sum_error(&self) -> f64 {
        let n = self.maps[0].len();
        (0..n)
            .map(|i| (self.maps.iter().map(|m| m.data()[i]).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }
}

/// Absolute 4-neighbour Laplacian with replicated borders.
fn contrast(lum: &ImagePlane) -> ImagePlane {
    let (w, h) = (lum.width(), lum.height());
    ImagePlane::from_fn(w, h, lum.range(), |x, y| {
        let c = lum.get(x, y);
        let l = lum.get(x.saturating_sub(1), y);
        let r = lum.get((x + 1).min(w - 1), y);
        let u = lum.get(x, y.saturating_sub(1));
        let d = lum.get(x, (y + 1).min(h - 1));
        (l + r + u + d - 4.0 * c).abs()
    })
}

/// Standard deviation across the color planes; gray frames have no
/// saturation cue and get 1.
fn saturation(frame: &MultiPlaneImage) -> ImagePlane {
    let planes = frame.planes();
    if planes.len() == 1 {
        return planes[0].map(|_| 1.0);
    }
    let k = planes.len() as f64;
    ImagePlane::from_fn(frame.width(), frame.height(), frame.range(), |x, y| {
        let m = planes.iter().map(|p| p.get(x, y)).sum::<f64>() / k;
        (planes
            .iter()
            .map(|p| (p.get(x, y) - m).powi(2))
            .sum::<f64>()
            / k)
            .sqrt()
    })
}

fn well_exposedness(frame: &MultiPlaneImage) -> ImagePlane {
    let l = frame.range();
    let s2 = 2.0 * EXPOSEDNESS_SIGMA * EXPOSEDNESS_SIGMA;
    ImagePlane::from_fn(frame.width(), frame.height(), l, |x, y| {
        frame
            .planes()
            .iter()
            .map(|p| {
                let v = p.get(x, y) / l - 0.5;
                (-v * v / s2).exp()
            })
            .product()
    })
}

/// Divides by the per-pixel sum; sums below `floor` fall back to `1/K`.
fn normalize(raw: Vec<ImagePlane>, floor: f64) -> WeightMaps {
    let k = raw.len();
    let n = raw[0].len();
    let mut maps = raw;
    for i in 0..n {
        let s: f64 = maps.iter().map(|m| m.data()[i]).sum();
        for m in maps.iter_mut() {
            m.data_mut()[i] = if s > floor {
                m.data()[i] / s
            } else {
                1.0 / k as f64
            };
        }
    }
    WeightMaps {
        maps: maps.into_iter().map(|m| m.with_range(1.0)).collect(),
    }
}

/// Normalized contrast x saturation x well-exposedness maps.
pub fn mertens_weights(seq: &ExposureSequence) -> Result<WeightMaps> {
    let mut raw = Vec::with_capacity(seq.len());
    for frame in seq.frames() {
        let c = contrast(&to_luminance(frame)?);
        let s = saturation(frame);
        let e = well_exposedness(frame);
        let mut w = c.zip_map(&s, |c, s| (c + WEIGHT_FLOOR) * (s + WEIGHT_FLOOR));
        for (wv, ev) in w.data_mut().iter_mut().zip(e.data()) {
            *wv *= ev;
        }
        raw.push(w);
    }
    // every raw weight is positive, so only an exact zero sum needs the fallback
    Ok(normalize(raw, 0.0))
}

/// Filters map `k` under the luminance of frame `k`, clamps negatives to
/// zero and renormalizes.
pub fn smooth_weight_maps(
    w: &WeightMaps,
    seq: &ExposureSequence,
    params: &EpgifParams,
) -> Result<WeightMaps> {
    params.validate()?;
    if w.maps.len() != seq.len() {
        return Err(Error::shape(format!(
            "{} weight maps for {} frames",
            w.maps.len(),
            seq.len()
        )));
    }
    let mut raw = Vec::with_capacity(seq.len());
    for (map, frame) in w.maps.iter().zip(seq.frames()) {
        let guide = to_luminance(frame)?;
        map.check_shape(&guide, "weight map and frame")?;
        raw.push(epgif_filter(map, &guide, params)?.map(|v| v.max(0.0)));
    }
    Ok(normalize(raw, SUM_FLOOR))
}

/// Default pyramid depth: as deep as the frame size allows.
pub fn default_levels(seq: &ExposureSequence) -> usize {
    max_levels(seq.width(), seq.height()).max(1)
}

/// Fuses the frames; the result is clamped to `[0, L]`.
pub fn exposure_fuse(
    seq: &ExposureSequence,
    params: &EpgifParams,
    levels: usize,
) -> Result<MultiPlaneImage> {
    let weights = smooth_weight_maps(&mertens_weights(seq)?, seq, params)?;
    fuse_with_weights(seq, &weights, levels)
}

/// Pyramid blending with the given normalized weights.
pub fn fuse_with_weights(
    seq: &ExposureSequence,
    weights: &WeightMaps,
    levels: usize,
) -> Result<MultiPlaneImage> {
    let weight_pyramids = weights
        .maps
        .iter()
        .map(|m| gaussian_pyramid(m, levels))
        .collect::<Result<Vec<_>>>()?;
    let first = &seq.frames()[0];
    first.try_map_planes(|c, _| {
        let mut fused: Option<Vec<ImagePlane>> = None;
        for (frame, wp) in seq.frames().iter().zip(&weight_pyramids) {
            let lap = laplacian_pyramid(frame.plane(c), levels)?;
            let contrib: Vec<ImagePlane> = lap
                .iter()
                .zip(wp)
                .map(|(l, g)| l.zip_map(g, |a, b| a * b))
                .collect();
            fused = Some(match fused {
                None => contrib,
                Some(acc) => acc
                    .iter()
                    .zip(&contrib)
                    .map(|(a, b)| a.zip_map(b, |x, y| x + y))
                    .collect(),
            });
        }
        let out = collapse(&fused.expect("at least one frame"))?;
        Ok(out.with_range(first.range()).clamped())
    })
}

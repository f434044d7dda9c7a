//! Gaussian and Laplacian pyramids with the 5-tap binomial kernel.
//!
//! At the borders the kernel is truncated and renormalized over the taps that
//! fall inside the image, so no padding values are invented. Downsampling
//! keeps even indices (`ceil(n / 2)` samples). Upsampling places the coarse
//! samples on the even positions of the finer grid and smooths with the same
//! kernel, normalized by the weight of the taps that hit a sample.

use crate::error::{Error, Result};
use crate::image::ImagePlane;

const KERNEL: [f64; 5] = [1.0 / 16.0, 4.0 / 16.0, 6.0 / 16.0, 4.0 / 16.0, 1.0 / 16.0];

/// Deepest pyramid allowed for a plane: `floor(log2(min(width, height)))`.
pub fn max_levels(width: usize, height: usize) -> usize {
    let m = width.min(height);
    (usize::BITS - 1 - m.leading_zeros()) as usize
}

pub fn check_levels(width: usize, height: usize, levels: usize) -> Result<()> {
    let max = max_levels(width, height);
    if levels == 0 || levels > max.max(1) {
        return Err(Error::param(format!(
            "pyramid levels must lie in 1..={} for a {width}x{height} image, got {levels}",
            max.max(1)
        )));
    }
    Ok(())
}

/// One separable pass along a line: taps at `i + k - 2` that satisfy `keep`.
fn filter_line(src: &[f64], dst: &mut [f64], keep: impl Fn(usize) -> bool) {
    let n = src.len();
    for (i, d) in dst.iter_mut().enumerate() {
        let mut acc = 0.0;
        let mut norm = 0.0;
        for (k, &wk) in KERNEL.iter().enumerate() {
            let j = i + k;
            if j < 2 || j - 2 >= n || !keep(j - 2) {
                continue;
            }
            acc += wk * src[j - 2];
            norm += wk;
        }
        *d = if norm > 0.0 { acc / norm } else { 0.0 };
    }
}

fn separable(p: &ImagePlane, keep: impl Fn(usize) -> bool + Copy) -> ImagePlane {
    let (w, h) = (p.width(), p.height());
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        filter_line(p.row(y), &mut tmp[y * w..(y + 1) * w], keep);
    }
    let mut out = vec![0.0; w * h];
    let mut col = vec![0.0; h];
    let mut res = vec![0.0; h];
    for x in 0..w {
        for y in 0..h {
            col[y] = tmp[y * w + x];
        }
        filter_line(&col, &mut res, keep);
        for y in 0..h {
            out[y * w + x] = res[y];
        }
    }
    ImagePlane::from_parts(w, h, out, p.range())
}

/// Binomial blur with border-renormalized taps.
pub fn blur(p: &ImagePlane) -> ImagePlane {
    separable(p, |_| true)
}

/// Blur, then keep every second sample in each direction.
pub fn downsample(p: &ImagePlane) -> ImagePlane {
    let b = blur(p);
    let (w, h) = (p.width().div_ceil(2), p.height().div_ceil(2));
    ImagePlane::from_fn(w, h, p.range(), |x, y| b.get(2 * x, 2 * y))
}

/// Expands `coarse` onto a `width x height` grid whose even positions hold
/// the coarse samples; every output is the kernel-weighted mean of the
/// samples it reaches.
pub fn upsample(coarse: &ImagePlane, width: usize, height: usize) -> ImagePlane {
    debug_assert_eq!(width.div_ceil(2), coarse.width());
    debug_assert_eq!(height.div_ceil(2), coarse.height());
    let mut stuffed = ImagePlane::filled(width, height, 0.0, coarse.range());
    for y in 0..coarse.height() {
        for x in 0..coarse.width() {
            stuffed.set(2 * x, 2 * y, coarse.get(x, y));
        }
    }
    separable(&stuffed, |i| i % 2 == 0)
}

/// `levels` planes, finest first.
pub fn gaussian_pyramid(img: &ImagePlane, levels: usize) -> Result<Vec<ImagePlane>> {
    check_levels(img.width(), img.height(), levels)?;
    let mut out = vec![img.clone()];
    for _ in 1..levels {
        let next = downsample(out.last().expect("non-empty"));
        out.push(next);
    }
    Ok(out)
}

/// Band-pass residuals against the upsampled next level; the last entry is
/// the coarsest Gaussian level itself.
pub fn laplacian_pyramid(img: &ImagePlane, levels: usize) -> Result<Vec<ImagePlane>> {
    let g = gaussian_pyramid(img, levels)?;
    let mut out = Vec::with_capacity(levels);
    for i in 0..levels - 1 {
        let up = upsample(&g[i + 1], g[i].width(), g[i].height());
        out.push(g[i].zip_map(&up, |a, b| a - b));
    }
    out.push(g[levels - 1].clone());
    Ok(out)
}

/// Inverse of [`laplacian_pyramid`].
pub fn collapse(laplacian: &[ImagePlane]) -> Result<ImagePlane> {
    let (last, rest) = laplacian
        .split_last()
        .ok_or_else(|| Error::param("cannot collapse an empty pyramid"))?;
    let mut acc = last.clone();
    for level in rest.iter().rev() {
        if level.width().div_ceil(2) != acc.width() || level.height().div_ceil(2) != acc.height() {
            return Err(Error::shape("pyramid levels do not halve in size"));
        }
        let up = upsample(&acc, level.width(), level.height());
        acc = level.zip_map(&up, |a, b| a + b);
    }
    Ok(acc)
}

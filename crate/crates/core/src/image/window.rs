//! Box sums, means, variances and covariances over `(2r+1)x(2r+1)` windows.
//!
//! Windows are truncated at the image border and means are normalized by the
//! number of pixels that actually fall inside the image.
//!
//! The separable passes use block-wise running sums: the line is cut into
//! blocks of length `2r+1`, and every window spans at most two adjacent
//! blocks, so its sum is `suffix(left block) + prefix(right block)`. This is
//! O(1) per sample independent of `r`, and unlike a summed-area table it never
//! subtracts large partial sums, so tiny weights next to huge ones keep their
//! relative precision.

use super::ImagePlane;
use crate::error::Result;

/// Where a truncated window `[lo, hi]` draws its sum from.
#[derive(Clone, Copy)]
enum Span {
    Prefix(usize),
    Suffix(usize),
    Both(usize, usize),
}

#[inline]
fn span(i: usize, radius: usize, n: usize, block: usize) -> Span {
    let lo = i.saturating_sub(radius);
    let hi = (i + radius).min(n - 1);
    if lo / block == hi / block {
        if lo.is_multiple_of(block) {
            Span::Prefix(hi)
        } else {
            // only the right border truncates a window inside one block, and
            // `hi = n - 1` always closes the last block
            debug_assert_eq!(hi, n - 1);
            Span::Suffix(lo)
        }
    } else {
        Span::Both(lo, hi)
    }
}

#[inline]
fn window_count(i: usize, radius: usize, n: usize) -> usize {
    (i + radius).min(n - 1) - i.saturating_sub(radius) + 1
}

fn sums_along_rows(src: &[f64], w: usize, h: usize, radius: usize, out: &mut [f64]) {
    let radius = radius.min(w);
    let block = 2 * radius + 1;
    let mut prefix = vec![0.0; w];
    let mut suffix = vec![0.0; w];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for start in (0..w).step_by(block) {
            let end = (start + block).min(w);
            let mut acc = 0.0;
            for i in start..end {
                acc += row[i];
                prefix[i] = acc;
            }
            acc = 0.0;
            for i in (start..end).rev() {
                acc += row[i];
                suffix[i] = acc;
            }
        }
        let dst = &mut out[y * w..(y + 1) * w];
        for (x, d) in dst.iter_mut().enumerate() {
            *d = match span(x, radius, w, block) {
                Span::Prefix(hi) => prefix[hi],
                Span::Suffix(lo) => suffix[lo],
                Span::Both(lo, hi) => suffix[lo] + prefix[hi],
            };
        }
    }
}

fn sums_along_columns(src: &[f64], w: usize, h: usize, radius: usize, out: &mut [f64]) {
    let radius = radius.min(h);
    let block = 2 * radius + 1;
    let rows = block.min(h);
    // prefix and suffix rows of the block holding `hi`, and the suffix rows
    // of the block before it; row `y` of a block lives at `(y % block) * w`
    let mut prefix = vec![0.0; rows * w];
    let mut suffix = vec![0.0; rows * w];
    let mut prev_suffix = vec![0.0; rows * w];
    let mut loaded = usize::MAX;
    for y in 0..h {
        let hi = (y + radius).min(h - 1);
        let k = hi / block;
        if k != loaded {
            std::mem::swap(&mut prev_suffix, &mut suffix);
            let start = k * block;
            let end = (start + block).min(h);
            let n = end - start;
            prefix[..w].copy_from_slice(&src[start * w..(start + 1) * w]);
            for i in 1..n {
                let (done, cur) = prefix.split_at_mut(i * w);
                let row = &src[(start + i) * w..(start + i + 1) * w];
                for ((p, &q), &s) in cur[..w].iter_mut().zip(&done[(i - 1) * w..]).zip(row) {
                    *p = q + s;
                }
            }
            suffix[(n - 1) * w..n * w].copy_from_slice(&src[(end - 1) * w..end * w]);
            for i in (0..n - 1).rev() {
                let (cur, done) = suffix.split_at_mut((i + 1) * w);
                let row = &src[(start + i) * w..(start + i + 1) * w];
                for ((p, &q), &s) in cur[i * w..].iter_mut().zip(&done[..w]).zip(row) {
                    *p = q + s;
                }
            }
            loaded = k;
        }
        let at = |i: usize| (i % block) * w..(i % block + 1) * w;
        let dst = &mut out[y * w..(y + 1) * w];
        match span(y, radius, h, block) {
            Span::Prefix(hi) => dst.copy_from_slice(&prefix[at(hi)]),
            Span::Suffix(lo) => dst.copy_from_slice(&suffix[at(lo)]),
            Span::Both(lo, hi) => {
                for ((d, &a), &b) in dst
                    .iter_mut()
                    .zip(&prev_suffix[at(lo)])
                    .zip(&prefix[at(hi)])
                {
                    *d = a + b;
                }
            }
        }
    }
}

/// Raw windowed sums of a row-major buffer.
pub fn window_sums(data: &[f64], width: usize, height: usize, radius: usize) -> Vec<f64> {
    assert_eq!(data.len(), width * height);
    let mut tmp = vec![0.0; data.len()];
    sums_along_rows(data, width, height, radius, &mut tmp);
    let mut out = vec![0.0; data.len()];
    sums_along_columns(&tmp, width, height, radius, &mut out);
    out
}

/// Sum of `img` over the truncated window around each pixel.
pub fn box_sum(img: &ImagePlane, radius: usize) -> ImagePlane {
    let (w, h) = (img.width(), img.height());
    ImagePlane::from_parts(w, h, window_sums(img.data(), w, h, radius), img.range())
}

/// Mean of `img` over the truncated window around each pixel, normalized by
/// the number of in-bounds pixels.
pub fn box_mean(img: &ImagePlane, radius: usize) -> ImagePlane {
    let (w, h) = (img.width(), img.height());
    let mut sums = window_sums(img.data(), w, h, radius);
    divide_by_counts(&mut sums, w, h, radius);
    ImagePlane::from_parts(w, h, sums, img.range())
}

fn divide_by_counts(sums: &mut [f64], w: usize, h: usize, radius: usize) {
    let cols: Vec<f64> = (0..w).map(|x| window_count(x, radius, w) as f64).collect();
    for y in 0..h {
        let cy = window_count(y, radius, h) as f64;
        for (s, &cx) in sums[y * w..(y + 1) * w].iter_mut().zip(&cols) {
            *s /= cx * cy;
        }
    }
}

fn mean_of(data: &[f64], w: usize, h: usize, radius: usize) -> Vec<f64> {
    let mut s = window_sums(data, w, h, radius);
    divide_by_counts(&mut s, w, h, radius);
    s
}

/// Per-pixel local statistics of an input `X` and a guidance `G`.
#[derive(Debug, Clone)]
pub struct WindowStats {
    pub mean_x: ImagePlane,
    pub mean_g: ImagePlane,
    pub var_x: ImagePlane,
    pub var_g: ImagePlane,
    pub cov_gx: ImagePlane,
    pub radius: usize,
}

/// Windowed means, variances (clamped at zero) and the covariance of `G` and `X`.
///
/// Both inputs are shifted by their global means before the second moments
/// are accumulated, which keeps `E[x^2] - E[x]^2` away from cancellation.
pub fn window_stats(x: &ImagePlane, g: &ImagePlane, radius: usize) -> Result<WindowStats> {
    x.check_shape(g, "input and guidance")?;
    let (w, h) = (x.width(), x.height());
    let (mx, mg) = (x.mean(), g.mean());
    let xc: Vec<f64> = x.data().iter().map(|v| v - mx).collect();
    let gc: Vec<f64> = g.data().iter().map(|v| v - mg).collect();

    let mean_xc = mean_of(&xc, w, h, radius);
    let mean_gc = mean_of(&gc, w, h, radius);
    let xx: Vec<f64> = xc.iter().map(|v| v * v).collect();
    let gg: Vec<f64> = gc.iter().map(|v| v * v).collect();
    let gx: Vec<f64> = gc.iter().zip(&xc).map(|(a, b)| a * b).collect();
    let corr_x = mean_of(&xx, w, h, radius);
    let corr_g = mean_of(&gg, w, h, radius);
    let corr_gx = mean_of(&gx, w, h, radius);

    let var = |corr: &[f64], m: &[f64]| -> Vec<f64> {
        corr.iter()
            .zip(m)
            .map(|(c, m)| (c - m * m).max(0.0))
            .collect()
    };
    let var_x = var(&corr_x, &mean_xc);
    let var_g = var(&corr_g, &mean_gc);
    let cov_gx: Vec<f64> = corr_gx
        .iter()
        .zip(mean_gc.iter().zip(&mean_xc))
        .map(|(c, (a, b))| c - a * b)
        .collect();

    let plane = |d: Vec<f64>, r: f64| ImagePlane::from_parts(w, h, d, r);
    let lx = x.range();
    let lg = g.range();
    Ok(WindowStats {
        mean_x: plane(mean_xc.iter().map(|v| v + mx).collect(), lx),
        mean_g: plane(mean_gc.iter().map(|v| v + mg).collect(), lg),
        var_x: plane(var_x, lx),
        var_g: plane(var_g, lg),
        cov_gx: plane(cov_gx, lx),
        radius,
    })
}

/// Local variance of `img` at the given radius, clamped to be nonnegative.
pub fn local_variance(img: &ImagePlane, radius: usize) -> ImagePlane {
    let (w, h) = (img.width(), img.height());
    let m = img.mean();
    let c: Vec<f64> = img.data().iter().map(|v| v - m).collect();
    let mean = mean_of(&c, w, h, radius);
    let sq: Vec<f64> = c.iter().map(|v| v * v).collect();
    let corr = mean_of(&sq, w, h, radius);
    let var = corr
        .iter()
        .zip(&mean)
        .map(|(c, m)| (c - m * m).max(0.0))
        .collect();
    ImagePlane::from_parts(w, h, var, img.range())
}

/// Local standard deviation: square root of [`local_variance`].
pub fn local_stddev(img: &ImagePlane, radius: usize) -> ImagePlane {
    local_variance(img, radius).map(f64::sqrt)
}

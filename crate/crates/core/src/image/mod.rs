//! Image containers and the windowed statistics every filter is built on.
//!
//! All samples are `f64`. Loading maps integer samples onto `[0, 1]`, so the
//! dynamic range `L` of a loaded plane is `1.0`; intermediate planes (linear
//! coefficients, detail layers) may hold any finite value.

mod io;
mod window;

pub use io::{load_image, save_image, write_atomic, BitDepth};
pub use window::{
    box_mean, box_sum, local_stddev, local_variance, window_stats, window_sums, WindowStats,
};

use crate::error::{Error, Result};

/// Rec. 601 luma weights used for the shared luminance guidance.
pub const LUMA_WEIGHTS: [f64; 3] = [0.299, 0.587, 0.114];

/// Single-channel row-major raster with a declared dynamic range.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePlane {
    width: usize,
    height: usize,
    data: Vec<f64>,
    range: f64,
}

impl ImagePlane {
    /// Builds a plane, checking the sample count and that every sample is finite.
    pub fn new(width: usize, height: usize, data: Vec<f64>, range: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::shape(format!(
                "plane dimensions must be positive, got {width}x{height}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::shape(format!(
                "{} samples do not fill a {width}x{height} plane",
                data.len()
            )));
        }
        if !(range.is_finite() && range > 0.0) {
            return Err(Error::param(format!(
                "dynamic range must be positive, got {range}"
            )));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::Range {
                index: i,
                value: data[i],
                range,
            });
        }
        Ok(Self {
            width,
            height,
            data,
            range,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64, range: f64) -> Self {
        assert!(width > 0 && height > 0, "empty plane");
        Self {
            width,
            height,
            data: vec![value; width * height],
            range,
        }
    }

    /// Builds a plane by evaluating `f(x, y)` at every pixel.
    pub fn from_fn(
        width: usize,
        height: usize,
        range: f64,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        assert!(width > 0 && height > 0, "empty plane");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
            range,
        }
    }

    /// Internal constructor for planes derived from already-validated ones.
    pub(crate) fn from_parts(width: usize, height: usize, data: Vec<f64>, range: f64) -> Self {
        debug_assert_eq!(data.len(), width * height);
        Self {
            width,
            height,
            data,
            range,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Dynamic range `L`.
    pub fn range(&self) -> f64 {
        self.range
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn with_range(mut self, range: f64) -> Self {
        self.range = range;
        self
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn same_shape(&self, other: &ImagePlane) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_shape(&self, other: &ImagePlane, what: &str) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> ImagePlane {
        Self::from_parts(
            self.width,
            self.height,
            self.data.iter().map(|&v| f(v)).collect(),
            self.range,
        )
    }

    /// Pointwise combination of two planes of identical shape.
    ///
    /// Panics on a shape mismatch; callers validate shapes first.
    pub fn zip_map(&self, other: &ImagePlane, f: impl Fn(f64, f64) -> f64) -> ImagePlane {
        assert!(self.same_shape(other), "zip_map on mismatched planes");
        Self::from_parts(
            self.width,
            self.height,
            self.data
                .iter()
                .zip(&other.data)
                .map(|(&a, &b)| f(a, b))
                .collect(),
            self.range,
        )
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len() as f64
    }

    pub fn min(&self) -> f64 {
        self.data.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Copy rescaled so its minimum maps to 0 and its maximum to 1.
    /// A constant plane maps to all zeros.
    pub fn min_max_normalized(&self) -> ImagePlane {
        let (lo, hi) = (self.min(), self.max());
        let span = hi - lo;
        let out = if span > 0.0 {
            self.map(|v| (v - lo) / span)
        } else {
            self.map(|_| 0.0)
        };
        out.with_range(1.0)
    }

    pub fn clamped(&self) -> ImagePlane {
        let l = self.range;
        self.map(|v| v.clamp(0.0, l))
    }
}

/// An ordered set of planes sharing dimensions and dynamic range
/// (one plane for gray, three for RGB).
#[derive(Debug, Clone, PartialEq)]
pub struct MultiPlaneImage {
    planes: Vec<ImagePlane>,
}

impl MultiPlaneImage {
    pub fn new(planes: Vec<ImagePlane>) -> Result<Self> {
        let first = planes
            .first()
            .ok_or_else(|| Error::shape("an image needs at least one plane"))?;
        for p in &planes[1..] {
            first.check_shape(p, "planes of one image differ in size")?;
            if p.range() != first.range() {
                return Err(Error::shape("planes of one image differ in dynamic range"));
            }
        }
        Ok(Self { planes })
    }

    pub fn gray(plane: ImagePlane) -> Self {
        Self {
            planes: vec![plane],
        }
    }

    pub fn planes(&self) -> &[ImagePlane] {
        &self.planes
    }

    pub fn into_planes(self) -> Vec<ImagePlane> {
        self.planes
    }

    pub fn plane(&self, i: usize) -> &ImagePlane {
        &self.planes[i]
    }

    pub fn num_planes(&self) -> usize {
        self.planes.len()
    }

    pub fn width(&self) -> usize {
        self.planes[0].width()
    }

    pub fn height(&self) -> usize {
        self.planes[0].height()
    }

    pub fn range(&self) -> f64 {
        self.planes[0].range()
    }

    pub fn same_shape(&self, other: &MultiPlaneImage) -> bool {
        self.width() == other.width() && self.height() == other.height()
    }

    /// Applies `f` to every plane, keeping the plane order.
    pub fn try_map_planes(
        &self,
        mut f: impl FnMut(usize, &ImagePlane) -> Result<ImagePlane>,
    ) -> Result<MultiPlaneImage> {
        let planes = self
            .planes
            .iter()
            .enumerate()
            .map(|(i, p)| f(i, p))
            .collect::<Result<Vec<_>>>()?;
        MultiPlaneImage::new(planes)
    }
}

/// Brightness plane used as shared guidance: identity for gray images,
/// `0.299 R + 0.587 G + 0.114 B` for RGB.
pub fn to_luminance(img: &MultiPlaneImage) -> Result<ImagePlane> {
    match img.planes() {
        [gray] => Ok(gray.clone()),
        [r, g, b] => {
            let [wr, wg, wb] = LUMA_WEIGHTS;
            let data = r
                .data()
                .iter()
                .zip(g.data())
                .zip(b.data())
                .map(|((&r, &g), &b)| wr * r + wg * g + wb * b)
                .collect();
            Ok(ImagePlane::from_parts(
                r.width(),
                r.height(),
                data,
                r.range(),
            ))
        }
        other => Err(Error::shape(format!(
            "luminance needs 1 or 3 planes, got {}",
            other.len()
        ))),
    }
}

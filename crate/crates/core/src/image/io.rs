use std::io::{BufWriter, Write};
use std::path::Path;

use image::codecs::png::PngEncoder;
use image::{DynamicImage, ImageBuffer, ImageError, ImageReader, Luma, Rgb};

use super::{ImagePlane, MultiPlaneImage};
use crate::error::{Error, Result};

/// Sample depth of a written file.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BitDepth {
    #[default]
    Eight,
    Sixteen,
}

impl BitDepth {
    fn max_value(self) -> f64 {
        match self {
            BitDepth::Eight => 255.0,
            BitDepth::Sixteen => 65535.0,
        }
    }
}

fn map_image_error(path: &Path, e: ImageError) -> Error {
    match e {
        ImageError::IoError(io) => Error::io(path, io),
        other => Error::Format(format!("{}: {other}", path.display())),
    }
}

fn planes_from<T: Copy + Into<f64>>(
    raw: &[T],
    w: usize,
    h: usize,
    stride: usize,
    keep: usize,
    max: f64,
) -> Vec<ImagePlane> {
    (0..keep)
        .map(|c| {
            let data = raw
                .chunks_exact(stride)
                .map(|px| px[c].into() / max)
                .collect();
            ImagePlane::from_parts(w, h, data, 1.0)
        })
        .collect()
}

/// Reads a PNG or binary PGM/PPM file (8 or 16 bit) into planes in `[0, 1]`.
/// Alpha channels are dropped.
pub fn load_image(path: impl AsRef<Path>) -> Result<MultiPlaneImage> {
    let path = path.as_ref();
    let reader = ImageReader::open(path)
        .map_err(|e| Error::io(path, e))?
        .with_guessed_format()
        .map_err(|e| Error::io(path, e))?;
    let img = reader.decode().map_err(|e| map_image_error(path, e))?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    const B8: f64 = 255.0;
    const B16: f64 = 65535.0;
    let planes = match &img {
        DynamicImage::ImageLuma8(b) => planes_from(b.as_raw(), w, h, 1, 1, B8),
        DynamicImage::ImageLumaA8(b) => planes_from(b.as_raw(), w, h, 2, 1, B8),
        DynamicImage::ImageRgb8(b) => planes_from(b.as_raw(), w, h, 3, 3, B8),
        DynamicImage::ImageRgba8(b) => planes_from(b.as_raw(), w, h, 4, 3, B8),
        DynamicImage::ImageLuma16(b) => planes_from(b.as_raw(), w, h, 1, 1, B16),
        DynamicImage::ImageLumaA16(b) => planes_from(b.as_raw(), w, h, 2, 1, B16),
        DynamicImage::ImageRgb16(b) => planes_from(b.as_raw(), w, h, 3, 3, B16),
        DynamicImage::ImageRgba16(b) => planes_from(b.as_raw(), w, h, 4, 3, B16),
        other => {
            return Err(Error::Format(format!(
                "{}: unsupported sample layout {:?}",
                path.display(),
                other.color()
            )))
        }
    };
    MultiPlaneImage::new(planes)
}

/// Quantizes `v / L` to an integer sample, rounding half away from zero.
fn quantize(v: f64, range: f64, max: f64) -> f64 {
    (v / range * max).round()
}

/// Writes planes as PNG (`.png`) or binary PGM/PPM (`.pgm`, `.ppm`, `.pnm`).
///
/// Samples are scaled by 255 or 65535 relative to the dynamic range. With
/// `clamp` set, values outside `[0, L]` are clipped first; otherwise they are
/// reported as a range error. The file is written to a temporary sibling and
/// renamed into place.
pub fn save_image(
    img: &MultiPlaneImage,
    path: impl AsRef<Path>,
    clamp: bool,
    depth: BitDepth,
) -> Result<()> {
    let path = path.as_ref();
    let range = img.range();
    let max = depth.max_value();
    let n = img.num_planes();
    if n != 1 && n != 3 {
        return Err(Error::Format(format!(
            "cannot write an image with {n} planes"
        )));
    }

    let mut samples = Vec::with_capacity(img.width() * img.height() * n);
    for i in 0..img.width() * img.height() {
        for p in img.planes() {
            let mut v = p.data()[i];
            if clamp {
                v = v.clamp(0.0, range);
            } else if !(0.0..=range).contains(&v) {
                return Err(Error::Range {
                    index: i,
                    value: v,
                    range,
                });
            }
            samples.push(quantize(v, range, max));
        }
    }

    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase)
        .unwrap_or_default();
    let is_pnm = match ext.as_str() {
        "png" => false,
        "pgm" | "ppm" | "pnm" => true,
        _ => {
            return Err(Error::Format(format!(
                "{}: output extension must be png, pgm, ppm or pnm",
                path.display()
            )))
        }
    };

    let (w, h) = (img.width() as u32, img.height() as u32);
    let encoded_bytes = if is_pnm {
        encode_pnm(&samples, w, h, n, depth)
    } else {
        encode_png(path, &samples, w, h, n, depth)?
    };
    write_atomic(path, &encoded_bytes)
}

fn encode_png(
    path: &Path,
    samples: &[f64],
    w: u32,
    h: u32,
    planes: usize,
    depth: BitDepth,
) -> Result<Vec<u8>> {
    let dynamic = match (depth, planes) {
        (BitDepth::Eight, 1) => DynamicImage::ImageLuma8(
            ImageBuffer::<Luma<u8>, _>::from_raw(w, h, samples.iter().map(|&s| s as u8).collect())
                .expect("buffer size"),
        ),
        (BitDepth::Eight, _) => DynamicImage::ImageRgb8(
            ImageBuffer::<Rgb<u8>, _>::from_raw(w, h, samples.iter().map(|&s| s as u8).collect())
                .expect("buffer size"),
        ),
        (BitDepth::Sixteen, 1) => DynamicImage::ImageLuma16(
            ImageBuffer::<Luma<u16>, _>::from_raw(
                w,
                h,
                samples.iter().map(|&s| s as u16).collect(),
            )
            .expect("buffer size"),
        ),
        (BitDepth::Sixteen, _) => DynamicImage::ImageRgb16(
            ImageBuffer::<Rgb<u16>, _>::from_raw(w, h, samples.iter().map(|&s| s as u16).collect())
                .expect("buffer size"),
        ),
    };

    let mut buf = Vec::new();
    dynamic
        .write_with_encoder(PngEncoder::new(&mut buf))
        .map_err(|e| map_image_error(path, e))?;
    Ok(buf)
}

/// Binary PGM (`P5`) or PPM (`P6`); 16-bit samples are big-endian.
fn encode_pnm(samples: &[f64], w: u32, h: u32, planes: usize, depth: BitDepth) -> Vec<u8> {
    let magic = if planes == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{w} {h}\n{}\n", depth.max_value() as u32).into_bytes();
    for &s in samples {
        match depth {
            BitDepth::Eight => out.push(s as u8),
            BitDepth::Sixteen => out.extend_from_slice(&(s as u16).to_be_bytes()),
        }
    }
    out
}

/// Writes `bytes` to a temporary file next to `path`, then renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| Error::io(path, e))?;
    {
        let mut out = BufWriter::new(tmp.as_file());
        out.write_all(bytes).map_err(|e| Error::io(path, e))?;
        out.flush().map_err(|e| Error::io(path, e))?;
    }
    tmp.persist(path).map_err(|e| Error::io(path, e.error))?;
    Ok(())
}

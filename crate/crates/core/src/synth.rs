//! Seeded synthetic scenes for tests, benchmarks and the `synth` subcommand.
//!
//! Every generator is a pure function of its arguments; the same seed always
//! yields the same plane.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::image::ImagePlane;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent uniform samples in `[0, 1)`.
pub fn uniform_noise(width: usize, height: usize, seed: u64) -> ImagePlane {
    let mut r = rng(seed);
    ImagePlane::from_fn(width, height, 1.0, |_, _| r.random::<f64>())
}

/// Vertical step: `low` left of column `width / 2`, `high` from it on.
pub fn step_edge(width: usize, height: usize, low: f64, high: f64) -> ImagePlane {
    ImagePlane::from_fn(
        width,
        height,
        1.0,
        |x, _| if x < width / 2 { low } else { high },
    )
}

/// Clean piecewise-constant scene: a background level plus overlapping
/// axis-aligned rectangles and discs with levels in `[0.1, 0.9]`.
pub fn piecewise_constant(width: usize, height: usize, seed: u64) -> ImagePlane {
    let mut r = rng(seed);
    let mut img = ImagePlane::filled(width, height, r.random_range(0.1..0.9), 1.0);
    let shapes = 6 + (width * height) / 4096;
    for k in 0..shapes {
        let level = r.random_range(0.1..0.9);
        let cx = r.random_range(0.0..width as f64);
        let cy = r.random_range(0.0..height as f64);
        let extent = r.random_range(0.1..0.35) * width.min(height) as f64;
        if k % 2 == 0 {
            let hw = extent * r.random_range(0.5..1.5);
            let hh = extent * r.random_range(0.5..1.5);
            for y in 0..height {
                for x in 0..width {
                    if (x as f64 - cx).abs() <= hw && (y as f64 - cy).abs() <= hh {
                        img.set(x, y, level);
                    }
                }
            }
        } else {
            for y in 0..height {
                for x in 0..width {
                    let (dx, dy) = (x as f64 - cx, y as f64 - cy);
                    if dx * dx + dy * dy <= extent * extent {
                        img.set(x, y, level);
                    }
                }
            }
        }
    }
    img
}

/// `clean + N(0, sigma^2)` per pixel, not clamped.
pub fn add_gaussian_noise(clean: &ImagePlane, sigma: f64, seed: u64) -> ImagePlane {
    let mut r = rng(seed);
    let normal = Normal::new(0.0, sigma).expect("noise sigma must be finite and nonnegative");
    let data = clean
        .data()
        .iter()
        .map(|v| v + normal.sample(&mut r))
        .collect();
    ImagePlane::new(clean.width(), clean.height(), data, clean.range()).expect("finite noise")
}

/// `clean + N(0, sigma^2)` clamped to `[0, L]`.
pub fn noisy(clean: &ImagePlane, sigma: f64, seed: u64) -> ImagePlane {
    add_gaussian_noise(clean, sigma, seed).clamped()
}

/// Step edge between 0.25 and 0.75 with a small sinusoidal texture of
/// amplitude `texture` laid over both sides.
pub fn textured_step(width: usize, height: usize, texture: f64) -> ImagePlane {
    ImagePlane::from_fn(width, height, 1.0, |x, y| {
        let base = if x < width / 2 { 0.25 } else { 0.75 };
        let t = (x as f64 * 0.9).sin() * (y as f64 * 0.7).cos();
        base + texture * t
    })
}

/// Dark and bright renderings of one scene: `clean` scaled by exposures
/// `0.4` and `1.6`, clamped to `[0, 1]`.
pub fn bracketed_pair(clean: &ImagePlane) -> (ImagePlane, ImagePlane) {
    let dark = clean.map(|v| (0.4 * v).clamp(0.0, 1.0));
    let bright = clean.map(|v| (1.6 * v).clamp(0.0, 1.0));
    (dark, bright)
}

/// Named scenes of [`render`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scene {
    Piecewise,
    Step,
    TexturedStep,
    Noise,
}

impl FromStr for Scene {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "piecewise" => Ok(Scene::Piecewise),
            "step" => Ok(Scene::Step),
            "textured-step" => Ok(Scene::TexturedStep),
            "noise" => Ok(Scene::Noise),
            other => Err(Error::param(format!(
                "unknown scene {other:?}, expected piecewise, step, textured-step or noise"
            ))),
        }
    }
}

/// One scene with optional clamped Gaussian noise of standard deviation
/// `noise` (relative to `L = 1`). The noise stream is seeded with `seed + 1`.
pub fn render(
    scene: Scene,
    width: usize,
    height: usize,
    seed: u64,
    noise: f64,
) -> Result<ImagePlane> {
    if width == 0 || height == 0 {
        return Err(Error::param("scene dimensions must be positive"));
    }
    if !(noise.is_finite() && noise >= 0.0) {
        return Err(Error::param(format!(
            "noise must be nonnegative, got {noise}"
        )));
    }
    let clean = match scene {
        Scene::Piecewise => piecewise_constant(width, height, seed),
        Scene::Step => step_edge(width, height, 0.25, 0.75),
        Scene::TexturedStep => textured_step(width, height, 0.05),
        Scene::Noise => uniform_noise(width, height, seed),
    };
    Ok(if noise > 0.0 {
        noisy(&clean, noise, seed.wrapping_add(1))
    } else {
        clean
    })
}

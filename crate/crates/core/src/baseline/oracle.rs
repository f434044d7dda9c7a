//! Direct per-window reference implementations.
//!
//! Every statistic is recomputed from the window's pixels with a two-pass
//! mean and variance, and every edge-aware weighting is the literal average
//! over all pixels of the ratio `(v(p') + eps) / (v(p) + eps)`. Cost is
//! O(N r^2 + N^2); intended for small test images only.

use crate::baseline::BaselineParams;
use crate::epgif::{EpgifParams, RhoMode, WeightSign, MAX_EXPONENT};
use crate::error::{Error, Result};
use crate::image::ImagePlane;

/// Which filter the oracle evaluates, with its parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleVariant {
    Gif(BaselineParams),
    Wgif(BaselineParams),
    Ggif(BaselineParams),
    Epgif(EpgifParams),
}

impl OracleVariant {
    fn radius(&self) -> usize {
        match self {
            OracleVariant::Gif(p) | OracleVariant::Wgif(p) | OracleVariant::Ggif(p) => p.radius,
            OracleVariant::Epgif(p) => p.radius,
        }
    }
}

/// Per-window coefficients, weights, targets and the filtered output.
#[derive(Debug, Clone)]
pub struct OracleOutput {
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    /// Aggregation weights; all ones for the plain-mean variants.
    pub w: Vec<f64>,
    /// Slope targets; `gamma` for GGIF, `tau` for EPGIF, zero otherwise.
    pub target: Vec<f64>,
    pub output: ImagePlane,
}

struct Window {
    pixels: Vec<usize>,
}

fn window(w: usize, h: usize, x: usize, y: usize, r: usize) -> Window {
    let mut pixels = Vec::new();
    for yy in y.saturating_sub(r)..=(y + r).min(h - 1) {
        for xx in x.saturating_sub(r)..=(x + r).min(w - 1) {
            pixels.push(yy * w + xx);
        }
    }
    Window { pixels }
}

fn mean(win: &Window, d: &[f64]) -> f64 {
    win.pixels.iter().map(|&i| d[i]).sum::<f64>() / win.pixels.len() as f64
}

fn cov(win: &Window, a: &[f64], b: &[f64]) -> f64 {
    let (ma, mb) = (mean(win, a), mean(win, b));
    win.pixels
        .iter()
        .map(|&i| (a[i] - ma) * (b[i] - mb))
        .sum::<f64>()
        / win.pixels.len() as f64
}

fn variances(g: &ImagePlane, r: usize) -> Vec<f64> {
    let (w, h) = (g.width(), g.height());
    let mut out = Vec::with_capacity(g.len());
    for y in 0..h {
        for x in 0..w {
            let win = window(w, h, x, y, r);
            out.push(cov(&win, g.data(), g.data()));
        }
    }
    out
}

/// `(v(p') + eps) * (1/N) sum_p 1 / (v(p) + eps)` as a literal double loop.
pub fn weighting(v: &[f64], eps: f64) -> Vec<f64> {
    let n = v.len() as f64;
    v.iter()
        .map(|&vi| v.iter().map(|&vj| (vi + eps) / (vj + eps)).sum::<f64>() / n)
        .collect()
}

fn global_mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn global_min(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::INFINITY, f64::min)
}

/// Raw curve value, then the three-branch mapping onto `[0, 1]`.
fn tau_of(alpha: f64, mean: f64, min: f64, c: f64) -> f64 {
    let raw = 0.5 * (2.0 * (alpha - mean) / (mean - min)).tanh() + c;
    if raw <= 0.0 {
        0.0
    } else if raw >= c {
        (c + (1.0 - c) * (raw - c) / 0.5).min(1.0)
    } else {
        raw
    }
}

/// Reference output of `variant`.
pub fn oracle_filter(
    x: &ImagePlane,
    g: &ImagePlane,
    variant: &OracleVariant,
) -> Result<ImagePlane> {
    Ok(oracle_detailed(x, g, variant, None)?.output)
}

/// Reference run exposing every per-window quantity. For EPGIF,
/// `tau_override` replaces the guidance-derived `tau` with a constant.
pub fn oracle_detailed(
    x: &ImagePlane,
    g: &ImagePlane,
    variant: &OracleVariant,
    tau_override: Option<f64>,
) -> Result<OracleOutput> {
    if !x.same_shape(g) {
        return Err(Error::shape("oracle input and guidance differ in size"));
    }
    match variant {
        OracleVariant::Gif(p) | OracleVariant::Wgif(p) | OracleVariant::Ggif(p) => p.validate()?,
        OracleVariant::Epgif(p) => p.validate()?,
    }
    let (w, h) = (x.width(), x.height());
    let n = x.len();
    let r = variant.radius();
    let (xd, gd) = (x.data(), g.data());

    // per-pixel regularizer and slope target
    let (reg, target): (Vec<f64>, Vec<f64>) = match variant {
        OracleVariant::Gif(p) => (vec![p.lambda; n], vec![0.0; n]),
        OracleVariant::Wgif(p) => {
            let phi = weighting(&variances(g, 1), p.epsilon_for(g.range()));
            (phi.iter().map(|f| p.lambda / f).collect(), vec![0.0; n])
        }
        OracleVariant::Ggif(p) => {
            let s1 = variances(g, 1);
            let sz = variances(g, r);
            let chi: Vec<f64> = s1
                .iter()
                .zip(&sz)
                .map(|(a, b)| a.sqrt() * b.sqrt())
                .collect();
            let phi = weighting(&chi, p.epsilon_for(g.range()));
            let (m, lo) = (global_mean(&chi), global_min(&chi));
            let gamma = chi
                .iter()
                .map(|&c| {
                    if m - lo > 0.0 {
                        1.0 - 1.0 / (1.0 + (4.0 * (c - m) / (m - lo)).exp())
                    } else {
                        0.5
                    }
                })
                .collect();
            (phi.iter().map(|f| p.lambda / f).collect(), gamma)
        }
        OracleVariant::Epgif(p) => {
            let s1 = variances(g, 1);
            let sz = variances(g, r);
            let sbar1 = global_mean(&s1.iter().map(|v| v.sqrt()).collect::<Vec<_>>());
            let sbarz = global_mean(&sz.iter().map(|v| v.sqrt()).collect::<Vec<_>>());
            let phi: Vec<f64> = if sbar1 * sbarz > 0.0 {
                s1.iter()
                    .zip(&sz)
                    .map(|(a, b)| a * b / (sbar1 * sbarz))
                    .collect()
            } else {
                vec![0.0; n]
            };
            let psi = weighting(&phi, p.epsilon_for(g.range()));
            let alpha: Vec<f64> = match p.rho_mode {
                RhoMode::Unit => phi.clone(),
                RhoMode::LuminanceContrast => (0..n)
                    .map(|i| {
                        let win = window(w, h, i % w, i / w, r);
                        phi[i] * (gd[i] - mean(&win, gd)).abs() / g.range()
                    })
                    .collect(),
            };
            let tau = match tau_override {
                Some(t) => vec![t.clamp(0.0, 1.0); n],
                None => {
                    let (m, lo) = (global_mean(&alpha), global_min(&alpha));
                    if m - lo > 0.0 {
                        alpha.iter().map(|&a| tau_of(a, m, lo, p.c)).collect()
                    } else {
                        vec![0.0; n]
                    }
                }
            };
            (psi.iter().map(|f| p.lambda / f).collect(), tau)
        }
    };
    let mut a = vec![0.0; n];
    let mut b = vec![0.0; n];
    let mut wts = vec![1.0; n];
    for y in 0..h {
        for xx in 0..w {
            let i = y * w + xx;
            let win = window(w, h, xx, y, r);
            let (mx, mg) = (mean(&win, xd), mean(&win, gd));
            let var_g = cov(&win, gd, gd);
            let c = cov(&win, gd, xd);
            if let OracleVariant::Epgif(p) = variant {
                let eta = 1.0 - target[i];
                a[i] = (eta * c + reg[i] * target[i]) / (eta * var_g + reg[i]);
                b[i] = mx - a[i] * mg;
                // explicit windowed residual of the fitted model
                let mse = win
                    .pixels
                    .iter()
                    .map(|&j| {
                        let e = a[i] * gd[j] + b[i] - xd[j];
                        e * e
                    })
                    .sum::<f64>()
                    / win.pixels.len() as f64;
                wts[i] = (eta * eta * mse / p.beta).clamp(0.0, MAX_EXPONENT);
            } else {
                a[i] = (c + reg[i] * target[i]) / (var_g + reg[i]);
                b[i] = mx - a[i] * mg;
            }
        }
    }
    if let OracleVariant::Epgif(p) = variant {
        let top = global_max(&wts);
        for m in wts.iter_mut() {
            *m = match p.weight_sign {
                WeightSign::Decaying => (-*m).exp(),
                WeightSign::Growing => (*m - top).exp(),
            };
        }
    }

    let mut out = Vec::with_capacity(n);
    for y in 0..h {
        for xx in 0..w {
            let win = window(w, h, xx, y, r);
            let sw: f64 = win.pixels.iter().map(|&j| wts[j]).sum();
            let sa: f64 = win.pixels.iter().map(|&j| wts[j] * a[j]).sum();
            let sb: f64 = win.pixels.iter().map(|&j| wts[j] * b[j]).sum();
            out.push(sa / sw * gd[y * w + xx] + sb / sw);
        }
    }
    Ok(OracleOutput {
        a,
        b,
        w: wts,
        target,
        output: ImagePlane::new(w, h, out, x.range())?,
    })
}

fn global_max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

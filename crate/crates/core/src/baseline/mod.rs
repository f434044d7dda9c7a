//! The guided filter and two of its edge-aware descendants.
//!
//! * GIF: fixed regularizer `lambda` on the slope of the local linear model.
//! * WGIF: `lambda` divided by an edge-aware weighting built from 3x3 variances.
//! * GGIF: a two-scale weighting plus a sigmoid edge target `gamma` for the slope.
//!
//! All three aggregate the overlapping-window coefficients with a plain box
//! mean. [`oracle`] recomputes every variant with explicit per-window loops.

pub mod oracle;

use crate::error::{Error, Result};
use crate::image::{box_mean, local_stddev, local_variance, window_stats, ImagePlane, WindowStats};

/// `(0.001 L)^2`, the default stabilizer of the edge-aware weightings.
pub fn default_epsilon(range: f64) -> f64 {
    let e = 0.001 * range;
    e * e
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BaselineParams {
    pub radius: usize,
    pub lambda: f64,
    /// `None` selects [`default_epsilon`] of the guidance range.
    pub epsilon: Option<f64>,
}

impl BaselineParams {
    pub fn new(radius: usize, lambda: f64) -> Self {
        Self {
            radius,
            lambda,
            epsilon: None,
        }
    }

    pub fn with_epsilon(mut self, epsilon: f64) -> Self {
        self.epsilon = Some(epsilon);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius < 1 {
            return Err(Error::param("radius must be at least 1"));
        }
        check_lambda(self.lambda)?;
        check_epsilon(self.epsilon)
    }

    pub fn epsilon_for(&self, range: f64) -> f64 {
        self.epsilon.unwrap_or_else(|| default_epsilon(range))
    }
}

pub(crate) fn check_lambda(lambda: f64) -> Result<()> {
    if lambda.is_finite() && lambda > 0.0 {
        Ok(())
    } else {
        Err(Error::param(format!(
            "lambda must be positive, got {lambda}"
        )))
    }
}

pub(crate) fn check_epsilon(eps: Option<f64>) -> Result<()> {
    match eps {
        Some(e) if !(e.is_finite() && e > 0.0) => {
            Err(Error::param(format!("epsilon must be positive, got {e}")))
        }
        _ => Ok(()),
    }
}

/// Linear-model coefficients indexed by window center.
#[derive(Debug, Clone)]
pub struct CoefficientField {
    pub a: ImagePlane,
    pub b: ImagePlane,
}

/// `(v(p') + eps) * mean_p 1 / (v(p) + eps)`: the shared form of the
/// WGIF, GGIF and EPGIF edge-aware weightings.
pub(crate) fn relative_weighting(v: &ImagePlane, eps: f64) -> ImagePlane {
    let inv_mean = v.data().iter().map(|s| 1.0 / (s + eps)).sum::<f64>() / v.len() as f64;
    v.map(|s| (s + eps) * inv_mean)
}

/// Plain-mean aggregation followed by `R = a_bar G + b_bar`.
pub(crate) fn mean_aggregate(
    coeffs: &CoefficientField,
    g: &ImagePlane,
    radius: usize,
) -> ImagePlane {
    let a_bar = box_mean(&coeffs.a, radius);
    let b_bar = box_mean(&coeffs.b, radius);
    let mut out = a_bar.zip_map(g, |a, gv| a * gv);
    for (o, b) in out.data_mut().iter_mut().zip(b_bar.data()) {
        *o += b;
    }
    out.with_range(g.range())
}

/// Slopes `a = (cov + reg * target) / (var_G + reg)` and intercepts
/// `b = mu_X - a mu_G`, with a per-pixel regularizer and slope target.
fn regularized_coefficients(
    stats: &WindowStats,
    reg: impl Fn(usize) -> f64,
    target: impl Fn(usize) -> f64,
) -> CoefficientField {
    let n = stats.mean_x.len();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        let r = reg(i);
        let ai = (stats.cov_gx.data()[i] + r * target(i)) / (stats.var_g.data()[i] + r);
        a.push(ai);
        b.push(stats.mean_x.data()[i] - ai * stats.mean_g.data()[i]);
    }
    let (w, h) = (stats.mean_x.width(), stats.mean_x.height());
    let range = stats.mean_x.range();
    CoefficientField {
        a: ImagePlane::from_parts(w, h, a, range),
        b: ImagePlane::from_parts(w, h, b, range),
    }
}

pub fn gif_coefficients(stats: &WindowStats, lambda: f64) -> CoefficientField {
    regularized_coefficients(stats, |_| lambda, |_| 0.0)
}

/// Classic guided filter.
pub fn gif_filter(x: &ImagePlane, g: &ImagePlane, params: &BaselineParams) -> Result<ImagePlane> {
    params.validate()?;
    let stats = window_stats(x, g, params.radius)?;
    let coeffs = gif_coefficients(&stats, params.lambda);
    Ok(mean_aggregate(&coeffs, g, params.radius))
}

/// WGIF edge-aware weighting from 3x3 local variances.
pub fn wgif_weighting(g: &ImagePlane, epsilon: f64) -> ImagePlane {
    relative_weighting(&local_variance(g, 1), epsilon)
}

pub fn wgif_coefficients(stats: &WindowStats, phi: &ImagePlane, lambda: f64) -> CoefficientField {
    regularized_coefficients(stats, |i| lambda / phi.data()[i], |_| 0.0)
}

/// Weighted guided filter: `lambda` replaced by `lambda / Phi_G` per pixel.
pub fn wgif_filter(x: &ImagePlane, g: &ImagePlane, params: &BaselineParams) -> Result<ImagePlane> {
    params.validate()?;
    let stats = window_stats(x, g, params.radius)?;
    let phi = wgif_weighting(g, params.epsilon_for(g.range()));
    let coeffs = wgif_coefficients(&stats, &phi, params.lambda);
    Ok(mean_aggregate(&coeffs, g, params.radius))
}

/// Two-scale edge indicator `chi = sigma_{G,1} * sigma_{G,radius}`.
pub fn ggif_chi(g: &ImagePlane, radius: usize) -> ImagePlane {
    local_stddev(g, 1).zip_map(&local_stddev(g, radius), |a, b| a * b)
}

/// GGIF multi-scale edge-aware weighting.
pub fn ggif_weighting(g: &ImagePlane, radius: usize, epsilon: f64) -> ImagePlane {
    relative_weighting(&ggif_chi(g, radius), epsilon)
}

/// Sigmoid slope target of GGIF:
/// `1 - 1 / (1 + exp(4 (chi - mean) / (mean - min)))`.
///
/// A constant `chi` has no scale; every pixel then gets the sigmoid's
/// center value 1/2.
pub fn ggif_gamma(chi: &ImagePlane) -> ImagePlane {
    let mean = chi.mean();
    let min = chi.min();
    let scale = mean - min;
    if scale.is_nan() || scale <= 0.0 {
        return chi.map(|_| 0.5);
    }
    chi.map(|v| 1.0 - 1.0 / (1.0 + (4.0 * (v - mean) / scale).exp()))
}

pub fn ggif_coefficients(
    stats: &WindowStats,
    phi_hat: &ImagePlane,
    gamma: &ImagePlane,
    lambda: f64,
) -> CoefficientField {
    regularized_coefficients(stats, |i| lambda / phi_hat.data()[i], |i| gamma.data()[i])
}

/// Gradient-domain guided filter.
pub fn ggif_filter(x: &ImagePlane, g: &ImagePlane, params: &BaselineParams) -> Result<ImagePlane> {
    params.validate()?;
    let stats = window_stats(x, g, params.radius)?;
    let chi = ggif_chi(g, params.radius);
    let phi_hat = relative_weighting(&chi, params.epsilon_for(g.range()));
    let gamma = ggif_gamma(&chi);
    let coeffs = ggif_coefficients(&stats, &phi_hat, &gamma, params.lambda);
    Ok(mean_aggregate(&coeffs, g, params.radius))
}

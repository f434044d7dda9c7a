//! Enhanced edge-perceptual guided image filter.
//!
//! Compared with the guided filter, each window's slope `a` is pulled toward
//! an edge-protect target `tau` (1 on edges, 0 in flat areas), the data term
//! is scaled by `eta = 1 - tau`, the regularizer is divided by a two-scale
//! edge-aware weighting `Psi`, and the overlapping windows are aggregated with
//! weights that decay with each window's constrained fitting residual.
//!
//! The stages run in a fixed order, each O(N):
//!
//! 1. windowed means and second moments of `X` and `G`
//! 2. variances and covariance
//! 3. `Psi` and `tau`
//! 4. coefficients `a`, `b`
//! 5. residual weights `W`
//! 6. box sums of `W`, `W a`, `W b`
//! 7. `R = (sum(W a) G + sum(W b)) / sum(W)`

use crate::baseline::{
    check_epsilon, check_lambda, default_epsilon, relative_weighting, CoefficientField,
};
use crate::error::{Error, Result};
use crate::image::{
    box_mean, local_stddev, local_variance, window_stats, window_sums, ImagePlane, WindowStats,
};

/// Upper clamp of the residual exponent so that `exp` stays finite.
pub const MAX_EXPONENT: f64 = 700.0;

/// Brightness factor `rho` multiplying `phi` before the `tau` curve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum RhoMode {
    /// `rho = 1`.
    #[default]
    Unit,
    /// `rho = |G - mu_G| / L` at the filter radius.
    LuminanceContrast,
}

/// Direction of the residual aggregation weight.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightSign {
    /// `W = exp(-M)`: windows whose constrained fit has a small residual dominate.
    #[default]
    Decaying,
    /// `W = exp(+M)`, normalized by the largest weight. For comparison only.
    Growing,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpgifParams {
    pub radius: usize,
    pub lambda: f64,
    /// Offset of the `tau` curve, in `(0, 0.5)`.
    pub c: f64,
    /// Residual weight temperature.
    pub beta: f64,
    /// `None` selects `(0.001 L)^2` of the guidance range.
    pub epsilon: Option<f64>,
    pub rho_mode: RhoMode,
    pub weight_sign: WeightSign,
}

impl Default for EpgifParams {
    fn default() -> Self {
        Self {
            radius: 16,
            lambda: 0.01,
            c: 0.35,
            beta: 1.0 / 500.0,
            epsilon: None,
            rho_mode: RhoMode::Unit,
            weight_sign: WeightSign::Decaying,
        }
    }
}

impl EpgifParams {
    pub fn new(radius: usize, lambda: f64) -> Self {
        Self {
            radius,
            lambda,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.radius < 1 {
            return Err(Error::param("radius must be at least 1"));
        }
        check_lambda(self.lambda)?;
        if !(self.c > 0.0 && self.c < 0.5) {
            return Err(Error::param(format!(
                "c must lie in (0, 0.5), got {}",
                self.c
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::param(format!(
                "beta must be positive, got {}",
                self.beta
            )));
        }
        check_epsilon(self.epsilon)
    }

    pub fn epsilon_for(&self, range: f64) -> f64 {
        self.epsilon.unwrap_or_else(|| default_epsilon(range))
    }
}

/// Local variances at radius 1 and at the filter radius, their image-wide
/// mean standard deviations, and `phi = s1^2 sz^2 / (sbar_1 sbar_z)`.
#[derive(Debug, Clone)]
pub struct MultiScaleVariance {
    pub radius: usize,
    pub sigma2_1: ImagePlane,
    pub sigma2_zeta: ImagePlane,
    pub sbar_1: f64,
    pub sbar_zeta: f64,
    pub phi: ImagePlane,
}

/// Two-scale variance product normalized by the mean standard deviations.
/// A constant guidance (zero mean deviation) yields `phi = 0`.
pub fn compute_phi(g: &ImagePlane, radius: usize) -> MultiScaleVariance {
    let sigma2_1 = local_variance(g, 1);
    let sigma2_zeta = local_variance(g, radius);
    let sbar_1 = local_stddev(g, 1).mean();
    let sbar_zeta = local_stddev(g, radius).mean();
    let denom = sbar_1 * sbar_zeta;
    let phi = if denom > 0.0 {
        sigma2_1.zip_map(&sigma2_zeta, |a, b| a * b / denom)
    } else {
        g.map(|_| 0.0)
    };
    MultiScaleVariance {
        radius,
        sigma2_1,
        sigma2_zeta,
        sbar_1,
        sbar_zeta,
        phi,
    }
}

/// `phi` together with the edge-aware weighting `Psi`.
#[derive(Debug, Clone)]
pub struct EdgeWeightField {
    pub variance: MultiScaleVariance,
    pub psi: ImagePlane,
}

impl EdgeWeightField {
    pub fn phi(&self) -> &ImagePlane {
        &self.variance.phi
    }
}

/// `Psi(p') = (phi(p') + eps) * mean_p 1 / (phi(p) + eps)`.
pub fn compute_psi(g: &ImagePlane, radius: usize, epsilon: f64) -> EdgeWeightField {
    let variance = compute_phi(g, radius);
    let psi = relative_weighting(&variance.phi, epsilon);
    EdgeWeightField { variance, psi }
}

/// Edge-protect target `tau` and residual constraint `eta = 1 - tau`.
#[derive(Debug, Clone)]
pub struct ConstraintField {
    pub alpha: ImagePlane,
    pub tau: ImagePlane,
    pub eta: ImagePlane,
}

impl ConstraintField {
    /// A field with the same `tau` everywhere (alpha left at zero).
    pub fn uniform(width: usize, height: usize, tau: f64) -> Self {
        let tau = tau.clamp(0.0, 1.0);
        Self {
            alpha: ImagePlane::filled(width, height, 0.0, 1.0),
            tau: ImagePlane::filled(width, height, tau, 1.0),
            eta: ImagePlane::filled(width, height, 1.0 - tau, 1.0),
        }
    }

    pub fn from_tau(tau: ImagePlane) -> Self {
        let tau = tau.map(|t| t.clamp(0.0, 1.0)).with_range(1.0);
        Self {
            alpha: tau.map(|_| 0.0),
            eta: tau.map(|t| 1.0 - t),
            tau,
        }
    }
}

/// The piecewise tanh curve mapping one `alpha` value to `tau`.
///
/// `raw = 0.5 tanh(2 (alpha - mean) / (mean - min)) + c`, then values at or
/// below 0 become 0, values at or above `c` are stretched linearly so that
/// `c + 0.5` lands on 1, and values in between are kept.
pub fn edge_protect(alpha: f64, mean: f64, min: f64, c: f64) -> f64 {
    let t = (2.0 * (alpha - mean) / (mean - min)).tanh();
    if t >= 0.0 {
        // raw - c = 0.5 t, so the stretched branch is c + (1 - c) t
        (c + (1.0 - c) * t).min(1.0)
    } else {
        let raw = 0.5 * t + c;
        if raw <= 0.0 {
            0.0
        } else {
            raw
        }
    }
}

/// `tau` and `eta` from `alpha = phi * rho`.
///
/// A constant `alpha` has no scale for the curve; such an image has no edges
/// to protect and gets `tau = 0`, `eta = 1`.
pub fn compute_tau(
    g: &ImagePlane,
    field: &EdgeWeightField,
    c: f64,
    rho_mode: RhoMode,
) -> Result<ConstraintField> {
    if !(c > 0.0 && c < 0.5) {
        return Err(Error::param(format!("c must lie in (0, 0.5), got {c}")));
    }
    let phi = field.phi();
    phi.check_shape(g, "guidance and edge weighting")?;
    let alpha = match rho_mode {
        RhoMode::Unit => phi.clone(),
        RhoMode::LuminanceContrast => {
            let mu = box_mean(g, field.variance.radius);
            let l = g.range();
            let mut a = phi.clone();
            for ((v, &gv), &m) in a.data_mut().iter_mut().zip(g.data()).zip(mu.data()) {
                *v *= (gv - m).abs() / l;
            }
            a
        }
    };
    let mean = alpha.mean();
    let min = alpha.min();
    let tau = if mean - min > 0.0 {
        alpha.map(|a| edge_protect(a, mean, min, c))
    } else {
        alpha.map(|_| 0.0)
    }
    .with_range(1.0);
    let eta = tau.map(|t| 1.0 - t);
    Ok(ConstraintField { alpha, tau, eta })
}

/// `a = (eta cov + (lambda/Psi) tau) / (eta var_G + lambda/Psi)`, `b = mu_X - a mu_G`.
pub fn epgif_coeffs(
    stats: &WindowStats,
    cons: &ConstraintField,
    psi: &ImagePlane,
    lambda: f64,
) -> Result<CoefficientField> {
    check_lambda(lambda)?;
    stats
        .mean_x
        .check_shape(&cons.tau, "statistics and constraint field")?;
    stats
        .mean_x
        .check_shape(psi, "statistics and edge weighting")?;
    let n = stats.mean_x.len();
    let mut a = Vec::with_capacity(n);
    let mut b = Vec::with_capacity(n);
    for i in 0..n {
        let reg = lambda / psi.data()[i];
        let eta = cons.eta.data()[i];
        let ai = (eta * stats.cov_gx.data()[i] + reg * cons.tau.data()[i])
            / (eta * stats.var_g.data()[i] + reg);
        a.push(ai);
        b.push(stats.mean_x.data()[i] - ai * stats.mean_g.data()[i]);
    }
    let (w, h) = (stats.mean_x.width(), stats.mean_x.height());
    let range = stats.mean_x.range();
    Ok(CoefficientField {
        a: ImagePlane::from_parts(w, h, a, range),
        b: ImagePlane::from_parts(w, h, b, range),
    })
}

/// Closed-form residual exponent of one window (before clamping):
/// `[eta^2 (var_X - a^2 var_G) - 2 a (a - tau) (lambda/Psi) eta] / beta`.
///
/// For `a` from [`epgif_coeffs`] this equals `eta^2` times the window's mean
/// squared residual of `a G + b - X`, divided by `beta`.
#[allow(clippy::too_many_arguments)]
pub fn residual_exponent(
    var_x: f64,
    var_g: f64,
    a: f64,
    tau: f64,
    eta: f64,
    reg: f64,
    beta: f64,
) -> f64 {
    (eta * eta * (var_x - a * a * var_g) - 2.0 * a * (a - tau) * reg * eta) / beta
}

/// Self-guided form of [`residual_exponent`] (`X = G`).
pub fn residual_exponent_self_guided(
    var_g: f64,
    a: f64,
    tau: f64,
    eta: f64,
    reg: f64,
    beta: f64,
) -> f64 {
    (eta * eta * ((1.0 - a * a) * var_g) - 2.0 * a * (a - tau) * reg * eta) / beta
}

/// Aggregation weight of every window.
#[allow(clippy::too_many_arguments)]
pub fn residual_weight(
    coeffs: &CoefficientField,
    cons: &ConstraintField,
    stats: &WindowStats,
    psi: &ImagePlane,
    lambda: f64,
    beta: f64,
    sign: WeightSign,
) -> Result<ImagePlane> {
    if !(beta.is_finite() && beta > 0.0) {
        return Err(Error::param(format!("beta must be positive, got {beta}")));
    }
    let exponents = coeffs.a.map(|_| 0.0);
    let mut m = exponents;
    for (i, v) in m.data_mut().iter_mut().enumerate() {
        let e = residual_exponent(
            stats.var_x.data()[i],
            stats.var_g.data()[i],
            coeffs.a.data()[i],
            cons.tau.data()[i],
            cons.eta.data()[i],
            lambda / psi.data()[i],
            beta,
        );
        *v = e.clamp(0.0, MAX_EXPONENT);
    }
    Ok(match sign {
        WeightSign::Decaying => m.map(|e| (-e).exp()),
        WeightSign::Growing => {
            let top = m.max();
            m.map(|e| (e - top).exp())
        }
    }
    .with_range(1.0))
}

/// Weighted means of the coefficients over each pixel's window.
#[derive(Debug, Clone)]
pub struct AggregatedCoefficients {
    pub a_bar: ImagePlane,
    pub b_bar: ImagePlane,
}

/// `a_bar = sum(W a) / sum(W)`, `b_bar = sum(W b) / sum(W)` over the
/// truncated window; the weights must be positive.
pub fn weighted_aggregate(
    coeffs: &CoefficientField,
    w: &ImagePlane,
    radius: usize,
) -> Result<AggregatedCoefficients> {
    coeffs.a.check_shape(w, "coefficients and weights")?;
    if let Some(v) = w.data().iter().find(|&&v| v.is_nan() || v <= 0.0) {
        return Err(Error::param(format!(
            "aggregation weights must be positive, found {v}"
        )));
    }
    let (width, height) = (w.width(), w.height());
    let wa: Vec<f64> = w
        .data()
        .iter()
        .zip(coeffs.a.data())
        .map(|(w, a)| w * a)
        .collect();
    let wb: Vec<f64> = w
        .data()
        .iter()
        .zip(coeffs.b.data())
        .map(|(w, b)| w * b)
        .collect();
    let w_sum = window_sums(w.data(), width, height, radius);
    let a_sum = window_sums(&wa, width, height, radius);
    let b_sum = window_sums(&wb, width, height, radius);
    let div = |num: Vec<f64>, range: f64| {
        let d = num.iter().zip(&w_sum).map(|(n, s)| n / s).collect();
        ImagePlane::from_parts(width, height, d, range)
    };
    Ok(AggregatedCoefficients {
        a_bar: div(a_sum, coeffs.a.range()),
        b_bar: div(b_sum, coeffs.b.range()),
    })
}

/// Every intermediate field of one filter run.
#[derive(Debug, Clone)]
pub struct EpgifFields {
    pub stats: WindowStats,
    pub edge: EdgeWeightField,
    pub constraint: ConstraintField,
    pub coeffs: CoefficientField,
    pub w: ImagePlane,
    pub aggregated: AggregatedCoefficients,
    pub output: ImagePlane,
}

/// Runs the filter with a caller-supplied constraint field instead of the
/// one derived from the guidance.
pub fn epgif_with_constraint(
    x: &ImagePlane,
    g: &ImagePlane,
    params: &EpgifParams,
    constraint: ConstraintField,
) -> Result<EpgifFields> {
    params.validate()?;
    let stats = window_stats(x, g, params.radius)?;
    let edge = compute_psi(g, params.radius, params.epsilon_for(g.range()));
    run_stages(g, params, stats, edge, constraint)
}

fn run_stages(
    g: &ImagePlane,
    params: &EpgifParams,
    stats: WindowStats,
    edge: EdgeWeightField,
    constraint: ConstraintField,
) -> Result<EpgifFields> {
    let coeffs = epgif_coeffs(&stats, &constraint, &edge.psi, params.lambda)?;
    let w = residual_weight(
        &coeffs,
        &constraint,
        &stats,
        &edge.psi,
        params.lambda,
        params.beta,
        params.weight_sign,
    )?;
    let aggregated = weighted_aggregate(&coeffs, &w, params.radius)?;
    let mut output = aggregated.a_bar.zip_map(g, |a, gv| a * gv);
    for (o, b) in output.data_mut().iter_mut().zip(aggregated.b_bar.data()) {
        *o += b;
    }
    let output = output.with_range(stats.mean_x.range());
    Ok(EpgifFields {
        stats,
        edge,
        constraint,
        coeffs,
        w,
        aggregated,
        output,
    })
}

/// Full filter run keeping every intermediate field.
pub fn epgif_fields(x: &ImagePlane, g: &ImagePlane, params: &EpgifParams) -> Result<EpgifFields> {
    params.validate()?;
    let stats = window_stats(x, g, params.radius)?;
    let edge = compute_psi(g, params.radius, params.epsilon_for(g.range()));
    let constraint = compute_tau(g, &edge, params.c, params.rho_mode)?;
    run_stages(g, params, stats, edge, constraint)
}

/// Filters `x` under guidance `g`.
pub fn epgif_filter(x: &ImagePlane, g: &ImagePlane, params: &EpgifParams) -> Result<ImagePlane> {
    Ok(epgif_fields(x, g, params)?.output)
}

/// Intermediate fields for inspection.
#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub psi: ImagePlane,
    pub tau: ImagePlane,
    pub eta: ImagePlane,
    pub w: ImagePlane,
    pub a_bar: ImagePlane,
}

impl Diagnostics {
    pub fn named(&self) -> [(&'static str, &ImagePlane); 5] {
        [
            ("psi", &self.psi),
            ("tau", &self.tau),
            ("eta", &self.eta),
            ("w", &self.w),
            ("a_bar", &self.a_bar),
        ]
    }

    /// Min-max normalized copies for display.
    pub fn normalized(&self) -> Diagnostics {
        Diagnostics {
            psi: self.psi.min_max_normalized(),
            tau: self.tau.min_max_normalized(),
            eta: self.eta.min_max_normalized(),
            w: self.w.min_max_normalized(),
            a_bar: self.a_bar.min_max_normalized(),
        }
    }
}

pub fn dump_diagnostics(
    g: &ImagePlane,
    x: &ImagePlane,
    params: &EpgifParams,
) -> Result<Diagnostics> {
    let f = epgif_fields(x, g, params)?;
    Ok(Diagnostics {
        psi: f.edge.psi,
        tau: f.constraint.tau,
        eta: f.constraint.eta,
        w: f.w,
        a_bar: f.aggregated.a_bar,
    })
}

//! Python bindings: image planes, the four filters, diagnostics, metrics and
//! the detail-enhancement and exposure-fusion pipelines.
//!
//! Planes cross the boundary as row-major lists of floats.

use std::collections::HashMap;

use epgif::pipelines::{self, ExposureSequence};
use epgif::{
    EpgifParams as CoreParams, FilterConfig, FilterKind, MultiPlaneImage, RhoMode, WeightSign,
};
use pyo3::exceptions::{PyOSError, PyValueError};
use pyo3::prelude::*;

fn to_py(e: epgif::Error) -> PyErr {
    match e {
        epgif::Error::Io { .. } => PyOSError::new_err(e.to_string()),
        _ => PyValueError::new_err(e.to_string()),
    }
}

/// A single-channel image with dynamic range `range`.
#[pyclass(name = "ImagePlane", module = "pyepgif", from_py_object)]
#[derive(Clone)]
pub struct PyImagePlane {
    inner: epgif::ImagePlane,
}

impl From<epgif::ImagePlane> for PyImagePlane {
    fn from(inner: epgif::ImagePlane) -> Self {
        Self { inner }
    }
}

#[pymethods]
impl PyImagePlane {
    #[new]
    #[pyo3(signature = (width, height, data, range = 1.0))]
    fn new(width: usize, height: usize, data: Vec<f64>, range: f64) -> PyResult<Self> {
        Ok(epgif::ImagePlane::new(width, height, data, range)
            .map_err(to_py)?
            .into())
    }

    #[staticmethod]
    #[pyo3(signature = (width, height, value, range = 1.0))]
    fn filled(width: usize, height: usize, value: f64, range: f64) -> Self {
        epgif::ImagePlane::filled(width, height, value, range).into()
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    #[getter]
    fn range(&self) -> f64 {
        self.inner.range()
    }

    /// Row-major samples.
    fn data(&self) -> Vec<f64> {
        self.inner.data().to_vec()
    }

    fn get(&self, x: usize, y: usize) -> PyResult<f64> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err(format!(
                "({x}, {y}) is outside the plane"
            )));
        }
        Ok(self.inner.get(x, y))
    }

    fn mean(&self) -> f64 {
        self.inner.mean()
    }

    fn min(&self) -> f64 {
        self.inner.min()
    }

    fn max(&self) -> f64 {
        self.inner.max()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn __eq__(&self, other: &Self) -> bool {
        self.inner == other.inner
    }

    fn __repr__(&self) -> String {
        format!(
            "ImagePlane(width={}, height={}, range={})",
            self.inner.width(),
            self.inner.height(),
            self.inner.range()
        )
    }
}

/// Filter parameters; defaults are radius 16, lambda 0.01, c 0.35, beta 1/500.
#[pyclass(name = "EpgifParams", module = "pyepgif", skip_from_py_object)]
#[derive(Clone)]
pub struct PyEpgifParams {
    #[pyo3(get, set)]
    radius: usize,
    #[pyo3(get, set)]
    lambda_: f64,
    #[pyo3(get, set)]
    c: f64,
    #[pyo3(get, set)]
    beta: f64,
    #[pyo3(get, set)]
    epsilon: Option<f64>,
    /// `"unit"` or `"luminance-contrast"`.
    #[pyo3(get, set)]
    rho_mode: String,
    /// Aggregate with `exp(+M)` instead of `exp(-M)`.
    #[pyo3(get, set)]
    growing_weights: bool,
}

impl PyEpgifParams {
    fn core(&self) -> PyResult<CoreParams> {
        let rho_mode = match self.rho_mode.as_str() {
            "unit" => RhoMode::Unit,
            "luminance-contrast" => RhoMode::LuminanceContrast,
            other => return Err(PyValueError::new_err(format!("unknown rho mode {other:?}"))),
        };
        let p = CoreParams {
            radius: self.radius,
            lambda: self.lambda_,
            c: self.c,
            beta: self.beta,
            epsilon: self.epsilon,
            rho_mode,
            weight_sign: if self.growing_weights {
                WeightSign::Growing
            } else {
                WeightSign::Decaying
            },
        };
        p.validate().map_err(to_py)?;
        Ok(p)
    }
}

#[pymethods]
impl PyEpgifParams {
    #[new]
    #[pyo3(signature = (radius = 16, lambda_ = 0.01, c = 0.35, beta = 1.0 / 500.0, epsilon = None, rho_mode = "unit".to_string(), growing_weights = false))]
    fn new(
        radius: usize,
        lambda_: f64,
        c: f64,
        beta: f64,
        epsilon: Option<f64>,
        rho_mode: String,
        growing_weights: bool,
    ) -> PyResult<Self> {
        let p = Self {
            radius,
            lambda_,
            c,
            beta,
            epsilon,
            rho_mode,
            growing_weights,
        };
        p.core()?;
        Ok(p)
    }

    fn __repr__(&self) -> String {
        format!(
            "EpgifParams(radius={}, lambda_={}, c={}, beta={}, epsilon={:?}, rho_mode={:?}, growing_weights={})",
            self.radius, self.lambda_, self.c, self.beta, self.epsilon, self.rho_mode, self.growing_weights
        )
    }
}

fn params_or_default(params: Option<&PyEpgifParams>) -> PyResult<CoreParams> {
    params.map_or(Ok(CoreParams::default()), PyEpgifParams::core)
}

/// Filters `x` with `filter` ("gif", "wgif", "ggif" or "epgif") under
/// `guide`, which defaults to `x` itself.
#[pyfunction]
#[pyo3(signature = (x, guide = None, filter = "epgif", params = None))]
fn smooth(
    x: &PyImagePlane,
    guide: Option<&PyImagePlane>,
    filter: &str,
    params: Option<&PyEpgifParams>,
) -> PyResult<PyImagePlane> {
    let kind: FilterKind = filter.parse().map_err(to_py)?;
    let cfg = FilterConfig::new(kind, params_or_default(params)?);
    let g = guide.map_or(&x.inner, |g| &g.inner);
    Ok(cfg.apply(&x.inner, g).map_err(to_py)?.into())
}

/// Raw intermediate fields of one EPGIF run: psi, tau, eta, w and a_bar.
#[pyfunction]
#[pyo3(signature = (guide, x = None, params = None))]
fn diagnostics(
    guide: &PyImagePlane,
    x: Option<&PyImagePlane>,
    params: Option<&PyEpgifParams>,
) -> PyResult<HashMap<String, PyImagePlane>> {
    let x = x.map_or(&guide.inner, |x| &x.inner);
    let d = epgif::dump_diagnostics(&guide.inner, x, &params_or_default(params)?).map_err(to_py)?;
    Ok(d.named()
        .into_iter()
        .map(|(name, p)| (name.to_string(), p.clone().into()))
        .collect())
}

#[pyfunction]
#[pyo3(signature = (a, b, range = 1.0))]
fn psnr(a: &PyImagePlane, b: &PyImagePlane, range: f64) -> PyResult<f64> {
    epgif::psnr(&a.inner, &b.inner, range).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (a, b, range = 1.0))]
fn ssim(a: &PyImagePlane, b: &PyImagePlane, range: f64) -> PyResult<f64> {
    epgif::ssim(&a.inner, &b.inner, range).map_err(to_py)
}

fn image_of(planes: Vec<PyImagePlane>) -> PyResult<MultiPlaneImage> {
    MultiPlaneImage::new(planes.into_iter().map(|p| p.inner).collect()).map_err(to_py)
}

fn planes_of(img: MultiPlaneImage) -> Vec<PyImagePlane> {
    img.into_planes().into_iter().map(Into::into).collect()
}

/// `x + amplification * (x - smooth(x))` per plane, clamped to the range.
#[pyfunction]
#[pyo3(signature = (planes, params = None, amplification = 5.0))]
fn detail_enhance(
    planes: Vec<PyImagePlane>,
    params: Option<&PyEpgifParams>,
    amplification: f64,
) -> PyResult<Vec<PyImagePlane>> {
    let img = image_of(planes)?;
    let out = pipelines::detail_enhance(&img, &params_or_default(params)?, amplification)
        .map_err(to_py)?;
    Ok(planes_of(out))
}

/// Fuses frames given as lists of planes. `params` defaults to beta 1/50.
#[pyfunction]
#[pyo3(signature = (frames, params = None, levels = None))]
fn exposure_fuse(
    frames: Vec<Vec<PyImagePlane>>,
    params: Option<&PyEpgifParams>,
    levels: Option<usize>,
) -> PyResult<Vec<PyImagePlane>> {
    let frames = frames
        .into_iter()
        .map(image_of)
        .collect::<PyResult<Vec<_>>>()?;
    let seq = ExposureSequence::new(frames).map_err(to_py)?;
    let params = match params {
        Some(p) => p.core()?,
        None => pipelines::fusion_params(),
    };
    let levels = levels.unwrap_or_else(|| pipelines::default_levels(&seq));
    Ok(planes_of(
        pipelines::exposure_fuse(&seq, &params, levels).map_err(to_py)?,
    ))
}

/// Reads a PNG or PGM/PPM file into planes with values in `[0, 1]`.
#[pyfunction]
fn load_image(path: std::path::PathBuf) -> PyResult<Vec<PyImagePlane>> {
    Ok(planes_of(epgif::load_image(path).map_err(to_py)?))
}

/// Writes planes as an 8- or 16-bit PNG or PGM/PPM file.
#[pyfunction]
#[pyo3(signature = (planes, path, clamp = true, depth = 8))]
fn save_image(
    planes: Vec<PyImagePlane>,
    path: std::path::PathBuf,
    clamp: bool,
    depth: u8,
) -> PyResult<()> {
    let depth = match depth {
        8 => epgif::BitDepth::Eight,
        16 => epgif::BitDepth::Sixteen,
        d => {
            return Err(PyValueError::new_err(format!(
                "depth must be 8 or 16, got {d}"
            )))
        }
    };
    epgif::save_image(&image_of(planes)?, path, clamp, depth).map_err(to_py)
}

/// Seeded synthetic scene: "piecewise", "step", "textured-step" or "noise",
/// with optional Gaussian noise of standard deviation `noise`.
#[pyfunction]
#[pyo3(signature = (scene, width, height, seed = 0, noise = 0.0))]
fn synth(
    scene: &str,
    width: usize,
    height: usize,
    seed: u64,
    noise: f64,
) -> PyResult<PyImagePlane> {
    let scene: epgif::synth::Scene = scene.parse().map_err(to_py)?;
    Ok(epgif::synth::render(scene, width, height, seed, noise)
        .map_err(to_py)?
        .into())
}

#[pymodule]
fn pyepgif(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyImagePlane>()?;
    m.add_class::<PyEpgifParams>()?;
    m.add_function(wrap_pyfunction!(smooth, m)?)?;
    m.add_function(wrap_pyfunction!(diagnostics, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(ssim, m)?)?;
    m.add_function(wrap_pyfunction!(detail_enhance, m)?)?;
    m.add_function(wrap_pyfunction!(exposure_fuse, m)?)?;
    m.add_function(wrap_pyfunction!(load_image, m)?)?;
    m.add_function(wrap_pyfunction!(save_image, m)?)?;
    m.add_function(wrap_pyfunction!(synth, m)?)?;
    Ok(())
}

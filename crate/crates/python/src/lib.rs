//! Python bindings. Images cross the boundary as flat row-major lists with
//! interleaved channels.

use std::path::PathBuf;
use std::sync::Arc;

use pyo3::exceptions::{PyIOError, PyIndexError, PyValueError};
use pyo3::prelude::*;

use polhdr_core::crf::{self, Crf};
use polhdr_core::fusion::{self, FusionConfig};
use polhdr_core::hdrops::{self, MertensConfig, ReinhardConfig};
use polhdr_core::imgcore::{self, CaptureStack, LdrImage, PolarQuad, RadianceMap};
use polhdr_core::metrics::{self, SsimConfig};
use polhdr_core::polar::{self, PolState};
use polhdr_core::synth::{self, GroundTruth, SceneSpec, DEFAULT_EXPOSURES_MS};
use polhdr_core::Error;

fn py_err(e: Error) -> PyErr {
    match e {
        Error::Io { .. } => PyIOError::new_err(e.to_string()),
        _ => PyValueError::new_err(format!("{}: {e}", e.kind())),
    }
}

trait OrPy<T> {
    fn py(self) -> PyResult<T>;
}

impl<T> OrPy<T> for polhdr_core::Result<T> {
    fn py(self) -> PyResult<T> {
        self.map_err(py_err)
    }
}

#[pyclass(name = "RadianceMap", module = "polhdr", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyRadianceMap(pub RadianceMap);

#[pymethods]
impl PyRadianceMap {
    #[new]
    fn new(width: usize, height: usize, channels: usize, data: Vec<f64>) -> PyResult<Self> {
        RadianceMap::new(width, height, channels, data).py().map(Self)
    }

    #[staticmethod]
    fn read_pfm(path: PathBuf) -> PyResult<Self> {
        imgcore::read_pfm(path).py().map(Self)
    }

    fn write_pfm(&self, path: PathBuf) -> PyResult<()> {
        imgcore::write_pfm(&self.0, path).py()
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.0.channels()
    }

    fn data(&self) -> Vec<f64> {
        self.0.data().to_vec()
    }

    #[pyo3(signature = (x, y, c=0))]
    fn get(&self, x: usize, y: usize, c: usize) -> PyResult<f64> {
        let (w, h, ch) = self.0.dims();
        if x >= w || y >= h || c >= ch {
            return Err(PyIndexError::new_err(format!("({x}, {y}, {c}) outside {w}x{h}x{ch}")));
        }
        Ok(self.0.get(x, y, c))
    }

    fn __repr__(&self) -> String {
        let (w, h, c) = self.0.dims();
        format!("RadianceMap({w}x{h}x{c})")
    }
}

#[pyclass(name = "LdrImage", module = "polhdr", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyLdrImage(pub LdrImage);

#[pymethods]
impl PyLdrImage {
    #[new]
    #[pyo3(signature = (width, height, channels, data, bit_depth=8))]
    fn new(width: usize, height: usize, channels: usize, data: Vec<u16>, bit_depth: u8) -> PyResult<Self> {
        LdrImage::new(width, height, channels, bit_depth, data).py().map(Self)
    }

    #[staticmethod]
    fn read_png(path: PathBuf) -> PyResult<Self> {
        imgcore::read_png(path).py().map(Self)
    }

    fn write_png(&self, path: PathBuf) -> PyResult<()> {
        imgcore::write_png(&self.0, path).py()
    }

    #[getter]
    fn width(&self) -> usize {
        self.0.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.0.height()
    }

    #[getter]
    fn channels(&self) -> usize {
        self.0.channels()
    }

    #[getter]
    fn bit_depth(&self) -> u8 {
        self.0.bit_depth()
    }

    fn data(&self) -> Vec<u16> {
        self.0.data().to_vec()
    }

    fn __repr__(&self) -> String {
        format!(
            "LdrImage({}x{}x{}, {}-bit)",
            self.0.width(),
            self.0.height(),
            self.0.channels(),
            self.0.bit_depth()
        )
    }
}

/// Camera response: exposure to digital level and back.
#[pyclass(name = "Crf", module = "polhdr", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyCrf(pub Crf);

#[pymethods]
impl PyCrf {
    #[staticmethod]
    #[pyo3(signature = (gamma, white_level=1.0, bit_depth=8))]
    fn gamma(gamma: f64, white_level: f64, bit_depth: u8) -> PyResult<Self> {
        Crf::gamma(gamma, white_level, bit_depth).py().map(Self)
    }

    /// Tabulated inverse response, one exposure per digital level.
    #[staticmethod]
    #[pyo3(signature = (values, bit_depth=8))]
    fn lut(values: Vec<f64>, bit_depth: u8) -> PyResult<Self> {
        Crf::lut(values, bit_depth).py().map(Self)
    }

    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        Crf::from_json(text).py().map(Self)
    }

    fn to_json(&self) -> String {
        self.0.to_json()
    }

    fn apply(&self, exposure: f64) -> u16 {
        self.0.apply(exposure)
    }

    fn invert(&self, level: u16) -> PyResult<f64> {
        if u32::from(level) > self.0.max_level() {
            return Err(PyValueError::new_err(format!("level {level} above {}", self.0.max_level())));
        }
        Ok(self.0.invert(level))
    }

    fn inverse_table(&self) -> Vec<f64> {
        self.0.inverse_table()
    }

    #[getter]
    fn bit_depth(&self) -> u8 {
        self.0.bit_depth()
    }

    #[getter]
    fn white_level(&self) -> f64 {
        self.0.white_level()
    }
}

/// Four co-registered captures behind 0°, 45°, 90° and 135° polarizers.
#[pyclass(name = "PolarQuad", module = "polhdr", frozen, from_py_object)]
#[derive(Clone)]
pub struct PyPolarQuad(pub PolarQuad);

#[pymethods]
impl PyPolarQuad {
    #[new]
    #[pyo3(signature = (images, t0_ms, crf=None))]
    fn new(images: [PyLdrImage; 4], t0_ms: f64, crf: Option<PyCrf>) -> PyResult<Self> {
        let images = images.map(|im| im.0);
        PolarQuad::new(images, t0_ms, crf.map(|c| Arc::new(c.0))).py().map(Self)
    }

    #[getter]
    fn t0_ms(&self) -> f64 {
        self.0.t0_ms()
    }

    fn images(&self) -> Vec<PyLdrImage> {
        self.0.images().iter().cloned().map(PyLdrImage).collect()
    }
}

#[pyclass(name = "CaptureStack", module = "polhdr", frozen, skip_from_py_object)]
#[derive(Clone)]
pub struct PyCaptureStack(pub CaptureStack);

#[pymethods]
impl PyCaptureStack {
    #[new]
    #[pyo3(signature = (quads, crf=None))]
    fn new(quads: Vec<PyPolarQuad>, crf: Option<PyCrf>) -> PyResult<Self> {
        let quads = quads.into_iter().map(|q| q.0).collect();
        CaptureStack::new(quads, crf.map(|c| Arc::new(c.0))).py().map(Self)
    }

    #[staticmethod]
    fn load(manifest: PathBuf) -> PyResult<Self> {
        imgcore::load_stack(manifest).py().map(Self)
    }

    /// Write PNGs and `manifest.json` under `dir`; returns the manifest path.
    fn save(&self, dir: PathBuf) -> PyResult<PathBuf> {
        imgcore::save_stack(&self.0, dir).py()
    }

    fn exposures(&self) -> Vec<f64> {
        self.0.exposures()
    }

    fn quad(&self, index: usize) -> PyResult<PyPolarQuad> {
        self.0
            .quads()
            .get(index)
            .cloned()
            .map(PyPolarQuad)
            .ok_or_else(|| PyIndexError::new_err(format!("quad {index} of {}", self.0.len())))
    }

    #[getter]
    fn crf(&self) -> Option<PyCrf> {
        self.0.crf().cloned().map(PyCrf)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }
}

#[pyclass(name = "GroundTruth", module = "polhdr", frozen)]
pub struct PyGroundTruth(pub GroundTruth);

#[pymethods]
impl PyGroundTruth {
    #[getter]
    fn radiance(&self) -> PyRadianceMap {
        PyRadianceMap(self.0.radiance.clone())
    }

    #[getter]
    fn rho(&self) -> PyRadianceMap {
        PyRadianceMap(self.0.rho.clone())
    }

    #[getter]
    fn theta_deg(&self) -> PyRadianceMap {
        PyRadianceMap(self.0.theta_deg.clone())
    }
}

#[pyfunction]
#[pyo3(signature = (width=256, height=256, stops=14.0, rho_range=(0.6, 1.0), theta="random:32", pattern="hdr-checker", peak=1.0, seed=0))]
#[allow(clippy::too_many_arguments)]
fn generate_scene(
    width: usize,
    height: usize,
    stops: f64,
    rho_range: (f64, f64),
    theta: &str,
    pattern: &str,
    peak: f64,
    seed: u64,
) -> PyResult<PyGroundTruth> {
    let spec = SceneSpec {
        width,
        height,
        dynamic_range_stops: stops,
        rho_range,
        theta_field: theta.parse().py()?,
        radiance_pattern: pattern.parse().py()?,
        peak_radiance: peak,
        seed,
    };
    synth::generate_scene(&spec).py().map(PyGroundTruth)
}

#[pyfunction]
#[pyo3(signature = (gt, t0_ms, crf, noise=0.0, seed=0))]
fn simulate_capture(gt: &PyGroundTruth, t0_ms: f64, crf: &PyCrf, noise: f64, seed: u64) -> PyResult<PyPolarQuad> {
    synth::simulate_capture(&gt.0, t0_ms, &crf.0, noise, seed).py().map(PyPolarQuad)
}

/// Bracket over `exposures` (ms); defaults to the 17-exposure list.
#[pyfunction]
#[pyo3(signature = (gt, crf, exposures=None, noise=0.0, seed=0))]
fn simulate_stack(
    gt: &PyGroundTruth,
    crf: &PyCrf,
    exposures: Option<Vec<f64>>,
    noise: f64,
    seed: u64,
) -> PyResult<PyCaptureStack> {
    let exposures = exposures.unwrap_or_else(|| DEFAULT_EXPOSURES_MS.to_vec());
    synth::simulate_stack(&gt.0, &exposures, &crf.0, noise, seed).py().map(PyCaptureStack)
}

#[pyfunction]
fn forward_quad(i0: f64, rho: f64, theta_deg: f64) -> PyResult<(f64, f64, f64, f64)> {
    let q = polar::forward_quad(i0, PolState::new(rho, theta_deg).py()?);
    Ok((q[0], q[1], q[2], q[3]))
}

/// `(rho, theta_deg)` from the four filtered irradiances.
#[pyfunction]
fn pol_state(i1: f64, i2: f64, i3: f64, i4: f64) -> PyResult<(f64, f64)> {
    let fit = polar::pol_state_from_stokes(polar::stokes_from_quad([i1, i2, i3, i4])).py()?;
    Ok((fit.state.rho(), fit.state.theta_deg()))
}

#[pyfunction]
fn effective_exposures(t0_ms: f64, rho: f64, theta_deg: f64) -> PyResult<(f64, f64, f64, f64)> {
    let t = polar::effective_exposures(t0_ms, PolState::new(rho, theta_deg).py()?);
    Ok((t.t1(), t.t2(), t.t3(), t.t4()))
}

fn fusion_config(sigma: f64, sat_level: Option<u32>) -> FusionConfig {
    FusionConfig {
        sigma,
        saturation_level: sat_level,
        ..FusionConfig::default()
    }
}

/// Fused irradiance and its 8-bit flag mask.
#[pyfunction]
#[pyo3(signature = (quad, crf, sigma=0.2, sat_level=None))]
fn fuse_ideb(
    py: Python<'_>,
    quad: &PyPolarQuad,
    crf: &PyCrf,
    sigma: f64,
    sat_level: Option<u32>,
) -> PyResult<(PyRadianceMap, PyLdrImage)> {
    let cfg = fusion_config(sigma, sat_level);
    let fused = py.detach(|| fusion::fuse_ideb(&quad.0, &crf.0, &cfg)).py()?;
    let mask = fused.flag_mask();
    Ok((PyRadianceMap(fused.ideb), PyLdrImage(mask)))
}

/// Merged radiance, per-sample ok flags and the reference exposure.
#[pyfunction]
#[pyo3(signature = (stack, crf, sigma=0.2, sat_level=None))]
fn build_reference_hdr(
    py: Python<'_>,
    stack: &PyCaptureStack,
    crf: &PyCrf,
    sigma: f64,
    sat_level: Option<u32>,
) -> PyResult<(PyRadianceMap, Vec<bool>, f64)> {
    let cfg = fusion_config(sigma, sat_level);
    let merged = py
        .detach(|| hdrops::build_reference_hdr(&stack.0, &crf.0, &cfg, &MertensConfig::default()))
        .py()?;
    Ok((PyRadianceMap(merged.radiance), merged.ok, merged.t_ref_ms))
}

#[pyfunction]
fn mertens_fuse(images: Vec<PyRadianceMap>) -> PyResult<PyRadianceMap> {
    let images: Vec<RadianceMap> = images.into_iter().map(|m| m.0).collect();
    hdrops::mertens_fuse(&images, &MertensConfig::default()).py().map(PyRadianceMap)
}

#[pyfunction]
#[pyo3(signature = (map, key=0.18, white=None))]
fn reinhard_tonemap(map: &PyRadianceMap, key: f64, white: Option<f64>) -> PyResult<PyRadianceMap> {
    let cfg = ReinhardConfig {
        key,
        white,
        ..ReinhardConfig::default()
    };
    hdrops::reinhard_tonemap(&map.0, &cfg).py().map(PyRadianceMap)
}

#[pyfunction]
#[pyo3(signature = (stack, smoothness=50.0, samples=500, seed=0))]
fn solve_crf(py: Python<'_>, stack: &PyCaptureStack, smoothness: f64, samples: usize, seed: u64) -> PyResult<PyCrf> {
    let cfg = crf::SolveConfig {
        lambda: smoothness,
        samples,
        seed,
    };
    py.detach(|| crf::solve_crf_stack(&stack.0, &cfg)).py().map(PyCrf)
}

/// Decibels; identical inputs give `inf`.
#[pyfunction]
fn psnr(a: &PyRadianceMap, b: &PyRadianceMap, peak: f64) -> PyResult<f64> {
    metrics::psnr(&a.0, &b.0, peak).py()
}

#[pyfunction]
#[pyo3(signature = (a, b, dynamic_range=1.0))]
fn ssim(a: &PyRadianceMap, b: &PyRadianceMap, dynamic_range: f64) -> PyResult<f64> {
    metrics::ssim(&a.0, &b.0, &SsimConfig::with_dynamic_range(dynamic_range)).py()
}

#[pyfunction]
#[pyo3(signature = (reference, test, mask=None))]
fn hdr_log_psnr(reference: &PyRadianceMap, test: &PyRadianceMap, mask: Option<Vec<bool>>) -> PyResult<f64> {
    metrics::hdr_log_psnr(&reference.0, &test.0, mask.as_deref()).py()
}

#[pyfunction]
fn hdr_tonemapped_ssim(reference: &PyRadianceMap, test: &PyRadianceMap) -> PyResult<f64> {
    metrics::hdr_tonemapped_ssim(
        &reference.0,
        &test.0,
        &ReinhardConfig::default(),
        &SsimConfig::default(),
    )
    .py()
}

#[pymodule]
pub fn polhdr(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyRadianceMap>()?;
    m.add_class::<PyLdrImage>()?;
    m.add_class::<PyCrf>()?;
    m.add_class::<PyPolarQuad>()?;
    m.add_class::<PyCaptureStack>()?;
    m.add_class::<PyGroundTruth>()?;
    m.add("DEFAULT_EXPOSURES_MS", DEFAULT_EXPOSURES_MS.to_vec())?;
    m.add_function(wrap_pyfunction!(generate_scene, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_capture, m)?)?;
    m.add_function(wrap_pyfunction!(simulate_stack, m)?)?;
    m.add_function(wrap_pyfunction!(forward_quad, m)?)?;
    m.add_function(wrap_pyfunction!(pol_state, m)?)?;
    m.add_function(wrap_pyfunction!(effective_exposures, m)?)?;
    m.add_function(wrap_pyfunction!(fuse_ideb, m)?)?;
    m.add_function(wrap_pyfunction!(build_reference_hdr, m)?)?;
    m.add_function(wrap_pyfunction!(mertens_fuse, m)?)?;
    m.add_function(wrap_pyfunction!(reinhard_tonemap, m)?)?;
    m.add_function(wrap_pyfunction!(solve_crf, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(ssim, m)?)?;
    m.add_function(wrap_pyfunction!(hdr_log_psnr, m)?)?;
    m.add_function(wrap_pyfunction!(hdr_tonemapped_ssim, m)?)?;
    Ok(())
}

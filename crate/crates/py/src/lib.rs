//! Python bindings for the relighting data engine.
//!
//! Images cross the boundary as flat row-major `float` lists in `[0, 1]`
//! (interleaved RGB for `Image`). Records, parameters and summaries come back
//! as plain dicts with the same field names as the manifest.

use std::path::PathBuf;

use pyo3::exceptions::{PyFileNotFoundError, PyIOError, PyValueError};
use pyo3::prelude::*;
use serde::Serialize;

use relight_core::engine::{self, PipelineConfig, RunOptions};
use relight_core::filtering::{self, SplitCounts};
use relight_core::intrinsic::{self, MsrConfig};
use relight_core::metrics::{self, Direction, ExternalMetric};
use relight_core::relight::{self, LightSample};
use relight_core::shadowgen::{self, PatternKind};
use relight_core::{image, rng, DepthMap, Error, ImageRgb, Mask};

fn to_py(err: Error) -> PyErr {
    match err {
        Error::MissingFile(path) => PyFileNotFoundError::new_err(path.display().to_string()),
        Error::Io(e) => PyIOError::new_err(e.to_string()),
        other => PyValueError::new_err(other.to_string()),
    }
}

/// Converts any serializable value into the equivalent Python object.
fn to_object<'py, T: Serialize>(py: Python<'py>, value: &T) -> PyResult<Bound<'py, PyAny>> {
    let text = serde_json::to_string(value).map_err(|e| PyValueError::new_err(e.to_string()))?;
    py.import("json")?.call_method1("loads", (text,))
}

#[pyclass(name = "Image", module = "relight_engine", from_py_object)]
#[derive(Clone)]
struct PyImage {
    inner: ImageRgb,
}

#[pymethods]
impl PyImage {
    #[new]
    fn new(width: usize, height: usize, data: Vec<f32>) -> PyResult<Self> {
        ImageRgb::new(width, height, data).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        image::load_image(path).map(|inner| Self { inner }).map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        image::save_image(&self.inner, path).map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn data(&self) -> Vec<f32> {
        self.inner.data().to_vec()
    }

    fn pixel(&self, x: usize, y: usize) -> PyResult<[f32; 3]> {
        if x >= self.inner.width() || y >= self.inner.height() {
            return Err(PyValueError::new_err(format!("pixel ({x}, {y}) out of bounds")));
        }
        Ok(self.inner.pixel(x, y))
    }

    fn resize(&self, width: usize, height: usize) -> PyResult<Self> {
        self.inner.resize(width, height).map(|inner| Self { inner }).map_err(to_py)
    }

    fn __repr__(&self) -> String {
        format!("Image({}x{})", self.inner.width(), self.inner.height())
    }
}

#[pyclass(name = "Mask", module = "relight_engine", from_py_object)]
#[derive(Clone)]
struct PyMask {
    inner: Mask,
}

#[pymethods]
impl PyMask {
    #[new]
    fn new(width: usize, height: usize, data: Vec<f32>) -> PyResult<Self> {
        Mask::new(width, height, data).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        image::load_mask(path).map(|inner| Self { inner }).map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn data(&self) -> Vec<f32> {
        self.inner.data().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("Mask({}x{})", self.inner.width(), self.inner.height())
    }
}

#[pyclass(name = "DepthMap", module = "relight_engine", from_py_object)]
#[derive(Clone)]
struct PyDepthMap {
    inner: DepthMap,
}

#[pymethods]
impl PyDepthMap {
    #[new]
    fn new(width: usize, height: usize, data: Vec<f32>) -> PyResult<Self> {
        DepthMap::new(width, height, data).map(|inner| Self { inner }).map_err(to_py)
    }

    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        image::load_depth(path).map(|inner| Self { inner }).map_err(to_py)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        image::save_depth(&self.inner, path).map_err(to_py)
    }

    #[getter]
    fn width(&self) -> usize {
        self.inner.width()
    }

    #[getter]
    fn height(&self) -> usize {
        self.inner.height()
    }

    fn data(&self) -> Vec<f32> {
        self.inner.data().to_vec()
    }

    fn __repr__(&self) -> String {
        format!("DepthMap({}x{})", self.inner.width(), self.inner.height())
    }
}

#[pyclass(name = "PipelineConfig", module = "relight_engine", from_py_object)]
#[derive(Clone)]
struct PyConfig {
    inner: PipelineConfig,
}

#[pymethods]
impl PyConfig {
    /// Default configuration; paths are empty.
    #[new]
    fn new() -> Self {
        Self { inner: PipelineConfig::default() }
    }

    /// Reads a TOML (or `.json`) config; relative paths resolve against its directory.
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        PipelineConfig::load(&path).map(|inner| Self { inner }).map_err(to_py)
    }

    fn to_toml(&self) -> PyResult<String> {
        self.inner.to_toml().map_err(to_py)
    }

    fn to_dict<'py>(&self, py: Python<'py>) -> PyResult<Bound<'py, PyAny>> {
        to_object(py, &self.inner)
    }

    #[getter]
    fn global_seed(&self) -> u64 {
        self.inner.global_seed
    }

    #[setter]
    fn set_global_seed(&mut self, seed: u64) {
        self.inner.global_seed = seed;
    }

    #[getter]
    fn target_resolution(&self) -> usize {
        self.inner.target_resolution
    }

    #[setter]
    fn set_target_resolution(&mut self, res: usize) -> PyResult<()> {
        let mut next = self.inner.clone();
        next.target_resolution = res;
        next.validate().map_err(to_py)?;
        self.inner = next;
        Ok(())
    }

    #[getter]
    fn threshold(&self) -> f64 {
        self.inner.threshold
    }

    #[setter]
    fn set_threshold(&mut self, threshold: f64) {
        self.inner.threshold = threshold;
    }

    /// `(train, val, test)` split sizes.
    #[getter]
    fn splits(&self) -> (usize, usize, usize) {
        let s = self.inner.splits;
        (s.train, s.val, s.test)
    }

    #[setter]
    fn set_splits(&mut self, splits: (usize, usize, usize)) {
        let (train, val, test) = splits;
        self.inner.splits = SplitCounts { train, val, test };
    }
}

// ---------------------------------------------------------------------------
// Filtering and seeding

#[pyfunction]
fn average_scores(scores: Vec<f64>) -> PyResult<f64> {
    filtering::average_scores(&scores).map_err(to_py)
}

#[pyfunction]
#[pyo3(signature = (mean_score, threshold = filtering::DEFAULT_THRESHOLD))]
fn passes_threshold(mean_score: f64, threshold: f64) -> bool {
    filtering::passes_threshold(mean_score, threshold)
}

/// Returns `{image_id: split}` for the first `train + val + test` shuffled ids.
#[pyfunction]
fn split_dataset<'py>(
    py: Python<'py>,
    ids: Vec<String>,
    train: usize,
    val: usize,
    test: usize,
    seed: u64,
) -> PyResult<Bound<'py, PyAny>> {
    let assignments =
        filtering::split_dataset(&ids, SplitCounts { train, val, test }, seed).map_err(to_py)?;
    let map: std::collections::BTreeMap<String, filtering::Split> =
        assignments.into_iter().map(|a| (a.image_id, a.split)).collect();
    to_object(py, &map)
}

#[pyfunction]
fn derive_seed(global_seed: u64, image_id: &str) -> u64 {
    rng::derive_seed(global_seed, image_id)
}

// ---------------------------------------------------------------------------
// Stages

fn msr_config(scales: Option<Vec<f64>>, epsilon: Option<f64>) -> MsrConfig {
    let mut cfg = MsrConfig::default();
    if let Some(scales) = scales {
        cfg.weights = vec![1.0 / scales.len().max(1) as f64; scales.len()];
        cfg.scales = scales;
    }
    if let Some(eps) = epsilon {
        cfg.epsilon = eps;
    }
    cfg
}

/// Log-domain Multi-Scale Retinex reflectance of the masked image.
#[pyfunction]
#[pyo3(signature = (image, mask, scales = None, epsilon = None))]
fn msr_reflectance(
    image: &PyImage,
    mask: &PyMask,
    scales: Option<Vec<f64>>,
    epsilon: Option<f64>,
) -> PyResult<PyImage> {
    intrinsic::msr_reflectance(&image.inner, &mask.inner, &msr_config(scales, epsilon))
        .map(|inner| PyImage { inner })
        .map_err(to_py)
}

/// Albedo estimate and the blend weight drawn from `seed`.
#[pyfunction]
fn extract_albedo(image: &PyImage, mask: &PyMask, seed: u64) -> PyResult<(PyImage, f64)> {
    let mut r = rng::rng_from_seed(seed);
    intrinsic::extract_albedo(&image.inner, &mask.inner, &MsrConfig::default(), &mut r)
        .map(|(inner, alpha)| (PyImage { inner }, alpha))
        .map_err(to_py)
}

#[pyfunction]
fn hemisphere_direction(u1: f64, u2: f64) -> [f64; 3] {
    relight::hemisphere_direction(u1, u2)
}

#[pyfunction]
fn shading_factor(normal: [f32; 3], direction: [f64; 3], ambient: f64) -> f64 {
    relight::shading_factor(normal, &LightSample { direction, ambient })
}

/// Shades `albedo` with normals from `depth` under a directional light.
#[pyfunction]
#[pyo3(signature = (albedo, depth, mask, direction, ambient, gradient_scale = relight::DEFAULT_GRADIENT_SCALE))]
fn lambertian_shade(
    albedo: &PyImage,
    depth: &PyDepthMap,
    mask: &PyMask,
    direction: [f64; 3],
    ambient: f64,
    gradient_scale: f64,
) -> PyResult<PyImage> {
    let normals = relight::depth_to_normals(&depth.inner, gradient_scale).map_err(to_py)?;
    let light = LightSample { direction, ambient };
    relight::lambertian_shade(&albedo.inner, &normals, &light, &mask.inner)
        .map(|inner| PyImage { inner })
        .map_err(to_py)
}

#[pyfunction]
fn pattern_kinds() -> Vec<&'static str> {
    PatternKind::ALL.iter().map(|k| k.name()).collect()
}

/// Occlusion field in `[0, 1]` as a flat row-major list.
#[pyfunction]
fn generate_pattern(kind: &str, width: usize, height: usize, seed: u64) -> PyResult<Vec<f32>> {
    let kind: PatternKind = kind.parse().map_err(to_py)?;
    shadowgen::generate_pattern(kind, width, height, seed)
        .map(|field| field.data().to_vec())
        .map_err(to_py)
}

#[pyfunction]
fn validate_instruction(text: &str) -> PyResult<String> {
    engine::validate_instruction(text).map_err(to_py)
}

/// Runs every degradation stage. Returns `(degraded, ground_truth, params)`.
#[pyfunction]
#[pyo3(signature = (image, mask, depth, seed, config = None, image_id = "image"))]
fn degrade<'py>(
    py: Python<'py>,
    image: &PyImage,
    mask: &PyMask,
    depth: &PyDepthMap,
    seed: u64,
    config: Option<&PyConfig>,
    image_id: &str,
) -> PyResult<(PyImage, PyImage, Bound<'py, PyAny>)> {
    let default = PipelineConfig::default();
    let cfg = config.map_or(&default, |c| &c.inner);
    let out = py
        .detach(|| engine::degrade(image_id, &image.inner, &mask.inner, &depth.inner, seed, cfg))
        .map_err(|e| PyValueError::new_err(e.to_string()))?;
    let params = to_object(py, &out.params)?;
    Ok((PyImage { inner: out.degraded }, PyImage { inner: out.ground_truth }, params))
}

// ---------------------------------------------------------------------------
// Batch runs and metrics

/// Full dataset run; returns the run summary as a dict.
#[pyfunction]
#[pyo3(signature = (config, workers = 1, resume = false, limit = None))]
fn run_batch<'py>(
    py: Python<'py>,
    config: &PyConfig,
    workers: usize,
    resume: bool,
    limit: Option<usize>,
) -> PyResult<Bound<'py, PyAny>> {
    let opts = RunOptions { workers, resume, limit };
    let summary = py.detach(|| engine::run_batch(&config.inner, &opts)).map_err(to_py)?;
    to_object(py, &summary)
}

#[pyfunction]
fn read_manifest<'py>(py: Python<'py>, path: PathBuf) -> PyResult<Bound<'py, PyAny>> {
    let records = engine::read_manifest(&path).map_err(to_py)?;
    to_object(py, &records)
}

#[pyfunction]
fn ssim(a: &PyImage, b: &PyImage) -> PyResult<f64> {
    metrics::ssim(&a.inner, &b.inner).map_err(to_py)
}

/// Mean and population std in the reported `mean ± std` format.
#[pyfunction]
fn format_mean_std(values: Vec<f64>) -> PyResult<String> {
    metrics::aggregate(&values, "", Direction::HigherBetter)
        .map(|r| r.formatted())
        .map_err(to_py)
}

/// SSIM plus optional sidecar metrics; returns a list of report dicts.
#[pyfunction]
#[pyo3(signature = (manifest, predictions, split = None, lpips = None, clip = None, identity = None))]
fn evaluate<'py>(
    py: Python<'py>,
    manifest: PathBuf,
    predictions: PathBuf,
    split: Option<&str>,
    lpips: Option<PathBuf>,
    clip: Option<PathBuf>,
    identity: Option<PathBuf>,
) -> PyResult<Bound<'py, PyAny>> {
    let split = split.map(str::parse).transpose().map_err(to_py)?;
    let externals: Vec<ExternalMetric> = [
        ("LPIPS", Direction::LowerBetter, lpips),
        ("CLIP Score", Direction::HigherBetter, clip),
        ("Identity Score", Direction::HigherBetter, identity),
    ]
    .into_iter()
    .filter_map(|(name, direction, path)| {
        path.map(|path| ExternalMetric { name: name.to_owned(), direction, path })
    })
    .collect();
    let reports = py
        .detach(|| metrics::evaluate(&manifest, &predictions, split, &externals))
        .map_err(to_py)?;
    to_object(py, &reports)
}

#[pymodule]
fn relight_engine(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add("SCHEMA_VERSION", engine::SCHEMA_VERSION)?;
    m.add("DEFAULT_THRESHOLD", filtering::DEFAULT_THRESHOLD)?;
    m.add_class::<PyImage>()?;
    m.add_class::<PyMask>()?;
    m.add_class::<PyDepthMap>()?;
    m.add_class::<PyConfig>()?;
    m.add_function(wrap_pyfunction!(average_scores, m)?)?;
    m.add_function(wrap_pyfunction!(passes_threshold, m)?)?;
    m.add_function(wrap_pyfunction!(split_dataset, m)?)?;
    m.add_function(wrap_pyfunction!(derive_seed, m)?)?;
    m.add_function(wrap_pyfunction!(msr_reflectance, m)?)?;
    m.add_function(wrap_pyfunction!(extract_albedo, m)?)?;
    m.add_function(wrap_pyfunction!(hemisphere_direction, m)?)?;
    m.add_function(wrap_pyfunction!(shading_factor, m)?)?;
    m.add_function(wrap_pyfunction!(lambertian_shade, m)?)?;
    m.add_function(wrap_pyfunction!(pattern_kinds, m)?)?;
    m.add_function(wrap_pyfunction!(generate_pattern, m)?)?;
    m.add_function(wrap_pyfunction!(validate_instruction, m)?)?;
    m.add_function(wrap_pyfunction!(degrade, m)?)?;
    m.add_function(wrap_pyfunction!(run_batch, m)?)?;
    m.add_function(wrap_pyfunction!(read_manifest, m)?)?;
    m.add_function(wrap_pyfunction!(ssim, m)?)?;
    m.add_function(wrap_pyfunction!(format_mean_std, m)?)?;
    m.add_function(wrap_pyfunction!(evaluate, m)?)?;
    Ok(())
}

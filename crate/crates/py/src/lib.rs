//! Python bindings for the spectrogram inversion library.
//!
//! The module mirrors the Rust surface: a `JobConfig` describing lattice,
//! window and algorithm; `analyze`/`synthesize` for the Gabor transform
//! pair; `reconstruct` for magnitude-only phase reconstruction;
//! `phase_gradient`, `phase_diff_grid`, `pitch_shift`, `run_benchmark`,
//! and WAV I/O. Grids are numpy arrays of shape `(channels / 2 + 1,
//! frames)`; signals are 1-d float64 arrays. Long-running calls release
//! the interpreter lock.

use std::path::PathBuf;

use numpy::{
    Complex64, IntoPyArray, PyArray1, PyArray2, PyReadonlyArray1, PyReadonlyArray2, ToPyArray,
};
use pyo3::exceptions::{PyIOError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;
use pyo3::types::{PyDict, PyList};

use specinv::gabor::WindowKind;
use specinv::harness::{self, Algorithm, JobConfig};
use specinv::{Error, HarnessError};

/// Maps Rust failures onto Python exception types: config and argument
/// problems become `ValueError`, file problems `OSError`, everything else
/// `RuntimeError`.
fn to_py_err(err: HarnessError) -> PyErr {
    match &err {
        HarnessError::Config(_) => PyValueError::new_err(err.to_string()),
        HarnessError::Io { .. } | HarnessError::Wav { .. } | HarnessError::Format(_) => {
            PyIOError::new_err(err.to_string())
        }
        HarnessError::Numerical(inner) => match inner {
            Error::InvalidLattice(_) | Error::InvalidWindow(_) | Error::InvalidArgument(_) => {
                PyValueError::new_err(err.to_string())
            }
            _ => PyRuntimeError::new_err(err.to_string()),
        },
    }
}

fn parse_window(name: &str) -> PyResult<WindowKind> {
    name.parse()
        .map_err(|e: Error| PyValueError::new_err(e.to_string()))
}

fn parse_algorithm(name: &str) -> PyResult<Algorithm> {
    name.parse()
        .map_err(|e: Error| PyValueError::new_err(e.to_string()))
}

/// Reconstruction job description: lattice, window, algorithm, tolerances.
#[pyclass(name = "JobConfig", module = "specinv_py", from_py_object)]
#[derive(Clone)]
struct PyJobConfig {
    inner: JobConfig,
}

#[pymethods]
impl PyJobConfig {
    #[new]
    #[pyo3(signature = (
        hop,
        channels,
        *,
        window = "gauss",
        support = None,
        gamma = None,
        algorithm = "pghi2",
        tol1 = 1e-1,
        tol2 = 1e-10,
        max_iter = 100,
        alpha = 0.99,
        seed = 0,
        max_secs = Some(10.0),
    ))]
    #[allow(clippy::too_many_arguments)]
    fn new(
        hop: usize,
        channels: usize,
        window: &str,
        support: Option<usize>,
        gamma: Option<f64>,
        algorithm: &str,
        tol1: f64,
        tol2: f64,
        max_iter: usize,
        alpha: f64,
        seed: u64,
        max_secs: Option<f64>,
    ) -> PyResult<Self> {
        let mut inner = JobConfig::new(hop, channels)
            .with_window(parse_window(window)?)
            .with_algorithm(parse_algorithm(algorithm)?);
        inner.support = support;
        inner.gamma = gamma;
        inner.tol1 = tol1;
        inner.tol2 = tol2;
        inner.max_iter = max_iter;
        inner.alpha = alpha;
        inner.seed = seed;
        inner.max_secs = max_secs;
        inner.validate().map_err(to_py_err)?;
        Ok(PyJobConfig { inner })
    }

    /// Speech benchmark preset: M = 1024 channels, hop a = 128.
    #[staticmethod]
    fn speech() -> Self {
        PyJobConfig {
            inner: JobConfig::speech(),
        }
    }

    /// Music benchmark preset: M = 2048 channels, hop a = 256.
    #[staticmethod]
    fn music() -> Self {
        PyJobConfig {
            inner: JobConfig::music(),
        }
    }

    #[getter]
    fn hop(&self) -> usize {
        self.inner.hop
    }

    #[setter]
    fn set_hop(&mut self, hop: usize) {
        self.inner.hop = hop;
    }

    #[getter]
    fn channels(&self) -> usize {
        self.inner.channels
    }

    #[setter]
    fn set_channels(&mut self, channels: usize) {
        self.inner.channels = channels;
    }

    #[getter]
    fn window(&self) -> &'static str {
        self.inner.window.as_str()
    }

    #[setter]
    fn set_window(&mut self, name: &str) -> PyResult<()> {
        self.inner.window = parse_window(name)?;
        Ok(())
    }

    #[getter]
    fn algorithm(&self) -> &'static str {
        self.inner.algorithm.as_str()
    }

    #[setter]
    fn set_algorithm(&mut self, name: &str) -> PyResult<()> {
        self.inner.algorithm = parse_algorithm(name)?;
        Ok(())
    }

    #[getter]
    fn support(&self) -> Option<usize> {
        self.inner.support
    }

    #[setter]
    fn set_support(&mut self, support: Option<usize>) {
        self.inner.support = support;
    }

    #[getter]
    fn gamma(&self) -> Option<f64> {
        self.inner.gamma
    }

    #[setter]
    fn set_gamma(&mut self, gamma: Option<f64>) {
        self.inner.gamma = gamma;
    }

    #[getter]
    fn tol1(&self) -> f64 {
        self.inner.tol1
    }

    #[setter]
    fn set_tol1(&mut self, tol1: f64) {
        self.inner.tol1 = tol1;
    }

    #[getter]
    fn tol2(&self) -> f64 {
        self.inner.tol2
    }

    #[setter]
    fn set_tol2(&mut self, tol2: f64) {
        self.inner.tol2 = tol2;
    }

    #[getter]
    fn max_iter(&self) -> usize {
        self.inner.max_iter
    }

    #[setter]
    fn set_max_iter(&mut self, max_iter: usize) {
        self.inner.max_iter = max_iter;
    }

    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha
    }

    #[setter]
    fn set_alpha(&mut self, alpha: f64) {
        self.inner.alpha = alpha;
    }

    #[getter]
    fn seed(&self) -> u64 {
        self.inner.seed
    }

    #[setter]
    fn set_seed(&mut self, seed: u64) {
        self.inner.seed = seed;
    }

    #[getter]
    fn max_secs(&self) -> Option<f64> {
        self.inner.max_secs
    }

    #[setter]
    fn set_max_secs(&mut self, max_secs: Option<f64>) {
        self.inner.max_secs = max_secs;
    }

    /// Effective time-frequency ratio `lambda * L`: `gamma` or `hop * channels`.
    fn effective_gamma(&self) -> f64 {
        self.inner.effective_gamma()
    }

    /// Stable human-readable fingerprint used in benchmark rows.
    fn digest(&self) -> String {
        self.inner.digest()
    }

    fn __repr__(&self) -> String {
        format!("JobConfig({})", self.inner.digest())
    }
}

/// Everything produced by one reconstruction job.
#[pyclass(name = "Reconstruction", module = "specinv_py", frozen)]
struct PyReconstruction {
    inner: harness::Reconstruction,
}

#[pymethods]
impl PyReconstruction {
    /// Reconstructed signal, trimmed to the input length.
    #[getter]
    fn signal<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        self.inner.signal.to_pyarray(py)
    }

    /// Half-spectrum target magnitude.
    #[getter]
    fn magnitude<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<f64>> {
        self.inner.magnitude.to_pyarray(py)
    }

    /// Half-spectrum phase of the original analysis.
    #[getter]
    fn reference_phase<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<f64>> {
        self.inner.reference_phase.to_pyarray(py)
    }

    /// Half-spectrum estimated phase.
    #[getter]
    fn estimated_phase<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<f64>> {
        self.inner.estimated_phase.to_pyarray(py)
    }

    /// Cells whose phase was drawn at random rather than integrated.
    #[getter]
    fn random_set<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray2<bool>> {
        self.inner.random_set.to_pyarray(py)
    }

    /// Relative signal-domain error.
    #[getter]
    fn e(&self) -> f64 {
        self.inner.report.e
    }

    #[getter]
    fn e_db(&self) -> f64 {
        self.inner.report.e_db
    }

    /// Spectral convergence.
    #[getter]
    fn c(&self) -> f64 {
        self.inner.report.c
    }

    #[getter]
    fn c_db(&self) -> f64 {
        self.inner.report.c_db
    }

    /// Normalized inconsistency of the estimated coefficients.
    #[getter]
    fn inconsistency(&self) -> f64 {
        self.inner.report.inconsistency
    }

    /// Iterations run by the iterative algorithms; None otherwise.
    #[getter]
    fn iterations(&self) -> Option<usize> {
        self.inner.trace.as_ref().map(|t| t.c_db.len())
    }

    /// Per-iteration spectral convergence in dB for iterative algorithms.
    #[getter]
    fn trace_c_db(&self) -> Option<Vec<f64>> {
        self.inner.trace.as_ref().map(|t| t.c_db.clone())
    }

    fn __repr__(&self) -> String {
        format!(
            "Reconstruction(c_db={:.2}, e_db={:.2}, inconsistency={:.3e})",
            self.inner.report.c_db, self.inner.report.e_db, self.inner.report.inconsistency
        )
    }
}

/// Result of a hop-ratio pitch shift.
#[pyclass(name = "PitchShift", module = "specinv_py", frozen)]
struct PyPitchShift {
    inner: harness::PitchShift,
}

#[pymethods]
impl PyPitchShift {
    #[getter]
    fn samples<'py>(&self, py: Python<'py>) -> Bound<'py, PyArray1<f64>> {
        self.inner.samples.to_pyarray(py)
    }

    /// Relabeled playback rate restoring the input duration.
    #[getter]
    fn sample_rate(&self) -> u32 {
        self.inner.sample_rate
    }

    #[getter]
    fn inconsistency(&self) -> f64 {
        self.inner.inconsistency
    }

    #[getter]
    fn analysis_hop(&self) -> usize {
        self.inner.analysis_hop
    }

    #[getter]
    fn synthesis_hop(&self) -> usize {
        self.inner.synthesis_hop
    }

    /// Achieved stretch and pitch ratio `synthesis_hop / analysis_hop`.
    #[getter]
    fn stretch(&self) -> f64 {
        self.inner.stretch
    }

    fn __repr__(&self) -> String {
        format!(
            "PitchShift(stretch={:.6}, sample_rate={}, inconsistency={:.3e})",
            self.inner.stretch, self.inner.sample_rate, self.inner.inconsistency
        )
    }
}

/// Pads the signal to the config's lattice and returns the half-spectrum
/// complex Gabor coefficients, shape `(channels / 2 + 1, frames)`.
#[pyfunction]
fn analyze<'py>(
    py: Python<'py>,
    signal: PyReadonlyArray1<'py, f64>,
    cfg: &PyJobConfig,
) -> PyResult<Bound<'py, PyArray2<Complex64>>> {
    let signal = signal.as_array().to_vec();
    let cfg = cfg.inner.clone();
    let (_, half) = py
        .detach(move || harness::analyze_signal(&signal, &cfg))
        .map_err(to_py_err)?;
    Ok(half.into_values().into_pyarray(py))
}

/// Synthesizes a real signal of `frames * hop` samples from half-spectrum
/// magnitude and phase grids with the canonical dual window.
#[pyfunction]
fn synthesize<'py>(
    py: Python<'py>,
    magnitude: PyReadonlyArray2<'py, f64>,
    phase: PyReadonlyArray2<'py, f64>,
    cfg: &PyJobConfig,
) -> PyResult<Bound<'py, PyArray1<f64>>> {
    let magnitude = magnitude.as_array().to_owned();
    let phase = phase.as_array().to_owned();
    let cfg = cfg.inner.clone();
    let signal = py
        .detach(move || harness::synthesize_signal(&magnitude, &phase, &cfg))
        .map_err(to_py_err)?;
    Ok(signal.into_pyarray(py))
}

/// Full pipeline: analyze, drop the phase, reconstruct it with the
/// configured algorithm, synthesize, and measure the error.
#[pyfunction]
fn reconstruct<'py>(
    py: Python<'py>,
    signal: PyReadonlyArray1<'py, f64>,
    cfg: &PyJobConfig,
) -> PyResult<PyReconstruction> {
    let signal = signal.as_array().to_vec();
    let cfg = cfg.inner.clone();
    let inner = py
        .detach(move || harness::reconstruct_signal(&signal, &cfg))
        .map_err(to_py_err)?;
    Ok(PyReconstruction { inner })
}

/// Estimated scaled phase gradient of a half-spectrum magnitude grid,
/// returned as `(tgrad, fgrad)` in the grid's shape.
#[pyfunction]
fn phase_gradient<'py>(
    py: Python<'py>,
    magnitude: PyReadonlyArray2<'py, f64>,
    cfg: &PyJobConfig,
) -> PyResult<(Bound<'py, PyArray2<f64>>, Bound<'py, PyArray2<f64>>)> {
    let magnitude = magnitude.as_array().to_owned();
    let cfg = cfg.inner.clone();
    let gradient = py
        .detach(move || -> Result<_, HarnessError> {
            let (bins, frames) = magnitude.dim();
            let params = harness::grid_lattice(&cfg, bins, frames)?;
            Ok(harness::pghi_gradient(
                &magnitude,
                &params,
                cfg.effective_gamma(),
            )?)
        })
        .map_err(to_py_err)?;
    Ok((
        gradient.tgrad.into_pyarray(py),
        gradient.fgrad.into_pyarray(py),
    ))
}

/// Absolute phase difference in units of pi, folded modulo 1, on cells
/// within `range_db` of the magnitude peak; -1 elsewhere.
#[pyfunction]
#[pyo3(signature = (reference, estimate, magnitude, range_db = 60.0))]
fn phase_diff_grid<'py>(
    py: Python<'py>,
    reference: PyReadonlyArray2<'py, f64>,
    estimate: PyReadonlyArray2<'py, f64>,
    magnitude: PyReadonlyArray2<'py, f64>,
    range_db: f64,
) -> PyResult<Bound<'py, PyArray2<f64>>> {
    let grid = harness::phase_diff_grid(
        &reference.as_array().to_owned(),
        &estimate.as_array().to_owned(),
        &magnitude.as_array().to_owned(),
        range_db,
    )
    .map_err(|e| to_py_err(e.into()))?;
    Ok(grid.into_pyarray(py))
}

/// Pitch shift by hop-size change; the output's sample rate is relabeled
/// by the achieved ratio.
#[pyfunction]
fn pitch_shift<'py>(
    py: Python<'py>,
    signal: PyReadonlyArray1<'py, f64>,
    sample_rate: u32,
    semitones: i32,
    cfg: &PyJobConfig,
) -> PyResult<PyPitchShift> {
    let signal = signal.as_array().to_vec();
    let cfg = cfg.inner.clone();
    let inner = py
        .detach(move || harness::pitch_shift(&signal, sample_rate, semitones, &cfg))
        .map_err(to_py_err)?;
    Ok(PyPitchShift { inner })
}

/// Runs every `(file, config)` pair over the WAV files in `corpus_dir`.
/// Returns a dict with per-run `records`, per-config `means`, and
/// `total_seconds`; optionally writes `benchmark.csv` and `summary.json`
/// into `out_dir`.
#[pyfunction]
#[pyo3(signature = (corpus_dir, configs, out_dir = None))]
fn run_benchmark<'py>(
    py: Python<'py>,
    corpus_dir: PathBuf,
    configs: Vec<PyJobConfig>,
    out_dir: Option<PathBuf>,
) -> PyResult<Bound<'py, PyDict>> {
    let configs: Vec<JobConfig> = configs.into_iter().map(|c| c.inner).collect();
    let summary = py
        .detach(move || harness::run_benchmark(&corpus_dir, &configs, out_dir.as_deref()))
        .map_err(to_py_err)?;

    let records = PyList::empty(py);
    for r in &summary.records {
        let row = PyDict::new(py);
        row.set_item("file", &r.file)?;
        row.set_item("algorithm", &r.algorithm)?;
        row.set_item("window", &r.window)?;
        row.set_item("hop", r.hop)?;
        row.set_item("channels", r.channels)?;
        row.set_item("digest", &r.digest)?;
        row.set_item("status", &r.status)?;
        row.set_item("c_db", r.report.as_ref().map(|m| m.c_db))?;
        row.set_item("e_db", r.report.as_ref().map(|m| m.e_db))?;
        row.set_item("inconsistency", r.report.as_ref().map(|m| m.inconsistency))?;
        row.set_item("iterations", r.iterations)?;
        row.set_item("seconds", r.seconds)?;
        records.append(row)?;
    }
    let means = PyList::empty(py);
    for s in &summary.means {
        let row = PyDict::new(py);
        row.set_item("algorithm", &s.algorithm)?;
        row.set_item("window", &s.window)?;
        row.set_item("hop", s.hop)?;
        row.set_item("channels", s.channels)?;
        row.set_item("digest", &s.digest)?;
        row.set_item("mean_c_db", s.mean_c_db)?;
        row.set_item("files_ok", s.files_ok)?;
        row.set_item("files_failed", s.files_failed)?;
        means.append(row)?;
    }
    let dict = PyDict::new(py);
    dict.set_item("records", records)?;
    dict.set_item("means", means)?;
    dict.set_item("total_seconds", summary.total_seconds)?;
    Ok(dict)
}

/// Reads the first channel of a WAV file; returns `(samples, sample_rate)`.
#[pyfunction]
fn read_wav<'py>(py: Python<'py>, path: PathBuf) -> PyResult<(Bound<'py, PyArray1<f64>>, u32)> {
    let audio = specinv::wav::read_wav(&path).map_err(to_py_err)?;
    Ok((audio.samples.into_pyarray(py), audio.sample_rate))
}

/// Writes a mono PCM16 WAV file with a clipping guard.
#[pyfunction]
fn write_wav(path: PathBuf, samples: PyReadonlyArray1<'_, f64>, sample_rate: u32) -> PyResult<()> {
    let samples = samples.as_array().to_vec();
    specinv::wav::write_wav(&path, &samples, sample_rate).map_err(to_py_err)
}

#[pymodule]
fn specinv_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyJobConfig>()?;
    m.add_class::<PyReconstruction>()?;
    m.add_class::<PyPitchShift>()?;
    m.add_function(wrap_pyfunction!(analyze, m)?)?;
    m.add_function(wrap_pyfunction!(synthesize, m)?)?;
    m.add_function(wrap_pyfunction!(reconstruct, m)?)?;
    m.add_function(wrap_pyfunction!(phase_gradient, m)?)?;
    m.add_function(wrap_pyfunction!(phase_diff_grid, m)?)?;
    m.add_function(wrap_pyfunction!(pitch_shift, m)?)?;
    m.add_function(wrap_pyfunction!(run_benchmark, m)?)?;
    m.add_function(wrap_pyfunction!(read_wav, m)?)?;
    m.add_function(wrap_pyfunction!(write_wav, m)?)?;
    m.add("ALGORITHMS", Algorithm::ALL.map(|a| a.as_str()))?;
    m.add("WINDOWS", WindowKind::ALL.map(|w| w.as_str()))?;
    Ok(())
}

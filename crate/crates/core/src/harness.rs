//! End-to-end reconstruction jobs, benchmark orchestration, pitch shifting,
//! and diagnostic exports.
//!
//! A [`JobConfig`] names the lattice, window, and algorithm for one
//! reconstruction. [`reconstruct_signal`] runs the whole pipeline on an
//! in-memory signal: pad, analyze, drop phase, estimate, synthesize, trim,
//! measure. [`run_benchmark`] maps a config matrix over a directory of WAV
//! files in parallel and aggregates mean spectral convergence per config.
//!
//! Wall-clock timings appear only in the JSON summary, never in the CSV, so
//! benchmark CSVs are byte-identical across reruns with the same seeds.
//! Worker-pool size follows rayon's `RAYON_NUM_THREADS` environment
//! variable; job output order is independent of scheduling.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::{fgla, gla, spsi, GlaConfig, GlaInit, IterTrace};
use crate::error::{io, HarnessError};
use crate::gabor::{
    canonical_dual, dgt_real, dgt_real_frames, mirror_magnitude, CoefGrid, GaborParams, Spectrum,
    Window, WindowKind,
};
use crate::gradient::{log_magnitude, scaled_phase_gradient, PhaseGradient, DEFAULT_REL_FLOOR};
use crate::metrics::{
    inconsistency, relative_error_real, spectral_convergence, MetricReport,
};
use crate::pghi::{heap_integrate, synthesize_real, two_pass_refined, PhaseEstimate};
use crate::wav::{read_wav, Audio};
use crate::Error;

/// Reconstruction algorithm selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Algorithm {
    /// Single-pass heap integration at the fine tolerance.
    Pghi,
    /// Two-pass heap integration (coarse pass, then fine pass with the
    /// coarse result as known phase).
    Pghi2,
    /// Single-pass spectrogram inversion (peak picking).
    Spsi,
    /// Plain Griffin-Lim from zero phase.
    Gla,
    /// Fast Griffin-Lim (momentum) from zero phase.
    Fgla,
    /// Plain Griffin-Lim warm-started from the two-pass heap estimate.
    GlaWarm,
    /// Fast Griffin-Lim warm-started from the two-pass heap estimate.
    FglaWarm,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Pghi,
        Algorithm::Pghi2,
        Algorithm::Spsi,
        Algorithm::Gla,
        Algorithm::Fgla,
        Algorithm::GlaWarm,
        Algorithm::FglaWarm,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Pghi => "pghi",
            Algorithm::Pghi2 => "pghi2",
            Algorithm::Spsi => "spsi",
            Algorithm::Gla => "gla",
            Algorithm::Fgla => "fgla",
            Algorithm::GlaWarm => "gla-ws",
            Algorithm::FglaWarm => "fgla-ws",
        }
    }

    /// Whether the algorithm iterates (and therefore produces a trace).
    pub fn is_iterative(&self) -> bool {
        matches!(
            self,
            Algorithm::Gla | Algorithm::Fgla | Algorithm::GlaWarm | Algorithm::FglaWarm
        )
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self, Error> {
        match s {
            "pghi" => Ok(Algorithm::Pghi),
            "pghi2" => Ok(Algorithm::Pghi2),
            "spsi" => Ok(Algorithm::Spsi),
            "gla" => Ok(Algorithm::Gla),
            "fgla" => Ok(Algorithm::Fgla),
            "gla-ws" => Ok(Algorithm::GlaWarm),
            "fgla-ws" => Ok(Algorithm::FglaWarm),
            other => Err(Error::InvalidArgument(format!(
                "unknown algorithm '{other}' (expected pghi|pghi2|spsi|gla|fgla|gla-ws|fgla-ws)"
            ))),
        }
    }
}

/// One reconstruction job: lattice, window, algorithm, and its parameters.
#[derive(Debug, Clone)]
pub struct JobConfig {
    pub window: WindowKind,
    /// Window support in samples; `None` picks the per-kind default.
    pub support: Option<usize>,
    /// Time hop `a`.
    pub hop: usize,
    /// Frequency channels `M` (must be even for half-spectrum processing).
    pub channels: usize,
    /// Time-frequency ratio times signal length; `None` means `a * M`.
    pub gamma: Option<f64>,
    pub algorithm: Algorithm,
    /// Coarse tolerance of the two-pass integration.
    pub tol1: f64,
    /// Fine tolerance (also the single-pass tolerance).
    pub tol2: f64,
    /// Iteration budget for the Griffin-Lim family.
    pub max_iter: usize,
    /// Fast Griffin-Lim momentum.
    pub alpha: f64,
    pub seed: u64,
    /// Inputs longer than this many seconds are truncated on load.
    pub max_secs: Option<f64>,
}

impl JobConfig {
    pub fn new(hop: usize, channels: usize) -> Self {
        JobConfig {
            window: WindowKind::Gauss,
            support: None,
            hop,
            channels,
            gamma: None,
            algorithm: Algorithm::Pghi2,
            tol1: 1e-1,
            tol2: 1e-10,
            max_iter: 100,
            alpha: 0.99,
            seed: 0,
            max_secs: Some(10.0),
        }
    }

    /// Speech benchmark preset: M = 1024 channels, hop a = 128.
    pub fn speech() -> Self {
        JobConfig::new(128, 1024)
    }

    /// Music benchmark preset: M = 2048 channels, hop a = 256.
    pub fn music() -> Self {
        JobConfig::new(256, 2048)
    }

    pub fn with_algorithm(mut self, algorithm: Algorithm) -> Self {
        self.algorithm = algorithm;
        self
    }

    pub fn with_window(mut self, window: WindowKind) -> Self {
        self.window = window;
        self
    }

    /// Effective gamma (`lambda * L` of the analysis window) for a given
    /// padded signal length.
    pub fn effective_gamma(&self) -> f64 {
        self.gamma.unwrap_or((self.hop * self.channels) as f64)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let fail = |msg: String| Err(HarnessError::Config(msg));
        if self.hop == 0 || self.channels == 0 {
            return fail(format!(
                "hop {} and channels {} must be positive",
                self.hop, self.channels
            ));
        }
        if self.channels % 2 != 0 {
            return fail(format!(
                "channel count {} must be even for half-spectrum processing",
                self.channels
            ));
        }
        if self.hop > self.channels {
            return fail(format!(
                "hop {} exceeds channels {}: the system would not be a frame",
                self.hop, self.channels
            ));
        }
        for (name, tol) in [("tol1", self.tol1), ("tol2", self.tol2)] {
            if !(tol > 0.0 && tol < 1.0) {
                return fail(format!("{name} = {tol} outside (0, 1)"));
            }
        }
        if self.tol1 < self.tol2 {
            return fail(format!(
                "tol1 = {} is finer than tol2 = {}",
                self.tol1, self.tol2
            ));
        }
        if !(self.alpha.is_finite() && (0.0..1.0).contains(&self.alpha)) {
            return fail(format!("alpha = {} outside [0, 1)", self.alpha));
        }
        if let Some(gamma) = self.gamma {
            if !(gamma.is_finite() && gamma > 0.0) {
                return fail(format!("gamma = {gamma} must be positive"));
            }
        }
        if let Some(secs) = self.max_secs {
            if !(secs.is_finite() && secs > 0.0) {
                return fail(format!("max-secs = {secs} must be positive"));
            }
        }
        Ok(())
    }

    /// Stable human-readable fingerprint used in benchmark rows.
    pub fn digest(&self) -> String {
        let support = match self.support {
            Some(s) => s.to_string(),
            None => "default".into(),
        };
        let gamma = match self.gamma {
            Some(g) => format!("{g:e}"),
            None => "aM".into(),
        };
        format!(
            "algo={} window={} support={} a={} M={} gamma={} tol1={:e} tol2={:e} maxit={} alpha={} seed={}",
            self.algorithm,
            self.window,
            support,
            self.hop,
            self.channels,
            gamma,
            self.tol1,
            self.tol2,
            self.max_iter,
            self.alpha,
            self.seed
        )
    }
}

fn gcd(a: usize, b: usize) -> usize {
    let (mut a, mut b) = (a, b);
    while b != 0 {
        let r = a % b;
        a = b;
        b = r;
    }
    a
}

fn lcm(a: usize, b: usize) -> usize {
    a / gcd(a, b) * b
}

/// Smallest multiple of `lcm(hop, channels)` that holds `len` samples.
pub fn padded_len(len: usize, hop: usize, channels: usize) -> usize {
    let block = lcm(hop, channels);
    let blocks = (len + block - 1) / block;
    blocks.max(1) * block
}

/// Reads a WAV file and truncates it to the config's duration cap.
pub fn load_input(path: &Path, cfg: &JobConfig) -> Result<Audio, HarnessError> {
    let mut audio = read_wav(path)?;
    if let Some(secs) = cfg.max_secs {
        let cap = (secs * audio.sample_rate as f64).floor() as usize;
        if cap > 0 && audio.samples.len() > cap {
            audio.samples.truncate(cap);
        }
    }
    Ok(audio)
}

/// Everything produced by one reconstruction job.
#[derive(Debug, Clone)]
pub struct Reconstruction {
    /// Reconstructed signal, trimmed back to the input length.
    pub signal: Vec<f64>,
    pub report: MetricReport,
    /// Per-iteration trace for the iterative algorithms.
    pub trace: Option<IterTrace>,
    /// Lattice of the padded analysis.
    pub params: GaborParams,
    /// Half-spectrum target magnitude.
    pub magnitude: Array2<f64>,
    /// Half-spectrum phase of the original analysis.
    pub reference_phase: Array2<f64>,
    /// Half-spectrum estimated phase.
    pub estimated_phase: Array2<f64>,
    /// Cells whose phase was drawn at random rather than integrated.
    pub random_set: Array2<bool>,
}

/// Window described by the config on a given lattice.
fn config_window(cfg: &JobConfig, params: &GaborParams) -> Result<Window, Error> {
    let lambda = match cfg.window {
        WindowKind::Gauss | WindowKind::TruncGauss => {
            Some(cfg.effective_gamma() / params.signal_len() as f64)
        }
        WindowKind::Hann | WindowKind::Hamming => None,
    };
    Window::new(cfg.window, params, cfg.support, lambda)
}

/// Validates the config, pads the signal to the lattice, and builds the
/// analysis window.
fn analysis_setup(
    input: &[f64],
    cfg: &JobConfig,
) -> Result<(Vec<f64>, GaborParams, Window), HarnessError> {
    cfg.validate()?;
    if input.is_empty() {
        return Err(HarnessError::Config("empty input signal".into()));
    }
    if input.iter().any(|v| !v.is_finite()) {
        return Err(HarnessError::Config("non-finite input sample".into()));
    }

    let padded_len = padded_len(input.len(), cfg.hop, cfg.channels);
    let mut padded = vec![0.0; padded_len];
    padded[..input.len()].copy_from_slice(input);

    let params = GaborParams::new(padded_len, cfg.hop, cfg.channels)?;
    let window = config_window(cfg, &params)?;
    Ok((padded, params, window))
}

/// Pads a signal to the config's lattice and analyzes it with the config's
/// window, returning the lattice together with the half-spectrum
/// coefficient grid.
pub fn analyze_signal(
    input: &[f64],
    cfg: &JobConfig,
) -> Result<(GaborParams, CoefGrid), HarnessError> {
    let (padded, params, window) = analysis_setup(input, cfg)?;
    let half = dgt_real(&padded, &window, &params)?.to_half()?;
    Ok((params, half))
}

/// Pads a signal to the config's lattice, analyzes it with the config's
/// window, and returns the lattice together with the half-spectrum
/// magnitude. This is the front half of [`reconstruct_signal`] for callers
/// that only need the analysis, such as gradient export.
pub fn analyze_magnitude(
    input: &[f64],
    cfg: &JobConfig,
) -> Result<(GaborParams, Array2<f64>), HarnessError> {
    let (params, half) = analyze_signal(input, cfg)?;
    Ok((params, half.magnitude()))
}

/// Recovers the lattice matching a half-spectrum grid of `bins x frames`
/// cells under this config: `frames * hop` samples and `channels` bins
/// before mirroring.
pub fn grid_lattice(
    cfg: &JobConfig,
    bins: usize,
    frames: usize,
) -> Result<GaborParams, HarnessError> {
    cfg.validate()?;
    let expected = cfg.channels / 2 + 1;
    if bins != expected {
        return Err(HarnessError::Config(format!(
            "grid has {bins} bins, expected {expected} for M = {}",
            cfg.channels
        )));
    }
    if frames == 0 {
        return Err(HarnessError::Config("grid has zero frames".into()));
    }
    Ok(GaborParams::new(frames * cfg.hop, cfg.hop, cfg.channels)?)
}

/// Synthesizes a real signal from half-spectrum magnitude and phase grids
/// with the canonical dual of the config's window; the grid shape fixes
/// the signal length to `frames * hop`. Inverse of [`analyze_signal`] up
/// to the frame reconstruction error.
pub fn synthesize_signal(
    magnitude: &Array2<f64>,
    phase: &Array2<f64>,
    cfg: &JobConfig,
) -> Result<Vec<f64>, HarnessError> {
    let (bins, frames) = magnitude.dim();
    let params = grid_lattice(cfg, bins, frames)?;
    let window = config_window(cfg, &params)?;
    let dual = canonical_dual(&window, &params)?;
    Ok(synthesize_real(magnitude, phase, &dual, &params)?)
}

/// Runs the full pipeline on an in-memory signal: pad to the lattice,
/// analyze, keep only the magnitude, reconstruct phase with the configured
/// algorithm, synthesize, trim, and measure.
pub fn reconstruct_signal(
    input: &[f64],
    cfg: &JobConfig,
) -> Result<Reconstruction, HarnessError> {
    let (padded, params, window) = analysis_setup(input, cfg)?;
    let dual = canonical_dual(&window, &params)?;

    let analysis = dgt_real(&padded, &window, &params)?;
    let half = analysis.to_half()?;
    let magnitude = half.magnitude();
    let reference_phase = half.phase();

    let gradient = pghi_gradient(&magnitude, &params, cfg.effective_gamma())?;
    let (estimate, trace) =
        run_algorithm(cfg, &magnitude, &gradient, &window, &dual, &params)?;

    let output = synthesize_real(&magnitude, &estimate.phase, &dual, &params)?;
    let estimated = CoefGrid::from_polar(&magnitude, &estimate.phase)?
        .mirror_to_full(params.channels())?;
    let target_full = mirror_magnitude(&magnitude, params.channels())?;

    let convergence = spectral_convergence(&target_full, &estimated, &window, &dual, &params)?;
    let residual = inconsistency(&estimated, &window, &dual, &params)?;
    let signal_error = relative_error_real(&padded, &output)?;
    let report = MetricReport::new(signal_error, convergence, residual);

    let mut signal = output;
    signal.truncate(input.len());

    Ok(Reconstruction {
        signal,
        report,
        trace,
        params,
        magnitude,
        reference_phase,
        estimated_phase: estimate.phase,
        random_set: estimate.random_set,
    })
}

/// Computes the scaled phase gradient of a half-spectrum magnitude grid the
/// way every heap-integration entry point consumes it.
pub fn pghi_gradient(
    magnitude: &Array2<f64>,
    params: &GaborParams,
    gamma: f64,
) -> Result<PhaseGradient, Error> {
    let slog = log_magnitude(magnitude, DEFAULT_REL_FLOOR)?;
    scaled_phase_gradient(&slog, params, gamma, Spectrum::Half)
}

/// Samples from the window center beyond which the magnitude falls below a
/// `1e-13` fraction of the peak. Synthesis from a few frames cannot reach an
/// analysis frame more than the two halfwidths away at any level that the
/// gauge refinement's footprint floor would see.
fn effective_halfwidth(window: &Window) -> usize {
    let g = window.samples();
    let l = g.len();
    let peak = g.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
    let threshold = 1e-13 * peak;
    for d in (1..=l / 2).rev() {
        if g[d].abs() > threshold || g[l - d].abs() > threshold {
            return d;
        }
    }
    0
}

fn run_algorithm(
    cfg: &JobConfig,
    magnitude: &Array2<f64>,
    gradient: &PhaseGradient,
    analysis: &Window,
    synthesis: &Window,
    params: &GaborParams,
) -> Result<(PhaseEstimate, Option<IterTrace>), Error> {
    let gla_config = |init: GlaInit| GlaConfig {
        max_iter: cfg.max_iter,
        alpha: cfg.alpha,
        init,
    };
    let margin =
        (effective_halfwidth(analysis) + effective_halfwidth(synthesis)) / params.hop() + 2;
    let frames_total = params.frames();
    let project = |mag: &Array2<f64>, phase: &Array2<f64>, span: (usize, usize)| {
        let signal = synthesize_real(mag, phase, synthesis, params)?;
        let lo = span.0 as i64 - margin as i64;
        let hi = span.1 as i64 + margin as i64;
        let grid = if (hi - lo) as usize >= frames_total {
            dgt_real(&signal, analysis, params)?
        } else {
            let frames: Vec<usize> = (lo..hi)
                .map(|f| f.rem_euclid(frames_total as i64) as usize)
                .collect();
            dgt_real_frames(&signal, analysis, params, &frames)?
        };
        Ok(grid.to_half()?.into_values())
    };
    match cfg.algorithm {
        Algorithm::Pghi => {
            let est = heap_integrate(magnitude, gradient, cfg.tol2, cfg.seed)?;
            Ok((est, None))
        }
        Algorithm::Pghi2 => {
            let est =
                two_pass_refined(magnitude, gradient, cfg.tol1, cfg.tol2, cfg.seed, project)?;
            Ok((est, None))
        }
        Algorithm::Spsi => {
            let est = spsi(magnitude, params)?;
            Ok((est, None))
        }
        Algorithm::Gla => {
            let (est, trace) = gla(
                magnitude,
                analysis,
                synthesis,
                params,
                Spectrum::Half,
                &gla_config(GlaInit::Zero),
            )?;
            Ok((est, Some(trace)))
        }
        Algorithm::Fgla => {
            let (est, trace) = fgla(
                magnitude,
                analysis,
                synthesis,
                params,
                Spectrum::Half,
                &gla_config(GlaInit::Zero),
            )?;
            Ok((est, Some(trace)))
        }
        Algorithm::GlaWarm | Algorithm::FglaWarm => {
            let warm =
                two_pass_refined(magnitude, gradient, cfg.tol1, cfg.tol2, cfg.seed, project)?;
            let config = gla_config(GlaInit::Warm(warm.phase));
            let (est, trace) = if cfg.algorithm == Algorithm::GlaWarm {
                gla(magnitude, analysis, synthesis, params, Spectrum::Half, &config)?
            } else {
                fgla(magnitude, analysis, synthesis, params, Spectrum::Half, &config)?
            };
            Ok((est, Some(trace)))
        }
    }
}

/// One benchmark result row.
#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub file: String,
    pub algorithm: String,
    pub window: String,
    pub hop: usize,
    pub channels: usize,
    pub digest: String,
    /// `"ok"` or the error message; failures do not abort the benchmark.
    pub status: String,
    pub report: Option<MetricReport>,
    pub iterations: usize,
    /// Convergence trace of iterative algorithms (JSON summary only).
    pub trace_c_db: Option<Vec<f64>>,
    /// Wall-clock seconds for this job (JSON summary only).
    pub seconds: f64,
}

/// Mean spectral convergence for one config over the corpus.
#[derive(Debug, Clone, Serialize)]
pub struct SummaryRow {
    pub algorithm: String,
    pub window: String,
    pub hop: usize,
    pub channels: usize,
    pub digest: String,
    /// Arithmetic mean of per-file `c_db` values over successful files.
    pub mean_c_db: Option<f64>,
    pub files_ok: usize,
    pub files_failed: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchmarkSummary {
    pub records: Vec<RunRecord>,
    pub means: Vec<SummaryRow>,
    pub total_seconds: f64,
}

/// Runs every `(file, config)` pair over the WAV files in `corpus_dir`,
/// in parallel across jobs, and aggregates mean spectral convergence per
/// config. When `out_dir` is given, writes `benchmark.csv` (per-file rows,
/// no timings) and `summary.json` (everything).
pub fn run_benchmark(
    corpus_dir: &Path,
    configs: &[JobConfig],
    out_dir: Option<&Path>,
) -> Result<BenchmarkSummary, HarnessError> {
    if configs.is_empty() {
        return Err(HarnessError::Config("empty config matrix".into()));
    }
    for cfg in configs {
        cfg.validate()?;
    }
    let files = list_wavs(corpus_dir)?;
    if files.is_empty() {
        return Err(HarnessError::Config(format!(
            "no WAV files in {}",
            corpus_dir.display()
        )));
    }

    let started = Instant::now();
    let jobs: Vec<(usize, usize)> = (0..files.len())
        .flat_map(|f| (0..configs.len()).map(move |c| (f, c)))
        .collect();
    let records: Vec<RunRecord> = jobs
        .par_iter()
        .map(|&(f, c)| run_one(&files[f], &configs[c]))
        .collect();

    let means = summarize(configs, &files, &records);
    let summary = BenchmarkSummary {
        records,
        means,
        total_seconds: started.elapsed().as_secs_f64(),
    };

    if let Some(dir) = out_dir {
        std::fs::create_dir_all(dir).map_err(|e| io(dir, e))?;
        write_benchmark_csv(&dir.join("benchmark.csv"), &summary.records)?;
        let json_path = dir.join("summary.json");
        let json = serde_json::to_string_pretty(&summary)
            .map_err(|e| HarnessError::Format(e.to_string()))?;
        std::fs::write(&json_path, json).map_err(|e| io(&json_path, e))?;
    }
    Ok(summary)
}

fn list_wavs(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| io(dir, e))? {
        let entry = entry.map_err(|e| io(dir, e))?;
        let path = entry.path();
        let is_wav = path
            .extension()
            .map(|e| e.eq_ignore_ascii_case("wav"))
            .unwrap_or(false);
        if is_wav && path.is_file() {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}

fn run_one(path: &Path, cfg: &JobConfig) -> RunRecord {
    let file = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let started = Instant::now();
    let outcome = load_input(path, cfg)
        .and_then(|audio| reconstruct_signal(&audio.samples, cfg));
    let seconds = started.elapsed().as_secs_f64();
    match outcome {
        Ok(rec) => RunRecord {
            file,
            algorithm: cfg.algorithm.to_string(),
            window: cfg.window.to_string(),
            hop: cfg.hop,
            channels: cfg.channels,
            digest: cfg.digest(),
            status: "ok".into(),
            iterations: rec.trace.as_ref().map_or(0, |t| t.c_db.len()),
            trace_c_db: rec.trace.map(|t| t.c_db),
            report: Some(rec.report),
            seconds,
        },
        Err(err) => RunRecord {
            file,
            algorithm: cfg.algorithm.to_string(),
            window: cfg.window.to_string(),
            hop: cfg.hop,
            channels: cfg.channels,
            digest: cfg.digest(),
            status: err.to_string(),
            iterations: 0,
            trace_c_db: None,
            report: None,
            seconds,
        },
    }
}

fn summarize(configs: &[JobConfig], files: &[PathBuf], records: &[RunRecord]) -> Vec<SummaryRow> {
    let mut rows = Vec::with_capacity(configs.len());
    for (c, cfg) in configs.iter().enumerate() {
        let mut sum = 0.0;
        let mut ok = 0;
        let mut failed = 0;
        for f in 0..files.len() {
            let record = &records[f * configs.len() + c];
            match &record.report {
                Some(report) => {
                    sum += report.c_db;
                    ok += 1;
                }
                None => failed += 1,
            }
        }
        rows.push(SummaryRow {
            algorithm: cfg.algorithm.to_string(),
            window: cfg.window.to_string(),
            hop: cfg.hop,
            channels: cfg.channels,
            digest: cfg.digest(),
            mean_c_db: if ok > 0 { Some(sum / ok as f64) } else { None },
            files_ok: ok,
            files_failed: failed,
        });
    }
    rows
}

fn write_benchmark_csv(path: &Path, records: &[RunRecord]) -> Result<(), HarnessError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| match e.into_kind() {
        csv::ErrorKind::Io(e) => io(path, e),
        other => HarnessError::Format(format!("{other:?}")),
    })?;
    w.write_record([
        "file",
        "algorithm",
        "window",
        "hop",
        "channels",
        "digest",
        "status",
        "e",
        "e_db",
        "c",
        "c_db",
        "inconsistency",
        "iterations",
    ])
    .map_err(|e| HarnessError::Format(e.to_string()))?;
    for r in records {
        let metric = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        w.write_record([
            r.file.clone(),
            r.algorithm.clone(),
            r.window.clone(),
            r.hop.to_string(),
            r.channels.to_string(),
            r.digest.clone(),
            r.status.clone(),
            metric(r.report.map(|m| m.e)),
            metric(r.report.map(|m| m.e_db)),
            metric(r.report.map(|m| m.c)),
            metric(r.report.map(|m| m.c_db)),
            metric(r.report.map(|m| m.inconsistency)),
            r.iterations.to_string(),
        ])
        .map_err(|e| HarnessError::Format(e.to_string()))?;
    }
    w.flush().map_err(|e| io(path, e))
}

/// Result of a hop-ratio pitch shift.
#[derive(Debug, Clone)]
pub struct PitchShift {
    pub samples: Vec<f64>,
    /// Relabeled rate: playing at this rate restores the input duration and
    /// shifts pitch by the hop ratio.
    pub sample_rate: u32,
    /// The modified spectrogram is generally not a valid spectrogram, so
    /// the quality measure is the normalized inconsistency of the rebuilt
    /// coefficients, not a convergence against a "true" magnitude.
    pub inconsistency: f64,
    pub analysis_hop: usize,
    pub synthesis_hop: usize,
    /// `synthesis_hop / analysis_hop`, the achieved stretch and pitch ratio.
    pub stretch: f64,
}

/// Pitch shifting by hop-size change: analyze with hop `round(a / r)`,
/// rebuild the phase against the synthesis lattice (hop `a`), synthesize,
/// and relabel the sample rate by the achieved ratio so the duration
/// returns to the input's while pitch scales by `r = 2^(semitones/12)`.
pub fn pitch_shift(
    input: &[f64],
    sample_rate: u32,
    semitones: i32,
    cfg: &JobConfig,
) -> Result<PitchShift, HarnessError> {
    cfg.validate()?;
    if input.is_empty() {
        return Err(HarnessError::Config("empty input signal".into()));
    }
    if semitones.abs() > 12 {
        return Err(HarnessError::Config(format!(
            "shift of {semitones} semitones outside +-12"
        )));
    }
    let synthesis_hop = cfg.hop;
    let channels = cfg.channels;
    let ratio = (2.0f64).powf(semitones as f64 / 12.0);
    let analysis_hop = (synthesis_hop as f64 / ratio).round() as usize;
    if analysis_hop == 0 {
        return Err(HarnessError::Config(
            "analysis hop rounded to zero".into(),
        ));
    }
    if analysis_hop > channels {
        return Err(HarnessError::Config(format!(
            "analysis hop {analysis_hop} exceeds channels {channels}"
        )));
    }

    // The padded analysis length must put both lattices on valid grids:
    // hop and M divide the analysis length, and M divides the synthesis
    // length N * synthesis_hop. Scan multiples of lcm(analysis_hop, M).
    let block = lcm(analysis_hop, channels);
    let mut blocks = (input.len() + block - 1) / block;
    blocks = blocks.max(1);
    let start = blocks;
    loop {
        let frames = blocks * block / analysis_hop;
        if (frames * synthesis_hop) % channels == 0 {
            break;
        }
        blocks += 1;
        if blocks - start > 4 * channels {
            return Err(HarnessError::Config(format!(
                "no valid padding for hops {analysis_hop}/{synthesis_hop} at M={channels}"
            )));
        }
    }
    let analysis_len = blocks * block;
    let params_a = GaborParams::new(analysis_len, analysis_hop, channels)?;
    let synthesis_len = params_a.frames() * synthesis_hop;
    let params_s = GaborParams::new(synthesis_len, synthesis_hop, channels)?;

    // Keep the absolute window width fixed across both lattices so the
    // analysis window and the gradient model describe the same function.
    let gamma = cfg
        .gamma
        .unwrap_or((synthesis_hop * channels) as f64);
    let lambda_for = |len: usize| match cfg.window {
        WindowKind::Gauss | WindowKind::TruncGauss => Some(gamma / len as f64),
        WindowKind::Hann | WindowKind::Hamming => None,
    };
    let window_a = Window::new(cfg.window, &params_a, cfg.support, lambda_for(analysis_len))?;
    let window_s = Window::new(cfg.window, &params_s, cfg.support, lambda_for(synthesis_len))?;
    let dual_s = canonical_dual(&window_s, &params_s)?;

    let mut padded = vec![0.0; analysis_len];
    padded[..input.len()].copy_from_slice(input);
    let half = dgt_real(&padded, &window_a, &params_a)?.to_half()?;
    let magnitude = half.magnitude();

    let gradient = pghi_gradient(&magnitude, &params_s, gamma)?;
    let (estimate, _) =
        run_algorithm(cfg, &magnitude, &gradient, &window_s, &dual_s, &params_s)?;

    let output = synthesize_real(&magnitude, &estimate.phase, &dual_s, &params_s)?;
    let estimated = CoefGrid::from_polar(&magnitude, &estimate.phase)?
        .mirror_to_full(channels)?;
    let residual = inconsistency(&estimated, &window_s, &dual_s, &params_s)?;

    let stretch = synthesis_hop as f64 / analysis_hop as f64;
    let out_len = ((input.len() as f64 * stretch).round() as usize).min(output.len());
    let mut samples = output;
    samples.truncate(out_len.max(1));
    Ok(PitchShift {
        samples,
        sample_rate: (sample_rate as f64 * stretch).round() as u32,
        inconsistency: residual,
        analysis_hop,
        synthesis_hop,
        stretch,
    })
}

/// Absolute phase difference between two estimates in units of pi radians,
/// folded modulo 1, evaluated only where the magnitude lies within
/// `range_db` of its peak; all other cells hold the sentinel `-1`.
pub fn phase_diff_grid(
    reference: &Array2<f64>,
    estimate: &Array2<f64>,
    magnitude: &Array2<f64>,
    range_db: f64,
) -> Result<Array2<f64>, Error> {
    if reference.dim() != estimate.dim() || reference.dim() != magnitude.dim() {
        return Err(Error::ShapeMismatch(format!(
            "phase {:?} / {:?} vs magnitude {:?}",
            reference.dim(),
            estimate.dim(),
            magnitude.dim()
        )));
    }
    if !(range_db.is_finite() && range_db > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "display range {range_db} dB must be positive"
        )));
    }
    let peak = magnitude.iter().fold(0.0f64, |m, &v| m.max(v));
    let threshold = peak * 10f64.powf(-range_db / 20.0);
    let mut out = Array2::from_elem(reference.dim(), -1.0);
    for ((idx, &r), &e) in reference.indexed_iter().zip(estimate.iter()) {
        if peak > 0.0 && magnitude[idx] >= threshold {
            let d = ((r - e).abs() / std::f64::consts::PI).rem_euclid(1.0);
            out[idx] = d;
        }
    }
    Ok(out)
}

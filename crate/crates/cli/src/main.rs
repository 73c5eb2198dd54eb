//! Command-line frontend for the spectrogram inversion library.
//!
//! Four subcommands cover the library surface:
//!
//! * `reconstruct` rebuilds a WAV from the magnitude of its Gabor analysis
//!   and reports the error metrics.
//! * `bench` runs an algorithm x window matrix over a corpus directory and
//!   writes `benchmark.csv` plus `summary.json`.
//! * `pitchshift` shifts pitch by changing the analysis hop size and
//!   relabeling the output sample rate.
//! * `gradients` exports the magnitude and scaled phase-gradient grids of
//!   an analysis.
//!
//! Exit codes: 0 on success, 1 for usage errors, 2 for I/O errors, 3 for
//! numerical failures. Files written by a failing command are removed so
//! no partial outputs survive. Grid exports use the binary layout of
//! `specinv::gridio` unless the path ends in `.csv`.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use specinv::gabor::WindowKind;
use specinv::gridio::write_grid;
use specinv::harness::{
    analyze_magnitude, load_input, pghi_gradient, phase_diff_grid, pitch_shift,
    reconstruct_signal, run_benchmark, Algorithm, JobConfig,
};
use specinv::metrics::MetricReport;
use specinv::wav::write_wav;
use specinv::{baselines::IterTrace, Error, HarnessError};

#[derive(Parser, Debug)]
#[command(
    name = "specinv",
    version,
    propagate_version = true,
    about = "Magnitude-only spectrogram inversion: reconstruction, benchmarks, pitch shifting",
    after_help = "Set RAYON_NUM_THREADS to bound the worker pool used by `bench`.",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rebuild a WAV from the magnitude of its Gabor analysis
    Reconstruct(ReconstructArgs),
    /// Run an algorithm x window matrix over a directory of WAV files
    Bench(BenchArgs),
    /// Pitch-shift via hop-size change and sample-rate relabeling
    Pitchshift(PitchshiftArgs),
    /// Export magnitude and scaled phase-gradient grids
    Gradients(GradientsArgs),
}

/// Lattice and input options shared by all subcommands.
#[derive(Args, Debug, Clone)]
struct LatticeOpts {
    /// Parameter preset: "speech" (a=128, M=1024) or "music" (a=256, M=2048)
    /// [default: speech; pitchshift defaults to music]
    #[arg(long, value_parser = ["speech", "music"])]
    preset: Option<String>,

    /// Hop size in samples; overrides the preset
    #[arg(short = 'a', long = "hop", value_name = "SAMPLES")]
    hop: Option<usize>,

    /// Number of frequency channels; overrides the preset
    #[arg(short = 'M', long = "channels", value_name = "COUNT")]
    channels: Option<usize>,

    /// Window support in samples (cosine window length, Gaussian gate)
    #[arg(long, value_name = "SAMPLES")]
    support: Option<usize>,

    /// Time-frequency ratio lambda*L of the Gaussian window; defaults to a*M
    #[arg(long, value_name = "GAMMA")]
    gamma: Option<f64>,

    /// Only analyze the first SECS seconds of each input; 0 removes the
    /// default 10-second cap
    #[arg(long, value_name = "SECS")]
    max_secs: Option<f64>,
}

/// Algorithm tuning shared by the reconstruction-style subcommands.
#[derive(Args, Debug, Clone)]
struct TuningOpts {
    /// Relative magnitude tolerance of the first heap integration pass
    #[arg(long, value_name = "TOL", default_value_t = 1e-1)]
    tol1: f64,

    /// Relative magnitude tolerance below which phases are randomized
    #[arg(long, value_name = "TOL", default_value_t = 1e-10)]
    tol2: f64,

    /// Iteration cap for the Griffin-Lim family
    #[arg(long, value_name = "N", default_value_t = 100)]
    maxit: usize,

    /// Momentum of the fast Griffin-Lim update, in [0, 1)
    #[arg(long, value_name = "ALPHA", default_value_t = 0.99)]
    alpha: f64,

    /// Seed for the random phases assigned below tol2
    #[arg(long, value_name = "SEED", default_value_t = 0)]
    seed: u64,
}

#[derive(Args, Debug)]
struct ReconstructArgs {
    /// Input WAV file
    input: PathBuf,

    /// Output WAV path
    #[arg(short, long, value_name = "WAV")]
    out: PathBuf,

    /// Algorithm: pghi, pghi2, spsi, gla, fgla, gla-ws, fgla-ws
    #[arg(long, value_name = "NAME", default_value = "pghi2")]
    algo: Algorithm,

    /// Analysis window: gauss, truncgauss, hann, hamming
    #[arg(long, value_name = "KIND", default_value = "gauss")]
    window: WindowKind,

    #[command(flatten)]
    lattice: LatticeOpts,

    #[command(flatten)]
    tuning: TuningOpts,

    /// Export the reference/estimated phase difference (units of pi, folded
    /// modulo 1, -1 outside the display range) as a grid file
    #[arg(long, value_name = "PATH")]
    export_phasediff: Option<PathBuf>,

    /// Magnitude range in dB below the peak shown in the phase export
    #[arg(long, value_name = "DB", default_value_t = 60.0)]
    range_db: f64,
}

#[derive(Args, Debug)]
struct BenchArgs {
    /// Directory containing the corpus WAV files
    corpus: PathBuf,

    /// Output directory for benchmark.csv and summary.json
    #[arg(short, long, value_name = "DIR")]
    out: PathBuf,

    /// Algorithms to run; comma-separated or repeated
    #[arg(long, value_name = "NAMES", value_delimiter = ',', default_value = "pghi2")]
    algo: Vec<Algorithm>,

    /// Window kinds to run; comma-separated or repeated
    #[arg(long, value_name = "KINDS", value_delimiter = ',', default_value = "gauss")]
    window: Vec<WindowKind>,

    #[command(flatten)]
    lattice: LatticeOpts,

    #[command(flatten)]
    tuning: TuningOpts,
}

#[derive(Args, Debug)]
struct PitchshiftArgs {
    /// Input WAV file
    input: PathBuf,

    /// Output WAV path
    #[arg(short, long, value_name = "WAV")]
    out: PathBuf,

    /// Shift in semitones, between -12 and 12
    #[arg(
        short,
        long,
        value_name = "N",
        default_value_t = 0,
        allow_negative_numbers = true
    )]
    semitones: i32,

    /// Algorithm: pghi, pghi2, spsi, gla, fgla, gla-ws, fgla-ws
    #[arg(long, value_name = "NAME", default_value = "pghi2")]
    algo: Algorithm,

    /// Analysis window: gauss, truncgauss, hann, hamming
    #[arg(long, value_name = "KIND", default_value = "gauss")]
    window: WindowKind,

    #[command(flatten)]
    lattice: LatticeOpts,

    #[command(flatten)]
    tuning: TuningOpts,
}

#[derive(Args, Debug)]
struct GradientsArgs {
    /// Input WAV file
    input: PathBuf,

    /// Output directory for the magnitude, tgrad and fgrad grids
    #[arg(short, long, value_name = "DIR")]
    out: PathBuf,

    /// Analysis window: gauss, truncgauss, hann, hamming
    #[arg(long, value_name = "KIND", default_value = "gauss")]
    window: WindowKind,

    /// Write CSV grids instead of the binary layout
    #[arg(long)]
    csv: bool,

    #[command(flatten)]
    lattice: LatticeOpts,
}

/// Builds a job config from the lattice options, starting from the named
/// preset when the user did not pick one.
fn build_config(lattice: &LatticeOpts, default_preset: &str) -> JobConfig {
    let preset = lattice.preset.as_deref().unwrap_or(default_preset);
    let mut cfg = match preset {
        "music" => JobConfig::music(),
        _ => JobConfig::speech(),
    };
    if let Some(hop) = lattice.hop {
        cfg.hop = hop;
    }
    if let Some(channels) = lattice.channels {
        cfg.channels = channels;
    }
    cfg.support = lattice.support;
    cfg.gamma = lattice.gamma;
    if let Some(secs) = lattice.max_secs {
        cfg.max_secs = if secs == 0.0 { None } else { Some(secs) };
    }
    cfg
}

fn apply_tuning(cfg: &mut JobConfig, tuning: &TuningOpts) {
    cfg.tol1 = tuning.tol1;
    cfg.tol2 = tuning.tol2;
    cfg.max_iter = tuning.maxit;
    cfg.alpha = tuning.alpha;
    cfg.seed = tuning.seed;
}

/// Files written by the running command, removed again if it fails so no
/// partial outputs survive.
#[derive(Default)]
struct Outputs(Vec<PathBuf>);

impl Outputs {
    fn stage(&mut self, path: &Path) {
        self.0.push(path.to_path_buf());
    }

    fn discard(&self) {
        for path in &self.0 {
            let _ = std::fs::remove_file(path);
        }
    }
}

/// Maps failures onto the documented exit classes: 1 for usage errors, 2
/// for I/O errors, 3 for numerical failures. Core validation errors that
/// reflect bad user parameters (lattice, window, argument domains) count
/// as usage errors even when they surface through the numerical pipeline.
fn exit_class(err: &HarnessError) -> u8 {
    match err {
        HarnessError::Config(_) => 1,
        HarnessError::Io { .. } | HarnessError::Wav { .. } | HarnessError::Format(_) => 2,
        HarnessError::Numerical(inner) => match inner {
            Error::InvalidLattice(_) | Error::InvalidWindow(_) | Error::InvalidArgument(_) => 1,
            Error::NotAFrame { .. } | Error::ShapeMismatch(_) | Error::NonFinite(_) => 3,
        },
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let informational = matches!(
                err.kind(),
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion
            );
            let _ = err.print();
            return if informational {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            };
        }
    };

    let mut outputs = Outputs::default();
    let result = match &cli.command {
        Command::Reconstruct(args) => run_reconstruct(args, &mut outputs),
        Command::Bench(args) => run_bench(args, &mut outputs),
        Command::Pitchshift(args) => run_pitchshift(args, &mut outputs),
        Command::Gradients(args) => run_gradients(args, &mut outputs),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            outputs.discard();
            eprintln!("error: {err}");
            ExitCode::from(exit_class(&err))
        }
    }
}

fn print_report(report: &MetricReport, trace: Option<&IterTrace>) {
    println!(
        "C_dB={:.2} E_dB={:.2} inconsistency={:.3e}",
        report.c_db, report.e_db, report.inconsistency
    );
    if let Some(trace) = trace {
        println!("iterations={}", trace.c_db.len());
    }
}

fn run_reconstruct(args: &ReconstructArgs, outputs: &mut Outputs) -> Result<(), HarnessError> {
    let mut cfg = build_config(&args.lattice, "speech");
    apply_tuning(&mut cfg, &args.tuning);
    cfg.algorithm = args.algo;
    cfg.window = args.window;

    let audio = load_input(&args.input, &cfg)?;
    let rec = reconstruct_signal(&audio.samples, &cfg)?;

    outputs.stage(&args.out);
    write_wav(&args.out, &rec.signal, audio.sample_rate)?;
    if let Some(path) = &args.export_phasediff {
        let grid = phase_diff_grid(
            &rec.reference_phase,
            &rec.estimated_phase,
            &rec.magnitude,
            args.range_db,
        )?;
        outputs.stage(path);
        write_grid(path, &grid)?;
    }

    println!(
        "input={} samples={} rate={}",
        args.input.display(),
        audio.samples.len(),
        audio.sample_rate
    );
    println!("config={}", cfg.digest());
    print_report(&rec.report, rec.trace.as_ref());
    println!("wrote {}", args.out.display());
    if let Some(path) = &args.export_phasediff {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_bench(args: &BenchArgs, outputs: &mut Outputs) -> Result<(), HarnessError> {
    let mut configs = Vec::new();
    for &algo in &args.algo {
        for &window in &args.window {
            let mut cfg = build_config(&args.lattice, "speech");
            apply_tuning(&mut cfg, &args.tuning);
            cfg.algorithm = algo;
            cfg.window = window;
            configs.push(cfg);
        }
    }

    let csv_path = args.out.join("benchmark.csv");
    let json_path = args.out.join("summary.json");
    outputs.stage(&csv_path);
    outputs.stage(&json_path);
    let summary = run_benchmark(&args.corpus, &configs, Some(&args.out))?;

    for row in &summary.means {
        let mean = row
            .mean_c_db
            .map(|v| format!("{v:.2}"))
            .unwrap_or_else(|| "n/a".into());
        println!(
            "algo={} window={} a={} M={} mean_C_dB={} ok={} failed={}",
            row.algorithm, row.window, row.hop, row.channels, mean, row.files_ok, row.files_failed
        );
    }
    println!(
        "jobs={} total_seconds={:.1}",
        summary.records.len(),
        summary.total_seconds
    );
    println!("wrote {}", csv_path.display());
    println!("wrote {}", json_path.display());
    Ok(())
}

fn run_pitchshift(args: &PitchshiftArgs, outputs: &mut Outputs) -> Result<(), HarnessError> {
    let mut cfg = build_config(&args.lattice, "music");
    apply_tuning(&mut cfg, &args.tuning);
    cfg.algorithm = args.algo;
    cfg.window = args.window;

    let audio = load_input(&args.input, &cfg)?;
    let shift = pitch_shift(&audio.samples, audio.sample_rate, args.semitones, &cfg)?;

    outputs.stage(&args.out);
    write_wav(&args.out, &shift.samples, shift.sample_rate)?;

    println!(
        "semitones={} stretch={:.6} analysis_hop={} synthesis_hop={}",
        args.semitones, shift.stretch, shift.analysis_hop, shift.synthesis_hop
    );
    println!(
        "input_rate={} output_rate={} samples={} inconsistency={:.3e}",
        audio.sample_rate,
        shift.sample_rate,
        shift.samples.len(),
        shift.inconsistency
    );
    println!("wrote {}", args.out.display());
    Ok(())
}

fn run_gradients(args: &GradientsArgs, outputs: &mut Outputs) -> Result<(), HarnessError> {
    let mut cfg = build_config(&args.lattice, "speech");
    cfg.window = args.window;

    let audio = load_input(&args.input, &cfg)?;
    let (params, magnitude) = analyze_magnitude(&audio.samples, &cfg)?;
    let gradient = pghi_gradient(&magnitude, &params, cfg.effective_gamma())?;

    std::fs::create_dir_all(&args.out).map_err(|e| HarnessError::Io {
        path: args.out.display().to_string(),
        source: e,
    })?;
    let ext = if args.csv { "csv" } else { "grd" };
    let grids = [
        ("magnitude", &magnitude),
        ("tgrad", &gradient.tgrad),
        ("fgrad", &gradient.fgrad),
    ];
    for (name, grid) in grids {
        let path = args.out.join(format!("{name}.{ext}"));
        outputs.stage(&path);
        write_grid(&path, grid)?;
        println!("wrote {}", path.display());
    }
    println!(
        "bins={} frames={} hop={} channels={} gamma={}",
        magnitude.nrows(),
        magnitude.ncols(),
        params.hop(),
        params.channels(),
        cfg.effective_gamma()
    );
    Ok(())
}

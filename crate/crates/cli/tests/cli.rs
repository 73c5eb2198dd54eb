//! End-to-end tests of the `specinv` binary: exit codes, produced
//! artifacts, and determinism.

use std::path::Path;
use std::process::{Command, Output};

use specinv::gridio::read_grid;
use specinv::wav::{read_wav, write_wav};
use tempfile::TempDir;

fn specinv(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_specinv"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn write_tone(path: &Path, len: usize, hz: f64) {
    let samples: Vec<f64> = (0..len)
        .map(|i| 0.5 * (std::f64::consts::TAU * hz * i as f64 / 16_000.0).sin())
        .collect();
    write_wav(path, &samples, 16_000).unwrap();
}

#[test]
fn help_prints_subcommands_and_exits_zero() {
    let out = specinv(&["--help"]);
    assert!(out.status.success());
    let text = stdout(&out);
    for name in ["reconstruct", "bench", "pitchshift", "gradients"] {
        assert!(text.contains(name), "help lists {name}");
    }
}

#[test]
fn bare_invocation_is_a_usage_error() {
    let out = specinv(&[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let out = specinv(&["reconstruct", "in.wav", "-o", "out.wav", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn invalid_lattice_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("in.wav");
    write_tone(&input, 4096, 220.0);
    let out_wav = dir.path().join("out.wav");
    let out = specinv(&[
        "reconstruct",
        input.to_str().unwrap(),
        "-o",
        out_wav.to_str().unwrap(),
        "-a",
        "300",
        "-M",
        "256",
    ]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
    assert!(!out_wav.exists());
}

#[test]
fn missing_input_is_an_io_error() {
    let dir = TempDir::new().unwrap();
    let out = specinv(&[
        "reconstruct",
        dir.path().join("absent.wav").to_str().unwrap(),
        "-o",
        dir.path().join("out.wav").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
}

#[test]
fn reconstruct_writes_wav_and_reports_metrics() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("in.wav");
    write_tone(&input, 8192, 220.0);
    let run = |path: &Path| {
        specinv(&[
            "reconstruct",
            input.to_str().unwrap(),
            "-o",
            path.to_str().unwrap(),
            "-a",
            "64",
            "-M",
            "256",
            "--algo",
            "pghi",
        ])
    };
    let out_wav = dir.path().join("out.wav");
    let out = run(&out_wav);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("C_dB="), "stdout: {text}");
    let audio = read_wav(&out_wav).unwrap();
    assert_eq!(audio.samples.len(), 8192);
    assert_eq!(audio.sample_rate, 16_000);

    // Same config and seed must produce identical bytes.
    let again = dir.path().join("again.wav");
    assert!(run(&again).status.success());
    assert_eq!(
        std::fs::read(&out_wav).unwrap(),
        std::fs::read(&again).unwrap()
    );
}

#[test]
fn phasediff_export_honors_the_extension() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("in.wav");
    write_tone(&input, 8192, 220.0);
    for name in ["pd.grd", "pd.csv"] {
        let grid_path = dir.path().join(name);
        let out = specinv(&[
            "reconstruct",
            input.to_str().unwrap(),
            "-o",
            dir.path().join("out.wav").to_str().unwrap(),
            "-a",
            "64",
            "-M",
            "256",
            "--algo",
            "pghi",
            "--export-phasediff",
            grid_path.to_str().unwrap(),
        ]);
        assert!(out.status.success(), "stderr: {}", stderr(&out));
        let grid = read_grid(&grid_path).unwrap();
        assert_eq!(grid.dim(), (129, 128));
        assert!(grid.iter().all(|&v| (-1.0..1.0).contains(&v)));
    }

    // Binary layout carries the dimensions in its 16-byte header.
    let bytes = std::fs::read(dir.path().join("pd.grd")).unwrap();
    assert_eq!(&bytes[0..4], b"GRD1");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 129);
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 128);
    assert_eq!(bytes.len(), 16 + 129 * 128 * 8);

    // The fallback really is text.
    let text = std::fs::read_to_string(dir.path().join("pd.csv")).unwrap();
    assert_eq!(text.lines().count(), 129);
}

#[test]
fn failure_removes_partial_outputs() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("in.wav");
    write_tone(&input, 4096, 220.0);
    let out_wav = dir.path().join("out.wav");
    let out = specinv(&[
        "reconstruct",
        input.to_str().unwrap(),
        "-o",
        out_wav.to_str().unwrap(),
        "-a",
        "64",
        "-M",
        "256",
        "--algo",
        "pghi",
        "--export-phasediff",
        dir.path().join("no-such-dir").join("pd.grd").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(!out_wav.exists(), "partial WAV must be removed");
}

#[test]
fn bench_writes_deterministic_reports() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    write_tone(&corpus.join("a.wav"), 8192, 220.0);
    write_tone(&corpus.join("b.wav"), 8192, 330.0);
    let run = |out_dir: &Path| {
        specinv(&[
            "bench",
            corpus.to_str().unwrap(),
            "-o",
            out_dir.to_str().unwrap(),
            "--algo",
            "pghi,spsi",
            "--window",
            "gauss",
            "-a",
            "64",
            "-M",
            "256",
        ])
    };
    let first = dir.path().join("r1");
    let out = run(&first);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("mean_C_dB="), "stdout: {text}");

    let csv = std::fs::read_to_string(first.join("benchmark.csv")).unwrap();
    assert_eq!(
        csv.lines().count(),
        1 + 2 * 2,
        "header plus one row per (file, config)"
    );
    let json = std::fs::read_to_string(first.join("summary.json")).unwrap();
    assert!(json.contains("\"records\""));

    let second = dir.path().join("r2");
    assert!(run(&second).status.success());
    assert_eq!(
        std::fs::read(first.join("benchmark.csv")).unwrap(),
        std::fs::read(second.join("benchmark.csv")).unwrap()
    );
}

#[test]
fn bench_on_empty_corpus_is_a_usage_error() {
    let dir = TempDir::new().unwrap();
    let corpus = dir.path().join("corpus");
    std::fs::create_dir(&corpus).unwrap();
    let out = specinv(&[
        "bench",
        corpus.to_str().unwrap(),
        "-o",
        dir.path().join("r").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
}

#[test]
fn pitchshift_relabels_the_sample_rate() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("in.wav");
    write_tone(&input, 8192, 220.0);
    let out_wav = dir.path().join("up.wav");
    let out = specinv(&[
        "pitchshift",
        input.to_str().unwrap(),
        "-o",
        out_wav.to_str().unwrap(),
        "--semitones",
        "12",
        "-a",
        "64",
        "-M",
        "256",
        "--algo",
        "pghi",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    assert!(text.contains("stretch=2.0"), "stdout: {text}");
    assert!(text.contains("inconsistency="), "stdout: {text}");
    let audio = read_wav(&out_wav).unwrap();
    assert_eq!(audio.sample_rate, 32_000);
    assert_eq!(audio.samples.len(), 16_384);
}

#[test]
fn pitchshift_accepts_negative_semitones() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("in.wav");
    write_tone(&input, 8192, 440.0);
    let out_wav = dir.path().join("down.wav");
    let out = specinv(&[
        "pitchshift",
        input.to_str().unwrap(),
        "-o",
        out_wav.to_str().unwrap(),
        "-s",
        "-12",
        "-a",
        "64",
        "-M",
        "256",
        "--algo",
        "pghi",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    let audio = read_wav(&out_wav).unwrap();
    assert_eq!(audio.sample_rate, 8_000);
    assert_eq!(audio.samples.len(), 4096);
}

#[test]
fn pitchshift_rejects_out_of_range_shifts() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("in.wav");
    write_tone(&input, 4096, 220.0);
    let out = specinv(&[
        "pitchshift",
        input.to_str().unwrap(),
        "-o",
        dir.path().join("o.wav").to_str().unwrap(),
        "--semitones",
        "13",
    ]);
    assert_eq!(out.status.code(), Some(1), "stderr: {}", stderr(&out));
}

#[test]
fn gradients_exports_three_grids() {
    let dir = TempDir::new().unwrap();
    let input = dir.path().join("in.wav");
    write_tone(&input, 8192, 220.0);
    let out_dir = dir.path().join("grids");
    let out = specinv(&[
        "gradients",
        input.to_str().unwrap(),
        "-o",
        out_dir.to_str().unwrap(),
        "-a",
        "64",
        "-M",
        "256",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    for name in ["magnitude.grd", "tgrad.grd", "fgrad.grd"] {
        let grid = read_grid(&out_dir.join(name)).unwrap();
        assert_eq!(grid.dim(), (129, 128), "{name}");
    }

    let csv_dir = dir.path().join("grids-csv");
    let out = specinv(&[
        "gradients",
        input.to_str().unwrap(),
        "-o",
        csv_dir.to_str().unwrap(),
        "-a",
        "64",
        "-M",
        "256",
        "--csv",
    ]);
    assert!(out.status.success(), "stderr: {}", stderr(&out));
    assert!(csv_dir.join("magnitude.csv").exists());
}

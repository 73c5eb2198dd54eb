//! Shared reference implementations for the integration tests.
//!
//! Everything here is written as plain loops straight from the defining
//! formulas, with no FFT and no structure exploitation, so the optimized
//! library code can be checked against it on small problems.
#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use specinv::gabor::{CoefGrid, GaborParams, Window};
use std::f64::consts::TAU;

/// Analysis transform as a triple loop over the defining sum
/// `c(m, n) = sum_l f(l) g(l - n a) exp(-i 2 pi m (l - n a) / M)`
/// with all signal indexing modulo `L`.
pub fn naive_dgt(signal: &[Complex64], window: &Window, params: &GaborParams) -> CoefGrid {
    let l = params.signal_len() as i64;
    let a = params.hop() as i64;
    let m_ch = params.channels() as i64;
    let g = window.samples();
    let mut out = Array2::from_elem((params.channels(), params.frames()), Complex64::ZERO);
    for n in 0..params.frames() as i64 {
        for m in 0..m_ch {
            let mut acc = Complex64::ZERO;
            for li in 0..l {
                let u = li - n * a;
                let gv = g[u.rem_euclid(l) as usize];
                if gv == 0.0 {
                    continue;
                }
                let angle = -TAU * (m * u) as f64 / m_ch as f64;
                acc += signal[li as usize] * gv * Complex64::from_polar(1.0, angle);
            }
            out[[m as usize, n as usize]] = acc;
        }
    }
    CoefGrid::from_array(out)
}

/// Synthesis transform as a triple loop over
/// `f(l) = sum_n sum_m c(m, n) d(l - n a) exp(+i 2 pi m (l - n a) / M)`.
pub fn naive_idgt(coef: &CoefGrid, dual: &Window, params: &GaborParams) -> Vec<Complex64> {
    let l = params.signal_len() as i64;
    let a = params.hop() as i64;
    let m_ch = params.channels() as i64;
    let d = dual.samples();
    let c = coef.values();
    let mut out = vec![Complex64::ZERO; params.signal_len()];
    for (li, sample) in out.iter_mut().enumerate() {
        let mut acc = Complex64::ZERO;
        for n in 0..params.frames() as i64 {
            let u = li as i64 - n * a;
            let dv = d[u.rem_euclid(l) as usize];
            if dv == 0.0 {
                continue;
            }
            for m in 0..m_ch {
                let angle = TAU * (m * u) as f64 / m_ch as f64;
                acc += c[[m as usize, n as usize]] * dv * Complex64::from_polar(1.0, angle);
            }
        }
        *sample = acc;
    }
    out
}

/// Canonical dual window through the full `L x L` frame operator,
/// accumulated atom by atom and solved densely. Cubic in `L`, so only
/// usable for short lattices.
pub fn dense_dual(window: &Window, params: &GaborParams) -> Vec<f64> {
    let l = params.signal_len();
    let a = params.hop();
    let m_ch = params.channels();
    let g = window.samples();
    let mut frame_op = nalgebra::DMatrix::<Complex64>::zeros(l, l);
    let mut atom = vec![Complex64::ZERO; l];
    for n in 0..params.frames() {
        for m in 0..m_ch {
            for (li, v) in atom.iter_mut().enumerate() {
                let u = (li as i64 - (n * a) as i64).rem_euclid(l as i64);
                let angle = TAU * (m as i64 * u) as f64 / m_ch as f64;
                *v = g[u as usize] * Complex64::from_polar(1.0, angle);
            }
            for row in 0..l {
                for col in 0..l {
                    frame_op[(row, col)] += atom[row] * atom[col].conj();
                }
            }
        }
    }
    let rhs = nalgebra::DVector::from_iterator(l, g.iter().map(|&v| Complex64::new(v, 0.0)));
    let sol = frame_op.lu().solve(&rhs).expect("frame operator is singular");
    sol.iter().map(|v| v.re).collect()
}

/// Deterministic complex test signal with full-band content.
pub fn random_complex_signal(len: usize, seed: u64) -> Vec<Complex64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len)
        .map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)))
        .collect()
}

/// Deterministic real test signal.
pub fn random_real_signal(len: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Largest absolute entry of a complex grid.
pub fn peak(values: &Array2<Complex64>) -> f64 {
    values.iter().map(|v| v.norm()).fold(0.0, f64::max)
}

/// Relative l2 error between two complex grids.
pub fn grid_error(reference: &Array2<Complex64>, estimate: &Array2<Complex64>) -> f64 {
    let num: f64 = reference
        .iter()
        .zip(estimate.iter())
        .map(|(x, y)| (x - y).norm_sqr())
        .sum();
    let den: f64 = reference.iter().map(|v| v.norm_sqr()).sum();
    (num / den).sqrt()
}

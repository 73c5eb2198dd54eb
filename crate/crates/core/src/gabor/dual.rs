use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{GaborParams, Window};
use crate::{Error, Result};

/// Relative eigenvalue tolerance below which the frame operator is treated
/// as singular and no dual window is produced.
const FRAME_RATIO_TOL: f64 = 1e-10;

/// Lower and upper frame bounds of the window/lattice pair (the extreme
/// eigenvalues of the frame operator).
pub fn frame_bounds(window: &Window, params: &GaborParams) -> Result<(f64, f64)> {
    check_window(window, params)?;
    if window.support() <= params.channels() {
        let d = painless_diagonal(window, params);
        let mut min = f64::INFINITY;
        let mut max = 0.0f64;
        for &v in &d {
            min = min.min(v);
            max = max.max(v);
        }
        Ok((min, max))
    } else {
        let (bounds, _) = residue_solve(window, params);
        Ok(bounds)
    }
}

/// Canonical dual window `S^-1 g`, where `S` is the frame operator of the
/// window over the lattice.
///
/// The frame operator only couples signal indices that are congruent modulo
/// `M`, so `S` splits into `M` symmetric blocks of size `b = L / M`. When
/// the window support fits into `M` samples the blocks are diagonal
/// ("painless" case) and the dual is the window divided by the lattice
/// power `M * sum_k g(l - ka)^2`. When the hop divides `M` each block is
/// circulant and diagonalizes by a length-`b` DFT; otherwise the blocks are
/// solved through a dense eigendecomposition. Either way the extreme
/// eigenvalues are tracked and the call fails with [`Error::NotAFrame`]
/// when their ratio falls below `1e-10`.
pub fn canonical_dual(window: &Window, params: &GaborParams) -> Result<Window> {
    check_window(window, params)?;
    if window.support() <= params.channels() {
        let d = painless_diagonal(window, params);
        let mut min = f64::INFINITY;
        let mut max = 0.0f64;
        for &v in &d {
            min = min.min(v);
            max = max.max(v);
        }
        check_frame(min, max)?;
        let a = params.hop();
        let samples: Vec<f64> = window
            .samples()
            .iter()
            .enumerate()
            .map(|(l, &g)| if g == 0.0 { 0.0 } else { g / d[l % a] })
            .collect();
        Window::from_samples(samples, window.kind(), window.lambda(), window.support())
    } else {
        let ((min, max), samples) = residue_solve(window, params);
        check_frame(min, max)?;
        Window::from_samples(samples, window.kind(), window.lambda(), params.signal_len())
    }
}

fn check_window(window: &Window, params: &GaborParams) -> Result<()> {
    if window.len() != params.signal_len() {
        return Err(Error::ShapeMismatch(format!(
            "window length {} vs lattice L={}",
            window.len(),
            params.signal_len()
        )));
    }
    Ok(())
}

fn check_frame(min: f64, max: f64) -> Result<()> {
    let ratio = min / max;
    if !ratio.is_finite() || ratio < FRAME_RATIO_TOL {
        return Err(Error::NotAFrame {
            ratio,
            tol: FRAME_RATIO_TOL,
        });
    }
    Ok(())
}

/// Diagonal of the frame operator, reduced to one hop period:
/// `d[r] = M * sum over l congruent to r mod a of g(l)^2`.
fn painless_diagonal(window: &Window, params: &GaborParams) -> Vec<f64> {
    let a = params.hop();
    let m = params.channels() as f64;
    let mut d = vec![0.0; a];
    for (l, &g) in window.samples().iter().enumerate() {
        d[l % a] += m * g * g;
    }
    d
}

/// Solves the `M` residue blocks of the frame operator, returning the
/// global eigenvalue bounds and the dual samples.
fn residue_solve(window: &Window, params: &GaborParams) -> ((f64, f64), Vec<f64>) {
    if params.channels() % params.hop() == 0 {
        circulant_solve(window, params)
    } else {
        dense_solve(window, params)
    }
}

/// Coupling weights of the frame operator,
/// `w_k(l) = sum_n g(l - n a) g(l - k M - n a)`,
/// which are `a`-periodic in `l`. The entry of the residue-`r` block at
/// `(j, j')` is `M * w_(j - j' mod b)((r + j M) mod a)`. Stored as
/// `w[k * a + l]` with `k` in `0..b` and `l` in `0..a`.
fn coupling_table(window: &Window, params: &GaborParams) -> Vec<f64> {
    let l = params.signal_len() as i64;
    let a = params.hop();
    let m = params.channels() as i64;
    let b = params.freq_step();
    let g = window.samples();
    let (lo, hi) = window.active_span();
    let mut w = vec![0.0; b * a];
    for off in lo..=hi {
        let u = off.rem_euclid(l) as usize;
        let gu = g[u];
        if gu == 0.0 {
            continue;
        }
        let col = u % a;
        for (k, row) in w.chunks_exact_mut(a).enumerate() {
            let shifted = g[(u as i64 - k as i64 * m).rem_euclid(l) as usize];
            if shifted != 0.0 {
                row[col] += gu * shifted;
            }
        }
    }
    w
}

/// Block solver for lattices where the hop divides `M`: every residue block
/// is circulant, so a length-`b` DFT of the coupling column gives its
/// (real) eigenvalues and the solve reduces to two small FFTs per residue.
/// Blocks repeat with period `a` in the residue, so only `a` spectra exist.
fn circulant_solve(window: &Window, params: &GaborParams) -> ((f64, f64), Vec<f64>) {
    let l = params.signal_len();
    let m = params.channels();
    let a = params.hop();
    let b = params.freq_step();
    let g = window.samples();
    let w = coupling_table(window, params);

    let mut planner = FftPlanner::new();
    let forward = planner.plan_fft_forward(b);
    let inverse = planner.plan_fft_inverse(b);

    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    let mut spectra = vec![0.0; a * b];
    let mut buf = vec![Complex64::ZERO; b];
    for (r, spectrum) in spectra.chunks_exact_mut(b).enumerate() {
        for (k, v) in buf.iter_mut().enumerate() {
            *v = Complex64::new(m as f64 * w[k * a + r], 0.0);
        }
        forward.process(&mut buf);
        for (s, v) in spectrum.iter_mut().zip(&buf) {
            *s = v.re;
            min = min.min(v.re);
            max = max.max(v.re);
        }
    }

    let mut dual = vec![0.0; l];
    for r in 0..m {
        for (j, v) in buf.iter_mut().enumerate() {
            *v = Complex64::new(g[r + j * m], 0.0);
        }
        forward.process(&mut buf);
        let spectrum = &spectra[(r % a) * b..(r % a + 1) * b];
        for (v, &ev) in buf.iter_mut().zip(spectrum) {
            *v /= ev * b as f64;
        }
        inverse.process(&mut buf);
        for (j, v) in buf.iter().enumerate() {
            dual[r + j * m] = v.re;
        }
    }
    ((min, max), dual)
}

/// Block solver for lattices where the hop does not divide `M`: each
/// residue block is built from the coupling table and factored by a dense
/// symmetric eigendecomposition.
fn dense_solve(window: &Window, params: &GaborParams) -> ((f64, f64), Vec<f64>) {
    let l = params.signal_len();
    let m = params.channels();
    let a = params.hop();
    let b = params.freq_step();
    let g = window.samples();
    let w = coupling_table(window, params);

    let mut min = f64::INFINITY;
    let mut max = 0.0f64;
    let mut dual = vec![0.0; l];
    for r in 0..m {
        let block = DMatrix::from_fn(b, b, |j, jp| {
            let k = (b + j - jp) % b;
            m as f64 * w[k * a + (r + j * m) % a]
        });
        let eigen = SymmetricEigen::new(block);
        for &ev in eigen.eigenvalues.iter() {
            min = min.min(ev);
            max = max.max(ev);
        }
        let rhs = DVector::from_fn(b, |j, _| g[r + j * m]);
        let mut coords = eigen.eigenvectors.transpose() * rhs;
        for (c, &ev) in coords.iter_mut().zip(eigen.eigenvalues.iter()) {
            *c /= ev;
        }
        let solution = &eigen.eigenvectors * coords;
        for j in 0..b {
            dual[r + j * m] = solution[j];
        }
    }
    ((min, max), dual)
}

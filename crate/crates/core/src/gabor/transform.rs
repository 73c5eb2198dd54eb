use num_complex::Complex64;
use rustfft::FftPlanner;

use super::{CoefGrid, GaborParams, Window};
use crate::{Error, Result};

fn check_system(signal_len: usize, window: &Window, params: &GaborParams) -> Result<()> {
    if signal_len != params.signal_len() {
        return Err(Error::ShapeMismatch(format!(
            "signal length {signal_len} vs lattice L={}",
            params.signal_len()
        )));
    }
    if window.len() != params.signal_len() {
        return Err(Error::ShapeMismatch(format!(
            "window length {} vs lattice L={}",
            window.len(),
            params.signal_len()
        )));
    }
    Ok(())
}

/// Discrete Gabor transform of a complex signal.
///
/// Coefficient `(m, n)` is `sum_l f(l) g(l - na) exp(-i 2 pi m (l - na) / M)`
/// with all index arithmetic modulo `L`. Each frame is computed as a
/// length-`M` FFT of the windowed slice folded modulo `M`, which is exact
/// because `M` divides `L`.
pub fn dgt(signal: &[Complex64], window: &Window, params: &GaborParams) -> Result<CoefGrid> {
    dgt_over(signal, window, params, 0..params.frames())
}

fn dgt_over<I>(
    signal: &[Complex64],
    window: &Window,
    params: &GaborParams,
    frames: I,
) -> Result<CoefGrid>
where
    I: IntoIterator<Item = usize>,
{
    check_system(signal.len(), window, params)?;
    let l = params.signal_len();
    let m = params.channels();
    let a = params.hop();
    let n = params.frames();
    let (lo, hi) = window.active_span();
    let g = window.samples();

    let fft = FftPlanner::new().plan_fft_forward(m);
    let mut grid = CoefGrid::zeros(m, n);
    let mut buf = vec![Complex64::ZERO; m];
    for frame in frames {
        buf.fill(Complex64::ZERO);
        let start = (frame * a) as i64;
        let mut sig_idx = (start + lo).rem_euclid(l as i64) as usize;
        let mut win_idx = lo.rem_euclid(l as i64) as usize;
        let mut bin_idx = lo.rem_euclid(m as i64) as usize;
        for _ in lo..=hi {
            buf[bin_idx] += g[win_idx] * signal[sig_idx];
            sig_idx += 1;
            if sig_idx == l {
                sig_idx = 0;
            }
            win_idx += 1;
            if win_idx == l {
                win_idx = 0;
            }
            bin_idx += 1;
            if bin_idx == m {
                bin_idx = 0;
            }
        }
        fft.process(&mut buf);
        for (bin, &v) in buf.iter().enumerate() {
            grid.values_mut()[[bin, frame]] = v;
        }
    }
    Ok(grid)
}

/// [`dgt`] of a real signal.
pub fn dgt_real(signal: &[f64], window: &Window, params: &GaborParams) -> Result<CoefGrid> {
    let complex: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    dgt(&complex, window, params)
}

/// [`dgt_real`] restricted to a subset of frames; all other columns of the
/// returned grid are zero. Used to re-analyze time-localized signals where
/// the response outside a known frame range is negligible.
pub(crate) fn dgt_real_frames(
    signal: &[f64],
    window: &Window,
    params: &GaborParams,
    frames: &[usize],
) -> Result<CoefGrid> {
    let complex: Vec<Complex64> = signal.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    dgt_over(&complex, window, params, frames.iter().copied())
}

/// Inverse discrete Gabor transform with the given synthesis window
/// (normally the canonical dual of the analysis window).
///
/// Computes `f(l) = sum_{m,n} c(m,n) gd(l - na) exp(i 2 pi m (l - na) / M)`
/// by overlap-adding, per frame, the length-`M` unnormalized inverse FFT of
/// the coefficient column extended periodically under the synthesis window.
pub fn idgt(grid: &CoefGrid, window: &Window, params: &GaborParams) -> Result<Vec<Complex64>> {
    check_system(params.signal_len(), window, params)?;
    let l = params.signal_len();
    let m = params.channels();
    let a = params.hop();
    let n = params.frames();
    if grid.bins() != m || grid.frames() != n {
        return Err(Error::ShapeMismatch(format!(
            "grid {}x{} vs lattice {}x{}",
            grid.bins(),
            grid.frames(),
            m,
            n
        )));
    }
    let (lo, hi) = window.active_span();
    let g = window.samples();

    let ifft = FftPlanner::new().plan_fft_inverse(m);
    let mut out = vec![Complex64::ZERO; l];
    let mut buf = vec![Complex64::ZERO; m];
    for frame in 0..n {
        let column = grid.values().column(frame);
        if column.iter().all(|v| v.re == 0.0 && v.im == 0.0) {
            continue;
        }
        for (bin, v) in buf.iter_mut().enumerate() {
            *v = column[bin];
        }
        ifft.process(&mut buf);
        let start = (frame * a) as i64;
        let mut sig_idx = (start + lo).rem_euclid(l as i64) as usize;
        let mut win_idx = lo.rem_euclid(l as i64) as usize;
        let mut bin_idx = lo.rem_euclid(m as i64) as usize;
        for _ in lo..=hi {
            out[sig_idx] += g[win_idx] * buf[bin_idx];
            sig_idx += 1;
            if sig_idx == l {
                sig_idx = 0;
            }
            win_idx += 1;
            if win_idx == l {
                win_idx = 0;
            }
            bin_idx += 1;
            if bin_idx == m {
                bin_idx = 0;
            }
        }
    }
    Ok(out)
}

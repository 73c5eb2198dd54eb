//! Discrete Gabor transform on a regular time-frequency lattice.
//!
//! Analysis of a length-`L` signal with hop `a` and `M` channels produces an
//! `M x N` coefficient grid (`N = L / a` frames). The transform is
//! window-centered: frame `n` is the length-`M` DFT of the windowed slice
//! `f(na + j) * g(j)` folded modulo `M`, so the phase of each coefficient is
//! measured relative to the window position rather than the signal origin.
//! Synthesis is the adjoint operation with the canonical dual window, which
//! makes `idgt(dgt(f))` the identity whenever the window forms a frame.

mod dual;
mod transform;
mod window;

pub use dual::{canonical_dual, frame_bounds};
pub(crate) use transform::dgt_real_frames;
pub use transform::{dgt, dgt_real, idgt};
pub use window::{periodized_gauss, periodized_gauss_ref, Window, WindowKind};

use ndarray::{Array2, ShapeBuilder};
use num_complex::Complex64;

use crate::{Error, Result};

/// Whether a grid covers all `M` bins or only the non-negative half
/// spectrum (`M/2 + 1` rows) of a real signal.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Spectrum {
    Full,
    Half,
}

/// Lattice description: signal length `L`, hop `a`, channel count `M`.
///
/// Construction enforces `a | L`, `M | L` and redundancy `M / a >= 1`, so a
/// value of this type always describes a valid rectangular lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GaborParams {
    signal_len: usize,
    hop: usize,
    channels: usize,
}

impl GaborParams {
    pub fn new(signal_len: usize, hop: usize, channels: usize) -> Result<Self> {
        if signal_len == 0 || hop == 0 || channels == 0 {
            return Err(Error::InvalidLattice(format!(
                "sizes must be positive (L={signal_len}, a={hop}, M={channels})"
            )));
        }
        if signal_len % hop != 0 {
            return Err(Error::InvalidLattice(format!(
                "hop {hop} does not divide signal length {signal_len}"
            )));
        }
        if signal_len % channels != 0 {
            return Err(Error::InvalidLattice(format!(
                "channel count {channels} does not divide signal length {signal_len}"
            )));
        }
        if hop > channels {
            return Err(Error::InvalidLattice(format!(
                "redundancy M/a = {channels}/{hop} is below one"
            )));
        }
        Ok(GaborParams {
            signal_len,
            hop,
            channels,
        })
    }

    /// Signal length `L` in samples.
    pub fn signal_len(&self) -> usize {
        self.signal_len
    }

    /// Time step `a` between consecutive frames, in samples.
    pub fn hop(&self) -> usize {
        self.hop
    }

    /// Number of frequency channels `M`.
    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Number of analysis frames `N = L / a`.
    pub fn frames(&self) -> usize {
        self.signal_len / self.hop
    }

    /// Frequency step `b = L / M` in DFT bins of the full signal.
    pub fn freq_step(&self) -> usize {
        self.signal_len / self.channels
    }

    /// Oversampling factor `M / a`.
    pub fn redundancy(&self) -> f64 {
        self.channels as f64 / self.hop as f64
    }

    /// Rows of a half-spectrum grid: bins `0 ..= M/2`. Requires even `M`.
    pub fn half_bins(&self) -> Result<usize> {
        if self.channels % 2 != 0 {
            return Err(Error::InvalidLattice(format!(
                "half-spectrum processing needs an even channel count, got {}",
                self.channels
            )));
        }
        Ok(self.channels / 2 + 1)
    }
}

/// Complex coefficient grid, `bins x frames`, stored column-major so each
/// frame is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefGrid {
    values: Array2<Complex64>,
}

impl CoefGrid {
    pub fn zeros(bins: usize, frames: usize) -> Self {
        CoefGrid {
            values: Array2::zeros((bins, frames).f()),
        }
    }

    pub fn from_array(values: Array2<Complex64>) -> Self {
        CoefGrid { values }
    }

    /// Builds `s * exp(i*phase)` elementwise.
    pub fn from_polar(magnitude: &Array2<f64>, phase: &Array2<f64>) -> Result<Self> {
        if magnitude.dim() != phase.dim() {
            return Err(Error::ShapeMismatch(format!(
                "magnitude {:?} vs phase {:?}",
                magnitude.dim(),
                phase.dim()
            )));
        }
        let mut values = Array2::zeros(magnitude.raw_dim().f());
        for ((idx, &s), &p) in magnitude.indexed_iter().zip(phase.iter()) {
            values[idx] = Complex64::from_polar(s, p);
        }
        Ok(CoefGrid { values })
    }

    pub fn bins(&self) -> usize {
        self.values.nrows()
    }

    pub fn frames(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> &Array2<Complex64> {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut Array2<Complex64> {
        &mut self.values
    }

    pub fn into_values(self) -> Array2<Complex64> {
        self.values
    }

    pub fn magnitude(&self) -> Array2<f64> {
        self.values.mapv(|z| z.norm())
    }

    /// Phase wrapped to `(-pi, pi]` by `atan2`; zero coefficients report 0.
    pub fn phase(&self) -> Array2<f64> {
        self.values.mapv(|z| z.arg())
    }

    /// Keeps bins `0 ..= M/2` of a full grid. Requires even row count.
    pub fn to_half(&self) -> Result<CoefGrid> {
        let m = self.bins();
        if m % 2 != 0 {
            return Err(Error::ShapeMismatch(format!(
                "half-spectrum extraction needs an even bin count, got {m}"
            )));
        }
        let half = m / 2 + 1;
        let mut out = CoefGrid::zeros(half, self.frames());
        for n in 0..self.frames() {
            for mm in 0..half {
                out.values[[mm, n]] = self.values[[mm, n]];
            }
        }
        Ok(out)
    }

    /// Expands a half-spectrum grid to all `channels` bins by conjugate
    /// mirroring: bin `M - m` receives the conjugate of bin `m`. The DC and
    /// Nyquist rows are their own mirror images, so their imaginary parts
    /// are dropped; the result is exactly conjugate-symmetric.
    pub fn mirror_to_full(&self, channels: usize) -> Result<CoefGrid> {
        check_half_shape(self.bins(), channels)?;
        let mut out = CoefGrid::zeros(channels, self.frames());
        for n in 0..self.frames() {
            for mm in 0..self.bins() {
                out.values[[mm, n]] = self.values[[mm, n]];
            }
            for mm in [0, channels / 2] {
                out.values[[mm, n]] = Complex64::new(self.values[[mm, n]].re, 0.0);
            }
            for mm in self.bins()..channels {
                out.values[[mm, n]] = self.values[[channels - mm, n]].conj();
            }
        }
        Ok(out)
    }
}

/// Expands a half-spectrum magnitude grid to all `channels` bins.
pub fn mirror_magnitude(half: &Array2<f64>, channels: usize) -> Result<Array2<f64>> {
    check_half_shape(half.nrows(), channels)?;
    let mut out = Array2::zeros((channels, half.ncols()).f());
    for n in 0..half.ncols() {
        for mm in 0..half.nrows() {
            out[[mm, n]] = half[[mm, n]];
        }
        for mm in half.nrows()..channels {
            out[[mm, n]] = half[[channels - mm, n]];
        }
    }
    Ok(out)
}

fn check_half_shape(rows: usize, channels: usize) -> Result<()> {
    if channels % 2 != 0 || rows != channels / 2 + 1 {
        return Err(Error::ShapeMismatch(format!(
            "expected M/2+1 rows for even M={channels}, got {rows}"
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn params_validation() {
        assert!(GaborParams::new(512, 64, 128).is_ok());
        assert!(GaborParams::new(0, 64, 128).is_err());
        assert!(GaborParams::new(500, 64, 128).is_err());
        assert!(GaborParams::new(512, 64, 100).is_err());
        // Redundancy below one.
        assert!(GaborParams::new(512, 256, 128).is_err());
        let p = GaborParams::new(512, 64, 128).unwrap();
        assert_eq!(p.frames(), 8);
        assert_eq!(p.freq_step(), 4);
        assert_eq!(p.redundancy(), 2.0);
        assert_eq!(p.half_bins().unwrap(), 65);
    }

    #[test]
    fn mirror_realifies_edges_and_roundtrips() {
        let mut half = CoefGrid::zeros(3, 2);
        for n in 0..2 {
            for m in 0..3 {
                half.values_mut()[[m, n]] = Complex64::new(m as f64, n as f64 + 1.0);
            }
        }
        let full = half.mirror_to_full(4).unwrap();
        assert_eq!(full.bins(), 4);
        assert_eq!(full.values()[[3, 0]], full.values()[[1, 0]].conj());
        // DC and Nyquist rows cannot carry an imaginary part in a real
        // signal's spectrum; the mirror drops it.
        for n in 0..2 {
            assert_eq!(full.values()[[0, n]], Complex64::new(0.0, 0.0));
            assert_eq!(full.values()[[2, n]], Complex64::new(2.0, 0.0));
        }
        // Interior bins survive the round trip; a second mirror of the
        // realified half grid is the identity.
        let back = full.to_half().unwrap();
        assert_eq!(back.values()[[1, 0]], half.values()[[1, 0]]);
        assert_eq!(back.mirror_to_full(4).unwrap(), full);
    }

    #[test]
    fn from_polar_matches_parts() {
        let s = Array2::from_shape_fn((2, 2), |(m, n)| (m + 2 * n) as f64);
        let phi = Array2::from_shape_fn((2, 2), |(m, n)| 0.3 * m as f64 - 0.7 * n as f64);
        let c = CoefGrid::from_polar(&s, &phi).unwrap();
        let mag = c.magnitude();
        for (idx, &v) in s.indexed_iter() {
            assert!((mag[idx] - v).abs() < 1e-12);
        }
    }
}

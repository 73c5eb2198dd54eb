//! Phase gradient estimation from the log-magnitude of a Gabor grid.
//!
//! For a Gaussian window with time-frequency ratio `lambda = gamma / L`,
//! the partial derivatives of the STFT phase are, up to scaling, the
//! cross partial derivatives of the log-magnitude: the time derivative of
//! `log s` gives the phase change across frequency and vice versa. The
//! functions here return those estimates pre-scaled to radians per single
//! grid step so that integration needs no further unit conversion.

use ndarray::Array2;
use ndarray::ShapeBuilder;
use std::f64::consts::TAU;

use crate::gabor::{GaborParams, Spectrum};
use crate::{Error, Result};

/// Default relative magnitude floor applied before taking logarithms.
pub const DEFAULT_REL_FLOOR: f64 = 1e-10;

/// Floored elementwise logarithm of a magnitude grid.
#[derive(Debug, Clone)]
pub struct LogMagnitude {
    values: Array2<f64>,
}

impl LogMagnitude {
    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }
}

/// Computes `log(max(s, rel_floor * max(s)))`.
///
/// The floor keeps the differences used by [`scaled_phase_gradient`] finite
/// on silent cells; phases there are randomized downstream anyway.
pub fn log_magnitude(magnitude: &Array2<f64>, rel_floor: f64) -> Result<LogMagnitude> {
    if !(rel_floor > 0.0 && rel_floor < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "relative floor must lie in (0, 1), got {rel_floor}"
        )));
    }
    let mut max = 0.0f64;
    for &v in magnitude.iter() {
        if !v.is_finite() || v < 0.0 {
            return Err(Error::NonFinite(format!("magnitude value {v}")));
        }
        max = max.max(v);
    }
    if max == 0.0 {
        return Err(Error::InvalidArgument(
            "magnitude grid is identically zero".into(),
        ));
    }
    let floor = rel_floor * max;
    Ok(LogMagnitude {
        values: magnitude.mapv(|v| v.max(floor).ln()),
    })
}

/// Phase gradient in radians per grid step.
///
/// `fgrad[[m, n]]` estimates the phase difference between bins `m` and
/// `m+1` (frequency direction); `tgrad[[m, n]]` between frames `n` and
/// `n+1` (time direction), including the `2 pi a m / M` advance of the
/// window-centered transform.
#[derive(Debug, Clone)]
pub struct PhaseGradient {
    pub fgrad: Array2<f64>,
    pub tgrad: Array2<f64>,
}

/// Estimates the scaled phase gradient by central differences of the
/// log-magnitude.
///
/// `gamma` is the time-frequency ratio `lambda * L` of the analysis window;
/// matched Gaussian analysis uses `gamma = a * M`, which makes both
/// prefactors one. Time differences wrap periodically. Frequency
/// differences wrap for [`Spectrum::Full`] grids and fall back to one-sided
/// differences at the DC and Nyquist rows of [`Spectrum::Half`] grids.
pub fn scaled_phase_gradient(
    slog: &LogMagnitude,
    params: &GaborParams,
    gamma: f64,
    spectrum: Spectrum,
) -> Result<PhaseGradient> {
    if !(gamma.is_finite() && gamma > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma must be positive and finite, got {gamma}"
        )));
    }
    let v = slog.values();
    let (rows, cols) = v.dim();
    let m = params.channels();
    let expected_rows = match spectrum {
        Spectrum::Full => m,
        Spectrum::Half => params.half_bins()?,
    };
    if rows != expected_rows || cols != params.frames() {
        return Err(Error::ShapeMismatch(format!(
            "log-magnitude {rows}x{cols} vs expected {expected_rows}x{} for {spectrum:?} spectrum",
            params.frames()
        )));
    }
    let a = params.hop();
    let am = (a * m) as f64;
    let f_scale = -gamma / am;
    let t_scale = am / gamma;

    let mut fgrad = Array2::zeros((rows, cols).f());
    let mut tgrad = Array2::zeros((rows, cols).f());
    for n in 0..cols {
        let next = (n + 1) % cols;
        let prev = (n + cols - 1) % cols;
        for mm in 0..rows {
            let dt = 0.5 * (v[[mm, next]] - v[[mm, prev]]);
            fgrad[[mm, n]] = f_scale * dt;

            let dw = match spectrum {
                Spectrum::Full => {
                    let up = (mm + 1) % rows;
                    let down = (mm + rows - 1) % rows;
                    0.5 * (v[[up, n]] - v[[down, n]])
                }
                Spectrum::Half => {
                    if mm == 0 {
                        v[[1, n]] - v[[0, n]]
                    } else if mm == rows - 1 {
                        v[[rows - 1, n]] - v[[rows - 2, n]]
                    } else {
                        0.5 * (v[[mm + 1, n]] - v[[mm - 1, n]])
                    }
                }
            };
            tgrad[[mm, n]] = t_scale * dw + TAU * (a * mm) as f64 / m as f64;
        }
    }
    Ok(PhaseGradient { fgrad, tgrad })
}

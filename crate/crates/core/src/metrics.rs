//! Reconstruction quality measures.
//!
//! All measures derive from the normalized Euclidean distance
//! `E(x, y) = ||x - y|| / ||x||`. Spectral convergence compares the target
//! magnitude with the magnitude of the analysis of the synthesized signal,
//! so it is invariant to the global phase shift and L2-irrelevant detail a
//! magnitude-only reconstruction cannot control.

use ndarray::Array2;
use num_complex::Complex64;
use serde::Serialize;

use crate::gabor::{dgt, idgt, CoefGrid, GaborParams, Window};
use crate::{Error, Result};

/// Floor applied to dB conversions so perfect matches stay numeric.
pub const DB_FLOOR: f64 = -400.0;

/// `20 log10(ratio)`, floored at [`DB_FLOOR`].
pub fn db_from_ratio(ratio: f64) -> f64 {
    if ratio > 0.0 {
        (20.0 * ratio.log10()).max(DB_FLOOR)
    } else {
        DB_FLOOR
    }
}

/// A relative error as a linear ratio and in dB.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ErrorMeasure {
    pub ratio: f64,
    pub db: f64,
}

impl ErrorMeasure {
    fn from_ratio(ratio: f64) -> Self {
        ErrorMeasure {
            ratio,
            db: db_from_ratio(ratio),
        }
    }
}

fn norms<I>(pairs: I) -> (f64, f64)
where
    I: Iterator<Item = (f64, f64)>,
{
    let mut diff = 0.0;
    let mut reference = 0.0;
    for (x, y) in pairs {
        diff += (x - y) * (x - y);
        reference += x * x;
    }
    (diff.sqrt(), reference.sqrt())
}

fn measure(diff: f64, reference: f64) -> Result<ErrorMeasure> {
    if !diff.is_finite() || !reference.is_finite() {
        return Err(Error::NonFinite("error norms".into()));
    }
    if reference == 0.0 {
        return Err(Error::InvalidArgument(
            "relative error against an all-zero reference".into(),
        ));
    }
    Ok(ErrorMeasure::from_ratio(diff / reference))
}

/// Relative error `||x - y|| / ||x||` of real vectors.
pub fn relative_error_real(x: &[f64], y: &[f64]) -> Result<ErrorMeasure> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "lengths {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let (d, r) = norms(x.iter().zip(y).map(|(&a, &b)| (a, b)));
    measure(d, r)
}

/// Relative error of complex vectors.
pub fn relative_error_complex(x: &[Complex64], y: &[Complex64]) -> Result<ErrorMeasure> {
    if x.len() != y.len() {
        return Err(Error::ShapeMismatch(format!(
            "lengths {} vs {}",
            x.len(),
            y.len()
        )));
    }
    let mut diff = 0.0;
    let mut reference = 0.0;
    for (a, b) in x.iter().zip(y) {
        diff += (a - b).norm_sqr();
        reference += a.norm_sqr();
    }
    measure(diff.sqrt(), reference.sqrt())
}

/// Relative error of real grids.
pub fn grid_relative_error(x: &Array2<f64>, y: &Array2<f64>) -> Result<ErrorMeasure> {
    if x.dim() != y.dim() {
        return Err(Error::ShapeMismatch(format!(
            "grids {:?} vs {:?}",
            x.dim(),
            y.dim()
        )));
    }
    let (d, r) = norms(x.iter().zip(y.iter()).map(|(&a, &b)| (a, b)));
    measure(d, r)
}

/// Spectral convergence: relative error between the target magnitude and
/// the magnitude of `dgt(idgt(c))`, both over the full spectrum.
pub fn spectral_convergence(
    target: &Array2<f64>,
    c: &CoefGrid,
    analysis: &Window,
    synthesis: &Window,
    params: &GaborParams,
) -> Result<ErrorMeasure> {
    let projected = project_grid(c, analysis, synthesis, params)?;
    grid_relative_error(target, &projected.magnitude())
}

/// Squared relative distance between a grid and its consistent projection,
/// `E(c, dgt(idgt(c)))^2`. Zero exactly when some signal has `c` as its
/// transform.
pub fn inconsistency(
    c: &CoefGrid,
    analysis: &Window,
    synthesis: &Window,
    params: &GaborParams,
) -> Result<f64> {
    let projected = project_grid(c, analysis, synthesis, params)?;
    let m = relative_error_complex(
        c.values().as_slice_memory_order().ok_or_else(|| {
            Error::ShapeMismatch("non-contiguous coefficient grid".into())
        })?,
        projected.values().as_slice_memory_order().ok_or_else(|| {
            Error::ShapeMismatch("non-contiguous coefficient grid".into())
        })?,
    )?;
    Ok(m.ratio * m.ratio)
}

fn project_grid(
    c: &CoefGrid,
    analysis: &Window,
    synthesis: &Window,
    params: &GaborParams,
) -> Result<CoefGrid> {
    let signal = idgt(c, synthesis, params)?;
    dgt(&signal, analysis, params)
}

/// The full set of quality measures for one reconstruction.
///
/// `e` compares signals directly and is sensitive to the global phase shift
/// a magnitude-only method cannot recover, so `c` (spectral convergence) is
/// the headline number; `e` is reported for completeness.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MetricReport {
    pub e: f64,
    pub e_db: f64,
    pub c: f64,
    pub c_db: f64,
    pub inconsistency: f64,
}

impl MetricReport {
    pub fn new(signal_error: ErrorMeasure, convergence: ErrorMeasure, inconsistency: f64) -> Self {
        MetricReport {
            e: signal_error.ratio,
            e_db: signal_error.db,
            c: convergence.ratio,
            c_db: convergence.db,
            inconsistency,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gabor::{canonical_dual, dgt_real, WindowKind};

    #[test]
    fn hand_computed_relative_error() {
        // x = (3, 4), y = (0, 5): ||x - y|| = sqrt(10), ||x|| = 5.
        let m = relative_error_real(&[3.0, 4.0], &[0.0, 5.0]).unwrap();
        assert!((m.ratio - 10.0f64.sqrt() / 5.0).abs() < 1e-15);
        assert!((m.db - 20.0 * (10.0f64.sqrt() / 5.0).log10()).abs() < 1e-12);
    }

    #[test]
    fn perfect_match_reports_floor() {
        let m = relative_error_real(&[1.0, 2.0], &[1.0, 2.0]).unwrap();
        assert_eq!(m.ratio, 0.0);
        assert_eq!(m.db, DB_FLOOR);
    }

    #[test]
    fn zero_reference_is_rejected() {
        assert!(relative_error_real(&[0.0, 0.0], &[1.0, 0.0]).is_err());
        assert!(relative_error_real(&[1.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn complex_error_matches_manual_norm() {
        let x = [Complex64::new(1.0, 1.0), Complex64::new(0.0, -2.0)];
        let y = [Complex64::new(1.0, 0.0), Complex64::new(0.0, -2.0)];
        let m = relative_error_complex(&x, &y).unwrap();
        assert!((m.ratio - 1.0 / 6.0f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn consistent_grid_has_tiny_inconsistency() {
        let p = GaborParams::new(256, 8, 32).unwrap();
        let w = Window::new(WindowKind::Gauss, &p, None, None).unwrap();
        let d = canonical_dual(&w, &p).unwrap();
        let f: Vec<f64> = (0..256).map(|l| (0.21 * l as f64).sin()).collect();
        let c = dgt_real(&f, &w, &p).unwrap();
        let r = inconsistency(&c, &w, &d, &p).unwrap();
        assert!(r < 1e-24, "inconsistency {r}");
        let sc = spectral_convergence(&c.magnitude(), &c, &w, &d, &p).unwrap();
        assert!(sc.db < -200.0, "spectral convergence {}", sc.db);
    }
}

//! Reference phase reconstruction baselines: SPSI and (fast) Griffin-Lim.

use ndarray::Array2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::TAU;
use std::time::Instant;

use crate::gabor::{dgt, dgt_real, idgt, CoefGrid, GaborParams, Spectrum, Window};
use crate::metrics::db_from_ratio;
use crate::pghi::PhaseEstimate;
use crate::{Error, Result};

/// Initial phase for the Griffin-Lim family.
#[derive(Debug, Clone)]
pub enum GlaInit {
    /// All-zero phase.
    Zero,
    /// I.i.d. uniform phases from the given seed.
    Random(u64),
    /// Warm start from an existing phase grid.
    Warm(Array2<f64>),
}

/// Griffin-Lim configuration. `alpha` is the momentum coefficient of the
/// fast variant and is ignored by [`gla`].
#[derive(Debug, Clone)]
pub struct GlaConfig {
    pub max_iter: usize,
    pub alpha: f64,
    pub init: GlaInit,
}

impl Default for GlaConfig {
    fn default() -> Self {
        GlaConfig {
            max_iter: 100,
            alpha: 0.99,
            init: GlaInit::Zero,
        }
    }
}

/// Per-iteration progress of an iterative reconstruction.
///
/// `c_db[k]` is the spectral convergence (in dB) of the iterate after
/// `k + 1` iterations; `seconds[k]` is the wall-clock cost of iteration
/// `k + 1` alone. Metric evaluation reuses the projection computed by the
/// following iteration, so timings reflect the algorithm itself.
#[derive(Debug, Clone, Default)]
pub struct IterTrace {
    pub c_db: Vec<f64>,
    pub seconds: Vec<f64>,
}

/// Single-pass spectral peak phase integration.
///
/// Each column is segmented into peaks and their regions of influence
/// (down to the surrounding valleys). Peak frequencies are refined by
/// quadratic interpolation of the log-magnitude around the peak bin; the
/// peak phase advances from the previous frame by `2 pi a m0 / M` and the
/// whole region is locked to it. Bins outside any region keep the previous
/// frame's phase, so silence stays at phase zero. The sweep is causal:
/// frame `n` depends only on frames `0..=n`.
pub fn spsi(magnitude: &Array2<f64>, params: &GaborParams) -> Result<PhaseEstimate> {
    let (rows, cols) = magnitude.dim();
    if cols != params.frames() {
        return Err(Error::ShapeMismatch(format!(
            "magnitude has {cols} frames, lattice {}",
            params.frames()
        )));
    }
    if magnitude.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::NonFinite("magnitude grid".into()));
    }
    let advance = TAU * params.hop() as f64 / params.channels() as f64;

    let mut phase = Array2::zeros((rows, cols));
    let mut prev = vec![0.0f64; rows];
    let mut cur = vec![0.0f64; rows];
    for n in 0..cols {
        let col = magnitude.column(n);
        cur.copy_from_slice(&prev);
        for m in 0..rows {
            let here = col[m];
            let left_ok = m == 0 || col[m - 1] < here;
            let right_ok = m + 1 == rows || col[m + 1] <= here;
            if !(here > 0.0 && left_ok && right_ok) {
                continue;
            }
            let delta = if m == 0 || m + 1 == rows {
                0.0
            } else {
                quad_peak_offset(col[m - 1], here, col[m + 1])
            };
            let peak_phase = prev[m] + advance * (m as f64 + delta);
            cur[m] = peak_phase;
            let mut down = m;
            while down > 0 && col[down - 1] < col[down] {
                down -= 1;
                cur[down] = peak_phase;
            }
            let mut up = m;
            while up + 1 < rows && col[up + 1] < col[up] {
                up += 1;
                cur[up] = peak_phase;
            }
        }
        for m in 0..rows {
            phase[[m, n]] = cur[m];
        }
        prev.copy_from_slice(&cur);
    }
    Ok(PhaseEstimate {
        phase,
        random_set: Array2::from_elem((rows, cols), false),
    })
}

/// Sub-bin offset of a parabola fitted to the log-magnitude triple around a
/// peak. Returns 0 for degenerate (flat or zero) neighborhoods.
fn quad_peak_offset(left: f64, center: f64, right: f64) -> f64 {
    if left <= 0.0 || right <= 0.0 || center <= 0.0 {
        return 0.0;
    }
    let (a, b, c) = (left.ln(), center.ln(), right.ln());
    let denom = a - 2.0 * b + c;
    if denom >= 0.0 || !denom.is_finite() {
        return 0.0;
    }
    (0.5 * (a - c) / denom).clamp(-0.5, 0.5)
}

/// Plain Griffin-Lim: alternating projection onto the set of consistent
/// grids (analysis of a synthesis) and the set of grids with the target
/// magnitude. Returns the final phase and the per-iteration trace.
pub fn gla(
    magnitude: &Array2<f64>,
    analysis: &Window,
    synthesis: &Window,
    params: &GaborParams,
    spectrum: Spectrum,
    config: &GlaConfig,
) -> Result<(PhaseEstimate, IterTrace)> {
    let mut c = initial_grid(magnitude, &config.init, params, spectrum)?;
    let mut trace = IterTrace::default();
    for iter in 0..config.max_iter {
        let started = Instant::now();
        let t = project(&c, analysis, synthesis, params, spectrum)?;
        if iter > 0 {
            trace.c_db.push(spectral_c_db(magnitude, &t, params, spectrum)?);
        }
        apply_magnitude(&mut c, magnitude, &t);
        trace.seconds.push(started.elapsed().as_secs_f64());
    }
    finish_trace(&mut trace, &c, magnitude, analysis, synthesis, params, spectrum)?;
    Ok((phase_estimate(&c), trace))
}

/// Fast Griffin-Lim: Griffin-Lim with momentum `alpha` on the projected
/// grid. `alpha = 0` reproduces [`gla`] exactly.
pub fn fgla(
    magnitude: &Array2<f64>,
    analysis: &Window,
    synthesis: &Window,
    params: &GaborParams,
    spectrum: Spectrum,
    config: &GlaConfig,
) -> Result<(PhaseEstimate, IterTrace)> {
    if !(config.alpha.is_finite() && config.alpha >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "momentum must be finite and non-negative, got {}",
            config.alpha
        )));
    }
    let alpha = config.alpha;
    let mut c = initial_grid(magnitude, &config.init, params, spectrum)?;
    let mut prev_t: Option<Array2<Complex64>> = None;
    let mut trace = IterTrace::default();
    for iter in 0..config.max_iter {
        let started = Instant::now();
        let t = project(&c, analysis, synthesis, params, spectrum)?;
        if iter > 0 {
            trace.c_db.push(spectral_c_db(magnitude, &t, params, spectrum)?);
        }
        if alpha == 0.0 {
            apply_magnitude(&mut c, magnitude, &t);
        } else {
            let accelerated = match &prev_t {
                None => t.clone(),
                Some(p) => {
                    let mut acc = t.clone();
                    ndarray::Zip::from(&mut acc).and(p).for_each(|acc_v, &p_v| {
                        *acc_v += alpha * (*acc_v - p_v);
                    });
                    acc
                }
            };
            apply_magnitude(&mut c, magnitude, &accelerated);
            prev_t = Some(t);
        }
        trace.seconds.push(started.elapsed().as_secs_f64());
    }
    finish_trace(&mut trace, &c, magnitude, analysis, synthesis, params, spectrum)?;
    Ok((phase_estimate(&c), trace))
}

/// One analysis-of-synthesis round trip in the grid domain.
fn project(
    c: &Array2<Complex64>,
    analysis: &Window,
    synthesis: &Window,
    params: &GaborParams,
    spectrum: Spectrum,
) -> Result<Array2<Complex64>> {
    match spectrum {
        Spectrum::Full => {
            let signal = idgt(&CoefGrid::from_array(c.clone()), synthesis, params)?;
            Ok(dgt(&signal, analysis, params)?.into_values())
        }
        Spectrum::Half => {
            let full = CoefGrid::from_array(c.clone()).mirror_to_full(params.channels())?;
            let signal = idgt(&full, synthesis, params)?;
            let real: Vec<f64> = signal.into_iter().map(|z| z.re).collect();
            Ok(dgt_real(&real, analysis, params)?.to_half()?.into_values())
        }
    }
}

fn initial_grid(
    magnitude: &Array2<f64>,
    init: &GlaInit,
    params: &GaborParams,
    spectrum: Spectrum,
) -> Result<Array2<Complex64>> {
    let (rows, cols) = magnitude.dim();
    let expected_rows = match spectrum {
        Spectrum::Full => params.channels(),
        Spectrum::Half => params.half_bins()?,
    };
    if rows != expected_rows || cols != params.frames() {
        return Err(Error::ShapeMismatch(format!(
            "magnitude {rows}x{cols} vs expected {expected_rows}x{}",
            params.frames()
        )));
    }
    if magnitude.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::NonFinite("magnitude grid".into()));
    }
    let phase = match init {
        GlaInit::Zero => Array2::zeros((rows, cols)),
        GlaInit::Random(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(*seed);
            let mut phi = Array2::zeros((rows, cols));
            for n in 0..cols {
                for m in 0..rows {
                    phi[[m, n]] = rng.gen_range(0.0..TAU);
                }
            }
            phi
        }
        GlaInit::Warm(phi) => {
            if phi.dim() != magnitude.dim() {
                return Err(Error::ShapeMismatch(format!(
                    "warm phase {:?} vs magnitude {:?}",
                    phi.dim(),
                    magnitude.dim()
                )));
            }
            phi.clone()
        }
    };
    Ok(CoefGrid::from_polar(magnitude, &phase)?.into_values())
}

/// `c = magnitude * t / |t|`, with unit phase where `t` vanishes.
fn apply_magnitude(c: &mut Array2<Complex64>, magnitude: &Array2<f64>, t: &Array2<Complex64>) {
    ndarray::Zip::from(c)
        .and(magnitude)
        .and(t)
        .for_each(|c_v, &s, &t_v| {
            let norm = t_v.norm();
            *c_v = if norm == 0.0 {
                Complex64::new(s, 0.0)
            } else {
                t_v * (s / norm)
            };
        });
}

fn phase_estimate(c: &Array2<Complex64>) -> PhaseEstimate {
    PhaseEstimate {
        phase: c.mapv(|z| z.arg()),
        random_set: Array2::from_elem(c.dim(), false),
    }
}

/// Spectral convergence of a projected grid against the target magnitude,
/// in dB, measured over the full spectrum.
fn spectral_c_db(
    target: &Array2<f64>,
    projected: &Array2<Complex64>,
    params: &GaborParams,
    spectrum: Spectrum,
) -> Result<f64> {
    let (t_full, p_mag) = match spectrum {
        Spectrum::Full => (target.clone(), projected.mapv(|z| z.norm())),
        Spectrum::Half => (
            crate::gabor::mirror_magnitude(target, params.channels())?,
            crate::gabor::mirror_magnitude(&projected.mapv(|z| z.norm()), params.channels())?,
        ),
    };
    let num: f64 = t_full
        .iter()
        .zip(p_mag.iter())
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    let den: f64 = t_full.iter().map(|&a| a * a).sum::<f64>().sqrt();
    if den == 0.0 {
        return Err(Error::InvalidArgument("target magnitude is zero".into()));
    }
    Ok(db_from_ratio(num / den))
}

/// Appends the final iterate's convergence with one extra projection.
fn finish_trace(
    trace: &mut IterTrace,
    c: &Array2<Complex64>,
    magnitude: &Array2<f64>,
    analysis: &Window,
    synthesis: &Window,
    params: &GaborParams,
    spectrum: Spectrum,
) -> Result<()> {
    if trace.seconds.len() > trace.c_db.len() {
        let t = project(c, analysis, synthesis, params, spectrum)?;
        trace.c_db.push(spectral_c_db(magnitude, &t, params, spectrum)?);
    }
    debug_assert_eq!(trace.c_db.len(), trace.seconds.len());
    Ok(())
}

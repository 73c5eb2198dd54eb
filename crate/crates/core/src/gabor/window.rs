use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use super::GaborParams;
use crate::{Error, Result};

/// Analysis window families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum WindowKind {
    /// Periodized Gaussian, full signal length.
    Gauss,
    /// Periodized Gaussian restricted to a centered gate.
    TruncGauss,
    /// Periodic Hann of length `support`.
    Hann,
    /// Periodic Hamming of length `support`.
    Hamming,
}

impl WindowKind {
    pub const ALL: [WindowKind; 4] = [
        WindowKind::Gauss,
        WindowKind::TruncGauss,
        WindowKind::Hann,
        WindowKind::Hamming,
    ];

    pub fn as_str(&self) -> &'static str {
        match self {
            WindowKind::Gauss => "gauss",
            WindowKind::TruncGauss => "truncgauss",
            WindowKind::Hann => "hann",
            WindowKind::Hamming => "hamming",
        }
    }
}

impl fmt::Display for WindowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for WindowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gauss" => Ok(WindowKind::Gauss),
            "truncgauss" => Ok(WindowKind::TruncGauss),
            "hann" => Ok(WindowKind::Hann),
            "hamming" => Ok(WindowKind::Hamming),
            other => Err(Error::InvalidArgument(format!(
                "unknown window kind '{other}' (expected gauss|truncgauss|hann|hamming)"
            ))),
        }
    }
}

/// Evaluates the length-`len` periodized Gaussian at sample `l` with
/// time-frequency ratio `lambda`, summing the two nearest period images
/// (`k in {-1, 0}`). The prefactor `(lambda*len/2)^(-1/4)` normalizes the
/// continuous-time function to unit energy; [`Window::gauss`] rescales the
/// result so the peak sample is 1.
pub fn periodized_gauss(l: usize, len: usize, lambda: f64) -> f64 {
    let gl = lambda * len as f64;
    let x = l as f64;
    let ll = len as f64;
    (gl / 2.0).powf(-0.25) * ((-PI * x * x / gl).exp() + (-PI * (x - ll) * (x - ll) / gl).exp())
}

/// Reference evaluation of the periodized Gaussian summing image terms
/// `k in [-half_width, half_width]`. Used to validate the two-term
/// production sum; the tail images only matter for very wide windows.
pub fn periodized_gauss_ref(l: usize, len: usize, lambda: f64, half_width: i64) -> f64 {
    let gl = lambda * len as f64;
    let mut acc = 0.0;
    for k in -half_width..=half_width {
        let x = l as f64 + k as f64 * len as f64;
        acc += (-PI * x * x / gl).exp();
    }
    (gl / 2.0).powf(-0.25) * acc
}

/// Real analysis window of full signal length with the peak at index 0.
///
/// Samples are peak-normalized (`g[0] == 1`) and symmetric about index 0
/// modulo `L`, up to the single unpaired edge sample of even-length
/// Hamming gates, so the DFT of the window is real (exactly for Gaussian
/// and Hann kinds). Canonical dual windows reuse this type but carry
/// whatever scale the frame inversion produces.
#[derive(Debug, Clone, PartialEq)]
pub struct Window {
    samples: Vec<f64>,
    kind: WindowKind,
    lambda: f64,
    support: usize,
}

impl Window {
    /// Builds a window of the given kind. `support` and `lambda` fall back
    /// to per-kind defaults when `None`: full length and `a*M/L` for
    /// Gaussian kinds, `M` samples for the compactly supported kinds.
    pub fn new(
        kind: WindowKind,
        params: &GaborParams,
        support: Option<usize>,
        lambda: Option<f64>,
    ) -> Result<Window> {
        let lattice_lambda = params.hop() as f64 * params.channels() as f64 / params.signal_len() as f64;
        match kind {
            WindowKind::Gauss => Window::gauss(params, lambda.unwrap_or(lattice_lambda)),
            WindowKind::TruncGauss => Window::trunc_gauss(
                params,
                support.unwrap_or(params.channels()),
                lambda.unwrap_or(lattice_lambda),
            ),
            WindowKind::Hann => Window::hann(
                params,
                support.unwrap_or_else(|| matched_support(params, 2.08)),
            ),
            WindowKind::Hamming => Window::hamming(
                params,
                support.unwrap_or_else(|| matched_support(params, 1.90)),
            ),
        }
    }

    /// Full-length periodized Gaussian with time-frequency ratio `lambda`.
    pub fn gauss(params: &GaborParams, lambda: f64) -> Result<Window> {
        check_lambda(lambda)?;
        let len = params.signal_len();
        let samples: Vec<f64> = (0..len).map(|l| periodized_gauss(l, len, lambda)).collect();
        Window::normalized(samples, WindowKind::Gauss, lambda, len)
    }

    /// Periodized Gaussian cut to a centered gate of `support` samples.
    pub fn trunc_gauss(params: &GaborParams, support: usize, lambda: f64) -> Result<Window> {
        check_lambda(lambda)?;
        let len = params.signal_len();
        check_support(support, len)?;
        let mut samples = vec![0.0; len];
        for off in gate_range(support) {
            let idx = off.rem_euclid(len as i64) as usize;
            samples[idx] = periodized_gauss(idx, len, lambda);
        }
        Window::normalized(samples, WindowKind::TruncGauss, lambda, support)
    }

    /// Periodic (DFT-even) Hann of length `support`, peak at index 0.
    pub fn hann(params: &GaborParams, support: usize) -> Result<Window> {
        Window::cosine(params, support, 0.5, 0.5, WindowKind::Hann)
    }

    /// Periodic (DFT-even) Hamming of length `support`, peak at index 0.
    pub fn hamming(params: &GaborParams, support: usize) -> Result<Window> {
        Window::cosine(params, support, 0.54, 0.46, WindowKind::Hamming)
    }

    fn cosine(
        params: &GaborParams,
        support: usize,
        c0: f64,
        c1: f64,
        kind: WindowKind,
    ) -> Result<Window> {
        let len = params.signal_len();
        check_support(support, len)?;
        let mut samples = vec![0.0; len];
        for off in gate_range(support) {
            let idx = off.rem_euclid(len as i64) as usize;
            samples[idx] = c0 + c1 * (2.0 * PI * off as f64 / support as f64).cos();
        }
        // Effective time-frequency ratio fitted from the width at half
        // height, for callers that want a window-matched gradient scale.
        let x = ((0.5 - c0) / c1).clamp(-1.0, 1.0).acos();
        let width = support as f64 * x / PI;
        let lambda = width * width * PI / (4.0 * std::f64::consts::LN_2) / len as f64;
        Window::normalized(samples, kind, lambda, support)
    }

    fn normalized(mut samples: Vec<f64>, kind: WindowKind, lambda: f64, support: usize) -> Result<Window> {
        let peak = samples[0];
        if !peak.is_finite() || peak <= 0.0 {
            return Err(Error::InvalidWindow(format!(
                "degenerate peak sample {peak}"
            )));
        }
        for s in &mut samples {
            *s /= peak;
        }
        Window::from_samples(samples, kind, lambda, support)
    }

    /// Wraps precomputed samples without rescaling. Used for canonical dual
    /// windows, which keep the source window's metadata.
    pub(crate) fn from_samples(
        samples: Vec<f64>,
        kind: WindowKind,
        lambda: f64,
        support: usize,
    ) -> Result<Window> {
        if samples.is_empty() {
            return Err(Error::InvalidWindow("empty sample vector".into()));
        }
        if samples.iter().any(|s| !s.is_finite()) {
            return Err(Error::NonFinite("window samples".into()));
        }
        Ok(Window {
            samples,
            kind,
            lambda,
            support,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn kind(&self) -> WindowKind {
        self.kind
    }

    /// Time-frequency ratio: the construction parameter for Gaussian kinds,
    /// a half-height width fit for the cosine kinds.
    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn support(&self) -> usize {
        self.support
    }

    /// Signed offset range `[lo, hi]` around index 0 covering every nonzero
    /// sample. Transforms only sweep this range; for wide Gaussians the far
    /// tail underflows to exact zeros, so skipping it is exact.
    pub fn active_span(&self) -> (i64, i64) {
        let len = self.samples.len() as i64;
        let mut lo = 0i64;
        let mut hi = 0i64;
        for (idx, &v) in self.samples.iter().enumerate() {
            if v != 0.0 {
                let off = if (idx as i64) <= len / 2 {
                    idx as i64
                } else {
                    idx as i64 - len
                };
                lo = lo.min(off);
                hi = hi.max(off);
            }
        }
        (lo, hi)
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !lambda.is_finite() || lambda <= 0.0 {
        return Err(Error::InvalidWindow(format!(
            "time-frequency ratio must be positive and finite, got {lambda}"
        )));
    }
    Ok(())
}

/// Default cosine-window length, proportional to `sqrt(a*M)`. The factor is
/// chosen so that phase estimation driven by the default gradient scale `a*M`
/// is most accurate for the window it runs on; an explicit `support` overrides
/// this choice.
fn matched_support(params: &GaborParams, factor: f64) -> usize {
    let gl = (params.hop() * params.channels()) as f64;
    let support = (factor * gl.sqrt()).round() as usize;
    support.clamp(2, params.signal_len())
}

fn check_support(support: usize, len: usize) -> Result<()> {
    if support == 0 || support > len {
        return Err(Error::InvalidWindow(format!(
            "support {support} outside 1..={len}"
        )));
    }
    Ok(())
}

/// Centered gate offsets for an `s`-sample window: `-floor(s/2) .. s - floor(s/2)`.
fn gate_range(support: usize) -> std::ops::Range<i64> {
    let lo = -((support / 2) as i64);
    lo..lo + support as i64
}

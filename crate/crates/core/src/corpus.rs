//! Deterministic synthetic benchmark corpus.
//!
//! Real recordings are deliberately avoided so that every benchmark run is
//! reproducible from code alone. The generators cover the signal families
//! phase-reconstruction algorithms react to differently: harmonic voices
//! with formant structure, pitch glides and syllable transients; plucked
//! and struck tones with decaying partials; sustained chords; percussion;
//! wideband noise; and an exactly bin-aligned tone-plus-impulse pattern.
//!
//! Every item renders from a fixed per-item seed, so repeated runs produce
//! byte-identical WAV files.

use std::f64::consts::TAU;
use std::path::{Path, PathBuf};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::HarnessError;
use crate::wav::write_wav;

pub const SAMPLE_RATE: u32 = 16_000;

/// 1.536 s at 16 kHz; divisible by the lattices of both benchmark presets.
pub const DEFAULT_LEN: usize = 24_576;

/// Broad signal family, used to select benchmark subsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalClass {
    Speech,
    Music,
    Noise,
    Synthetic,
}

#[derive(Debug, Clone, Copy)]
enum Builder {
    Voice,
    Pluck,
    Bell,
    Pad,
    Kit,
    Noise,
    Tones,
}

/// One corpus entry: a name, its class, and a deterministic generator.
#[derive(Debug, Clone, Copy)]
pub struct CorpusItem {
    pub name: &'static str,
    pub class: SignalClass,
    seed: u64,
    len: usize,
    builder: Builder,
}

static ITEMS: [CorpusItem; 10] = [
    CorpusItem {
        name: "01_voice_a",
        class: SignalClass::Speech,
        seed: 0xA11CE,
        len: DEFAULT_LEN,
        builder: Builder::Voice,
    },
    CorpusItem {
        name: "02_voice_b",
        class: SignalClass::Speech,
        seed: 0xB0B,
        len: DEFAULT_LEN,
        builder: Builder::Voice,
    },
    CorpusItem {
        name: "03_voice_c",
        class: SignalClass::Speech,
        seed: 0xCA51,
        len: DEFAULT_LEN,
        builder: Builder::Voice,
    },
    // Length is not a lattice multiple on purpose: exercises padding.
    CorpusItem {
        name: "04_voice_d",
        class: SignalClass::Speech,
        seed: 0xD0E,
        len: 24_000,
        builder: Builder::Voice,
    },
    CorpusItem {
        name: "05_pluck",
        class: SignalClass::Music,
        seed: 0x51,
        len: DEFAULT_LEN,
        builder: Builder::Pluck,
    },
    CorpusItem {
        name: "06_bell",
        class: SignalClass::Music,
        seed: 0x52,
        len: DEFAULT_LEN,
        builder: Builder::Bell,
    },
    CorpusItem {
        name: "07_pad",
        class: SignalClass::Music,
        seed: 0x53,
        len: DEFAULT_LEN,
        builder: Builder::Pad,
    },
    CorpusItem {
        name: "08_kit",
        class: SignalClass::Music,
        seed: 0x54,
        len: DEFAULT_LEN,
        builder: Builder::Kit,
    },
    CorpusItem {
        name: "09_noise",
        class: SignalClass::Noise,
        seed: 0x55,
        len: DEFAULT_LEN,
        builder: Builder::Noise,
    },
    CorpusItem {
        name: "10_tones",
        class: SignalClass::Synthetic,
        seed: 0x56,
        len: DEFAULT_LEN,
        builder: Builder::Tones,
    },
];

/// The fixed corpus, in output order.
pub fn items() -> &'static [CorpusItem] {
    &ITEMS
}

impl CorpusItem {
    /// Renders the signal; identical output on every call.
    pub fn render(&self) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let mut signal = match self.builder {
            Builder::Voice => voice(&mut rng, self.len),
            Builder::Pluck => pluck(&mut rng, self.len),
            Builder::Bell => bell(&mut rng, self.len),
            Builder::Pad => pad(&mut rng, self.len),
            Builder::Kit => kit(&mut rng, self.len),
            Builder::Noise => noise(&mut rng, self.len),
            Builder::Tones => tones(&mut rng, self.len),
        };
        normalize(&mut signal, 0.6);
        signal
    }
}

/// Writes every item as `<name>.wav` into `dir`, returning the paths in
/// corpus order (which is also lexicographic order of the file names).
pub fn write_corpus(dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir).map_err(|e| crate::error::io(dir, e))?;
    let mut paths = Vec::with_capacity(ITEMS.len());
    for item in &ITEMS {
        let path = dir.join(format!("{}.wav", item.name));
        write_wav(&path, &item.render(), SAMPLE_RATE)?;
        paths.push(path);
    }
    Ok(paths)
}

fn fs() -> f64 {
    SAMPLE_RATE as f64
}

fn normalize(signal: &mut [f64], peak: f64) {
    let max = signal.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if max > 0.0 {
        let scale = peak / max;
        for v in signal.iter_mut() {
            *v *= scale;
        }
    }
}

fn lowpass_in_place(x: &mut [f64], cutoff_hz: f64) {
    let c = (-TAU * cutoff_hz / fs()).exp();
    let mut y = 0.0;
    for v in x.iter_mut() {
        y = c * y + (1.0 - c) * *v;
        *v = y;
    }
}

fn highpass_in_place(x: &mut [f64], cutoff_hz: f64) {
    let c = (-TAU * cutoff_hz / fs()).exp();
    let mut y = 0.0;
    for v in x.iter_mut() {
        y = c * y + (1.0 - c) * *v;
        *v -= y;
    }
}

/// Raised-cosine bump on [0, 1], zero outside.
fn bump(t: f64) -> f64 {
    if (0.0..=1.0).contains(&t) {
        0.5 - 0.5 * (TAU * t).cos()
    } else {
        0.0
    }
}

fn white(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-1.0..1.0)).collect()
}

/// Noise lowpassed twice and rescaled to unit peak: a smooth random
/// modulation track for jitter and shimmer.
fn slow_noise(rng: &mut ChaCha8Rng, len: usize, cutoff_hz: f64) -> Vec<f64> {
    let mut n = white(rng, len);
    lowpass_in_place(&mut n, cutoff_hz);
    lowpass_in_place(&mut n, cutoff_hz);
    let max = n.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if max > 0.0 {
        for v in n.iter_mut() {
            *v /= max;
        }
    }
    n
}

/// Single-pole resonance magnitude used as a formant gain curve.
fn lorentz(f: f64, center: f64, bandwidth: f64) -> f64 {
    1.0 / (1.0 + ((f - center) / bandwidth).powi(2))
}

/// Harmonic voice: pitch-glided harmonics shaped by random formants, grouped
/// into syllables, with plosive onsets, fricative bursts, cycle-level pitch
/// jitter and amplitude shimmer, and a breath-noise floor.
fn voice(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let f0_base: f64 = rng.gen_range(105.0..190.0);
    let jitter = slow_noise(rng, len, 28.0);
    let shimmer = slow_noise(rng, len, 16.0);
    let syllables = 5;
    let slot = len / syllables;

    for k in 0..syllables {
        let start = k * slot + rng.gen_range(0..slot / 5);
        let dur = ((slot as f64) * rng.gen_range(0.55..0.8)) as usize;
        let dur = dur.min(len - start);
        let amp = rng.gen_range(0.55..1.0);
        let f0_start = f0_base * (1.0 + rng.gen_range(-0.06..0.14));
        let f0_end = f0_start * rng.gen_range(0.82..1.04);
        let formants = [
            (rng.gen_range(320.0..850.0), 90.0),
            (rng.gen_range(950.0..2250.0), 130.0),
            (rng.gen_range(2400.0..3200.0), 180.0),
        ];
        let vib_rate = rng.gen_range(4.5..6.5);
        let vib_phase = rng.gen_range(0.0..TAU);

        let max_harmonic = (6800.0 / f0_start.max(f0_end)).floor() as usize;
        let weights: Vec<f64> = (1..=max_harmonic)
            .map(|h| {
                let f = h as f64 * 0.5 * (f0_start + f0_end);
                let formant_gain: f64 =
                    formants.iter().map(|&(c, b)| lorentz(f, c, b)).sum();
                let tilt = (400.0 / (400.0 + f)).sqrt();
                (0.08 + formant_gain) * tilt
            })
            .collect();

        // Plosive onset: a short lowpassed burst over the first pitch periods.
        if rng.gen_bool(0.7) {
            let burst_len = ((fs() * 0.010) as usize).min(len - start);
            let mut burst = white(rng, burst_len);
            lowpass_in_place(&mut burst, 3200.0);
            for (i, b) in burst.iter().enumerate() {
                let t = i as f64 / burst_len as f64;
                out[start + i] += 2.2 * amp * bump(t) * b;
            }
        }

        let mut phase = rng.gen_range(0.0..TAU);
        for i in 0..dur {
            let t = i as f64 / dur as f64;
            let secs = (start + i) as f64 / fs();
            let vibrato = 1.0
                + 0.008 * (TAU * vib_rate * secs + vib_phase).sin()
                + 0.012 * jitter[start + i];
            let f0 = (f0_start + (f0_end - f0_start) * t) * vibrato;
            phase += TAU * f0 / fs();
            let mut sample = 0.0;
            for (h, w) in weights.iter().enumerate() {
                sample += w * ((h + 1) as f64 * phase).sin();
            }
            out[start + i] += amp * bump(t) * (1.0 + 0.25 * shimmer[start + i]) * sample;
        }

        // Fricative burst at some syllable onsets.
        if rng.gen_bool(0.6) {
            let burst_len = (fs() * rng.gen_range(0.05..0.09)) as usize;
            let burst_start = start.saturating_sub(burst_len / 2);
            let burst_len = burst_len.min(len - burst_start);
            let mut burst = white(rng, burst_len);
            highpass_in_place(&mut burst, rng.gen_range(2200.0..3800.0));
            let burst_amp = rng.gen_range(0.6..1.4);
            for (i, b) in burst.iter().enumerate() {
                let t = i as f64 / burst_len as f64;
                out[burst_start + i] += burst_amp * bump(t) * b;
            }
        }
    }
    normalize(&mut out, 1.0);

    // Breath-noise floor keeps the spectrogram from being implausibly clean.
    let mut breath = white(rng, len);
    lowpass_in_place(&mut breath, 3500.0);
    for (o, b) in out.iter_mut().zip(&breath) {
        *o += 0.008 * b;
    }
    out
}

/// Plucked string notes: decaying, slightly inharmonic partial stacks, each
/// opened by a wideband pick transient and a low body thump.
fn pluck(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let scale = [110.0, 146.83, 164.81, 196.0, 220.0, 261.63];
    let onsets = [0.04, 0.42, 0.78, 1.12];
    for &onset in &onsets {
        let start = (onset * fs()) as usize;
        if start >= len {
            continue;
        }
        let f = scale[rng.gen_range(0..scale.len())] * if rng.gen_bool(0.3) { 2.0 } else { 1.0 };
        let amp = rng.gen_range(0.6..1.0);
        let tau0 = rng.gen_range(0.25..0.45);
        let b_inharmonic = 1.2e-4;
        let span = len - start;
        for h in 1..=24 {
            let fh = f * h as f64 * (1.0 + b_inharmonic * (h * h) as f64).sqrt();
            if fh > 7200.0 {
                break;
            }
            let tau = tau0 / (1.0 + 0.35 * (h - 1) as f64);
            let w = amp / h as f64;
            let phi = rng.gen_range(0.0..TAU);
            for i in 0..span {
                let t = i as f64 / fs();
                let attack = (t / 0.004).min(1.0);
                out[start + i] += w * attack * (-t / tau).exp() * (TAU * fh * t + phi).sin();
            }
        }

        // Pick transient and body thump at the onset.
        let click_len = ((0.006 * fs()) as usize).min(span);
        let mut click = white(rng, click_len);
        lowpass_in_place(&mut click, 7000.0);
        for (i, c) in click.iter().enumerate() {
            let t = i as f64 / click_len as f64;
            out[start + i] += 1.2 * amp * bump(t) * c;
        }
        let thump_len = ((0.03 * fs()) as usize).min(span);
        for i in 0..thump_len {
            let t = i as f64 / fs();
            out[start + i] += 0.5 * amp * (-t / 0.008).exp() * (TAU * 95.0 * t).sin();
        }
    }
    normalize(&mut out, 1.0);

    // Instrument-body noise floor, as on a close-miked recording.
    let mut hiss = white(rng, len);
    lowpass_in_place(&mut hiss, 6000.0);
    for (o, h) in out.iter_mut().zip(&hiss) {
        *o += 0.006 * h;
    }
    out
}

/// Struck bell: inharmonic partials with independent decay rates.
fn bell(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let ratios = [0.56, 0.92, 1.19, 1.71, 2.00, 2.74, 3.00, 3.76, 4.07];
    let mut out = vec![0.0; len];
    for &onset in &[0.06, 0.78] {
        let start = (onset * fs()) as usize;
        if start >= len {
            continue;
        }
        let f0 = rng.gen_range(380.0..540.0);
        let strike = rng.gen_range(0.7..1.0);
        let span = len - start;
        for (i, &r) in ratios.iter().enumerate() {
            let f = f0 * r;
            if f > 7200.0 {
                continue;
            }
            let amp = strike * rng.gen_range(0.4..1.0) / (1.0 + i as f64 / 3.0);
            let tau = rng.gen_range(0.35..1.1) / (1.0 + 0.3 * i as f64);
            let phi = rng.gen_range(0.0..TAU);
            for j in 0..span {
                let t = j as f64 / fs();
                let attack = (t / 0.002).min(1.0);
                out[start + j] += amp * attack * (-t / tau).exp() * (TAU * f * t + phi).sin();
            }
        }
    }
    normalize(&mut out, 1.0);

    // Room-noise floor under the ringing partials.
    let mut room = white(rng, len);
    lowpass_in_place(&mut room, 6000.0);
    for (o, r) in out.iter_mut().zip(&room) {
        *o += 0.006 * r;
    }
    out
}

/// Sustained chord of detuned harmonic stacks with vibrato. The notes enter
/// staggered, each opened by a soft breathy chiff.
fn pad(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let chord = [196.0, 246.94, 293.66, 392.0];
    let mut out = vec![0.0; len];
    let total = len as f64 / fs();
    for (k, &note) in chord.iter().enumerate() {
        let note_start = 0.05 + 0.16 * k as f64;
        for detune_cents in [-6.0, 0.0, 5.0] {
            let f_base = note * (2.0f64).powf(detune_cents / 1200.0);
            let vib_rate = rng.gen_range(4.0..6.0);
            let vib_phase = rng.gen_range(0.0..TAU);
            let amp = rng.gen_range(0.7..1.0);
            let mut phase = rng.gen_range(0.0..TAU);
            let weights: Vec<f64> = (1..=6).map(|h| 1.0 / (h as f64).powf(1.6)).collect();
            for i in 0..len {
                let secs = i as f64 / fs();
                let vibrato = 1.0 + 0.002 * (TAU * vib_rate * secs + vib_phase).sin();
                phase += TAU * f_base * vibrato / fs();
                let env = ((secs - note_start) / 0.3).clamp(0.0, 1.0)
                    * ((total - secs) / 0.3).min(1.0).max(0.0);
                let mut sample = 0.0;
                for (h, w) in weights.iter().enumerate() {
                    sample += w * ((h + 1) as f64 * phase).sin();
                }
                out[i] += amp * env * sample;
            }
        }

        // Chiff as the note enters.
        let s0 = (note_start * fs()) as usize;
        if s0 < len {
            let chiff_len = ((0.04 * fs()) as usize).min(len - s0);
            let mut chiff = white(rng, chiff_len);
            lowpass_in_place(&mut chiff, 2800.0);
            let a = rng.gen_range(2.6..3.4);
            for (i, c) in chiff.iter().enumerate() {
                let t = i as f64 / chiff_len as f64;
                out[s0 + i] += a * bump(t) * c;
            }
        }
    }
    normalize(&mut out, 1.0);
    let mut air = white(rng, len);
    lowpass_in_place(&mut air, 5000.0);
    for (o, a) in out.iter_mut().zip(&air) {
        *o += 0.008 * a;
    }
    out
}

/// Drum-kit pattern: kick sweeps, snare bursts, hats, and a bass line.
fn kit(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    let step = (0.19 * fs()) as usize;
    let mut beat = 0;
    let mut start = (0.02 * fs()) as usize;
    while start + 64 < len {
        match beat % 4 {
            0 | 2 => {
                // Kick: exponentially decaying sine with a downward sweep.
                let span = ((0.14 * fs()) as usize).min(len - start);
                let amp = rng.gen_range(0.85..1.0);
                let mut phase = 0.0;
                for i in 0..span {
                    let t = i as f64 / fs();
                    let f = 45.0 + 80.0 * (-t / 0.02).exp();
                    phase += TAU * f / fs();
                    out[start + i] += amp * (-t / 0.05).exp() * phase.sin();
                }
            }
            1 | 3 => {
                // Snare: bandpassed noise burst plus a short body tone.
                let span = ((0.11 * fs()) as usize).min(len - start);
                let mut burst = white(rng, span);
                highpass_in_place(&mut burst, 900.0);
                lowpass_in_place(&mut burst, 4500.0);
                let amp = rng.gen_range(0.5..0.8);
                for i in 0..span {
                    let t = i as f64 / fs();
                    let body = 0.4 * (TAU * 185.0 * t).sin();
                    out[start + i] += amp * (-t / 0.03).exp() * (burst[i] * 2.0 + body);
                }
            }
            _ => unreachable!(),
        }
        // Hat on every step.
        let span = ((0.035 * fs()) as usize).min(len - start);
        let mut hat = white(rng, span);
        highpass_in_place(&mut hat, 5500.0);
        let amp = rng.gen_range(0.15..0.3);
        for i in 0..span {
            let t = i as f64 / fs();
            out[start + i] += amp * (-t / 0.008).exp() * hat[i];
        }
        // Bass note on every other step.
        if beat % 2 == 0 {
            let f = if beat % 8 < 4 { 55.0 } else { 73.42 };
            let span = ((0.3 * fs()) as usize).min(len - start);
            for i in 0..span {
                let t = i as f64 / fs();
                let attack = (t / 0.01).min(1.0);
                out[start + i] += 0.5 * attack * (-t / 0.2).exp() * (TAU * f * t).sin();
            }
        }
        start += step + rng.gen_range(0..step / 16);
        beat += 1;
    }
    out
}

/// Slowly amplitude-modulated wideband noise: the stress case for
/// magnitude-only phase reconstruction.
fn noise(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut out = white(rng, len);
    let mod_phase = rng.gen_range(0.0..TAU);
    for (i, v) in out.iter_mut().enumerate() {
        let secs = i as f64 / fs();
        *v *= 0.55 + 0.45 * (TAU * 0.7 * secs + mod_phase).sin();
    }
    out
}

/// Two exactly bin-aligned tones plus isolated impulses and short noise
/// bursts: the canonical two-component test pattern with added broadband
/// events. 500 Hz and 1781.25 Hz fall on integer bins for both benchmark
/// presets at 16 kHz. A low hiss floor keeps the pattern comparable to the
/// recorded-signal items.
fn tones(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut out = vec![0.0; len];
    for (i, v) in out.iter_mut().enumerate() {
        let t = i as f64 / fs();
        *v = 0.7 * (TAU * 500.0 * t).sin() + 0.35 * (TAU * 1781.25 * t).sin();
    }
    for &(pos, amp) in &[(6000usize, 0.9), (12345, -0.8), (18000, 0.85)] {
        if pos < len {
            out[pos] += amp;
        }
    }
    for &(pos, amp) in &[(3600usize, 0.6), (9800, 0.55), (16400, 0.65), (21500, 0.5)] {
        let burst_len = ((0.08 * fs()) as usize).min(len.saturating_sub(pos));
        let mut burst = white(rng, burst_len);
        lowpass_in_place(&mut burst, 6500.0);
        for (i, b) in burst.iter().enumerate() {
            let t = i as f64 / burst_len as f64;
            out[pos + i] += amp * bump(t) * b;
        }
    }
    let mut hiss = white(rng, len);
    lowpass_in_place(&mut hiss, 7000.0);
    for (o, h) in out.iter_mut().zip(&hiss) {
        *o += 0.01 * h;
    }
    out
}

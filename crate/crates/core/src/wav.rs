//! WAV file reading and writing.
//!
//! Input files may be 16-bit integer PCM or 32-bit float; only the first
//! channel is kept. Output is always 16-bit PCM mono with samples clipped
//! to [-1, 1] before quantization.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use crate::error::HarnessError;

/// Mono audio with its sample rate.
#[derive(Debug, Clone)]
pub struct Audio {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

/// Reads the first channel of a WAV file (PCM16 or float32).
pub fn read_wav(path: &Path) -> Result<Audio, HarnessError> {
    let mut reader = WavReader::open(path).map_err(|e| HarnessError::Wav {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(HarnessError::Wav {
            path: path.display().to_string(),
            reason: "zero channels".into(),
        });
    }
    let samples: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .step_by(channels)
            .map(|s| s.map(|v| f64::from(v) / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(|e| HarnessError::Wav {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .step_by(channels)
            .map(|s| s.map(f64::from))
            .collect::<Result<_, _>>()
            .map_err(|e| HarnessError::Wav {
                path: path.display().to_string(),
                reason: e.to_string(),
            })?,
        (fmt, bits) => {
            return Err(HarnessError::Wav {
                path: path.display().to_string(),
                reason: format!("unsupported format {fmt:?} at {bits} bits"),
            })
        }
    };
    if samples.is_empty() {
        return Err(HarnessError::Wav {
            path: path.display().to_string(),
            reason: "no samples".into(),
        });
    }
    Ok(Audio {
        samples,
        sample_rate: spec.sample_rate,
    })
}

/// Writes mono 16-bit PCM, clipping samples to [-1, 1].
pub fn write_wav(path: &Path, samples: &[f64], sample_rate: u32) -> Result<(), HarnessError> {
    let spec = WavSpec {
        channels: 1,
        sample_rate,
        bits_per_sample: 16,
        sample_format: SampleFormat::Int,
    };
    let mut writer = WavWriter::create(path, spec).map_err(|e| HarnessError::Wav {
        path: path.display().to_string(),
        reason: e.to_string(),
    })?;
    for &s in samples {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(q).map_err(|e| HarnessError::Wav {
            path: path.display().to_string(),
            reason: e.to_string(),
        })?;
    }
    writer.finalize().map_err(|e| HarnessError::Wav {
        path: path.display().to_string(),
        reason: e.to_string(),
    })
}

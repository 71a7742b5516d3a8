//! Planar audio buffers and RIFF/WAVE I/O.
//!
//! Every DSP stage passes [`AudioBuffer`] values around. Samples are stored
//! planar (one `Vec<f64>` per channel); files are PCM16 or IEEE float32.

use std::fs;
use std::io::BufWriter;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::AudioError;

/// Sample rate every processing stage runs at.
pub const CANONICAL_RATE: u32 = 16_000;

/// Sampled multichannel audio with planar channel access.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioBuffer {
    channels: Vec<Vec<f64>>,
    sample_rate: u32,
}

impl AudioBuffer {
    /// Builds a buffer from planar channel data.
    ///
    /// Channels must be non-empty in count, equally long and finite. Values
    /// outside `[-1, 1]` are allowed in memory (mixing may overshoot) and are
    /// clipped when written to PCM16.
    pub fn from_channels(channels: Vec<Vec<f64>>, sample_rate: u32) -> Result<Self, AudioError> {
        if channels.is_empty() {
            return Err(AudioError::InvalidParameter(
                "at least one channel required".into(),
            ));
        }
        if sample_rate == 0 {
            return Err(AudioError::InvalidParameter(
                "sample rate must be positive".into(),
            ));
        }
        let expected = channels[0].len();
        for (c, ch) in channels.iter().enumerate() {
            if ch.len() != expected {
                return Err(AudioError::RaggedChannels {
                    channel: c,
                    len: ch.len(),
                    expected,
                });
            }
            if let Some(index) = ch.iter().position(|s| !s.is_finite()) {
                return Err(AudioError::NonFinite { channel: c, index });
            }
        }
        Ok(Self {
            channels,
            sample_rate,
        })
    }

    pub fn mono(samples: Vec<f64>, sample_rate: u32) -> Result<Self, AudioError> {
        Self::from_channels(vec![samples], sample_rate)
    }

    pub fn silence(channels: usize, frames: usize, sample_rate: u32) -> Result<Self, AudioError> {
        Self::from_channels(vec![vec![0.0; frames]; channels.max(1)], sample_rate)
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    /// Samples per channel.
    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn duration_s(&self) -> f64 {
        self.len() as f64 / self.sample_rate as f64
    }

    /// # Panics
    /// If `index` is out of range.
    pub fn channel(&self, index: usize) -> &[f64] {
        &self.channels[index]
    }

    pub fn channels(&self) -> &[Vec<f64>] {
        &self.channels
    }

    pub fn into_channels(self) -> Vec<Vec<f64>> {
        self.channels
    }

    pub fn peak(&self) -> f64 {
        self.channels
            .iter()
            .flatten()
            .fold(0.0_f64, |m, s| m.max(s.abs()))
    }

    /// Errors unless the buffer runs at [`CANONICAL_RATE`].
    pub fn require_canonical(&self) -> Result<(), AudioError> {
        if self.sample_rate != CANONICAL_RATE {
            return Err(AudioError::RateMismatch {
                expected: CANONICAL_RATE,
                found: self.sample_rate,
            });
        }
        Ok(())
    }
}

/// Sample encoding used when writing WAV files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BitDepth {
    #[default]
    Pcm16,
    Float32,
}

/// Reads a PCM16 or float32 WAV file, scaling integer samples to `[-1, 1)`.
pub fn read_wav(path: impl AsRef<Path>) -> Result<AudioBuffer, AudioError> {
    let path = path.as_ref();
    if !path.exists() {
        return Err(AudioError::NotFound(path.to_path_buf()));
    }
    let reader = hound::WavReader::open(path).map_err(|e| map_hound(e, path))?;
    let spec = reader.spec();
    let n_ch = spec.channels as usize;
    if n_ch == 0 {
        return Err(AudioError::CorruptHeader("zero channels".into()));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (hound::SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(e, path))?,
        (hound::SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>()
            .map_err(|e| map_hound(e, path))?,
        (fmt, bits) => {
            return Err(AudioError::UnsupportedEncoding(format!(
                "{bits}-bit {}",
                match fmt {
                    hound::SampleFormat::Int => "integer",
                    hound::SampleFormat::Float => "float",
                }
            )))
        }
    };
    if interleaved.len() % n_ch != 0 {
        return Err(AudioError::CorruptHeader(
            "data length is not a whole number of frames".into(),
        ));
    }
    let frames = interleaved.len() / n_ch;
    let mut channels = vec![Vec::with_capacity(frames); n_ch];
    for frame in interleaved.chunks_exact(n_ch) {
        for (ch, s) in channels.iter_mut().zip(frame) {
            ch.push(*s);
        }
    }
    AudioBuffer::from_channels(channels, spec.sample_rate)
}

/// Writes `buffer` as a RIFF/WAVE file. The file is written to a sibling
/// temporary path and renamed into place.
pub fn write_wav(
    buffer: &AudioBuffer,
    path: impl AsRef<Path>,
    bit_depth: BitDepth,
) -> Result<(), AudioError> {
    let path = path.as_ref();
    if path.as_os_str().is_empty() {
        return Err(AudioError::InvalidPath("empty path".into()));
    }
    if buffer.is_empty() {
        return Err(AudioError::EmptyBuffer);
    }
    let file_name = path
        .file_name()
        .ok_or_else(|| AudioError::InvalidPath(path.display().to_string()))?;
    let mut tmp_name = file_name.to_os_string();
    tmp_name.push(format!(".tmp{}", std::process::id()));
    let tmp = path.with_file_name(tmp_name);

    let spec = hound::WavSpec {
        channels: buffer.num_channels() as u16,
        sample_rate: buffer.sample_rate(),
        bits_per_sample: match bit_depth {
            BitDepth::Pcm16 => 16,
            BitDepth::Float32 => 32,
        },
        sample_format: match bit_depth {
            BitDepth::Pcm16 => hound::SampleFormat::Int,
            BitDepth::Float32 => hound::SampleFormat::Float,
        },
    };
    let file = fs::File::create(&tmp).map_err(|source| AudioError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let result = (|| -> Result<(), hound::Error> {
        let mut writer = hound::WavWriter::new(BufWriter::new(file), spec)?;
        for i in 0..buffer.len() {
            for ch in buffer.channels() {
                match bit_depth {
                    BitDepth::Pcm16 => writer.write_sample(quantize_pcm16(ch[i]))?,
                    BitDepth::Float32 => writer.write_sample(ch[i] as f32)?,
                }
            }
        }
        writer.finalize()
    })();
    if let Err(e) = result {
        let _ = fs::remove_file(&tmp);
        return Err(map_hound(e, path));
    }
    fs::rename(&tmp, path).map_err(|source| AudioError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Maps `[-1, 1]` to a PCM16 code: `round(x * 32768)` clipped to the i16 range.
pub fn quantize_pcm16(x: f64) -> i16 {
    (x * 32768.0).round().clamp(-32768.0, 32767.0) as i16
}

fn map_hound(e: hound::Error, path: &Path) -> AudioError {
    match e {
        hound::Error::IoError(source) => {
            if source.kind() == std::io::ErrorKind::NotFound {
                AudioError::NotFound(path.to_path_buf())
            } else if source.kind() == std::io::ErrorKind::UnexpectedEof {
                AudioError::CorruptHeader("unexpected end of file".into())
            } else {
                AudioError::Io {
                    path: path.to_path_buf(),
                    source,
                }
            }
        }
        hound::Error::FormatError(msg) => AudioError::CorruptHeader(msg.to_string()),
        hound::Error::Unsupported => {
            AudioError::UnsupportedEncoding("unsupported WAV format".into())
        }
        hound::Error::TooWide => AudioError::UnsupportedEncoding("sample too wide".into()),
        hound::Error::UnfinishedSample => AudioError::CorruptHeader("truncated sample".into()),
        hound::Error::InvalidSampleFormat => {
            AudioError::UnsupportedEncoding("invalid sample format".into())
        }
    }
}

/// Root-mean-square level of a slice.
pub fn rms(x: &[f64]) -> f64 {
    if x.is_empty() {
        return 0.0;
    }
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

pub fn db_to_gain(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn energy(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum()
}

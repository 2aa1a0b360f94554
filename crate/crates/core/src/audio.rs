//! WAV decoding and the normalized clip type shared by every analysis stage.
//!
//! Only the two encodings that occur in practice for measurement recordings
//! are accepted: mono 16-bit PCM and mono 32-bit IEEE float. Everything else
//! is rejected loudly rather than resampled or downmixed, so that a corpus
//! run never silently mixes incompatible material.

use std::fs;
use std::path::Path;

use thiserror::Error;

/// Errors raised while decoding, validating, or writing audio.
#[derive(Debug, Error)]
pub enum AudioError {
    /// The byte stream is not a RIFF/WAVE container.
    #[error("not a RIFF/WAVE file")]
    NotWav,
    /// The container is WAVE but the sample encoding is not mono-friendly
    /// PCM16 or float32.
    #[error("unsupported encoding: {0}")]
    UnsupportedEncoding(String),
    /// More than one channel; analysis is defined on mono signals only.
    #[error("expected mono audio, found {0} channels")]
    MultiChannel(u16),
    /// Declared chunk or data sizes disagree with the bytes present.
    #[error("truncated or inconsistent data: {0}")]
    TruncatedData(String),
    /// The decoded samples violate a clip invariant.
    #[error("invalid clip: {0}")]
    InvalidClip(&'static str),
    #[error("i/o failure: {0}")]
    IoFailure(#[from] std::io::Error),
}

/// A validated mono audio clip with samples in `[-1, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct AudioClip {
    samples: Vec<f64>,
    sample_rate: u32,
    source_id: String,
}

impl AudioClip {
    /// Builds a clip, enforcing the invariants every downstream stage
    /// assumes: at least one sample, a positive sample rate, and all samples
    /// finite within `[-1, 1]`.
    pub fn new(
        samples: Vec<f64>,
        sample_rate: u32,
        source_id: impl Into<String>,
    ) -> Result<Self, AudioError> {
        if samples.is_empty() {
            return Err(AudioError::InvalidClip("clip has no samples"));
        }
        if sample_rate == 0 {
            return Err(AudioError::InvalidClip("sample rate must be positive"));
        }
        if !samples
            .iter()
            .all(|s| s.is_finite() && (-1.0..=1.0).contains(s))
        {
            return Err(AudioError::InvalidClip("sample outside [-1, 1]"));
        }
        Ok(Self {
            samples,
            sample_rate,
            source_id: source_id.into(),
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn sample_rate(&self) -> u32 {
        self.sample_rate
    }

    /// Identifier carried through to feature rows, usually the file stem.
    pub fn source_id(&self) -> &str {
        &self.source_id
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    /// Always false; the constructor rejects empty clips. Present so the
    /// type plays well with len()-style call sites.
    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate as f64
    }

    /// Largest absolute sample value.
    pub fn peak(&self) -> f64 {
        self.samples.iter().fold(0.0, |acc, s| acc.max(s.abs()))
    }

    /// Copy of the clip with every sample multiplied by `gain`.
    pub fn scaled(&self, gain: f64) -> Result<Self, AudioError> {
        Self::new(
            self.samples.iter().map(|s| s * gain).collect(),
            self.sample_rate,
            self.source_id.clone(),
        )
    }
}

const FORMAT_PCM: u16 = 1;
const FORMAT_IEEE_FLOAT: u16 = 3;

struct FmtChunk {
    format: u16,
    channels: u16,
    sample_rate: u32,
    block_align: u16,
    bits_per_sample: u16,
}

fn read_u16(bytes: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([bytes[at], bytes[at + 1]])
}

fn read_u32(bytes: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([bytes[at], bytes[at + 1], bytes[at + 2], bytes[at + 3]])
}

/// Reads and decodes a WAV file. The clip's `source_id` is the file stem.
pub fn load_wav(path: impl AsRef<Path>) -> Result<AudioClip, AudioError> {
    let path = path.as_ref();
    let bytes = fs::read(path)?;
    let source_id = path
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.to_string_lossy().into_owned());
    decode_wav(&bytes, source_id)
}

/// Decodes an in-memory WAV byte stream.
///
/// Decoding is a pure function of the bytes: identical input always yields
/// an identical clip.
pub fn decode_wav(bytes: &[u8], source_id: impl Into<String>) -> Result<AudioClip, AudioError> {
    if bytes.len() < 12 || &bytes[0..4] != b"RIFF" || &bytes[8..12] != b"WAVE" {
        return Err(AudioError::NotWav);
    }

    let mut fmt: Option<FmtChunk> = None;
    let mut data: Option<&[u8]> = None;
    let mut pos = 12;
    while pos + 8 <= bytes.len() {
        let id: [u8; 4] = bytes[pos..pos + 4].try_into().unwrap();
        let size = read_u32(bytes, pos + 4) as usize;
        let body = pos + 8;
        let end = body
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| {
                AudioError::TruncatedData(format!(
                    "chunk `{}` declares {size} bytes past end of file",
                    String::from_utf8_lossy(&id)
                ))
            })?;
        match &id {
            b"fmt " => {
                if size < 16 {
                    return Err(AudioError::TruncatedData(
                        "fmt chunk shorter than 16 bytes".into(),
                    ));
                }
                fmt = Some(FmtChunk {
                    format: read_u16(bytes, body),
                    channels: read_u16(bytes, body + 2),
                    sample_rate: read_u32(bytes, body + 4),
                    block_align: read_u16(bytes, body + 12),
                    bits_per_sample: read_u16(bytes, body + 14),
                });
            }
            b"data" => data = Some(&bytes[body..end]),
            _ => {}
        }
        // Chunks are word-aligned; odd sizes carry a pad byte.
        pos = end + (size & 1);
    }

    let fmt = fmt.ok_or_else(|| AudioError::TruncatedData("missing `fmt ` chunk".into()))?;
    let data = data.ok_or_else(|| AudioError::TruncatedData("missing `data` chunk".into()))?;

    match fmt.format {
        FORMAT_PCM | FORMAT_IEEE_FLOAT => {}
        other => {
            return Err(AudioError::UnsupportedEncoding(format!(
                "format code {other}"
            )))
        }
    }
    if fmt.channels != 1 {
        return Err(AudioError::MultiChannel(fmt.channels));
    }
    let bytes_per_sample = match (fmt.format, fmt.bits_per_sample) {
        (FORMAT_PCM, 16) => 2,
        (FORMAT_IEEE_FLOAT, 32) => 4,
        (f, b) => {
            let kind = if f == FORMAT_PCM { "PCM" } else { "float" };
            return Err(AudioError::UnsupportedEncoding(format!("{b}-bit {kind}")));
        }
    };
    if fmt.block_align as usize != bytes_per_sample {
        return Err(AudioError::UnsupportedEncoding(format!(
            "block align {} for {}-byte mono samples",
            fmt.block_align, bytes_per_sample
        )));
    }
    if data.len() % bytes_per_sample != 0 {
        return Err(AudioError::TruncatedData(format!(
            "data length {} is not a multiple of the {}-byte sample size",
            data.len(),
            bytes_per_sample
        )));
    }

    let samples: Vec<f64> = match fmt.format {
        FORMAT_PCM => data
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f64 / 32768.0)
            .collect(),
        _ => data
            .chunks_exact(4)
            .map(|c| {
                let s = f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64;
                s.clamp(-1.0, 1.0)
            })
            .collect(),
    };

    AudioClip::new(samples, fmt.sample_rate, source_id)
}

/// Encodes a clip as mono 16-bit PCM WAV bytes.
pub fn encode_wav(clip: &AudioClip) -> Vec<u8> {
    let data_len = clip.len() as u32 * 2;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes());
    out.extend_from_slice(&clip.sample_rate().to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate() * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in clip.samples() {
        let q = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        out.extend_from_slice(&q.to_le_bytes());
    }
    out
}

/// Writes a clip to disk as mono 16-bit PCM. Quantization rounds to the
/// nearest level, so a decode round-trip moves no sample by more than one
/// least significant bit (1/32768).
pub fn write_wav(clip: &AudioClip, path: impl AsRef<Path>) -> Result<(), AudioError> {
    fs::write(path, encode_wav(clip))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn pcm16_file(samples: &[i16], sample_rate: u32) -> Vec<u8> {
        let clip_bytes: Vec<u8> = samples.iter().flat_map(|s| s.to_le_bytes()).collect();
        let mut out = Vec::new();
        out.extend_from_slice(b"RIFF");
        out.extend_from_slice(&(36 + clip_bytes.len() as u32).to_le_bytes());
        out.extend_from_slice(b"WAVE");
        out.extend_from_slice(b"fmt ");
        out.extend_from_slice(&16u32.to_le_bytes());
        out.extend_from_slice(&1u16.to_le_bytes());
        out.extend_from_slice(&1u16.to_le_bytes());
        out.extend_from_slice(&sample_rate.to_le_bytes());
        out.extend_from_slice(&(sample_rate * 2).to_le_bytes());
        out.extend_from_slice(&2u16.to_le_bytes());
        out.extend_from_slice(&16u16.to_le_bytes());
        out.extend_from_slice(b"data");
        out.extend_from_slice(&(clip_bytes.len() as u32).to_le_bytes());
        out.extend_from_slice(&clip_bytes);
        out
    }

    #[test]
    fn decodes_pcm16_full_scale_values() {
        let clip = decode_wav(&pcm16_file(&[32767, -32768, 0], 44100), "t").unwrap();
        assert_eq!(clip.sample_rate(), 44100);
        assert_eq!(clip.len(), 3);
        assert!((clip.samples()[0] - 32767.0 / 32768.0).abs() < 1e-12);
        assert!((clip.samples()[1] + 1.0).abs() < 1e-12);
        assert_eq!(clip.samples()[2], 0.0);
    }

    #[test]
    fn one_second_at_44100_yields_44100_samples() {
        let samples = vec![0i16; 44100];
        let clip = decode_wav(&pcm16_file(&samples, 44100), "t").unwrap();
        assert_eq!(clip.len(), 44100);
        assert!((clip.duration() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn decoding_is_deterministic() {
        let bytes = pcm16_file(&[5, -20, 300, 32767], 22050);
        let a = decode_wav(&bytes, "t").unwrap();
        let b = decode_wav(&bytes, "t").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_bad_magic() {
        assert!(matches!(
            decode_wav(b"RIFX....WAVE", "t"),
            Err(AudioError::NotWav)
        ));
        assert!(matches!(decode_wav(b"OggS", "t"), Err(AudioError::NotWav)));
        let mut bytes = pcm16_file(&[0, 0], 44100);
        bytes[8..12].copy_from_slice(b"AVI ");
        assert!(matches!(decode_wav(&bytes, "t"), Err(AudioError::NotWav)));
    }

    #[test]
    fn rejects_stereo() {
        let mut bytes = pcm16_file(&[0, 0], 44100);
        bytes[22..24].copy_from_slice(&2u16.to_le_bytes());
        bytes[32..34].copy_from_slice(&4u16.to_le_bytes());
        assert!(matches!(
            decode_wav(&bytes, "t"),
            Err(AudioError::MultiChannel(2))
        ));
    }

    #[test]
    fn rejects_unsupported_encodings() {
        let mut adpcm = pcm16_file(&[0, 0], 44100);
        adpcm[20..22].copy_from_slice(&2u16.to_le_bytes());
        assert!(matches!(
            decode_wav(&adpcm, "t"),
            Err(AudioError::UnsupportedEncoding(_))
        ));

        let mut pcm8 = pcm16_file(&[0, 0], 44100);
        pcm8[34..36].copy_from_slice(&8u16.to_le_bytes());
        pcm8[32..34].copy_from_slice(&1u16.to_le_bytes());
        assert!(matches!(
            decode_wav(&pcm8, "t"),
            Err(AudioError::UnsupportedEncoding(_))
        ));
    }

    #[test]
    fn rejects_declared_size_past_end() {
        let mut bytes = pcm16_file(&[1, 2, 3], 44100);
        // The data chunk's size field sits at offset 40 in a canonical file.
        bytes[40..44].copy_from_slice(&999u32.to_le_bytes());
        assert!(matches!(
            decode_wav(&bytes, "t"),
            Err(AudioError::TruncatedData(_))
        ));
    }

    #[test]
    fn rejects_data_not_multiple_of_sample_size() {
        let mut bytes = pcm16_file(&[1, 2], 44100);
        bytes[40..44].copy_from_slice(&3u32.to_le_bytes());
        assert!(matches!(
            decode_wav(&bytes, "t"),
            Err(AudioError::TruncatedData(_))
        ));
    }

    #[test]
    fn decodes_float32_and_clamps() {
        let samples: Vec<u8> = [0.5f32, -2.0, 1.5]
            .iter()
            .flat_map(|s| s.to_le_bytes())
            .collect();
        let mut bytes = Vec::new();
        bytes.extend_from_slice(b"RIFF");
        bytes.extend_from_slice(&(36 + samples.len() as u32).to_le_bytes());
        bytes.extend_from_slice(b"WAVE");
        bytes.extend_from_slice(b"fmt ");
        bytes.extend_from_slice(&16u32.to_le_bytes());
        bytes.extend_from_slice(&3u16.to_le_bytes());
        bytes.extend_from_slice(&1u16.to_le_bytes());
        bytes.extend_from_slice(&48000u32.to_le_bytes());
        bytes.extend_from_slice(&(48000u32 * 4).to_le_bytes());
        bytes.extend_from_slice(&4u16.to_le_bytes());
        bytes.extend_from_slice(&32u16.to_le_bytes());
        bytes.extend_from_slice(b"data");
        bytes.extend_from_slice(&(samples.len() as u32).to_le_bytes());
        bytes.extend_from_slice(&samples);

        let clip = decode_wav(&bytes, "t").unwrap();
        assert_eq!(clip.samples(), &[0.5, -1.0, 1.0]);
        assert_eq!(clip.sample_rate(), 48000);
    }

    #[test]
    fn empty_clip_is_rejected() {
        assert!(matches!(
            AudioClip::new(vec![], 44100, "t"),
            Err(AudioError::InvalidClip(_))
        ));
        assert!(matches!(
            decode_wav(&pcm16_file(&[], 44100), "t"),
            Err(AudioError::InvalidClip(_))
        ));
    }

    #[test]
    fn out_of_range_samples_are_rejected() {
        assert!(AudioClip::new(vec![1.5], 44100, "t").is_err());
        assert!(AudioClip::new(vec![f64::NAN], 44100, "t").is_err());
        assert!(AudioClip::new(vec![0.0], 0, "t").is_err());
    }

    #[test]
    fn skips_unknown_chunks() {
        let tail = pcm16_file(&[100, -100], 44100);
        let mut bytes = Vec::new();
        bytes.extend_from_slice(&tail[..12]);
        bytes.extend_from_slice(b"LIST");
        bytes.extend_from_slice(&5u32.to_le_bytes());
        bytes.extend_from_slice(b"INFOx\0"); // 5 bytes + pad
        bytes.extend_from_slice(&tail[12..]);
        let clip = decode_wav(&bytes, "t").unwrap();
        assert_eq!(clip.len(), 2);
    }

    #[test]
    fn encode_round_trip_is_within_one_lsb() {
        let samples: Vec<f64> = (0..500).map(|n| (n as f64 / 250.0 - 1.0) * 0.999).collect();
        let clip = AudioClip::new(samples.clone(), 44100, "ramp").unwrap();
        let back = decode_wav(&encode_wav(&clip), "ramp").unwrap();
        for (a, b) in samples.iter().zip(back.samples()) {
            assert!((a - b).abs() <= 1.0 / 32768.0, "{a} vs {b}");
        }
    }

    #[test]
    fn file_round_trip_preserves_rate_and_samples() {
        let dir = std::env::temp_dir().join("talim-audio-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("roundtrip.wav");
        let clip = AudioClip::new(vec![0.25, -0.5, 0.75, -1.0], 22050, "roundtrip").unwrap();
        write_wav(&clip, &path).unwrap();
        let back = load_wav(&path).unwrap();
        assert_eq!(back.sample_rate(), 22050);
        assert_eq!(back.source_id(), "roundtrip");
        for (a, b) in clip.samples().iter().zip(back.samples()) {
            assert!((a - b).abs() <= 1.0 / 32768.0);
        }
        std::fs::remove_file(&path).ok();
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn round_trip_error_bounded(samples in proptest::collection::vec(-1.0f64..=1.0, 1..400)) {
            let clip = AudioClip::new(samples.clone(), 44100, "prop").unwrap();
            let back = decode_wav(&encode_wav(&clip), "prop").unwrap();
            for (a, b) in samples.iter().zip(back.samples()) {
                prop_assert!((a - b).abs() <= 1.0 / 32768.0);
            }
        }
    }
}

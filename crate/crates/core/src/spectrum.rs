//! Framed magnitude spectra, the long-term average spectrum, and RMS
//! envelopes.
//!
//! The long-term average spectrum (LTAS) is the workhorse representation:
//! magnitude spectra of all complete frames are averaged bin-wise in the
//! linear domain, which makes every amplitude-ratio feature downstream
//! exactly invariant under input scaling. Decibel conversion happens only at
//! the reporting surface, floored at [`DB_FLOOR`].

use std::f64::consts::PI;
use std::io;

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use thiserror::Error;

use crate::audio::AudioClip;

/// Floor applied when converting linear magnitudes to dB.
pub const DB_FLOOR: f64 = -120.0;

/// Linear magnitude corresponding to [`DB_FLOOR`].
const LINEAR_FLOOR: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum SpectrumError {
    #[error("frame length {0} is not a power of two of at least 8")]
    BadFrameLength(usize),
    #[error("clip too short: need at least {needed} samples, have {got}")]
    ClipTooShort { needed: usize, got: usize },
    #[error("bad analysis parameters: {0}")]
    BadConfig(&'static str),
}

/// Analysis window applied to each frame before the DFT.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Window {
    Rectangular,
    /// Periodic Hann, `0.5 * (1 - cos(2*pi*n/N))`.
    Hann,
}

fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-9 {
        1.0
    } else {
        (PI * x).sin() / (PI * x)
    }
}

impl Window {
    pub fn coefficients(self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            Window::Hann => (0..n)
                .map(|i| 0.5 * (1.0 - (2.0 * PI * i as f64 / n as f64).cos()))
                .collect(),
        }
    }

    /// Magnitude of the window's DFT mainlobe at `x` bins from its center,
    /// normalized so the center equals 1. Valid on the mainlobe
    /// (`|x| <= 1` for Hann, `|x| < 1` for rectangular); used to place
    /// partial peaks between bins.
    pub fn lobe(self, x: f64) -> f64 {
        match self {
            Window::Rectangular => sinc(x).abs(),
            Window::Hann => {
                if (x.abs() - 1.0).abs() < 1e-8 {
                    0.5
                } else {
                    (sinc(x) / (1.0 - x * x)).abs()
                }
            }
        }
    }

    /// Solves `lobe(1 - d) / lobe(d) = ratio` for `d` in `[0, 0.5]`.
    ///
    /// For a sinusoid landing `d` bins above bin `i`, `ratio` is the
    /// measured `mag[i + 1] / mag[i]`; the ratio is strictly increasing in
    /// `d`, so bisection converges unconditionally.
    pub(crate) fn invert_side_ratio(self, ratio: f64) -> f64 {
        let side = |d: f64| self.lobe(1.0 - d) / self.lobe(d);
        if ratio <= side(0.0) {
            return 0.0;
        }
        if ratio >= 1.0 {
            return 0.5;
        }
        let (mut lo, mut hi) = (0.0, 0.5);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if side(mid) < ratio {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }
}

impl std::str::FromStr for Window {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "hann" => Ok(Window::Hann),
            "rect" | "rectangular" => Ok(Window::Rectangular),
            other => Err(format!("unknown window `{other}` (expected hann or rect)")),
        }
    }
}

/// Framing parameters for LTAS computation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumConfig {
    pub frame_size: usize,
    pub hop: usize,
    pub window: Window,
}

impl Default for SpectrumConfig {
    fn default() -> Self {
        Self {
            frame_size: 4096,
            hop: 2048,
            window: Window::Hann,
        }
    }
}

impl SpectrumConfig {
    pub fn validate(&self) -> Result<(), SpectrumError> {
        if !is_valid_frame_len(self.frame_size) {
            return Err(SpectrumError::BadFrameLength(self.frame_size));
        }
        if self.hop == 0 || self.hop > self.frame_size {
            return Err(SpectrumError::BadConfig(
                "hop must satisfy 0 < hop <= frame_size",
            ));
        }
        Ok(())
    }
}

fn is_valid_frame_len(n: usize) -> bool {
    n >= 8 && n.is_power_of_two()
}

/// Converts a linear magnitude to dB, floored at [`DB_FLOOR`].
pub fn db_from_linear(magnitude: f64) -> f64 {
    20.0 * magnitude.max(LINEAR_FLOOR).log10()
}

fn spectrum_into(
    frame: &[f64],
    coeffs: &[f64],
    scale: f64,
    fft: &dyn rustfft::Fft<f64>,
    buf: &mut [Complex<f64>],
) -> Vec<f64> {
    for ((b, &s), &w) in buf.iter_mut().zip(frame).zip(coeffs) {
        *b = Complex::new(s * w, 0.0);
    }
    fft.process(buf);
    buf[..=frame.len() / 2]
        .iter()
        .map(|c| c.norm() * scale)
        .collect()
}

/// Single-frame magnitude spectrum for bins `0..=N/2`.
///
/// Magnitudes are normalized by `2 / sum(window)`, so a full-scale sinusoid
/// centered on a bin reads 1.0 regardless of the window in use.
pub fn magnitude_spectrum(frame: &[f64], window: Window) -> Result<Vec<f64>, SpectrumError> {
    let n = frame.len();
    if !is_valid_frame_len(n) {
        return Err(SpectrumError::BadFrameLength(n));
    }
    let coeffs = window.coefficients(n);
    let scale = 2.0 / coeffs.iter().sum::<f64>();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut buf = vec![Complex::new(0.0, 0.0); n];
    Ok(spectrum_into(frame, &coeffs, scale, fft.as_ref(), &mut buf))
}

/// Long-term average spectrum: linear magnitudes averaged over frames.
#[derive(Debug, Clone)]
pub struct Ltas {
    bin_freqs: Vec<f64>,
    magnitudes: Vec<f64>,
    frame_count: usize,
    window: Window,
}

impl Ltas {
    /// Assembles an LTAS from raw parts, enforcing the bin-grid invariants.
    /// Mostly useful for constructing synthetic spectra in tests.
    pub fn from_parts(
        bin_freqs: Vec<f64>,
        magnitudes: Vec<f64>,
        frame_count: usize,
        window: Window,
    ) -> Result<Self, SpectrumError> {
        if bin_freqs.len() != magnitudes.len() || bin_freqs.len() < 3 {
            return Err(SpectrumError::BadConfig(
                "need matching freq/magnitude bins (>= 3)",
            ));
        }
        if bin_freqs[0] != 0.0 || bin_freqs.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SpectrumError::BadConfig(
                "bin frequencies must increase from 0",
            ));
        }
        if magnitudes.iter().any(|m| !m.is_finite() || *m < 0.0) {
            return Err(SpectrumError::BadConfig(
                "magnitudes must be finite and nonnegative",
            ));
        }
        if frame_count == 0 {
            return Err(SpectrumError::BadConfig("frame count must be positive"));
        }
        Ok(Self {
            bin_freqs,
            magnitudes,
            frame_count,
            window,
        })
    }

    pub fn bin_freqs(&self) -> &[f64] {
        &self.bin_freqs
    }

    /// Averaged linear magnitudes, one per bin.
    pub fn magnitudes(&self) -> &[f64] {
        &self.magnitudes
    }

    /// Magnitudes in dB, floored at [`DB_FLOOR`].
    pub fn magnitudes_db(&self) -> Vec<f64> {
        self.magnitudes.iter().map(|&m| db_from_linear(m)).collect()
    }

    pub fn frame_count(&self) -> usize {
        self.frame_count
    }

    pub fn window(&self) -> Window {
        self.window
    }

    pub fn bin_width(&self) -> f64 {
        self.bin_freqs[1]
    }

    pub fn nyquist(&self) -> f64 {
        *self.bin_freqs.last().unwrap()
    }

    /// Writes the spectrum as `freq_hz,magnitude_db` CSV rows.
    pub fn write_csv<W: io::Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "freq_hz,magnitude_db")?;
        for (f, m) in self.bin_freqs.iter().zip(self.magnitudes_db()) {
            writeln!(w, "{f:.6},{m:.6}")?;
        }
        Ok(())
    }
}

/// Computes the LTAS of a clip. Frames advance by `cfg.hop`; an incomplete
/// trailing frame is discarded. Frames are reduced in clip order, so the
/// result is deterministic.
pub fn compute_ltas(clip: &AudioClip, cfg: &SpectrumConfig) -> Result<Ltas, SpectrumError> {
    cfg.validate()?;
    let n = cfg.frame_size;
    let samples = clip.samples();
    if samples.len() < n {
        return Err(SpectrumError::ClipTooShort {
            needed: n,
            got: samples.len(),
        });
    }

    let coeffs = cfg.window.coefficients(n);
    let scale = 2.0 / coeffs.iter().sum::<f64>();
    let fft = FftPlanner::new().plan_fft_forward(n);
    let mut buf = vec![Complex::new(0.0, 0.0); n];

    let mut acc = vec![0.0; n / 2 + 1];
    let mut frame_count = 0usize;
    let mut start = 0usize;
    while start + n <= samples.len() {
        let mags = spectrum_into(
            &samples[start..start + n],
            &coeffs,
            scale,
            fft.as_ref(),
            &mut buf,
        );
        for (a, m) in acc.iter_mut().zip(mags) {
            *a += m;
        }
        frame_count += 1;
        start += cfg.hop;
    }

    let inv = 1.0 / frame_count as f64;
    for a in &mut acc {
        *a *= inv;
    }
    let fs = clip.sample_rate() as f64;
    let bin_freqs = (0..=n / 2).map(|m| m as f64 * fs / n as f64).collect();
    Ltas::from_parts(bin_freqs, acc, frame_count, cfg.window)
}

/// Short-time RMS envelope.
#[derive(Debug, Clone)]
pub struct Envelope {
    times: Vec<f64>,
    rms_values: Vec<f64>,
}

impl Envelope {
    pub fn from_parts(times: Vec<f64>, rms_values: Vec<f64>) -> Result<Self, SpectrumError> {
        if times.len() != rms_values.len() || times.is_empty() {
            return Err(SpectrumError::BadConfig(
                "need matching, nonempty time/rms vectors",
            ));
        }
        if times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(SpectrumError::BadConfig(
                "envelope times must be strictly increasing",
            ));
        }
        if rms_values.iter().any(|r| !r.is_finite() || *r < 0.0) {
            return Err(SpectrumError::BadConfig(
                "rms values must be finite and nonnegative",
            ));
        }
        Ok(Self { times, rms_values })
    }

    /// Window start times in seconds.
    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn rms_values(&self) -> &[f64] {
        &self.rms_values
    }
}

/// Computes the windowed RMS envelope with window and hop given in
/// milliseconds. Requires `window_ms >= hop_ms > 0` so windows overlap or
/// tile without gaps.
pub fn compute_envelope(
    clip: &AudioClip,
    window_ms: f64,
    hop_ms: f64,
) -> Result<Envelope, SpectrumError> {
    if !(hop_ms > 0.0) || !(window_ms >= hop_ms) {
        return Err(SpectrumError::BadConfig("need window_ms >= hop_ms > 0"));
    }
    let fs = clip.sample_rate() as f64;
    let win = ((window_ms * fs / 1000.0).round() as usize).max(1);
    let hop = ((hop_ms * fs / 1000.0).round() as usize).max(1);
    let samples = clip.samples();
    if samples.len() < win {
        return Err(SpectrumError::ClipTooShort {
            needed: win,
            got: samples.len(),
        });
    }

    let mut times = Vec::new();
    let mut rms_values = Vec::new();
    let mut start = 0usize;
    while start + win <= samples.len() {
        let sq: f64 = samples[start..start + win].iter().map(|s| s * s).sum();
        times.push(start as f64 / fs);
        rms_values.push((sq / win as f64).sqrt());
        start += hop;
    }
    Envelope::from_parts(times, rms_values)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::audio::AudioClip;

    fn sine_clip(freq: f64, amp: f64, fs: u32, len: usize) -> AudioClip {
        let samples = (0..len)
            .map(|n| amp * (2.0 * PI * freq * n as f64 / fs as f64).sin())
            .collect();
        AudioClip::new(samples, fs, "sine").unwrap()
    }

    #[test]
    fn zero_frame_gives_zero_spectrum() {
        let mags = magnitude_spectrum(&vec![0.0; 64], Window::Hann).unwrap();
        assert_eq!(mags.len(), 33);
        assert!(mags.iter().all(|&m| m == 0.0));
    }

    #[test]
    fn bin_centered_cosine_reads_unit_magnitude() {
        let n = 64;
        for window in [Window::Rectangular, Window::Hann] {
            let frame: Vec<f64> = (0..n)
                .map(|i| (2.0 * PI * 8.0 * i as f64 / n as f64).cos())
                .collect();
            let mags = magnitude_spectrum(&frame, window).unwrap();
            assert!((mags[8] - 1.0).abs() < 1e-9, "{window:?}: {}", mags[8]);
            for (m, &v) in mags.iter().enumerate() {
                if (m as i64 - 8).abs() > 1 {
                    assert!(v < 1e-9, "{window:?} leaked {v} into bin {m}");
                }
            }
        }
    }

    #[test]
    fn two_tone_amplitudes_recovered() {
        let n = 256;
        let frame: Vec<f64> = (0..n)
            .map(|i| {
                let t = i as f64 / n as f64;
                0.5 * (2.0 * PI * 16.0 * t).sin() + 0.25 * (2.0 * PI * 40.0 * t).sin()
            })
            .collect();
        let mags = magnitude_spectrum(&frame, Window::Rectangular).unwrap();
        assert!((mags[16] - 0.5).abs() < 1e-9);
        assert!((mags[40] - 0.25).abs() < 1e-9);
    }

    #[test]
    fn rejects_bad_frame_lengths() {
        assert!(matches!(
            magnitude_spectrum(&[0.0; 100], Window::Hann),
            Err(SpectrumError::BadFrameLength(100))
        ));
        assert!(matches!(
            magnitude_spectrum(&[0.0; 4], Window::Hann),
            Err(SpectrumError::BadFrameLength(4))
        ));
    }

    #[test]
    fn ltas_of_stationary_sine_peaks_at_its_frequency() {
        let clip = sine_clip(1000.0, 0.8, 44100, 44100);
        let ltas = compute_ltas(&clip, &SpectrumConfig::default()).unwrap();
        let peak_bin = ltas
            .magnitudes()
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .unwrap()
            .0;
        assert!((ltas.bin_freqs()[peak_bin] - 1000.0).abs() <= ltas.bin_width());
        assert_eq!(ltas.frame_count(), (44100 - 4096) / 2048 + 1);
    }

    #[test]
    fn single_frame_ltas_matches_frame_spectrum() {
        let clip = sine_clip(500.0, 0.5, 44100, 4096);
        let cfg = SpectrumConfig::default();
        let ltas = compute_ltas(&clip, &cfg).unwrap();
        let mags = magnitude_spectrum(clip.samples(), cfg.window).unwrap();
        assert_eq!(ltas.frame_count(), 1);
        for (a, b) in ltas.magnitudes().iter().zip(&mags) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn half_silent_clip_averages_to_half_magnitude() {
        let n = 4096;
        let frames = 8;
        let fs = 44100;
        let freq = 512.0 * fs as f64 / n as f64; // lands on bin 512 exactly
        let mut samples: Vec<f64> = (0..n * frames)
            .map(|i| (2.0 * PI * freq * i as f64 / fs as f64).sin())
            .collect();
        for s in samples.iter_mut().skip(n * frames / 2) {
            *s = 0.0;
        }
        let half = AudioClip::new(samples.clone(), fs, "half").unwrap();
        let full = AudioClip::new(
            (0..n * frames)
                .map(|i| (2.0 * PI * freq * i as f64 / fs as f64).sin())
                .collect(),
            fs,
            "full",
        )
        .unwrap();

        let cfg = SpectrumConfig {
            frame_size: n,
            hop: n,
            window: Window::Hann,
        };
        let ltas_half = compute_ltas(&half, &cfg).unwrap();
        let ltas_full = compute_ltas(&full, &cfg).unwrap();
        let ratio = ltas_half.magnitudes()[512] / ltas_full.magnitudes()[512];
        assert!((ratio - 0.5).abs() < 0.02, "ratio {ratio}");
        let db_drop = 20.0 * ratio.log10();
        assert!((db_drop + 6.02).abs() < 0.35, "drop {db_drop}");
    }

    #[test]
    fn db_conversion_floors_at_minus_120() {
        assert_eq!(db_from_linear(0.0), DB_FLOOR);
        assert_eq!(db_from_linear(1e-12), DB_FLOOR);
        assert!((db_from_linear(1.0) - 0.0).abs() < 1e-12);
        assert!((db_from_linear(0.5) + 6.0206).abs() < 1e-3);
    }

    #[test]
    fn ltas_csv_has_expected_header_and_rows() {
        let clip = sine_clip(500.0, 0.5, 44100, 4096);
        let ltas = compute_ltas(&clip, &SpectrumConfig::default()).unwrap();
        let mut out = Vec::new();
        ltas.write_csv(&mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next(), Some("freq_hz,magnitude_db"));
        assert_eq!(lines.count(), 2049);
        assert!(text.lines().nth(1).unwrap().starts_with("0.000000,"));
    }

    #[test]
    fn short_clip_is_rejected() {
        let clip = sine_clip(500.0, 0.5, 44100, 1000);
        assert!(matches!(
            compute_ltas(&clip, &SpectrumConfig::default()),
            Err(SpectrumError::ClipTooShort {
                needed: 4096,
                got: 1000
            })
        ));
    }

    #[test]
    fn config_validation_rejects_bad_hop() {
        let cfg = SpectrumConfig {
            frame_size: 1024,
            hop: 0,
            window: Window::Hann,
        };
        assert!(matches!(cfg.validate(), Err(SpectrumError::BadConfig(_))));
        let cfg = SpectrumConfig {
            frame_size: 1024,
            hop: 2048,
            window: Window::Hann,
        };
        assert!(matches!(cfg.validate(), Err(SpectrumError::BadConfig(_))));
    }

    #[test]
    fn constant_signal_envelope_is_flat() {
        let clip = AudioClip::new(vec![0.5; 4410], 44100, "dc").unwrap();
        let env = compute_envelope(&clip, 5.0, 1.0).unwrap();
        assert!(env.rms_values().iter().all(|&r| (r - 0.5).abs() < 1e-12));
    }

    #[test]
    fn full_scale_sine_envelope_near_rms_of_sine() {
        let clip = sine_clip(1000.0, 1.0, 44100, 8820);
        let env = compute_envelope(&clip, 50.0, 10.0).unwrap();
        for &r in env.rms_values() {
            assert!((r - 0.7071).abs() < 0.01, "rms {r}");
        }
    }

    #[test]
    fn ramp_envelope_matches_direct_windowed_rms() {
        let samples: Vec<f64> = (0..4410).map(|i| i as f64 / 4410.0).collect();
        let clip = AudioClip::new(samples.clone(), 44100, "ramp").unwrap();
        let env = compute_envelope(&clip, 10.0, 2.5).unwrap();
        let win = 441;
        let hop = 110;
        for (k, (&t, &r)) in env.times().iter().zip(env.rms_values()).enumerate() {
            let start = k * hop;
            let oracle = (samples[start..start + win]
                .iter()
                .map(|s| s * s)
                .sum::<f64>()
                / win as f64)
                .sqrt();
            assert!((r - oracle).abs() < 1e-12);
            assert!((t - start as f64 / 44100.0).abs() < 1e-12);
        }
        for pair in env.rms_values().windows(2) {
            assert!(pair[1] >= pair[0]);
        }
    }

    #[test]
    fn envelope_rejects_bad_windows() {
        let clip = AudioClip::new(vec![0.1; 1000], 44100, "t").unwrap();
        assert!(compute_envelope(&clip, 1.0, 5.0).is_err());
        assert!(compute_envelope(&clip, 5.0, 0.0).is_err());
    }

    #[test]
    fn hann_lobe_matches_dft_samples() {
        // Sample the actual windowed DFT response of an off-bin sinusoid and
        // compare against the analytic mainlobe model.
        let n = 4096;
        let delta = 0.3;
        let bin = 100.0 + delta;
        let frame: Vec<f64> = (0..n)
            .map(|i| (2.0 * PI * bin * i as f64 / n as f64).cos())
            .collect();
        let mags = magnitude_spectrum(&frame, Window::Hann).unwrap();
        for off in [-1i64, 0, 1] {
            let idx = (100 + off) as usize;
            let x = off as f64 - delta;
            let model = Window::Hann.lobe(x);
            assert!(
                (mags[idx] - model).abs() < 2e-4,
                "offset {off}: measured {} model {model}",
                mags[idx]
            );
        }
        assert_eq!(Window::Hann.lobe(0.0), 1.0);
        assert!((Window::Hann.lobe(1.0) - 0.5).abs() < 1e-12);
        assert!((Window::Rectangular.lobe(0.5) - 2.0 / PI).abs() < 1e-12);
    }

    #[test]
    fn side_ratio_inversion_recovers_offset() {
        for window in [Window::Rectangular, Window::Hann] {
            for &d in &[0.0, 0.1, 0.25, 0.4, 0.5] {
                let ratio = window.lobe(1.0 - d) / window.lobe(d);
                let got = window.invert_side_ratio(ratio);
                assert!((got - d).abs() < 1e-9, "{window:?} d={d} got={got}");
            }
        }
    }
}

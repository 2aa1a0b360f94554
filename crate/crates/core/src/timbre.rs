//! The fourteen-dimensional timbre descriptor set and the full-clip
//! analysis pipeline that produces it.
//!
//! Feature definitions follow the percussion-timbre literature: tristimulus
//! and odd/even balance over harmonic partial amplitudes, Jensen's spectral
//! irregularity, signed inharmonicity in percent, perceptual brightness on
//! the Bark scale and centroid on the ERB-rate scale, RMS-envelope attack
//! time, overall RMS power in dBFS, and the frequency/level distances
//! between the two strongest spectral peaks.

use serde::Serialize;
use thiserror::Error;

use crate::audio::AudioClip;
use crate::harmonics::{
    detect_peaks, estimate_f0, extract_partials, HarmonicSeries, HarmonicsError, Peak,
};
use crate::spectrum::{
    compute_envelope, compute_ltas, Envelope, Ltas, SpectrumConfig, SpectrumError, DB_FLOOR,
};

/// Feature-level failures.
#[derive(Debug, Error, PartialEq, Eq)]
pub enum TimbreError {
    /// All relevant amplitudes were zero, leaving a ratio undefined.
    #[error("zero spectrum: amplitude ratios are undefined")]
    ZeroSpectrum,
    /// The clip contains no energy at all.
    #[error("silent clip")]
    SilentClip,
    /// The spectral-distance features need two qualifying peaks.
    #[error("fewer than two spectral peaks")]
    FewerThanTwoPeaks,
}

/// Which stage failed while assembling a full descriptor vector.
#[derive(Debug, Error)]
pub enum AnalysisErrorKind {
    #[error(transparent)]
    Spectrum(#[from] SpectrumError),
    #[error(transparent)]
    Harmonics(#[from] HarmonicsError),
    #[error(transparent)]
    Timbre(#[from] TimbreError),
}

/// Error from [`compute_all`], tagged with the feature that failed.
#[derive(Debug, Error)]
#[error("feature `{feature}` failed: {kind}")]
pub struct AnalysisError {
    pub feature: &'static str,
    pub kind: AnalysisErrorKind,
}

impl AnalysisError {
    fn tag<E: Into<AnalysisErrorKind>>(feature: &'static str) -> impl FnOnce(E) -> Self {
        move |e| Self {
            feature,
            kind: e.into(),
        }
    }
}

/// The complete descriptor vector in canonical column order.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimbreVector {
    pub brightness: f64,
    pub tristimulus1: f64,
    pub tristimulus2: f64,
    pub tristimulus3: f64,
    pub odd_param: f64,
    pub even_param: f64,
    pub irregularity: f64,
    pub inharmonicity: f64,
    pub centroid: f64,
    pub pitch: f64,
    pub attack_time: f64,
    pub rms_power: f64,
    pub peak_freq_diff: f64,
    pub peak_amp_diff: f64,
}

impl TimbreVector {
    /// Column names in the canonical order used by every CSV surface.
    pub const FIELD_NAMES: [&'static str; 14] = [
        "brightness",
        "tristimulus1",
        "tristimulus2",
        "tristimulus3",
        "odd_param",
        "even_param",
        "irregularity",
        "inharmonicity",
        "centroid",
        "pitch",
        "attack_time",
        "rms_power",
        "peak_freq_diff",
        "peak_amp_diff",
    ];

    /// Field values in the same order as [`Self::FIELD_NAMES`].
    pub fn values(&self) -> [f64; 14] {
        [
            self.brightness,
            self.tristimulus1,
            self.tristimulus2,
            self.tristimulus3,
            self.odd_param,
            self.even_param,
            self.irregularity,
            self.inharmonicity,
            self.centroid,
            self.pitch,
            self.attack_time,
            self.rms_power,
            self.peak_freq_diff,
            self.peak_amp_diff,
        ]
    }
}

/// Tunable parameters for [`compute_all`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnalysisConfig {
    pub spectrum: SpectrumConfig,
    /// Pitch search range in Hz.
    pub fmin: f64,
    pub fmax: f64,
    /// Cap on extracted harmonic partials.
    pub max_partials: usize,
    /// Minimum spacing between reported spectral peaks, Hz.
    pub peak_min_separation_hz: f64,
    /// Peaks more than this far below the spectral maximum are ignored, dB.
    pub peak_threshold_db: f64,
    /// RMS envelope window and hop, milliseconds.
    pub envelope_window_ms: f64,
    pub envelope_hop_ms: f64,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        Self {
            spectrum: SpectrumConfig::default(),
            fmin: 80.0,
            fmax: 1000.0,
            max_partials: 10,
            peak_min_separation_hz: 50.0,
            peak_threshold_db: 40.0,
            envelope_window_ms: 5.0,
            envelope_hop_ms: 1.0,
        }
    }
}

/// Critical-band rate (Bark) of a frequency in Hz, after Zwicker.
pub fn bark(freq: f64) -> f64 {
    13.0 * (0.00076 * freq).atan() + 3.5 * ((freq / 7500.0) * (freq / 7500.0)).atan()
}

/// ERB-rate scale value of a frequency in Hz (Glasberg and Moore).
pub fn erb_rate(freq: f64) -> f64 {
    21.4 * (1.0 + 0.00437 * freq).log10()
}

/// Tristimulus partition `(t1, t2, t3)`: fundamental share, share of
/// partials 2 to 4, and share of partials 5 and above. The three always sum
/// to 1 for a nonzero series.
pub fn tristimulus(series: &HarmonicSeries) -> Result<(f64, f64, f64), TimbreError> {
    let total: f64 = series.partials().iter().map(|p| p.amp).sum();
    if total <= 0.0 {
        return Err(TimbreError::ZeroSpectrum);
    }
    let t1 = series.amp(1) / total;
    let t2 = (series.amp(2) + series.amp(3) + series.amp(4)) / total;
    let t3 = series.partials().iter().skip(4).map(|p| p.amp).sum::<f64>() / total;
    Ok((t1, t2, t3))
}

/// Amplitude shares of the odd partials above the fundamental and of the
/// even partials: `(odd, even)`. Together with tristimulus 1 they partition
/// the spectrum, so `t1 + odd + even = 1`.
pub fn odd_even(series: &HarmonicSeries) -> Result<(f64, f64), TimbreError> {
    let total: f64 = series.partials().iter().map(|p| p.amp).sum();
    if total <= 0.0 {
        return Err(TimbreError::ZeroSpectrum);
    }
    let mut odd = 0.0;
    let mut even = 0.0;
    for p in series.partials() {
        if p.index % 2 == 0 {
            even += p.amp;
        } else if p.index >= 3 {
            odd += p.amp;
        }
    }
    Ok((odd / total, even / total))
}

/// Jensen's spectral irregularity: squared differences of adjacent partial
/// amplitudes over the squared amplitude sum. The last partial is compared
/// only to its predecessor; no phantom zero is appended.
pub fn irregularity(series: &HarmonicSeries) -> Result<f64, TimbreError> {
    let amps: Vec<f64> = series.partials().iter().map(|p| p.amp).collect();
    let denom: f64 = amps.iter().map(|a| a * a).sum();
    if denom <= 0.0 {
        return Err(TimbreError::ZeroSpectrum);
    }
    let num: f64 = amps.windows(2).map(|w| (w[0] - w[1]) * (w[0] - w[1])).sum();
    Ok(num / denom)
}

/// Amplitude-weighted signed deviation of partial frequencies from the
/// exact harmonic grid, in percent. Negative values mean flat partials.
pub fn inharmonicity(series: &HarmonicSeries) -> Result<f64, TimbreError> {
    let total: f64 = series.partials().iter().map(|p| p.amp).sum();
    if total <= 0.0 {
        return Err(TimbreError::ZeroSpectrum);
    }
    let f0 = series.f0();
    let weighted: f64 = series
        .partials()
        .iter()
        .map(|p| {
            let nominal = p.index as f64 * f0;
            p.amp * (p.freq - nominal) / nominal
        })
        .sum();
    Ok(100.0 * weighted / total)
}

/// Amplitude-weighted mean Bark value of the LTAS.
pub fn brightness(ltas: &Ltas) -> Result<f64, TimbreError> {
    weighted_scale_mean(ltas, bark)
}

/// Amplitude-weighted mean ERB-rate value of the LTAS.
pub fn centroid(ltas: &Ltas) -> Result<f64, TimbreError> {
    weighted_scale_mean(ltas, erb_rate)
}

fn weighted_scale_mean(ltas: &Ltas, scale: fn(f64) -> f64) -> Result<f64, TimbreError> {
    let total: f64 = ltas.magnitudes().iter().sum();
    if total <= 0.0 {
        return Err(TimbreError::ZeroSpectrum);
    }
    let weighted: f64 = ltas
        .bin_freqs()
        .iter()
        .zip(ltas.magnitudes())
        .map(|(&f, &m)| scale(f) * m)
        .sum();
    Ok(weighted / total)
}

/// Time from the envelope first reaching 10% of its peak RMS to the peak
/// itself. A percussive onset at the very start of the clip yields a small
/// positive number; a clip that starts at its peak yields 0.
pub fn attack_time(envelope: &Envelope) -> Result<f64, TimbreError> {
    let rms = envelope.rms_values();
    let (peak_idx, &peak) = rms
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
        .unwrap();
    if peak <= 0.0 {
        return Err(TimbreError::SilentClip);
    }
    let threshold = 0.1 * peak;
    let onset_idx = rms[..=peak_idx]
        .iter()
        .position(|&r| r >= threshold)
        .unwrap();
    Ok(envelope.times()[peak_idx] - envelope.times()[onset_idx])
}

/// Whole-clip RMS power in dBFS, floored at [`DB_FLOOR`].
pub fn rms_power_db(clip: &AudioClip) -> f64 {
    let mean_sq = clip.samples().iter().map(|s| s * s).sum::<f64>() / clip.len() as f64;
    let rms = mean_sq.sqrt();
    (20.0 * rms.log10()).max(DB_FLOOR)
}

/// Frequency distance and level distance between the two strongest peaks:
/// `(|f1 - f2|, |db1 - db2|)`.
pub fn peak_diffs(peaks: &[Peak]) -> Result<(f64, f64), TimbreError> {
    if peaks.len() < 2 {
        return Err(TimbreError::FewerThanTwoPeaks);
    }
    let df = (peaks[0].freq - peaks[1].freq).abs();
    let da = (peaks[0].magnitude_db - peaks[1].magnitude_db).abs();
    Ok((df, da))
}

/// Runs the full pipeline on one clip and assembles the descriptor vector.
///
/// Fails fast on silence, then computes the LTAS, envelope, pitch, and
/// harmonic series once and derives every feature from those shared
/// intermediates. Errors name the first feature that could not be computed.
pub fn compute_all(clip: &AudioClip, cfg: &AnalysisConfig) -> Result<TimbreVector, AnalysisError> {
    if clip.peak() <= 0.0 {
        return Err(AnalysisError {
            feature: "clip",
            kind: TimbreError::SilentClip.into(),
        });
    }

    let ltas = compute_ltas(clip, &cfg.spectrum).map_err(AnalysisError::tag("ltas"))?;
    let envelope = compute_envelope(clip, cfg.envelope_window_ms, cfg.envelope_hop_ms)
        .map_err(AnalysisError::tag("attack_time"))?;
    let pitch = estimate_f0(clip, cfg.fmin, cfg.fmax).map_err(AnalysisError::tag("pitch"))?;
    let series =
        extract_partials(&ltas, pitch, cfg.max_partials).map_err(AnalysisError::tag("partials"))?;

    let (t1, t2, t3) = tristimulus(&series).map_err(AnalysisError::tag("tristimulus"))?;
    let (odd, even) = odd_even(&series).map_err(AnalysisError::tag("odd_even"))?;
    let irr = irregularity(&series).map_err(AnalysisError::tag("irregularity"))?;
    let inh = inharmonicity(&series).map_err(AnalysisError::tag("inharmonicity"))?;
    let bri = brightness(&ltas).map_err(AnalysisError::tag("brightness"))?;
    let cen = centroid(&ltas).map_err(AnalysisError::tag("centroid"))?;
    let atk = attack_time(&envelope).map_err(AnalysisError::tag("attack_time"))?;

    // A clip dominated by a single tone may present only one qualifying
    // peak under the level threshold; retry unthresholded before giving up
    // so the distance features stay defined for legitimate material.
    let peaks = match detect_peaks(&ltas, cfg.peak_min_separation_hz, cfg.peak_threshold_db) {
        Ok(p) if p.len() >= 2 => p,
        _ => detect_peaks(&ltas, cfg.peak_min_separation_hz, f64::INFINITY)
            .map_err(AnalysisError::tag("peak_diffs"))?,
    };
    let (df, da) = peak_diffs(&peaks).map_err(AnalysisError::tag("peak_diffs"))?;

    Ok(TimbreVector {
        brightness: bri,
        tristimulus1: t1,
        tristimulus2: t2,
        tristimulus3: t3,
        odd_param: odd,
        even_param: even,
        irregularity: irr,
        inharmonicity: inh,
        centroid: cen,
        pitch,
        attack_time: atk,
        rms_power: rms_power_db(clip),
        peak_freq_diff: df,
        peak_amp_diff: da,
    })
}

//! Parametric stroke synthesis.
//!
//! Generates decaying harmonic-stack test signals whose ground truth is
//! known exactly, which makes them usable as oracles for the analysis
//! pipeline: every descriptor the pipeline measures can be predicted from
//! the spec that generated the clip.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::audio::AudioClip;

#[derive(Debug, Error)]
pub enum SynthError {
    #[error("invalid synth spec: {0}")]
    InvalidSpec(String),
}

/// Full description of a synthetic stroke.
///
/// Partial `k` (1-based) sounds at `k * f0 * stretch[k-1]` with initial
/// amplitude `partial_amps[k-1]` and exponential decay constant
/// `decay[k-1]` seconds. A linear ramp over `attack` seconds shapes the
/// onset, and the result is peak-normalized to 0.9.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthSpec {
    pub f0: f64,
    pub partial_amps: Vec<f64>,
    /// Per-partial frequency stretch factors; 1.0 is perfectly harmonic.
    pub stretch: Vec<f64>,
    /// Attack ramp length in seconds.
    pub attack: f64,
    /// Per-partial exponential decay time constants in seconds.
    pub decay: Vec<f64>,
    /// Total duration in seconds.
    pub duration: f64,
    pub sample_rate: u32,
}

impl SynthSpec {
    /// Perfectly harmonic spec with uniform decay and a 12 ms attack.
    pub fn harmonic(f0: f64, partial_amps: Vec<f64>, duration: f64, sample_rate: u32) -> Self {
        let n = partial_amps.len();
        Self {
            f0,
            partial_amps,
            stretch: vec![1.0; n],
            attack: 0.012,
            decay: vec![duration; n],
            duration,
            sample_rate,
        }
    }

    /// Five equal harmonics at 259 Hz: the classic idealized model of a
    /// well-tuned drumhead tuned so its first five partials are harmonic.
    pub fn raman() -> Self {
        Self::harmonic(259.0, vec![1.0; 5], 1.0, 44100)
    }

    /// Copy of the spec with every partial frequency stretched by `factor`.
    pub fn stretched(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for s in &mut out.stretch {
            *s *= factor;
        }
        out
    }

    pub fn validate(&self) -> Result<(), SynthError> {
        let fail = |msg: String| Err(SynthError::InvalidSpec(msg));
        if !(self.f0 > 0.0) || !self.f0.is_finite() {
            return fail(format!("f0 must be positive, got {}", self.f0));
        }
        if self.sample_rate == 0 {
            return fail("sample rate must be positive".into());
        }
        if self.partial_amps.is_empty() {
            return fail("need at least one partial".into());
        }
        if self.partial_amps.iter().any(|a| !a.is_finite() || *a < 0.0) {
            return fail("partial amplitudes must be finite and nonnegative".into());
        }
        if self.partial_amps.iter().all(|&a| a == 0.0) {
            return fail("all partial amplitudes are zero".into());
        }
        if self.stretch.len() != self.partial_amps.len()
            || self.decay.len() != self.partial_amps.len()
        {
            return fail("stretch and decay must match partial_amps in length".into());
        }
        if self.stretch.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return fail("stretch factors must be positive".into());
        }
        if self.decay.iter().any(|d| !d.is_finite() || *d <= 0.0) {
            return fail("decay constants must be positive".into());
        }
        if !(self.attack >= 0.0) || !self.attack.is_finite() {
            return fail("attack must be nonnegative".into());
        }
        if !(self.duration > self.attack) || !self.duration.is_finite() {
            return fail("duration must exceed the attack".into());
        }
        let nyquist = self.sample_rate as f64 / 2.0;
        for (i, &s) in self.stretch.iter().enumerate() {
            let freq = (i as f64 + 1.0) * self.f0 * s;
            if freq >= nyquist {
                return fail(format!("partial {} at {freq:.1} Hz exceeds Nyquist", i + 1));
            }
        }
        if (self.duration * self.sample_rate as f64).round() < 1.0 {
            return fail("duration too short for one sample".into());
        }
        Ok(())
    }
}

/// Renders a spec to an audio clip. Deterministic: no noise sources, so the
/// same spec always produces the same samples.
pub fn synth_stroke(spec: &SynthSpec) -> Result<AudioClip, SynthError> {
    spec.validate()?;
    let fs = spec.sample_rate as f64;
    let n = (spec.duration * fs).round() as usize;

    let mut samples = vec![0.0; n];
    for (i, &amp) in spec.partial_amps.iter().enumerate() {
        if amp == 0.0 {
            continue;
        }
        let freq = (i as f64 + 1.0) * spec.f0 * spec.stretch[i];
        let tau = spec.decay[i];
        let omega = 2.0 * PI * freq;
        for (j, s) in samples.iter_mut().enumerate() {
            let t = j as f64 / fs;
            *s += amp * (-t / tau).exp() * (omega * t).sin();
        }
    }
    if spec.attack > 0.0 {
        let ramp_len = (spec.attack * fs) as usize;
        for (j, s) in samples.iter_mut().enumerate().take(ramp_len.min(n)) {
            *s *= j as f64 / (spec.attack * fs);
        }
    }

    let peak = samples.iter().fold(0.0f64, |a, s| a.max(s.abs()));
    if peak <= 0.0 {
        return Err(SynthError::InvalidSpec("spec renders to silence".into()));
    }
    let gain = 0.9 / peak;
    for s in &mut samples {
        *s *= gain;
    }

    let label = format!("synth-{:.0}hz", spec.f0);
    Ok(AudioClip::new(samples, spec.sample_rate, label)
        .expect("normalized synthesis output is always a valid clip"))
}

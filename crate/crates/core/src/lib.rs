//! Timbre analysis for short percussion strokes.
//!
//! The crate turns a mono WAV recording into a fourteen-dimensional timbre
//! descriptor vector and provides the statistical machinery (correlation,
//! principal-component extraction, varimax rotation) used to study a corpus
//! of such vectors.
//!
//! Pipeline overview:
//!
//! 1. [`audio`] decodes WAV bytes into a normalized [`AudioClip`].
//! 2. [`spectrum`] computes framed magnitude spectra, the long-term average
//!    spectrum (LTAS), and RMS envelopes.
//! 3. [`harmonics`] estimates the fundamental, picks spectral peaks, and
//!    extracts harmonic partials from the LTAS.
//! 4. [`timbre`] evaluates the descriptor set and bundles it into a
//!    [`TimbreVector`].
//! 5. [`stats`] runs Pearson correlation and factor analysis over feature
//!    matrices; [`report`] reads and writes the CSV surfaces.
//! 6. [`synth`] generates parametric reference strokes used as analysis
//!    oracles and demo material.
//!
//! All sample and feature arithmetic is `f64`. Every public operation is a
//! pure function of its inputs, so results are deterministic and thread-safe
//! by construction.

pub mod audio;
pub mod harmonics;
pub mod report;
pub mod spectrum;
pub mod stats;
pub mod synth;
pub mod timbre;

pub use audio::{load_wav, write_wav, AudioClip, AudioError};
pub use harmonics::{
    detect_peaks, estimate_f0, extract_partials, HarmonicSeries, HarmonicsError, Partial, Peak,
};
pub use report::{read_feature_matrix, write_feature_matrix, ReportError};
pub use spectrum::{
    compute_envelope, compute_ltas, magnitude_spectrum, Envelope, Ltas, SpectrumConfig,
    SpectrumError, Window,
};
pub use stats::{
    communalities, correlation_p_value, factor_analysis, pca, pearson, retain_factors, scree_data,
    significance_marker, suppress, variance_table, varimax, varimax_detailed, CorrelationResult,
    FactorModel, FeatureMatrix, Pca, Retention, RetentionPolicy, StatsError, VarianceEntry,
    VarianceRow, VarimaxOutcome,
};
pub use synth::{synth_stroke, SynthError, SynthSpec};
pub use timbre::{compute_all, AnalysisConfig, AnalysisError, TimbreError, TimbreVector};

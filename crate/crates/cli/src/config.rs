//! Key=value configuration files and their merging with command-line
//! flags. Flags always win over file values, which win over defaults.

use std::collections::HashMap;
use std::path::Path;
use std::str::FromStr;

use talim_core::stats::RetentionPolicy;
use talim_core::timbre::AnalysisConfig;

use crate::{AnalysisFlags, CliError, FactorArgs};

/// Accepted config keys; each mirrors a command-line flag.
const KNOWN_KEYS: [&str; 13] = [
    "frame_size",
    "hop",
    "window",
    "fmin",
    "fmax",
    "max_partials",
    "min_separation",
    "peak_threshold",
    "envelope_window_ms",
    "envelope_hop_ms",
    "factors",
    "suppress",
    "kaiser_normalize",
];

pub struct FileConfig {
    values: HashMap<String, String>,
}

impl FileConfig {
    fn empty() -> Self {
        Self {
            values: HashMap::new(),
        }
    }

    fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Input(format!("cannot read config {}: {e}", path.display())))?;
        let mut values = HashMap::new();
        for (idx, raw_line) in text.lines().enumerate() {
            let line = raw_line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(CliError::Usage(format!(
                    "config {} line {}: expected key=value, got {line:?}",
                    path.display(),
                    idx + 1
                )));
            };
            let (key, value) = (key.trim(), value.trim());
            if !KNOWN_KEYS.contains(&key) {
                return Err(CliError::Usage(format!(
                    "config {} line {}: unknown key {key:?}",
                    path.display(),
                    idx + 1
                )));
            }
            values.insert(key.to_string(), value.to_string());
        }
        Ok(Self { values })
    }

    fn from_arg(path: &Option<std::path::PathBuf>) -> Result<Self, CliError> {
        match path {
            Some(p) => Self::load(p),
            None => Ok(Self::empty()),
        }
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: FromStr>(&self, key: &str) -> Result<Option<T>, CliError> {
        match self.values.get(key) {
            None => Ok(None),
            Some(raw) => raw
                .parse::<T>()
                .map(Some)
                .map_err(|_| CliError::Usage(format!("config key {key}: cannot parse {raw:?}"))),
        }
    }
}

fn pick<T: FromStr>(flag: Option<T>, file: &FileConfig, key: &str) -> Result<Option<T>, CliError> {
    match flag {
        Some(v) => Ok(Some(v)),
        None => file.parsed(key),
    }
}

/// Resolves the analysis configuration from defaults, the optional config
/// file, and the explicit flags, then fail-fasts on invalid combinations.
pub fn analysis_config(flags: &AnalysisFlags) -> Result<AnalysisConfig, CliError> {
    let file = FileConfig::from_arg(&flags.config)?;
    let mut cfg = AnalysisConfig::default();

    if let Some(v) = pick(flags.frame_size, &file, "frame_size")? {
        cfg.spectrum.frame_size = v;
    }
    if let Some(v) = pick(flags.hop, &file, "hop")? {
        cfg.spectrum.hop = v;
    }
    if let Some(raw) = flags.window.as_deref().or_else(|| file.raw("window")) {
        cfg.spectrum.window = raw.parse().map_err(|e: String| CliError::Usage(e))?;
    }
    if let Some(v) = pick(flags.fmin, &file, "fmin")? {
        cfg.fmin = v;
    }
    if let Some(v) = pick(flags.fmax, &file, "fmax")? {
        cfg.fmax = v;
    }
    if let Some(v) = pick(flags.max_partials, &file, "max_partials")? {
        cfg.max_partials = v;
    }
    if let Some(v) = pick(flags.min_separation, &file, "min_separation")? {
        cfg.peak_min_separation_hz = v;
    }
    if let Some(v) = pick(flags.peak_threshold, &file, "peak_threshold")? {
        cfg.peak_threshold_db = v;
    }
    if let Some(v) = pick(flags.envelope_window_ms, &file, "envelope_window_ms")? {
        cfg.envelope_window_ms = v;
    }
    if let Some(v) = pick(flags.envelope_hop_ms, &file, "envelope_hop_ms")? {
        cfg.envelope_hop_ms = v;
    }

    cfg.spectrum
        .validate()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    if !(cfg.fmin > 0.0 && cfg.fmin < cfg.fmax) {
        return Err(CliError::Usage(format!(
            "pitch range [{}, {}] Hz must be positive and increasing",
            cfg.fmin, cfg.fmax
        )));
    }
    if cfg.max_partials < 2 {
        return Err(CliError::Usage("max_partials must be at least 2".into()));
    }
    if !(cfg.envelope_hop_ms > 0.0 && cfg.envelope_window_ms >= cfg.envelope_hop_ms) {
        return Err(CliError::Usage(format!(
            "envelope window {} ms must be at least the hop {} ms, both positive",
            cfg.envelope_window_ms, cfg.envelope_hop_ms
        )));
    }
    Ok(cfg)
}

pub struct FactorOptions {
    pub policy: RetentionPolicy,
    pub kaiser_normalize: bool,
    pub suppress: f64,
}

/// Resolves retention policy, rotation normalization, and the suppression
/// threshold for the factor and report commands.
pub fn factor_options(args: &FactorArgs) -> Result<FactorOptions, CliError> {
    let file = FileConfig::from_arg(&args.config)?;

    let policy = match args.factors.as_deref().or_else(|| file.raw("factors")) {
        None => RetentionPolicy::Kaiser,
        Some(raw) => parse_factors(raw)?,
    };
    let kaiser_normalize = if args.no_kaiser_normalize {
        false
    } else {
        file.parsed::<bool>("kaiser_normalize")?.unwrap_or(true)
    };
    let suppress = match pick(args.suppress, &file, "suppress")? {
        Some(v) => v,
        None => 0.5,
    };
    if !suppress.is_finite() || suppress < 0.0 {
        return Err(CliError::Usage(format!(
            "suppress threshold must be nonnegative, got {suppress}"
        )));
    }
    Ok(FactorOptions {
        policy,
        kaiser_normalize,
        suppress,
    })
}

fn parse_factors(raw: &str) -> Result<RetentionPolicy, CliError> {
    if raw.eq_ignore_ascii_case("auto") {
        return Ok(RetentionPolicy::Kaiser);
    }
    match raw.parse::<usize>() {
        Ok(k) if k > 0 => Ok(RetentionPolicy::Fixed(k)),
        _ => Err(CliError::Usage(format!(
            "factors expects \"auto\" or a positive count, got {raw:?}"
        ))),
    }
}

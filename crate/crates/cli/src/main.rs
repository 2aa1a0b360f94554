//! `talim`: timbre descriptors from percussion-stroke WAV clips, plus
//! correlation and factor reports over stroke corpora.

mod commands;
mod config;
mod manifest;

use std::fmt;
use std::path::PathBuf;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use talim_core::{AnalysisError, AudioError, ReportError, StatsError, SynthError};

#[derive(Parser)]
#[command(
    name = "talim",
    version,
    about = "Timbre analysis of percussion strokes",
    long_about = "Extracts 14 timbre descriptors from WAV clips via long-term average \
                  spectrum analysis and runs correlation and factor statistics over \
                  stroke corpora. Set TALIM_LOG (error|warn|info|debug) for verbosity."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract the 14-descriptor timbre vector from one WAV clip.
    Analyze(AnalyzeArgs),
    /// Analyze every clip in a manifest into a feature matrix CSV.
    Batch(BatchArgs),
    /// Correlation matrix with two-tailed significance flags.
    Correlate(CorrelateArgs),
    /// Principal components, communalities, variance, and varimax reports.
    Factor(FactorArgs),
    /// Correlation and factor reports in one pass.
    Report(FactorArgs),
    /// Render a synthetic stroke WAV with a JSON ground-truth sidecar.
    Synth(SynthArgs),
}

/// Flags shared by the clip-analyzing commands. Every flag can also be set
/// in the config file; explicit flags win.
#[derive(Args)]
struct AnalysisFlags {
    /// Key=value config file; command-line flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
    /// FFT frame size in samples (power of two, at least 8).
    #[arg(long)]
    frame_size: Option<usize>,
    /// Hop between frames in samples.
    #[arg(long)]
    hop: Option<usize>,
    /// Analysis window: hann or rect.
    #[arg(long)]
    window: Option<String>,
    /// Lower bound of the pitch search range in Hz.
    #[arg(long)]
    fmin: Option<f64>,
    /// Upper bound of the pitch search range in Hz.
    #[arg(long)]
    fmax: Option<f64>,
    /// Maximum number of harmonic partials to extract.
    #[arg(long)]
    max_partials: Option<usize>,
    /// Minimum separation between reported spectral peaks in Hz.
    #[arg(long)]
    min_separation: Option<f64>,
    /// Peak acceptance window below the spectral maximum in dB.
    #[arg(long)]
    peak_threshold: Option<f64>,
    /// RMS envelope window length in milliseconds.
    #[arg(long)]
    envelope_window_ms: Option<f64>,
    /// RMS envelope hop in milliseconds.
    #[arg(long)]
    envelope_hop_ms: Option<f64>,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// WAV file to analyze.
    wav: PathBuf,
    /// Output format for the descriptor vector.
    #[arg(long, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,
    /// Also write the long-term average spectrum to this CSV path.
    #[arg(long, value_name = "FILE")]
    ltas: Option<PathBuf>,
    #[command(flatten)]
    flags: AnalysisFlags,
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

#[derive(Args)]
struct BatchArgs {
    /// Manifest CSV with header path,stroke_label,tabla_id.
    manifest: PathBuf,
    /// Output CSV path; standard output when omitted.
    #[arg(short, long, value_name = "FILE")]
    output: Option<PathBuf>,
    #[command(flatten)]
    flags: AnalysisFlags,
}

#[derive(Args)]
struct CorrelateArgs {
    /// Feature matrix CSV (rows = strokes, columns = descriptors).
    matrix: PathBuf,
    /// Directory for the report CSVs.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Correlate strokes over their descriptor profiles instead.
    #[arg(long)]
    transpose: bool,
}

#[derive(Args)]
struct FactorArgs {
    /// Feature matrix CSV (rows = strokes, columns = descriptors).
    matrix: PathBuf,
    /// Directory for the report CSVs.
    #[arg(long, value_name = "DIR", default_value = ".")]
    out_dir: PathBuf,
    /// Factors to retain: "auto" (eigenvalues above 1) or a fixed count
    /// [default: auto].
    #[arg(long, value_name = "auto|K")]
    factors: Option<String>,
    /// Rotate raw loadings without Kaiser row normalization.
    #[arg(long)]
    no_kaiser_normalize: bool,
    /// Blank rotated loadings below this absolute value [default: 0.5].
    #[arg(long, value_name = "T")]
    suppress: Option<f64>,
    /// Analyze strokes over their descriptor profiles instead.
    #[arg(long)]
    transpose: bool,
    /// Key=value config file; command-line flags override it.
    #[arg(long, value_name = "FILE")]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Output WAV path; a .json ground-truth sidecar is written next to it.
    #[arg(short, long, value_name = "FILE")]
    output: PathBuf,
    /// Fundamental frequency in Hz.
    #[arg(long, default_value_t = 259.0)]
    f0: f64,
    /// Comma-separated partial amplitudes, lowest harmonic first.
    #[arg(long, default_value = "1,1,1,1,1")]
    amps: String,
    /// Multiply every partial frequency by this factor.
    #[arg(long, default_value_t = 1.0)]
    stretch: f64,
    /// Attack ramp length in seconds.
    #[arg(long, default_value_t = 0.012)]
    attack: f64,
    /// Exponential decay time constant in seconds [default: clip duration].
    #[arg(long)]
    decay: Option<f64>,
    /// Clip duration in seconds.
    #[arg(long, default_value_t = 1.0)]
    duration: f64,
    /// Sample rate in Hz.
    #[arg(long, default_value_t = 44100)]
    sample_rate: u32,
}

/// Failure classes mapped to distinct exit codes: usage problems exit 1,
/// unreadable or malformed input files exit 2, analysis failures exit 3.
#[derive(Debug)]
enum CliError {
    Usage(String),
    Input(String),
    Analysis(String),
}

impl CliError {
    fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Input(_) => 2,
            CliError::Analysis(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Input(m) | CliError::Analysis(m) => f.write_str(m),
        }
    }
}

impl From<AudioError> for CliError {
    fn from(e: AudioError) -> Self {
        CliError::Input(e.to_string())
    }
}

impl From<AnalysisError> for CliError {
    fn from(e: AnalysisError) -> Self {
        CliError::Analysis(e.to_string())
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        CliError::Analysis(e.to_string())
    }
}

impl From<ReportError> for CliError {
    fn from(e: ReportError) -> Self {
        match e {
            ReportError::Stats(inner) => CliError::Analysis(inner.to_string()),
            other => CliError::Input(other.to_string()),
        }
    }
}

impl From<SynthError> for CliError {
    fn from(e: SynthError) -> Self {
        CliError::Usage(e.to_string())
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Input(e.to_string())
    }
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().filter_or("TALIM_LOG", "warn"))
        .format_timestamp(None)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => std::process::exit(0),
                _ => std::process::exit(1),
            }
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(args) => commands::analyze(args),
        Command::Batch(args) => commands::batch(args),
        Command::Correlate(args) => commands::correlate(args),
        Command::Factor(args) => commands::factor(args),
        Command::Report(args) => commands::report(args),
        Command::Synth(args) => commands::synth(args),
    }
}

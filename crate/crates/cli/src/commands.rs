//! Implementations of the `talim` subcommands.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use talim_core::report::{read_feature_matrix, write_correlation_reports, write_factor_reports};
use talim_core::stats::FeatureMatrix;
use talim_core::timbre::TimbreVector;
use talim_core::{
    compute_all, compute_ltas, factor_analysis, load_wav, pearson, synth_stroke, write_wav,
    AudioClip, SynthSpec,
};

use crate::config::{self, FactorOptions};
use crate::manifest::read_manifest;
use crate::{AnalyzeArgs, BatchArgs, CliError, CorrelateArgs, FactorArgs, OutputFormat, SynthArgs};

fn warn_sample_rate(clip: &AudioClip) {
    if clip.sample_rate() != 44100 {
        log::warn!(
            "{}: sample rate {} Hz differs from the usual 44100 Hz",
            clip.source_id(),
            clip.sample_rate()
        );
    }
}

pub fn analyze(args: AnalyzeArgs) -> Result<(), CliError> {
    let cfg = config::analysis_config(&args.flags)?;
    let clip = load_wav(&args.wav)?;
    warn_sample_rate(&clip);
    let vector = compute_all(&clip, &cfg)?;

    if let Some(path) = &args.ltas {
        let ltas =
            compute_ltas(&clip, &cfg.spectrum).map_err(|e| CliError::Analysis(e.to_string()))?;
        ltas.write_csv(BufWriter::new(File::create(path)?))?;
        log::info!("wrote spectrum to {}", path.display());
    }

    let stdout = io::stdout();
    let mut out = stdout.lock();
    match args.format {
        OutputFormat::Json => {
            serde_json::to_writer_pretty(&mut out, &vector)
                .map_err(|e| CliError::Input(e.to_string()))?;
            writeln!(out)?;
        }
        OutputFormat::Csv => {
            writeln!(out, "{}", TimbreVector::FIELD_NAMES.join(","))?;
            let cells: Vec<String> = vector.values().iter().map(|v| format!("{v:.6}")).collect();
            writeln!(out, "{}", cells.join(","))?;
        }
    }
    Ok(())
}

pub fn batch(args: BatchArgs) -> Result<(), CliError> {
    let cfg = config::analysis_config(&args.flags)?;
    let rows = read_manifest(&args.manifest)?;
    if rows.is_empty() {
        return Err(CliError::Analysis(
            "empty manifest: nothing to analyze".into(),
        ));
    }

    let mut ids = Vec::new();
    let mut vectors = Vec::new();
    for row in &rows {
        let clip = match load_wav(&row.path) {
            Ok(clip) => clip,
            Err(e) => {
                log::warn!("skipping {}: {e}", row.path.display());
                continue;
            }
        };
        warn_sample_rate(&clip);
        match compute_all(&clip, &cfg) {
            Ok(vector) => {
                ids.push(row.id());
                vectors.push(vector);
            }
            Err(e) => log::warn!("skipping {}: {e}", row.path.display()),
        }
    }
    if ids.is_empty() {
        return Err(CliError::Analysis(
            "no clip in the manifest could be analyzed".into(),
        ));
    }

    let mut out: Box<dyn Write> = match &args.output {
        Some(path) => Box::new(BufWriter::new(File::create(path)?)),
        None => Box::new(io::stdout().lock()),
    };
    writeln!(out, "stroke,{}", TimbreVector::FIELD_NAMES.join(","))?;
    for (id, vector) in ids.iter().zip(&vectors) {
        let cells: Vec<String> = vector.values().iter().map(|v| format!("{v:.6}")).collect();
        writeln!(out, "{id},{}", cells.join(","))?;
    }
    out.flush()?;
    log::info!("analyzed {} of {} clips", ids.len(), rows.len());
    Ok(())
}

fn load_matrix(path: &Path, transpose: bool) -> Result<FeatureMatrix, CliError> {
    let m = read_feature_matrix(path)?;
    let m = if transpose { m.transposed()? } else { m };
    let zero = m.zero_variance_columns();
    if !zero.is_empty() {
        log::warn!("columns with zero variance: {}", zero.join(", "));
    }
    Ok(m)
}

pub fn correlate(args: CorrelateArgs) -> Result<(), CliError> {
    let m = load_matrix(&args.matrix, args.transpose)?;
    let result = pearson(&m)?;
    write_correlation_reports(&args.out_dir, &result)?;
    log::info!("wrote correlation reports to {}", args.out_dir.display());
    Ok(())
}

fn run_factor(m: &FeatureMatrix, opts: &FactorOptions, out_dir: &Path) -> Result<(), CliError> {
    let model = factor_analysis(m, opts.policy, opts.kaiser_normalize)?;
    if model.retention.degenerate {
        log::warn!("no eigenvalue above 1; keeping a single factor");
    }
    log::info!(
        "retained {} of {} components",
        model.retention.factors,
        model.eigenvalues.len()
    );
    write_factor_reports(out_dir, m.col_ids(), &model, opts.suppress)?;
    log::info!("wrote factor reports to {}", out_dir.display());
    Ok(())
}

pub fn factor(args: FactorArgs) -> Result<(), CliError> {
    let opts = config::factor_options(&args)?;
    let m = load_matrix(&args.matrix, args.transpose)?;
    run_factor(&m, &opts, &args.out_dir)
}

pub fn report(args: FactorArgs) -> Result<(), CliError> {
    let opts = config::factor_options(&args)?;
    let m = load_matrix(&args.matrix, args.transpose)?;
    let result = pearson(&m)?;
    write_correlation_reports(&args.out_dir, &result)?;
    log::info!("wrote correlation reports to {}", args.out_dir.display());
    run_factor(&m, &opts, &args.out_dir)
}

pub fn synth(args: SynthArgs) -> Result<(), CliError> {
    let amps = parse_amps(&args.amps)?;
    let mut spec = SynthSpec::harmonic(args.f0, amps, args.duration, args.sample_rate);
    spec.attack = args.attack;
    if let Some(tau) = args.decay {
        spec.decay = vec![tau; spec.partial_amps.len()];
    }
    let spec = if args.stretch != 1.0 {
        spec.stretched(args.stretch)
    } else {
        spec
    };

    let clip = synth_stroke(&spec)?;
    write_wav(&clip, &args.output)?;
    let sidecar = args.output.with_extension("json");
    let json = serde_json::to_string_pretty(&spec).map_err(|e| CliError::Input(e.to_string()))?;
    std::fs::write(&sidecar, json + "\n")?;
    log::info!("wrote {} and {}", args.output.display(), sidecar.display());
    Ok(())
}

fn parse_amps(raw: &str) -> Result<Vec<f64>, CliError> {
    raw.split(',')
        .map(|token| {
            let token = token.trim();
            token
                .parse::<f64>()
                .map_err(|_| CliError::Usage(format!("bad amplitude {token:?} in amps list")))
        })
        .collect()
}

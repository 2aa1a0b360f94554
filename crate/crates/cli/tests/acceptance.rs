//! Acceptance suite for the end-to-end corpus criterion: a full synthetic
//! tabla corpus through batch analysis, correlation, and factor reports.

use std::fs;
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use talim_core::{synth_stroke, write_wav, SynthSpec};

/// Prints one PASS/FAIL line for the criterion, including when the owning
/// test panics mid-way.
struct Criterion {
    number: usize,
    summary: &'static str,
    passed: bool,
}

impl Criterion {
    fn new(number: usize, summary: &'static str) -> Self {
        Self {
            number,
            summary,
            passed: false,
        }
    }

    fn pass(mut self) {
        self.passed = true;
    }
}

impl Drop for Criterion {
    fn drop(&mut self) {
        let verdict = if self.passed { "PASS" } else { "FAIL" };
        println!(
            "acceptance criterion {} [{}]: {}",
            self.number, verdict, self.summary
        );
    }
}

fn talim() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_talim"));
    cmd.env("TALIM_LOG", "warn");
    cmd
}

fn run_ok(cmd: &mut Command) {
    let out = cmd.output().expect("binary runs");
    assert!(
        out.status.success(),
        "command failed\nstdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

/// Deterministic 5-tabla x 9-stroke corpus with varied amplitude
/// profiles, partial counts, attacks, and a mild stretch on some strokes.
fn build_corpus(dir: &Path) -> String {
    let tabla_f0 = [110.0, 146.8, 196.0, 261.6, 329.6];
    let clips_dir = dir.join("corpus");
    fs::create_dir(&clips_dir).unwrap();
    let mut manifest = String::from("path,stroke_label,tabla_id\n");
    for (i, &f0) in tabla_f0.iter().enumerate() {
        for j in 0..9 {
            let partials = 3 + (i + j) % 6;
            let amps: Vec<f64> = (0..partials)
                .map(|n| {
                    0.25 + 0.75
                        * (1.0 + i as f64 * 2.3 + j as f64 * 0.91 + n as f64 * 1.7)
                            .sin()
                            .abs()
                })
                .collect();
            let mut spec = SynthSpec::harmonic(f0, amps, 1.0, 44100);
            spec.attack = 0.008 + 0.002 * ((i + j) % 5) as f64;
            let spec = if j == 8 { spec.stretched(1.003) } else { spec };
            let clip = synth_stroke(&spec).unwrap();
            let name = format!("t{i}_s{j}.wav");
            write_wav(&clip, clips_dir.join(&name)).unwrap();
            manifest += &format!("corpus/{name},s{j},t{i}\n");
        }
    }
    manifest
}

fn read_rows(path: &Path) -> Vec<Vec<String>> {
    fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
        .lines()
        .filter(|l| !l.starts_with('#'))
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn cell(rows: &[Vec<String>], i: usize, j: usize) -> f64 {
    rows[i][j]
        .parse()
        .unwrap_or_else(|_| panic!("cell ({i},{j}) = {:?}", rows[i][j]))
}

#[test]
fn acceptance_9_end_to_end_corpus() {
    let c = Criterion::new(9, "45-clip corpus through batch, correlate, and factor");
    let dir = tempfile::tempdir().unwrap();
    let manifest_path = dir.path().join("manifest.csv");
    fs::write(&manifest_path, build_corpus(dir.path())).unwrap();
    let features = dir.path().join("features.csv");
    let reports = dir.path().join("reports");

    let started = Instant::now();
    run_ok(
        talim()
            .arg("batch")
            .arg(&manifest_path)
            .arg("-o")
            .arg(&features),
    );
    run_ok(
        talim()
            .arg("correlate")
            .arg(&features)
            .arg("--out-dir")
            .arg(&reports),
    );
    run_ok(
        talim()
            .arg("factor")
            .arg(&features)
            .args(["--factors", "auto", "--suppress", "0.4"])
            .arg("--out-dir")
            .arg(&reports),
    );
    let elapsed = started.elapsed();
    assert!(elapsed.as_secs_f64() < 30.0, "pipeline took {elapsed:?}");

    // Feature matrix: full corpus, finite cells, partition identities.
    let rows = read_rows(&features);
    assert_eq!(rows.len(), 46, "header plus 45 strokes");
    assert_eq!(rows[0].len(), 15);
    for i in 1..rows.len() {
        assert_eq!(rows[i].len(), 15, "row {i}");
        for j in 1..15 {
            assert!(cell(&rows, i, j).is_finite(), "row {i} col {j}");
        }
        let t1 = cell(&rows, i, 2);
        let t2 = cell(&rows, i, 3);
        let t3 = cell(&rows, i, 4);
        let odd = cell(&rows, i, 5);
        let even = cell(&rows, i, 6);
        assert!((t1 + t2 + t3 - 1.0).abs() < 1e-5, "row {i} tristimulus sum");
        assert!((t1 + odd + even - 1.0).abs() < 1e-5, "row {i} parity sum");
    }

    // Correlation matrix: unit diagonal, symmetry, bounded entries.
    let r = read_rows(&reports.join("correlation_r.csv"));
    assert_eq!(r.len(), 15);
    for i in 1..15 {
        assert_eq!(r[i][i], "1.000000", "diagonal at {i}");
        for j in 1..15 {
            let rij = cell(&r, i, j);
            assert!(rij.abs() <= 1.0 + 1e-9, "r({i},{j}) = {rij}");
            assert!(
                (rij - cell(&r, j, i)).abs() < 1e-9,
                "asymmetry at ({i},{j})"
            );
        }
    }
    let p = read_rows(&reports.join("correlation_p.csv"));
    for i in 1..15 {
        for j in 1..15 {
            let pij = cell(&p, i, j);
            assert!((0.0..=1.0).contains(&pij), "p({i},{j}) = {pij}");
        }
    }

    // Variance table: initial eigenvalue totals recover the trace.
    let variance = read_rows(&reports.join("variance.csv"));
    assert_eq!(variance.len(), 15);
    let trace: f64 = (1..15).map(|i| cell(&variance, i, 1)).sum();
    assert!((trace - 14.0).abs() < 1e-3, "trace {trace}");

    // Communalities bounded by 1; one row per descriptor.
    let communalities = read_rows(&reports.join("communalities.csv"));
    assert_eq!(communalities.len(), 15);
    for i in 1..15 {
        let extraction = cell(&communalities, i, 2);
        assert!(
            (0.0..=1.0 + 1e-6).contains(&extraction),
            "communality {extraction}"
        );
    }

    // Rotated loadings present for every descriptor; scree descending.
    let rotated = read_rows(&reports.join("rotated.csv"));
    assert_eq!(rotated.len(), 15);
    let scree = read_rows(&reports.join("scree.csv"));
    assert_eq!(scree.len(), 15);
    let eigenvalues: Vec<f64> = (1..15).map(|i| cell(&scree, i, 1)).collect();
    for pair in eigenvalues.windows(2) {
        assert!(pair[0] >= pair[1] - 1e-9, "scree not descending");
    }
    assert!(reports.join("correlation_report.csv").is_file());

    c.pass();
}

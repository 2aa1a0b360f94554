//! Stroke manifests: CSV rows of (path, stroke_label, tabla_id) naming the
//! clips of a corpus.

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use crate::CliError;

pub struct ManifestRow {
    pub path: PathBuf,
    pub stroke_label: String,
    pub tabla_id: String,
}

impl ManifestRow {
    /// Row identifier used in the feature matrix.
    pub fn id(&self) -> String {
        format!("{}_{}", self.tabla_id, self.stroke_label)
    }
}

/// Reads a manifest CSV with header `path,stroke_label,tabla_id`. Relative
/// clip paths are resolved against the manifest's directory. Duplicate
/// paths and empty fields are rejected.
pub fn read_manifest(path: &Path) -> Result<Vec<ManifestRow>, CliError> {
    let describe = |msg: String| CliError::Input(format!("manifest {}: {msg}", path.display()));
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .from_path(path)
        .map_err(|e| CliError::Input(format!("cannot read manifest {}: {e}", path.display())))?;

    let expected = ["path", "stroke_label", "tabla_id"];
    let headers = reader.headers().map_err(|e| describe(e.to_string()))?;
    if headers.len() != 3 || !headers.iter().zip(expected).all(|(h, e)| h == e) {
        return Err(describe("header must be path,stroke_label,tabla_id".into()));
    }

    let base = path.parent().unwrap_or_else(|| Path::new("."));
    let mut rows = Vec::new();
    let mut seen = HashSet::new();
    for (idx, record) in reader.records().enumerate() {
        let row = idx + 2;
        let record = record.map_err(|e| describe(format!("row {row}: {e}")))?;
        if record.len() != 3 {
            return Err(describe(format!(
                "row {row}: expected 3 fields, got {}",
                record.len()
            )));
        }
        if record.iter().any(str::is_empty) {
            return Err(describe(format!("row {row}: empty field")));
        }
        let clip_path = base.join(&record[0]);
        if !seen.insert(clip_path.clone()) {
            return Err(describe(format!(
                "row {row}: duplicate path {}",
                clip_path.display()
            )));
        }
        rows.push(ManifestRow {
            path: clip_path,
            stroke_label: record[1].to_string(),
            tabla_id: record[2].to_string(),
        });
    }
    Ok(rows)
}

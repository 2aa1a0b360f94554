//! CSV surfaces: feature matrices in, statistical report tables out.
//!
//! Readers use the `csv` crate so quoted labels survive; writers emit plain
//! rows with six-decimal fixed formatting for correlations and loadings and
//! scientific notation for p-values, which would otherwise round to zero.

use std::io;
use std::path::Path;

use ndarray::Array2;
use thiserror::Error;

use crate::stats::{
    significance_marker, CorrelationResult, FactorModel, FeatureMatrix, StatsError, VarianceRow,
};

#[derive(Debug, Error)]
pub enum ReportError {
    #[error("i/o failure: {0}")]
    Io(#[from] io::Error),
    #[error("csv failure: {0}")]
    Csv(#[from] csv::Error),
    #[error("row {row}: {msg}")]
    Parse { row: usize, msg: String },
    #[error(transparent)]
    Stats(#[from] StatsError),
}

/// Reads a labeled feature matrix: header `label,<col>,<col>,...`, one
/// observation per row with the row label first.
pub fn read_feature_matrix(path: impl AsRef<Path>) -> Result<FeatureMatrix, ReportError> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .from_path(path.as_ref())?;
    let headers = reader.headers()?.clone();
    if headers.len() < 3 {
        return Err(ReportError::Parse {
            row: 1,
            msg: "header needs a label column plus at least 2 feature columns".into(),
        });
    }
    let col_ids: Vec<String> = headers
        .iter()
        .skip(1)
        .map(|s| s.trim().to_string())
        .collect();

    let mut row_ids = Vec::new();
    let mut data = Vec::new();
    for (idx, record) in reader.records().enumerate() {
        let record = record?;
        let row_num = idx + 2;
        if record.len() != headers.len() {
            return Err(ReportError::Parse {
                row: row_num,
                msg: format!("expected {} fields, found {}", headers.len(), record.len()),
            });
        }
        row_ids.push(record[0].trim().to_string());
        for (j, field) in record.iter().skip(1).enumerate() {
            let v: f64 = field.trim().parse().map_err(|_| ReportError::Parse {
                row: row_num,
                msg: format!(
                    "column `{}`: cannot parse `{}` as a number",
                    col_ids[j], field
                ),
            })?;
            data.push(v);
        }
    }
    let n = row_ids.len();
    let p = col_ids.len();
    let values = Array2::from_shape_vec((n, p), data).map_err(|_| ReportError::Parse {
        row: n + 1,
        msg: "ragged matrix".into(),
    })?;
    Ok(FeatureMatrix::new(row_ids, col_ids, values)?)
}

/// Writes a labeled feature matrix in the format [`read_feature_matrix`]
/// accepts.
pub fn write_feature_matrix<W: io::Write>(
    mut w: W,
    m: &FeatureMatrix,
    label_header: &str,
) -> io::Result<()> {
    writeln!(
        w,
        "{}",
        join_row(label_header, m.col_ids().iter().map(String::as_str))
    )?;
    for (i, id) in m.row_ids().iter().enumerate() {
        let vals = m.values().row(i);
        writeln!(
            w,
            "{}",
            join_row(
                id,
                vals.iter()
                    .map(|v| format!("{v:.6}"))
                    .collect::<Vec<_>>()
                    .iter()
                    .map(String::as_str)
            )
        )?;
    }
    Ok(())
}

fn join_row<'a>(first: &str, rest: impl Iterator<Item = &'a str>) -> String {
    let mut out = String::from(first);
    for field in rest {
        out.push(',');
        out.push_str(field);
    }
    out
}

/// Writes a square labeled matrix (correlations) with `{:.6}` cells.
pub fn write_matrix_csv<W: io::Write>(
    mut w: W,
    labels: &[String],
    matrix: &Array2<f64>,
) -> io::Result<()> {
    writeln!(w, "{}", join_row("", labels.iter().map(String::as_str)))?;
    for (i, label) in labels.iter().enumerate() {
        let cells: Vec<String> = matrix.row(i).iter().map(|v| format!("{v:.6}")).collect();
        writeln!(w, "{}", join_row(label, cells.iter().map(String::as_str)))?;
    }
    Ok(())
}

/// Writes the p-value matrix in scientific notation.
pub fn write_p_matrix_csv<W: io::Write>(
    mut w: W,
    labels: &[String],
    p_values: &Array2<f64>,
) -> io::Result<()> {
    writeln!(w, "{}", join_row("", labels.iter().map(String::as_str)))?;
    for (i, label) in labels.iter().enumerate() {
        let cells: Vec<String> = p_values.row(i).iter().map(|v| format!("{v:.6e}")).collect();
        writeln!(w, "{}", join_row(label, cells.iter().map(String::as_str)))?;
    }
    Ok(())
}

/// Long-form correlation report: one row per variable pair with `r`, the
/// two-tailed `p`, and the star flag (`**` p < 0.01, `*` p < 0.05).
pub fn write_correlation_pairs<W: io::Write>(mut w: W, c: &CorrelationResult) -> io::Result<()> {
    writeln!(w, "var_a,var_b,r,p,flag")?;
    let labels = c.labels();
    for a in 0..labels.len() {
        for b in a + 1..labels.len() {
            let r = c.r()[[a, b]];
            let p = c.p_values()[[a, b]];
            writeln!(
                w,
                "{},{},{r:.6},{p:.6e},{}",
                labels[a],
                labels[b],
                significance_marker(p)
            )?;
        }
    }
    Ok(())
}

/// Communalities table: initial (always 1 for principal components) and
/// extraction values per variable.
pub fn write_communalities<W: io::Write>(
    mut w: W,
    labels: &[String],
    extraction: &[f64],
) -> io::Result<()> {
    writeln!(w, "variable,initial,extraction")?;
    for (label, h) in labels.iter().zip(extraction) {
        writeln!(w, "{label},1.000000,{h:.6}")?;
    }
    Ok(())
}

/// Variance-explained table with initial, extraction, and rotation blocks.
/// Extraction and rotation cells are blank past the retained factors.
pub fn write_variance_table<W: io::Write>(mut w: W, rows: &[VarianceRow]) -> io::Result<()> {
    writeln!(
        w,
        "factor,initial_total,initial_pct,initial_cum_pct,\
         extraction_total,extraction_pct,extraction_cum_pct,\
         rotation_total,rotation_pct,rotation_cum_pct"
    )?;
    for row in rows {
        let block = |e: &Option<crate::stats::VarianceEntry>| match e {
            Some(e) => format!("{:.6},{:.6},{:.6}", e.total, e.pct, e.cumulative_pct),
            None => ",,".to_string(),
        };
        writeln!(
            w,
            "{},{:.6},{:.6},{:.6},{},{}",
            row.factor,
            row.initial.total,
            row.initial.pct,
            row.initial.cumulative_pct,
            block(&row.extraction),
            block(&row.rotation),
        )?;
    }
    Ok(())
}

/// Rotated-loadings table with sub-threshold entries blanked; the footer
/// comment states the suppression threshold in effect.
pub fn write_rotated<W: io::Write>(
    mut w: W,
    labels: &[String],
    display: &[Vec<Option<f64>>],
    threshold: f64,
) -> io::Result<()> {
    let m = display.first().map_or(0, Vec::len);
    let factor_names: Vec<String> = (1..=m).map(|j| format!("factor_{j}")).collect();
    writeln!(
        w,
        "{}",
        join_row("variable", factor_names.iter().map(String::as_str))
    )?;
    for (label, row) in labels.iter().zip(display) {
        let cells: Vec<String> = row
            .iter()
            .map(|v| v.map_or(String::new(), |v| format!("{v:.6}")))
            .collect();
        writeln!(w, "{}", join_row(label, cells.iter().map(String::as_str)))?;
    }
    writeln!(
        w,
        "# loadings with absolute value below {threshold} suppressed"
    )?;
    Ok(())
}

/// Scree data as `factor,eigenvalue` rows.
pub fn write_scree<W: io::Write>(mut w: W, scree: &[(usize, f64)]) -> io::Result<()> {
    writeln!(w, "factor,eigenvalue")?;
    for (factor, eigenvalue) in scree {
        writeln!(w, "{factor},{eigenvalue:.6}")?;
    }
    Ok(())
}

/// Writes every factor-analysis table into `dir`: `communalities.csv`,
/// `variance.csv`, `rotated.csv`, and `scree.csv`.
pub fn write_factor_reports(
    dir: impl AsRef<Path>,
    labels: &[String],
    model: &FactorModel,
    suppress_threshold: f64,
) -> Result<(), ReportError> {
    use crate::stats::{scree_data, suppress};
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;

    let file = |name: &str| std::fs::File::create(dir.join(name));
    write_communalities(file("communalities.csv")?, labels, &model.communalities)?;
    write_variance_table(file("variance.csv")?, &model.variance)?;
    write_rotated(
        file("rotated.csv")?,
        labels,
        &suppress(&model.rotated, suppress_threshold),
        suppress_threshold,
    )?;
    write_scree(file("scree.csv")?, &scree_data(&model.eigenvalues))?;
    Ok(())
}

/// Writes the correlation tables into `dir`: `correlation_r.csv`,
/// `correlation_p.csv`, and the long-form `correlation_report.csv`.
pub fn write_correlation_reports(
    dir: impl AsRef<Path>,
    c: &CorrelationResult,
) -> Result<(), ReportError> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir)?;
    write_matrix_csv(
        std::fs::File::create(dir.join("correlation_r.csv"))?,
        c.labels(),
        c.r(),
    )?;
    write_p_matrix_csv(
        std::fs::File::create(dir.join("correlation_p.csv"))?,
        c.labels(),
        c.p_values(),
    )?;
    write_correlation_pairs(
        std::fs::File::create(dir.join("correlation_report.csv"))?,
        c,
    )?;
    Ok(())
}

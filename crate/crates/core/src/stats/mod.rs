//! Correlation and factor analysis over feature matrices.
//!
//! The workflow mirrors standard exploratory factor analysis as applied to
//! timbre descriptor tables: Pearson correlation with two-tailed t-test
//! p-values, principal-component extraction from the correlation matrix,
//! Kaiser eigenvalue-above-one retention, and varimax rotation of the
//! retained loadings. Rows of a [`FeatureMatrix`] are observations
//! (strokes), columns are variables (descriptors); [`FeatureMatrix::transposed`]
//! swaps the roles to correlate strokes instead.

pub mod distributions;
mod jacobi;

use ndarray::{s, Array2};
use thiserror::Error;

pub use distributions::{incomplete_beta, ln_gamma, significance_marker, t_two_tailed_p};

#[derive(Debug, Error)]
pub enum StatsError {
    #[error("column `{column}` has zero variance")]
    ZeroVariance { column: String },
    #[error("need at least 3 rows and 2 columns, got {rows}x{cols}")]
    BadShape { rows: usize, cols: usize },
    #[error("matrix contains non-finite values")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(&'static str),
}

/// A labeled observations-by-variables matrix.
#[derive(Debug, Clone)]
pub struct FeatureMatrix {
    row_ids: Vec<String>,
    col_ids: Vec<String>,
    values: Array2<f64>,
}

impl FeatureMatrix {
    /// Validates shape (at least 3 rows, 2 columns, matching labels) and
    /// finiteness.
    pub fn new(
        row_ids: Vec<String>,
        col_ids: Vec<String>,
        values: Array2<f64>,
    ) -> Result<Self, StatsError> {
        let (rows, cols) = values.dim();
        if rows < 3 || cols < 2 {
            return Err(StatsError::BadShape { rows, cols });
        }
        if row_ids.len() != rows || col_ids.len() != cols {
            return Err(StatsError::DimensionMismatch(
                "labels must match matrix shape",
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        Ok(Self {
            row_ids,
            col_ids,
            values,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_cols(&self) -> usize {
        self.values.ncols()
    }

    pub fn row_ids(&self) -> &[String] {
        &self.row_ids
    }

    pub fn col_ids(&self) -> &[String] {
        &self.col_ids
    }

    pub fn values(&self) -> &Array2<f64> {
        &self.values
    }

    /// Swaps observations and variables, e.g. to correlate strokes over
    /// their descriptor profiles instead of descriptors over strokes.
    pub fn transposed(&self) -> Result<Self, StatsError> {
        Self::new(
            self.col_ids.clone(),
            self.row_ids.clone(),
            self.values.t().to_owned(),
        )
    }

    /// Labels of columns whose variance is exactly zero. Such columns
    /// cannot enter a correlation, so callers may want to drop or flag them
    /// up front.
    pub fn zero_variance_columns(&self) -> Vec<String> {
        let stds = self.column_stds();
        self.col_ids
            .iter()
            .zip(stds)
            .filter(|(_, s)| *s == 0.0)
            .map(|(id, _)| id.clone())
            .collect()
    }

    fn column_means(&self) -> Vec<f64> {
        let n = self.n_rows() as f64;
        (0..self.n_cols())
            .map(|j| self.values.column(j).sum() / n)
            .collect()
    }

    /// Sample standard deviations (n - 1 denominator).
    fn column_stds(&self) -> Vec<f64> {
        let n = self.n_rows() as f64;
        let means = self.column_means();
        (0..self.n_cols())
            .map(|j| {
                let ss: f64 = self
                    .values
                    .column(j)
                    .iter()
                    .map(|v| (v - means[j]) * (v - means[j]))
                    .sum();
                (ss / (n - 1.0)).sqrt()
            })
            .collect()
    }
}

/// Pearson correlation matrix of the columns, or an error naming the first
/// constant column. The diagonal is exactly 1.
fn correlation_matrix(m: &FeatureMatrix) -> Result<Array2<f64>, StatsError> {
    let n = m.n_rows();
    let p = m.n_cols();
    let means = m.column_means();
    let stds = m.column_stds();
    if let Some(j) = stds.iter().position(|&s| s == 0.0) {
        return Err(StatsError::ZeroVariance {
            column: m.col_ids[j].clone(),
        });
    }

    let mut z = Array2::<f64>::zeros((n, p));
    for j in 0..p {
        for i in 0..n {
            z[[i, j]] = (m.values[[i, j]] - means[j]) / stds[j];
        }
    }

    let mut r = Array2::<f64>::zeros((p, p));
    for a in 0..p {
        r[[a, a]] = 1.0;
        for b in a + 1..p {
            let dot: f64 = (0..n).map(|i| z[[i, a]] * z[[i, b]]).sum();
            let v = dot / (n as f64 - 1.0);
            r[[a, b]] = v;
            r[[b, a]] = v;
        }
    }
    Ok(r)
}

/// Output of [`pearson`]: symmetric `r` and `p` matrices over the columns.
#[derive(Debug, Clone)]
pub struct CorrelationResult {
    labels: Vec<String>,
    r: Array2<f64>,
    p_values: Array2<f64>,
    n: usize,
}

impl CorrelationResult {
    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn r(&self) -> &Array2<f64> {
        &self.r
    }

    pub fn p_values(&self) -> &Array2<f64> {
        &self.p_values
    }

    /// Number of observations each correlation is based on.
    pub fn n(&self) -> usize {
        self.n
    }
}

/// Two-tailed p-value for a Pearson correlation of `r` over `n`
/// observations, via the exact t-transform `t = r sqrt((n-2)/(1-r^2))`.
pub fn correlation_p_value(r: f64, n: usize) -> f64 {
    assert!(n >= 3, "need at least 3 observations");
    let r = r.clamp(-1.0, 1.0);
    if 1.0 - r * r <= 0.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    let t = r * (df / (1.0 - r * r)).sqrt();
    t_two_tailed_p(t, df)
}

/// Correlates every pair of columns; `p_values` follow the two-tailed
/// t-test. Diagonal entries are `r = 1`, `p = 0`.
pub fn pearson(m: &FeatureMatrix) -> Result<CorrelationResult, StatsError> {
    let r = correlation_matrix(m)?;
    let p = m.n_cols();
    let mut p_values = Array2::<f64>::zeros((p, p));
    for a in 0..p {
        for b in a + 1..p {
            let pv = correlation_p_value(r[[a, b]], m.n_rows());
            p_values[[a, b]] = pv;
            p_values[[b, a]] = pv;
        }
    }
    Ok(CorrelationResult {
        labels: m.col_ids.clone(),
        r,
        p_values,
        n: m.n_rows(),
    })
}

/// Principal components of the column correlation matrix.
#[derive(Debug, Clone)]
pub struct Pca {
    /// All `p` eigenvalues, descending.
    pub eigenvalues: Vec<f64>,
    /// Full `p x p` loading matrix: eigenvectors scaled by the square root
    /// of their eigenvalues, one component per column.
    pub loadings: Array2<f64>,
}

/// Extracts principal components from the correlation matrix via cyclic
/// Jacobi sweeps. Components are ordered by descending eigenvalue, and each
/// loading column is sign-normalized so its largest-magnitude entry is
/// positive.
pub fn pca(m: &FeatureMatrix) -> Result<Pca, StatsError> {
    let corr = correlation_matrix(m)?;
    let p = corr.nrows();
    let (vals, vecs) = jacobi::symmetric_eigen(&corr);

    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| vals[b].partial_cmp(&vals[a]).unwrap());

    let mut eigenvalues = Vec::with_capacity(p);
    let mut loadings = Array2::<f64>::zeros((p, p));
    for (j, &k) in order.iter().enumerate() {
        let lambda = vals[k];
        eigenvalues.push(lambda);
        // Tiny negative eigenvalues are rank-deficiency noise.
        let scale = lambda.max(0.0).sqrt();
        let col: Vec<f64> = (0..p).map(|i| vecs[[i, k]]).collect();
        let dominant = col
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .map(|(_, &v)| v)
            .unwrap_or(1.0);
        let sign = if dominant < 0.0 { -1.0 } else { 1.0 };
        for i in 0..p {
            loadings[[i, j]] = col[i] * sign * scale;
        }
    }
    Ok(Pca {
        eigenvalues,
        loadings,
    })
}

/// How many factors to keep after extraction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RetentionPolicy {
    /// Keep eigenvalues strictly greater than 1 (Kaiser criterion).
    Kaiser,
    /// Keep a fixed count, clamped to `[1, p]`.
    Fixed(usize),
}

/// Retention decision, with a flag for the degenerate Kaiser case.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Retention {
    pub factors: usize,
    /// True when the Kaiser rule matched nothing and the count fell back
    /// to a single factor.
    pub degenerate: bool,
}

pub fn retain_factors(eigenvalues: &[f64], policy: RetentionPolicy) -> Retention {
    let p = eigenvalues.len();
    match policy {
        RetentionPolicy::Kaiser => {
            let count = eigenvalues.iter().filter(|&&l| l > 1.0).count();
            if count == 0 {
                Retention {
                    factors: 1,
                    degenerate: true,
                }
            } else {
                Retention {
                    factors: count,
                    degenerate: false,
                }
            }
        }
        RetentionPolicy::Fixed(k) => Retention {
            factors: k.clamp(1, p),
            degenerate: false,
        },
    }
}

/// Per-variable communalities: row sums of squared loadings.
pub fn communalities(loadings: &Array2<f64>) -> Vec<f64> {
    (0..loadings.nrows())
        .map(|i| loadings.row(i).iter().map(|v| v * v).sum())
        .collect()
}

/// Varimax criterion: summed column variances of squared loadings.
fn varimax_criterion(x: &Array2<f64>) -> f64 {
    let n = x.nrows() as f64;
    let mut total = 0.0;
    for j in 0..x.ncols() {
        let col = x.column(j);
        let sum_sq: f64 = col.iter().map(|v| v * v).sum();
        let sum_quad: f64 = col.iter().map(|v| v * v * v * v).sum();
        total += (n * sum_quad - sum_sq * sum_sq) / (n * n);
    }
    total
}

/// Result of a varimax rotation, with the criterion value recorded after
/// the initial state and each completed sweep.
#[derive(Debug, Clone)]
pub struct VarimaxOutcome {
    pub rotated: Array2<f64>,
    /// Criterion trace; non-decreasing by construction.
    pub criterion_trace: Vec<f64>,
    pub sweeps: usize,
}

/// Varimax rotation of a loading matrix by pairwise planar rotations with
/// the closed-form optimal angle.
///
/// With `kaiser_normalize`, rows are scaled to unit communality before
/// rotation and restored afterwards (rows with zero communality pass
/// through untouched). Sweeps stop when the criterion improves by less than
/// 1e-8 or after 100 sweeps. Output columns are ordered by descending sum
/// of squared loadings and sign-normalized like PCA loadings.
pub fn varimax_detailed(loadings: &Array2<f64>, kaiser_normalize: bool) -> VarimaxOutcome {
    let (p, m) = loadings.dim();
    let mut x = loadings.clone();

    let row_norms: Vec<f64> = (0..p)
        .map(|i| x.row(i).iter().map(|v| v * v).sum::<f64>().sqrt())
        .collect();
    if kaiser_normalize {
        for i in 0..p {
            if row_norms[i] > 1e-12 {
                for j in 0..m {
                    x[[i, j]] /= row_norms[i];
                }
            }
        }
    }

    let mut trace = vec![varimax_criterion(&x)];
    let mut sweeps = 0;
    if m >= 2 {
        for _ in 0..100 {
            for a in 0..m - 1 {
                for b in a + 1..m {
                    rotate_pair(&mut x, a, b);
                }
            }
            sweeps += 1;
            let v = varimax_criterion(&x);
            let improved = v - trace.last().unwrap();
            trace.push(v);
            if improved < 1e-8 {
                break;
            }
        }
    }

    if kaiser_normalize {
        for i in 0..p {
            if row_norms[i] > 1e-12 {
                for j in 0..m {
                    x[[i, j]] *= row_norms[i];
                }
            }
        }
    }

    // Order columns by explained variance, then fix signs.
    let col_ss: Vec<f64> = (0..m)
        .map(|j| x.column(j).iter().map(|v| v * v).sum())
        .collect();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| col_ss[b].partial_cmp(&col_ss[a]).unwrap());
    let mut rotated = Array2::<f64>::zeros((p, m));
    for (j, &k) in order.iter().enumerate() {
        let dominant = x
            .column(k)
            .iter()
            .cloned()
            .max_by(|a, b| a.abs().partial_cmp(&b.abs()).unwrap())
            .unwrap_or(1.0);
        let sign = if dominant < 0.0 { -1.0 } else { 1.0 };
        for i in 0..p {
            rotated[[i, j]] = x[[i, k]] * sign;
        }
    }

    VarimaxOutcome {
        rotated,
        criterion_trace: trace,
        sweeps,
    }
}

/// Rotates columns `a`, `b` by the closed-form angle that maximizes the
/// pair's varimax contribution.
fn rotate_pair(x: &mut Array2<f64>, a: usize, b: usize) {
    let p = x.nrows() as f64;
    let mut sum_u = 0.0;
    let mut sum_v = 0.0;
    let mut sum_uv = 0.0;
    let mut sum_u2_v2 = 0.0;
    for i in 0..x.nrows() {
        let (xa, xb) = (x[[i, a]], x[[i, b]]);
        let u = xa * xa - xb * xb;
        let v = 2.0 * xa * xb;
        sum_u += u;
        sum_v += v;
        sum_uv += u * v;
        sum_u2_v2 += u * u - v * v;
    }
    let num = 2.0 * (p * sum_uv - sum_u * sum_v);
    let den = p * sum_u2_v2 - (sum_u * sum_u - sum_v * sum_v);
    let phi = 0.25 * num.atan2(den);
    if phi.abs() < 1e-15 {
        return;
    }
    let (sin, cos) = phi.sin_cos();
    for i in 0..x.nrows() {
        let (xa, xb) = (x[[i, a]], x[[i, b]]);
        x[[i, a]] = cos * xa + sin * xb;
        x[[i, b]] = -sin * xa + cos * xb;
    }
}

/// Convenience wrapper returning only the rotated matrix.
pub fn varimax(loadings: &Array2<f64>, kaiser_normalize: bool) -> Array2<f64> {
    varimax_detailed(loadings, kaiser_normalize).rotated
}

/// One `(total, percent of variance, cumulative percent)` triple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceEntry {
    pub total: f64,
    pub pct: f64,
    pub cumulative_pct: f64,
}

/// One row of the variance-explained table. `factor` is 1-based. The
/// extraction and rotation entries are present only for retained factors.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceRow {
    pub factor: usize,
    pub initial: VarianceEntry,
    pub extraction: Option<VarianceEntry>,
    pub rotation: Option<VarianceEntry>,
}

/// Builds the variance-explained table from the full eigenvalue list plus
/// the retained (unrotated and rotated) loading matrices.
pub fn variance_table(
    eigenvalues: &[f64],
    loadings: &Array2<f64>,
    rotated: &Array2<f64>,
) -> Vec<VarianceRow> {
    let p = eigenvalues.len();
    let m = loadings.ncols();
    let denom = p as f64;
    let col_ss = |mat: &Array2<f64>, j: usize| -> f64 { mat.column(j).iter().map(|v| v * v).sum() };

    let mut rows = Vec::with_capacity(p);
    let mut cum_init = 0.0;
    let mut cum_ext = 0.0;
    let mut cum_rot = 0.0;
    for j in 0..p {
        let pct = 100.0 * eigenvalues[j] / denom;
        cum_init += pct;
        let initial = VarianceEntry {
            total: eigenvalues[j],
            pct,
            cumulative_pct: cum_init,
        };

        let (extraction, rotation) = if j < m {
            let ext_ss = col_ss(loadings, j);
            let ext_pct = 100.0 * ext_ss / denom;
            cum_ext += ext_pct;
            let rot_ss = col_ss(rotated, j);
            let rot_pct = 100.0 * rot_ss / denom;
            cum_rot += rot_pct;
            (
                Some(VarianceEntry {
                    total: ext_ss,
                    pct: ext_pct,
                    cumulative_pct: cum_ext,
                }),
                Some(VarianceEntry {
                    total: rot_ss,
                    pct: rot_pct,
                    cumulative_pct: cum_rot,
                }),
            )
        } else {
            (None, None)
        };
        rows.push(VarianceRow {
            factor: j + 1,
            initial,
            extraction,
            rotation,
        });
    }
    rows
}

/// Scree plot data: `(factor number, eigenvalue)` pairs, 1-based.
pub fn scree_data(eigenvalues: &[f64]) -> Vec<(usize, f64)> {
    eigenvalues
        .iter()
        .enumerate()
        .map(|(i, &l)| (i + 1, l))
        .collect()
}

/// Display form of a loading matrix with small loadings blanked: entries
/// with `|loading| < threshold` become `None`.
pub fn suppress(loadings: &Array2<f64>, threshold: f64) -> Vec<Vec<Option<f64>>> {
    (0..loadings.nrows())
        .map(|i| {
            (0..loadings.ncols())
                .map(|j| {
                    let v = loadings[[i, j]];
                    if v.abs() < threshold {
                        None
                    } else {
                        Some(v)
                    }
                })
                .collect()
        })
        .collect()
}

/// Complete factor-analysis output for one matrix.
#[derive(Debug, Clone)]
pub struct FactorModel {
    /// All eigenvalues of the correlation matrix, descending.
    pub eigenvalues: Vec<f64>,
    /// Unrotated loadings for the retained factors, `p x m`.
    pub loadings: Array2<f64>,
    /// Extraction communalities (row sums of squared retained loadings).
    pub communalities: Vec<f64>,
    pub variance: Vec<VarianceRow>,
    /// Varimax-rotated loadings, `p x m`.
    pub rotated: Array2<f64>,
    pub retention: Retention,
}

/// Runs extraction, retention, and varimax rotation in one step.
pub fn factor_analysis(
    m: &FeatureMatrix,
    policy: RetentionPolicy,
    kaiser_normalize: bool,
) -> Result<FactorModel, StatsError> {
    let pca_result = pca(m)?;
    let retention = retain_factors(&pca_result.eigenvalues, policy);
    let loadings = pca_result
        .loadings
        .slice(s![.., ..retention.factors])
        .to_owned();
    let rotated = varimax(&loadings, kaiser_normalize);
    let variance = variance_table(&pca_result.eigenvalues, &loadings, &rotated);
    Ok(FactorModel {
        eigenvalues: pca_result.eigenvalues,
        communalities: communalities(&loadings),
        loadings,
        variance,
        rotated,
        retention,
    })
}

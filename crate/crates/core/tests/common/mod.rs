//! Shared oracles and helpers for the integration and acceptance suites.
//!
//! Everything here is deliberately independent of the library's own
//! implementations: the DFT oracle is a direct O(N^2) evaluation, the
//! correlation oracle a plain two-pass formula, and the eigenvalue
//! cross-check a power iteration.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Direct O(N^2) windowed DFT magnitude oracle with the same `2/sum(w)`
/// amplitude normalization the library uses, bins `0..=N/2`.
pub fn dft_magnitude_oracle(frame: &[f64], window: &[f64]) -> Vec<f64> {
    let n = frame.len();
    let scale = 2.0 / window.iter().sum::<f64>();
    (0..=n / 2)
        .map(|m| {
            let mut re = 0.0;
            let mut im = 0.0;
            for (k, (&x, &w)) in frame.iter().zip(window).enumerate() {
                let phase = -2.0 * std::f64::consts::PI * (m * k) as f64 / n as f64;
                re += x * w * phase.cos();
                im += x * w * phase.sin();
            }
            (re * re + im * im).sqrt() * scale
        })
        .collect()
}

/// Two-pass Pearson correlation of two equal-length slices.
pub fn pearson_oracle(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut num = 0.0;
    let mut dx = 0.0;
    let mut dy = 0.0;
    for (a, b) in x.iter().zip(y) {
        num += (a - mx) * (b - my);
        dx += (a - mx) * (a - mx);
        dy += (b - my) * (b - my);
    }
    num / (dx * dy).sqrt()
}

/// Dominant eigenvalue of a symmetric matrix by power iteration.
pub fn dominant_eigenvalue(a: &ndarray::Array2<f64>) -> f64 {
    let n = a.nrows();
    let mut v = vec![1.0; n];
    for _ in 0..500 {
        let mut next = vec![0.0; n];
        for i in 0..n {
            for j in 0..n {
                next[i] += a[[i, j]] * v[j];
            }
        }
        let norm = next.iter().map(|x| x * x).sum::<f64>().sqrt();
        for x in &mut next {
            *x /= norm;
        }
        v = next;
    }
    let mut av = vec![0.0; n];
    for i in 0..n {
        for j in 0..n {
            av[i] += a[[i, j]] * v[j];
        }
    }
    v.iter().zip(&av).map(|(x, y)| x * y).sum()
}

/// Random partial-amplitude profile in `[0.1, 1.0]`.
pub fn random_amps(rng: &mut ChaCha8Rng, count: usize) -> Vec<f64> {
    (0..count).map(|_| rng.gen_range(0.1..=1.0)).collect()
}

/// Prints one PASS/FAIL line per acceptance criterion, including when the
/// owning test panics mid-way.
pub struct Criterion {
    number: usize,
    summary: &'static str,
    passed: bool,
}

impl Criterion {
    pub fn new(number: usize, summary: &'static str) -> Self {
        Self {
            number,
            summary,
            passed: false,
        }
    }

    pub fn pass(mut self) {
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

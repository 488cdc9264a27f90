//! Wall-clock comparison of the full deterministic SVD and the randomized SVD.

use std::io::Write;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::linalg::{full_svd, matrix_with_spectrum, rsvd, SketchConfig};
use crate::{Error, Matrix, Result};

pub const WARMUP_RUNS: usize = 1;
pub const TIMED_RUNS: usize = 5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BenchCase {
    pub rows: usize,
    pub cols: usize,
    pub k: usize,
    pub p: usize,
    pub q: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub rows: usize,
    pub cols: usize,
    pub k: usize,
    pub p: usize,
    pub q: usize,
    pub seed: u64,
    pub deterministic_ms: f64,
    pub randomized_ms: f64,
    pub speedup: f64,
    /// `‖A − A_k‖_F / ‖A‖_F` for the truncated full SVD.
    pub deterministic_error: f64,
    /// Same for the randomized factors.
    pub randomized_error: f64,
}

/// Median of `TIMED_RUNS` timings after `WARMUP_RUNS` discarded runs.
pub fn median_time<T>(mut f: impl FnMut() -> Result<T>) -> Result<(Duration, T)> {
    for _ in 0..WARMUP_RUNS {
        f()?;
    }
    let mut times = Vec::with_capacity(TIMED_RUNS);
    let mut last = None;
    for _ in 0..TIMED_RUNS {
        let start = Instant::now();
        let out = f()?;
        times.push(start.elapsed());
        last = Some(out);
    }
    times.sort();
    Ok((times[TIMED_RUNS / 2], last.expect("at least one timed run")))
}

/// Test matrix with singular values `σ_i = 1/(1+i)`.
pub fn bench_matrix(rows: usize, cols: usize, seed: u64) -> Result<Matrix> {
    let sigmas: Vec<f64> = (0..rows.min(cols)).map(|i| 1.0 / (1.0 + i as f64)).collect();
    matrix_with_spectrum(rows, cols, &sigmas, seed)
}

fn relative_error(a: &Matrix, approx: &Matrix) -> f64 {
    (a - approx).norm() / a.norm()
}

pub fn benchmark_svd(cases: &[BenchCase], seeds: &[u64]) -> Result<Vec<BenchRow>> {
    if cases.is_empty() || seeds.is_empty() {
        return Err(Error::Config("benchmark needs at least one case and one seed".into()));
    }
    let mut rows = Vec::new();
    for c in cases {
        for &seed in seeds {
            let a = bench_matrix(c.rows, c.cols, seed)?;
            let cfg = SketchConfig::new(c.k, c.p, c.q, seed);
            cfg.validate_for(c.rows, c.cols)?;
            let (det_t, full) = median_time(|| full_svd(&a))?;
            let (rnd_t, approx) = median_time(|| rsvd(&a, &cfg))?;
            let det_ms = det_t.as_secs_f64() * 1e3;
            let rnd_ms = rnd_t.as_secs_f64() * 1e3;
            rows.push(BenchRow {
                rows: c.rows,
                cols: c.cols,
                k: c.k,
                p: c.p,
                q: c.q,
                seed,
                deterministic_ms: det_ms,
                randomized_ms: rnd_ms,
                speedup: det_ms / rnd_ms,
                deterministic_error: relative_error(&a, &full.truncate(c.k).reconstruct()),
                randomized_error: relative_error(&a, &approx.reconstruct()),
            });
        }
    }
    Ok(rows)
}

pub fn write_bench_csv<W: Write>(rows: &[BenchRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

//! End-to-end background subtraction: frame ingestion, chunked rDMD,
//! thresholding, evaluation and report writing.

mod bench;
mod pgm;
mod synthetic;

pub use bench::{bench_matrix, benchmark_svd, median_time, write_bench_csv, BenchCase, BenchRow, TIMED_RUNS, WARMUP_RUNS};
pub use pgm::{
    decode_pgm, encode_pgm, load_frame_set, load_frames, load_masks, numbered_stems, read_mask, read_pgm, resolve_frames,
    save_frames, save_masks, write_mask, write_pgm, FrameSet, PgmImage,
};
pub use synthetic::{generate_synthetic, Background, MovingObject, Rect, SyntheticSpec};

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::ops::Range;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::Serialize;

use crate::background::{
    background_model, fourier_modes, median_filter_sequence, partition_modes, residual, threshold_mask, FourierModes,
    ForegroundMaskSequence, ModePartition, ResidualSequence, DEFAULT_BACKGROUND_MODES, DEFAULT_MEDIAN_KERNEL,
};
use crate::dmd::{rdmd, AmplitudeAnchor, DmdDecomposition, SnapshotMatrix};
use crate::eval::{
    best_f_from_rows, default_taus, roc_from_rows, roc_summary, sweep_thresholds, threshold_counts, write_metrics_csv, write_roc_csv,
    ConfusionCounts, RocCurve, ThresholdRow, DEFAULT_SWEEP_STEPS,
};
use crate::linalg::SketchConfig;
use crate::{Complex64, Error, Result};

pub const DEFAULT_CHUNK_LENGTH: usize = 200;
pub const DEFAULT_TARGET_RANK: usize = 11;
pub const DEFAULT_OVERSAMPLING: usize = 2;
pub const DEFAULT_SUBSPACE_ITERATIONS: usize = 1;

#[derive(Debug, Clone, PartialEq)]
pub enum InputSource {
    /// Glob pattern or directory of PGM frames, with optional truth masks.
    Frames { pattern: String, truth: Option<String> },
    Synthetic(SyntheticSpec),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Fixed(f64),
    /// Evenly spaced thresholds over `[0, max residual]`; the mask is cut at
    /// the one with the best F-measure. Needs ground truth.
    Sweep { steps: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input: InputSource,
    pub chunk_length: usize,
    pub k: usize,
    pub p: usize,
    pub q: usize,
    pub seed: u64,
    pub n_background: usize,
    pub anchor: AmplitudeAnchor,
    pub threshold: Threshold,
    /// Side of the square median filter; 1 disables filtering.
    pub median_kernel: usize,
    pub output_dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn new(input: InputSource, seed: u64) -> Self {
        RunConfig {
            input,
            chunk_length: DEFAULT_CHUNK_LENGTH,
            k: DEFAULT_TARGET_RANK,
            p: DEFAULT_OVERSAMPLING,
            q: DEFAULT_SUBSPACE_ITERATIONS,
            seed,
            n_background: DEFAULT_BACKGROUND_MODES,
            anchor: AmplitudeAnchor::MedianFrame,
            threshold: Threshold::Sweep { steps: DEFAULT_SWEEP_STEPS },
            median_kernel: DEFAULT_MEDIAN_KERNEL,
            output_dir: None,
        }
    }

    fn has_truth(&self) -> bool {
        match &self.input {
            InputSource::Frames { truth, .. } => truth.is_some(),
            InputSource::Synthetic(_) => true,
        }
    }

    /// Smallest chunk the sketch fits in: `k + p + 1` frames.
    pub fn min_chunk(&self) -> usize {
        self.k + self.p + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.chunk_length < 2 {
            return Err(Error::Config(format!("chunk length must be at least 2, got {}", self.chunk_length)));
        }
        if self.k == 0 {
            return Err(Error::Config("target rank must be positive".into()));
        }
        if self.k + self.p > self.chunk_length - 1 {
            return Err(Error::Config(format!(
                "k + p = {} exceeds chunk length − 1 = {}",
                self.k + self.p,
                self.chunk_length - 1
            )));
        }
        if self.n_background == 0 {
            return Err(Error::Config("background mode count must be positive".into()));
        }
        if self.median_kernel == 0 || self.median_kernel % 2 == 0 {
            return Err(Error::Config(format!("median kernel must be odd and positive, got {}", self.median_kernel)));
        }
        match self.threshold {
            Threshold::Fixed(t) if !(t >= 0.0) || !t.is_finite() => {
                return Err(Error::Config(format!("threshold {t} is not a finite nonnegative value")));
            }
            Threshold::Sweep { steps } if steps < 2 => {
                return Err(Error::Config(format!("a sweep needs at least 2 thresholds, got {steps}")));
            }
            Threshold::Sweep { .. } if !self.has_truth() => {
                return Err(Error::Config("a threshold sweep needs ground truth".into()));
            }
            _ => {}
        }
        if let InputSource::Synthetic(spec) = &self.input {
            spec.validate()?;
        }
        Ok(())
    }
}

/// Consecutive chunks of `len` frames. A remainder shorter than `min_last`
/// is merged into the previous chunk.
pub fn chunk_ranges(n: usize, len: usize, min_last: usize) -> Vec<Range<usize>> {
    let mut out: Vec<Range<usize>> = Vec::new();
    let mut start = 0;
    while start < n {
        let end = (start + len).min(n);
        if end - start < min_last && !out.is_empty() {
            out.last_mut().expect("non-empty").end = end;
        } else {
            out.push(start..end);
        }
        start = end;
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkTiming {
    pub decompose: Duration,
    pub background: Duration,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChunkReport {
    pub index: usize,
    pub frames: Range<usize>,
    pub eigenvalues: Vec<Complex64>,
    pub omega: Vec<Complex64>,
    pub background: Vec<usize>,
    pub diagnostics: Vec<String>,
    /// Set when the chunk failed; its frames then have no residual or mask.
    pub error: Option<String>,
    pub timing: ChunkTiming,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepSummary {
    pub best_tau: f64,
    pub best_f: f64,
    pub auc: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub height: usize,
    pub width: usize,
    pub frames: usize,
    pub config: RunConfig,
    pub tau: f64,
    /// Sweep over raw masks.
    pub raw_sweep: Option<SweepSummary>,
    /// Sweep over median-filtered masks; the run's `tau` comes from here
    /// when filtering is on.
    pub filtered_sweep: Option<SweepSummary>,
    /// Counts of the emitted masks against truth.
    pub counts: Option<ConfusionCounts>,
    pub chunks: Vec<ChunkReport>,
    pub elapsed: Duration,
}

impl RunReport {
    /// Plain-text report. Timings are the only nondeterministic content and
    /// can be left out.
    pub fn render(&self, with_timings: bool) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "rdmd background subtraction");
        let _ = writeln!(s, "frames={} height={} width={}", self.frames, self.height, self.width);
        let _ = writeln!(
            s,
            "chunk_length={} k={} p={} q={} seed={} n_background={} anchor={} median_kernel={}",
            c.chunk_length, c.k, c.p, c.q, c.seed, c.n_background, c.anchor, c.median_kernel
        );
        let _ = writeln!(s, "tau={:.6}", self.tau);
        for (name, sw) in [("raw", &self.raw_sweep), ("filtered", &self.filtered_sweep)] {
            if let Some(sw) = sw {
                let _ = writeln!(s, "sweep {name}: best_tau={:.6} best_f={:.6} auc={:.6}", sw.best_tau, sw.best_f, sw.auc);
            }
        }
        if let Some(k) = &self.counts {
            let _ = writeln!(s, "counts tp={} fp={} tn={} fn={}", k.tp, k.fp, k.tn, k.fn_);
        }
        for ch in &self.chunks {
            let _ = writeln!(s, "chunk {} frames {}..{}", ch.index, ch.frames.start, ch.frames.end);
            if let Some(e) = &ch.error {
                let _ = writeln!(s, "  error: {e}");
            }
            for d in &ch.diagnostics {
                let _ = writeln!(s, "  note: {d}");
            }
            for (i, (l, w)) in ch.eigenvalues.iter().zip(&ch.omega).enumerate() {
                let tag = if ch.background.contains(&i) { "background" } else { "foreground" };
                let _ = writeln!(
                    s,
                    "  mode {i:>3} lambda={:+.9}{:+.9}i |omega|={:.9} {tag}",
                    l.re,
                    l.im,
                    w.norm()
                );
            }
            if with_timings {
                let _ = writeln!(
                    s,
                    "  time decompose={:.3}ms background={:.3}ms",
                    ch.timing.decompose.as_secs_f64() * 1e3,
                    ch.timing.background.as_secs_f64() * 1e3
                );
            }
        }
        if with_timings {
            let _ = writeln!(s, "total={:.3}ms", self.elapsed.as_secs_f64() * 1e3);
        }
        s
    }
}

/// One row of the Fourier-mode table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct OmegaRow {
    pub chunk: usize,
    pub mode: usize,
    pub lambda_re: f64,
    pub lambda_im: f64,
    pub omega_re: f64,
    pub omega_im: f64,
    pub omega_abs: f64,
    pub background: bool,
}

pub fn omega_rows(chunk: usize, dec: &DmdDecomposition, fm: &FourierModes, part: Option<&ModePartition>) -> Vec<OmegaRow> {
    (0..dec.rank())
        .map(|i| OmegaRow {
            chunk,
            mode: i,
            lambda_re: dec.eigenvalues[i].re,
            lambda_im: dec.eigenvalues[i].im,
            omega_re: fm.omega[i].re,
            omega_im: fm.omega[i].im,
            omega_abs: fm.omega[i].norm(),
            background: part.is_some_and(|p| p.background.contains(&i)),
        })
        .collect()
}

pub fn write_omega_csv<W: Write>(rows: &[OmegaRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// Everything a run produced. Residuals and masks cover the frames of the
/// chunks that succeeded, in frame order.
#[derive(Debug, Clone)]
pub struct RunOutput {
    pub report: RunReport,
    pub residual: ResidualSequence,
    pub masks: ForegroundMaskSequence,
    pub truth: Option<ForegroundMaskSequence>,
    /// Frame indices covered by `residual` and `masks`.
    pub covered: Vec<usize>,
    pub stems: Vec<String>,
    pub raw_rows: Vec<ThresholdRow>,
    pub filtered_rows: Vec<ThresholdRow>,
    pub roc: Option<RocCurve>,
}

struct ChunkResult {
    report: ChunkReport,
    residual: Option<ResidualSequence>,
    omega_rows: Vec<OmegaRow>,
}

fn run_chunk(index: usize, range: Range<usize>, d: &SnapshotMatrix, cfg: &RunConfig) -> ChunkResult {
    let mut report = ChunkReport {
        index,
        frames: range.clone(),
        eigenvalues: Vec::new(),
        omega: Vec::new(),
        background: Vec::new(),
        diagnostics: Vec::new(),
        error: None,
        timing: ChunkTiming { decompose: Duration::ZERO, background: Duration::ZERO },
    };
    let mut omega_table = Vec::new();
    let mut body = || -> Result<ResidualSequence> {
        let part_d = d.slice(range.clone())?;
        let t0 = Instant::now();
        let sketch = SketchConfig::new(cfg.k, cfg.p, cfg.q, cfg.seed);
        let dec = rdmd(&part_d, &sketch, cfg.anchor)?;
        report.timing.decompose = t0.elapsed();
        report.eigenvalues = dec.eigenvalues.clone();

        let t1 = Instant::now();
        let fm = fourier_modes(&dec);
        report.omega = fm.omega.clone();
        let usable = fm.usable().count();
        if usable < dec.rank() {
            report.diagnostics.push(format!("{} zero eigenvalues excluded", dec.rank() - usable));
        }
        let mut n_bg = cfg.n_background;
        if usable > 0 && n_bg > usable {
            report.diagnostics.push(format!("background modes clamped from {n_bg} to {usable}"));
            n_bg = usable;
        }
        let part = partition_modes(&fm, n_bg)?;
        if part.background.len() > n_bg {
            report.diagnostics.push(format!(
                "background grown to {} modes to keep conjugate pairs together",
                part.background.len()
            ));
        }
        report.background = part.background.clone();
        omega_table = omega_rows(index, &dec, &fm, Some(&part));
        let l = background_model(&dec, &part)?;
        let s = residual(&part_d, &l)?;
        report.timing.background = t1.elapsed();
        Ok(s)
    };
    let residual = match body() {
        Ok(s) => Some(s),
        Err(e) => {
            report.error = Some(format!("{} error: {e}", e.kind().label()));
            None
        }
    };
    ChunkResult { report, residual, omega_rows: omega_table }
}

fn load_input(cfg: &RunConfig) -> Result<(SnapshotMatrix, Option<ForegroundMaskSequence>, Vec<String>)> {
    match &cfg.input {
        InputSource::Synthetic(spec) => {
            let (d, truth) = generate_synthetic(spec)?;
            let stems = numbered_stems(d.frames());
            Ok((d, Some(truth), stems))
        }
        InputSource::Frames { pattern, truth } => {
            let set = load_frame_set(pattern)?;
            let truth = match truth {
                None => None,
                Some(t) => {
                    let (masks, _) = load_masks(t)?;
                    if masks.len() != set.snapshots.frames() {
                        return Err(Error::Input(format!(
                            "{} truth masks for {} frames",
                            masks.len(),
                            set.snapshots.frames()
                        )));
                    }
                    if masks.frames.iter().any(|m| (m.height, m.width) != (set.snapshots.height(), set.snapshots.width())) {
                        return Err(Error::Input("truth masks differ in geometry from the frames".into()));
                    }
                    Some(masks)
                }
            };
            Ok((set.snapshots, truth, set.stems))
        }
    }
}

/// Runs the full pipeline: chunk, decompose, separate, threshold, filter,
/// evaluate and, when an output directory is set, write masks and reports.
pub fn run_bgsub(cfg: &RunConfig) -> Result<RunOutput> {
    let started = Instant::now();
    cfg.validate()?;
    let (d, truth, stems) = load_input(cfg)?;
    let ranges = chunk_ranges(d.frames(), cfg.chunk_length, cfg.min_chunk());

    let results: Vec<ChunkResult> = ranges
        .par_iter()
        .enumerate()
        .map(|(i, r)| run_chunk(i, r.clone(), &d, cfg))
        .collect();

    let mut residual_seq: Option<ResidualSequence> = None;
    let mut covered = Vec::new();
    for r in &results {
        if let Some(s) = &r.residual {
            residual_seq = Some(match residual_seq {
                None => s.clone(),
                Some(acc) => acc.concat(s)?,
            });
            covered.extend(r.report.frames.clone());
        }
    }
    let Some(s) = residual_seq else {
        let reasons: Vec<String> = results.iter().filter_map(|r| r.report.error.clone()).collect();
        return Err(Error::Degenerate(format!("every chunk failed: {}", reasons.join("; "))));
    };
    let truth = truth.map(|t| ForegroundMaskSequence { frames: covered.iter().map(|&i| t.frames[i].clone()).collect(), tau: None });
    let kernel = (cfg.median_kernel > 1).then_some(cfg.median_kernel);

    let mut raw_rows = Vec::new();
    let mut filtered_rows = Vec::new();
    let mut raw_sweep = None;
    let mut filtered_sweep = None;
    let mut roc = None;
    let tau = match cfg.threshold {
        Threshold::Fixed(t) => {
            if let Some(gt) = &truth {
                raw_rows = vec![ThresholdRow { tau: t, counts: threshold_counts(&s, gt, t, None)? }];
                if let Some(k) = kernel {
                    filtered_rows = vec![ThresholdRow { tau: t, counts: threshold_counts(&s, gt, t, Some(k))? }];
                }
            }
            t
        }
        Threshold::Sweep { steps } => {
            let gt = truth.as_ref().ok_or_else(|| Error::Config("a threshold sweep needs ground truth".into()))?;
            let taus = default_taus(&s, steps);
            raw_rows = sweep_thresholds(&s, gt, &taus, None)?;
            let curve = roc_from_rows(&raw_rows);
            let (bt, bf) = best_f_from_rows(&raw_rows).expect("non-empty sweep");
            raw_sweep = Some(SweepSummary { best_tau: bt, best_f: bf, auc: curve.auc });
            roc = Some(curve);
            match kernel {
                Some(k) => {
                    filtered_rows = sweep_thresholds(&s, gt, &taus, Some(k))?;
                    let (ft, ff) = best_f_from_rows(&filtered_rows).expect("non-empty sweep");
                    let fauc = roc_from_rows(&filtered_rows).auc;
                    filtered_sweep = Some(SweepSummary { best_tau: ft, best_f: ff, auc: fauc });
                    ft
                }
                None => bt,
            }
        }
    };

    let mut masks = threshold_mask(&s, tau)?;
    if let Some(k) = kernel {
        masks = median_filter_sequence(&masks, k)?;
    }
    let counts = match &truth {
        Some(gt) => Some(crate::eval::confusion(&masks, gt)?),
        None => None,
    };
    let covered_stems: Vec<String> = covered.iter().map(|&i| stems[i].clone()).collect();

    let report = RunReport {
        height: d.height(),
        width: d.width(),
        frames: d.frames(),
        config: cfg.clone(),
        tau,
        raw_sweep,
        filtered_sweep,
        counts,
        chunks: results.iter().map(|r| r.report.clone()).collect(),
        elapsed: started.elapsed(),
    };
    let out = RunOutput { report, residual: s, masks, truth, covered, stems: covered_stems, raw_rows, filtered_rows, roc };

    if let Some(dir) = &cfg.output_dir {
        let table: Vec<OmegaRow> = results.iter().flat_map(|r| r.omega_rows.iter().copied()).collect();
        write_outputs(dir, &out, &table)?;
    }
    Ok(out)
}

fn create(path: &Path) -> Result<fs::File> {
    fs::File::create(path).map_err(|e| Error::io(path, e))
}

fn write_outputs(dir: &Path, out: &RunOutput, table: &[OmegaRow]) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    save_masks(&out.masks, dir.join("masks"), &out.stems)?;
    let report = dir.join("report.txt");
    fs::write(&report, out.report.render(true)).map_err(|e| Error::io(&report, e))?;
    write_omega_csv(table, create(&dir.join("omega.csv"))?)?;
    if !out.raw_rows.is_empty() {
        write_metrics_csv(&out.raw_rows, create(&dir.join("metrics.csv"))?)?;
    }
    if !out.filtered_rows.is_empty() {
        write_metrics_csv(&out.filtered_rows, create(&dir.join("metrics_filtered.csv"))?)?;
    }
    if let Some(roc) = &out.roc {
        write_roc_csv(roc, create(&dir.join("roc.csv"))?)?;
        let summary = dir.join("roc_summary.txt");
        fs::write(&summary, roc_summary(roc) + "\n").map_err(|e| Error::io(&summary, e))?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chunking_merges_short_tail() {
        assert_eq!(chunk_ranges(450, 200, 14), vec![0..200, 200..400, 400..450]);
        assert_eq!(chunk_ranges(410, 200, 14), vec![0..200, 200..410]);
        assert_eq!(chunk_ranges(10, 200, 14), vec![0..10]);
        assert_eq!(chunk_ranges(400, 200, 14), vec![0..200, 200..400]);
    }

    #[test]
    fn config_validation() {
        let spec = SyntheticSpec::moving_square(1);
        let ok = RunConfig::new(InputSource::Synthetic(spec), 1);
        assert!(ok.validate().is_ok());
        assert!(RunConfig { chunk_length: 12, ..ok.clone() }.validate().is_err());
        assert!(RunConfig { median_kernel: 2, ..ok.clone() }.validate().is_err());
        assert!(RunConfig { threshold: Threshold::Fixed(-1.0), ..ok.clone() }.validate().is_err());
        let frames = InputSource::Frames { pattern: "x/*.pgm".into(), truth: None };
        assert!(matches!(RunConfig::new(frames, 1).validate(), Err(Error::Config(_))));
    }

    fn small_run(spec: SyntheticSpec) -> RunConfig {
        RunConfig { chunk_length: 30, k: 5, ..RunConfig::new(InputSource::Synthetic(spec), 4) }
    }

    #[test]
    fn static_scene_gives_empty_masks() {
        let spec = SyntheticSpec { height: 12, width: 12, frames: 50, background: Background::Static, noise_sigma: 0.0, objects: vec![], seed: 2 };
        let cfg = RunConfig { threshold: Threshold::Fixed(1e-6), ..small_run(spec) };
        let out = run_bgsub(&cfg).unwrap();
        assert_eq!(out.masks.count_ones(), 0);
        assert_eq!(out.masks.len(), 50);
        let c = out.report.counts.unwrap();
        assert_eq!((c.fp, c.tp), (0, 0));
        assert_eq!(out.report.chunks.len(), 2);
    }

    #[test]
    fn failing_chunk_is_recorded_and_others_proceed() {
        let dir = tempfile::tempdir().unwrap();
        let (d, _) = generate_synthetic(&SyntheticSpec::moving_square(3)).unwrap();
        for t in 0..60 {
            let samples = if t < 30 {
                vec![0; 64 * 64]
            } else {
                d.data().column(t).iter().map(|v| (v * 255.0).round() as u16).collect()
            };
            write_pgm(dir.path().join(format!("f{t:03}.pgm")), &PgmImage { height: 64, width: 64, maxval: 255, samples }).unwrap();
        }
        let input = InputSource::Frames { pattern: dir.path().to_str().unwrap().into(), truth: None };
        let cfg = RunConfig { chunk_length: 30, k: 5, threshold: Threshold::Fixed(0.2), ..RunConfig::new(input, 1) };
        let out = run_bgsub(&cfg).unwrap();
        assert!(out.report.chunks[0].error.as_deref().unwrap().starts_with("degenerate"));
        assert!(out.report.chunks[1].error.is_none());
        assert_eq!(out.covered, (30..60).collect::<Vec<_>>());
        assert_eq!(out.stems[0], "f030");
        assert_eq!(out.masks.len(), 30);
    }

    #[test]
    fn rerun_gives_identical_report_and_files() {
        let mut spec = SyntheticSpec::moving_square(5);
        spec.height = 24;
        spec.width = 24;
        spec.frames = 70;
        let a_dir = tempfile::tempdir().unwrap();
        let b_dir = tempfile::tempdir().unwrap();
        let cfg = small_run(spec);
        let a = run_bgsub(&RunConfig { output_dir: Some(a_dir.path().into()), ..cfg.clone() }).unwrap();
        let b = run_bgsub(&RunConfig { output_dir: Some(b_dir.path().into()), ..cfg }).unwrap();
        assert_eq!(a.report.render(false), b.report.render(false));
        for f in ["omega.csv", "metrics.csv", "metrics_filtered.csv", "roc.csv", "masks/frame_0069.pgm"] {
            assert_eq!(fs::read(a_dir.path().join(f)).unwrap(), fs::read(b_dir.path().join(f)).unwrap(), "{f}");
        }
    }
}

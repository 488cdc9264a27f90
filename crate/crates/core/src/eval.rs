//! Pixel-level evaluation of foreground masks against ground truth.
//!
//! Counts are pooled over every pixel of every frame before any ratio is
//! taken (micro-averaging).

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use crate::background::{median_filter, ForegroundMaskSequence, MaskFrame, ResidualSequence};
use crate::{Error, Result};

/// Number of thresholds in the default sweep.
pub const DEFAULT_SWEEP_STEPS: usize = 51;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl ConfusionCounts {
    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    fn add(&mut self, pred: bool, truth: bool) {
        match (pred, truth) {
            (true, true) => self.tp += 1,
            (true, false) => self.fp += 1,
            (false, false) => self.tn += 1,
            (false, true) => self.fn_ += 1,
        }
    }
}

/// A ratio metric. When its denominator is zero the value is 0 and
/// `defined` is false.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rate {
    pub value: f64,
    pub defined: bool,
}

impl Rate {
    fn ratio(num: u64, den: u64) -> Rate {
        if den == 0 {
            Rate { value: 0.0, defined: false }
        } else {
            Rate { value: num as f64 / den as f64, defined: true }
        }
    }
}

pub fn recall(c: &ConfusionCounts) -> Rate {
    Rate::ratio(c.tp, c.tp + c.fn_)
}

pub fn precision(c: &ConfusionCounts) -> Rate {
    Rate::ratio(c.tp, c.tp + c.fp)
}

pub fn specificity(c: &ConfusionCounts) -> Rate {
    Rate::ratio(c.tn, c.tn + c.fp)
}

/// Harmonic mean of recall and precision; 0 and undefined when either
/// input is undefined or both are zero.
pub fn f_measure(c: &ConfusionCounts) -> Rate {
    let (r, p) = (recall(c), precision(c));
    if !r.defined || !p.defined || r.value + p.value == 0.0 {
        return Rate { value: 0.0, defined: false };
    }
    Rate { value: f_score(r.value, p.value), defined: true }
}

/// `2rp / (r + p)`, with 0 when `r + p = 0`.
pub fn f_score(recall: f64, precision: f64) -> f64 {
    if recall + precision == 0.0 {
        0.0
    } else {
        2.0 * recall * precision / (recall + precision)
    }
}

fn check_geometry(a: &ForegroundMaskSequence, b: &ForegroundMaskSequence) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::Input(format!("{} predicted frames vs {} truth frames", a.len(), b.len())));
    }
    for (t, (p, q)) in a.frames.iter().zip(&b.frames).enumerate() {
        if (p.height, p.width) != (q.height, q.width) {
            return Err(Error::Input(format!(
                "frame {t}: prediction is {}×{}, truth is {}×{}",
                p.height, p.width, q.height, q.width
            )));
        }
    }
    Ok(())
}

/// Pixelwise tallies over all frames.
pub fn confusion(pred: &ForegroundMaskSequence, truth: &ForegroundMaskSequence) -> Result<ConfusionCounts> {
    check_geometry(pred, truth)?;
    let mut c = ConfusionCounts::default();
    for (p, q) in pred.frames.iter().zip(&truth.frames) {
        for (a, b) in p.pixels.iter().zip(&q.pixels) {
            c.add(*a, *b);
        }
    }
    Ok(c)
}

fn check_residual_geometry(s: &ResidualSequence, truth: &ForegroundMaskSequence) -> Result<()> {
    if s.frames() != truth.len() {
        return Err(Error::Input(format!("{} residual frames vs {} truth frames", s.frames(), truth.len())));
    }
    if truth.frames.iter().any(|f| (f.height, f.width) != (s.height, s.width)) {
        return Err(Error::Input("truth geometry differs from residual geometry".into()));
    }
    Ok(())
}

fn check_residual_truth(s: &ResidualSequence, truth: &ForegroundMaskSequence) -> Result<()> {
    check_residual_geometry(s, truth)?;
    let positives = truth.count_ones();
    let total = truth.len() * s.height * s.width;
    if positives == 0 {
        return Err(Error::Degenerate("ground truth has no foreground (positive) pixels".into()));
    }
    if positives == total {
        return Err(Error::Degenerate("ground truth has no background (negative) pixels".into()));
    }
    Ok(())
}

/// Confusion counts at one threshold, optionally after median filtering.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRow {
    pub tau: f64,
    pub counts: ConfusionCounts,
}

fn counts_at(s: &ResidualSequence, truth: &ForegroundMaskSequence, tau: f64, kernel: Option<usize>) -> Result<ConfusionCounts> {
    let mut c = ConfusionCounts::default();
    for (t, gt) in truth.frames.iter().enumerate() {
        let col = s.values.column(t);
        match kernel {
            None | Some(1) => {
                for (v, g) in col.iter().zip(&gt.pixels) {
                    c.add(*v > tau, *g);
                }
            }
            Some(k) => {
                let raw = MaskFrame { height: s.height, width: s.width, pixels: col.iter().map(|v| *v > tau).collect() };
                let filtered = median_filter(&raw, k)?;
                for (p, g) in filtered.pixels.iter().zip(&gt.pixels) {
                    c.add(*p, *g);
                }
            }
        }
    }
    Ok(c)
}

/// Confusion counts of `S > τ` at a single threshold, median filtered when
/// `kernel` is given. Unlike a sweep, truth may lack either class.
pub fn threshold_counts(
    s: &ResidualSequence,
    truth: &ForegroundMaskSequence,
    tau: f64,
    kernel: Option<usize>,
) -> Result<ConfusionCounts> {
    check_residual_geometry(s, truth)?;
    counts_at(s, truth, tau, kernel)
}

/// Confusion counts of `S > τ` (median filtered when `kernel` is given) for
/// every `τ`, in the order given.
pub fn sweep_thresholds(
    s: &ResidualSequence,
    truth: &ForegroundMaskSequence,
    taus: &[f64],
    kernel: Option<usize>,
) -> Result<Vec<ThresholdRow>> {
    if taus.is_empty() {
        return Err(Error::Config("threshold sweep is empty".into()));
    }
    if let Some(bad) = taus.iter().find(|t| !(**t >= 0.0) || !t.is_finite()) {
        return Err(Error::Config(format!("threshold {bad} is not a finite nonnegative value")));
    }
    check_residual_truth(s, truth)?;
    taus.par_iter()
        .map(|&tau| Ok(ThresholdRow { tau, counts: counts_at(s, truth, tau, kernel)? }))
        .collect()
}

/// `steps` evenly spaced thresholds over `[0, max S]`.
pub fn default_taus(s: &ResidualSequence, steps: usize) -> Vec<f64> {
    let hi = s.max();
    match steps {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..steps).map(|i| hi * i as f64 / (steps - 1) as f64).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RocPoint {
    pub one_minus_specificity: f64,
    pub recall: f64,
    pub tau: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// `(0,0)` at `τ = +∞`, then thresholds in descending order, then `(1,1)`
    /// at `τ = −∞`.
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Builds the ROC curve (recall against 1 − specificity) from sweep rows and
/// integrates it with the trapezoidal rule.
pub fn roc_from_rows(rows: &[ThresholdRow]) -> RocCurve {
    let mut sorted: Vec<&ThresholdRow> = rows.iter().collect();
    sorted.sort_by(|a, b| b.tau.total_cmp(&a.tau));
    let mut points = Vec::with_capacity(rows.len() + 2);
    points.push(RocPoint { one_minus_specificity: 0.0, recall: 0.0, tau: f64::INFINITY });
    for r in sorted {
        points.push(RocPoint {
            one_minus_specificity: 1.0 - specificity(&r.counts).value,
            recall: recall(&r.counts).value,
            tau: r.tau,
        });
    }
    points.push(RocPoint { one_minus_specificity: 1.0, recall: 1.0, tau: f64::NEG_INFINITY });
    let auc = points
        .windows(2)
        .map(|w| (w[1].one_minus_specificity - w[0].one_minus_specificity) * (w[1].recall + w[0].recall) / 2.0)
        .sum::<f64>()
        .clamp(0.0, 1.0);
    RocCurve { points, auc }
}

pub fn roc_curve(s: &ResidualSequence, truth: &ForegroundMaskSequence, taus: &[f64]) -> Result<RocCurve> {
    if taus.len() < 2 {
        return Err(Error::Config(format!("ROC needs at least 2 thresholds, got {}", taus.len())));
    }
    Ok(roc_from_rows(&sweep_thresholds(s, truth, taus, None)?))
}

/// Threshold with the highest F-measure; ties go to the smallest `τ`.
pub fn best_f_from_rows(rows: &[ThresholdRow]) -> Option<(f64, f64)> {
    let mut best: Option<(f64, f64)> = None;
    for r in rows {
        let f = f_measure(&r.counts).value;
        best = match best {
            Some((bt, bf)) if bf > f || (bf == f && bt <= r.tau) => Some((bt, bf)),
            _ => Some((r.tau, f)),
        };
    }
    best
}

pub fn best_f_over_thresholds(s: &ResidualSequence, truth: &ForegroundMaskSequence, taus: &[f64]) -> Result<(f64, f64)> {
    let rows = sweep_thresholds(s, truth, taus, None)?;
    Ok(best_f_from_rows(&rows).expect("sweep is non-empty"))
}

#[derive(Serialize)]
struct MetricsRecord {
    tau: f64,
    tp: u64,
    fp: u64,
    tn: u64,
    #[serde(rename = "fn")]
    fn_: u64,
    recall: f64,
    precision: f64,
    specificity: f64,
    f_measure: f64,
}

/// CSV with columns `tau,tp,fp,tn,fn,recall,precision,specificity,f_measure`.
pub fn write_metrics_csv<W: Write>(rows: &[ThresholdRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        let c = &r.counts;
        w.serialize(MetricsRecord {
            tau: r.tau,
            tp: c.tp,
            fp: c.fp,
            tn: c.tn,
            fn_: c.fn_,
            recall: recall(c).value,
            precision: precision(c).value,
            specificity: specificity(c).value,
            f_measure: f_measure(c).value,
        })?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// CSV with columns `one_minus_specificity,recall,tau`.
pub fn write_roc_csv<W: Write>(roc: &RocCurve, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for p in &roc.points {
        w.serialize(p)?;
    }
    w.flush().map_err(|e| Error::io("<csv>", e))?;
    Ok(())
}

/// One-line summary accompanying the ROC CSV.
pub fn roc_summary(roc: &RocCurve) -> String {
    format!("auc={:.6} points={}", roc.auc, roc.points.len())
}

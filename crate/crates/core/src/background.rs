//! Background model, residual and foreground masks from a DMD.
//!
//! Each eigenvalue maps to a continuous-time Fourier mode `ω = ln(λ)/Δt`.
//! Modes with small `|ω|` evolve slowly and make up the background `L`; the
//! foreground is whatever the background does not explain, `|D − Re L|`.

use rayon::prelude::*;

use crate::dmd::{reconstruct, DmdDecomposition, SnapshotMatrix};
use crate::{Complex64, ComplexMatrix, Error, Matrix, Result};

/// Eigenvalues with modulus below this have no logarithm worth taking.
pub const ZERO_EIGENVALUE_CUTOFF: f64 = 1e-12;

/// Default number of background modes.
pub const DEFAULT_BACKGROUND_MODES: usize = 3;

/// Default median-filter window.
pub const DEFAULT_MEDIAN_KERNEL: usize = 3;

#[derive(Debug, Clone, PartialEq)]
pub struct FourierModes {
    /// `ln(λ)/Δt` on the principal branch; NaN for excluded modes.
    pub omega: Vec<Complex64>,
    /// `|λ| < ZERO_EIGENVALUE_CUTOFF`
    pub excluded: Vec<bool>,
    pub dt: f64,
}

impl FourierModes {
    pub fn len(&self) -> usize {
        self.omega.len()
    }

    pub fn is_empty(&self) -> bool {
        self.omega.is_empty()
    }

    pub fn usable(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&i| !self.excluded[i])
    }
}

pub fn fourier_modes(dec: &DmdDecomposition) -> FourierModes {
    let mut omega = Vec::with_capacity(dec.rank());
    let mut excluded = Vec::with_capacity(dec.rank());
    for l in &dec.eigenvalues {
        if l.norm() < ZERO_EIGENVALUE_CUTOFF {
            omega.push(Complex64::new(f64::NAN, f64::NAN));
            excluded.push(true);
        } else {
            omega.push(l.ln() / dec.dt);
            excluded.push(false);
        }
    }
    FourierModes { omega, excluded, dt: dec.dt }
}

/// Background and foreground mode indices. Excluded (zero-eigenvalue) modes
/// are in neither set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModePartition {
    pub background: Vec<usize>,
    pub foreground: Vec<usize>,
}

/// Usable modes ordered by `|ω|` ascending, ties by index.
fn by_modulus(fm: &FourierModes) -> Vec<usize> {
    let mut idx: Vec<usize> = fm.usable().collect();
    idx.sort_by(|&a, &b| fm.omega[a].norm().total_cmp(&fm.omega[b].norm()).then(a.cmp(&b)));
    idx
}

fn conjugate_partner(fm: &FourierModes, i: usize) -> Option<usize> {
    let w = fm.omega[i];
    if w.im == 0.0 {
        return None;
    }
    let tol = 1e-9 * w.norm().max(1.0);
    fm.usable().filter(|&j| j != i).find(|&j| (fm.omega[j] - w.conj()).norm() <= tol)
}

fn close_under_conjugation(fm: &FourierModes, mut chosen: Vec<usize>) -> Vec<usize> {
    let mut extra = Vec::new();
    for &i in &chosen {
        if let Some(j) = conjugate_partner(fm, i) {
            if !chosen.contains(&j) && !extra.contains(&j) {
                extra.push(j);
            }
        }
    }
    chosen.extend(extra);
    chosen.sort_unstable();
    chosen
}

fn split(fm: &FourierModes, background: Vec<usize>) -> ModePartition {
    let foreground = fm.usable().filter(|i| !background.contains(i)).collect();
    ModePartition { background, foreground }
}

/// The `n_background` usable modes of smallest `|ω|` form the background.
/// If the last pick splits a conjugate pair, its partner joins too.
pub fn partition_modes(fm: &FourierModes, n_background: usize) -> Result<ModePartition> {
    let order = by_modulus(fm);
    if order.is_empty() {
        return Err(Error::Degenerate("decomposition has no usable modes".into()));
    }
    if n_background == 0 || n_background > order.len() {
        return Err(Error::Config(format!(
            "background mode count {n_background} outside 1..={}",
            order.len()
        )));
    }
    let chosen = close_under_conjugation(fm, order[..n_background].to_vec());
    Ok(split(fm, chosen))
}

/// Every usable mode with `|ω| < omega_max` is background.
pub fn partition_by_threshold(fm: &FourierModes, omega_max: f64) -> Result<ModePartition> {
    if fm.usable().next().is_none() {
        return Err(Error::Degenerate("decomposition has no usable modes".into()));
    }
    let chosen: Vec<usize> = fm.usable().filter(|&i| fm.omega[i].norm() < omega_max).collect();
    Ok(split(fm, close_under_conjugation(fm, chosen)))
}

fn check_partition(dec: &DmdDecomposition, part: &ModePartition) -> Result<()> {
    let k = dec.rank();
    for &i in part.background.iter().chain(&part.foreground) {
        if i >= k {
            return Err(Error::Input(format!("mode {i} out of range for rank {k}")));
        }
    }
    if part.background.iter().any(|i| part.foreground.contains(i)) {
        return Err(Error::Input("background and foreground sets overlap".into()));
    }
    Ok(())
}

/// `L = Σ_{i∈background} b_i φ_i λ_i^t` for all frames.
pub fn background_model(dec: &DmdDecomposition, part: &ModePartition) -> Result<ComplexMatrix> {
    check_partition(dec, part)?;
    reconstruct(dec, &part.background, 0..dec.n_frames)
}

/// Same sum written as `b_i φ_i exp(ω_i t Δt)`.
pub fn background_model_exp(dec: &DmdDecomposition, fm: &FourierModes, part: &ModePartition) -> Result<ComplexMatrix> {
    check_partition(dec, part)?;
    let mut out = ComplexMatrix::zeros(dec.modes.nrows(), dec.n_frames);
    for t in 0..dec.n_frames {
        let (b, exponent) = dec.amplitudes_at(t);
        let time = exponent as f64 * fm.dt;
        for &i in &part.background {
            let coeff = b[i] * (fm.omega[i] * time).exp();
            out.column_mut(t).axpy(coeff, &dec.modes.column(i), Complex64::new(1.0, 0.0));
        }
    }
    Ok(out)
}

/// Per-pixel, per-frame residual magnitudes.
#[derive(Debug, Clone, PartialEq)]
pub struct ResidualSequence {
    /// pixels × frames, nonnegative.
    pub values: Matrix,
    pub height: usize,
    pub width: usize,
}

impl ResidualSequence {
    pub fn new(values: Matrix, height: usize, width: usize) -> Result<Self> {
        if height * width != values.nrows() {
            return Err(Error::Input(format!("geometry {height}×{width} vs {} pixels", values.nrows())));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(Error::Input("residuals must be finite and nonnegative".into()));
        }
        Ok(ResidualSequence { values, height, width })
    }

    pub fn frames(&self) -> usize {
        self.values.ncols()
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Frames `other` appended after `self`.
    pub fn concat(&self, other: &ResidualSequence) -> Result<ResidualSequence> {
        if (self.height, self.width) != (other.height, other.width) {
            return Err(Error::Input("cannot join residuals of different geometry".into()));
        }
        let mut values = Matrix::zeros(self.values.nrows(), self.frames() + other.frames());
        values.columns_mut(0, self.frames()).copy_from(&self.values);
        values.columns_mut(self.frames(), other.frames()).copy_from(&other.values);
        Ok(ResidualSequence { values, height: self.height, width: self.width })
    }
}

/// `|d_jt − Re(l_jt)|`; the imaginary part of `L` is discarded.
pub fn residual(d: &SnapshotMatrix, l: &ComplexMatrix) -> Result<ResidualSequence> {
    if d.data().shape() != l.shape() {
        return Err(Error::Dimension(format!(
            "video is {:?} but background is {:?}",
            d.data().shape(),
            l.shape()
        )));
    }
    let values = d.data().zip_map(l, |x, z| (x - z.re).abs());
    ResidualSequence::new(values, d.height(), d.width())
}

/// One binary frame, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct MaskFrame {
    pub height: usize,
    pub width: usize,
    pub pixels: Vec<bool>,
}

impl MaskFrame {
    pub fn new(height: usize, width: usize, pixels: Vec<bool>) -> Result<Self> {
        if pixels.len() != height * width {
            return Err(Error::Input(format!("{} mask pixels for a {height}×{width} frame", pixels.len())));
        }
        Ok(MaskFrame { height, width, pixels })
    }

    pub fn filled(height: usize, width: usize, value: bool) -> Self {
        MaskFrame { height, width, pixels: vec![value; height * width] }
    }

    pub fn count_ones(&self) -> usize {
        self.pixels.iter().filter(|p| **p).count()
    }

    pub fn get(&self, row: usize, col: usize) -> bool {
        self.pixels[row * self.width + col]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ForegroundMaskSequence {
    pub frames: Vec<MaskFrame>,
    /// Threshold the masks came from; `None` for ground truth.
    pub tau: Option<f64>,
}

impl ForegroundMaskSequence {
    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn geometry(&self) -> Option<(usize, usize)> {
        self.frames.first().map(|f| (f.height, f.width))
    }

    pub fn count_ones(&self) -> usize {
        self.frames.iter().map(MaskFrame::count_ones).sum()
    }
}

/// Pixel is foreground iff its residual is strictly above `tau`.
pub fn threshold_mask(s: &ResidualSequence, tau: f64) -> Result<ForegroundMaskSequence> {
    if !(tau >= 0.0) {
        return Err(Error::Config(format!("threshold must be nonnegative, got {tau}")));
    }
    let frames = (0..s.frames())
        .map(|t| MaskFrame {
            height: s.height,
            width: s.width,
            pixels: s.values.column(t).iter().map(|v| *v > tau).collect(),
        })
        .collect();
    Ok(ForegroundMaskSequence { frames, tau: Some(tau) })
}

/// Binary median (majority) filter over a `kernel × kernel` window with
/// replicated borders. `kernel = 1` is the identity.
pub fn median_filter(frame: &MaskFrame, kernel: usize) -> Result<MaskFrame> {
    if kernel == 0 || kernel % 2 == 0 {
        return Err(Error::Config(format!("median kernel must be odd and positive, got {kernel}")));
    }
    if kernel == 1 {
        return Ok(frame.clone());
    }
    let (h, w) = (frame.height, frame.width);
    let r = kernel / 2;
    let (ph, pw) = (h + 2 * r, w + 2 * r);
    // summed-area table of the edge-replicated frame, with a zero border row/col
    let mut sat = vec![0u32; (ph + 1) * (pw + 1)];
    for y in 0..ph {
        let sy = y.saturating_sub(r).min(h - 1);
        let mut row_sum = 0u32;
        for x in 0..pw {
            let sx = x.saturating_sub(r).min(w - 1);
            row_sum += frame.pixels[sy * w + sx] as u32;
            sat[(y + 1) * (pw + 1) + x + 1] = sat[y * (pw + 1) + x + 1] + row_sum;
        }
    }
    let half = (kernel * kernel / 2) as u32;
    let mut pixels = Vec::with_capacity(h * w);
    for y in 0..h {
        for x in 0..w {
            // window rows y..y+kernel, cols x..x+kernel in padded coordinates
            let (y0, x0, y1, x1) = (y, x, y + kernel, x + kernel);
            let ones = sat[y1 * (pw + 1) + x1] + sat[y0 * (pw + 1) + x0]
                - sat[y0 * (pw + 1) + x1]
                - sat[y1 * (pw + 1) + x0];
            pixels.push(ones > half);
        }
    }
    Ok(MaskFrame { height: h, width: w, pixels })
}

/// [`median_filter`] applied to every frame.
pub fn median_filter_sequence(seq: &ForegroundMaskSequence, kernel: usize) -> Result<ForegroundMaskSequence> {
    let frames = seq.frames.par_iter().map(|f| median_filter(f, kernel)).collect::<Result<Vec<_>>>()?;
    Ok(ForegroundMaskSequence { frames, tau: seq.tau })
}

//! Dense linear algebra kernels.
//!
//! Deterministic SVD, eigendecomposition and least squares are thin, validated
//! wrappers over `nalgebra`. The randomized SVD ([`rsvd`]) is implemented here:
//! a Gaussian sketch of the range, `q` rounds of re-orthonormalized subspace
//! iteration and a small deterministic SVD of the projected matrix.

mod eig;
mod lstsq;
pub mod matfile;
mod random;
mod rsvd;
mod svd;

pub use eig::{eig, Eigen};
pub use lstsq::least_squares;
pub use random::{matrix_with_spectrum, random_gaussian, random_orthonormal};
pub use rsvd::{randomized_range_finder, rsvd, rsvd_error_bound};
pub use svd::{deterministic_svd, full_svd};

use crate::{ComplexMatrix, Error, Matrix, Result};

/// Truncated singular value decomposition `A ≈ U diag(σ) Vᵀ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SvdFactors {
    /// m×k, orthonormal columns.
    pub u: Matrix,
    /// Nonincreasing, nonnegative, length k.
    pub singular_values: Vec<f64>,
    /// n×k, orthonormal columns.
    pub v: Matrix,
}

impl SvdFactors {
    pub fn rank(&self) -> usize {
        self.singular_values.len()
    }

    /// `U diag(σ) Vᵀ`.
    pub fn reconstruct(&self) -> Matrix {
        let mut us = self.u.clone();
        for (j, s) in self.singular_values.iter().enumerate() {
            us.column_mut(j).scale_mut(*s);
        }
        us * self.v.transpose()
    }

    /// Keep only the leading `k` triplets.
    pub fn truncate(&self, k: usize) -> SvdFactors {
        let k = k.min(self.rank());
        SvdFactors {
            u: self.u.columns(0, k).into_owned(),
            singular_values: self.singular_values[..k].to_vec(),
            v: self.v.columns(0, k).into_owned(),
        }
    }

    /// Number of singular values with `σ_i ≥ rcond·σ_1`.
    pub fn effective_rank(&self, rcond: f64) -> usize {
        match self.singular_values.first() {
            Some(&s1) if s1 > 0.0 => {
                let cutoff = rcond * s1;
                self.singular_values.iter().take_while(|&&s| s >= cutoff).count()
            }
            _ => 0,
        }
    }

    /// Flip column pairs so that the largest-magnitude entry of every column of
    /// `U` is positive. Ties go to the lowest row index.
    pub(crate) fn normalize_signs(&mut self) {
        for j in 0..self.u.ncols() {
            let col = self.u.column(j);
            let mut best = 0;
            for i in 1..col.len() {
                if col[i].abs() > col[best].abs() {
                    best = i;
                }
            }
            if col[best] < 0.0 {
                self.u.column_mut(j).neg_mut();
                self.v.column_mut(j).neg_mut();
            }
        }
    }
}

/// Parameters of the randomized sketch.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct SketchConfig {
    pub target_rank: usize,
    pub oversampling: usize,
    pub subspace_iterations: usize,
    pub seed: u64,
    /// Factor `Bᵀ = Q₂R` and take the SVD of the small `R` instead of `B`.
    pub qr_refine: bool,
}

impl SketchConfig {
    pub fn new(target_rank: usize, oversampling: usize, subspace_iterations: usize, seed: u64) -> Self {
        SketchConfig { target_rank, oversampling, subspace_iterations, seed, qr_refine: false }
    }

    pub fn with_qr_refine(mut self, on: bool) -> Self {
        self.qr_refine = on;
        self
    }

    /// Number of sketch columns `k + p`.
    pub fn sample_count(&self) -> usize {
        self.target_rank + self.oversampling
    }

    pub fn validate_for(&self, rows: usize, cols: usize) -> Result<()> {
        if self.target_rank == 0 {
            return Err(Error::Config("target rank must be at least 1".into()));
        }
        let limit = rows.min(cols);
        if self.sample_count() > limit {
            return Err(Error::Dimension(format!(
                "k + p = {} exceeds min(rows, cols) = {limit}",
                self.sample_count()
            )));
        }
        Ok(())
    }
}

pub(crate) fn check_finite(a: &Matrix, what: &str) -> Result<()> {
    if a.nrows() == 0 || a.ncols() == 0 {
        return Err(Error::Input(format!("{what} is empty")));
    }
    if a.iter().any(|x| !x.is_finite()) {
        return Err(Error::Input(format!("{what} contains non-finite entries")));
    }
    Ok(())
}

pub(crate) fn check_finite_complex(a: &ComplexMatrix, what: &str) -> Result<()> {
    if a.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Input(format!("{what} contains non-finite entries")));
    }
    Ok(())
}

/// `max |QᵀQ − I|` over all entries.
pub fn orthonormality_error(q: &Matrix) -> f64 {
    let gram = q.tr_mul(q);
    let mut worst = 0.0f64;
    for i in 0..gram.nrows() {
        for j in 0..gram.ncols() {
            let target = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((gram[(i, j)] - target).abs());
        }
    }
    worst
}

/// Thin orthonormal basis for the columns of `y` via Householder QR.
pub(crate) fn orthonormalize(y: Matrix) -> Matrix {
    nalgebra::linalg::QR::new(y).q()
}

pub(crate) fn to_complex(a: &Matrix) -> ComplexMatrix {
    a.map(|x| crate::Complex64::new(x, 0.0))
}

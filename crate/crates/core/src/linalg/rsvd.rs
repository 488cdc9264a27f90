use super::random::random_gaussian;
use super::svd::svd_all;
use super::{check_finite, orthonormalize, SketchConfig, SvdFactors};
use crate::{Error, Matrix, Result};

/// Orthonormal `Q` (m×l) with `A ≈ QQᵀA`.
///
/// The sketch `Y = AΩ` is re-orthonormalized after every application of `A`
/// and `Aᵀ`, so `q` iterations cost `2q` extra passes over `A` but never form
/// `(AAᵀ)^q` explicitly.
pub fn randomized_range_finder(a: &Matrix, l: usize, q: usize, seed: u64) -> Result<Matrix> {
    check_finite(a, "matrix")?;
    let (m, n) = a.shape();
    if l == 0 || l > m.min(n) {
        return Err(Error::Dimension(format!("sketch size {l} outside 1..={}", m.min(n))));
    }
    let omega = random_gaussian(n, l, seed)?;
    let mut basis = orthonormalize(a * omega);
    for _ in 0..q {
        let z = orthonormalize(a.tr_mul(&basis));
        basis = orthonormalize(a * z);
    }
    Ok(basis)
}

/// Randomized truncated SVD.
///
/// Sketches `k + p` columns, projects `B = QᵀA`, takes a deterministic SVD of
/// the small `B` and lifts `U = QŨ`. Only the leading `k` triplets are
/// returned.
pub fn rsvd(a: &Matrix, cfg: &SketchConfig) -> Result<SvdFactors> {
    cfg.validate_for(a.nrows(), a.ncols())?;
    let l = cfg.sample_count();
    let q = randomized_range_finder(a, l, cfg.subspace_iterations, cfg.seed)?;
    let b = q.tr_mul(a);

    let small = if cfg.qr_refine {
        // Bᵀ = Q₂R  ⇒  B = RᵀQ₂ᵀ, and svd(Rᵀ) = Ũ Σ Wᵀ gives V = Q₂W.
        let qr = nalgebra::linalg::QR::new(b.transpose());
        let q2 = qr.q();
        let r = qr.r();
        let inner = svd_all(&r.transpose())?;
        SvdFactors { u: inner.u, singular_values: inner.singular_values, v: q2 * inner.v }
    } else {
        svd_all(&b)?
    };

    let mut factors = SvdFactors {
        u: q * small.u,
        singular_values: small.singular_values,
        v: small.v,
    }
    .truncate(cfg.target_rank);
    factors.normalize_signs();
    Ok(factors)
}

/// Expected spectral error of a rank-`l` randomized SVD with `q` subspace
/// iterations: `σ_{l+1} · (1 + 4·√(2·min(m,n)/(l−1)))^{1/(2q+1)}`.
pub fn rsvd_error_bound(sigma_l_plus_1: f64, m: usize, n: usize, l: usize, q: usize) -> Result<f64> {
    if l < 2 {
        return Err(Error::Input(format!("error bound needs l ≥ 2, got {l}")));
    }
    if !(sigma_l_plus_1 >= 0.0) || !sigma_l_plus_1.is_finite() {
        return Err(Error::Input(format!("σ_(l+1) must be finite and nonnegative, got {sigma_l_plus_1}")));
    }
    let dim = m.min(n) as f64;
    let base = 1.0 + 4.0 * (2.0 * dim / (l as f64 - 1.0)).sqrt();
    Ok(sigma_l_plus_1 * base.powf(1.0 / (2 * q + 1) as f64))
}

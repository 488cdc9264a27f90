use nalgebra::linalg::SVD;

use super::check_finite_complex;
use crate::{Complex64, ComplexMatrix, Error, Result};

/// Minimum-norm solution of `min ‖Ax − y‖₂` from an SVD of `A`.
///
/// Singular values below `max(m, k)·ε·σ₁` are treated as zero, so a rank
/// deficient `A` yields the minimum-norm minimiser instead of an error.
pub fn least_squares(a: &ComplexMatrix, y: &[Complex64]) -> Result<Vec<Complex64>> {
    let (m, k) = a.shape();
    if m == 0 || k == 0 {
        return Err(Error::Dimension("least squares on an empty matrix".into()));
    }
    if m < k {
        return Err(Error::Dimension(format!("least squares needs rows ≥ cols, got {m}×{k}")));
    }
    if y.len() != m {
        return Err(Error::Dimension(format!("right-hand side has {} entries, expected {m}", y.len())));
    }
    check_finite_complex(a, "least-squares matrix")?;
    if y.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::Input("right-hand side contains non-finite entries".into()));
    }

    let svd = SVD::try_new(a.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge in least squares".into()))?;
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::Numerical("SVD returned no singular vectors".into()));
    };
    let s1 = svd.singular_values.iter().copied().fold(0.0, f64::max);
    let cutoff = s1 * m.max(k) as f64 * f64::EPSILON;

    let y = nalgebra::DVector::from_column_slice(y);
    let mut coeffs = u.ad_mul(&y);
    for (c, s) in coeffs.iter_mut().zip(svd.singular_values.iter()) {
        *c = if *s > cutoff { *c / *s } else { Complex64::new(0.0, 0.0) };
    }
    Ok(v_t.ad_mul(&coeffs).iter().copied().collect())
}

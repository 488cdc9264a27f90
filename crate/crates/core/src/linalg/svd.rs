use nalgebra::linalg::SVD;

use super::{check_finite, SvdFactors};
use crate::{Error, Matrix, Result};

/// Leading `k` singular triplets of a full deterministic SVD.
pub fn deterministic_svd(a: &Matrix, k: usize) -> Result<SvdFactors> {
    check_finite(a, "matrix")?;
    let limit = a.nrows().min(a.ncols());
    if k == 0 || k > limit {
        return Err(Error::Dimension(format!("rank {k} outside 1..={limit}")));
    }
    let mut factors = svd_all(a)?.truncate(k);
    factors.normalize_signs();
    Ok(factors)
}

/// All `min(m, n)` singular triplets.
pub fn full_svd(a: &Matrix) -> Result<SvdFactors> {
    check_finite(a, "matrix")?;
    let mut factors = svd_all(a)?;
    factors.normalize_signs();
    Ok(factors)
}

pub(crate) fn svd_all(a: &Matrix) -> Result<SvdFactors> {
    let svd = SVD::try_new(a.clone(), true, true, f64::EPSILON, 0)
        .ok_or_else(|| Error::Numerical("SVD did not converge".into()))?;
    let (Some(u), Some(v_t)) = (svd.u, svd.v_t) else {
        return Err(Error::Numerical("SVD returned no singular vectors".into()));
    };
    Ok(SvdFactors {
        u,
        singular_values: svd.singular_values.iter().copied().collect(),
        v: v_t.transpose(),
    })
}

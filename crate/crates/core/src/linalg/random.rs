use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::orthonormalize;
use crate::{Error, Matrix, Result};

/// `rows × cols` matrix of i.i.d. standard normal draws from a seeded ChaCha8
/// stream. Entries are drawn in column-major order.
pub fn random_gaussian(rows: usize, cols: usize, seed: u64) -> Result<Matrix> {
    if rows == 0 || cols == 0 {
        return Err(Error::Dimension(format!("random matrix shape {rows}×{cols}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Matrix::zeros(rows, cols);
    for x in out.iter_mut() {
        *x = StandardNormal.sample(&mut rng);
    }
    Ok(out)
}

/// `rows × cols` matrix with orthonormal columns (`cols ≤ rows`), drawn as the
/// Q factor of a Gaussian matrix.
pub fn random_orthonormal(rows: usize, cols: usize, seed: u64) -> Result<Matrix> {
    if cols > rows {
        return Err(Error::Dimension(format!("cannot fit {cols} orthonormal columns in ℝ^{rows}")));
    }
    Ok(orthonormalize(random_gaussian(rows, cols, seed)?))
}

/// `U diag(sigmas) Vᵀ` with random orthonormal `U` (m×r) and `V` (n×r), where
/// `r = sigmas.len()`.
pub fn matrix_with_spectrum(m: usize, n: usize, sigmas: &[f64], seed: u64) -> Result<Matrix> {
    let r = sigmas.len();
    if r == 0 || r > m.min(n) {
        return Err(Error::Dimension(format!("spectrum of length {r} for a {m}×{n} matrix")));
    }
    let mut u = random_orthonormal(m, r, seed)?;
    let v = random_orthonormal(n, r, seed.wrapping_add(0x9e37_79b9_7f4a_7c15))?;
    for (j, s) in sigmas.iter().enumerate() {
        u.column_mut(j).scale_mut(*s);
    }
    Ok(u * v.transpose())
}

use nalgebra::linalg::{Schur, SVD};

use super::{check_finite, to_complex};
use crate::{Complex64, ComplexMatrix, Error, Matrix, Result};

/// Eigenvalues and unit-norm eigenvectors (as columns) of a real square matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Eigen {
    pub values: Vec<Complex64>,
    pub vectors: ComplexMatrix,
}

/// General real nonsymmetric eigendecomposition `MW = WΛ`.
///
/// Eigenvalues come from a real Schur form, so complex ones appear in exact
/// conjugate pairs. Each eigenvector is the right singular vector of
/// `M − λI` for its smallest singular value; for a cluster of numerically equal
/// eigenvalues the trailing singular vectors span the eigenspace. The vector of
/// a conjugate partner is the exact conjugate of its mate, and every vector is
/// phased so that its largest-magnitude entry is real and positive.
pub fn eig(m: &Matrix) -> Result<Eigen> {
    check_finite(m, "matrix")?;
    let n = m.nrows();
    if m.ncols() != n {
        return Err(Error::Dimension(format!("eig needs a square matrix, got {}×{}", n, m.ncols())));
    }
    if n == 1 {
        return Ok(Eigen {
            values: vec![Complex64::new(m[(0, 0)], 0.0)],
            vectors: ComplexMatrix::from_element(1, 1, Complex64::new(1.0, 0.0)),
        });
    }

    let schur = Schur::try_new(m.clone(), f64::EPSILON, 1000 * n).ok_or_else(|| {
        Error::Numerical(format!("real Schur iteration did not converge for a {n}×{n} matrix"))
    })?;
    let mut values: Vec<Complex64> = schur.complex_eigenvalues().iter().copied().collect();

    // pin conjugate pairs exactly
    let scale = m.norm().max(f64::MIN_POSITIVE);
    let pair_tol = 1e-10 * scale;
    let mut partner = vec![None; n];
    for i in 0..n {
        if values[i].im > 0.0 && partner[i].is_none() {
            let target = values[i].conj();
            let best = (0..n)
                .filter(|&j| j != i && values[j].im < 0.0 && partner[j].is_none())
                .min_by(|&a, &b| {
                    (values[a] - target).norm().total_cmp(&(values[b] - target).norm())
                });
            if let Some(j) = best {
                if (values[j] - target).norm() <= pair_tol.max(1e-8 * values[i].norm()) {
                    values[j] = target;
                    partner[i] = Some(j);
                    partner[j] = Some(i);
                }
            }
        }
    }

    let mc = to_complex(m);
    let mut vectors = ComplexMatrix::zeros(n, n);
    let mut done = vec![false; n];
    let cluster_tol = 1e-10 * scale;
    for i in 0..n {
        if done[i] || (values[i].im < 0.0 && partner[i].is_some()) {
            continue;
        }
        let cluster: Vec<usize> = (0..n)
            .filter(|&j| !done[j] && (values[j] - values[i]).norm() <= cluster_tol)
            .filter(|&j| !(values[j].im < 0.0 && partner[j].is_some()))
            .collect();
        let centre = cluster.iter().map(|&j| values[j]).sum::<Complex64>() / cluster.len() as f64;
        let mut shifted = mc.clone();
        for d in 0..n {
            shifted[(d, d)] -= centre;
        }
        let svd = SVD::try_new(shifted, false, true, f64::EPSILON, 0)
            .ok_or_else(|| Error::Numerical("SVD of shifted matrix did not converge".into()))?;
        let v_t = svd.v_t.ok_or_else(|| Error::Numerical("SVD returned no right vectors".into()))?;
        for (slot, &j) in cluster.iter().enumerate() {
            // rows of Vᴴ in descending σ order; take from the end
            let row = n - 1 - slot;
            let mut w: Vec<Complex64> = (0..n).map(|r| v_t[(row, r)].conj()).collect();
            normalize_phase(&mut w);
            for (r, x) in w.iter().enumerate() {
                vectors[(r, j)] = *x;
            }
            done[j] = true;
            if let Some(p) = partner[j] {
                for r in 0..n {
                    vectors[(r, p)] = w[r].conj();
                }
                done[p] = true;
            }
        }
    }

    let vectors_ok = vectors.iter().all(|z| z.re.is_finite() && z.im.is_finite());
    if !vectors_ok {
        return Err(Error::Numerical("eigenvector computation produced non-finite values".into()));
    }
    Ok(Eigen { values, vectors })
}

fn normalize_phase(w: &mut [Complex64]) {
    let norm = w.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    let mut best = 0;
    for i in 1..w.len() {
        if w[i].norm() > w[best].norm() * (1.0 + 1e-12) {
            best = i;
        }
    }
    let pivot = w[best];
    let phase = if pivot.norm() > 0.0 { pivot.conj() / pivot.norm() } else { Complex64::new(1.0, 0.0) };
    for z in w.iter_mut() {
        *z = *z * phase / norm;
    }
}

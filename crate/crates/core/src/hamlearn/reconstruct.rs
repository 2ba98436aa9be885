use alloc::vec;
use alloc::vec::Vec;

use libm::sqrt;
use nalgebra::DMatrix;

use crate::hamlearn::kmatrix::KMatrix;
use crate::{Error, Result};

/// Eigenvalues of `K^T K` closer than this fraction of the largest one to
/// the smallest are treated as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

/// Singular values within this fraction of the largest one of the smallest
/// span the minimizing subspace the reconstruction is drawn from.
pub const NULL_TOL: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq)]
pub struct LearnResult {
    /// Normalized, sign-fixed reconstruction.
    pub coefficients: Vec<f64>,
    /// Singular values of K (zero-padded to M rows), ascending.
    pub singular_values: Vec<f64>,
    /// Two smallest eigenvalues of `K^T K`.
    pub lambda: (f64, f64),
    /// `lambda.1 - lambda.0`
    pub gap: f64,
    /// True when the smallest eigenvalue is degenerate.
    pub non_unique: bool,
    /// Orthonormal right singular vectors of the degenerate cluster, or the
    /// single reconstruction when unique.
    pub null_vectors: Vec<Vec<f64>>,
}

/// Flips `v` so its largest-magnitude entry is positive.
pub fn fix_sign(v: &mut [f64]) {
    let mut best = 0usize;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v.get(best).is_some_and(|x| *x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Lowest right singular vector of K. A degenerate minimum is reported
/// through `non_unique`. When several singular values equal the smallest to
/// working precision the reconstruction is the normalized projection of the
/// all-ones vector onto their span.
pub fn reconstruct(k: &KMatrix) -> Result<LearnResult> {
    let m = k.n_elements();
    reconstruct_with_reference(k, &vec![1.0; m])
}

/// As [`reconstruct`] with an explicit reference vector for the degenerate
/// case.
pub fn reconstruct_with_reference(k: &KMatrix, reference: &[f64]) -> Result<LearnResult> {
    let (n_c, m) = (k.n_constraints(), k.n_elements());
    if n_c == 0 || m < 2 {
        return Err(Error::InvalidArgument(alloc::format!("need N_C >= 1 and M >= 2, got {n_c} x {m}")));
    }
    if reference.len() != m {
        return Err(Error::LengthMismatch(reference.len(), m));
    }
    let rows = n_c.max(m);
    let mut padded = DMatrix::zeros(rows, m);
    padded.rows_mut(0, n_c).copy_from(&k.entries);
    let svd = padded.svd(false, true);
    let vt = svd.v_t.ok_or_else(|| Error::InvalidArgument("SVD did not converge".into()))?;
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let lam: Vec<f64> = singular_values.iter().map(|s| s * s).collect();
    let lmax = lam[m - 1];
    let cluster: Vec<Vec<f64>> = order
        .iter()
        .zip(&lam)
        .take_while(|(_, &l)| l - lam[0] <= DEGENERACY_TOL * lmax)
        .map(|(&i, _)| vt.row(i).iter().copied().collect())
        .collect();
    let non_unique = cluster.len() > 1;
    let smax = singular_values[m - 1];
    let minimizers: Vec<&Vec<f64>> = cluster
        .iter()
        .zip(&singular_values)
        .take_while(|(_, &s)| s - singular_values[0] <= NULL_TOL * smax)
        .map(|(v, _)| v)
        .collect();
    let mut c: Vec<f64> = if minimizers.len() > 1 {
        let mut p = vec![0.0; m];
        for v in minimizers.iter().copied() {
            let d: f64 = v.iter().zip(reference).map(|(a, b)| a * b).sum();
            for (x, y) in p.iter_mut().zip(v) {
                *x += d * y;
            }
        }
        let pn = sqrt(p.iter().map(|x| x * x).sum());
        if pn > 0.0 {
            p.iter_mut().for_each(|x| *x /= pn);
            p
        } else {
            cluster[0].clone()
        }
    } else {
        cluster[0].clone()
    };
    fix_sign(&mut c);
    let null_vectors = if non_unique {
        cluster
            .into_iter()
            .map(|mut v| {
                fix_sign(&mut v);
                v
            })
            .collect()
    } else {
        vec![c.clone()]
    };
    Ok(LearnResult {
        coefficients: c,
        lambda: (lam[0], lam[1]),
        gap: lam[1] - lam[0],
        singular_values,
        non_unique,
        null_vectors,
    })
}

/// `min(||c_hat - r_hat||, ||c_hat + r_hat||)` of the normalized inputs.
pub fn parameter_distance(c_input: &[f64], c_reconstructed: &[f64]) -> Result<f64> {
    if c_input.len() != c_reconstructed.len() {
        return Err(Error::LengthMismatch(c_input.len(), c_reconstructed.len()));
    }
    let na = sqrt(c_input.iter().map(|x| x * x).sum());
    let nb = sqrt(c_reconstructed.iter().map(|x| x * x).sum());
    if na == 0.0 || nb == 0.0 {
        return Err(Error::ZeroVector);
    }
    let (mut minus, mut plus) = (0.0, 0.0);
    for (a, b) in c_input.iter().zip(c_reconstructed) {
        let (a, b) = (a / na, b / nb);
        minus += (a - b) * (a - b);
        plus += (a + b) * (a + b);
    }
    Ok(sqrt(minus.min(plus)))
}

//! Vector kernels, dense Hermitian eigendecomposition and the Krylov solvers
//! used above the dense crossover.

use alloc::vec;
use alloc::vec::Vec;
use libm::{cos, sin, sqrt};
use nalgebra::DMatrix;
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::rng::Seed;
use crate::{Error, Result, C64};

pub type CMatrix = DMatrix<C64>;

/// Largest dimension handled by dense eigendecomposition.
pub const DENSE_LIMIT: usize = 4096;

/// A linear map on `C^dim` that can be applied without materializing it.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// Overwrites `y` with `A x`.
    fn apply_into(&self, x: &[C64], y: &mut [C64]);

    fn apply(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.dim()];
        self.apply_into(x, &mut y);
        y
    }
}

impl LinearOperator for CMatrix {
    fn dim(&self) -> usize {
        self.nrows()
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        for (i, yi) in y.iter_mut().enumerate() {
            let mut acc = C64::new(0.0, 0.0);
            for (j, xj) in x.iter().enumerate() {
                acc += self[(i, j)] * xj;
            }
            *yi = acc;
        }
    }
}

/// `sum_i conj(a_i) b_i`.
pub fn vdot(a: &[C64], b: &[C64]) -> C64 {
    let mut re = 0.0;
    let mut im = 0.0;
    for (x, y) in a.iter().zip(b) {
        re += x.re * y.re + x.im * y.im;
        im += x.re * y.im - x.im * y.re;
    }
    C64::new(re, im)
}

pub fn norm(a: &[C64]) -> f64 {
    sqrt(a.iter().map(|z| z.norm_sqr()).sum())
}

/// `y += alpha x`
pub fn axpy(alpha: C64, x: &[C64], y: &mut [C64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Scales `a` to unit norm and returns the previous norm.
pub fn normalize(a: &mut [C64]) -> f64 {
    let n = norm(a);
    if n > 0.0 {
        let inv = 1.0 / n;
        for z in a.iter_mut() {
            *z *= inv;
        }
    }
    n
}

/// Deterministic Gaussian start vector.
pub fn random_unit_vector(dim: usize, seed: Seed) -> Vec<C64> {
    let mut rng = seed.rng();
    let mut v: Vec<C64> = (0..dim)
        .map(|_| C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal)))
        .collect();
    normalize(&mut v);
    v
}

/// Eigenpairs of a Hermitian matrix, eigenvalues ascending, eigenvectors as
/// columns of `vectors`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: CMatrix,
}

pub fn hermitian_eigen(m: &CMatrix) -> HermitianEigen {
    let n = m.nrows();
    // symmetrize so roundoff asymmetry never leaks into the solver
    let h = CMatrix::from_fn(n, n, |i, j| (m[(i, j)] + m[(j, i)].conj()) * 0.5);
    let eig = h.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = CMatrix::from_fn(n, n, |i, c| eig.eigenvectors[(i, order[c])]);
    HermitianEigen { values, vectors }
}

/// Eigenpairs of a real symmetric matrix, ascending.
pub(crate) fn symmetric_eigen_real(m: DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let n = m.nrows();
    let eig = m.symmetric_eigen();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let vectors = DMatrix::from_fn(n, n, |i, c| eig.eigenvectors[(i, order[c])]);
    (values, vectors)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LanczosOptions {
    /// Krylov vectors kept per restart cycle.
    pub krylov_dim: usize,
    pub max_restarts: usize,
    /// Residual target relative to the operator norm bound.
    pub tol: f64,
    pub seed: Seed,
}

impl Default for LanczosOptions {
    fn default() -> Self {
        LanczosOptions {
            krylov_dim: 40,
            max_restarts: 2000,
            tol: 1e-11,
            seed: Seed(0x1a2c_7e55),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Eigenpair {
    pub value: f64,
    pub vector: Vec<C64>,
    pub residual: f64,
    pub restarts: usize,
}

/// One Lanczos sweep with full reorthogonalization starting at `start`.
/// Returns the orthonormal basis, the tridiagonal coefficients and the norm
/// of the final unnormalized residual vector.
fn lanczos_sweep<A: LinearOperator + ?Sized>(
    op: &A,
    start: Vec<C64>,
    m: usize,
    breakdown: f64,
) -> (Vec<Vec<C64>>, Vec<f64>, Vec<f64>, f64) {
    let n = op.dim();
    let mut basis = vec![start];
    let mut alpha = Vec::with_capacity(m);
    let mut beta = Vec::with_capacity(m);
    let mut w = vec![C64::new(0.0, 0.0); n];
    let mut last = 0.0;
    for j in 0..m {
        op.apply_into(&basis[j], &mut w);
        alpha.push(vdot(&basis[j], &w).re);
        for _ in 0..2 {
            for q in &basis {
                let c = vdot(q, &w);
                axpy(-c, q, &mut w);
            }
        }
        let b = norm(&w);
        last = b;
        if j + 1 == m || b <= breakdown {
            break;
        }
        beta.push(b);
        basis.push(w.iter().map(|x| x / b).collect());
    }
    (basis, alpha, beta, last)
}

fn tridiagonal(alpha: &[f64], beta: &[f64]) -> DMatrix<f64> {
    let k = alpha.len();
    DMatrix::from_fn(k, k, |i, j| {
        if i == j {
            alpha[i]
        } else if i + 1 == j {
            beta[i]
        } else if j + 1 == i {
            beta[j]
        } else {
            0.0
        }
    })
}

/// Lowest eigenpair of a Hermitian operator by explicitly restarted Lanczos.
/// `scale` is an upper bound on the operator norm; convergence is declared
/// when `||H v - E v|| <= tol * scale`.
pub fn lanczos_lowest<A: LinearOperator + ?Sized>(
    op: &A,
    scale: f64,
    opts: &LanczosOptions,
) -> Result<Eigenpair> {
    let n = op.dim();
    let m = opts.krylov_dim.clamp(2, n.max(2)).min(n);
    let scale = if scale > 0.0 { scale } else { 1.0 };
    let mut v = random_unit_vector(n, opts.seed);
    let mut hv = vec![C64::new(0.0, 0.0); n];
    let mut residual = f64::INFINITY;
    for restart in 0..opts.max_restarts.max(1) {
        let (basis, alpha, beta, _) = lanczos_sweep(op, v, m, 1e-14 * scale);
        let (_, s) = symmetric_eigen_real(tridiagonal(&alpha, &beta));
        let mut next = vec![C64::new(0.0, 0.0); n];
        for (i, q) in basis.iter().enumerate() {
            axpy(C64::new(s[(i, 0)], 0.0), q, &mut next);
        }
        drop(basis);
        normalize(&mut next);
        op.apply_into(&next, &mut hv);
        let value = vdot(&next, &hv).re;
        let mut r = hv.clone();
        axpy(C64::new(-value, 0.0), &next, &mut r);
        residual = norm(&r);
        if residual <= opts.tol * scale {
            return Ok(Eigenpair {
                value,
                vector: next,
                residual,
                restarts: restart,
            });
        }
        v = next;
    }
    Err(Error::NonConvergence {
        iterations: opts.max_restarts,
        residual,
    })
}

/// `exp(-i H t) psi` with adaptive Krylov steps; each accepted step has an
/// estimated local error below `tol`.
pub fn krylov_propagate<A: LinearOperator + ?Sized>(
    op: &A,
    psi: &[C64],
    t: f64,
    scale: f64,
    tol: f64,
) -> Vec<C64> {
    const KRYLOV: usize = 30;
    let mut v = psi.to_vec();
    let nrm = normalize(&mut v);
    if t == 0.0 || nrm == 0.0 {
        return psi.to_vec();
    }
    let direction = t.signum();
    let mut remaining = t.abs();
    let mut dt = remaining.min(10.0 / scale.max(1e-300));
    while remaining > 0.0 {
        let (basis, alpha, beta, tail) = lanczos_sweep(op, v.clone(), KRYLOV.min(op.dim()), 1e-14 * scale);
        let k = alpha.len();
        let (theta, s) = symmetric_eigen_real(tridiagonal(&alpha, &beta));
        let exhausted = k < KRYLOV.min(op.dim()) || k == op.dim();
        let coeffs = |step: f64| -> Vec<C64> {
            (0..k)
                .map(|i| {
                    let mut acc = C64::new(0.0, 0.0);
                    for (l, th) in theta.iter().enumerate() {
                        let ph = -direction * th * step;
                        acc += C64::new(cos(ph), sin(ph)) * (s[(i, l)] * s[(0, l)]);
                    }
                    acc
                })
                .collect()
        };
        dt = dt.min(remaining);
        let mut c = coeffs(dt);
        while !exhausted && tail * c[k - 1].norm() > tol && dt > 1e-14 {
            dt *= 0.5;
            c = coeffs(dt);
        }
        let mut next = vec![C64::new(0.0, 0.0); op.dim()];
        for (ci, q) in c.iter().zip(&basis) {
            axpy(*ci, q, &mut next);
        }
        v = next;
        remaining -= dt;
        if remaining < 1e-15 * t.abs() {
            remaining = 0.0;
        }
        dt *= 1.5;
    }
    for z in v.iter_mut() {
        *z *= nrm;
    }
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> CMatrix {
        let mut rng = Seed(seed).rng();
        let a = CMatrix::from_fn(n, n, |_, _| {
            C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
        });
        (&a + a.adjoint()) * C64::new(0.5, 0.0)
    }

    #[test]
    fn dense_eigen_sorted_and_accurate() {
        let h = random_hermitian(12, 3);
        let e = hermitian_eigen(&h);
        for w in e.values.windows(2) {
            assert!(w[0] <= w[1]);
        }
        for k in 0..12 {
            let v: Vec<C64> = e.vectors.column(k).iter().copied().collect();
            let mut r = h.apply(&v);
            axpy(C64::new(-e.values[k], 0.0), &v, &mut r);
            assert!(norm(&r) < 1e-10);
        }
    }

    #[test]
    fn lanczos_matches_dense_lowest() {
        let h = random_hermitian(80, 5);
        let e = hermitian_eigen(&h);
        let scale = 40.0;
        let p = lanczos_lowest(&h, scale, &LanczosOptions { krylov_dim: 20, ..Default::default() }).unwrap();
        assert!((p.value - e.values[0]).abs() < 1e-9);
        assert!(p.residual <= 1e-11 * scale);
    }

    #[test]
    fn krylov_propagation_matches_dense() {
        let h = random_hermitian(60, 9);
        let e = hermitian_eigen(&h);
        let psi = random_unit_vector(60, Seed(1));
        let t = 0.7;
        let got = krylov_propagate(&h, &psi, t, 30.0, 1e-10);
        // dense reference V exp(-iLt) V^dag psi
        let mut want = vec![C64::new(0.0, 0.0); 60];
        for k in 0..60 {
            let vk: Vec<C64> = e.vectors.column(k).iter().copied().collect();
            let c = vdot(&vk, &psi) * C64::new(cos(-e.values[k] * t), sin(-e.values[k] * t));
            axpy(c, &vk, &mut want);
        }
        let diff: Vec<C64> = got.iter().zip(&want).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) < 1e-8, "{}", norm(&diff));
        assert!((norm(&got) - 1.0).abs() < 1e-10);
    }
}

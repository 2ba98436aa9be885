//! The 24 single-qubit Cliffords and Haar-random single-qubit unitaries.
//!
//! The Clifford table is generated breadth-first from the identity by
//! left multiplication with `H` and then `S`, keeping each new element up
//! to global phase. Every element is stored phase-normalized: its first
//! non-zero entry (row-major) is real and positive.

use alloc::vec::Vec;
use core::f64::consts::{FRAC_1_SQRT_2, PI};

use libm::{cos, hypot, sin};
use rand::Rng as _;
use rand_distr::StandardNormal;

use crate::qsim::measure::Mat2;
use crate::rng::Rng;
use crate::C64;

pub const N_CLIFFORDS: usize = 24;

const EPS: f64 = 1e-9;

fn c(re: f64, im: f64) -> C64 {
    C64::new(re, im)
}

pub fn hadamard() -> Mat2 {
    let h = FRAC_1_SQRT_2;
    [[c(h, 0.0), c(h, 0.0)], [c(h, 0.0), c(-h, 0.0)]]
}

pub fn phase_gate() -> Mat2 {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(0.0, 1.0)]]
}

pub fn identity() -> Mat2 {
    [[c(1.0, 0.0), c(0.0, 0.0)], [c(0.0, 0.0), c(1.0, 0.0)]]
}

pub fn matmul(a: &Mat2, b: &Mat2) -> Mat2 {
    let mut out = [[c(0.0, 0.0); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, x) in row.iter_mut().enumerate() {
            *x = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// Multiplies by the global phase that makes the first non-zero entry real
/// and positive.
pub fn normalize_phase(u: &Mat2) -> Mat2 {
    let first = [u[0][0], u[0][1], u[1][0], u[1][1]]
        .into_iter()
        .find(|z| z.norm() > EPS)
        .unwrap_or(c(1.0, 0.0));
    let ph = first.conj() / first.norm();
    let mut out = *u;
    for row in out.iter_mut() {
        for x in row.iter_mut() {
            *x *= ph;
        }
    }
    out
}

fn close(a: &Mat2, b: &Mat2, tol: f64) -> bool {
    (0..2).all(|i| (0..2).all(|j| (a[i][j] - b[i][j]).norm() <= tol))
}

/// Entrywise comparison after phase normalization.
pub fn same_up_to_phase(a: &Mat2, b: &Mat2, tol: f64) -> bool {
    close(&normalize_phase(a), &normalize_phase(b), tol)
}

/// The canonical table; index 0 is the identity, 1 is `H`, 2 is `S`.
pub fn clifford_table() -> Vec<Mat2> {
    let gens = [hadamard(), phase_gate()];
    let mut table: Vec<Mat2> = alloc::vec![identity()];
    let mut head = 0;
    while head < table.len() {
        let u = table[head];
        head += 1;
        for g in &gens {
            let v = normalize_phase(&matmul(g, &u));
            if !table.iter().any(|w| close(w, &v, EPS)) {
                table.push(v);
            }
        }
    }
    debug_assert_eq!(table.len(), N_CLIFFORDS);
    table
}

/// Haar-random `U(2)` element, phase-normalized.
///
/// The first column is a normalized complex Gaussian vector `(a, b)`; the
/// second is `e^{i phi} (-conj(b), conj(a))` with `phi` uniform on
/// `[0, 2 pi)`.
pub fn haar_unitary(rng: &mut Rng) -> Mat2 {
    let mut g = [0.0f64; 4];
    for x in g.iter_mut() {
        *x = rng.sample(StandardNormal);
    }
    let n = hypot(hypot(g[0], g[1]), hypot(g[2], g[3]));
    let a = c(g[0] / n, g[1] / n);
    let b = c(g[2] / n, g[3] / n);
    let phi = rng.random::<f64>() * 2.0 * PI;
    let e = c(cos(phi), sin(phi));
    normalize_phase(&[[a, -e * b.conj()], [b, e * a.conj()]])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qsim::measure::unitarity_defect;

    #[test]
    fn table_is_a_group_of_24() {
        let t = clifford_table();
        assert_eq!(t.len(), 24);
        assert!(close(&t[1], &hadamard(), 1e-15));
        assert!(close(&t[2], &phase_gate(), 1e-15));
        for a in &t {
            assert!(unitarity_defect(a) < 1e-12);
            for b in &t {
                let p = normalize_phase(&matmul(a, b));
                assert!(t.iter().any(|w| close(w, &p, 1e-9)));
            }
        }
    }

    #[test]
    fn haar_draws_are_unitary() {
        let mut rng = crate::rng::Seed(4).rng();
        for _ in 0..100 {
            assert!(unitarity_defect(&haar_unitary(&mut rng)) < 1e-12);
        }
    }
}

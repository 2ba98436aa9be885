//! Statevector helpers on qubit registers, qubit 0 most significant.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::CMatrix;
use crate::rng::Rng;
use crate::C64;

use super::keys::PublicKey;

pub(crate) fn n_of(len: usize) -> usize {
    len.trailing_zeros() as usize
}

/// Appends a preimage qubit and two image qubits after the last qubit:
/// `|s> -> 2^{-1/2} sum_x |s>|x>|y(s_target, x)>`.
pub(crate) fn commit_amps(amps: &[C64], target: usize, table: &PublicKey) -> Vec<C64> {
    let n = n_of(amps.len());
    let shift = n - 1 - target;
    let w = core::f64::consts::FRAC_1_SQRT_2;
    let mut out = vec![C64::new(0.0, 0.0); amps.len() << 3];
    for (s, a) in amps.iter().enumerate() {
        let b = ((s >> shift) & 1) as u8;
        for x in 0..2u8 {
            let y = table.eval(b, x) as usize;
            out[(s << 3) | ((x as usize) << 2) | y] = a * w;
        }
    }
    out
}

/// Born probabilities of the last two qubits.
pub(crate) fn image_probabilities(amps: &[C64]) -> [f64; 4] {
    let mut p = [0.0; 4];
    for (i, a) in amps.iter().enumerate() {
        p[i & 3] += a.norm_sqr();
    }
    p
}

/// Keeps the branch with the last two qubits equal to `y` and removes them.
pub(crate) fn project_image(amps: &[C64], y: u8) -> Vec<C64> {
    let mut out: Vec<C64> = amps.iter().skip(y as usize).step_by(4).copied().collect();
    crate::linalg::normalize(&mut out);
    out
}

pub(crate) fn draw(rng: &mut Rng, probs: &[f64]) -> usize {
    let total: f64 = probs.iter().sum();
    let mut r = crate::qsim::measure::uniform(rng) * total;
    for (i, p) in probs.iter().enumerate() {
        if r < *p {
            return i;
        }
        r -= p;
    }
    probs.iter().rposition(|p| *p > 0.0).unwrap_or(0)
}

/// Measures qubit `q` in Z, collapsing the register in place.
pub(crate) fn measure_z(amps: &mut [C64], q: usize, rng: &mut Rng) -> u8 {
    let shift = n_of(amps.len()) - 1 - q;
    let p1: f64 = amps
        .iter()
        .enumerate()
        .filter(|(i, _)| (i >> shift) & 1 == 1)
        .map(|(_, a)| a.norm_sqr())
        .sum();
    let total: f64 = amps.iter().map(|a| a.norm_sqr()).sum();
    let bit = u8::from(crate::qsim::measure::uniform(rng) * total < p1);
    let keep = if bit == 1 { p1 } else { total - p1 };
    let scale = 1.0 / libm::sqrt(keep);
    for (i, a) in amps.iter_mut().enumerate() {
        if ((i >> shift) & 1) as u8 == bit {
            *a *= scale;
        } else {
            *a = C64::new(0.0, 0.0);
        }
    }
    bit
}

pub(crate) fn apply_hadamard(amps: &mut [C64], q: usize) {
    let bit = 1usize << (n_of(amps.len()) - 1 - q);
    let w = core::f64::consts::FRAC_1_SQRT_2;
    for i in 0..amps.len() {
        if i & bit == 0 {
            let (a, b) = (amps[i], amps[i | bit]);
            amps[i] = (a + b) * w;
            amps[i | bit] = (a - b) * w;
        }
    }
}

/// Applies a `2^k x 2^k` matrix to `qubits` (first listed is the most
/// significant local index).
pub(crate) fn apply_matrix(amps: &mut [C64], qubits: &[usize], m: &CMatrix) {
    let n = n_of(amps.len());
    let k = qubits.len();
    let masks: Vec<usize> = qubits.iter().map(|q| 1usize << (n - 1 - q)).collect();
    let all: usize = masks.iter().sum();
    let mut local = vec![C64::new(0.0, 0.0); 1 << k];
    let mut idx = vec![0usize; 1 << k];
    for base in 0..amps.len() {
        if base & all != 0 {
            continue;
        }
        for (l, slot) in idx.iter_mut().enumerate() {
            let mut i = base;
            for (a, m) in masks.iter().enumerate() {
                if (l >> (k - 1 - a)) & 1 == 1 {
                    i |= m;
                }
            }
            *slot = i;
            local[l] = amps[i];
        }
        for (r, &i) in idx.iter().enumerate() {
            amps[i] = (0..1 << k).map(|c| m[(r, c)] * local[c]).sum();
        }
    }
}

//! Toy 2-bit trapdoor functions `y_k : {0,1}^2 -> {0,1}^2`.
//!
//! A table lists `[y(0,0), y(0,1), y(1,0), y(1,1)]`, i.e. input `(b, x)`
//! sits at position `2b + x`. These families are exhaustively invertible
//! and provide no security; they reproduce the message flow only.

use alloc::vec::Vec;
use core::fmt;

use rand::Rng as _;

use crate::rng::Seed;
use crate::{Error, Result};

/// Basis the verifier wants a delegated qubit measured in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum MeasBasis {
    Z,
    X,
}

impl fmt::Display for MeasBasis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            MeasBasis::Z => "z",
            MeasBasis::X => "x",
        })
    }
}

/// What the prover sees: a label and the function table.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct PublicKey {
    pub label: u8,
    pub table: [u8; 4],
}

impl PublicKey {
    pub fn eval(&self, b: u8, x: u8) -> u8 {
        self.table[((b & 1) * 2 + (x & 1)) as usize]
    }
}

/// Inversion data kept by the verifier.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Trapdoor {
    /// `inverse[y] = (b, x)`
    OneToOne { inverse: [(u8, u8); 4] },
    /// `preimages[y] = Some((x0, x1))` with `y(0, x0) = y(1, x1) = y`.
    TwoToOne { preimages: [Option<(u8, u8)>; 4] },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct TrapdoorKey {
    pub public: PublicKey,
    pub trapdoor: Trapdoor,
}

impl TrapdoorKey {
    pub fn is_one_to_one(&self) -> bool {
        matches!(self.trapdoor, Trapdoor::OneToOne { .. })
    }

    pub fn basis(&self) -> MeasBasis {
        if self.is_one_to_one() {
            MeasBasis::Z
        } else {
            MeasBasis::X
        }
    }
}

fn is_bijection(t: &[u8; 4]) -> bool {
    let mut seen = [false; 4];
    t.iter().all(|&y| !core::mem::replace(&mut seen[y as usize], true))
}

fn is_two_to_one(t: &[u8; 4]) -> bool {
    let (a, b) = ([t[0], t[1]], [t[2], t[3]]);
    a[0] != a[1] && b[0] != b[1] && ((a[0] == b[0] && a[1] == b[1]) || (a[0] == b[1] && a[1] == b[0]))
}

fn build(table: [u8; 4], label: u8) -> Option<TrapdoorKey> {
    let public = PublicKey { label, table };
    if is_bijection(&table) {
        let mut inverse = [(0, 0); 4];
        for (i, &y) in table.iter().enumerate() {
            inverse[y as usize] = ((i / 2) as u8, (i % 2) as u8);
        }
        Some(TrapdoorKey {
            public,
            trapdoor: Trapdoor::OneToOne { inverse },
        })
    } else if is_two_to_one(&table) {
        let mut preimages = [None; 4];
        for x0 in 0..2u8 {
            let y = table[x0 as usize];
            let x1 = if table[2] == y { 0 } else { 1 };
            preimages[y as usize] = Some((x0, x1));
        }
        Some(TrapdoorKey {
            public,
            trapdoor: Trapdoor::TwoToOne { preimages },
        })
    } else {
        None
    }
}

/// All 48 keys, split into the one-to-one and two-to-one families. Labels
/// number the union of both families in lexicographic table order.
pub fn enumerate_functions() -> (Vec<TrapdoorKey>, Vec<TrapdoorKey>) {
    let mut one = Vec::new();
    let mut two = Vec::new();
    let mut label = 0u8;
    for code in 0..256u32 {
        let table = [(code >> 6) as u8 & 3, (code >> 4) as u8 & 3, (code >> 2) as u8 & 3, code as u8 & 3];
        if let Some(k) = build(table, label) {
            label += 1;
            if k.is_one_to_one() {
                one.push(k);
            } else {
                two.push(k);
            }
        }
    }
    (one, two)
}

/// Uniform key from the family matching `basis`: one-to-one for `Z`,
/// two-to-one for `X`.
pub fn keygen(basis: MeasBasis, seed: Seed) -> TrapdoorKey {
    keygen_with(basis, &mut seed.rng(), &enumerate_functions())
}

pub(crate) fn keygen_with(
    basis: MeasBasis,
    rng: &mut crate::rng::Rng,
    families: &(Vec<TrapdoorKey>, Vec<TrapdoorKey>),
) -> TrapdoorKey {
    let fam = match basis {
        MeasBasis::Z => &families.0,
        MeasBasis::X => &families.1,
    };
    fam[rng.random_range(0..fam.len())]
}

/// Verifier-side decoding of a measurement round.
///
/// One-to-one: the outcome is `b` from inverting `y`; the prover's answers
/// are ignored. Two-to-one: the outcome is `u ^ (v & (x0 ^ x1))` for the
/// prover's X-basis outcomes `(u, v)`.
pub fn decode_outcome(key: &TrapdoorKey, y: u8, u: u8, v: u8) -> Result<u8> {
    if y > 3 {
        return Err(Error::NoPreimage(y));
    }
    match key.trapdoor {
        Trapdoor::OneToOne { inverse } => Ok(inverse[y as usize].0),
        Trapdoor::TwoToOne { preimages } => {
            let (x0, x1) = preimages[y as usize].ok_or(Error::NoPreimage(y))?;
            Ok((u ^ (v & (x0 ^ x1))) & 1)
        }
    }
}

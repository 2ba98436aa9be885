//! Exact small-system quantum simulation and three verification workflows
//! built on top of it:
//!
//! * [`hamlearn`]: parent-Hamiltonian reconstruction from stationary-state
//!   constraints on Fermi-Hubbard lattices.
//! * [`randmeas`]: randomized-measurement datasets and the Hamming-kernel
//!   overlap, purity and `F_max` estimators.
//! * [`verify`]: classical delegation of X/Z measurements with toy 2-bit
//!   trapdoor function tables, clock states and energy verification.
//!
//! Everything in this crate is `no_std` + `alloc`; file formats, the dataset
//! repository and the command line live in the `qverify` crate.
#![cfg_attr(not(any(test, feature = "std")), no_std)]
#![deny(missing_debug_implementations)]

extern crate alloc;

pub mod error;
pub mod hamlearn;
pub mod linalg;
pub mod qsim;
pub mod randmeas;
pub mod rng;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use num_complex::Complex64 as C64;

//! File formats, the dataset repository, pinned reproductions and the
//! command-line front end built on [`qverify_core`].

pub mod canonical;
pub mod cli;
pub mod error;
pub mod files;
pub mod repo;
pub mod reproduce;
pub mod states;

pub use error::{QvError, QvResult};

//! Moments of cosine similarity over multivariate data.
//!
//! Closed-form and asymptotic moments live in [`moments`], variance-minimizing
//! spectra in [`optimize`], hypothesis-test power in [`power`], seeded Monte
//! Carlo checks in [`simulate`] and file handling in [`dataio`].

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod dataio;
pub mod error;
pub mod linalg;
pub mod moments;
pub mod optimize;
pub mod power;
pub mod simulate;
pub mod sum;

pub use error::{Error, Result};

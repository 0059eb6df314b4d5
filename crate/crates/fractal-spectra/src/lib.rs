//! Self-similar symmetric Laplacians on the unit interval and on the
//! Sierpinski gasket.
//!
//! Both models are one-parameter families: `p` weights the interval's four
//! quarters, `r` is the resistance ratio of the twice-iterated gasket. The
//! crate builds the level-m graph approximations, computes complete
//! Dirichlet spectra by spectral decimation, checks them against a dense
//! eigensolver, and provides spectral statistics, threshold and hierarchical
//! variants, and heat and wave solvers.

pub mod analysis;
pub mod error;
pub mod graphs;
pub mod interval_decimation;
pub mod models;
pub mod poly;
pub mod sg_decimation;
pub mod spacetime;
pub mod spectrum;
pub mod variants;

pub use error::{Error, Result};

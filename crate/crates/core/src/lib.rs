//! Optical characterization of single-crystal diamond plates: absorption from
//! transmittance, spectral decomposition into defect bands, birefringence
//! maps, treatment-stage and P1 correlation analysis, synthetic data, and the
//! text formats, reports and plots used by the `diamond-optics` tool.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod absorption;
pub mod analysis;
pub mod cli;
pub mod birefringence;
pub mod decomposition;
pub mod error;
pub mod io;
pub mod numeric;
pub mod synth;
pub mod types;

pub use error::{Error, Result};

#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Adaptive beamforming for uniform linear arrays with interference-plus-noise
//! covariance reconstruction from a two-level angular power spectrum.

pub mod array;
pub mod beamforming;
pub mod error;
pub mod estimation;
pub mod experiment;
pub mod io;
pub mod linalg;
pub mod reconstruction;

pub use error::{Error, Result};

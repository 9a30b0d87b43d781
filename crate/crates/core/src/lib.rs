//! Random-Forest spatial modelling toolkit: raster predictor derivation,
//! from-scratch bagged CART forests, random vs. spatial cross-validation,
//! and forward/backward feature selection, plus a synthetic-landscape
//! benchmark generator for end-to-end experiments.

pub mod cv;
pub mod error;
pub mod folds;
pub mod forest;
pub mod metrics;
pub mod raster;
pub mod sample;
pub mod selection;
pub mod synth;

mod rng;

pub use error::{Error, ErrorKind, Result};

//! Studentized two-sample U-statistics, bootstrap calibration for large-scale
//! testing, and the simulation harness used to assess false discovery control.

pub mod calibration;
pub mod error;
pub mod kernels;
pub mod multiple_testing;
pub mod normal;
pub mod numeric;
pub mod rng;
pub mod simharness;
pub mod tstat;
pub mod ustat;

pub use error::{Error, Result};

//! In-memory MICE imputation built on the generalized cofactor ring.
//!
//! The crate is organised bottom-up:
//!
//! * [`ring`]: cofactor triples, lifting, bulk aggregation, dense expansion.
//! * [`dataset`]: columnar tables with missingness masks, CSV I/O, initial
//!   imputation and the low/high missing-rate partitioners.
//! * [`models`]: ridge / stochastic linear regression and LDA trained from
//!   cofactor aggregates.
//! * [`factorized`]: cofactor aggregation over tree joins without
//!   materializing the join.
//! * [`mice`]: the baseline, low and high MICE engines.
//! * [`evalbench`]: missingness injection, synthetic data, quality metrics
//!   and the timing harness.
//! * [`cli`]: the `ringmice` command line.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod evalbench;
pub mod factorized;
pub mod mice;
pub mod models;
pub mod ring;

pub use error::{Error, ErrorClass, Result};

//! Chained-equations imputation with three ways of obtaining each training
//! aggregate: rescanning (baseline), subtracting the rows being imputed from
//! a maintained aggregate (low), or adding the observed incomplete rows to a
//! cached aggregate of complete rows (high). Given the same seed all three
//! write the same values up to floating-point reassociation.

mod config;
mod engine;
mod noise;

pub use config::{MiceConfig, ModelKind, Strategy};
pub use engine::{run, run_imputed, AttrSnapshot, IterationSnapshot, MiceReport, PartitionSizes, PhaseTimings};
pub use noise::noise_stream;

#[cfg(test)]
mod tests;

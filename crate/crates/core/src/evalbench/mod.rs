//! Missingness injection, synthetic data, imputation quality metrics and
//! the timing harness.

mod bench;
mod evaluate;
mod inject;
mod synth;

pub use bench::{
    benchmark, median, star_schema, BenchReport, JoinResult, JoinShape, RunTiming, Scenario, StrategyResult,
};
pub use evaluate::{cell_quality, downstream, rmse_r2, split, take_rows, ColumnQuality, QualityReport};
pub use inject::{inject, masking_probabilities, InjectionSpec, Pattern};
pub use synth::{synth, SynthSpec};

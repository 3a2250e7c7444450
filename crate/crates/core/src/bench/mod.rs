//! Benchmark harness: test functions, designs, metrics and replicated
//! experiments.

mod experiment;
mod lhs;
mod rmse;
mod testfns;

pub use experiment::{
    run_experiment, BenchmarkReport, CaseConfig, CellStats, ExperimentConfig, Method, ModelConfig,
    ReportRow, TestSetSpec,
};
pub use lhs::{lhs_sample, lhs_sample_scaled};
pub use rmse::{rmse, RmseVariant};
pub use testfns::TestFunction;

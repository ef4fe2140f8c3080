//! Experiment engine: process evolution, the two-round distribution test,
//! parameter grids and timing.

mod band;
mod bench;
mod evolve;
mod experiment;
mod stats;
mod two_step;

pub use band::{binomial_band, scaled_mode_probability, BandReport};
pub use bench::{run_bench, BenchConfig, BenchReport};
pub use evolve::{evolve, evolve_csv, EvolveConfig, Snapshot, EVOLVE_CSV_HEADER};
pub use experiment::{
    run_experiment, strip_timing_columns, Analysis, ExperimentReport, ExperimentRow, ExperimentSpec,
    GridPoint, GridVariant, OutputPaths, PointAggregate, CSV_COLUMNS, CSV_SCHEMA_VERSION, TIMING_COLUMNS,
};
pub use stats::{chi_square_two_sample, kolmogorov_sf, ks_uniform, ChiSquareResult, KsResult};
pub use two_step::{two_step_ks, two_step_test, TwoStepReport, TwoStepTestConfig};

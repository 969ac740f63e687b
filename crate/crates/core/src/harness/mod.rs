//! Monte Carlo experiments: configuration, deterministic parallel
//! replication, summaries and persisted results.

mod analysis;
mod config;
mod output;
mod run;

pub use analysis::{
    clt_check, clt_check_values, coverage_check, fit_rate, fit_rate_points, mean_squared_error_by_n, var_law_check,
    CltReport, RateFit, VarLawReport, MODERATE_RATE_TOLERANCE, STRONG_RATE_TOLERANCE,
};
pub use config::{BandwidthSpec, ExperimentConfig, ExperimentKind, KernelParams, ProcessSpec, Target};
pub use output::{read_records, write_intervals, write_outputs, write_records, RECORDS_HEADER};
pub use run::{
    child_seed, default_theory_slope, run_experiment, BandwidthSummary, CellSummary, CltEntry, CoverageEntry,
    ExperimentOutput, IntervalRecord, McRecord, RateFitEntry, RunOptions, Summary,
};

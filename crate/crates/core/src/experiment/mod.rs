//! The experiment runner behind the command-line verbs: configuration,
//! orchestration from `phi` to bounds, simulation and distances, and the
//! on-disk report layout.

mod config;
mod output;
mod report;
mod run;

pub use config::{BGrid, ExperimentConfig, PairSpec, KEYS};
pub use output::{bounds_csv_rows, execute, Outcome, Verb, BOUNDS_CSV_HEADER, VERSION};
pub use report::{
    attach_monte_carlo, bound_report, monte_carlo, BoundReport, Check, MonteCarloFields, MonteCarloSettings,
};
pub use run::{
    autocovariance_checks, log_log_slope, run_bounds, run_full, run_gebelein, run_simulate, run_sweep,
    AutocovarianceCheck, GebeleinReport, PairReport, SampleSet, SimulationReport, SlopeFit, SweepReport,
    SweepRow, COUPLING_SUITE_COUNT, COUPLING_THETA_RANGE,
};

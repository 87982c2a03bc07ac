//! Error measures, the cross-validated experiment harness and significance testing.

pub mod anova;
pub mod experiment;
pub mod fdist;
pub mod metrics;

pub use anova::{anova, AnovaRow, AnovaTable, Observation};
pub use experiment::{
    anova_main_effects, compare_cells, fit_system, read_results_csv, resampling_label, run_cell, run_experiment,
    run_fold, run_grid, write_results_csv, CellJob, CellStatus, ExperimentCell, Factor, FittedSystem, FoldOutcome,
    FoldProvenance, GridConfig, System, RESULT_COLUMNS,
};
pub use metrics::{error_pair, smoothed_error, zero_one_error};

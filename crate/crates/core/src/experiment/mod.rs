//! Replicated CMCS-versus-MCMC error studies driven by a TOML config.

pub mod config;
pub mod report;
pub mod run;

pub use config::{
    blbq_preset, tim_preset, ExperimentConfig, Method, ModeKind, Model, ModelKind, ObservableRequest, SweepAxis,
    SweepConfig,
};
pub use report::{read_csv, read_csv_file, CsvRow, ErrorReport, ReplicateRecord, SeriesResult, CSV_HEADER};
pub use run::{centered_region, run_experiment, sweep, ExperimentPlan, GridPoint, PointTruth};

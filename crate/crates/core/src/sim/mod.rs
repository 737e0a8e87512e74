//! Synthetic grid cities, seeded workloads, and end-to-end experiment runs
//! that report CSV metrics.

mod city;
mod experiment;
mod metrics;
mod workload;

pub use city::{ccrs_size_model, GridCity};
pub use experiment::{
    offer_spec, request_spec, run_experiment, run_workload, submit_workload, ExperimentConfig, Submission,
};
pub use metrics::{MetricsReport, MetricsRow};
pub use workload::{
    generate_workload, OfferTrip, RequestKind, RequestTrip, Workload, WorkloadConfig, MAX_TRANSFER_WAIT,
    SECONDS_PER_CELL,
};

use thiserror::Error;

use crate::bloom::BloomError;
use crate::nrs::NrsError;
use crate::tos::TosError;
use crate::trs::TrsError;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("config: {0}")]
    Config(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Tos(#[from] TosError),
    #[error(transparent)]
    Nrs(#[from] NrsError),
    #[error(transparent)]
    Trs(#[from] TrsError),
    #[error(transparent)]
    Bloom(#[from] BloomError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

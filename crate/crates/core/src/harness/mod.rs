//! Simulated parties, dataset handling, the end-to-end experiment and its
//! CSV output.

mod dataset;
mod experiment;
mod metrics;
#[cfg(feature = "audit")]
pub mod oracle;
mod parties;
mod split;

pub use dataset::{load_dataset, load_named, Dataset, DatasetSchema, FeatureKind, FeatureSpec, LabelSpec, MissingPolicy};
#[cfg(feature = "audit")]
pub use experiment::Shadow;
pub use experiment::{
    default_data_dir, prepare_local, run_experiment, write_metrics_csv, write_timing_csv, ExperimentConfig, ExperimentOutcome,
    IslandReport, LocalStage, PhaseCounters, PhaseTimings,
};
pub use metrics::{compute_metrics, Confusion};
pub use parties::{island_key, Federation, FederationConfig, Holding, KeyLedger, Role, COMMON_KEY, USER_KEY};
pub use split::{split_dataset, DataSplit};

use std::path::Path;

use crate::attack::AttackError;
use crate::crypto::CryptoError;
use crate::federated::FederatedError;
use crate::forest::ForestError;
use crate::protocols::ProtocolError;

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("dataset schema: {0}")]
    Schema(String),
    #[error("dataset: {0}")]
    Data(String),
    #[error("configuration: {0}")]
    Config(String),
    #[error("output: {0}")]
    Output(String),
    #[error(transparent)]
    Attack(#[from] AttackError),
    #[error(transparent)]
    Forest(#[from] ForestError),
    #[error(transparent)]
    Federated(#[from] FederatedError),
    #[error(transparent)]
    Protocol(#[from] ProtocolError),
    #[error(transparent)]
    Crypto(#[from] CryptoError),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }
}

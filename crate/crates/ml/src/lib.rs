//! Side-channel classification of cryptographic workloads from per-core
//! cycle counts and process memory figures.

pub mod chi2;
pub mod forest;
pub mod logreg;
pub mod metrics;
pub mod model;
pub mod schema;
pub mod split;
pub mod synth;

use thiserror::Error;

pub use chi2::{chi2_scores, select_top_k, FeatureSelector};
pub use forest::{fit_forest, ForestParams};
pub use logreg::{fit_logreg, LogRegParams};
pub use metrics::{evaluate, MetricsReport};
pub use model::{load_model, predict, save_model, TrainedModel};
pub use schema::{load_csv, write_csv, Dataset, FeatureVector, FEATURE_NAMES, NUM_FEATURES};
pub use split::split;
pub use synth::{synthesize, SynthSpec};

#[derive(Debug, Error)]
pub enum MlError {
    #[error("schema error: {0}")]
    Schema(String),
    #[error("row {row}, column {column}: {message}")]
    Value {
        row: usize,
        column: String,
        message: String,
    },
    #[error("missing field {0}")]
    MissingField(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("negative value in feature {0}")]
    NegativeFeature(String),
    #[error("invalid k {k}: must be between 1 and {max}")]
    InvalidK { k: usize, max: usize },
    #[error("training data has fewer than two classes")]
    SingleClass,
    #[error("unsupported model schema version {0}")]
    UnsupportedModelVersion(u64),
    #[error("malformed model: {0}")]
    MalformedModel(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = MlError> = std::result::Result<T, E>;

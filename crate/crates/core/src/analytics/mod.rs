//! Transfer-matrix statistics, within-family correlations, experiment
//! manifests and compute accounting.

mod correlation;
mod plans;
mod transfer;

use thiserror::Error;

use crate::registry::Family;

pub use correlation::{within_family_correlation, CorrelationMatrix};
pub use plans::{
    compare_schedules, manifests_from_json, manifests_to_json, pairwise_model_count, plan_pairwise,
    plan_sample_efficiency, plan_scaling, tokens_seen, ExperimentManifest, MixtureRef, ScheduleComparison,
    MANIFEST_SCHEMA_VERSION, REPORTED_PAIRWISE_MODEL_COUNT,
};
pub use transfer::{
    analyze_transfer, col_avg_excl_diag, count_negative_transfer, delta_avg, rank_families, AnalyticsReport, Budget,
    NegativeTransferCounts, TransferMatrix, REPORTED_NEGATIVE_TRANSFER,
};

#[derive(Debug, Error)]
pub enum AnalyticsError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("{0}")]
    Invalid(String),
    #[error("column average for {0} is not positive")]
    NonPositiveColumnAverage(Family),
    #[error("model {model:?} has no score for dataset {dataset:?}")]
    MissingScore { model: String, dataset: String },
    #[error("arithmetic overflow")]
    Overflow,
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

//! Rank conversions, correlation coefficients, significance tests,
//! annotator agreement and feature analysis.
//!
//! Every function here is pure. Degenerate inputs (zero variance, a fully
//! tied side) come back as [`StatsError::DegenerateSeries`] instead of NaN.

mod agreement;
mod battery;
mod correlation;
mod features;
mod ranks;
mod ttest;

use thiserror::Error;

pub use agreement::agreement;
pub use battery::{correlation_battery, human_value, CorrelationReport};
pub use correlation::{average_ranks, kendall_tau_b, pearson, spearman, PairedSeries};
pub use features::{feature_helpfulness_correlation, FeatureCorrelations, HelpfulnessJudge};
pub use ranks::{convert_rank, RankConversion};
pub use ttest::{paired_t_test, Degeneracy, TTestResult};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum StatsError {
    #[error("need at least 2 paired observations, got {0}")]
    TooShort(usize),
    #[error("series lengths differ: {0:?}")]
    LengthMismatch(Vec<usize>),
    #[error("series contains a non-finite value")]
    NonFinite,
    #[error("degenerate series: {0}")]
    DegenerateSeries(String),
    #[error("rank {0} outside 1..=6")]
    OutOfRangeRank(i64),
    #[error("{} scored captions have no PhD ranking (first: {})", .0.len(), .0.first().map(String::as_str).unwrap_or(""))]
    UnmatchedCaptions(Vec<String>),
    #[error("caption `{0}` is scored more than once")]
    DuplicateCaption(String),
    #[error("annotators cover different figures: {0}")]
    FigureMismatch(String),
}

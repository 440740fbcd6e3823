use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{convert_rank, kendall_tau_b, pearson, spearman, PairedSeries, RankConversion, StatsError};
use crate::corpus::ValidatedCorpus;
use crate::judge::JudgeScore;

/// Pearson, Kendall tau-b and Spearman for one strategy/backend under one
/// rank conversion, all on the same paired series.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport {
    pub strategy_id: String,
    pub backend_id: String,
    pub conversion: RankConversion,
    pub rho: f64,
    pub tau: f64,
    pub r_s: f64,
    pub n: usize,
}

/// Human value of a caption under a conversion; the mean over annotators when
/// the figure was ranked more than once.
pub fn human_value(corpus: &ValidatedCorpus, caption_id: &str, conversion: RankConversion) -> Option<f64> {
    let ranks = corpus.caption_ranks(caption_id);
    if ranks.is_empty() {
        return None;
    }
    let sum: f64 = ranks
        .iter()
        .map(|&k| convert_rank(i64::from(k), conversion).expect("validated ranks lie in 1..=6"))
        .sum();
    Some(sum / ranks.len() as f64)
}

/// Correlates judge scores with PhD rankings under every rank conversion.
///
/// Scores are pooled over all captions and paired by caption id.
pub fn correlation_battery(scores: &[JudgeScore], corpus: &ValidatedCorpus) -> Result<Vec<CorrelationReport>, StatsError> {
    let mut seen = BTreeSet::new();
    let mut unmatched = Vec::new();
    for s in scores {
        if !seen.insert(s.caption_id.as_str()) {
            return Err(StatsError::DuplicateCaption(s.caption_id.clone()));
        }
        if corpus.caption_ranks(&s.caption_id).is_empty() {
            unmatched.push(s.caption_id.clone());
        }
    }
    if !unmatched.is_empty() {
        return Err(StatsError::UnmatchedCaptions(unmatched));
    }
    let (strategy_id, backend_id) = scores
        .first()
        .map(|s| (s.strategy_id.clone(), s.backend_id.clone()))
        .unwrap_or_default();

    let ids: Vec<String> = scores.iter().map(|s| s.caption_id.clone()).collect();
    let x: Vec<f64> = scores.iter().map(|s| s.score).collect();
    RankConversion::ALL
        .into_iter()
        .map(|conversion| {
            let y = ids
                .iter()
                .map(|id| human_value(corpus, id, conversion).expect("checked above"))
                .collect();
            let series = PairedSeries::new(ids.clone(), x.clone(), y)?;
            Ok(CorrelationReport {
                strategy_id: strategy_id.clone(),
                backend_id: backend_id.clone(),
                conversion,
                rho: pearson(&series)?,
                tau: kendall_tau_b(&series)?,
                r_s: spearman(&series)?,
                n: series.len(),
            })
        })
        .collect()
}

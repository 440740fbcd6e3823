use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{pearson, PairedSeries, StatsError};
use crate::corpus::{Feature, Helpfulness, ValidatedCorpus};

/// Whose helpfulness judgment the features are correlated against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HelpfulnessJudge {
    /// Reversed PhD rank (6 = best).
    Phd,
    /// 1 for an undergraduate "Yes", 0 otherwise.
    Undergrad,
}

/// Per-feature correlation; a degenerate feature holds its own error.
pub type FeatureCorrelations = BTreeMap<Feature, Result<f64, StatsError>>;

/// Pearson correlation of each 0/1 feature flag with helpfulness, over valid
/// captions. Captions with several ratings use the mean of each flag.
/// A degenerate feature yields an error in its own slot only.
pub fn feature_helpfulness_correlation(
    corpus: &ValidatedCorpus,
    judge: HelpfulnessJudge,
) -> FeatureCorrelations {
    let mut ids = Vec::new();
    let mut helpfulness = Vec::new();
    let mut flags: BTreeMap<Feature, Vec<f64>> = BTreeMap::new();

    for id in corpus.valid_caption_ids() {
        let ratings: Vec<_> = corpus.ratings_for(id).collect();
        if ratings.is_empty() {
            continue;
        }
        let h = match judge {
            HelpfulnessJudge::Phd => match corpus.mean_rank(id) {
                Some(rank) => 7.0 - rank,
                None => continue,
            },
            HelpfulnessJudge::Undergrad => {
                ratings.iter().filter(|r| r.helpfulness == Helpfulness::Yes).count() as f64 / ratings.len() as f64
            }
        };
        ids.push(id.clone());
        helpfulness.push(h);
        for f in Feature::ALL {
            let share = ratings.iter().filter(|r| r.features.get(f)).count() as f64 / ratings.len() as f64;
            flags.entry(f).or_default().push(share);
        }
    }

    Feature::ALL
        .into_iter()
        .map(|f| {
            let x = flags.remove(&f).unwrap_or_default();
            let rho = PairedSeries::new(ids.clone(), x, helpfulness.clone()).and_then(|s| pearson(&s));
            (f, rho)
        })
        .collect()
}

//! Few-shot exemplar selection.

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::StrategyError;
use crate::corpus::{Domain, ValidatedCorpus};
use crate::seeding::keyed_rng;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exemplar {
    pub caption_id: String,
    pub text: String,
}

/// Three top-ranked and three bottom-ranked captions shown to the judge.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExemplarSet {
    pub best: [Exemplar; 3],
    pub worst: [Exemplar; 3],
}

/// Draws three rank-1 and three rank-6 valid captions of `domain` without
/// replacement, skipping every caption of `exclude_figure`.
///
/// A caption belongs to the rank-1 pool when any annotator ranked it first,
/// and likewise for rank 6. The draw depends only on the corpus, the domain,
/// the excluded figure and the seed.
pub fn select_exemplars(
    corpus: &ValidatedCorpus,
    domain: Domain,
    exclude_figure: &str,
    seed: u64,
) -> Result<ExemplarSet, StrategyError> {
    let mut best = Vec::new();
    let mut worst = Vec::new();
    for (figure, caption) in corpus.valid_captions() {
        if figure.domain != domain || figure.figure_id == exclude_figure {
            continue;
        }
        let ranks = corpus.caption_ranks(&caption.caption_id);
        let exemplar = || Exemplar {
            caption_id: caption.caption_id.clone(),
            text: caption.text.clone(),
        };
        if ranks.contains(&1) {
            best.push(exemplar());
        }
        if ranks.contains(&6) {
            worst.push(exemplar());
        }
    }
    if best.len() < 3 || worst.len() < 3 {
        return Err(StrategyError::InsufficientExemplars {
            domain,
            best: best.len(),
            worst: worst.len(),
        });
    }
    let mut rng = keyed_rng(seed, &format!("{}/{exclude_figure}", domain.as_str()));
    let take3 = |pool: &mut Vec<Exemplar>, rng: &mut _| -> [Exemplar; 3] {
        let (chosen, _) = pool.partial_shuffle(rng, 3);
        [chosen[0].clone(), chosen[1].clone(), chosen[2].clone()]
    };
    Ok(ExemplarSet {
        best: take3(&mut best, &mut rng),
        worst: take3(&mut worst, &mut rng),
    })
}

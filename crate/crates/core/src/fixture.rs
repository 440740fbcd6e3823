//! Synthetic corpora for offline runs and tests.
//!
//! [`paper_mirroring`] builds 600 figures (200 per domain) with six captions
//! each, one PhD ranking per figure, one undergraduate rating per caption, and
//! error flags laid out so that the census comes to 102 image-extraction, 242
//! text-extraction, 101 not-a-line-chart and 23 compound-figure errors over
//! 441 distinct captions, leaving 3,159 valid captions.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{
    CaptionCandidate, CaptionSource, Domain, ErrorFlags, FeatureFlags, FigureRecord, Helpfulness, PhdRanking,
    UndergradRating, ValidatedCorpus,
};

/// How many captions carry each error kind, and how many carry at least one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorPlan {
    pub image_extraction: usize,
    pub text_extraction: usize,
    pub not_line_chart: usize,
    pub compound_figure: usize,
    pub union: usize,
}

impl ErrorPlan {
    pub const NONE: ErrorPlan = ErrorPlan {
        image_extraction: 0,
        text_extraction: 0,
        not_line_chart: 0,
        compound_figure: 0,
        union: 0,
    };

    pub const PAPER: ErrorPlan = ErrorPlan {
        image_extraction: 102,
        text_extraction: 242,
        not_line_chart: 101,
        compound_figure: 23,
        union: 441,
    };
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FixtureConfig {
    pub figures_per_domain: usize,
    pub seed: u64,
    pub errors: ErrorPlan,
    /// Probability that a figure has no mention paragraphs.
    pub empty_mention_rate: f64,
    /// Figures (taken from the start of each domain in turn) that receive a
    /// second, perturbed PhD ranking for agreement studies.
    pub agreement_figures: usize,
}

impl Default for FixtureConfig {
    fn default() -> Self {
        Self {
            figures_per_domain: 200,
            seed: 2023,
            errors: ErrorPlan::PAPER,
            empty_mention_rate: 0.19,
            agreement_figures: 0,
        }
    }
}

pub fn paper_mirroring(seed: u64) -> ValidatedCorpus {
    generate(&FixtureConfig {
        seed,
        ..FixtureConfig::default()
    })
}

const METRICS: &[&str] = &[
    "accuracy", "F1 score", "BLEU", "training loss", "perplexity", "task completion time",
    "recall@10", "mean reciprocal rank", "latency", "user satisfaction",
];
const AXES: &[&str] = &[
    "training epochs", "model size", "number of examples", "noise level", "sequence length",
    "number of participants", "learning rate", "iterations",
];

/// Builds a corpus from `config`. Panics if the error plan cannot fit.
pub fn generate(config: &FixtureConfig) -> ValidatedCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut figures = Vec::new();
    let mut rankings = Vec::new();

    for (d, domain) in Domain::ALL.into_iter().enumerate() {
        for i in 0..config.figures_per_domain {
            let figure_id = format!("{}-{:04}", domain.as_str().to_lowercase(), i + 1);
            let label = format!("Figure {}", rng.random_range(1..=9));
            let metric = METRICS[rng.random_range(0..METRICS.len())];
            let axis = AXES[rng.random_range(0..AXES.len())];

            let mentions = if rng.random_bool(config.empty_mention_rate) {
                Vec::new()
            } else {
                let n = rng.random_range(1..=3);
                (0..n)
                    .map(|p| match p {
                        0 => format!("As shown in {label}, {metric} improves steadily as {axis} increases ({figure_id})."),
                        1 => format!("{label} also shows that our method outperforms the baselines in {metric}."),
                        _ => format!("We discuss the plateau visible in {label} in the next section."),
                    })
                    .collect()
            };

            let captions = CaptionSource::ALL
                .iter()
                .map(|&source| CaptionCandidate {
                    caption_id: format!("{figure_id}-{}", source.key()),
                    figure_id: figure_id.clone(),
                    source,
                    text: caption_text(source, &label, metric, axis, &figure_id),
                })
                .collect();

            let mut perm: Vec<u8> = (1..=6).collect();
            perm.shuffle(&mut rng);
            let annotator = format!("phd-{:02}", d * 5 + i / 40 + 1);
            rankings.push(PhdRanking {
                figure_id: figure_id.clone(),
                annotator_id: annotator,
                ranking: CaptionSource::ALL.into_iter().zip(perm.iter().copied()).collect(),
            });
            if i < config.agreement_figures.div_ceil(3) && d * config.agreement_figures.div_ceil(3) + i < config.agreement_figures {
                // exchange ranks k and k + 1: exactly one discordant pair
                let k = rng.random_range(1..=5u8);
                let other: Vec<u8> = perm
                    .iter()
                    .map(|&r| match r {
                        r if r == k => k + 1,
                        r if r == k + 1 => k,
                        r => r,
                    })
                    .collect();
                rankings.push(PhdRanking {
                    figure_id: figure_id.clone(),
                    annotator_id: "phd-agree".into(),
                    ranking: CaptionSource::ALL.into_iter().zip(other).collect(),
                });
            }

            figures.push(FigureRecord {
                figure_id,
                domain,
                figure_index_label: label,
                mentions,
                captions,
            });
        }
    }

    let rank_of: BTreeMap<String, u8> = rankings
        .iter()
        .filter(|r| r.annotator_id != "phd-agree")
        .flat_map(|r| {
            r.ranking
                .iter()
                .map(move |(s, &k)| (format!("{}-{}", r.figure_id, s.key()), k))
        })
        .collect();

    let mut caption_ids: Vec<String> = rank_of.keys().cloned().collect();
    let errors = assign_errors(&mut caption_ids, config.errors, &mut rng);

    let mut ratings = Vec::new();
    for (n, (caption_id, &rank)) in rank_of.iter().enumerate() {
        // Better-ranked captions are more often helpful and richer in features.
        let quality = f64::from(7 - rank) / 6.0;
        let helpfulness = match rng.random::<f64>() {
            x if x < 0.15 => Helpfulness::Unsure,
            x if x < 0.15 + 0.85 * quality => Helpfulness::Yes,
            _ => Helpfulness::No,
        };
        let features = FeatureFlags {
            ocr: rng.random_bool(0.2 + 0.5 * quality),
            visual: rng.random_bool(0.15 + 0.2 * quality),
            stats: rng.random_bool(0.1 + 0.2 * quality),
            relation: rng.random_bool(0.2 + 0.3 * quality),
            takeaway: rng.random_bool(0.1 + 0.6 * quality),
        };
        ratings.push(UndergradRating {
            caption_id: caption_id.clone(),
            annotator_id: format!("ug-{:02}", n % 20 + 1),
            helpfulness,
            features,
            errors: errors.get(caption_id).copied().unwrap_or_default(),
        });
    }

    ValidatedCorpus::new(figures, rankings, ratings).expect("generated fixture is valid")
}

fn caption_text(source: CaptionSource, label: &str, metric: &str, axis: &str, figure_id: &str) -> String {
    match source {
        CaptionSource::Author => format!("{label}: {metric} of all methods as {axis} grows; ours stays ahead. [{figure_id}]"),
        CaptionSource::PegasusP => format!("{metric} improves with {axis} and our method beats the baselines [{figure_id}]"),
        CaptionSource::PegasusPO => format!("{metric} versus {axis} for the proposed model and baselines [{figure_id}]"),
        CaptionSource::PegasusO => format!("{metric} {axis} ours baseline [{figure_id}]"),
        CaptionSource::TrOCR => format!("the results of the {metric} [{figure_id}]"),
        CaptionSource::Template => format!("{metric} vs. {axis} [{figure_id}]"),
    }
}

// Lays the error kinds out as consecutive runs over a shuffled prefix of
// `union` captions, wrapping around so that overlaps total exactly
// sum(kinds) - union. Each run is at most `union` long, so no caption gets the
// same kind twice.
fn assign_errors(ids: &mut [String], plan: ErrorPlan, rng: &mut ChaCha8Rng) -> BTreeMap<String, ErrorFlags> {
    let kinds = [
        plan.text_extraction,
        plan.image_extraction,
        plan.not_line_chart,
        plan.compound_figure,
    ];
    let total: usize = kinds.iter().sum();
    assert!(plan.union <= ids.len(), "error union exceeds caption count");
    assert!(kinds.iter().all(|&k| k <= plan.union), "an error kind exceeds the union");
    assert!(total >= plan.union, "error kinds cannot cover the union");

    ids.sort();
    ids.shuffle(rng);
    let pool = &ids[..plan.union];
    let mut out: BTreeMap<String, ErrorFlags> = BTreeMap::new();
    let mut pos = 0usize;
    for (k, &count) in kinds.iter().enumerate() {
        for _ in 0..count {
            let flags = out.entry(pool[pos % plan.union].clone()).or_default();
            match k {
                0 => flags.text_extraction = true,
                1 => flags.image_extraction = true,
                2 => flags.not_line_chart = true,
                _ => flags.compound_figure = true,
            }
            pos += 1;
        }
    }
    out
}

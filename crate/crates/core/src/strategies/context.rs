//! Figure-mention context under the ablation modes.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::FigureRecord;
use crate::seeding::keyed_rng;

/// Which figure-mentioning paragraphs go into the prompt.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ContextMode {
    /// Every paragraph, in document order.
    All,
    First,
    /// One paragraph drawn per figure from `(seed, figure_id)`.
    Random { seed: u64 },
    /// No paragraphs.
    #[serde(rename = "caption")]
    CaptionOnly,
}

impl ContextMode {
    /// Stable id used in flags, file names and reports.
    pub fn id(self) -> &'static str {
        match self {
            ContextMode::All => "all",
            ContextMode::First => "first",
            ContextMode::Random { .. } => "random",
            ContextMode::CaptionOnly => "caption",
        }
    }

    /// Parses a flag value; `random` takes the given seed.
    pub fn from_id(id: &str, seed: u64) -> Option<Self> {
        match id {
            "all" => Some(ContextMode::All),
            "first" => Some(ContextMode::First),
            "random" => Some(ContextMode::Random { seed }),
            "caption" | "caption-only" => Some(ContextMode::CaptionOnly),
            _ => None,
        }
    }

    /// The four ablation modes, in report order.
    pub fn ablation_modes(seed: u64) -> [ContextMode; 4] {
        [
            ContextMode::All,
            ContextMode::First,
            ContextMode::Random { seed },
            ContextMode::CaptionOnly,
        ]
    }
}

/// Assembled context plus whether the figure had no paragraphs to offer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AssembledContext {
    pub text: String,
    /// Set when the mode asked for paragraphs but the figure has none.
    pub no_mentions: bool,
}

pub fn assemble_context(figure: &FigureRecord, mode: ContextMode) -> AssembledContext {
    let mentions = &figure.mentions;
    if mode == ContextMode::CaptionOnly {
        return AssembledContext {
            text: String::new(),
            no_mentions: false,
        };
    }
    if mentions.is_empty() {
        log::debug!("figure {} has no mentioning paragraphs; using empty context", figure.figure_id);
        return AssembledContext {
            text: String::new(),
            no_mentions: true,
        };
    }
    let text = match mode {
        ContextMode::All => mentions.join("\n\n"),
        ContextMode::First => mentions[0].clone(),
        ContextMode::Random { seed } => {
            let i = keyed_rng(seed, &figure.figure_id).random_range(0..mentions.len());
            mentions[i].clone()
        }
        ContextMode::CaptionOnly => unreachable!(),
    };
    AssembledContext {
        text,
        no_mentions: false,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Domain;

    fn figure(id: &str, mentions: &[&str]) -> FigureRecord {
        FigureRecord {
            figure_id: id.into(),
            domain: Domain::CL,
            figure_index_label: "Figure 1".into(),
            mentions: mentions.iter().map(|s| s.to_string()).collect(),
            captions: vec![],
        }
    }

    #[test]
    fn all_and_first() {
        let f = figure("f", &["P1", "P2"]);
        assert_eq!(assemble_context(&f, ContextMode::All).text, "P1\n\nP2");
        assert_eq!(assemble_context(&f, ContextMode::First).text, "P1");
        assert_eq!(assemble_context(&f, ContextMode::CaptionOnly).text, "");
    }

    #[test]
    fn random_is_repeatable_and_drawn_from_mentions() {
        let mentions: Vec<String> = (0..8).map(|i| format!("P{i}")).collect();
        let refs: Vec<&str> = mentions.iter().map(String::as_str).collect();
        let f = figure("fig-7", &refs);
        let a = assemble_context(&f, ContextMode::Random { seed: 11 });
        let b = assemble_context(&f, ContextMode::Random { seed: 11 });
        assert_eq!(a, b);
        assert!(mentions.contains(&a.text));
        let picks: std::collections::BTreeSet<String> = (0..40)
            .map(|s| assemble_context(&f, ContextMode::Random { seed: s }).text)
            .collect();
        assert!(picks.len() > 1);
    }

    #[test]
    fn missing_mentions_are_flagged() {
        let f = figure("f", &[]);
        for mode in [ContextMode::All, ContextMode::First, ContextMode::Random { seed: 1 }] {
            let c = assemble_context(&f, mode);
            assert_eq!(c.text, "");
            assert!(c.no_mentions);
        }
        assert!(!assemble_context(&f, ContextMode::CaptionOnly).no_mentions);
    }

    #[test]
    fn ids_round_trip() {
        for mode in ContextMode::ablation_modes(4) {
            assert_eq!(ContextMode::from_id(mode.id(), 4), Some(mode));
        }
        assert_eq!(ContextMode::from_id("none", 0), None);
    }
}

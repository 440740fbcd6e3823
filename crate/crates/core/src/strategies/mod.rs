//! Evaluation strategies: prompt construction, context assembly and the
//! orchestration of judge calls over a corpus.

mod context;
mod cot;
mod exemplars;
mod run;
mod templates;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use context::{assemble_context, AssembledContext, ContextMode};
pub use cot::{
    answer_questions, cot_band, cot_score, generate_questions, parse_questions, run_cot, QuestionSet, QuestionStyle,
};
pub use exemplars::{select_exemplars, Exemplar, ExemplarSet};
pub use run::{par_map, run_strategy, CaptionFailure, RunManifest, RunOptions, StrategyRun};
pub use templates::{
    build_answer_prompt, build_few_shot, build_question_prompt, build_zero_shot, fill, ANSWER_TEMPLATE,
    FEW_SHOT_TEMPLATE, OPEN_QUESTIONS_TEMPLATE, PLACEHOLDERS, YESNO_QUESTIONS_TEMPLATE, ZERO_SHOT_TEMPLATE,
};

use crate::corpus::Domain;
use crate::judge::JudgeError;

#[derive(Debug, Error)]
pub enum StrategyError {
    #[error("caption text is empty")]
    EmptyCaption,
    #[error("domain {domain:?} has {best} rank-1 and {worst} rank-6 candidates outside the evaluated figure; need 3 of each")]
    InsufficientExemplars { domain: Domain, best: usize, worst: usize },
    #[error("no questions could be parsed from the generation reply for `{0}`")]
    NoQuestionsParsed(String),
    #[error("invalid strategy configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Judge(#[from] JudgeError),
}

impl StrategyError {
    /// Short machine-readable kind, used in run manifests.
    pub fn kind(&self) -> &'static str {
        match self {
            StrategyError::EmptyCaption => "empty_caption",
            StrategyError::InsufficientExemplars { .. } => "insufficient_exemplars",
            StrategyError::NoQuestionsParsed(_) => "no_questions_parsed",
            StrategyError::Config(_) => "config",
            StrategyError::Judge(e) if e.is_transport() => "transport",
            StrategyError::Judge(_) => "backend",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum StrategyKind {
    ZeroShot,
    FewShot,
    /// Chain of thought with open-ended questions.
    CotQa,
    /// Chain of thought with yes/no questions.
    CotQaYn,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 4] = [
        StrategyKind::ZeroShot,
        StrategyKind::FewShot,
        StrategyKind::CotQa,
        StrategyKind::CotQaYn,
    ];

    pub fn id(self) -> &'static str {
        match self {
            StrategyKind::ZeroShot => "zs",
            StrategyKind::FewShot => "fs",
            StrategyKind::CotQa => "cot-qa",
            StrategyKind::CotQaYn => "cot-yn",
        }
    }

    pub fn question_style(self) -> Option<QuestionStyle> {
        match self {
            StrategyKind::CotQa => Some(QuestionStyle::Open),
            StrategyKind::CotQaYn => Some(QuestionStyle::YesNo),
            _ => None,
        }
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for StrategyKind {
    type Err = StrategyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.id() == s)
            .ok_or_else(|| StrategyError::Config(format!("unknown strategy `{s}` (expected zs, fs, cot-qa or cot-yn)")))
    }
}

impl Serialize for StrategyKind {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.id())
    }
}

impl<'de> Deserialize<'de> for StrategyKind {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

fn default_max_questions() -> usize {
    5
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategySpec {
    pub kind: StrategyKind,
    pub context: ContextMode,
    /// Few-shot only.
    #[serde(default)]
    pub exemplar_seed: u64,
    /// Chain of thought only.
    #[serde(default = "default_max_questions")]
    pub max_questions: usize,
}

impl StrategySpec {
    pub fn new(kind: StrategyKind, context: ContextMode) -> Self {
        Self {
            kind,
            context,
            exemplar_seed: 0,
            max_questions: 5,
        }
    }

    pub fn with_exemplar_seed(mut self, seed: u64) -> Self {
        self.exemplar_seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), StrategyError> {
        if self.max_questions == 0 {
            return Err(StrategyError::Config("max_questions must be at least 1".into()));
        }
        Ok(())
    }
}

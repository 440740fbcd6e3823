//! Deterministic offline backends.
//!
//! Offline backends identify the caption under evaluation through the request
//! tag (`<caption_id>/<strategy>/<phase>`), never through the prompt text, so
//! they work unchanged for every strategy and context mode.

use std::collections::{BTreeMap, HashMap};
use std::fs;
use std::path::Path;
use std::sync::LazyLock;

use rand::Rng;
use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{JudgeBackend, JudgeError, JudgeRequest, Phase, RequestTag};
use crate::corpus::ValidatedCorpus;
use crate::seeding::keyed_rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum OracleMode {
    /// Emits the reversed PhD rank (rank k -> 7 - k).
    Oracle,
    /// Emits 7 minus the oracle value.
    AntiOracle,
    /// Oracle value, replaced by a uniform draw from 1..=6 with probability `flip_prob`.
    Noisy { seed: u64, flip_prob: f64 },
}

/// Scores captions from the gold PhD rankings.
///
/// For rating prompts the reply is `Rating: v`. For chain-of-thought prompts
/// it writes five questions, then answers `v - 1` of them with "Yes", so the
/// 1-6 band of the resulting fraction equals `v`.
pub struct OracleBackend {
    id: String,
    mode: OracleMode,
    reversed_rank: HashMap<String, u8>,
}

pub fn make_oracle_backend(corpus: &ValidatedCorpus) -> Result<OracleBackend, JudgeError> {
    OracleBackend::new(corpus, OracleMode::Oracle)
}

pub fn make_anti_oracle_backend(corpus: &ValidatedCorpus) -> Result<OracleBackend, JudgeError> {
    OracleBackend::new(corpus, OracleMode::AntiOracle)
}

pub fn make_noisy_backend(corpus: &ValidatedCorpus, seed: u64, flip_prob: f64) -> Result<OracleBackend, JudgeError> {
    if !(0.0..=1.0).contains(&flip_prob) {
        return Err(JudgeError::InvalidRequest(format!("flip probability {flip_prob} outside [0, 1]")));
    }
    OracleBackend::new(corpus, OracleMode::Noisy { seed, flip_prob })
}

impl OracleBackend {
    /// Fails with `MissingRanking` if any valid caption is unranked. When a
    /// figure has several rankings the mean rank is rounded half-up.
    pub fn new(corpus: &ValidatedCorpus, mode: OracleMode) -> Result<Self, JudgeError> {
        let mut reversed_rank = HashMap::new();
        for id in corpus.valid_caption_ids() {
            let mean = corpus
                .mean_rank(id)
                .ok_or_else(|| JudgeError::MissingRanking(id.clone()))?;
            let rank = (mean + 0.5).floor().clamp(1.0, 6.0) as u8;
            reversed_rank.insert(id.clone(), 7 - rank);
        }
        let id = match mode {
            OracleMode::Oracle => "oracle".to_string(),
            OracleMode::AntiOracle => "anti-oracle".to_string(),
            OracleMode::Noisy { seed, flip_prob } => format!("noisy-s{seed}-p{flip_prob}"),
        };
        Ok(Self {
            id,
            mode,
            reversed_rank,
        })
    }

    /// The value (1-6) this backend reports for a caption.
    pub fn value_for(&self, caption_id: &str) -> Result<u8, JudgeError> {
        let truth = *self
            .reversed_rank
            .get(caption_id)
            .ok_or_else(|| JudgeError::MissingRanking(caption_id.to_string()))?;
        Ok(match self.mode {
            OracleMode::Oracle => truth,
            OracleMode::AntiOracle => 7 - truth,
            OracleMode::Noisy { seed, flip_prob } => {
                let mut rng = keyed_rng(seed, caption_id);
                if rng.random_bool(flip_prob) {
                    rng.random_range(1..=6)
                } else {
                    truth
                }
            }
        })
    }
}

static NUMBERED_LINE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?m)^\s*\d+\.\s").unwrap());

const ORACLE_QUESTIONS: [&str; 5] = [
    "What quantity is plotted on each axis?",
    "Which method performs best?",
    "How does performance change along the x-axis?",
    "What is the main takeaway of the figure?",
    "How large is the gap between the methods?",
];

impl JudgeBackend for OracleBackend {
    fn id(&self) -> &str {
        &self.id
    }

    fn model(&self) -> &str {
        &self.id
    }

    fn complete(&self, request: &JudgeRequest) -> Result<String, JudgeError> {
        let tag: RequestTag = request.tag.parse()?;
        match tag.phase {
            Phase::Rate => Ok(format!("Rating: {}", self.value_for(&tag.subject)?)),
            Phase::Questions => Ok(ORACLE_QUESTIONS
                .iter()
                .enumerate()
                .map(|(i, q)| format!("{}. {q}", i + 1))
                .collect::<Vec<_>>()
                .join("\n")),
            Phase::Answers => {
                let value = self.value_for(&tag.subject)?;
                let prompt = request.prompt();
                let questions = prompt
                    .split_once("Questions:")
                    .map_or(0, |(_, q)| NUMBERED_LINE.find_iter(q).count())
                    .max(1);
                // yes/questions = (value - 1) / 5, exact when there are five questions
                let yes = ((f64::from(value) - 1.0) / 5.0 * questions as f64).round() as usize;
                Ok((0..questions)
                    .map(|i| {
                        if i < yes {
                            format!("{}. Yes - the caption covers this.", i + 1)
                        } else {
                            format!("{}. No - the caption does not address this.", i + 1)
                        }
                    })
                    .collect::<Vec<_>>()
                    .join("\n"))
            }
        }
    }
}

/// Picks a reply depending on whether the rating prompt carried any
/// figure-mentioning paragraphs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContextRule {
    /// Replies used when paragraphs are present; one is chosen per request by
    /// a seeded draw keyed on the tag.
    pub with_context: Vec<String>,
    pub without_context: String,
    #[serde(default)]
    pub seed: u64,
}

// Rating prompts render an empty paragraph slot as exactly this text.
const EMPTY_PARAGRAPHS: &str = "Paragraphs: . Caption: ";

impl ContextRule {
    fn reply(&self, request: &JudgeRequest) -> String {
        if request.prompt().contains(EMPTY_PARAGRAPHS) || self.with_context.is_empty() {
            self.without_context.clone()
        } else {
            let i = keyed_rng(self.seed, &request.tag).random_range(0..self.with_context.len());
            self.with_context[i].clone()
        }
    }
}

/// On-disk form of a scripted backend.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ScriptFile {
    #[serde(default = "default_script_id")]
    pub id: String,
    /// Exact tag -> reply.
    #[serde(default)]
    pub responses: BTreeMap<String, String>,
    #[serde(default)]
    pub context_rule: Option<ContextRule>,
    /// Reply when nothing else matches; an empty reply otherwise.
    #[serde(default)]
    pub default: Option<String>,
}

fn default_script_id() -> String {
    "scripted".into()
}

/// Replies from a fixed table keyed by request tag.
pub struct ScriptedBackend {
    script: ScriptFile,
}

impl ScriptedBackend {
    pub fn new(script: ScriptFile) -> Self {
        Self { script }
    }

    pub fn from_table<I, K, V>(id: &str, table: I) -> Self
    where
        I: IntoIterator<Item = (K, V)>,
        K: Into<String>,
        V: Into<String>,
    {
        Self::new(ScriptFile {
            id: id.to_string(),
            responses: table.into_iter().map(|(k, v)| (k.into(), v.into())).collect(),
            ..ScriptFile::default()
        })
    }

    /// Rates 5 or 6 (seeded per request) when paragraphs are present and 1
    /// when they are not.
    pub fn context_sensitive(seed: u64) -> Self {
        Self::new(ScriptFile {
            id: format!("context-probe-s{seed}"),
            context_rule: Some(ContextRule {
                with_context: vec!["Rating: 5".into(), "Rating: 6".into()],
                without_context: "Rating: 1".into(),
                seed,
            }),
            ..ScriptFile::default()
        })
    }

    pub fn load(path: &Path) -> Result<Self, JudgeError> {
        let text = fs::read_to_string(path)
            .map_err(|e| JudgeError::InvalidRequest(format!("cannot read script {}: {e}", path.display())))?;
        let script = serde_json::from_str(&text)
            .map_err(|e| JudgeError::InvalidRequest(format!("bad script {}: {e}", path.display())))?;
        Ok(Self::new(script))
    }
}

impl JudgeBackend for ScriptedBackend {
    fn id(&self) -> &str {
        &self.script.id
    }

    fn model(&self) -> &str {
        &self.script.id
    }

    fn complete(&self, request: &JudgeRequest) -> Result<String, JudgeError> {
        if let Some(reply) = self.script.responses.get(&request.tag) {
            return Ok(reply.clone());
        }
        if let Some(rule) = &self.script.context_rule {
            return Ok(rule.reply(request));
        }
        Ok(self.script.default.clone().unwrap_or_default())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{CaptionCandidate, CaptionSource, Domain, FigureRecord, PhdRanking};

    fn corpus() -> ValidatedCorpus {
        let fig = FigureRecord {
            figure_id: "f1".into(),
            domain: Domain::CV,
            figure_index_label: "Figure 2".into(),
            mentions: vec!["As shown in Figure 2".into()],
            captions: CaptionSource::ALL
                .iter()
                .map(|&s| CaptionCandidate {
                    caption_id: format!("f1-{s}"),
                    figure_id: "f1".into(),
                    source: s,
                    text: format!("caption {s}"),
                })
                .collect(),
        };
        let ranking = PhdRanking {
            figure_id: "f1".into(),
            annotator_id: "p".into(),
            ranking: CaptionSource::ALL.into_iter().zip(1..=6).collect(),
        };
        ValidatedCorpus::new(vec![fig], vec![ranking], vec![]).unwrap()
    }

    fn rate(backend: &dyn JudgeBackend, caption: &str) -> String {
        backend
            .complete(&JudgeRequest::user("rate").with_tag(format!("{caption}/zs/rate")))
            .unwrap()
    }

    #[test]
    fn oracle_reverses_rank() {
        let c = corpus();
        let oracle = make_oracle_backend(&c).unwrap();
        assert_eq!(rate(&oracle, "f1-author"), "Rating: 6"); // rank 1
        assert_eq!(rate(&oracle, "f1-template"), "Rating: 1"); // rank 6
    }

    #[test]
    fn anti_oracle_mirrors_oracle() {
        let c = corpus();
        let anti = make_anti_oracle_backend(&c).unwrap();
        assert_eq!(rate(&anti, "f1-template"), "Rating: 6");
        assert_eq!(rate(&anti, "f1-author"), "Rating: 1");
    }

    #[test]
    fn noisy_is_seed_deterministic() {
        let c = corpus();
        let a = make_noisy_backend(&c, 9, 0.5).unwrap();
        let b = make_noisy_backend(&c, 9, 0.5).unwrap();
        for s in CaptionSource::ALL {
            let id = format!("f1-{s}");
            assert_eq!(rate(&a, &id), rate(&b, &id));
        }
        let exact = make_noisy_backend(&c, 9, 0.0).unwrap();
        assert_eq!(rate(&exact, "f1-author"), "Rating: 6");
        assert!(make_noisy_backend(&c, 9, 1.5).is_err());
    }

    #[test]
    fn unknown_caption_is_missing_ranking() {
        let oracle = make_oracle_backend(&corpus()).unwrap();
        let err = oracle
            .complete(&JudgeRequest::user("x").with_tag("nope/zs/rate"))
            .unwrap_err();
        assert!(matches!(err, JudgeError::MissingRanking(_)));
    }

    #[test]
    fn unranked_corpus_cannot_build_oracle() {
        let c = corpus();
        let bare = ValidatedCorpus::new(c.figures().to_vec(), vec![], vec![]).unwrap();
        assert!(matches!(make_oracle_backend(&bare), Err(JudgeError::MissingRanking(_))));
    }

    #[test]
    fn oracle_answers_match_value() {
        let oracle = make_oracle_backend(&corpus()).unwrap();
        // pegasus_p has rank 2, so value 5 and four "Yes" answers.
        let prompt = "...\n\nQuestions:\n1. a?\n2. b?\n3. c?\n4. d?\n5. e?";
        let out = oracle
            .complete(&JudgeRequest::user(prompt).with_tag("f1-pegasus_p/cot-yn/answers"))
            .unwrap();
        assert_eq!(out.matches("Yes").count(), 4);
        assert_eq!(out.matches("No").count(), 1);
    }

    #[test]
    fn scripted_echoes_table() {
        let b = ScriptedBackend::from_table("s", [("c1/zs/rate", "Rating: 4")]);
        let out = b
            .complete(&JudgeRequest::user("anything").with_tag("c1/zs/rate"))
            .unwrap();
        assert_eq!(out, "Rating: 4");
        let miss = b.complete(&JudgeRequest::user("x").with_tag("c2/zs/rate")).unwrap();
        assert_eq!(miss, "");
    }

    #[test]
    fn context_rule_detects_empty_paragraphs() {
        let b = ScriptedBackend::context_sensitive(3);
        let empty = JudgeRequest::user("... Paragraphs: . Caption: loss").with_tag("c/zs/rate");
        let full = JudgeRequest::user("... Paragraphs: As shown. Caption: loss").with_tag("c/zs/rate");
        assert_eq!(b.complete(&empty).unwrap(), "Rating: 1");
        assert!(["Rating: 5", "Rating: 6"].contains(&b.complete(&full).unwrap().as_str()));
    }
}

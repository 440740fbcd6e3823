//! Score files: JSONL with one header line followed by one score per line.
//!
//! The header holds only fields that are a function of the configuration and
//! the corpus, so two runs with the same inputs write identical bytes.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::judge::{DecodingParams, JudgeScore};
use crate::strategies::{CaptionFailure, StrategyRun, StrategySpec};

#[derive(Debug, Error)]
pub enum ScoreFileError {
    #[error("cannot access {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {reason}")]
    Malformed { path: PathBuf, line: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreFileHeader {
    pub strategy: StrategySpec,
    pub strategy_id: String,
    pub backend_id: String,
    pub model: String,
    pub params: DecodingParams,
    pub corpus_hash: String,
    pub valid_captions: usize,
    pub scored: usize,
    pub no_mentions: Vec<String>,
    pub failures: Vec<CaptionFailure>,
}

impl From<&StrategyRun> for ScoreFileHeader {
    fn from(run: &StrategyRun) -> Self {
        let m = &run.manifest;
        Self {
            strategy: m.strategy,
            strategy_id: m.strategy_id.clone(),
            backend_id: m.backend_id.clone(),
            model: m.model.clone(),
            params: m.params.clone(),
            corpus_hash: m.corpus_hash.clone(),
            valid_captions: m.valid_captions,
            scored: m.scored,
            no_mentions: m.no_mentions.clone(),
            failures: m.failures.clone(),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum Line {
    Manifest(ScoreFileHeader),
    Score(JudgeScore),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScoreFile {
    pub header: ScoreFileHeader,
    pub scores: Vec<JudgeScore>,
}

impl ScoreFile {
    pub fn from_run(run: &StrategyRun) -> Self {
        Self {
            header: ScoreFileHeader::from(run),
            scores: run.scores.clone(),
        }
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = serde_json::to_string(&Line::Manifest(self.header.clone())).expect("header serializes");
        out.push('\n');
        for s in &self.scores {
            out.push_str(&serde_json::to_string(&Line::Score(s.clone())).expect("score serializes"));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), ScoreFileError> {
        fs::write(path, self.to_jsonl()).map_err(|source| ScoreFileError::Io {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self, ScoreFileError> {
        let malformed = |line: usize, reason: String| ScoreFileError::Malformed {
            path: path.to_path_buf(),
            line,
            reason,
        };
        let mut header = None;
        let mut scores = Vec::new();
        for (i, raw) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            match serde_json::from_str::<Line>(raw).map_err(|e| malformed(i + 1, e.to_string()))? {
                Line::Manifest(h) if header.is_none() && scores.is_empty() => header = Some(h),
                Line::Manifest(_) => return Err(malformed(i + 1, "manifest must be the first and only header".into())),
                Line::Score(s) => {
                    if header.is_none() {
                        return Err(malformed(i + 1, "score before manifest header".into()));
                    }
                    scores.push(s)
                }
            }
        }
        let header = header.ok_or_else(|| malformed(0, "empty score file".into()))?;
        Ok(Self { header, scores })
    }

    pub fn read(path: &Path) -> Result<Self, ScoreFileError> {
        let text = fs::read_to_string(path).map_err(|source| ScoreFileError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        Self::parse(&text, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixture::{generate, ErrorPlan, FixtureConfig};
    use crate::judge::{make_noisy_backend, Judge};
    use crate::strategies::{run_strategy, ContextMode, RunOptions, StrategyKind};
    use std::sync::Arc;

    fn file() -> ScoreFile {
        let corpus = generate(&FixtureConfig {
            figures_per_domain: 4,
            errors: ErrorPlan::NONE,
            ..FixtureConfig::default()
        });
        let judge = Judge::new(Arc::new(make_noisy_backend(&corpus, 1, 0.5).unwrap()));
        let spec = crate::strategies::StrategySpec::new(StrategyKind::CotQaYn, ContextMode::All);
        ScoreFile::from_run(&run_strategy(&corpus, &spec, &judge, RunOptions::default()).unwrap())
    }

    #[test]
    fn round_trip() {
        let f = file();
        let text = f.to_jsonl();
        assert!(text.starts_with(r#"{"kind":"manifest","#));
        assert_eq!(text.lines().count(), 1 + f.scores.len());
        let back = ScoreFile::parse(&text, Path::new("x")).unwrap();
        assert_eq!(back.header, f.header);
        assert_eq!(back.scores.len(), f.scores.len());
        assert_eq!(back.to_jsonl(), text);
    }

    #[test]
    fn header_must_come_first() {
        let text = file().to_jsonl();
        let mut lines: Vec<&str> = text.lines().collect();
        lines.swap(0, 1);
        let err = ScoreFile::parse(&lines.join("\n"), Path::new("s.jsonl")).unwrap_err();
        assert!(matches!(err, ScoreFileError::Malformed { line: 1, .. }), "{err}");
        assert!(ScoreFile::parse("", Path::new("s")).is_err());
    }
}

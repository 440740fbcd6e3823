//! Runs one strategy over every valid caption of a corpus.

use std::collections::BTreeMap;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::{
    answer_questions, assemble_context, build_few_shot, build_zero_shot, generate_questions, select_exemplars,
    ExemplarSet, QuestionSet, StrategyError, StrategyKind, StrategySpec,
};
use crate::corpus::ValidatedCorpus;
use crate::judge::{parse_score, CallStats, DecodingParams, Judge, JudgeScore, Phase, RequestTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Worker threads; requests are additionally bounded by the judge.
    pub parallel: usize,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { parallel: 1 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionFailure {
    pub caption_id: String,
    pub kind: String,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub strategy: StrategySpec,
    pub strategy_id: String,
    pub backend_id: String,
    pub model: String,
    pub params: DecodingParams,
    pub corpus_hash: String,
    pub timestamp: String,
    pub valid_captions: usize,
    pub scored: usize,
    /// Figures evaluated with an empty context because they have no
    /// mentioning paragraphs.
    pub no_mentions: Vec<String>,
    pub failures: Vec<CaptionFailure>,
    pub calls: CallStats,
}

impl RunManifest {
    pub fn has_transport_failures(&self) -> bool {
        self.failures.iter().any(|f| f.kind == "transport")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyRun {
    /// Successful scores in canonical caption order.
    pub scores: Vec<JudgeScore>,
    pub manifest: RunManifest,
}

/// Applies `f` to every item on up to `workers` scoped threads and returns
/// the results in input order.
pub fn par_map<T, R, F>(items: &[T], workers: usize, f: F) -> Vec<R>
where
    T: Sync,
    R: Send,
    F: Fn(&T) -> R + Sync,
{
    let workers = workers.max(1).min(items.len());
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Vec<Mutex<Option<R>>> = items.iter().map(|_| Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    slots
        .into_iter()
        .map(|s| s.into_inner().expect("slot lock").expect("every slot filled"))
        .collect()
}

/// Per-figure material shared by all of its captions.
enum Prep {
    Rate,
    FewShot(ExemplarSet),
    Cot(QuestionSet),
}

fn since(before: CallStats, after: CallStats) -> CallStats {
    CallStats {
        requests: after.requests - before.requests,
        cache_hits: after.cache_hits - before.cache_hits,
        backend_calls: after.backend_calls - before.backend_calls,
        attempts: after.attempts - before.attempts,
    }
}

/// Scores every valid caption once with `spec`.
///
/// Per-caption failures are recorded in the manifest and the run continues;
/// only an invalid spec is an error. Chain-of-thought questions are generated
/// once per figure and shared by its captions.
pub fn run_strategy(
    corpus: &ValidatedCorpus,
    spec: &StrategySpec,
    judge: &Judge,
    options: RunOptions,
) -> Result<StrategyRun, StrategyError> {
    spec.validate()?;
    let before = judge.stats();
    let strategy_id = spec.kind.id();
    let params = judge.params().clone();

    let figures: Vec<_> = corpus
        .figures()
        .iter()
        .filter(|f| f.captions.iter().any(|c| corpus.is_valid(&c.caption_id)))
        .collect();
    let contexts: BTreeMap<&str, _> = figures
        .iter()
        .map(|f| (f.figure_id.as_str(), assemble_context(f, spec.context)))
        .collect();
    let no_mentions: Vec<String> = contexts
        .iter()
        .filter(|(_, c)| c.no_mentions)
        .map(|(id, _)| id.to_string())
        .collect();

    let preps = par_map(&figures, options.parallel, |figure| -> Result<Prep, StrategyError> {
        match spec.kind {
            StrategyKind::ZeroShot => Ok(Prep::Rate),
            StrategyKind::FewShot => {
                select_exemplars(corpus, figure.domain, &figure.figure_id, spec.exemplar_seed).map(Prep::FewShot)
            }
            StrategyKind::CotQa | StrategyKind::CotQaYn => {
                let style = spec.kind.question_style().expect("chain-of-thought kind");
                let context = &contexts[figure.figure_id.as_str()].text;
                generate_questions(judge, figure, context, style, spec.max_questions, strategy_id).map(Prep::Cot)
            }
        }
    });
    let preps: BTreeMap<&str, Result<Prep, StrategyError>> =
        figures.iter().map(|f| f.figure_id.as_str()).zip(preps).collect();

    let captions: Vec<_> = corpus.valid_captions().collect();
    let results = par_map(&captions, options.parallel, |&(figure, caption)| {
        let prep = preps[figure.figure_id.as_str()]
            .as_ref()
            .map_err(|e| (e.kind(), e.to_string()))?;
        let context = &contexts[figure.figure_id.as_str()].text;
        let scored = match prep {
            Prep::Cot(questions) => answer_questions(judge, figure, caption, questions, strategy_id),
            Prep::Rate | Prep::FewShot(_) => {
                let request = match prep {
                    Prep::FewShot(exemplars) => build_few_shot(context, &caption.text, exemplars),
                    _ => build_zero_shot(context, &caption.text),
                };
                request.and_then(|r| {
                    let tag = RequestTag {
                        subject: caption.caption_id.clone(),
                        strategy: strategy_id.to_string(),
                        phase: Phase::Rate,
                    };
                    let response = judge.submit(&r.with_params(params.clone()).with_tag(tag))?;
                    let (score, status) = parse_score(&response.raw_text);
                    Ok(JudgeScore {
                        caption_id: caption.caption_id.clone(),
                        strategy_id: strategy_id.to_string(),
                        backend_id: response.backend_id.clone(),
                        score: f64::from(score),
                        parse_status: status,
                        raw: response,
                        cot: None,
                    })
                })
            }
        };
        scored.map_err(|e| (e.kind(), e.to_string()))
    });

    let mut scores = Vec::with_capacity(captions.len());
    let mut failures = Vec::new();
    for ((_, caption), result) in captions.iter().zip(results) {
        match result {
            Ok(score) => scores.push(score),
            Err((kind, message)) => {
                log::warn!("{}: {message}", caption.caption_id);
                failures.push(CaptionFailure {
                    caption_id: caption.caption_id.clone(),
                    kind: kind.to_string(),
                    message,
                });
            }
        }
    }

    let manifest = RunManifest {
        strategy: *spec,
        strategy_id: strategy_id.to_string(),
        backend_id: judge.backend_id().to_string(),
        model: judge.model().to_string(),
        params,
        corpus_hash: corpus.content_hash(),
        timestamp: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        valid_captions: captions.len(),
        scored: scores.len(),
        no_mentions,
        failures,
        calls: since(before, judge.stats()),
    };
    Ok(StrategyRun { scores, manifest })
}

//! Two-phase chain-of-thought scoring: generate questions from the context,
//! then ask whether the caption answers them.

use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::templates::{build_answer_prompt, build_question_prompt};
use super::StrategyError;
use crate::corpus::{CaptionCandidate, FigureRecord};
use crate::judge::{parse_yesno_detailed, CotTrace, Judge, JudgeResponse, JudgeScore, ParseStatus, Phase, RequestTag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QuestionStyle {
    Open,
    YesNo,
}

/// Questions generated for one figure.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuestionSet {
    pub subject_id: String,
    pub questions: Vec<String>,
    pub style: QuestionStyle,
    pub response: JudgeResponse,
}

static NUMBERED: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"^(?:q(?:uestion)?\s*)?\d{1,2}\s*[.):]\s*(.*)$").unwrap());
static BULLET: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"^[-*•+]\s+(.*)$").unwrap());

/// Extracts questions from a generation reply: numbered lines, bulleted lines
/// or lines ending in "?", in document order, at most `max_questions`.
pub fn parse_questions(raw: &str, max_questions: usize) -> Vec<String> {
    let mut out = Vec::new();
    for line in raw.lines() {
        if out.len() >= max_questions {
            break;
        }
        let line = line.trim().trim_start_matches('>').trim();
        let unbolded = line.replace("**", "");
        let line = unbolded.trim();
        let body = if let Some(c) = NUMBERED.captures(line) {
            c[1].trim().to_string()
        } else if let Some(c) = BULLET.captures(line) {
            c[1].trim().to_string()
        } else if line.ends_with('?') {
            line.to_string()
        } else {
            continue;
        };
        if !body.is_empty() {
            out.push(body);
        }
    }
    out
}

/// Maps a "Yes" share onto the 1-6 scale: `1 + 5 * fraction`.
pub fn cot_band(fraction: f64) -> f64 {
    1.0 + 5.0 * fraction
}

/// `(fraction, band)` for `yes` affirmative answers out of `total`. The band
/// is computed as `1 + 5 * yes / total` so that it is the correctly rounded
/// value of that ratio.
pub fn cot_score(yes: usize, total: usize) -> (f64, f64) {
    assert!(total > 0 && yes <= total, "need 0 <= yes <= total, total >= 1");
    let fraction = yes as f64 / total as f64;
    (fraction, 1.0 + (5 * yes) as f64 / total as f64)
}

/// Phase one for a figure. `strategy_id` goes into the request tag.
pub fn generate_questions(
    judge: &Judge,
    figure: &FigureRecord,
    context: &str,
    style: QuestionStyle,
    max_questions: usize,
    strategy_id: &str,
) -> Result<QuestionSet, StrategyError> {
    let tag = RequestTag {
        subject: figure.figure_id.clone(),
        strategy: strategy_id.to_string(),
        phase: Phase::Questions,
    };
    let request = build_question_prompt(
        context,
        &figure.figure_index_label,
        figure.domain.field_name(),
        style,
        max_questions,
    )
    .with_params(judge.params().clone())
    .with_tag(tag);
    let response = judge.submit(&request)?;
    let questions = parse_questions(&response.raw_text, max_questions);
    if questions.is_empty() {
        return Err(StrategyError::NoQuestionsParsed(figure.figure_id.clone()));
    }
    Ok(QuestionSet {
        subject_id: figure.figure_id.clone(),
        questions,
        style,
        response,
    })
}

/// Phase two: scores one caption against an existing question set.
pub fn answer_questions(
    judge: &Judge,
    figure: &FigureRecord,
    caption: &CaptionCandidate,
    questions: &QuestionSet,
    strategy_id: &str,
) -> Result<JudgeScore, StrategyError> {
    let tag = RequestTag {
        subject: caption.caption_id.clone(),
        strategy: strategy_id.to_string(),
        phase: Phase::Answers,
    };
    let request = build_answer_prompt(&figure.figure_index_label, &caption.text, &questions.questions)?
        .with_params(judge.params().clone())
        .with_tag(tag);
    let response = judge.submit(&request)?;
    let (verdicts, found) = parse_yesno_detailed(&response.raw_text, questions.questions.len());
    let yes = verdicts.iter().filter(|&&v| v).count();
    let (fraction, band) = cot_score(yes, verdicts.len());
    Ok(JudgeScore {
        caption_id: caption.caption_id.clone(),
        strategy_id: strategy_id.to_string(),
        backend_id: response.backend_id.clone(),
        score: band,
        parse_status: if found { ParseStatus::Parsed } else { ParseStatus::Fallback },
        raw: response,
        cot: Some(CotTrace {
            questions: questions.questions.clone(),
            question_response: questions.response.clone(),
            verdicts,
            fraction,
        }),
    })
}

/// Both phases for a single caption.
pub fn run_cot(
    judge: &Judge,
    figure: &FigureRecord,
    caption: &CaptionCandidate,
    context: &str,
    style: QuestionStyle,
    max_questions: usize,
) -> Result<JudgeScore, StrategyError> {
    let strategy_id = match style {
        QuestionStyle::Open => super::StrategyKind::CotQa.id(),
        QuestionStyle::YesNo => super::StrategyKind::CotQaYn.id(),
    };
    let questions = generate_questions(judge, figure, context, style, max_questions, strategy_id)?;
    answer_questions(judge, figure, caption, &questions, strategy_id)
}

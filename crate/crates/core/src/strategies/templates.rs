//! Prompt templates and single-pass slot substitution.

use super::{ExemplarSet, StrategyError};
use crate::judge::JudgeRequest;

pub const ZERO_SHOT_TEMPLATE: &str = "Given the paragraphs and caption below, please rate the level of usefulness of the caption from 1 to 6 based on how well the caption could help readers understand the important information. 6 is the highest; 1 is the lowest. Please also explain your rating. Paragraphs: [PARAGRAPHS]. Caption: [CAPTION]";

pub const FEW_SHOT_TEMPLATE: &str = "Given the paragraph and caption below, please rate the level of usefulness of the caption from 1 to 6 based on how well the caption could help readers understand the important information. 6 is the highest; 1 is the lowest. Please also explain your rating. The following are 3 examples of high-quality captions: {Best-1}, {Best-2}, {Best-3}. The following are 3 examples of low-quality captions: {Worst-1}, {Worst-2}, {Worst-3}. Paragraphs: [PARAGRAPHS]. Caption: [CAPTION]";

/// `{count}` is "five" for the default five questions.
pub const OPEN_QUESTIONS_TEMPLATE: &str = "The following are paragraphs from a paper that mentioned {figure-index}. Based on these paragraphs, please generate at most {count} questions that the caption of {figure-index} should be able to answer. These questions quite be interesting and useful to the readers of the paper, who are mostly researchers in {domain} and AI.\n\n[PARAGRAPHS]";

pub const YESNO_QUESTIONS_TEMPLATE: &str = "The following are paragraphs from a paper that mentioned {figure-index}. Based on these paragraphs, please generate at most {count} yes or no questions that the caption of {figure-index} should be able to answer. These questions quite be interesting and useful to the readers of the paper, who are mostly researchers in {domain} and AI.\n\n[PARAGRAPHS]";

pub const ANSWER_TEMPLATE: &str = "The following is the caption of {figure-index}. Does this caption answer each question? Please answer Yes or No one by one and explain why or why not. Do not repeat the question.\n\nCaption: [CAPTION]\n\nQuestions:\n[QUESTIONS]";

/// Every slot name the templates use.
pub const PLACEHOLDERS: [&str; 12] = [
    "[PARAGRAPHS]",
    "[CAPTION]",
    "[QUESTIONS]",
    "{Best-1}",
    "{Best-2}",
    "{Best-3}",
    "{Worst-1}",
    "{Worst-2}",
    "{Worst-3}",
    "{figure-index}",
    "{domain}",
    "{count}",
];

/// Replaces slots in one left-to-right scan of the template. Substituted
/// values are copied verbatim and never rescanned, so a caption containing
/// `[CAPTION]` stays as written. Unknown slots are left untouched.
pub fn fill(template: &str, slots: &[(&str, &str)]) -> String {
    let mut out = String::with_capacity(template.len() + slots.iter().map(|(_, v)| v.len()).sum::<usize>());
    let mut rest = template;
    'scan: while !rest.is_empty() {
        for (name, value) in slots {
            if let Some(after) = rest.strip_prefix(name) {
                out.push_str(value);
                rest = after;
                continue 'scan;
            }
        }
        let ch = rest.chars().next().expect("non-empty");
        out.push(ch);
        rest = &rest[ch.len_utf8()..];
    }
    out
}

fn count_word(n: usize) -> String {
    const WORDS: [&str; 10] = ["one", "two", "three", "four", "five", "six", "seven", "eight", "nine", "ten"];
    WORDS.get(n.wrapping_sub(1)).map_or_else(|| n.to_string(), |w| w.to_string())
}

fn require_caption(caption: &str) -> Result<(), StrategyError> {
    if caption.trim().is_empty() {
        Err(StrategyError::EmptyCaption)
    } else {
        Ok(())
    }
}

pub fn build_zero_shot(context: &str, caption: &str) -> Result<JudgeRequest, StrategyError> {
    require_caption(caption)?;
    Ok(JudgeRequest::user(fill(
        ZERO_SHOT_TEMPLATE,
        &[("[PARAGRAPHS]", context), ("[CAPTION]", caption)],
    )))
}

pub fn build_few_shot(context: &str, caption: &str, exemplars: &ExemplarSet) -> Result<JudgeRequest, StrategyError> {
    require_caption(caption)?;
    let [b1, b2, b3] = exemplars.best.each_ref().map(|e| e.text.as_str());
    let [w1, w2, w3] = exemplars.worst.each_ref().map(|e| e.text.as_str());
    Ok(JudgeRequest::user(fill(
        FEW_SHOT_TEMPLATE,
        &[
            ("{Best-1}", b1),
            ("{Best-2}", b2),
            ("{Best-3}", b3),
            ("{Worst-1}", w1),
            ("{Worst-2}", w2),
            ("{Worst-3}", w3),
            ("[PARAGRAPHS]", context),
            ("[CAPTION]", caption),
        ],
    )))
}

/// Phase-one prompt of the chain-of-thought strategies.
pub fn build_question_prompt(
    context: &str,
    figure_index_label: &str,
    field: &str,
    style: super::QuestionStyle,
    max_questions: usize,
) -> JudgeRequest {
    let template = match style {
        super::QuestionStyle::Open => OPEN_QUESTIONS_TEMPLATE,
        super::QuestionStyle::YesNo => YESNO_QUESTIONS_TEMPLATE,
    };
    let count = count_word(max_questions);
    let text = fill(
        template,
        &[
            ("{figure-index}", figure_index_label),
            ("{domain}", field),
            ("{count}", &count),
            ("[PARAGRAPHS]", context),
        ],
    );
    JudgeRequest::user(text.trim_end())
}

/// Phase-two prompt: the caption plus the numbered questions.
pub fn build_answer_prompt(
    figure_index_label: &str,
    caption: &str,
    questions: &[String],
) -> Result<JudgeRequest, StrategyError> {
    require_caption(caption)?;
    let numbered = questions
        .iter()
        .enumerate()
        .map(|(i, q)| format!("{}. {q}", i + 1))
        .collect::<Vec<_>>()
        .join("\n");
    Ok(JudgeRequest::user(fill(
        ANSWER_TEMPLATE,
        &[
            ("{figure-index}", figure_index_label),
            ("[CAPTION]", caption),
            ("[QUESTIONS]", &numbered),
        ],
    )))
}

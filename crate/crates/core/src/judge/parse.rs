//! Extraction of ratings and yes/no verdicts from free-form judge output.

use std::sync::LazyLock;

use regex::Regex;

use super::ParseStatus;

static KEYWORD: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)\b(?:rating|rated|rate|score|usefulness)\b").unwrap());
static OUT_OF_SIX: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)(?:^|[^\d.])([1-6])\s*(?:/|out\s+of)\s*6\b").unwrap());
static ENUM_MARKER: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"(?mi)^[ \t>*_#-]*(?:q(?:uestion)?\s*)?(\d{1,2})\s*(?:\*\*)?\s*[.):]").unwrap()
});
static VERDICT: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"(?i)\b(yes|no)\b").unwrap());
static AMBIGUOUS_TAIL: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?i)^\s*(?:/|or)\s*(?:yes|no)\b").unwrap());

// Words that may sit between a rating keyword and its number
// ("my rating would be a 4", "rated it 5").
const FILLER: &[&str] = &[
    "a", "an", "the", "is", "of", "it", "its", "be", "would", "will", "should", "i", "i'd", "my", "this",
    "caption", "caption's", "final", "overall", "level", "as", "at", "give", "gives", "given", "giving",
    "deserves", "gets", "receives", "assign", "assigned", "rating", "score", "usefulness", "rate", "rated",
];

const MAX_GAP_WORDS: usize = 6;

/// Extracts the judge's 1-6 rating.
///
/// Candidates are tried in priority order and the first hit wins:
/// 1. a rating keyword (`rating`, `rate(d)`, `score`, `usefulness`) followed,
///    across punctuation and a few filler words, by an integer 1-6;
/// 2. `N out of 6` or `N/6`;
/// 3. a bare integer 1-6 opening the first non-empty line.
///
/// Anything else yields `(1, Fallback)`.
pub fn parse_score(raw_text: &str) -> (u8, ParseStatus) {
    keyword_score(raw_text)
        .or_else(|| out_of_six(raw_text))
        .or_else(|| leading_integer(raw_text))
        .map(|s| (s, ParseStatus::Parsed))
        .unwrap_or((1, ParseStatus::Fallback))
}

fn keyword_score(text: &str) -> Option<u8> {
    KEYWORD.find_iter(text).find_map(|m| score_after(&text[m.end()..]))
}

fn score_after(rest: &str) -> Option<u8> {
    let bytes = rest.as_bytes();
    let mut i = 0;
    let mut words = 0;
    while i < bytes.len() {
        let c = rest[i..].chars().next()?;
        if c == '\n' && rest[i + 1..].starts_with('\n') {
            return None;
        }
        if c.is_whitespace() || ":=*-\u{2013}\u{2014}()[]#\"'_~>".contains(c) {
            i += c.len_utf8();
        } else if c.is_ascii_digit() {
            let (value, len, integral) = number_at(&rest[i..]);
            let after = &rest[i + len..];
            if let Some(skip) = range_tail(after) {
                // "(1-6)" or "from 1 to 6": a scale, not a score
                i += len + skip;
                continue;
            }
            return (integral && (1..=6).contains(&value)).then_some(value as u8);
        } else if c.is_alphabetic() {
            let end = rest[i..]
                .find(|ch: char| !(ch.is_alphabetic() || ch == '\''))
                .map_or(rest.len(), |e| i + e);
            let word = rest[i..end].to_lowercase();
            words += 1;
            if words > MAX_GAP_WORDS || !FILLER.contains(&word.as_str()) {
                return None;
            }
            i = end;
        } else {
            return None;
        }
    }
    None
}

/// Parses a leading number; returns (integer part, byte length, is integral).
fn number_at(s: &str) -> (u64, usize, bool) {
    let int_len = s.find(|c: char| !c.is_ascii_digit()).unwrap_or(s.len());
    let value = s[..int_len].parse::<u64>().unwrap_or(u64::MAX);
    let rest = &s[int_len..];
    let frac = rest.strip_prefix('.').map_or(0, |r| r.find(|c: char| !c.is_ascii_digit()).unwrap_or(r.len()));
    if frac > 0 {
        (value, int_len + 1 + frac, false)
    } else {
        (value, int_len, true)
    }
}

fn range_tail(after: &str) -> Option<usize> {
    let trimmed = after.trim_start();
    let lead = after.len() - trimmed.len();
    let rest = ["-", "–", "to "]
        .iter()
        .find_map(|sep| trimmed.strip_prefix(sep))?;
    let rest_trim = rest.trim_start();
    if !rest_trim.starts_with(|c: char| c.is_ascii_digit()) {
        return None;
    }
    let digits = rest_trim.find(|c: char| !c.is_ascii_digit()).unwrap_or(rest_trim.len());
    Some(lead + (trimmed.len() - rest_trim.len()) + digits)
}

fn out_of_six(text: &str) -> Option<u8> {
    OUT_OF_SIX
        .captures(text)
        .and_then(|c| c.get(1))
        .and_then(|m| m.as_str().parse().ok())
}

fn leading_integer(text: &str) -> Option<u8> {
    let line = text.lines().find(|l| !l.trim().is_empty())?;
    let line = line.trim_start().trim_start_matches(['*', '#', ' ']);
    let first = line.chars().next()?;
    if !('1'..='6').contains(&first) {
        return None;
    }
    let rest = &line[1..];
    let next = rest.chars().next();
    let bad_follow = match next {
        Some(c) if c.is_ascii_digit() || c == '/' => true,
        Some('.') => rest[1..].starts_with(|c: char| c.is_ascii_digit()),
        _ => false,
    };
    (!bad_follow).then(|| first as u8 - b'0')
}

/// One verdict per question; missing or ambiguous answers count as "No".
pub fn parse_yesno(raw_text: &str, n_questions: usize) -> Vec<bool> {
    parse_yesno_detailed(raw_text, n_questions).0
}

/// As [`parse_yesno`], also reporting whether any verdict was found at all.
///
/// Enumerated answers ("1. Yes - ...") are matched by item number. Without
/// usable enumeration, Yes/No tokens are assigned to questions in order.
pub fn parse_yesno_detailed(raw_text: &str, n_questions: usize) -> (Vec<bool>, bool) {
    let mut verdicts = vec![false; n_questions];

    let markers: Vec<(usize, usize, usize)> = ENUM_MARKER
        .captures_iter(raw_text)
        .filter_map(|c| {
            let whole = c.get(0)?;
            let num = c.get(1)?.as_str().parse().ok()?;
            Some((num, whole.start(), whole.end()))
        })
        .collect();
    let mut seen = vec![false; n_questions];
    let mut found = false;
    for (i, &(num, _, content_start)) in markers.iter().enumerate() {
        let end = markers.get(i + 1).map_or(raw_text.len(), |m| m.1);
        let segment = &raw_text[content_start..end];
        let Some(v) = first_verdict(segment) else { continue };
        found = true;
        if (1..=n_questions).contains(&num) && !seen[num - 1] {
            seen[num - 1] = true;
            verdicts[num - 1] = v.unwrap_or(false);
        }
    }
    if found {
        return (verdicts, true);
    }

    let mut slot = 0;
    let mut pos = 0;
    while let Some(m) = VERDICT.find_at(raw_text, pos) {
        found = true;
        let tail = &raw_text[m.end()..];
        let ambiguous = AMBIGUOUS_TAIL.find(tail);
        if slot < n_questions {
            verdicts[slot] = ambiguous.is_none() && m.as_str().eq_ignore_ascii_case("yes");
        }
        slot += 1;
        pos = m.end() + ambiguous.map_or(0, |a| a.end());
    }
    (verdicts, found)
}

/// First verdict in a segment: `Some(Some(b))` for a clear answer,
/// `Some(None)` for "Yes/No"-style hedges, `None` when there is no token.
fn first_verdict(segment: &str) -> Option<Option<bool>> {
    let m = VERDICT.find(segment)?;
    if AMBIGUOUS_TAIL.is_match(&segment[m.end()..]) {
        return Some(None);
    }
    Some(Some(m.as_str().eq_ignore_ascii_case("yes")))
}

//! Figure/caption/annotation corpus.
//!
//! The corpus arrives as a JSONL file with one record per line, tagged by a
//! `kind` field (`figure`, `phd_ranking`, `undergrad_rating`). Loading checks
//! every structural invariant up front so the rest of the harness can treat a
//! [`ValidatedCorpus`] as trusted, immutable data.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};
use thiserror::Error;

/// arXiv subject area a figure was sampled from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Domain {
    #[serde(alias = "cs.CV")]
    CV,
    #[serde(alias = "cs.CL")]
    CL,
    #[serde(alias = "cs.HC")]
    HC,
}

impl Domain {
    pub const ALL: [Domain; 3] = [Domain::CV, Domain::CL, Domain::HC];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::CV => "CV",
            Domain::CL => "CL",
            Domain::HC => "HC",
        }
    }

    /// Research field as it is named inside prompts.
    pub fn field_name(self) -> &'static str {
        match self {
            Domain::CV => "computer vision",
            Domain::CL => "natural language processing",
            Domain::HC => "human-computer interaction",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Which generator produced a caption.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CaptionSource {
    Author,
    PegasusP,
    #[serde(rename = "pegasus_po")]
    PegasusPO,
    PegasusO,
    #[serde(rename = "trocr")]
    TrOCR,
    Template,
}

impl CaptionSource {
    pub const ALL: [CaptionSource; 6] = [
        CaptionSource::Author,
        CaptionSource::PegasusP,
        CaptionSource::PegasusPO,
        CaptionSource::PegasusO,
        CaptionSource::TrOCR,
        CaptionSource::Template,
    ];

    pub fn key(self) -> &'static str {
        match self {
            CaptionSource::Author => "author",
            CaptionSource::PegasusP => "pegasus_p",
            CaptionSource::PegasusPO => "pegasus_po",
            CaptionSource::PegasusO => "pegasus_o",
            CaptionSource::TrOCR => "trocr",
            CaptionSource::Template => "template",
        }
    }
}

impl fmt::Display for CaptionSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.key())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CaptionCandidate {
    pub caption_id: String,
    /// Filled from the enclosing figure when omitted in the file.
    #[serde(default)]
    pub figure_id: String,
    pub source: CaptionSource,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FigureRecord {
    pub figure_id: String,
    pub domain: Domain,
    /// The figure's in-paper name ("Figure 4"), used inside prompts.
    #[serde(default = "default_index_label")]
    pub figure_index_label: String,
    /// Figure-mentioning paragraphs in document order. May be empty.
    #[serde(default)]
    pub mentions: Vec<String>,
    pub captions: Vec<CaptionCandidate>,
}

fn default_index_label() -> String {
    "the figure".to_string()
}

impl FigureRecord {
    pub fn caption(&self, source: CaptionSource) -> Option<&CaptionCandidate> {
        self.captions.iter().find(|c| c.source == source)
    }
}

/// One PhD student's total order over the six captions of a figure (1 = best).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PhdRanking {
    pub figure_id: String,
    pub annotator_id: String,
    pub ranking: BTreeMap<CaptionSource, u8>,
}

impl PhdRanking {
    pub fn rank_of(&self, source: CaptionSource) -> Option<u8> {
        self.ranking.get(&source).copied()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Helpfulness {
    Yes,
    No,
    Unsure,
}

/// Caption feature annotations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FeatureFlags {
    pub ocr: bool,
    pub visual: bool,
    pub stats: bool,
    pub relation: bool,
    pub takeaway: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feature {
    Ocr,
    Visual,
    Stats,
    Relation,
    Takeaway,
}

impl Feature {
    pub const ALL: [Feature; 5] = [
        Feature::Ocr,
        Feature::Visual,
        Feature::Stats,
        Feature::Relation,
        Feature::Takeaway,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Feature::Ocr => "OCR",
            Feature::Visual => "Visual",
            Feature::Stats => "Stats",
            Feature::Relation => "Relation",
            Feature::Takeaway => "Takeaway",
        }
    }
}

impl FeatureFlags {
    pub fn get(&self, feature: Feature) -> bool {
        match feature {
            Feature::Ocr => self.ocr,
            Feature::Visual => self.visual,
            Feature::Stats => self.stats,
            Feature::Relation => self.relation,
            Feature::Takeaway => self.takeaway,
        }
    }
}

/// Extraction and figure-type problems marked during annotation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorFlags {
    pub image_extraction: bool,
    pub text_extraction: bool,
    pub not_line_chart: bool,
    pub compound_figure: bool,
}

impl ErrorFlags {
    pub fn any(&self) -> bool {
        self.image_extraction || self.text_extraction || self.not_line_chart || self.compound_figure
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UndergradRating {
    pub caption_id: String,
    pub annotator_id: String,
    pub helpfulness: Helpfulness,
    pub features: FeatureFlags,
    pub errors: ErrorFlags,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: malformed record: {reason}")]
    MalformedRecord { line: usize, reason: String },
    #[error("{}duplicate id `{id}`", at(*.line))]
    DuplicateId { id: String, line: Option<usize> },
    #[error("{}figure `{figure_id}` is missing caption sources {missing:?}", at(*.line))]
    MissingCaptionSource {
        figure_id: String,
        missing: Vec<CaptionSource>,
        line: Option<usize>,
    },
    #[error("{}ranking of figure `{figure_id}` by `{annotator_id}` is not a permutation of 1..=6: {ranks:?}", at(*.line))]
    InvalidRankPermutation {
        figure_id: String,
        annotator_id: String,
        ranks: Vec<i64>,
        line: Option<usize>,
    },
    #[error("{}reference to unknown {what} `{id}`", at(*.line))]
    UnknownReference {
        what: &'static str,
        id: String,
        line: Option<usize>,
    },
    #[error("caption `{caption_id}` has no {kind} annotation")]
    MissingAnnotation { caption_id: String, kind: &'static str },
    #[error("cannot split an empty label set")]
    EmptyLabelSet,
    #[error("split ratios must be non-negative and sum to 1, got {0:?}")]
    InvalidRatios((f64, f64, f64)),
}

fn at(line: Option<usize>) -> String {
    line.map(|l| format!("line {l}: ")).unwrap_or_default()
}

/// A corpus whose invariants have all been checked.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidatedCorpus {
    figures: Vec<FigureRecord>,
    phd_rankings: Vec<PhdRanking>,
    undergrad_ratings: Vec<UndergradRating>,
    valid_caption_ids: BTreeSet<String>,
    // caption_id -> (figure index, source)
    caption_index: BTreeMap<String, (usize, CaptionSource)>,
    figure_index: BTreeMap<String, usize>,
}

/// Records tagged with the line they came from (or their position when
/// built in memory).
struct Located<T> {
    line: Option<usize>,
    record: T,
}

impl ValidatedCorpus {
    /// Validates in-memory records. Record order does not matter.
    pub fn new(
        figures: Vec<FigureRecord>,
        phd_rankings: Vec<PhdRanking>,
        undergrad_ratings: Vec<UndergradRating>,
    ) -> Result<Self, CorpusError> {
        fn unlocated<T>(records: Vec<T>) -> Vec<Located<T>> {
            records.into_iter().map(|record| Located { line: None, record }).collect()
        }
        Self::build(unlocated(figures), unlocated(phd_rankings), unlocated(undergrad_ratings))
    }

    fn build(
        figures: Vec<Located<FigureRecord>>,
        phd_rankings: Vec<Located<PhdRanking>>,
        undergrad_ratings: Vec<Located<UndergradRating>>,
    ) -> Result<Self, CorpusError> {
        let mut figs: Vec<(Option<usize>, FigureRecord)> = Vec::with_capacity(figures.len());
        for Located { line, record: mut fig } in figures {
            for cap in &mut fig.captions {
                if cap.figure_id.is_empty() {
                    cap.figure_id = fig.figure_id.clone();
                } else if cap.figure_id != fig.figure_id {
                    return Err(CorpusError::MalformedRecord {
                        line: line.unwrap_or(0),
                        reason: format!(
                            "caption `{}` names figure `{}` inside figure `{}`",
                            cap.caption_id, cap.figure_id, fig.figure_id
                        ),
                    });
                }
                if cap.text.trim().is_empty() {
                    return Err(CorpusError::MalformedRecord {
                        line: line.unwrap_or(0),
                        reason: format!("caption `{}` has empty text", cap.caption_id),
                    });
                }
            }
            let present: BTreeSet<CaptionSource> = fig.captions.iter().map(|c| c.source).collect();
            if present.len() != fig.captions.len() {
                return Err(CorpusError::DuplicateId {
                    id: format!("{} (repeated caption source)", fig.figure_id),
                    line,
                });
            }
            let missing: Vec<CaptionSource> = CaptionSource::ALL
                .into_iter()
                .filter(|s| !present.contains(s))
                .collect();
            if !missing.is_empty() {
                return Err(CorpusError::MissingCaptionSource {
                    figure_id: fig.figure_id.clone(),
                    missing,
                    line,
                });
            }
            fig.captions.sort_by_key(|c| c.source);
            figs.push((line, fig));
        }
        figs.sort_by(|a, b| a.1.figure_id.cmp(&b.1.figure_id));

        let mut figure_index = BTreeMap::new();
        let mut caption_index = BTreeMap::new();
        for (i, (line, fig)) in figs.iter().enumerate() {
            if figure_index.insert(fig.figure_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId {
                    id: fig.figure_id.clone(),
                    line: *line,
                });
            }
            for cap in &fig.captions {
                if caption_index
                    .insert(cap.caption_id.clone(), (i, cap.source))
                    .is_some()
                {
                    return Err(CorpusError::DuplicateId {
                        id: cap.caption_id.clone(),
                        line: *line,
                    });
                }
            }
        }

        let mut seen = BTreeSet::new();
        for Located { line, record: r } in &phd_rankings {
            if !figure_index.contains_key(&r.figure_id) {
                return Err(CorpusError::UnknownReference {
                    what: "figure",
                    id: r.figure_id.clone(),
                    line: *line,
                });
            }
            check_permutation(r, *line)?;
            if !seen.insert((r.figure_id.clone(), r.annotator_id.clone())) {
                return Err(CorpusError::DuplicateId {
                    id: format!("{}/{}", r.figure_id, r.annotator_id),
                    line: *line,
                });
            }
        }

        let mut seen = BTreeSet::new();
        let mut flagged = BTreeSet::new();
        for Located { line, record: r } in &undergrad_ratings {
            if !caption_index.contains_key(&r.caption_id) {
                return Err(CorpusError::UnknownReference {
                    what: "caption",
                    id: r.caption_id.clone(),
                    line: *line,
                });
            }
            if !seen.insert((r.caption_id.clone(), r.annotator_id.clone())) {
                return Err(CorpusError::DuplicateId {
                    id: format!("{}/{}", r.caption_id, r.annotator_id),
                    line: *line,
                });
            }
            if r.errors.any() {
                flagged.insert(r.caption_id.clone());
            }
        }

        let valid_caption_ids = caption_index
            .keys()
            .filter(|id| !flagged.contains(*id))
            .cloned()
            .collect();

        let mut phd_rankings: Vec<PhdRanking> = phd_rankings.into_iter().map(|l| l.record).collect();
        phd_rankings.sort_by(|a, b| {
            (&a.figure_id, &a.annotator_id).cmp(&(&b.figure_id, &b.annotator_id))
        });
        let mut undergrad_ratings: Vec<UndergradRating> =
            undergrad_ratings.into_iter().map(|l| l.record).collect();
        undergrad_ratings.sort_by(|a, b| {
            (&a.caption_id, &a.annotator_id).cmp(&(&b.caption_id, &b.annotator_id))
        });

        Ok(Self {
            figures: figs.into_iter().map(|(_, f)| f).collect(),
            phd_rankings,
            undergrad_ratings,
            valid_caption_ids,
            caption_index,
            figure_index,
        })
    }

    /// Figures sorted by id; captions inside each figure follow [`CaptionSource::ALL`].
    pub fn figures(&self) -> &[FigureRecord] {
        &self.figures
    }

    pub fn phd_rankings(&self) -> &[PhdRanking] {
        &self.phd_rankings
    }

    pub fn undergrad_ratings(&self) -> &[UndergradRating] {
        &self.undergrad_ratings
    }

    /// Captions without any error flag.
    pub fn valid_caption_ids(&self) -> &BTreeSet<String> {
        &self.valid_caption_ids
    }

    pub fn is_valid(&self, caption_id: &str) -> bool {
        self.valid_caption_ids.contains(caption_id)
    }

    pub fn caption_count(&self) -> usize {
        self.caption_index.len()
    }

    pub fn figure(&self, figure_id: &str) -> Option<&FigureRecord> {
        self.figure_index.get(figure_id).map(|&i| &self.figures[i])
    }

    pub fn caption(&self, caption_id: &str) -> Option<(&FigureRecord, &CaptionCandidate)> {
        let &(i, source) = self.caption_index.get(caption_id)?;
        let fig = &self.figures[i];
        fig.caption(source).map(|c| (fig, c))
    }

    /// Iterates valid captions in canonical order (figure id, then source).
    pub fn valid_captions(&self) -> impl Iterator<Item = (&FigureRecord, &CaptionCandidate)> {
        self.figures.iter().flat_map(move |f| {
            f.captions
                .iter()
                .filter(move |c| self.valid_caption_ids.contains(&c.caption_id))
                .map(move |c| (f, c))
        })
    }

    pub fn rankings_for(&self, figure_id: &str) -> impl Iterator<Item = &PhdRanking> {
        let id = figure_id.to_string();
        self.phd_rankings.iter().filter(move |r| r.figure_id == id)
    }

    /// Every PhD rank given to a caption (one per annotator of its figure).
    pub fn caption_ranks(&self, caption_id: &str) -> Vec<u8> {
        match self.caption_index.get(caption_id) {
            Some(&(i, source)) => self
                .rankings_for(&self.figures[i].figure_id)
                .filter_map(|r| r.rank_of(source))
                .collect(),
            None => Vec::new(),
        }
    }

    /// Mean PhD rank, or `None` when the caption's figure was never ranked.
    pub fn mean_rank(&self, caption_id: &str) -> Option<f64> {
        let ranks = self.caption_ranks(caption_id);
        if ranks.is_empty() {
            None
        } else {
            Some(ranks.iter().map(|&r| f64::from(r)).sum::<f64>() / ranks.len() as f64)
        }
    }

    pub fn ratings_for<'a>(&'a self, caption_id: &'a str) -> impl Iterator<Item = &'a UndergradRating> {
        self.undergrad_ratings
            .iter()
            .filter(move |r| r.caption_id == caption_id)
    }

    /// Canonical JSONL serialization: figures, then rankings, then ratings.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for f in &self.figures {
            push_line(&mut out, "figure", f);
        }
        for r in &self.phd_rankings {
            push_line(&mut out, "phd_ranking", r);
        }
        for r in &self.undergrad_ratings {
            push_line(&mut out, "undergrad_rating", r);
        }
        out
    }

    /// SHA-256 of the canonical serialization, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_jsonl().as_bytes()))
    }

    pub fn write_jsonl(&self, path: &Path) -> Result<(), CorpusError> {
        fs::write(path, self.to_jsonl()).map_err(|source| CorpusError::Io {
            path: path.to_path_buf(),
            source,
        })
    }
}

fn push_line<T: Serialize>(out: &mut String, kind: &str, record: &T) {
    let mut value = serde_json::to_value(record).expect("corpus records serialize");
    if let Value::Object(map) = &mut value {
        let mut tagged = serde_json::Map::new();
        tagged.insert("kind".into(), Value::String(kind.into()));
        tagged.append(map);
        value = Value::Object(tagged);
    }
    out.push_str(&value.to_string());
    out.push('\n');
}

fn check_permutation(r: &PhdRanking, line: Option<usize>) -> Result<(), CorpusError> {
    let ranks: BTreeSet<u8> = r.ranking.values().copied().collect();
    let complete = r.ranking.len() == 6 && ranks.len() == 6 && ranks.iter().all(|k| (1..=6).contains(k));
    if complete {
        Ok(())
    } else {
        Err(CorpusError::InvalidRankPermutation {
            figure_id: r.figure_id.clone(),
            annotator_id: r.annotator_id.clone(),
            ranks: r.ranking.values().map(|&k| i64::from(k)).collect(),
            line,
        })
    }
}

/// A field present in the file that the schema does not know about.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnknownField {
    pub line: usize,
    pub field: String,
}

#[derive(Debug)]
pub struct LoadOutcome {
    pub corpus: ValidatedCorpus,
    pub warnings: Vec<UnknownField>,
}

const FIGURE_FIELDS: &[&str] = &["kind", "figure_id", "domain", "figure_index_label", "mentions", "captions"];
const CAPTION_FIELDS: &[&str] = &["caption_id", "figure_id", "source", "text"];
const RANKING_FIELDS: &[&str] = &["kind", "figure_id", "annotator_id", "ranking"];
const RATING_FIELDS: &[&str] = &["kind", "caption_id", "annotator_id", "helpfulness", "features", "errors"];

/// Loads and validates a JSONL corpus file.
pub fn load_corpus(path: &Path) -> Result<ValidatedCorpus, CorpusError> {
    let outcome = load_corpus_report(path)?;
    for w in &outcome.warnings {
        log::warn!("{}:{}: ignoring unknown field `{}`", path.display(), w.line, w.field);
    }
    Ok(outcome.corpus)
}

/// Like [`load_corpus`] but hands back unknown-field warnings instead of logging them.
pub fn load_corpus_report(path: &Path) -> Result<LoadOutcome, CorpusError> {
    let text = fs::read_to_string(path).map_err(|source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_corpus(&text)
}

pub fn parse_corpus(text: &str) -> Result<LoadOutcome, CorpusError> {
    let mut figures = Vec::new();
    let mut rankings = Vec::new();
    let mut ratings = Vec::new();
    let mut warnings = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        if raw.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| CorpusError::MalformedRecord { line, reason };
        let value: Value = serde_json::from_str(raw).map_err(|e| malformed(e.to_string()))?;
        let obj = value
            .as_object()
            .ok_or_else(|| malformed("expected a JSON object".into()))?;
        let kind = obj
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| malformed("missing string field `kind`".into()))?;
        match kind {
            "figure" => {
                note_unknown(obj, FIGURE_FIELDS, line, "", &mut warnings);
                if let Some(Value::Array(caps)) = obj.get("captions") {
                    for (i, c) in caps.iter().enumerate() {
                        if let Some(c) = c.as_object() {
                            note_unknown(c, CAPTION_FIELDS, line, &format!("captions[{i}]."), &mut warnings);
                        }
                    }
                }
                let fig: FigureRecord = serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
                figures.push(Located { line: Some(line), record: fig });
            }
            "phd_ranking" => {
                note_unknown(obj, RANKING_FIELDS, line, "", &mut warnings);
                let ranking = parse_ranking(obj, line)?;
                rankings.push(Located { line: Some(line), record: ranking });
            }
            "undergrad_rating" => {
                note_unknown(obj, RATING_FIELDS, line, "", &mut warnings);
                let rating: UndergradRating =
                    serde_json::from_value(value).map_err(|e| malformed(e.to_string()))?;
                ratings.push(Located { line: Some(line), record: rating });
            }
            other => return Err(malformed(format!("unknown record kind `{other}`"))),
        }
    }

    let corpus = ValidatedCorpus::build(figures, rankings, ratings)?;
    Ok(LoadOutcome { corpus, warnings })
}

fn note_unknown(
    obj: &serde_json::Map<String, Value>,
    known: &[&str],
    line: usize,
    prefix: &str,
    out: &mut Vec<UnknownField>,
) {
    for key in obj.keys() {
        if !known.contains(&key.as_str()) {
            out.push(UnknownField {
                line,
                field: format!("{prefix}{key}"),
            });
        }
    }
}

// Ranks are read as wide integers first so that out-of-range values surface
// as permutation errors rather than JSON type errors.
fn parse_ranking(obj: &serde_json::Map<String, Value>, line: usize) -> Result<PhdRanking, CorpusError> {
    #[derive(Deserialize)]
    struct Raw {
        figure_id: String,
        annotator_id: String,
        ranking: BTreeMap<CaptionSource, i64>,
    }
    let raw: Raw = serde_json::from_value(Value::Object(obj.clone())).map_err(|e| {
        CorpusError::MalformedRecord {
            line,
            reason: e.to_string(),
        }
    })?;
    let invalid = || CorpusError::InvalidRankPermutation {
        figure_id: raw.figure_id.clone(),
        annotator_id: raw.annotator_id.clone(),
        ranks: raw.ranking.values().copied().collect(),
        line: Some(line),
    };
    let mut ranking = BTreeMap::new();
    for (&source, &rank) in &raw.ranking {
        let rank = u8::try_from(rank).map_err(|_| invalid())?;
        ranking.insert(source, rank);
    }
    Ok(PhdRanking {
        figure_id: raw.figure_id.clone(),
        annotator_id: raw.annotator_id.clone(),
        ranking,
    })
}

/// Per-kind error counts over all captions plus the size of their union.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ErrorCensus {
    pub image_extraction: usize,
    pub text_extraction: usize,
    pub not_line_chart: usize,
    pub compound_figure: usize,
    /// Captions with at least one error of any kind.
    pub union: usize,
    pub total_captions: usize,
    pub valid_captions: usize,
}

pub fn error_census(corpus: &ValidatedCorpus) -> ErrorCensus {
    // Merge flags per caption first so a caption rated by several annotators
    // is counted once per kind.
    let mut merged: BTreeMap<&str, ErrorFlags> = BTreeMap::new();
    for r in corpus.undergrad_ratings() {
        let e = merged.entry(r.caption_id.as_str()).or_default();
        e.image_extraction |= r.errors.image_extraction;
        e.text_extraction |= r.errors.text_extraction;
        e.not_line_chart |= r.errors.not_line_chart;
        e.compound_figure |= r.errors.compound_figure;
    }
    let mut census = ErrorCensus {
        total_captions: corpus.caption_count(),
        valid_captions: corpus.valid_caption_ids().len(),
        ..ErrorCensus::default()
    };
    for flags in merged.values() {
        census.image_extraction += usize::from(flags.image_extraction);
        census.text_extraction += usize::from(flags.text_extraction);
        census.not_line_chart += usize::from(flags.not_line_chart);
        census.compound_figure += usize::from(flags.compound_figure);
        census.union += usize::from(flags.any());
    }
    census
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelSource {
    PhdRankings,
    UndergradRatings,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BinaryLabel {
    Yes,
    No,
}

impl BinaryLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            BinaryLabel::Yes => "Yes",
            BinaryLabel::No => "No",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CaptionLabel {
    pub caption_id: String,
    pub label: BinaryLabel,
}

/// Derives binary helpfulness labels for every valid caption.
///
/// PhD mode labels the top three ranks `Yes` and the bottom three `No`; when
/// a figure was ranked by several students the mean rank is split at 3.5.
/// Undergraduate mode maps `Unsure` to `No` and takes a strict majority when a
/// caption has several ratings.
pub fn derive_labels(corpus: &ValidatedCorpus, source: LabelSource) -> Result<Vec<CaptionLabel>, CorpusError> {
    let mut out = Vec::with_capacity(corpus.valid_caption_ids().len());
    for id in corpus.valid_caption_ids() {
        let label = match source {
            LabelSource::PhdRankings => {
                let mean = corpus.mean_rank(id).ok_or_else(|| CorpusError::MissingAnnotation {
                    caption_id: id.clone(),
                    kind: "PhD ranking",
                })?;
                if mean <= 3.5 {
                    BinaryLabel::Yes
                } else {
                    BinaryLabel::No
                }
            }
            LabelSource::UndergradRatings => {
                let (mut yes, mut total) = (0usize, 0usize);
                for r in corpus.ratings_for(id) {
                    total += 1;
                    yes += usize::from(r.helpfulness == Helpfulness::Yes);
                }
                if total == 0 {
                    return Err(CorpusError::MissingAnnotation {
                        caption_id: id.clone(),
                        kind: "undergraduate rating",
                    });
                }
                if 2 * yes > total {
                    BinaryLabel::Yes
                } else {
                    BinaryLabel::No
                }
            }
        };
        out.push(CaptionLabel {
            caption_id: id.clone(),
            label,
        });
    }
    Ok(out)
}

/// Train/validation/test partition of a label set, grouped by figure.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelSplit {
    pub train: Vec<CaptionLabel>,
    pub validation: Vec<CaptionLabel>,
    pub test: Vec<CaptionLabel>,
}

pub const DEFAULT_SPLIT: (f64, f64, f64) = (0.8, 0.1, 0.1);

/// Shuffles figure groups under `seed` and fills train, then validation, then
/// test until each reaches its target share. All captions of one figure land
/// in the same split, so a split can overshoot its target by at most one
/// figure's worth of captions.
pub fn export_split(
    corpus: &ValidatedCorpus,
    labels: &[CaptionLabel],
    ratios: (f64, f64, f64),
    seed: u64,
) -> Result<LabelSplit, CorpusError> {
    if labels.is_empty() {
        return Err(CorpusError::EmptyLabelSet);
    }
    let (a, b, c) = ratios;
    if [a, b, c].iter().any(|r| !(0.0..=1.0).contains(r)) || (a + b + c - 1.0).abs() > 1e-9 {
        return Err(CorpusError::InvalidRatios(ratios));
    }

    let mut groups: BTreeMap<String, Vec<CaptionLabel>> = BTreeMap::new();
    for label in labels {
        let figure_id = corpus
            .caption(&label.caption_id)
            .map(|(f, _)| f.figure_id.clone())
            .ok_or_else(|| CorpusError::UnknownReference {
                what: "caption",
                id: label.caption_id.clone(),
                line: None,
            })?;
        groups.entry(figure_id).or_default().push(label.clone());
    }
    let mut groups: Vec<Vec<CaptionLabel>> = groups.into_values().collect();
    groups.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));

    let n = labels.len() as f64;
    let train_target = (a * n).round() as usize;
    let val_target = (b * n).round() as usize;
    let mut split = LabelSplit {
        train: Vec::new(),
        validation: Vec::new(),
        test: Vec::new(),
    };
    for group in groups {
        let bucket = if split.train.len() < train_target {
            &mut split.train
        } else if split.validation.len() < val_target {
            &mut split.validation
        } else {
            &mut split.test
        };
        bucket.extend(group);
    }
    Ok(split)
}

impl LabelSplit {
    /// Writes `train.csv`, `validation.csv` and `test.csv` into `dir`.
    pub fn write_dir(&self, dir: &Path) -> Result<Vec<PathBuf>, CorpusError> {
        fs::create_dir_all(dir).map_err(|source| CorpusError::Io {
            path: dir.to_path_buf(),
            source,
        })?;
        let mut written = Vec::new();
        for (name, rows) in [("train", &self.train), ("validation", &self.validation), ("test", &self.test)] {
            let path = dir.join(format!("{name}.csv"));
            write_label_csv(&path, rows)?;
            written.push(path);
        }
        Ok(written)
    }
}

pub fn write_label_csv(path: &Path, rows: &[CaptionLabel]) -> Result<(), CorpusError> {
    let io = |source| CorpusError::Io {
        path: path.to_path_buf(),
        source,
    };
    let write = || -> Result<(), csv::Error> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["caption_id", "label"])?;
        for row in rows {
            w.write_record([row.caption_id.as_str(), row.label.as_str()])?;
        }
        w.flush()?;
        Ok(())
    };
    write().map_err(|e| io(std::io::Error::other(e)))
}

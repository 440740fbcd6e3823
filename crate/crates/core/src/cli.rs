//! The `figjudge` command line.
//!
//! Every command writes its outputs into a fresh directory under `--out`
//! named `<UTC timestamp>-<command>-<config hash>`, always including a
//! `manifest.json`. Exit codes: 0 success, 1 validation error, 2 backend or
//! transport failure, 3 degenerate statistics.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::corpus::{
    derive_labels, error_census, export_split, load_corpus_report, write_label_csv, CorpusError, LabelSource,
    ValidatedCorpus, DEFAULT_SPLIT,
};
use crate::fixture::{generate, ErrorPlan, FixtureConfig};
use crate::judge::{
    make_anti_oracle_backend, make_noisy_backend, make_oracle_backend, DecodingParams, Judge, JudgeBackend,
    JudgeError, RemoteBackend, RemoteConfig, ResponseCache, RetryPolicy, ScriptedBackend,
};
use crate::report::{
    ablation_csv, ablation_markdown, battery_csv, battery_markdown, build_ablation, census_markdown,
    features_markdown,
};
use crate::scorefile::{ScoreFile, ScoreFileError};
use crate::stats::{agreement, correlation_battery, feature_helpfulness_correlation, HelpfulnessJudge, StatsError};
use crate::strategies::{run_strategy, ContextMode, RunOptions, StrategyError, StrategyKind, StrategySpec};

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("backend failure: {0}")]
    Backend(String),
    #[error("degenerate statistics: {0}")]
    Degenerate(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Backend(_) => 2,
            CliError::Degenerate(_) => 3,
        }
    }
}

impl From<CorpusError> for CliError {
    fn from(e: CorpusError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<ScoreFileError> for CliError {
    fn from(e: ScoreFileError) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<JudgeError> for CliError {
    fn from(e: JudgeError) -> Self {
        match e {
            JudgeError::InvalidRequest(_) | JudgeError::MissingRanking(_) => CliError::Validation(e.to_string()),
            _ => CliError::Backend(e.to_string()),
        }
    }
}

impl From<StrategyError> for CliError {
    fn from(e: StrategyError) -> Self {
        match e {
            StrategyError::Judge(j) => j.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        match e {
            StatsError::DegenerateSeries(_) | StatsError::TooShort(_) | StatsError::NonFinite => {
                CliError::Degenerate(e.to_string())
            }
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn io_error(path: &Path, e: std::io::Error) -> CliError {
    CliError::Validation(format!("cannot write {}: {e}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BackendKind {
    Remote,
    Oracle,
    AntiOracle,
    Noisy,
    Scripted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ContextArg {
    All,
    First,
    Random,
    Caption,
}

impl ContextArg {
    fn mode(self, seed: u64) -> ContextMode {
        match self {
            ContextArg::All => ContextMode::All,
            ContextArg::First => ContextMode::First,
            ContextArg::Random => ContextMode::Random { seed },
            ContextArg::Caption => ContextMode::CaptionOnly,
        }
    }
}

fn default_flip_prob() -> f64 {
    0.5
}

fn default_in_flight() -> usize {
    8
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BackendSpec {
    pub kind: BackendKind,
    #[serde(default)]
    pub endpoint: Option<String>,
    #[serde(default)]
    pub model: Option<String>,
    #[serde(default)]
    pub params: DecodingParams,
    /// Noisy backend only.
    #[serde(default = "default_flip_prob")]
    pub flip_prob: f64,
    /// Scripted backend only.
    #[serde(default)]
    pub script: Option<PathBuf>,
    #[serde(default)]
    pub requests_per_minute: Option<u32>,
    #[serde(default = "default_in_flight")]
    pub max_in_flight: usize,
    #[serde(default)]
    pub retry: RetryPolicy,
}

fn default_parallel() -> usize {
    4
}

fn default_max_questions() -> usize {
    5
}

fn default_out() -> PathBuf {
    PathBuf::from("runs")
}

/// Everything that determines a judge or ablation run. Serialized into the
/// run manifest; API keys never appear here.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub corpus_path: PathBuf,
    pub backend: BackendSpec,
    pub strategy: StrategyKind,
    pub context: ContextArg,
    /// Seeds the random context mode, few-shot exemplars and the noisy backend.
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_max_questions")]
    pub max_questions: usize,
    #[serde(default)]
    pub cache_dir: Option<PathBuf>,
    #[serde(default = "default_parallel")]
    pub parallel: usize,
    #[serde(default = "default_out")]
    pub out_dir: PathBuf,
}

impl RunConfig {
    pub fn strategy_spec(&self, context: ContextMode) -> StrategySpec {
        StrategySpec {
            max_questions: self.max_questions,
            ..StrategySpec::new(self.strategy, context).with_exemplar_seed(self.seed)
        }
    }

    pub fn hash(&self) -> String {
        config_hash(&serde_json::to_value(self).expect("config serializes"))
    }
}

fn config_hash(value: &Value) -> String {
    hex::encode(&Sha256::digest(value.to_string().as_bytes())[..6])
}

#[derive(Debug, Parser)]
#[command(name = "figjudge", version, about = "Reference-free LLM-judge evaluation of scientific figure captions")]
pub struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, action = clap::ArgAction::Count, global = true)]
    pub verbose: u8,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Validate a corpus and print its error census.
    Ingest {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Score every valid caption with one strategy and backend.
    Judge(RunArgs),
    /// Correlate score files with the PhD rankings.
    Analyze {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, required = true, num_args = 1..)]
        scores: Vec<PathBuf>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Run all four context modes and t-test each against caption-only.
    Ablate(RunArgs),
    /// Kendall agreement between two PhD rankings of the same figures.
    Agreement {
        #[arg(long)]
        corpus: PathBuf,
        /// Defaults to the first ranking of each doubly-ranked figure.
        #[arg(long, requires = "annotator_b")]
        annotator_a: Option<String>,
        #[arg(long, requires = "annotator_a")]
        annotator_b: Option<String>,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Correlate caption features with helpfulness.
    Features {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Derive binary helpfulness labels and write train/validation/test splits.
    ExportLabels {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, value_enum, default_value = "phd")]
        source: LabelArg,
        #[arg(long, default_value_t = 2023)]
        seed: u64,
        #[arg(long, default_value = "runs")]
        out: PathBuf,
    },
    /// Write a synthetic corpus as JSONL.
    Fixture {
        /// Output file.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2023)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        figures_per_domain: usize,
        /// Figures that receive a second PhD ranking.
        #[arg(long, default_value_t = 0)]
        agreement_figures: usize,
        /// No extraction errors.
        #[arg(long)]
        clean: bool,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum LabelArg {
    Phd,
    Undergrad,
}

/// Flags for `judge` and `ablate`. Flags override values from `--config`.
#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON file mirroring the run configuration.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// zs, fs, cot-qa or cot-yn.
    #[arg(long)]
    pub strategy: Option<String>,
    #[arg(long, value_enum)]
    pub context: Option<ContextArg>,
    #[arg(long, value_enum)]
    pub backend: Option<BackendKind>,
    #[arg(long)]
    pub model: Option<String>,
    /// Chat-completions URL for the remote backend.
    #[arg(long)]
    pub endpoint: Option<String>,
    /// Seeds random context, exemplar sampling and the noisy backend.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub cache_dir: Option<PathBuf>,
    /// Concurrent captions.
    #[arg(long)]
    pub parallel: Option<usize>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Scripted backend reply table (JSON).
    #[arg(long)]
    pub script: Option<PathBuf>,
    /// Noisy backend replacement probability.
    #[arg(long)]
    pub flip_prob: Option<f64>,
    /// Upper bound on generated chain-of-thought questions.
    #[arg(long)]
    pub max_questions: Option<usize>,
    #[arg(long)]
    pub requests_per_minute: Option<u32>,
}

impl RunArgs {
    /// Merges `--config` (if any) with the flags.
    pub fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut config: Value = match &self.config {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .map_err(|e| CliError::Validation(format!("cannot read {}: {e}", path.display())))?;
                serde_json::from_str(&text)
                    .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?
            }
            None => json!({}),
        };
        let obj = config
            .as_object_mut()
            .ok_or_else(|| CliError::Validation("config must be a JSON object".into()))?;
        let set = |obj: &mut serde_json::Map<String, Value>, key: &str, v: Value| {
            obj.insert(key.to_string(), v);
        };
        if let Some(v) = &self.corpus {
            set(obj, "corpus_path", json!(v));
        }
        if let Some(v) = &self.strategy {
            set(obj, "strategy", json!(v));
        }
        if let Some(v) = self.context {
            set(obj, "context", json!(v));
        }
        if let Some(v) = self.seed {
            set(obj, "seed", json!(v));
        }
        if let Some(v) = &self.cache_dir {
            set(obj, "cache_dir", json!(v));
        }
        if let Some(v) = self.parallel {
            set(obj, "parallel", json!(v));
        }
        if let Some(v) = &self.out {
            set(obj, "out_dir", json!(v));
        }
        if let Some(v) = self.max_questions {
            set(obj, "max_questions", json!(v));
        }
        obj.entry("context").or_insert(json!("all"));
        let backend = obj.entry("backend").or_insert(json!({}));
        let backend = backend
            .as_object_mut()
            .ok_or_else(|| CliError::Validation("`backend` must be a JSON object".into()))?;
        if let Some(v) = self.backend {
            set(backend, "kind", json!(v));
        }
        if let Some(v) = &self.model {
            set(backend, "model", json!(v));
        }
        if let Some(v) = &self.endpoint {
            set(backend, "endpoint", json!(v));
        }
        if let Some(v) = &self.script {
            set(backend, "script", json!(v));
        }
        if let Some(v) = self.flip_prob {
            set(backend, "flip_prob", json!(v));
        }
        if let Some(v) = self.requests_per_minute {
            set(backend, "requests_per_minute", json!(v));
        }
        let config: RunConfig =
            serde_json::from_value(config).map_err(|e| CliError::Validation(format!("run configuration: {e}")))?;
        if config.parallel == 0 {
            return Err(CliError::Validation("--parallel must be at least 1".into()));
        }
        Ok(config)
    }
}

fn build_backend(spec: &BackendSpec, corpus: &ValidatedCorpus, seed: u64) -> Result<Arc<dyn JudgeBackend>, CliError> {
    let missing = |what: &str| CliError::Validation(format!("backend `{:?}` needs {what}", spec.kind));
    Ok(match spec.kind {
        BackendKind::Oracle => Arc::new(make_oracle_backend(corpus)?),
        BackendKind::AntiOracle => Arc::new(make_anti_oracle_backend(corpus)?),
        BackendKind::Noisy => Arc::new(make_noisy_backend(corpus, seed, spec.flip_prob)?),
        BackendKind::Scripted => {
            let path = spec.script.as_ref().ok_or_else(|| missing("--script"))?;
            Arc::new(ScriptedBackend::load(path)?)
        }
        BackendKind::Remote => {
            let endpoint = spec.endpoint.clone().ok_or_else(|| missing("--endpoint"))?;
            let model = spec.model.clone().ok_or_else(|| missing("--model"))?;
            Arc::new(RemoteBackend::from_env(RemoteConfig::new(endpoint, model)))
        }
    })
}

fn build_judge(config: &RunConfig, corpus: &ValidatedCorpus) -> Result<Judge, CliError> {
    config.backend.params.validate()?;
    let backend = build_backend(&config.backend, corpus, config.seed)?;
    let mut judge = Judge::new(backend)
        .with_params(config.backend.params.clone())
        .with_max_in_flight(config.backend.max_in_flight.max(1))
        .with_retry(config.backend.retry);
    if let Some(dir) = &config.cache_dir {
        judge = judge.with_cache(ResponseCache::on_disk(dir)?);
    }
    if let Some(rpm) = config.backend.requests_per_minute {
        judge = judge.with_rate_limit(rpm);
    }
    Ok(judge)
}

fn load(path: &Path) -> Result<ValidatedCorpus, CliError> {
    let outcome = load_corpus_report(path)?;
    for w in &outcome.warnings {
        log::warn!("{}:{}: ignoring unknown field `{}`", path.display(), w.line, w.field);
    }
    Ok(outcome.corpus)
}

/// A fresh output directory for one command invocation.
pub struct RunDir {
    pub path: PathBuf,
    command: String,
    config: Value,
    outputs: Vec<String>,
}

impl RunDir {
    pub fn create(out: &Path, command: &str, config: Value) -> Result<Self, CliError> {
        let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%SZ");
        let base = format!("{stamp}-{command}-{}", config_hash(&config));
        let mut path = out.join(&base);
        let mut n = 1;
        while path.exists() {
            n += 1;
            path = out.join(format!("{base}-{n}"));
        }
        fs::create_dir_all(&path).map_err(|e| io_error(&path, e))?;
        Ok(Self {
            path,
            command: command.to_string(),
            config,
            outputs: Vec::new(),
        })
    }

    pub fn file(&mut self, name: &str) -> PathBuf {
        self.outputs.push(name.to_string());
        self.path.join(name)
    }

    pub fn write(&mut self, name: &str, contents: &str) -> Result<(), CliError> {
        let path = self.file(name);
        fs::write(&path, contents).map_err(|e| io_error(&path, e))
    }

    /// Writes `manifest.json` with the command, its configuration, the files
    /// written so far and any command-specific details.
    pub fn finish(mut self, details: Value) -> Result<PathBuf, CliError> {
        let path = self.file("manifest.json");
        let manifest = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "timestamp": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
            "config": self.config,
            "outputs": self.outputs,
            "details": details,
        });
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        fs::write(&path, text).map_err(|e| io_error(&path, e))?;
        Ok(self.path)
    }
}

pub fn cmd_ingest(corpus_path: &Path, out: &Path) -> Result<PathBuf, CliError> {
    let outcome = load_corpus_report(corpus_path)?;
    let corpus = outcome.corpus;
    let census = error_census(&corpus);
    let table = census_markdown(&census);
    print!("{table}");
    for w in &outcome.warnings {
        println!("warning: line {}: unknown field `{}`", w.line, w.field);
    }
    let mut dir = RunDir::create(out, "ingest", json!({ "corpus_path": corpus_path }))?;
    dir.write("census.md", &table)?;
    dir.write("census.json", &serde_json::to_string_pretty(&census).expect("census serializes"))?;
    dir.finish(json!({
        "corpus_hash": corpus.content_hash(),
        "figures": corpus.figures().len(),
        "unknown_fields": outcome.warnings.len(),
    }))
}

fn failure_error(manifest: &crate::strategies::RunManifest) -> Option<CliError> {
    let backend_failures = manifest
        .failures
        .iter()
        .filter(|f| f.kind == "transport" || f.kind == "backend")
        .count();
    (backend_failures > 0).then(|| {
        CliError::Backend(format!(
            "{backend_failures} of {} captions failed at the backend (see manifest)",
            manifest.valid_captions
        ))
    })
}

/// Returns the run directory; a backend error is returned only after all
/// outputs have been written.
pub fn cmd_judge(config: &RunConfig) -> Result<PathBuf, CliError> {
    let corpus = load(&config.corpus_path)?;
    let judge = build_judge(config, &corpus)?;
    let spec = config.strategy_spec(config.context.mode(config.seed));
    let run = run_strategy(&corpus, &spec, &judge, RunOptions { parallel: config.parallel })?;

    let config_value = serde_json::to_value(config).expect("config serializes");
    let mut dir = RunDir::create(&config.out_dir, "judge", config_value)?;
    let scores_path = dir.file("scores.jsonl");
    ScoreFile::from_run(&run).write(&scores_path)?;
    let m = &run.manifest;
    println!(
        "{}/{}: scored {} of {} captions ({} failed, {} figures without mentions); {} backend calls, {} cache hits",
        m.strategy_id,
        m.backend_id,
        m.scored,
        m.valid_captions,
        m.failures.len(),
        m.no_mentions.len(),
        m.calls.backend_calls,
        m.calls.cache_hits
    );
    let failure = failure_error(m);
    let path = dir.finish(serde_json::to_value(m).expect("manifest serializes"))?;
    println!("{}", path.display());
    match failure {
        Some(e) => Err(e),
        None => Ok(path),
    }
}

pub fn cmd_analyze(corpus_path: &Path, scores: &[PathBuf], out: &Path) -> Result<PathBuf, CliError> {
    let corpus = load(corpus_path)?;
    let mut reports = Vec::new();
    let mut inputs = Vec::new();
    for path in scores {
        let file = ScoreFile::read(path)?;
        if file.header.corpus_hash != corpus.content_hash() {
            log::warn!("{} was scored against a different corpus", path.display());
        }
        reports.extend(correlation_battery(&file.scores, &corpus)?);
        inputs.push(json!({ "path": path, "strategy": file.header.strategy_id, "backend": file.header.backend_id }));
    }
    let md = battery_markdown(&reports);
    print!("{md}");
    let mut dir = RunDir::create(
        out,
        "analyze",
        json!({ "corpus_path": corpus_path, "scores": scores }),
    )?;
    dir.write("report.csv", &battery_csv(&reports))?;
    dir.write("report.md", &md)?;
    dir.finish(json!({ "inputs": inputs, "corpus_hash": corpus.content_hash() }))
}

pub fn cmd_ablate(config: &RunConfig) -> Result<PathBuf, CliError> {
    let corpus = load(&config.corpus_path)?;
    let judge = build_judge(config, &corpus)?;
    let config_value = serde_json::to_value(config).expect("config serializes");
    let mut dir = RunDir::create(&config.out_dir, "ablate", config_value)?;

    let mut runs = Vec::new();
    let mut manifests = Vec::new();
    let mut no_mentions = Vec::new();
    let mut failure = None;
    for mode in ContextMode::ablation_modes(config.seed) {
        let spec = config.strategy_spec(mode);
        let run = run_strategy(&corpus, &spec, &judge, RunOptions { parallel: config.parallel })?;
        ScoreFile::from_run(&run).write(&dir.file(&format!("scores-{}.jsonl", mode.id())))?;
        if mode == ContextMode::All {
            no_mentions = run.manifest.no_mentions.clone();
        }
        failure = failure.or_else(|| failure_error(&run.manifest));
        manifests.push(serde_json::to_value(&run.manifest).expect("manifest serializes"));
        runs.push((mode.id().to_string(), run.scores));
    }
    let report = build_ablation(&runs, ContextMode::CaptionOnly.id(), &corpus, no_mentions)?;
    let md = ablation_markdown(&report);
    print!("{md}");
    dir.write("ablation.md", &md)?;
    dir.write("ablation.csv", &ablation_csv(&report))?;
    let path = dir.finish(json!({ "runs": manifests }))?;
    println!("{}", path.display());
    match failure {
        Some(e) => Err(e),
        None => Ok(path),
    }
}

pub fn cmd_agreement(
    corpus_path: &Path,
    annotators: Option<(&str, &str)>,
    out: &Path,
) -> Result<PathBuf, CliError> {
    let corpus = load(corpus_path)?;
    let mut side_a = Vec::new();
    let mut side_b = Vec::new();
    for figure in corpus.figures() {
        let rankings: Vec<_> = corpus.rankings_for(&figure.figure_id).collect();
        let pair = match annotators {
            Some((a, b)) => (
                rankings.iter().find(|r| r.annotator_id == a),
                rankings.iter().find(|r| r.annotator_id == b),
            ),
            None => (rankings.first(), rankings.get(1)),
        };
        if let (Some(a), Some(b)) = pair {
            side_a.push((*a).clone());
            side_b.push((*b).clone());
        }
    }
    if side_a.is_empty() {
        return Err(CliError::Validation("no figure carries two PhD rankings to compare".into()));
    }
    let tau = agreement(&side_a, &side_b)?;
    println!("Kendall agreement over {} figures: {}", side_a.len(), crate::report::fmt3(tau));
    let mut dir = RunDir::create(
        out,
        "agreement",
        json!({ "corpus_path": corpus_path, "annotators": annotators }),
    )?;
    dir.write(
        "agreement.json",
        &serde_json::to_string_pretty(&json!({ "figures": side_a.len(), "kendall_tau": tau })).expect("serializes"),
    )?;
    dir.finish(json!({ "corpus_hash": corpus.content_hash() }))
}

pub fn cmd_features(corpus_path: &Path, out: &Path) -> Result<PathBuf, CliError> {
    let corpus = load(corpus_path)?;
    let table: Vec<_> = [HelpfulnessJudge::Phd, HelpfulnessJudge::Undergrad]
        .into_iter()
        .map(|j| (j, feature_helpfulness_correlation(&corpus, j)))
        .collect();
    if table.iter().all(|(_, row)| row.values().all(Result::is_err)) {
        let (_, row) = &table[0];
        let err = row.values().next().and_then(|r| r.clone().err()).expect("five features");
        return Err(err.into());
    }
    let md = features_markdown(&table);
    print!("{md}");
    let values: Vec<Value> = table
        .iter()
        .map(|(j, row)| {
            let cells: serde_json::Map<String, Value> = row
                .iter()
                .map(|(f, r)| (f.label().to_string(), r.as_ref().map_or(Value::Null, |v| json!(v))))
                .collect();
            json!({ "judge": j, "correlations": cells })
        })
        .collect();
    let mut dir = RunDir::create(out, "features", json!({ "corpus_path": corpus_path }))?;
    dir.write("features.md", &md)?;
    dir.write("features.json", &serde_json::to_string_pretty(&values).expect("serializes"))?;
    dir.finish(json!({ "corpus_hash": corpus.content_hash() }))
}

pub fn cmd_export_labels(corpus_path: &Path, source: LabelArg, seed: u64, out: &Path) -> Result<PathBuf, CliError> {
    let corpus = load(corpus_path)?;
    let label_source = match source {
        LabelArg::Phd => LabelSource::PhdRankings,
        LabelArg::Undergrad => LabelSource::UndergradRatings,
    };
    let labels = derive_labels(&corpus, label_source)?;
    let split = export_split(&corpus, &labels, DEFAULT_SPLIT, seed)?;
    let mut dir = RunDir::create(
        out,
        "export-labels",
        json!({ "corpus_path": corpus_path, "source": source, "seed": seed }),
    )?;
    let all = dir.file("labels.csv");
    write_label_csv(&all, &labels)?;
    for name in ["train", "validation", "test"] {
        dir.file(&format!("{name}.csv"));
    }
    split.write_dir(&dir.path)?;
    println!(
        "{} labels: {} train, {} validation, {} test",
        labels.len(),
        split.train.len(),
        split.validation.len(),
        split.test.len()
    );
    dir.finish(json!({
        "corpus_hash": corpus.content_hash(),
        "labels": labels.len(),
        "train": split.train.len(),
        "validation": split.validation.len(),
        "test": split.test.len(),
    }))
}

pub fn cmd_fixture(out: &Path, config: &FixtureConfig) -> Result<PathBuf, CliError> {
    let corpus = generate(config);
    corpus.write_jsonl(out)?;
    let manifest_path = PathBuf::from(format!("{}.manifest.json", out.display()));
    let manifest = json!({
        "command": "fixture",
        "version": env!("CARGO_PKG_VERSION"),
        "config": config,
        "corpus_hash": corpus.content_hash(),
        "valid_captions": corpus.valid_caption_ids().len(),
    });
    fs::write(&manifest_path, serde_json::to_string_pretty(&manifest).expect("serializes"))
        .map_err(|e| io_error(&manifest_path, e))?;
    println!(
        "wrote {} figures ({} valid captions) to {}",
        corpus.figures().len(),
        corpus.valid_caption_ids().len(),
        out.display()
    );
    Ok(out.to_path_buf())
}

pub fn run(cli: Cli) -> Result<PathBuf, CliError> {
    match cli.command {
        Command::Ingest { corpus, out } => cmd_ingest(&corpus, &out),
        Command::Judge(args) => cmd_judge(&args.resolve()?),
        Command::Analyze { corpus, scores, out } => cmd_analyze(&corpus, &scores, &out),
        Command::Ablate(args) => cmd_ablate(&args.resolve()?),
        Command::Agreement {
            corpus,
            annotator_a,
            annotator_b,
            out,
        } => {
            let pair = annotator_a.as_deref().zip(annotator_b.as_deref());
            cmd_agreement(&corpus, pair, &out)
        }
        Command::Features { corpus, out } => cmd_features(&corpus, &out),
        Command::ExportLabels {
            corpus,
            source,
            seed,
            out,
        } => cmd_export_labels(&corpus, source, seed, &out),
        Command::Fixture {
            out,
            seed,
            figures_per_domain,
            agreement_figures,
            clean,
        } => {
            let config = FixtureConfig {
                figures_per_domain,
                seed,
                errors: if clean { ErrorPlan::NONE } else { ErrorPlan::PAPER },
                agreement_figures,
                ..FixtureConfig::default()
            };
            if !clean && figures_per_domain != FixtureConfig::default().figures_per_domain {
                return Err(CliError::Validation(
                    "the default error plan needs 200 figures per domain; pass --clean for other sizes".into(),
                ));
            }
            cmd_fixture(&out, &config)
        }
    }
}

pub fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(_) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

//! Acceptance suite: one PASS/FAIL line per criterion, then a single
//! assertion over all of them. The lines go straight to stderr so they
//! show up without `--nocapture`.

mod common;

use std::collections::BTreeMap;
use std::io::Write;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use figjudge::corpus::{derive_labels, error_census, BinaryLabel, Helpfulness, LabelSource, ValidatedCorpus};
use figjudge::fixture::{generate, paper_mirroring, ErrorPlan, FixtureConfig};
use figjudge::judge::{
    make_anti_oracle_backend, make_noisy_backend, make_oracle_backend, parse_score, Judge, JudgeBackend, JudgeScore,
    ParseStatus, ScriptedBackend,
};
use figjudge::report::{ablation_markdown, battery_csv, battery_markdown, build_ablation};
use figjudge::scorefile::ScoreFile;
use figjudge::stats::{
    correlation_battery, kendall_tau_b, pearson, spearman, CorrelationReport, PairedSeries, RankConversion,
};
use figjudge::strategies::{
    cot_score, run_cot, run_strategy, ContextMode, QuestionStyle, RunOptions, StrategyKind, StrategySpec,
};

type Outcome = Result<String, String>;

fn check(ok: bool, detail: String) -> Outcome {
    if ok {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

fn judge(backend: impl JudgeBackend + 'static) -> Judge {
    Judge::new(Arc::new(backend))
}

fn score(corpus: &ValidatedCorpus, spec: &StrategySpec, judge: &Judge, parallel: usize) -> Result<Vec<JudgeScore>, String> {
    let run = run_strategy(corpus, spec, judge, RunOptions { parallel }).map_err(|e| e.to_string())?;
    if !run.manifest.failures.is_empty() {
        return Err(format!("{} caption failures", run.manifest.failures.len()));
    }
    Ok(run.scores)
}

fn battery(scores: &[JudgeScore], corpus: &ValidatedCorpus) -> Result<BTreeMap<RankConversion, CorrelationReport>, String> {
    let reports = correlation_battery(scores, corpus).map_err(|e| e.to_string())?;
    Ok(reports.into_iter().map(|r| (r.conversion, r)).collect())
}

fn zero_shot() -> StrategySpec {
    StrategySpec::new(StrategyKind::ZeroShot, ContextMode::All)
}

/// Seeded random series with ties agree with the quadratic definitions.
fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let mut worst = 0.0f64;
    let mut compared = 0;
    for _ in 0..1000 {
        let n = rng.random_range(2..=50);
        let levels = rng.random_range(2..=8);
        let x: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..levels))).collect();
        let y: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..levels))).collect();
        let Ok(series) = PairedSeries::unlabeled(x.clone(), y.clone()) else {
            continue;
        };
        let (Ok(tau), Ok(rs)) = (kendall_tau_b(&series), spearman(&series)) else {
            continue;
        };
        worst = worst
            .max((tau - common::naive_tau_b(&x, &y)).abs())
            .max((rs - common::naive_spearman(&x, &y)).abs());
        compared += 1;
    }
    let elapsed = start.elapsed();
    check(
        worst <= 1e-12 && compared >= 900 && elapsed < Duration::from_secs(10),
        format!("{compared} series, max deviation {worst:.1e}, {elapsed:.2?}"),
    )
}

/// Hand-computed anchors.
fn criterion_2() -> Outcome {
    let s = |x: &[f64], y: &[f64]| PairedSeries::unlabeled(x.to_vec(), y.to_vec()).unwrap();
    let rho = pearson(&s(&[1., 2., 3., 4.], &[1., 3., 2., 4.])).map_err(|e| e.to_string())?;
    let tau = kendall_tau_b(&s(&[1., 2., 3.], &[1., 3., 2.])).map_err(|e| e.to_string())?;
    let rs = spearman(&s(&[1., 2., 3.], &[3., 1., 2.])).map_err(|e| e.to_string())?;
    check(
        close(rho, 0.8, 1e-12) && close(tau, 1.0 / 3.0, 1e-12) && close(rs, -0.5, 1e-12),
        format!("pearson {rho}, kendall {tau}, spearman {rs}"),
    )
}

/// Oracle and anti-oracle backends recover the human ranking exactly.
fn criterion_3(corpus: &ValidatedCorpus) -> Outcome {
    let start = Instant::now();
    let oracle = judge(make_oracle_backend(corpus).map_err(|e| e.to_string())?);
    let scores = score(corpus, &zero_shot(), &oracle, 4)?;
    let r = battery(&scores, corpus)?;
    let rev = &r[&RankConversion::Reversed];
    let anti = judge(make_anti_oracle_backend(corpus).map_err(|e| e.to_string())?);
    let anti_scores = score(corpus, &zero_shot(), &anti, 4)?;
    let anti_tau = battery(&anti_scores, corpus)?[&RankConversion::Reversed].tau;
    let elapsed = start.elapsed();
    check(
        rev.n == 3159
            && [rev.rho, rev.tau, rev.r_s].iter().all(|&v| close(v, 1.0, 1e-9))
            && close(anti_tau, -1.0, 1e-9)
            && elapsed < Duration::from_secs(30),
        format!(
            "n = {}, oracle rho/tau/r_s = {:.9}/{:.9}/{:.9}, anti-oracle tau = {anti_tau:.9}, {elapsed:.2?}",
            rev.n, rev.rho, rev.tau, rev.r_s
        ),
    )
}

/// A fully noisy backend carries no signal and is reproducible.
fn criterion_4(corpus: &ValidatedCorpus) -> Outcome {
    let run = |seed| -> Result<Vec<JudgeScore>, String> {
        let noisy = judge(make_noisy_backend(corpus, seed, 1.0).map_err(|e| e.to_string())?);
        score(corpus, &zero_shot(), &noisy, 4)
    };
    let first = run(11)?;
    let json = |s: &[JudgeScore]| serde_json::to_string(s).expect("scores serialize");
    let same = json(&first) == json(&run(11)?);
    let tau = battery(&first, corpus)?[&RankConversion::Reversed].tau;
    check(tau.abs() < 0.05 && same, format!("tau = {tau:.4}, repeat identical: {same}"))
}

/// Error census of the paper-mirroring fixture.
fn criterion_5(corpus: &ValidatedCorpus) -> Outcome {
    let c = error_census(corpus);
    check(
        (c.image_extraction, c.text_extraction, c.not_line_chart, c.compound_figure, c.union, c.valid_captions)
            == (102, 242, 101, 23, 441, 3159),
        format!(
            "{}/{}/{}/{}, union {}, valid {}",
            c.image_extraction, c.text_extraction, c.not_line_chart, c.compound_figure, c.union, c.valid_captions
        ),
    )
}

const SCORE_FIXTURES: &[(&str, u8, ParseStatus)] = &[
    ("Rating: 5. The caption clearly states the main trend.", 5, ParseStatus::Parsed),
    ("I cannot evaluate this caption.", 1, ParseStatus::Fallback),
    ("I would rate it 4 out of 6 because it mentions the axes.", 4, ParseStatus::Parsed),
    ("**Rating:** 3\n\nExplanation: the caption names the metric but not the result.", 3, ParseStatus::Parsed),
    ("Usefulness rating: 6 - the caption summarizes the main finding.", 6, ParseStatus::Parsed),
    ("Score: 2/6. The caption is vague.", 2, ParseStatus::Parsed),
    ("5\n\nThe caption covers the key trend described in the paragraphs.", 5, ParseStatus::Parsed),
    ("The caption is informative. I'd give it a 4/6.", 4, ParseStatus::Parsed),
    ("Based on the paragraphs, the caption deserves a rating of 3 because it lacks the takeaway.", 3, ParseStatus::Parsed),
    ("On a scale from 1 to 6, this caption is a 5.", 1, ParseStatus::Fallback),
    ("", 1, ParseStatus::Fallback),
    ("Rating: 10/10", 1, ParseStatus::Fallback),
    ("Rating (1-6): 4\nReason: mentions both baselines.", 4, ParseStatus::Parsed),
    ("Score = 6. Excellent caption.", 6, ParseStatus::Parsed),
    ("As an AI language model, I don't have access to the figure, so I can't provide a rating.", 1, ParseStatus::Fallback),
    ("Rating: 4.5", 1, ParseStatus::Fallback),
    ("3. The caption only restates the axis labels.", 3, ParseStatus::Parsed),
    ("My rating is 2. The caption is generic and does not mention the main result.", 2, ParseStatus::Parsed),
    ("The caption is rated 5 out of 6.", 5, ParseStatus::Parsed),
    ("Overall score - 1: the caption is unrelated to the paragraphs.", 1, ParseStatus::Parsed),
];

/// Score extraction on the reply fixture suite.
fn criterion_6() -> Outcome {
    let wrong: Vec<&str> = SCORE_FIXTURES
        .iter()
        .filter(|&&(text, s, status)| parse_score(text) != (s, status))
        .map(|&(text, _, _)| text)
        .collect();
    check(
        wrong.is_empty() && SCORE_FIXTURES.len() == 20,
        format!("{} of {} replies as expected {wrong:?}", SCORE_FIXTURES.len() - wrong.len(), SCORE_FIXTURES.len()),
    )
}

/// Chain-of-thought fraction and band, both from the formula and through a
/// scripted two-phase run.
fn criterion_7() -> Outcome {
    let corpus = generate(&FixtureConfig {
        figures_per_domain: 1,
        seed: 3,
        errors: ErrorPlan::NONE,
        empty_mention_rate: 0.0,
        ..FixtureConfig::default()
    });
    let (figure, caption) = corpus.valid_captions().next().ok_or("empty fixture")?;
    let mut fractions = Vec::new();
    let mut bands = Vec::new();
    let mut mismatches = Vec::new();
    for m in 1..=5usize {
        for k in 0..=m {
            let (f, b) = cot_score(k, m);
            if f != k as f64 / m as f64 || b != 1.0 + (5 * k) as f64 / m as f64 {
                mismatches.push(format!("formula {k}/{m}"));
            }
            let questions: String = (1..=m).map(|i| format!("{i}. Does the caption state fact {i}?\n")).collect();
            let answers: String = (1..=m).map(|i| format!("{i}. {}\n", if i <= k { "Yes" } else { "No" })).collect();
            let backend = ScriptedBackend::from_table(
                "script",
                [
                    (format!("{}/cot-yn/questions", figure.figure_id), questions),
                    (format!("{}/cot-yn/answers", caption.caption_id), answers),
                ],
            );
            let s = run_cot(&judge(backend), figure, caption, "context", QuestionStyle::YesNo, 5)
                .map_err(|e| e.to_string())?;
            let fraction = s.cot.as_ref().map(|c| c.fraction);
            if fraction != Some(f) || s.score != b {
                mismatches.push(format!("pipeline {k}/{m}: fraction {fraction:?}, score {}", s.score));
            }
            fractions.push(f);
            bands.push(b);
        }
    }
    let series = PairedSeries::unlabeled(fractions, bands).map_err(|e| e.to_string())?;
    let tau = kendall_tau_b(&series).map_err(|e| e.to_string())?;
    let rs = spearman(&series).map_err(|e| e.to_string())?;
    check(
        mismatches.is_empty() && close(tau, 1.0, 1e-12) && close(rs, 1.0, 1e-12),
        format!("20 (k, m) pairs, fraction vs band tau = {tau}, r_s = {rs} {mismatches:?}"),
    )
}

fn ablation_runs(corpus: &ValidatedCorpus, judge: &Judge) -> Result<Vec<(String, Vec<JudgeScore>)>, String> {
    ContextMode::ablation_modes(7)
        .into_iter()
        .map(|mode| {
            let spec = StrategySpec::new(StrategyKind::ZeroShot, mode);
            Ok((mode.id().to_string(), score(corpus, &spec, judge, 4)?))
        })
        .collect()
}

/// Context ablation: the oracle ignores context, a context-sensitive judge
/// does not.
fn criterion_8(corpus: &ValidatedCorpus) -> Outcome {
    let oracle = judge(make_oracle_backend(corpus).map_err(|e| e.to_string())?);
    let report = build_ablation(&ablation_runs(corpus, &oracle)?, "caption", corpus, Vec::new()).map_err(|e| e.to_string())?;
    let oracle_tests: Vec<_> = report.rows.iter().filter_map(|r| r.ttest.map(|t| (r.mode.clone(), t))).collect();
    let oracle_ok = oracle_tests.len() == 3 && oracle_tests.iter().all(|(_, t)| t.t == 0.0 && t.p == 1.0);

    let probe = judge(ScriptedBackend::context_sensitive(7));
    let report = build_ablation(&ablation_runs(corpus, &probe)?, "caption", corpus, Vec::new()).map_err(|e| e.to_string())?;
    let probe_tests: Vec<_> = report.rows.iter().filter_map(|r| r.ttest.map(|t| (r.mode.clone(), t))).collect();
    let probe_ok = probe_tests.len() == 3 && probe_tests.iter().all(|(_, t)| t.p < 0.001 && t.n >= 20);
    let detail = probe_tests
        .iter()
        .map(|(m, t)| format!("{m}: p = {:.1e}, n = {}", t.p, t.n))
        .collect::<Vec<_>>()
        .join("; ");
    check(
        oracle_ok && probe_ok,
        format!("oracle t = 0, p = 1 for all modes: {oracle_ok}; context probe {detail}"),
    )
}

/// Two identical runs give byte-identical score files and reports.
fn criterion_9(corpus: &ValidatedCorpus) -> Outcome {
    let artifacts = || -> Result<Vec<String>, String> {
        let probe = judge(ScriptedBackend::context_sensitive(3));
        let spec = StrategySpec::new(StrategyKind::ZeroShot, ContextMode::Random { seed: 5 });
        let run = run_strategy(corpus, &spec, &probe, RunOptions { parallel: 4 }).map_err(|e| e.to_string())?;
        let reports = correlation_battery(&run.scores, corpus).map_err(|e| e.to_string())?;
        let ablation = build_ablation(&ablation_runs(corpus, &probe)?, "caption", corpus, run.manifest.no_mentions.clone())
            .map_err(|e| e.to_string())?;
        Ok(vec![
            ScoreFile::from_run(&run).to_jsonl(),
            battery_csv(&reports),
            battery_markdown(&reports),
            ablation_markdown(&ablation),
        ])
    };
    let a = artifacts()?;
    let b = artifacts()?;
    let bytes: usize = a.iter().map(String::len).sum();
    check(a == b, format!("{} artifacts, {bytes} bytes, identical: {}", a.len(), a == b))
}

/// Binary labels: three Yes and three No per figure from PhD rankings (on a
/// corpus where every caption is valid); Unsure counts as No for
/// undergraduate ratings.
fn criterion_10(complete: &ValidatedCorpus, corpus: &ValidatedCorpus) -> Outcome {
    let labels = derive_labels(complete, LabelSource::PhdRankings).map_err(|e| e.to_string())?;
    let mut per_figure: BTreeMap<&str, (usize, usize)> = BTreeMap::new();
    for l in &labels {
        let (figure, _) = complete.caption(&l.caption_id).ok_or("unknown caption")?;
        let e = per_figure.entry(figure.figure_id.as_str()).or_default();
        match l.label {
            BinaryLabel::Yes => e.0 += 1,
            BinaryLabel::No => e.1 += 1,
        }
    }
    let balanced = per_figure.len() == complete.figures().len() && per_figure.values().all(|&c| c == (3, 3));

    let labels = derive_labels(corpus, LabelSource::UndergradRatings).map_err(|e| e.to_string())?;
    let mut unsure = 0;
    let mut unsure_ok = true;
    for l in &labels {
        let ratings: Vec<_> = corpus.ratings_for(&l.caption_id).collect();
        if ratings.iter().all(|r| r.helpfulness == Helpfulness::Unsure) {
            unsure += 1;
            unsure_ok &= l.label == BinaryLabel::No;
        }
    }
    check(
        balanced && unsure > 0 && unsure_ok,
        format!("{} figures all 3/3: {balanced}; {unsure} Unsure captions labelled No: {unsure_ok}", per_figure.len()),
    )
}

#[test]
fn acceptance() {
    let paper = paper_mirroring(2023);
    let clean = generate(&FixtureConfig {
        figures_per_domain: 10,
        seed: 2023,
        errors: ErrorPlan::NONE,
        ..FixtureConfig::default()
    });
    let results: Vec<(u32, Outcome)> = vec![
        (1, criterion_1()),
        (2, criterion_2()),
        (3, criterion_3(&paper)),
        (4, criterion_4(&paper)),
        (5, criterion_5(&paper)),
        (6, criterion_6()),
        (7, criterion_7()),
        (8, criterion_8(&clean)),
        (9, criterion_9(&clean)),
        (10, criterion_10(&clean, &paper)),
    ];
    let mut failed = Vec::new();
    let mut err = std::io::stderr().lock();
    for (n, outcome) in &results {
        let line = match outcome {
            Ok(detail) => format!("criterion {n}: PASS ({detail})"),
            Err(detail) => {
                failed.push(*n);
                format!("criterion {n}: FAIL ({detail})")
            }
        };
        writeln!(err, "{line}").expect("stderr is writable");
    }
    drop(err);
    assert!(failed.is_empty(), "failing criteria: {failed:?}");
}

//! Plain-text renderings of analysis results: CSV for machines, Markdown
//! laid out like the tables they reproduce.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::corpus::{ErrorCensus, Feature, ValidatedCorpus};
use crate::judge::JudgeScore;
use crate::stats::{
    correlation_battery, paired_t_test, CorrelationReport, FeatureCorrelations, HelpfulnessJudge, RankConversion,
    StatsError, TTestResult,
};

/// Three decimals; negative zero prints as zero.
pub fn fmt3(x: f64) -> String {
    let s = format!("{x:.3}");
    if s == "-0.000" {
        "0.000".into()
    } else {
        s
    }
}

fn fmt_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".into()
    } else {
        fmt3(p)
    }
}

fn csv_string(header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header).expect("in-memory write");
    for row in rows {
        w.write_record(&row).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 fields")
}

/// One row per report: strategy, backend, conversion, rho, tau, r_s, n.
pub fn battery_csv(reports: &[CorrelationReport]) -> String {
    csv_string(
        &["strategy", "backend", "conversion", "rho", "tau", "r_s", "n"],
        reports.iter().map(|r| {
            vec![
                r.strategy_id.clone(),
                r.backend_id.clone(),
                r.conversion.as_str().to_string(),
                fmt3(r.rho),
                fmt3(r.tau),
                fmt3(r.r_s),
                r.n.to_string(),
            ]
        }),
    )
}

fn conversion_cells(reports: &[&CorrelationReport]) -> Vec<String> {
    let get = |c| reports.iter().find(|r| r.conversion == c);
    let mut cells = Vec::new();
    match get(RankConversion::Reversed) {
        Some(r) => cells.extend([fmt3(r.rho), fmt3(r.tau), fmt3(r.r_s)]),
        None => cells.extend(["n/a".to_string(), "n/a".to_string(), "n/a".to_string()]),
    }
    for c in [RankConversion::Reciprocal, RankConversion::ReversedReciprocal] {
        cells.push(get(c).map_or_else(|| "n/a".to_string(), |r| fmt3(r.rho)));
    }
    cells
}

const TABLE_LEGEND: &str = "(a) reversed rank, (b) reciprocal rank, (c) reversed reciprocal rank.\n";

/// Correlations grouped by backend and strategy: ρ/τ/r_s under the reversed
/// rank, then ρ under the two reciprocal conversions.
pub fn battery_markdown(reports: &[CorrelationReport]) -> String {
    let mut groups: Vec<((String, String), Vec<&CorrelationReport>)> = Vec::new();
    for r in reports {
        let key = (r.backend_id.clone(), r.strategy_id.clone());
        match groups.iter_mut().find(|(k, _)| *k == key) {
            Some((_, v)) => v.push(r),
            None => groups.push((key, vec![r])),
        }
    }
    let mut out = String::from(
        "| Backend | Strategy | ρ (a) | τ (a) | r_s (a) | ρ (b) | ρ (c) | n |\n|---|---|---:|---:|---:|---:|---:|---:|\n",
    );
    for ((backend, strategy), rs) in &groups {
        let n = rs.first().map_or(0, |r| r.n);
        out.push_str(&format!(
            "| {backend} | {strategy} | {} | {n} |\n",
            conversion_cells(rs).join(" | ")
        ));
    }
    out.push('\n');
    out.push_str(TABLE_LEGEND);
    out
}

/// One ablation row: the battery for a context mode and its paired t-test
/// against the caption-only run (absent for the caption-only row itself).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationRow {
    pub mode: String,
    /// Empty when the correlations are undefined for this input, for
    /// example because every score is the same; `note` then says why.
    pub reports: Vec<CorrelationReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    pub ttest: Option<TTestResult>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationReport {
    pub rows: Vec<AblationRow>,
    /// Figures without mentioning paragraphs, evaluated with empty context.
    pub no_mentions: Vec<String>,
}

/// Builds the ablation table. `runs` holds `(mode id, scores)`; the run whose
/// id equals `baseline` is the comparison target of every t-test. Scores are
/// paired by caption id over the captions present in both runs.
pub fn build_ablation(
    runs: &[(String, Vec<JudgeScore>)],
    baseline: &str,
    corpus: &ValidatedCorpus,
    no_mentions: Vec<String>,
) -> Result<AblationReport, StatsError> {
    let base: HashMap<&str, f64> = runs
        .iter()
        .find(|(id, _)| id == baseline)
        .map(|(_, s)| s.iter().map(|s| (s.caption_id.as_str(), s.score)).collect())
        .unwrap_or_default();
    let mut rows = Vec::new();
    for (mode, scores) in runs {
        let (reports, note) = match correlation_battery(scores, corpus) {
            Ok(r) => (r, None),
            Err(e @ (StatsError::DegenerateSeries(_) | StatsError::TooShort(_))) => (Vec::new(), Some(e.to_string())),
            Err(e) => return Err(e),
        };
        let ttest = if mode == baseline || base.is_empty() {
            None
        } else {
            let (a, b): (Vec<f64>, Vec<f64>) = scores
                .iter()
                .filter_map(|s| base.get(s.caption_id.as_str()).map(|&b| (s.score, b)))
                .unzip();
            Some(paired_t_test(&a, &b)?)
        };
        rows.push(AblationRow {
            mode: mode.clone(),
            reports,
            note,
            ttest,
        });
    }
    Ok(AblationReport { rows, no_mentions })
}

pub fn ablation_markdown(report: &AblationReport) -> String {
    let mut out = String::from(
        "| Input | ρ (a) | τ (a) | r_s (a) | ρ (b) | ρ (c) | T-Test |\n|---|---:|---:|---:|---:|---:|---:|\n",
    );
    for row in &report.rows {
        let refs: Vec<&CorrelationReport> = row.reports.iter().collect();
        let p = row.ttest.as_ref().map_or_else(|| "-".to_string(), |t| fmt_p(t.p));
        out.push_str(&format!("| {} | {} | {p} |\n", row.mode, conversion_cells(&refs).join(" | ")));
    }
    out.push('\n');
    out.push_str(TABLE_LEGEND);
    for row in &report.rows {
        if let Some(note) = &row.note {
            out.push_str(&format!("\n{}: correlations undefined ({note})\n", row.mode));
        }
    }
    out.push_str("\nPaired t-tests against the caption-only input:\n\n");
    for row in &report.rows {
        if let Some(t) = &row.ttest {
            let note = match t.degenerate {
                Some(d) => format!(" (degenerate: {d:?})"),
                None => String::new(),
            };
            out.push_str(&format!(
                "- {}: t = {:.4}, p = {:.3e}, n = {}, mean difference = {:.4}{note}\n",
                row.mode, t.t, t.p, t.n, t.mean_difference
            ));
        }
    }
    if !report.no_mentions.is_empty() {
        out.push_str(&format!(
            "\n{} figure(s) have no mentioning paragraphs and were evaluated with an empty context: {}\n",
            report.no_mentions.len(),
            report.no_mentions.join(", ")
        ));
    }
    out
}

pub fn ablation_csv(report: &AblationReport) -> String {
    csv_string(
        &["input", "conversion", "rho", "tau", "r_s", "n", "t", "p"],
        report.rows.iter().flat_map(|row| {
            row.reports.iter().map(move |r| {
                let (t, p) = row
                    .ttest
                    .as_ref()
                    .map_or((String::new(), String::new()), |t| (format!("{:.6}", t.t), format!("{:.6e}", t.p)));
                vec![
                    row.mode.clone(),
                    r.conversion.as_str().to_string(),
                    fmt3(r.rho),
                    fmt3(r.tau),
                    fmt3(r.r_s),
                    r.n.to_string(),
                    t,
                    p,
                ]
            })
        }),
    )
}

pub fn census_markdown(c: &ErrorCensus) -> String {
    format!(
        "| Error | Captions |\n|---|---:|\n\
         | Image extraction | {} |\n\
         | Text extraction | {} |\n\
         | Not a line chart | {} |\n\
         | Compound figure | {} |\n\
         | At least one error | {} |\n\n\
         {} captions in total, {} valid.\n",
        c.image_extraction,
        c.text_extraction,
        c.not_line_chart,
        c.compound_figure,
        c.union,
        c.total_captions,
        c.valid_captions
    )
}

pub fn features_markdown(table: &[(HelpfulnessJudge, FeatureCorrelations)]) -> String {
    let mut out = String::from("| Helpfulness by |");
    for f in Feature::ALL {
        out.push_str(&format!(" {} |", f.label()));
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(Feature::ALL.len()));
    out.push('\n');
    for (judge, row) in table {
        let name = match judge {
            HelpfulnessJudge::Phd => "PhD",
            HelpfulnessJudge::Undergrad => "Undergrad",
        };
        out.push_str(&format!("| {name} |"));
        for f in Feature::ALL {
            let cell = match row.get(&f) {
                Some(Ok(v)) => fmt3(*v),
                _ => "n/a".into(),
            };
            out.push_str(&format!(" {cell} |"));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn report(conversion: RankConversion, rho: f64) -> CorrelationReport {
        CorrelationReport {
            strategy_id: "zs".into(),
            backend_id: "oracle".into(),
            conversion,
            rho,
            tau: rho,
            r_s: rho,
            n: 10,
        }
    }

    #[test]
    fn formatting() {
        assert_eq!(fmt3(0.50149), "0.501");
        assert_eq!(fmt3(-0.0001), "0.000");
        assert_eq!(fmt_p(0.0004), "<0.001");
        assert_eq!(fmt_p(1.0), "1.000");
    }

    #[test]
    fn battery_tables() {
        let rs = vec![
            report(RankConversion::Reversed, 1.0),
            report(RankConversion::Reciprocal, 0.9),
            report(RankConversion::ReversedReciprocal, -0.878476),
        ];
        let csv = battery_csv(&rs);
        assert_eq!(csv.lines().next().unwrap(), "strategy,backend,conversion,rho,tau,r_s,n");
        assert_eq!(csv.lines().nth(3).unwrap(), "zs,oracle,reversed_reciprocal,-0.878,-0.878,-0.878,10");
        let md = battery_markdown(&rs);
        assert!(md.contains("| oracle | zs | 1.000 | 1.000 | 1.000 | 0.900 | -0.878 | 10 |"), "{md}");
    }

    #[test]
    fn census_table() {
        let c = ErrorCensus {
            image_extraction: 102,
            text_extraction: 242,
            not_line_chart: 101,
            compound_figure: 23,
            union: 441,
            total_captions: 3600,
            valid_captions: 3159,
        };
        let md = census_markdown(&c);
        assert!(md.contains("| At least one error | 441 |"));
        assert!(md.contains("3600 captions in total, 3159 valid."));
    }
}

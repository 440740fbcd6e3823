use std::collections::BTreeMap;

use super::{kendall_tau_b, PairedSeries, StatsError};
use crate::corpus::{CaptionSource, PhdRanking};

/// Inter-annotator agreement: Kendall's tau between the two six-item rankings
/// of each figure, averaged over figures.
pub fn agreement(rankings_a: &[PhdRanking], rankings_b: &[PhdRanking]) -> Result<f64, StatsError> {
    let by_figure = |rs: &[PhdRanking]| -> Result<BTreeMap<String, PhdRanking>, StatsError> {
        let mut map = BTreeMap::new();
        for r in rs {
            if map.insert(r.figure_id.clone(), r.clone()).is_some() {
                return Err(StatsError::FigureMismatch(format!("figure `{}` ranked twice by one side", r.figure_id)));
            }
        }
        Ok(map)
    };
    let a = by_figure(rankings_a)?;
    let b = by_figure(rankings_b)?;
    if a.len() != b.len() || a.keys().zip(b.keys()).any(|(x, y)| x != y) {
        let only_a: Vec<&String> = a.keys().filter(|k| !b.contains_key(*k)).collect();
        let only_b: Vec<&String> = b.keys().filter(|k| !a.contains_key(*k)).collect();
        return Err(StatsError::FigureMismatch(format!("only in A: {only_a:?}; only in B: {only_b:?}")));
    }
    if a.is_empty() {
        return Err(StatsError::TooShort(0));
    }

    let mut total = 0.0;
    for (figure, ra) in &a {
        let rb = &b[figure];
        let rank = |r: &PhdRanking, s| f64::from(r.rank_of(s).unwrap_or(0));
        let x = CaptionSource::ALL.iter().map(|&s| rank(ra, s)).collect();
        let y = CaptionSource::ALL.iter().map(|&s| rank(rb, s)).collect();
        total += kendall_tau_b(&PairedSeries::unlabeled(x, y)?)?;
    }
    Ok(total / a.len() as f64)
}

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::StatsError;

/// Judge scores `x` and human-derived values `y`, paired by caption id.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairedSeries {
    ids: Vec<String>,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl PairedSeries {
    pub fn new(ids: Vec<String>, x: Vec<f64>, y: Vec<f64>) -> Result<Self, StatsError> {
        if ids.len() != x.len() || x.len() != y.len() {
            return Err(StatsError::LengthMismatch(vec![ids.len(), x.len(), y.len()]));
        }
        if x.len() < 2 {
            return Err(StatsError::TooShort(x.len()));
        }
        if x.iter().chain(&y).any(|v| !v.is_finite()) {
            return Err(StatsError::NonFinite);
        }
        Ok(Self { ids, x, y })
    }

    /// Series with positional ids, for callers that pair data themselves.
    pub fn unlabeled(x: Vec<f64>, y: Vec<f64>) -> Result<Self, StatsError> {
        let ids = (0..x.len()).map(|i| i.to_string()).collect();
        Self::new(ids, x, y)
    }

    pub fn len(&self) -> usize {
        self.x.len()
    }

    pub fn is_empty(&self) -> bool {
        self.x.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub fn swapped(&self) -> Self {
        Self {
            ids: self.ids.clone(),
            x: self.y.clone(),
            y: self.x.clone(),
        }
    }
}

/// Sample Pearson product-moment correlation.
pub fn pearson(series: &PairedSeries) -> Result<f64, StatsError> {
    pearson_slices(series.x(), series.y())
}

fn pearson_slices(x: &[f64], y: &[f64]) -> Result<f64, StatsError> {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxx, mut syy, mut sxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxx += dx * dx;
        syy += dy * dy;
        sxy += dx * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Err(StatsError::DegenerateSeries(
            if sxx == 0.0 { "x has zero variance" } else { "y has zero variance" }.into(),
        ));
    }
    Ok((sxy / (sxx.sqrt() * syy.sqrt())).clamp(-1.0, 1.0))
}

/// 1-based ranks with ties sharing their mean rank.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // positions start..end hold ranks start+1..=end
        let mean = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = mean;
        }
        start = end;
    }
    ranks
}

/// Spearman's rank correlation: Pearson on average ranks.
pub fn spearman(series: &PairedSeries) -> Result<f64, StatsError> {
    pearson_slices(&average_ranks(series.x()), &average_ranks(series.y()))
}

fn tie_pairs(sorted: &[f64]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Kendall's tau-b, O(n log n) via Knight's merge-sort algorithm.
pub fn kendall_tau_b(series: &PairedSeries) -> Result<f64, StatsError> {
    let (x, y) = (series.x(), series.y());
    let n = x.len() as u64;
    let mut order: Vec<usize> = (0..x.len()).collect();
    order.sort_by(|&a, &b| x[a].total_cmp(&x[b]).then(y[a].total_cmp(&y[b])));

    // ties in x, and joint ties in (x, y)
    let (mut x_ties, mut joint_ties) = (0u64, 0u64);
    let (mut run_x, mut run_xy) = (1u64, 1u64);
    for w in order.windows(2) {
        let (a, b) = (w[0], w[1]);
        if x[a] == x[b] {
            run_x += 1;
            if y[a] == y[b] {
                run_xy += 1;
            } else {
                joint_ties += run_xy * (run_xy - 1) / 2;
                run_xy = 1;
            }
        } else {
            x_ties += run_x * (run_x - 1) / 2;
            joint_ties += run_xy * (run_xy - 1) / 2;
            run_x = 1;
            run_xy = 1;
        }
    }
    x_ties += run_x * (run_x - 1) / 2;
    joint_ties += run_xy * (run_xy - 1) / 2;

    let mut ys: Vec<f64> = order.iter().map(|&i| y[i]).collect();
    let swaps = merge_count(&mut ys);
    let y_ties = tie_pairs(&ys);

    let pairs = n * (n - 1) / 2;
    if x_ties == pairs || y_ties == pairs {
        return Err(StatsError::DegenerateSeries(
            if x_ties == pairs { "x is fully tied" } else { "y is fully tied" }.into(),
        ));
    }
    let numerator = pairs as i128 - x_ties as i128 - y_ties as i128 + joint_ties as i128 - 2 * swaps as i128;
    let denominator = ((pairs - x_ties) as f64).sqrt() * ((pairs - y_ties) as f64).sqrt();
    Ok((numerator as f64 / denominator).clamp(-1.0, 1.0))
}

/// Stable merge sort returning the number of strict inversions.
fn merge_count(v: &mut [f64]) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = merge_count(&mut v[..mid]) + merge_count(&mut v[mid..]);
    let mut merged = Vec::with_capacity(n);
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j].total_cmp(&v[i]) == Ordering::Less {
            merged.push(v[j]);
            swaps += (mid - i) as u64;
            j += 1;
        } else {
            merged.push(v[i]);
            i += 1;
        }
    }
    merged.extend_from_slice(&v[i..mid]);
    merged.extend_from_slice(&v[j..n]);
    v.copy_from_slice(&merged);
    swaps
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn s(x: &[f64], y: &[f64]) -> PairedSeries {
        PairedSeries::unlabeled(x.to_vec(), y.to_vec()).unwrap()
    }

    #[test]
    fn pearson_anchors() {
        assert_abs_diff_eq!(pearson(&s(&[1., 2., 3.], &[1., 2., 3.])).unwrap(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(pearson(&s(&[1., 2., 3.], &[3., 2., 1.])).unwrap(), -1.0, epsilon = 1e-12);
        // cov = 4/... : dx = [-1.5,-.5,.5,1.5], dy = [-1.5,.5,-.5,1.5]; sxy = 4, sxx = syy = 5
        assert_abs_diff_eq!(pearson(&s(&[1., 2., 3., 4.], &[1., 3., 2., 4.])).unwrap(), 0.8, epsilon = 1e-12);
    }

    #[test]
    fn kendall_anchors() {
        assert_abs_diff_eq!(kendall_tau_b(&s(&[1., 2., 3.], &[1., 3., 2.])).unwrap(), 1.0 / 3.0, epsilon = 1e-12);
        // nc = 2, nd = 0, one x-tie pair: 2 / sqrt(2 * 3)
        assert_abs_diff_eq!(
            kendall_tau_b(&s(&[1., 1., 2.], &[1., 2., 3.])).unwrap(),
            2.0 / 6f64.sqrt(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(kendall_tau_b(&s(&[4., 1., 3.], &[4., 1., 3.])).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn spearman_anchors() {
        assert_abs_diff_eq!(spearman(&s(&[1., 2., 3.], &[3., 1., 2.])).unwrap(), -0.5, epsilon = 1e-12);
        let x = [0.5, 2.0, 3.0, 10.0];
        let y: Vec<f64> = x.iter().map(|v: &f64| v.exp()).collect();
        assert_abs_diff_eq!(spearman(&s(&x, &y)).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn degenerate_series() {
        assert!(matches!(spearman(&s(&[2., 2., 2.], &[1., 2., 3.])), Err(StatsError::DegenerateSeries(_))));
        assert!(matches!(pearson(&s(&[1., 2., 3.], &[5., 5., 5.])), Err(StatsError::DegenerateSeries(_))));
        assert!(matches!(kendall_tau_b(&s(&[1., 1.], &[1., 2.])), Err(StatsError::DegenerateSeries(_))));
    }

    #[test]
    fn construction_errors() {
        assert_eq!(PairedSeries::unlabeled(vec![1.0], vec![1.0]), Err(StatsError::TooShort(1)));
        assert!(matches!(PairedSeries::unlabeled(vec![1.0, 2.0], vec![1.0]), Err(StatsError::LengthMismatch(_))));
        assert_eq!(PairedSeries::unlabeled(vec![1.0, f64::NAN], vec![1.0, 2.0]), Err(StatsError::NonFinite));
    }

    #[test]
    fn average_ranks_share_ties() {
        assert_eq!(average_ranks(&[10., 20., 10., 30.]), vec![1.5, 3.0, 1.5, 4.0]);
    }
}

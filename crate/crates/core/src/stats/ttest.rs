use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use super::StatsError;

/// Why a t statistic could not be formed the usual way.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Degeneracy {
    /// Every difference is zero: t = 0, p = 1.
    AllZero,
    /// Every difference is the same nonzero value: |t| = inf, p = 0
    /// (below anything representable).
    ConstantNonZero,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTestResult {
    pub t: f64,
    /// Two-sided p-value.
    pub p: f64,
    pub n: usize,
    pub mean_difference: f64,
    pub degenerate: Option<Degeneracy>,
}

/// Two-sided paired t-test on `a - b` with n - 1 degrees of freedom.
pub fn paired_t_test(a: &[f64], b: &[f64]) -> Result<TTestResult, StatsError> {
    if a.len() != b.len() {
        return Err(StatsError::LengthMismatch(vec![a.len(), b.len()]));
    }
    let n = a.len();
    if n < 2 {
        return Err(StatsError::TooShort(n));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    if diffs.iter().any(|d| !d.is_finite()) {
        return Err(StatsError::NonFinite);
    }
    let mean = diffs.iter().sum::<f64>() / n as f64;
    let var = diffs.iter().map(|d| (d - mean).powi(2)).sum::<f64>() / (n - 1) as f64;

    if var == 0.0 {
        let result = if mean == 0.0 {
            TTestResult {
                t: 0.0,
                p: 1.0,
                n,
                mean_difference: 0.0,
                degenerate: Some(Degeneracy::AllZero),
            }
        } else {
            TTestResult {
                t: f64::INFINITY.copysign(mean),
                p: 0.0,
                n,
                mean_difference: mean,
                degenerate: Some(Degeneracy::ConstantNonZero),
            }
        };
        return Ok(result);
    }

    let t = mean / (var / n as f64).sqrt();
    let dist = StudentsT::new(0.0, 1.0, (n - 1) as f64).expect("degrees of freedom >= 1");
    let p = (2.0 * dist.sf(t.abs())).min(1.0);
    Ok(TTestResult {
        t,
        p,
        n,
        mean_difference: mean,
        degenerate: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn identical_samples() {
        let a = [3.0, 4.0, 5.0];
        let r = paired_t_test(&a, &a).unwrap();
        assert_eq!((r.t, r.p, r.degenerate), (0.0, 1.0, Some(Degeneracy::AllZero)));
    }

    #[test]
    fn constant_shift_is_flagged() {
        let r = paired_t_test(&[2.0, 3.0, 4.0, 5.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert_eq!(r.degenerate, Some(Degeneracy::ConstantNonZero));
        assert_eq!(r.p, 0.0);
        assert!(r.t.is_infinite() && r.t > 0.0);
    }

    #[test]
    fn symmetric_in_sign() {
        let a = [1.0, 5.0, 2.0, 8.0];
        let b = [2.0, 3.0, 2.5, 4.0];
        let ab = paired_t_test(&a, &b).unwrap();
        let ba = paired_t_test(&b, &a).unwrap();
        assert_abs_diff_eq!(ab.t, -ba.t, epsilon = 1e-12);
        assert_abs_diff_eq!(ab.p, ba.p, epsilon = 1e-12);
    }

    #[test]
    fn length_errors() {
        assert!(matches!(paired_t_test(&[1.0], &[1.0]), Err(StatsError::TooShort(1))));
        assert!(matches!(paired_t_test(&[1.0, 2.0], &[1.0]), Err(StatsError::LengthMismatch(_))));
    }
}

use serde::{Deserialize, Serialize};

use super::StatsError;

/// How a PhD rank (1 = best) is turned into a number for correlation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankConversion {
    /// k -> 7 - k; larger is better.
    Reversed,
    /// k -> 1 / k; weights the top picks.
    Reciprocal,
    /// k -> 1 / (7 - k); weights the bottom picks.
    ReversedReciprocal,
}

impl RankConversion {
    pub const ALL: [RankConversion; 3] = [
        RankConversion::Reversed,
        RankConversion::Reciprocal,
        RankConversion::ReversedReciprocal,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            RankConversion::Reversed => "reversed",
            RankConversion::Reciprocal => "reciprocal",
            RankConversion::ReversedReciprocal => "reversed_reciprocal",
        }
    }
}

pub fn convert_rank(rank: i64, conversion: RankConversion) -> Result<f64, StatsError> {
    if !(1..=6).contains(&rank) {
        return Err(StatsError::OutOfRangeRank(rank));
    }
    let k = rank as f64;
    Ok(match conversion {
        RankConversion::Reversed => 7.0 - k,
        RankConversion::Reciprocal => 1.0 / k,
        RankConversion::ReversedReciprocal => 1.0 / (7.0 - k),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_header_examples() {
        assert_eq!(convert_rank(1, RankConversion::Reversed).unwrap(), 6.0);
        assert_eq!(convert_rank(3, RankConversion::Reciprocal).unwrap(), 1.0 / 3.0);
        assert_eq!(convert_rank(1, RankConversion::ReversedReciprocal).unwrap(), 1.0 / 6.0);
        assert_eq!(convert_rank(6, RankConversion::ReversedReciprocal).unwrap(), 1.0);
    }

    #[test]
    fn out_of_range() {
        for k in [0, 7, -1] {
            assert_eq!(convert_rank(k, RankConversion::Reversed), Err(StatsError::OutOfRangeRank(k)));
        }
    }

    #[test]
    fn reversed_is_an_involution() {
        for k in 1..=6 {
            let once = convert_rank(k, RankConversion::Reversed).unwrap() as i64;
            assert_eq!(convert_rank(once, RankConversion::Reversed).unwrap() as i64, k);
        }
    }

    #[test]
    fn monotonicity() {
        let recip: Vec<f64> = (1..=6).map(|k| convert_rank(k, RankConversion::Reciprocal).unwrap()).collect();
        assert!(recip.windows(2).all(|w| w[0] > w[1]));
        let rev: Vec<f64> = (1..=6)
            .map(|k| convert_rank(k, RankConversion::ReversedReciprocal).unwrap())
            .collect();
        assert!(rev.windows(2).all(|w| w[0] < w[1]));
    }
}

//! Nonconformity scores, conformal quantiles and set predictors.
//!
//! Regression-type outputs use the k-nearest-neighbour score (QCP with
//! `k = ⌈√M⌉`, PCP with `k = 1`), classification uses the weighted-histogram
//! score, and deterministic CP uses the quadratic score on a point estimate.

mod mixture;
mod predictors;
mod sets;

pub use mixture::{
    coverage_measure, oracle_set, Component, GaussianMixture, SinusoidTarget, ORACLE_MASS_TOL,
};
pub use predictors::{
    cp_set_deterministic, drift_weights, empirical_probabilities, histogram_score, naive_set,
    normalize_weights, qcp_set_classification, qcp_set_regression, uniform_weights,
    weighted_counts, NaiveGeometry,
};
pub use sets::{Interval, PredictionSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Slack applied before taking the ceiling in `⌈(1-α)(n+1)⌉`, so that
/// products such as `0.9 · 10` land on the intended integer.
const RANK_EPS: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScoreFunction {
    /// `(y - ŷ)²` on a deterministic prediction.
    Quadratic,
    /// `k`-th smallest `|y - ŷ_m|`.
    Knn { k: usize },
    /// `M / Σ_m w_m 1(y = ŷ_m)`.
    WeightedHistogram { weights: Vec<f64> },
    /// `M / Σ_m 1(|y - ŷ_m| ≤ h)`: reciprocal rectangular-kernel estimate.
    KernelDensity { bandwidth: f64 },
}

/// What a score is evaluated against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScoreContext<'a> {
    Deterministic(f64),
    Shots(&'a [f64]),
}

/// Calibration point with its shots and score.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CalibrationRecord {
    pub x: Option<f64>,
    pub y: f64,
    pub shots: Vec<f64>,
    pub score: f64,
}

impl ScoreFunction {
    pub fn validate(&self) -> Result<()> {
        match self {
            ScoreFunction::Quadratic => Ok(()),
            ScoreFunction::Knn { k } if *k == 0 => Err(Error::invalid("k must be at least 1")),
            ScoreFunction::Knn { .. } => Ok(()),
            ScoreFunction::WeightedHistogram { weights } => {
                let total: f64 = weights.iter().sum();
                if weights.iter().any(|w| !(*w >= 0.0)) || (total - weights.len() as f64).abs() > 1e-9 * weights.len().max(1) as f64 {
                    return Err(Error::invalid("histogram weights must be nonnegative and sum to M"));
                }
                Ok(())
            }
            ScoreFunction::KernelDensity { bandwidth } if !(*bandwidth > 0.0) => {
                Err(Error::invalid("bandwidth must be positive"))
            }
            ScoreFunction::KernelDensity { .. } => Ok(()),
        }
    }
}

/// `⌈√M⌉`.
pub fn default_k(m_shots: usize) -> usize {
    let mut k = (m_shots as f64).sqrt().ceil() as usize;
    // guard against sqrt rounding on perfect squares
    while k > 1 && (k - 1) * (k - 1) >= m_shots {
        k -= 1;
    }
    while k * k < m_shots {
        k += 1;
    }
    k.max(1)
}

/// `r = ⌈(1-α)(n+1)⌉`.
pub fn conformal_rank(n: usize, alpha: f64) -> Result<usize> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} must be in (0, 1)")));
    }
    let r = ((1.0 - alpha) * (n + 1) as f64 - RANK_EPS).ceil();
    Ok((r.max(1.0) as usize).min(n + 1))
}

/// The `⌈(1-α)(n+1)⌉`-th smallest of `scores ∪ {+∞}`.
pub fn conformal_quantile(scores: &[f64], alpha: f64) -> Result<f64> {
    if scores.is_empty() {
        return Err(Error::invalid("no calibration scores"));
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::invalid("NaN calibration score"));
    }
    let r = conformal_rank(scores.len(), alpha)?;
    if r == scores.len() + 1 {
        return Ok(f64::INFINITY);
    }
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    Ok(sorted[r - 1])
}

/// `k`-th smallest `|y - ŷ_m|`.
pub fn knn_score(y: f64, shots: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > shots.len() {
        return Err(Error::invalid(format!(
            "k = {k} must be in [1, M = {}]",
            shots.len()
        )));
    }
    let mut d: Vec<f64> = shots.iter().map(|s| (y - s).abs()).collect();
    let (_, kth, _) = d.select_nth_unstable_by(k - 1, f64::total_cmp);
    Ok(*kth)
}

/// Nonconformity score of `y` under `f`.
pub fn score(y: f64, ctx: ScoreContext<'_>, f: &ScoreFunction) -> Result<f64> {
    match (f, ctx) {
        (ScoreFunction::Quadratic, ScoreContext::Deterministic(y_hat)) => Ok((y - y_hat).powi(2)),
        (ScoreFunction::Knn { k }, ScoreContext::Shots(shots)) => knn_score(y, shots, *k),
        (ScoreFunction::WeightedHistogram { weights }, ScoreContext::Shots(shots)) => {
            if weights.len() != shots.len() {
                return Err(Error::DimensionMismatch {
                    expected: shots.len(),
                    found: weights.len(),
                });
            }
            let c: f64 = shots
                .iter()
                .zip(weights)
                .filter(|(s, _)| **s == y)
                .map(|(_, w)| w)
                .sum();
            Ok(predictors::score_from_count(shots.len(), c))
        }
        (ScoreFunction::KernelDensity { bandwidth }, ScoreContext::Shots(shots)) => {
            if !(*bandwidth > 0.0) {
                return Err(Error::invalid("bandwidth must be positive"));
            }
            let c = shots.iter().filter(|s| (y - **s).abs() <= *bandwidth).count();
            Ok(predictors::score_from_count(shots.len(), c as f64))
        }
        _ => Err(Error::invalid("score context does not match the score function")),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quantile_examples() {
        let s = [0.3, 0.1, 0.2];
        assert_eq!(conformal_quantile(&s, 0.5).unwrap(), 0.2);
        assert_eq!(conformal_quantile(&s, 0.1).unwrap(), f64::INFINITY);
        let nine: Vec<f64> = (0..9).map(|i| (i * 7 % 9) as f64).collect();
        assert_eq!(conformal_rank(9, 0.1).unwrap(), 9);
        assert_eq!(conformal_quantile(&nine, 0.1).unwrap(), 8.0);
        assert_eq!(conformal_rank(10, 0.1).unwrap(), 10);
        assert!(conformal_quantile(&[], 0.1).is_err());
        assert!(conformal_quantile(&s, 0.0).is_err());
    }

    #[test]
    fn quantile_with_duplicates() {
        assert_eq!(conformal_quantile(&[1.0, 1.0, 1.0, 2.0], 0.5).unwrap(), 1.0);
    }

    #[test]
    fn score_examples() {
        let shots = [-1.0, 0.5, 2.0];
        let f = ScoreFunction::Knn { k: 2 };
        assert_eq!(score(0.0, ScoreContext::Shots(&shots), &f).unwrap(), 1.0);
        assert!(score(0.0, ScoreContext::Shots(&shots), &ScoreFunction::Knn { k: 4 }).is_err());

        let shots = [1.0, 1.0, 2.0, 3.0];
        let f = ScoreFunction::WeightedHistogram {
            weights: vec![1.0; 4],
        };
        assert_eq!(score(1.0, ScoreContext::Shots(&shots), &f).unwrap(), 2.0);
        assert_eq!(score(4.0, ScoreContext::Shots(&shots), &f).unwrap(), f64::INFINITY);

        let f = ScoreFunction::KernelDensity { bandwidth: 0.5 };
        assert_eq!(score(1.4, ScoreContext::Shots(&shots), &f).unwrap(), 2.0);

        assert_eq!(
            score(1.0, ScoreContext::Deterministic(0.5), &ScoreFunction::Quadratic).unwrap(),
            0.25
        );
        assert!(score(1.0, ScoreContext::Deterministic(0.5), &ScoreFunction::Knn { k: 1 }).is_err());
    }

    #[test]
    fn default_k_values() {
        assert_eq!(default_k(100), 10);
        assert_eq!(default_k(1000), 32);
        assert_eq!(default_k(1), 1);
        assert_eq!(default_k(2), 2);
        assert_eq!(default_k(99), 10);
        assert_eq!(default_k(101), 11);
    }
}

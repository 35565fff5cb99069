//! Set predictors: deterministic CP, QCP for regression and classification,
//! and the naive greedy-cover benchmark.

use crate::conformal::sets::{Interval, PredictionSet};
use crate::error::{Error, Result};

/// `[ŷ - √q, ŷ + √q]` for the quadratic score; whole space when `q = +∞`.
pub fn cp_set_deterministic(y_hat: f64, q: f64) -> Result<PredictionSet> {
    if q.is_nan() || q < 0.0 {
        return Err(Error::invalid(format!("quantile {q} must be nonnegative")));
    }
    if q == f64::INFINITY {
        return Ok(PredictionSet::WholeSpace);
    }
    let r = q.sqrt();
    Ok(PredictionSet::Intervals(vec![Interval {
        lo: y_hat - r,
        hi: y_hat + r,
    }]))
}

/// `{y' : #{m : |y' - ŷ_m| ≤ q} ≥ k}` by an endpoint sweep over `ŷ_m ± q`.
pub fn qcp_set_regression(shots: &[f64], q: f64, k: usize) -> Result<PredictionSet> {
    if k == 0 || k > shots.len() {
        return Err(Error::invalid(format!(
            "k = {k} must be in [1, M = {}]",
            shots.len()
        )));
    }
    if q.is_nan() || q < 0.0 {
        return Err(Error::invalid(format!("quantile {q} must be nonnegative")));
    }
    if q == f64::INFINITY {
        return Ok(PredictionSet::WholeSpace);
    }
    // (position, +1 for an opening endpoint / -1 for a closing one); openings
    // sort first at equal positions because the balls are closed
    let mut events: Vec<(f64, i32)> = Vec::with_capacity(2 * shots.len());
    for &y in shots {
        if !y.is_finite() {
            return Err(Error::invalid("non-finite shot value"));
        }
        events.push((y - q, 1));
        events.push((y + q, -1));
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.cmp(&a.1)));

    let k = k as i32;
    let mut count = 0;
    let mut open: Option<f64> = None;
    let mut out: Vec<Interval> = Vec::new();
    for (pos, delta) in events {
        count += delta;
        if delta > 0 && count == k {
            open = Some(pos);
        } else if delta < 0 && count == k - 1 {
            let lo = open.take().expect("closing without opening");
            out.push(Interval { lo, hi: pos });
        }
    }
    PredictionSet::from_intervals(out)
}

/// Uniform histogram weights, `w_m = 1`.
pub fn uniform_weights(m_shots: usize) -> Vec<f64> {
    vec![1.0; m_shots]
}

/// `w_m ∝ exp(-m/τ)` normalized to `Σ w_m = M`.
pub fn drift_weights(m_shots: usize, tau: f64) -> Result<Vec<f64>> {
    if !(tau > 0.0) {
        return Err(Error::invalid(format!("tau {tau} must be positive")));
    }
    let raw: Vec<f64> = (0..m_shots).map(|m| (-(m as f64) / tau).exp()).collect();
    normalize_weights(raw)
}

/// Rescales nonnegative weights so they sum to their count.
pub fn normalize_weights(w: Vec<f64>) -> Result<Vec<f64>> {
    if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
        return Err(Error::invalid("weights must be finite and nonnegative"));
    }
    let total: f64 = w.iter().sum();
    if !(total > 0.0) {
        return Err(Error::invalid("weights must not all be zero"));
    }
    let scale = w.len() as f64 / total;
    Ok(w.into_iter().map(|v| v * scale).collect())
}

/// `Σ_m w_m 1(ŷ_m = j)` for every label `j < n_labels`.
pub fn weighted_counts(shots: &[usize], weights: &[f64], n_labels: usize) -> Result<Vec<f64>> {
    if shots.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: shots.len(),
            found: weights.len(),
        });
    }
    let mut counts = vec![0.0; n_labels];
    for (&s, &w) in shots.iter().zip(weights) {
        if s >= n_labels {
            return Err(Error::IndexOutOfRange {
                index: s,
                len: n_labels,
            });
        }
        counts[s] += w;
    }
    Ok(counts)
}

/// Weighted-histogram score `M / Σ_m w_m 1(ŷ_m = y)`; `+∞` for an empty bin.
pub fn histogram_score(y: usize, shots: &[usize], weights: &[f64], n_labels: usize) -> Result<f64> {
    let counts = weighted_counts(shots, weights, n_labels)?;
    let c = *counts.get(y).ok_or(Error::IndexOutOfRange {
        index: y,
        len: n_labels,
    })?;
    Ok(score_from_count(shots.len(), c))
}

pub(crate) fn score_from_count(m_shots: usize, count: f64) -> f64 {
    if count > 0.0 {
        m_shots as f64 / count
    } else {
        f64::INFINITY
    }
}

/// Labels whose weighted-histogram score is at most `q`; every label when
/// `q = +∞`.
pub fn qcp_set_classification(
    shots: &[usize],
    q: f64,
    weights: &[f64],
    n_labels: usize,
) -> Result<PredictionSet> {
    if q.is_nan() || q < 0.0 {
        return Err(Error::invalid(format!("quantile {q} must be nonnegative")));
    }
    if shots.is_empty() {
        return Err(Error::invalid("no shots"));
    }
    if q == f64::INFINITY {
        return Ok(PredictionSet::Labels((0..n_labels).collect()));
    }
    let counts = weighted_counts(shots, weights, n_labels)?;
    let labels = counts
        .iter()
        .enumerate()
        .filter(|(_, &c)| score_from_count(shots.len(), c) <= q)
        .map(|(j, _)| j)
        .collect();
    Ok(PredictionSet::Labels(labels))
}

/// Output geometry of the naive predictor.
#[derive(Debug, Clone, PartialEq)]
pub enum NaiveGeometry {
    /// Each selected outcome `o_j` contributes `[o_j - Δ/2, o_j + Δ/2]`.
    Bins { values: Vec<f64>, width: f64 },
    Labels,
}

impl NaiveGeometry {
    /// Bins of width `2/(N-1)` around equispaced eigenvalues.
    pub fn equispaced(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::invalid("bin geometry needs at least two outcomes"));
        }
        let width = 2.0 / (values.len() - 1) as f64;
        Ok(NaiveGeometry::Bins { values, width })
    }
}

/// Outcome frequencies of `shots` over `n_outcomes` outcomes.
pub fn empirical_probabilities(shots: &[usize], n_outcomes: usize) -> Result<Vec<f64>> {
    if shots.is_empty() {
        return Err(Error::invalid("no shots"));
    }
    let counts = weighted_counts(shots, &uniform_weights(shots.len()), n_outcomes)?;
    Ok(counts.into_iter().map(|c| c / shots.len() as f64).collect())
}

/// Greedy mass cover: outcomes in decreasing probability (ties toward the
/// smaller index) until the cumulative mass reaches `1 - α`.
pub fn naive_set(probs: &[f64], alpha: f64, geometry: &NaiveGeometry) -> Result<PredictionSet> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} must be in (0, 1)")));
    }
    let mut order: Vec<usize> = (0..probs.len()).collect();
    order.sort_by(|&a, &b| probs[b].total_cmp(&probs[a]).then(a.cmp(&b)));
    let target = 1.0 - alpha - 1e-12;
    let mut mass = 0.0;
    let mut chosen = Vec::new();
    for j in order {
        chosen.push(j);
        mass += probs[j];
        if mass >= target {
            break;
        }
    }
    match geometry {
        NaiveGeometry::Labels => Ok(PredictionSet::from_labels(chosen)),
        NaiveGeometry::Bins { values, width } => {
            if values.len() != probs.len() {
                return Err(Error::DimensionMismatch {
                    expected: values.len(),
                    found: probs.len(),
                });
            }
            let half = 0.5 * width;
            PredictionSet::from_intervals(
                chosen
                    .into_iter()
                    .map(|j| Interval {
                        lo: values[j] - half,
                        hi: values[j] + half,
                    })
                    .collect(),
            )
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() < 1e-12
    }

    #[test]
    fn cp_examples() {
        let s = cp_set_deterministic(0.0, 0.25).unwrap();
        assert_eq!(s.intervals().unwrap(), &[Interval { lo: -0.5, hi: 0.5 }]);
        assert!(close(s.size(), 1.0));
        let p = cp_set_deterministic(0.3, 0.0).unwrap();
        assert_eq!(p.size(), 0.0);
        assert!(p.contains(0.3));
        assert!(cp_set_deterministic(0.3, f64::INFINITY).unwrap().is_whole_space());
    }

    #[test]
    fn cp_matches_definition_scan() {
        let (y_hat, q) = (0.137, 0.0912);
        let s = cp_set_deterministic(y_hat, q).unwrap();
        for i in 0..=40_000 {
            let y = -2.0 + i as f64 * 1e-4;
            assert_eq!(s.contains(y), (y - y_hat).powi(2) <= q, "y = {y}");
        }
    }

    #[test]
    fn qcp_regression_examples() {
        let s = qcp_set_regression(&[0.0, 1.0], 0.6, 2).unwrap();
        let iv = s.intervals().unwrap();
        assert_eq!(iv.len(), 1);
        assert!(close(iv[0].lo, 0.4) && close(iv[0].hi, 0.6));
        assert!(close(s.size(), 0.2));

        let s = qcp_set_regression(&[0.0, 1.0], 0.6, 1).unwrap();
        let iv = s.intervals().unwrap();
        assert_eq!(iv.len(), 1);
        assert!(close(iv[0].lo, -0.6) && close(iv[0].hi, 1.6));
        assert!(close(s.size(), 2.2));

        let s = qcp_set_regression(&[0.3, -0.2, 0.9], 0.0, 1).unwrap();
        assert_eq!(s.size(), 0.0);
        assert!(s.contains(0.3) && s.contains(-0.2) && !s.contains(0.0));

        assert!(qcp_set_regression(&[0.3], 0.1, 2).is_err());
        assert!(qcp_set_regression(&[0.0, 1.0], 0.1, 2).unwrap().size() == 0.0);
    }

    #[test]
    fn qcp_regression_touching_balls() {
        // closed balls meeting at a single point give a degenerate interval
        let s = qcp_set_regression(&[0.0, 1.0], 0.5, 2).unwrap();
        assert_eq!(s.intervals().unwrap(), &[Interval { lo: 0.5, hi: 0.5 }]);
    }

    #[test]
    fn qcp_classification_examples() {
        let shots = [0, 0, 1, 2];
        let w = uniform_weights(4);
        let s = qcp_set_classification(&shots, 2.0, &w, 4).unwrap();
        assert_eq!(s.labels().unwrap(), &[0]);
        let s = qcp_set_classification(&shots, f64::INFINITY, &w, 4).unwrap();
        assert_eq!(s.labels().unwrap(), &[0, 1, 2, 3]);
        assert_eq!(histogram_score(0, &shots, &w, 4).unwrap(), 2.0);
        assert_eq!(histogram_score(3, &shots, &w, 4).unwrap(), f64::INFINITY);
    }

    #[test]
    fn drift_weights_normalized_and_decreasing() {
        let w = drift_weights(50, 2.0).unwrap();
        assert!(close(w.iter().sum::<f64>(), 50.0));
        assert!(w.windows(2).all(|p| p[0] > p[1]));
        let u = drift_weights(10, 1e12).unwrap();
        assert!(u.iter().all(|&v| (v - 1.0).abs() < 1e-9));
    }

    #[test]
    fn naive_examples() {
        let g = NaiveGeometry::Labels;
        assert_eq!(
            naive_set(&[0.7, 0.2, 0.1], 0.1, &g).unwrap().labels().unwrap(),
            &[0, 1]
        );
        assert_eq!(
            naive_set(&[0.2, 0.7, 0.1], 0.999, &g).unwrap().labels().unwrap(),
            &[1]
        );
        let s = naive_set(&[0.1; 10], 0.1, &g).unwrap();
        assert_eq!(s.labels().unwrap().len(), 9);

        let values: Vec<f64> = (0..4).map(|j| -1.0 + 2.0 * j as f64 / 3.0).collect();
        let g = NaiveGeometry::equispaced(values).unwrap();
        let s = naive_set(&[0.5, 0.45, 0.05, 0.0], 0.1, &g).unwrap();
        assert!(close(s.size(), 2.0 * 2.0 / 3.0));
        assert_eq!(s.intervals().unwrap().len(), 1);
    }
}

//! Coverage statistics over repeated trials and the generalization bound.

use serde::{Deserialize, Serialize};

use crate::conformal::conformal_rank;
use crate::error::{Error, Result};
use crate::special::{binomial_central_band, erf, incbeta};

/// Confidence of the band reported with every coverage estimate.
pub const REPORT_BAND: f64 = 0.95;

/// `⌈(1-α)(n+1)⌉ / (n+1)`.
pub fn reference_coverage(alpha: f64, n_cal: usize) -> Result<f64> {
    Ok(conformal_rank(n_cal, alpha)? as f64 / (n_cal + 1) as f64)
}

/// Aggregate coverage and size of one method.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageStats {
    pub trials: usize,
    /// Mean measured coverage (analytic mass, or indicator for labels).
    pub coverage: f64,
    /// Fraction of trials whose test point fell inside the set.
    pub indicator_coverage: f64,
    /// Mean size over trials with a bounded set; `None` if there are none.
    pub mean_size: Option<f64>,
    pub whole_space_trials: usize,
    pub p_ref: f64,
    /// Central [`REPORT_BAND`] band of `Binom(K, p_ref)/K`.
    pub band: (f64, f64),
}

/// Summarizes per-trial coverages, hit indicators and set sizes.
pub fn empirical_coverage_stats(
    coverages: &[f64],
    hits: &[bool],
    sizes: &[f64],
    alpha: f64,
    n_cal: usize,
) -> Result<CoverageStats> {
    let k = coverages.len();
    if k == 0 || hits.len() != k || sizes.len() != k {
        return Err(Error::invalid("need the same positive number of coverages, hits and sizes"));
    }
    let p_ref = reference_coverage(alpha, n_cal)?;
    let (lo, hi) = binomial_central_band(k as u64, p_ref, REPORT_BAND)?;
    let finite: Vec<f64> = sizes.iter().copied().filter(|s| s.is_finite()).collect();
    Ok(CoverageStats {
        trials: k,
        coverage: coverages.iter().sum::<f64>() / k as f64,
        indicator_coverage: hits.iter().filter(|&&h| h).count() as f64 / k as f64,
        mean_size: (!finite.is_empty()).then(|| finite.iter().sum::<f64>() / finite.len() as f64),
        whole_space_trials: k - finite.len(),
        p_ref,
        band: (lo as f64 / k as f64, hi as f64 / k as f64),
    })
}

/// `Pr(P̂ ≥ 1-α-ε) = I_{p_ref}(⌈K(1-α-ε)⌉, ⌊K(α+ε)⌋ + 1)` for
/// `K·P̂ ~ Binom(K, p_ref)`.
pub fn coverage_probability_bound(trials: usize, alpha: f64, n_cal: usize, eps: f64) -> Result<f64> {
    if trials == 0 {
        return Err(Error::invalid("need at least one trial"));
    }
    if !(eps > 0.0) || !(1.0 - alpha - eps > 0.0) {
        return Err(Error::invalid(format!(
            "eps {eps} must be positive with 1 - alpha - eps > 0"
        )));
    }
    let p_ref = reference_coverage(alpha, n_cal)?;
    let kf = trials as f64;
    let a = (kf * (1.0 - alpha - eps) - 1e-9).ceil();
    let b = (kf * (alpha + eps) + 1e-9).floor() + 1.0;
    if a <= 0.0 {
        return Ok(1.0);
    }
    incbeta(p_ref, a, b)
}

/// Right-hand side of the PAC bound on the generalization gap for a PQC with
/// `gates` trainable gates, `n_train` examples, confidence `1-δ` and loss
/// observables of spectral norm at most `c_loss`.
pub fn generalization_bound(gates: usize, n_train: usize, delta: f64, c_loss: f64) -> Result<f64> {
    if gates == 0 || n_train == 0 {
        return Err(Error::invalid("gates and n_train must be positive"));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::invalid(format!("delta {delta} must be in (0, 1)")));
    }
    if !(c_loss > 0.0) || !c_loss.is_finite() {
        return Err(Error::invalid(format!("c_loss {c_loss} must be positive")));
    }
    let t = gates as f64;
    let n = n_train as f64;
    let ln2 = std::f64::consts::LN_2;
    let half_sqrt_pi = 0.5 * std::f64::consts::PI.sqrt();
    let bracket = 0.5 * (6.0 * t).ln().sqrt() + 0.5 * ln2.sqrt() - half_sqrt_pi * erf(ln2.sqrt())
        + half_sqrt_pi;
    let complexity = 24.0 * c_loss * (512.0 * t).sqrt() * bracket / n.sqrt();
    let confidence = 3.0 * c_loss * (2.0 * (2.0 / delta).ln() / n).sqrt();
    Ok(complexity + confidence)
}

/// One point of the generalization-bound curve.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundPoint {
    pub gates: usize,
    pub n_train: usize,
    pub bound: f64,
}

/// The bound on the grid `gates × n_train`.
pub fn generalization_curve(
    gates: &[usize],
    n_train: &[usize],
    delta: f64,
    c_loss: f64,
) -> Result<Vec<BoundPoint>> {
    let mut out = Vec::with_capacity(gates.len() * n_train.len());
    for &g in gates {
        for &n in n_train {
            out.push(BoundPoint {
                gates: g,
                n_train: n,
                bound: generalization_bound(g, n, delta, c_loss)?,
            });
        }
    }
    Ok(out)
}

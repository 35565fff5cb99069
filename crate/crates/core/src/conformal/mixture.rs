//! Gaussian-mixture ground truths, the oracle level-set predictor and
//! analytic coverage of interval sets.

use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::conformal::sets::{Interval, PredictionSet};
use crate::error::{Error, Result};
use crate::special::normal_cdf;

const LEVEL_BISECTIONS: usize = 50;
const EDGE_BISECTIONS: usize = 60;
/// Allowed excess mass of the oracle set over `1 - α`.
pub const ORACLE_MASS_TOL: f64 = 1e-4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub weight: f64,
    pub mean: f64,
    pub sd: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Component>", into = "Vec<Component>")]
pub struct GaussianMixture {
    components: Vec<Component>,
}

impl TryFrom<Vec<Component>> for GaussianMixture {
    type Error = Error;

    fn try_from(c: Vec<Component>) -> Result<Self> {
        GaussianMixture::new(c)
    }
}

impl From<GaussianMixture> for Vec<Component> {
    fn from(m: GaussianMixture) -> Self {
        m.components
    }
}

impl GaussianMixture {
    pub fn new(components: Vec<Component>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::invalid("mixture needs at least one component"));
        }
        for c in &components {
            if !(c.weight >= 0.0) || !(c.sd > 0.0) || !c.mean.is_finite() || !c.sd.is_finite() {
                return Err(Error::invalid(format!("bad mixture component {c:?}")));
            }
        }
        let total: f64 = components.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::invalid(format!("mixture weights sum to {total}")));
        }
        Ok(Self { components })
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        Self::new(vec![Component {
            weight: 1.0,
            mean,
            sd,
        }])
    }

    /// `½N(-μ, σ²) + ½N(μ, σ²)`.
    pub fn symmetric_bimodal(mu: f64, sd: f64) -> Result<Self> {
        Self::new(vec![
            Component {
                weight: 0.5,
                mean: -mu,
                sd,
            },
            Component {
                weight: 0.5,
                mean: mu,
                sd,
            },
        ])
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn pdf(&self, y: f64) -> f64 {
        self.components
            .iter()
            .map(|c| {
                let z = (y - c.mean) / c.sd;
                c.weight * crate::special::normal_pdf(z) / c.sd
            })
            .sum()
    }

    pub fn cdf(&self, y: f64) -> f64 {
        self.components
            .iter()
            .map(|c| c.weight * normal_cdf((y - c.mean) / c.sd))
            .sum()
    }

    pub fn mass(&self, lo: f64, hi: f64) -> f64 {
        if hi <= lo {
            return 0.0;
        }
        self.components
            .iter()
            .map(|c| c.weight * (normal_cdf((hi - c.mean) / c.sd) - normal_cdf((lo - c.mean) / c.sd)))
            .sum()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut pick = self.components.len() - 1;
        for (i, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                pick = i;
                break;
            }
        }
        let c = self.components[pick];
        Normal::new(c.mean, c.sd)
            .expect("validated component")
            .sample(rng)
    }
}

/// Regression ground truth `p*(y|x) = ½N(μ(x), σ²) + ½N(-μ(x), σ²)` with
/// `μ(x) = 0.5 sin(0.8x) + 0.05x` and `x ~ U(x_lo, x_hi)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SinusoidTarget {
    pub sd: f64,
    pub x_lo: f64,
    pub x_hi: f64,
}

impl Default for SinusoidTarget {
    fn default() -> Self {
        Self {
            sd: 0.05,
            x_lo: -10.0,
            x_hi: 10.0,
        }
    }
}

impl SinusoidTarget {
    pub fn mu(x: f64) -> f64 {
        0.5 * (0.8 * x).sin() + 0.05 * x
    }

    pub fn conditional(&self, x: f64) -> Result<GaussianMixture> {
        GaussianMixture::symmetric_bimodal(Self::mu(x), self.sd)
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, f64)> {
        let x = rng.random_range(self.x_lo..self.x_hi);
        Ok((x, self.conditional(x)?.sample(rng)))
    }
}

/// Analytic mass `∫_Γ p*(y) dy` of an interval set.
pub fn coverage_measure(set: &PredictionSet, truth: &GaussianMixture) -> Result<f64> {
    match set {
        PredictionSet::WholeSpace => Ok(1.0),
        PredictionSet::Intervals(iv) => {
            Ok(iv.iter().map(|i| truth.mass(i.lo, i.hi)).sum::<f64>().clamp(0.0, 1.0))
        }
        PredictionSet::Labels(_) => Err(Error::invalid("coverage_measure needs an interval set")),
    }
}

/// `{y ∈ [lo, hi] : p(y) ≥ λ}` located on a grid, edges refined by bisection.
fn level_set(truth: &GaussianMixture, lambda: f64, lo: f64, hi: f64, step: f64) -> Vec<Interval> {
    let n = ((hi - lo) / step).ceil() as usize;
    let at = |i: usize| if i >= n { hi } else { lo + i as f64 * step };
    let above = |y: f64| truth.pdf(y) >= lambda;
    let edge = |mut a: f64, mut b: f64| {
        // a below, b above (or vice versa); returns the crossing
        let a_above = above(a);
        for _ in 0..EDGE_BISECTIONS {
            let m = 0.5 * (a + b);
            if above(m) == a_above {
                a = m;
            } else {
                b = m;
            }
        }
        if a_above {
            a
        } else {
            b
        }
    };
    let mut out = Vec::new();
    let mut start: Option<f64> = None;
    let mut prev_above = false;
    for i in 0..=n {
        let y = at(i);
        let cur = above(y);
        match (prev_above, cur) {
            (false, true) => start = Some(if i == 0 { y } else { edge(at(i - 1), y) }),
            (true, false) => {
                let s = start.take().expect("open run");
                out.push(Interval {
                    lo: s,
                    hi: edge(at(i - 1), y),
                });
            }
            _ => {}
        }
        prev_above = cur;
    }
    if let Some(s) = start {
        out.push(Interval { lo: s, hi });
    }
    out
}

/// Smallest super-level set of `truth` within `[lo, hi]` with mass `≥ 1 - α`.
pub fn oracle_set(
    truth: &GaussianMixture,
    alpha: f64,
    bounds: (f64, f64),
    grid_step: f64,
) -> Result<PredictionSet> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::invalid(format!("alpha {alpha} must be in (0, 1)")));
    }
    let (lo, hi) = bounds;
    if !(lo < hi) || !(grid_step > 0.0) {
        return Err(Error::invalid("oracle needs lo < hi and a positive grid step"));
    }
    let target = 1.0 - alpha;
    if truth.mass(lo, hi) < target {
        return Err(Error::invalid(format!(
            "domain [{lo}, {hi}] holds less than 1 - alpha = {target} of the mass"
        )));
    }
    let mass_of = |iv: &[Interval]| iv.iter().map(|i| truth.mass(i.lo, i.hi)).sum::<f64>();
    let n = ((hi - lo) / grid_step).ceil() as usize;
    let peak = (0..=n)
        .map(|i| truth.pdf((lo + i as f64 * grid_step).min(hi)))
        .fold(0.0, f64::max);

    let mut lam_lo = 0.0;
    let mut lam_hi = peak;
    let mut best = vec![Interval { lo, hi }];
    for _ in 0..LEVEL_BISECTIONS {
        let mid = 0.5 * (lam_lo + lam_hi);
        let iv = level_set(truth, mid, lo, hi, grid_step);
        if mass_of(&iv) >= target {
            lam_lo = mid;
            best = iv;
        } else {
            lam_hi = mid;
        }
    }
    let excess = mass_of(&best) - target;
    if excess > ORACLE_MASS_TOL {
        return Err(Error::Numerical(format!(
            "oracle level set overshoots the target mass by {excess}"
        )));
    }
    PredictionSet::from_intervals(best)
}

//! Forward simulation of gate noise, shot drift and readout noise.
//!
//! Shot `m` (1-based) is drawn from `ρ_m = (1-γ_m)ρ + γ_m ρ^N`, measured in
//! the observable's eigenbasis and passed through a column-stochastic readout
//! channel. Born probabilities are linear in the state, so the per-shot
//! distribution is assembled from the clean and noise distributions directly
//! instead of materializing every `ρ_m`.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;

use crate::error::{Error, Result};
use crate::linalg::ComplexMatrix;
use crate::qcore::{born_probabilities, sample_outcomes, BornState, DensityMatrix, Observable};

/// Gate-noise mixing weight schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GateNoise {
    None,
    /// Constant `γ ∈ [0, 1]` for every shot.
    Fixed(f64),
    /// `γ_m = 1 - exp(-m/τ)`.
    Drift { tau: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoiseDensity {
    /// `I / N`.
    FullyMixed,
    Explicit(DensityMatrix),
}

/// Readout channel `C[i][j] = p(ŷ = o_i | ỹ = o_j)`; each column sums to one.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfusionMatrix {
    dim: usize,
    data: Vec<f64>,
}

impl ConfusionMatrix {
    /// `rows[i][j] = p(ŷ = o_i | ỹ = o_j)`.
    pub fn new(rows: Vec<Vec<f64>>) -> Result<Self> {
        let dim = rows.len();
        if dim == 0 || rows.iter().any(|r| r.len() != dim) {
            return Err(Error::invalid("confusion matrix must be square and non-empty"));
        }
        let data: Vec<f64> = rows.into_iter().flatten().collect();
        if data.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("confusion entries must be finite and nonnegative"));
        }
        for j in 0..dim {
            let col: f64 = (0..dim).map(|i| data[i * dim + j]).sum();
            if (col - 1.0).abs() > 1e-10 {
                return Err(Error::invalid(format!(
                    "confusion column {j} sums to {col}, not 1"
                )));
            }
        }
        Ok(Self { dim, data })
    }

    pub fn identity(dim: usize) -> Self {
        let mut data = vec![0.0; dim * dim];
        for i in 0..dim {
            data[i * dim + i] = 1.0;
        }
        Self { dim, data }
    }

    /// Symmetric channel flipping to each other outcome with equal share of
    /// `flip` probability.
    pub fn symmetric(dim: usize, flip: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&flip) || dim < 2 {
            return Err(Error::invalid("flip probability must be in [0, 1], dim ≥ 2"));
        }
        let off = flip / (dim - 1) as f64;
        let rows = (0..dim)
            .map(|i| (0..dim).map(|j| if i == j { 1.0 - flip } else { off }).collect())
            .collect();
        Self::new(rows)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.dim + j]
    }
}

/// Gate noise, noise density and optional readout confusion.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseModel {
    pub gate: GateNoise,
    pub density: NoiseDensity,
    pub confusion: Option<ConfusionMatrix>,
}

impl Default for NoiseModel {
    fn default() -> Self {
        Self::noiseless()
    }
}

impl NoiseModel {
    pub fn noiseless() -> Self {
        Self {
            gate: GateNoise::None,
            density: NoiseDensity::FullyMixed,
            confusion: None,
        }
    }

    pub fn fixed(gamma: f64) -> Result<Self> {
        check_gamma(gamma)?;
        Ok(Self {
            gate: GateNoise::Fixed(gamma),
            ..Self::noiseless()
        })
    }

    pub fn drift(tau: f64) -> Result<Self> {
        check_tau(tau)?;
        Ok(Self {
            gate: GateNoise::Drift { tau },
            ..Self::noiseless()
        })
    }

    pub fn with_confusion(mut self, confusion: ConfusionMatrix) -> Self {
        self.confusion = Some(confusion);
        self
    }

    pub fn validate(&self) -> Result<()> {
        match self.gate {
            GateNoise::None => Ok(()),
            GateNoise::Fixed(g) => check_gamma(g),
            GateNoise::Drift { tau } => check_tau(tau),
        }
    }

    /// Mixing weight for shot `m` (1-based).
    pub fn gamma(&self, m: usize) -> Result<f64> {
        match self.gate {
            GateNoise::None => Ok(0.0),
            GateNoise::Fixed(g) => Ok(g),
            GateNoise::Drift { tau } => drift_gamma(m, tau),
        }
    }

    /// Whether every shot has the same distribution.
    pub fn is_stationary(&self) -> bool {
        !matches!(self.gate, GateNoise::Drift { .. })
    }

    pub fn noise_density_matrix(&self, n_qubits: usize) -> DensityMatrix {
        match &self.density {
            NoiseDensity::FullyMixed => DensityMatrix::maximally_mixed(n_qubits),
            NoiseDensity::Explicit(d) => d.clone(),
        }
    }

    /// Born distribution of the noise density, `Tr(Π_j ρ^N)`.
    pub fn noise_probabilities(&self, obs: &Observable) -> Result<Vec<f64>> {
        match &self.density {
            NoiseDensity::FullyMixed if obs.is_computational() => {
                let dim = obs.dim() as f64;
                Ok(obs
                    .projectors()
                    .iter()
                    .map(|p| match p {
                        crate::qcore::Projector::Basis(idx) => idx.len() as f64 / dim,
                        crate::qcore::Projector::Dense(_) => unreachable!(),
                    })
                    .collect())
            }
            NoiseDensity::FullyMixed => {
                let n = obs.dim().trailing_zeros() as usize;
                born_probabilities(&DensityMatrix::maximally_mixed(n), obs)
            }
            NoiseDensity::Explicit(d) => born_probabilities(d, obs),
        }
    }
}

fn check_gamma(gamma: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(Error::invalid(format!("gamma {gamma} outside [0, 1]")));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0) || tau.is_nan() {
        return Err(Error::invalid(format!("tau {tau} must be positive")));
    }
    Ok(())
}

/// `ρ̃ = (1-γ)ρ + γρ^N`.
pub fn mix_density(rho: &DensityMatrix, noise: &DensityMatrix, gamma: f64) -> Result<DensityMatrix> {
    check_gamma(gamma)?;
    if rho.dim() != noise.dim() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: noise.dim(),
        });
    }
    let mixed: ComplexMatrix = &rho.matrix().scale_real(1.0 - gamma) + &noise.matrix().scale_real(gamma);
    Ok(DensityMatrix::new_unchecked(mixed))
}

/// `γ_m = 1 - exp(-m/τ)` for shot index `m ≥ 1`.
pub fn drift_gamma(m: usize, tau: f64) -> Result<f64> {
    check_tau(tau)?;
    if m == 0 {
        return Err(Error::invalid("shot index is 1-based"));
    }
    Ok(-(-(m as f64) / tau).exp_m1())
}

/// `p(ŷ=o_i) = Σ_j C[i][j] p(ỹ=o_j)`.
pub fn apply_measurement_channel(probs: &[f64], confusion: &ConfusionMatrix) -> Result<Vec<f64>> {
    if probs.len() != confusion.dim {
        return Err(Error::DimensionMismatch {
            expected: confusion.dim,
            found: probs.len(),
        });
    }
    let n = confusion.dim;
    Ok((0..n)
        .map(|i| (0..n).map(|j| confusion.get(i, j) * probs[j]).sum())
        .collect())
}

/// Per-shot outcome distributions for one input state under a noise model.
#[derive(Debug, Clone)]
pub struct ShotDistribution {
    clean: Vec<f64>,
    noise: Vec<f64>,
    model: NoiseModel,
}

impl ShotDistribution {
    pub fn new<S: BornState>(state: &S, obs: &Observable, model: &NoiseModel) -> Result<Self> {
        let clean = born_probabilities(state, obs)?;
        Self::from_probabilities(clean, obs, model)
    }

    /// From precomputed noiseless Born probabilities.
    pub fn from_probabilities(clean: Vec<f64>, obs: &Observable, model: &NoiseModel) -> Result<Self> {
        model.validate()?;
        if clean.len() != obs.len() {
            return Err(Error::DimensionMismatch {
                expected: obs.len(),
                found: clean.len(),
            });
        }
        if let Some(c) = &model.confusion {
            if c.dim() != obs.len() {
                return Err(Error::DimensionMismatch {
                    expected: obs.len(),
                    found: c.dim(),
                });
            }
        }
        let noise = if matches!(model.gate, GateNoise::None) {
            vec![0.0; clean.len()]
        } else {
            model.noise_probabilities(obs)?
        };
        Ok(Self {
            clean,
            noise,
            model: model.clone(),
        })
    }

    /// From precomputed clean and noise-density distributions over the same
    /// outcome alphabet.
    pub fn from_parts(clean: Vec<f64>, noise: Vec<f64>, model: &NoiseModel) -> Result<Self> {
        model.validate()?;
        if clean.len() != noise.len() {
            return Err(Error::DimensionMismatch {
                expected: clean.len(),
                found: noise.len(),
            });
        }
        if let Some(c) = &model.confusion {
            if c.dim() != clean.len() {
                return Err(Error::DimensionMismatch {
                    expected: clean.len(),
                    found: c.dim(),
                });
            }
        }
        Ok(Self {
            clean,
            noise,
            model: model.clone(),
        })
    }

    pub fn clean(&self) -> &[f64] {
        &self.clean
    }

    /// Distribution of shot `m` (1-based) after gate and readout noise.
    pub fn shot_probabilities(&self, m: usize) -> Result<Vec<f64>> {
        let gamma = self.model.gamma(m)?;
        let mixed: Vec<f64> = if gamma == 0.0 {
            self.clean.clone()
        } else {
            self.clean
                .iter()
                .zip(&self.noise)
                .map(|(c, n)| (1.0 - gamma) * c + gamma * n)
                .collect()
        };
        match &self.model.confusion {
            Some(c) => apply_measurement_channel(&mixed, c),
            None => Ok(mixed),
        }
    }

    /// Average of the first `m_shots` per-shot distributions.
    pub fn mean_probabilities(&self, m_shots: usize) -> Result<Vec<f64>> {
        if self.model.is_stationary() {
            return self.shot_probabilities(1);
        }
        let mut acc = vec![0.0; self.clean.len()];
        for m in 1..=m_shots {
            for (a, p) in acc.iter_mut().zip(self.shot_probabilities(m)?) {
                *a += p;
            }
        }
        Ok(acc.into_iter().map(|a| a / m_shots as f64).collect())
    }

    /// Draws `m_shots` outcome indices.
    pub fn sample<R: Rng + ?Sized>(&self, m_shots: usize, rng: &mut R) -> Result<Vec<usize>> {
        if m_shots == 0 {
            return Err(Error::invalid("m_shots must be at least 1"));
        }
        if self.model.is_stationary() {
            return sample_outcomes(&self.shot_probabilities(1)?, m_shots, rng);
        }
        (1..=m_shots)
            .map(|m| {
                let p = self.shot_probabilities(m)?;
                let dist = WeightedIndex::new(&p)
                    .map_err(|e| Error::Numerical(format!("shot {m} distribution: {e}")))?;
                Ok(dist.sample(rng))
            })
            .collect()
    }
}

/// Samples `m_shots` noisy measurement outcomes of `state`.
pub fn sample_shots<S: BornState, R: Rng + ?Sized>(
    state: &S,
    obs: &Observable,
    noise: &NoiseModel,
    m_shots: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    ShotDistribution::new(state, obs, noise)?.sample(m_shots, rng)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qcore::PureState;
    use rand::SeedableRng;

    fn rng(seed: u64) -> crate::Rng {
        crate::Rng::seed_from_u64(seed)
    }

    #[test]
    fn mix_density_endpoints_and_example() {
        let rho = PureState::zero(1).to_density();
        let noise = DensityMatrix::maximally_mixed(1);
        assert_eq!(mix_density(&rho, &noise, 0.0).unwrap().matrix(), rho.matrix());
        assert!(mix_density(&rho, &noise, 1.0)
            .unwrap()
            .matrix()
            .max_abs_diff(noise.matrix())
            < 1e-16);
        let half = mix_density(&rho, &noise, 0.5).unwrap();
        let want = ComplexMatrix::from_real_diagonal(&[0.75, 0.25]);
        assert!(half.matrix().max_abs_diff(&want) < 1e-16);
        assert!(mix_density(&rho, &noise, 1.5).is_err());
        assert!(mix_density(&rho, &noise, -0.1).is_err());
    }

    #[test]
    fn drift_gamma_examples() {
        assert!((drift_gamma(10, 10.0).unwrap() - 0.632_120_558_828_557_7).abs() < 1e-12);
        let g = drift_gamma(1, 1e9).unwrap();
        assert!((g - 1e-9).abs() < 1e-15);
        for m in 1..60 {
            assert!(drift_gamma(m + 1, 3.0).unwrap() > drift_gamma(m, 3.0).unwrap());
        }
        assert!(drift_gamma(1, 0.0).is_err());
        assert!(drift_gamma(1, -2.0).is_err());
    }

    #[test]
    fn measurement_channel_examples() {
        let p = [0.2, 0.5, 0.3];
        assert_eq!(
            apply_measurement_channel(&p, &ConfusionMatrix::identity(3)).unwrap(),
            p.to_vec()
        );
        let uniform = ConfusionMatrix::new(vec![vec![1.0 / 3.0; 3]; 3]).unwrap();
        let out = apply_measurement_channel(&p, &uniform).unwrap();
        assert!(out.iter().all(|v| (v - 1.0 / 3.0).abs() < 1e-15));
        let flip = ConfusionMatrix::symmetric(2, 0.1).unwrap();
        let out = apply_measurement_channel(&[1.0, 0.0], &flip).unwrap();
        assert!((out[0] - 0.9).abs() < 1e-15 && (out[1] - 0.1).abs() < 1e-15);
        assert!(apply_measurement_channel(&[1.0, 0.0, 0.0], &flip).is_err());
        assert!(ConfusionMatrix::new(vec![vec![0.5, 0.5], vec![0.4, 0.5]]).is_err());
    }

    #[test]
    fn noiseless_sampling_equals_plain_sampling() {
        let mut s = PureState::zero(2);
        s.apply_gate2(&crate::qcore::general_rotation([0.2, 1.3, 0.4]), 0);
        s.apply_gate2(&crate::qcore::general_rotation([0.5, 0.7, 0.1]), 1);
        let obs = Observable::equispaced(2).unwrap();
        let a = sample_shots(&s, &obs, &NoiseModel::noiseless(), 500, &mut rng(4)).unwrap();
        let p = born_probabilities(&s, &obs).unwrap();
        let b = sample_outcomes(&p, 500, &mut rng(4)).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn tiny_tau_gives_uniform_shots() {
        let s = PureState::zero(2);
        let obs = Observable::equispaced(2).unwrap();
        let m = 100_000;
        let shots = sample_shots(&s, &obs, &NoiseModel::drift(1e-6).unwrap(), m, &mut rng(5)).unwrap();
        let mut counts = [0usize; 4];
        for &o in &shots {
            counts[o] += 1;
        }
        let expected = m as f64 / 4.0;
        let chi2: f64 = counts
            .iter()
            .map(|&c| (c as f64 - expected).powi(2) / expected)
            .sum();
        // χ²(3) upper 0.1% point
        assert!(chi2 < 16.27, "chi2 = {chi2}");
    }

    #[test]
    fn fixed_gamma_frequency() {
        let s = PureState::zero(1);
        let obs = Observable::equispaced(1).unwrap();
        let m = 20_000;
        let shots = sample_shots(&s, &obs, &NoiseModel::fixed(0.5).unwrap(), m, &mut rng(6)).unwrap();
        let f = shots.iter().filter(|&&o| o == 0).count() as f64 / m as f64;
        assert!((f - 0.75).abs() <= 3.0 * (0.1875f64 / m as f64).sqrt());
    }

    #[test]
    fn per_shot_distributions_are_valid() {
        let mut s = PureState::zero(3);
        s.apply_gate2(&crate::qcore::general_rotation([0.2, 2.3, 0.4]), 1);
        let obs = Observable::equispaced(3).unwrap();
        let model = NoiseModel::drift(4.0)
            .unwrap()
            .with_confusion(ConfusionMatrix::symmetric(8, 0.05).unwrap());
        let d = ShotDistribution::new(&s, &obs, &model).unwrap();
        for m in 1..50 {
            let p = d.shot_probabilities(m).unwrap();
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-10);
            assert!(p.iter().all(|&v| v >= 0.0));
        }
    }
}

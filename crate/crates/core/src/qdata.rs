//! Quantum-state classification: Gibbs ensembles, sparse random
//! Hamiltonians, the pretty good measurement and POVM sampling.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianEigen};
use crate::noise::{NoiseModel, ShotDistribution};
use crate::qcore::{normalize_probabilities, DensityMatrix, STATE_TOL};
use crate::Complex64;

/// Tolerance for POVM positivity and completeness.
pub const POVM_TOL: f64 = 1e-9;
/// Relative eigenvalue cutoff defining the support of the average state.
/// Smaller eigenvalues would be amplified by `ρ̄^{-1/2}` past [`POVM_TOL`].
pub const SUPPORT_CUTOFF: f64 = 1e-6;

/// `ρ = exp(-H/T) / Tr exp(-H/T)`.
pub fn gibbs_state(h: &ComplexMatrix, temperature: f64) -> Result<DensityMatrix> {
    if !(temperature > 0.0) || !temperature.is_finite() {
        return Err(Error::invalid(format!("temperature {temperature} must be positive")));
    }
    if !h.is_square() || !h.is_hermitian(STATE_TOL) {
        return Err(Error::invalid("Hamiltonian must be Hermitian"));
    }
    if !h.rows().is_power_of_two() {
        return Err(Error::invalid("Hamiltonian dimension must be a power of two"));
    }
    let eig = HermitianEigen::new(h)?;
    // the largest exponent -λ_min/T is shifted to zero
    let shift = -eig.values[0] / temperature;
    let z: f64 = eig
        .values
        .iter()
        .map(|&v| (-v / temperature - shift).exp())
        .sum();
    let rho = eig.map(|v| (-v / temperature - shift).exp() / z);
    Ok(DensityMatrix::new_unchecked(rho.hermitian_part()))
}

/// Hermitian matrix whose upper-triangle entries are nonzero with probability
/// `sparsity`; off-diagonals complex standard normal, diagonal real standard
/// normal.
pub fn random_sparse_hamiltonian<R: Rng + ?Sized>(
    dim: usize,
    sparsity: f64,
    rng: &mut R,
) -> Result<ComplexMatrix> {
    if dim < 2 {
        return Err(Error::invalid("Hamiltonian dimension must be at least 2"));
    }
    if !(sparsity > 0.0 && sparsity <= 1.0) {
        return Err(Error::invalid(format!("sparsity {sparsity} must be in (0, 1]")));
    }
    let half = std::f64::consts::FRAC_1_SQRT_2;
    let mut h = ComplexMatrix::zeros(dim, dim);
    for i in 0..dim {
        for j in i..dim {
            if rng.random::<f64>() >= sparsity {
                continue;
            }
            if i == j {
                let d: f64 = StandardNormal.sample(rng);
                h.set(i, i, Complex64::new(d, 0.0));
            } else {
                let re: f64 = StandardNormal.sample(rng);
                let im: f64 = StandardNormal.sample(rng);
                let z = Complex64::new(re * half, im * half);
                h.set(i, j, z);
                h.set(j, i, z.conj());
            }
        }
    }
    Ok(h)
}

/// Labeled family of states `ρ(y)` with priors `p(y)`.
#[derive(Debug, Clone, PartialEq)]
pub struct StateClassEnsemble {
    pub priors: Vec<f64>,
    pub states: Vec<DensityMatrix>,
    pub temperature: f64,
}

impl StateClassEnsemble {
    pub fn new(priors: Vec<f64>, states: Vec<DensityMatrix>, temperature: f64) -> Result<Self> {
        if states.is_empty() || priors.len() != states.len() {
            return Err(Error::invalid("one prior per class state is required"));
        }
        if priors.iter().any(|p| !(*p >= 0.0)) || (priors.iter().sum::<f64>() - 1.0).abs() > 1e-10 {
            return Err(Error::invalid("priors must be nonnegative and sum to 1"));
        }
        let dim = states[0].dim();
        if let Some(s) = states.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: s.dim(),
            });
        }
        Ok(Self {
            priors,
            states,
            temperature,
        })
    }

    /// `n_classes` Gibbs states of independent sparse Hamiltonians with
    /// uniform priors.
    pub fn random<R: Rng + ?Sized>(
        n_classes: usize,
        dim: usize,
        sparsity: f64,
        temperature: f64,
        rng: &mut R,
    ) -> Result<Self> {
        if n_classes == 0 {
            return Err(Error::invalid("need at least one class"));
        }
        let states = (0..n_classes)
            .map(|_| gibbs_state(&random_sparse_hamiltonian(dim, sparsity, rng)?, temperature))
            .collect::<Result<Vec<_>>>()?;
        Self::new(vec![1.0 / n_classes as f64; n_classes], states, temperature)
    }

    pub fn n_classes(&self) -> usize {
        self.states.len()
    }

    pub fn dim(&self) -> usize {
        self.states[0].dim()
    }

    /// Draws a class label from the priors.
    pub fn sample_label<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        for (y, p) in self.priors.iter().enumerate() {
            acc += p;
            if u < acc {
                return y;
            }
        }
        self.priors.len() - 1
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Povm {
    elements: Vec<ComplexMatrix>,
}

impl Povm {
    pub fn new(elements: Vec<ComplexMatrix>) -> Result<Self> {
        let dim = elements
            .first()
            .ok_or_else(|| Error::invalid("POVM needs at least one element"))?
            .rows();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        for e in &elements {
            if e.rows() != dim || !e.is_square() {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: e.rows(),
                });
            }
            if !e.is_hermitian(POVM_TOL) || !e.is_psd(POVM_TOL) {
                return Err(Error::invalid("POVM element is not positive semidefinite"));
            }
            sum = &sum + e;
        }
        let gap = sum.max_abs_diff(&ComplexMatrix::identity(dim));
        if gap > POVM_TOL {
            return Err(Error::invalid(format!("POVM elements miss the identity by {gap}")));
        }
        Ok(Self { elements })
    }

    pub fn elements(&self) -> &[ComplexMatrix] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.elements[0].rows()
    }

    /// `Tr(P_y ρ)` for every outcome.
    pub fn probabilities(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        if rho.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: rho.dim(),
            });
        }
        let raw = self
            .elements
            .iter()
            .map(|e| Ok(e.trace_product(rho.matrix())?.re))
            .collect::<Result<Vec<_>>>()?;
        normalize_probabilities(raw)
    }
}

/// `P_y = S p(y)ρ(y) S + (I - Π)/C` with `S = ρ̄^{-1/2}` on the support `Π`
/// of `ρ̄ = Σ_y p(y)ρ(y)`.
pub fn pretty_good_measurement(ensemble: &StateClassEnsemble) -> Result<Povm> {
    let dim = ensemble.dim();
    let c = ensemble.n_classes();
    let mut avg = ComplexMatrix::zeros(dim, dim);
    let weighted: Vec<ComplexMatrix> = ensemble
        .states
        .iter()
        .zip(&ensemble.priors)
        .map(|(s, &p)| s.matrix().scale_real(p))
        .collect();
    for w in &weighted {
        avg = &avg + w;
    }
    let eig = HermitianEigen::new(&avg.hermitian_part())?;
    let top = eig.values.last().copied().unwrap_or(0.0);
    if !(top > 0.0) {
        return Err(Error::invalid("ensemble average state is zero"));
    }
    let cutoff = SUPPORT_CUTOFF * top;
    let inv_sqrt = eig.map(|v| if v > cutoff { 1.0 / v.sqrt() } else { 0.0 });
    let support = eig.map(|v| if v > cutoff { 1.0 } else { 0.0 });
    let residual = (&ComplexMatrix::identity(dim) - &support).scale_real(1.0 / c as f64);
    let elements = weighted
        .iter()
        .map(|w| {
            let core = inv_sqrt.matmul(w)?.matmul(&inv_sqrt)?;
            Ok((&core + &residual).hermitian_part())
        })
        .collect::<Result<Vec<_>>>()?;
    Povm::new(elements)
}

/// Samples `m_shots` POVM outcomes of `rho`; with a noise model each shot
/// sees `ρ_m = (1-γ_m)ρ + γ_m ρ^N`.
pub fn povm_sample<R: Rng + ?Sized>(
    rho: &DensityMatrix,
    povm: &Povm,
    m_shots: usize,
    noise: Option<&NoiseModel>,
    rng: &mut R,
) -> Result<Vec<usize>> {
    povm_shot_distribution(rho, povm, noise)?.sample(m_shots, rng)
}

/// Per-shot outcome distributions of `rho` under `povm` and `noise`.
pub fn povm_shot_distribution(
    rho: &DensityMatrix,
    povm: &Povm,
    noise: Option<&NoiseModel>,
) -> Result<ShotDistribution> {
    let clean = povm.probabilities(rho)?;
    let model = noise.cloned().unwrap_or_default();
    let noisy = if matches!(model.gate, crate::noise::GateNoise::None) {
        vec![0.0; clean.len()]
    } else {
        let n = rho.dim().trailing_zeros() as usize;
        povm.probabilities(&model.noise_density_matrix(n))?
    };
    ShotDistribution::from_parts(clean, noisy, &model)
}

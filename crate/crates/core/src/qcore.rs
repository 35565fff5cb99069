//! Small-register state-vector and density-matrix simulation.
//!
//! Qubit ordering is big-endian: qubit 0 is the most significant bit of the
//! basis-state index, so on two qubits `X` on qubit 0 maps `|00⟩` (index 0)
//! to `|10⟩` (index 2). Outcome indices are zero-based throughout.

use num_complex::Complex64;
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{ComplexMatrix, HermitianEigen};

/// Tolerance on state normalization and density-matrix invariants.
pub const STATE_TOL: f64 = 1e-10;
/// Largest deviation of a probability vector's sum that is renormalized
/// instead of rejected.
pub const RENORM_TOL: f64 = 1e-8;

/// Single-qubit 2×2 gate stored row-major.
pub type Gate2 = [[Complex64; 2]; 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Axis {
    Y,
    Z,
}

/// `R_P(θ) = exp(-iθP/2)` for `P ∈ {Y, Z}`.
pub fn rotation_gate(axis: Axis, angle: f64) -> Result<ComplexMatrix> {
    if !angle.is_finite() {
        return Err(Error::invalid(format!("rotation angle {angle} is not finite")));
    }
    let g = rotation(axis, angle);
    ComplexMatrix::from_vec(2, 2, vec![g[0][0], g[0][1], g[1][0], g[1][1]])
}

#[inline]
pub(crate) fn rotation(axis: Axis, angle: f64) -> Gate2 {
    let (s, c) = (angle / 2.0).sin_cos();
    match axis {
        Axis::Y => [
            [Complex64::new(c, 0.0), Complex64::new(-s, 0.0)],
            [Complex64::new(s, 0.0), Complex64::new(c, 0.0)],
        ],
        Axis::Z => [
            [Complex64::new(c, -s), Complex64::new(0.0, 0.0)],
            [Complex64::new(0.0, 0.0), Complex64::new(c, s)],
        ],
    }
}

#[inline]
fn mul2(a: &Gate2, b: &Gate2) -> Gate2 {
    let mut out = [[Complex64::new(0.0, 0.0); 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            out[i][j] = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

/// `R(φ¹, φ², φ³) = R_Z(φ¹) R_Y(φ²) R_Z(φ³)`.
pub fn general_rotation(phi: [f64; 3]) -> Gate2 {
    let rz1 = rotation(Axis::Z, phi[0]);
    let ry = rotation(Axis::Y, phi[1]);
    let rz3 = rotation(Axis::Z, phi[2]);
    mul2(&rz1, &mul2(&ry, &rz3))
}

fn gate_from_matrix(m: &ComplexMatrix) -> Result<Gate2> {
    if m.rows() != 2 || m.cols() != 2 {
        return Err(Error::invalid("single-qubit gate must be 2x2"));
    }
    Ok([[m.get(0, 0), m.get(0, 1)], [m.get(1, 0), m.get(1, 1)]])
}

/// Normalized amplitude vector of an `n`-qubit register.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amps: Vec<Complex64>,
}

impl PureState {
    /// `|0…0⟩`.
    pub fn zero(n_qubits: usize) -> Self {
        let mut amps = vec![Complex64::new(0.0, 0.0); 1 << n_qubits];
        amps[0] = Complex64::new(1.0, 0.0);
        Self { n_qubits, amps }
    }

    pub fn basis(n_qubits: usize, index: usize) -> Result<Self> {
        let dim = 1 << n_qubits;
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, len: dim });
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); dim];
        amps[index] = Complex64::new(1.0, 0.0);
        Ok(Self { n_qubits, amps })
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let dim = amps.len();
        if dim < 2 || !dim.is_power_of_two() {
            return Err(Error::invalid(format!(
                "amplitude vector length {dim} is not a power of two ≥ 2"
            )));
        }
        let state = Self {
            n_qubits: dim.trailing_zeros() as usize,
            amps,
        };
        if (state.norm() - 1.0).abs() > STATE_TOL {
            return Err(Error::invalid(format!(
                "state norm {} differs from 1",
                state.norm()
            )));
        }
        Ok(state)
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.amps.len()
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn norm(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum::<f64>().sqrt()
    }

    /// Applies a unitary 2×2 gate to `qubit`.
    pub fn apply_gate(&mut self, gate: &ComplexMatrix, qubit: usize) -> Result<()> {
        if qubit >= self.n_qubits {
            return Err(Error::IndexOutOfRange {
                index: qubit,
                len: self.n_qubits,
            });
        }
        if !gate.is_unitary(STATE_TOL) {
            return Err(Error::invalid("gate is not unitary"));
        }
        let g = gate_from_matrix(gate)?;
        self.apply_gate2(&g, qubit);
        Ok(())
    }

    /// Unchecked kernel; `qubit` must be in range and `g` unitary.
    #[inline]
    pub(crate) fn apply_gate2(&mut self, g: &Gate2, qubit: usize) {
        let stride = 1usize << (self.n_qubits - 1 - qubit);
        let dim = self.amps.len();
        let mut base = 0;
        while base < dim {
            for i in base..base + stride {
                let a0 = self.amps[i];
                let a1 = self.amps[i + stride];
                self.amps[i] = g[0][0] * a0 + g[0][1] * a1;
                self.amps[i + stride] = g[1][0] * a0 + g[1][1] * a1;
            }
            base += 2 * stride;
        }
    }

    /// CZ chain `∏_{k} CZ_{k,k+1}` over successive qubits.
    pub fn apply_entangler(&mut self) -> Result<()> {
        if self.n_qubits < 2 {
            return Err(Error::invalid("entangler needs at least two qubits"));
        }
        self.apply_entangler_unchecked();
        Ok(())
    }

    pub(crate) fn apply_entangler_unchecked(&mut self) {
        let n = self.n_qubits;
        for (idx, amp) in self.amps.iter_mut().enumerate() {
            // number of adjacent (k, k+1) pairs with both bits set
            let pairs = (idx & (idx >> 1)).count_ones();
            if pairs % 2 == 1 {
                *amp = -*amp;
            }
        }
        debug_assert!(n >= 2);
    }

    /// Basis-state probabilities `|a_i|²`.
    pub fn basis_probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            n_qubits: self.n_qubits,
            matrix: ComplexMatrix::outer(&self.amps),
        }
    }
}

/// Positive semidefinite unit-trace operator on `n` qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_qubits: usize,
    matrix: ComplexMatrix,
}

impl DensityMatrix {
    /// Validates Hermiticity, unit trace and positivity.
    pub fn new(matrix: ComplexMatrix) -> Result<Self> {
        let dim = matrix.rows();
        if !matrix.is_square() || dim < 2 || !dim.is_power_of_two() {
            return Err(Error::invalid(
                "density matrix must be square with power-of-two dimension",
            ));
        }
        if !matrix.is_hermitian(STATE_TOL) {
            return Err(Error::invalid("density matrix is not Hermitian"));
        }
        let tr = matrix.trace();
        if (tr.re - 1.0).abs() > STATE_TOL || tr.im.abs() > STATE_TOL {
            return Err(Error::invalid(format!("density matrix trace {tr} ≠ 1")));
        }
        let eig = HermitianEigen::new(&matrix)?;
        if eig.values[0] < -1e-9 {
            return Err(Error::invalid(format!(
                "density matrix has negative eigenvalue {}",
                eig.values[0]
            )));
        }
        Ok(Self {
            n_qubits: dim.trailing_zeros() as usize,
            matrix,
        })
    }

    /// Skips validation; the caller guarantees the invariants.
    pub(crate) fn new_unchecked(matrix: ComplexMatrix) -> Self {
        let dim = matrix.rows();
        Self {
            n_qubits: dim.trailing_zeros() as usize,
            matrix,
        }
    }

    /// `I / N`.
    pub fn maximally_mixed(n_qubits: usize) -> Self {
        let dim = 1usize << n_qubits;
        Self {
            n_qubits,
            matrix: ComplexMatrix::identity(dim).scale_real(1.0 / dim as f64),
        }
    }

    pub fn from_pure(state: &PureState) -> Self {
        state.to_density()
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn min_eigenvalue(&self) -> Result<f64> {
        Ok(HermitianEigen::new(&self.matrix)?.values[0])
    }
}

/// Projector onto one eigenspace of an observable.
#[derive(Debug, Clone, PartialEq)]
pub enum Projector {
    /// Sum of computational-basis projectors `Σ_{i∈S} |i⟩⟨i|`.
    Basis(Vec<usize>),
    Dense(ComplexMatrix),
}

impl Projector {
    pub fn to_matrix(&self, dim: usize) -> ComplexMatrix {
        match self {
            Projector::Basis(idx) => {
                let mut m = ComplexMatrix::zeros(dim, dim);
                for &i in idx {
                    m.set(i, i, Complex64::new(1.0, 0.0));
                }
                m
            }
            Projector::Dense(m) => m.clone(),
        }
    }
}

/// Hermitian observable `O = Σ_j o_j Π_j` with strictly increasing `o_j`.
#[derive(Debug, Clone, PartialEq)]
pub struct Observable {
    dim: usize,
    eigenvalues: Vec<f64>,
    projectors: Vec<Projector>,
    matrix: ComplexMatrix,
}

impl Observable {
    pub fn new(dim: usize, eigenvalues: Vec<f64>, projectors: Vec<Projector>) -> Result<Self> {
        if eigenvalues.is_empty() || eigenvalues.len() != projectors.len() {
            return Err(Error::invalid(
                "observable needs one projector per eigenvalue",
            ));
        }
        if eigenvalues.windows(2).any(|w| !(w[0] < w[1])) {
            return Err(Error::invalid("eigenvalues must be strictly increasing"));
        }
        let mats: Vec<ComplexMatrix> = projectors.iter().map(|p| p.to_matrix(dim)).collect();
        let mut sum = ComplexMatrix::zeros(dim, dim);
        let mut obs = ComplexMatrix::zeros(dim, dim);
        for (m, &o) in mats.iter().zip(&eigenvalues) {
            if m.rows() != dim || !m.is_square() {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    found: m.rows(),
                });
            }
            if !m.is_hermitian(STATE_TOL) || (m * m).max_abs_diff(m) > STATE_TOL {
                return Err(Error::invalid("projector is not a Hermitian idempotent"));
            }
            sum = &sum + m;
            obs = &obs + &m.scale_real(o);
        }
        if sum.max_abs_diff(&ComplexMatrix::identity(dim)) > STATE_TOL {
            return Err(Error::invalid("projectors do not sum to the identity"));
        }
        Ok(Self {
            dim,
            eigenvalues,
            projectors,
            matrix: obs,
        })
    }

    /// Computational-basis observable with `|j⟩⟨j|` for each `values[j]`.
    pub fn computational(values: Vec<f64>) -> Result<Self> {
        let dim = values.len();
        let projectors = (0..dim).map(|j| Projector::Basis(vec![j])).collect();
        Self::new(dim, values, projectors)
    }

    /// `o_j = -1 + 2j/(N-1)` on the computational basis of `n` qubits.
    pub fn equispaced(n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::invalid("equispaced observable needs n_qubits ≥ 1"));
        }
        let dim = 1usize << n_qubits;
        let values = (0..dim)
            .map(|j| -1.0 + 2.0 * j as f64 / (dim - 1) as f64)
            .collect();
        Self::computational(values)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn projectors(&self) -> &[Projector] {
        &self.projectors
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    /// Whether every projector is diagonal in the computational basis.
    pub fn is_computational(&self) -> bool {
        self.projectors
            .iter()
            .all(|p| matches!(p, Projector::Basis(_)))
    }

    /// Spacing of a uniform eigenvalue grid, if the grid is uniform.
    pub fn grid_step(&self) -> Option<f64> {
        if self.eigenvalues.len() < 2 {
            return None;
        }
        let step = self.eigenvalues[1] - self.eigenvalues[0];
        let uniform = self
            .eigenvalues
            .windows(2)
            .all(|w| ((w[1] - w[0]) - step).abs() <= 1e-12 * step.abs().max(1.0));
        uniform.then_some(step)
    }
}

/// `o = (-1 + 2j/(N-1))_j` on `n` qubits.
pub fn equispaced_observable(n_qubits: usize) -> Result<Observable> {
    Observable::equispaced(n_qubits)
}

/// States that yield Born weights `Tr(Π ρ)`.
pub trait BornState {
    fn dim(&self) -> usize;
    fn projector_weight(&self, p: &Projector) -> f64;
}

impl BornState for PureState {
    fn dim(&self) -> usize {
        self.amps.len()
    }

    fn projector_weight(&self, p: &Projector) -> f64 {
        match p {
            Projector::Basis(idx) => idx.iter().map(|&i| self.amps[i].norm_sqr()).sum(),
            Projector::Dense(m) => {
                let pv = m.matvec(&self.amps).expect("dimension checked");
                self.amps
                    .iter()
                    .zip(&pv)
                    .map(|(a, b)| (a.conj() * b).re)
                    .sum()
            }
        }
    }
}

impl BornState for DensityMatrix {
    fn dim(&self) -> usize {
        self.matrix.rows()
    }

    fn projector_weight(&self, p: &Projector) -> f64 {
        match p {
            Projector::Basis(idx) => idx.iter().map(|&i| self.matrix.get(i, i).re).sum(),
            Projector::Dense(m) => m.trace_product(&self.matrix).expect("dimension checked").re,
        }
    }
}

/// Born-rule outcome distribution `p_j = Tr(Π_j ρ)`.
///
/// Entries are clamped to `[0, 1]`; a sum within [`RENORM_TOL`] of one is
/// renormalized, anything further off is a numerical error.
pub fn born_probabilities<S: BornState>(state: &S, obs: &Observable) -> Result<Vec<f64>> {
    if state.dim() != obs.dim() {
        return Err(Error::DimensionMismatch {
            expected: obs.dim(),
            found: state.dim(),
        });
    }
    let raw: Vec<f64> = obs
        .projectors
        .iter()
        .map(|p| state.projector_weight(p))
        .collect();
    normalize_probabilities(raw)
}

/// Clamps to `[0, 1]` and renormalizes a vector whose sum is within
/// [`RENORM_TOL`] of one.
pub fn normalize_probabilities(mut probs: Vec<f64>) -> Result<Vec<f64>> {
    for p in probs.iter_mut() {
        if !p.is_finite() {
            return Err(Error::Numerical("non-finite probability".into()));
        }
        *p = p.clamp(0.0, 1.0);
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > RENORM_TOL {
        return Err(Error::Numerical(format!(
            "probabilities sum to {sum}, not 1"
        )));
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
    Ok(probs)
}

/// Validates a probability vector: finite, nonnegative, sums to one within
/// [`RENORM_TOL`].
pub fn check_distribution(probs: &[f64]) -> Result<()> {
    if probs.is_empty() {
        return Err(Error::invalid("empty probability vector"));
    }
    if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
        return Err(Error::invalid("probabilities must be finite and nonnegative"));
    }
    let sum: f64 = probs.iter().sum();
    if (sum - 1.0).abs() > RENORM_TOL {
        return Err(Error::invalid(format!("probabilities sum to {sum}, not 1")));
    }
    Ok(())
}

/// Draws `m_shots` i.i.d. outcome indices from `probs`.
pub fn sample_outcomes<R: Rng + ?Sized>(
    probs: &[f64],
    m_shots: usize,
    rng: &mut R,
) -> Result<Vec<usize>> {
    check_distribution(probs)?;
    if m_shots == 0 {
        return Err(Error::invalid("m_shots must be at least 1"));
    }
    let dist = WeightedIndex::new(probs)
        .map_err(|e| Error::invalid(format!("invalid distribution: {e}")))?;
    Ok((0..m_shots).map(|_| dist.sample(rng)).collect())
}

/// `⟨O⟩ = Re Tr(O ρ)`.
pub fn expectation(state: &DensityMatrix, obs: &Observable) -> Result<f64> {
    if state.dim() != obs.dim() {
        return Err(Error::DimensionMismatch {
            expected: obs.dim(),
            found: state.dim(),
        });
    }
    Ok(obs.matrix.trace_product(&state.matrix)?.re)
}

/// `⟨ψ|O|ψ⟩`.
pub fn expectation_pure(state: &PureState, obs: &Observable) -> Result<f64> {
    if state.dim() != obs.dim() {
        return Err(Error::DimensionMismatch {
            expected: obs.dim(),
            found: state.dim(),
        });
    }
    let ov = obs.matrix.matvec(&state.amps)?;
    Ok(state
        .amps
        .iter()
        .zip(&ov)
        .map(|(a, b)| (a.conj() * b).re)
        .sum())
}

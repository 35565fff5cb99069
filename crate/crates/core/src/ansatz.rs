//! Hardware-efficient ansatz with data re-uploading.
//!
//! Each of the `L` layers applies `R(φ¹,φ²,φ³) = R_Z R_Y R_Z` to every qubit
//! and then the CZ chain. Angles are stored flat in layer-major order, then
//! qubit, then rotation index, i.e. `[φ_{1,1}^1, φ_{1,1}^2, φ_{1,1}^3,
//! φ_{1,2}^1, …, φ_{L,n}^3]`.

use std::f64::consts::TAU;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qcore::{general_rotation, PureState};

pub const MLP_HIDDEN: usize = 10;

/// Exponential linear unit.
#[inline]
pub fn elu(u: f64) -> f64 {
    if u >= 0.0 {
        u
    } else {
        u.exp_m1()
    }
}

#[inline]
pub fn elu_derivative(u: f64) -> f64 {
    if u >= 0.0 {
        1.0
    } else {
        u.exp()
    }
}

/// Fully connected network `1 → 10 → 10 → 3nL` with ELU hidden layers and a
/// linear output layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlp {
    pub sizes: Vec<usize>,
    /// `weights[l]` is row-major `sizes[l+1] × sizes[l]`.
    pub weights: Vec<Vec<f64>>,
    pub biases: Vec<Vec<f64>>,
}

impl Mlp {
    /// Glorot-uniform weights, zero biases.
    pub fn new<R: Rng + ?Sized>(sizes: Vec<usize>, rng: &mut R) -> Self {
        let mut weights = Vec::new();
        let mut biases = Vec::new();
        for w in sizes.windows(2) {
            let (fan_in, fan_out) = (w[0], w[1]);
            let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
            weights.push(
                (0..fan_in * fan_out)
                    .map(|_| rng.random_range(-limit..=limit))
                    .collect(),
            );
            biases.push(vec![0.0; fan_out]);
        }
        Self {
            sizes,
            weights,
            biases,
        }
    }

    pub fn zeros(sizes: Vec<usize>) -> Self {
        let weights = sizes.windows(2).map(|w| vec![0.0; w[0] * w[1]]).collect();
        let biases = sizes.windows(2).map(|w| vec![0.0; w[1]]).collect();
        Self {
            sizes,
            weights,
            biases,
        }
    }

    pub fn num_params(&self) -> usize {
        self.sizes.windows(2).map(|w| w[0] * w[1] + w[1]).sum()
    }

    fn check_shapes(&self) -> Result<()> {
        let layers = self.sizes.len().saturating_sub(1);
        if layers == 0 || self.weights.len() != layers || self.biases.len() != layers {
            return Err(Error::invalid("MLP layer count mismatch"));
        }
        for (l, w) in self.sizes.windows(2).enumerate() {
            if self.weights[l].len() != w[0] * w[1] || self.biases[l].len() != w[1] {
                return Err(Error::invalid(format!("MLP layer {l} has inconsistent shape")));
            }
        }
        Ok(())
    }

    /// Returns the pre-activations of every layer; the last entry is the
    /// network output.
    fn forward_trace(&self, x: f64) -> Vec<Vec<f64>> {
        let layers = self.weights.len();
        let mut pre = Vec::with_capacity(layers);
        let mut act = vec![x];
        for l in 0..layers {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let z: Vec<f64> = (0..n_out)
                .map(|o| {
                    let row = &self.weights[l][o * n_in..(o + 1) * n_in];
                    self.biases[l][o] + row.iter().zip(&act).map(|(w, a)| w * a).sum::<f64>()
                })
                .collect();
            act = if l + 1 < layers {
                z.iter().map(|&u| elu(u)).collect()
            } else {
                z.clone()
            };
            pre.push(z);
        }
        pre
    }

    pub fn forward(&self, x: f64) -> Vec<f64> {
        self.forward_trace(x).pop().unwrap_or_default()
    }

    /// Vector-Jacobian product: gradient of `Σ_o grad_out[o]·f_o(x)` with
    /// respect to the flat parameter vector (see [`Mlp::params`]).
    pub fn vjp(&self, x: f64, grad_out: &[f64]) -> Vec<f64> {
        let pre = self.forward_trace(x);
        let layers = self.weights.len();
        let mut grads_w: Vec<Vec<f64>> = self.weights.iter().map(|w| vec![0.0; w.len()]).collect();
        let mut grads_b: Vec<Vec<f64>> = self.biases.iter().map(|b| vec![0.0; b.len()]).collect();

        let mut delta = grad_out.to_vec();
        for l in (0..layers).rev() {
            let n_in = self.sizes[l];
            let input: Vec<f64> = if l == 0 {
                vec![x]
            } else {
                pre[l - 1].iter().map(|&u| elu(u)).collect()
            };
            for (o, &d) in delta.iter().enumerate() {
                grads_b[l][o] += d;
                for i in 0..n_in {
                    grads_w[l][o * n_in + i] += d * input[i];
                }
            }
            if l > 0 {
                let mut prev = vec![0.0; n_in];
                for (o, &d) in delta.iter().enumerate() {
                    for (i, p) in prev.iter_mut().enumerate() {
                        *p += d * self.weights[l][o * n_in + i];
                    }
                }
                for (p, &u) in prev.iter_mut().zip(&pre[l - 1]) {
                    *p *= elu_derivative(u);
                }
                delta = prev;
            }
        }
        let mut flat = Vec::with_capacity(self.num_params());
        for l in 0..layers {
            flat.extend_from_slice(&grads_w[l]);
            flat.extend_from_slice(&grads_b[l]);
        }
        flat
    }

    /// Flat parameters: per layer, weights (row-major) then biases.
    pub fn params(&self) -> Vec<f64> {
        let mut flat = Vec::with_capacity(self.num_params());
        for (w, b) in self.weights.iter().zip(&self.biases) {
            flat.extend_from_slice(w);
            flat.extend_from_slice(b);
        }
        flat
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.num_params(),
                found: flat.len(),
            });
        }
        let mut off = 0;
        for (w, b) in self.weights.iter_mut().zip(self.biases.iter_mut()) {
            let (nw, nb) = (w.len(), b.len());
            w.copy_from_slice(&flat[off..off + nw]);
            off += nw;
            b.copy_from_slice(&flat[off..off + nb]);
            off += nb;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderKind {
    Fixed,
    Linear,
    Neural,
}

/// Maps a scalar input to the `3nL` gate angles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum AngleEncoder {
    /// `φ = x + b`.
    Fixed { biases: Vec<f64> },
    /// `φ = w·x + b`.
    Linear { weights: Vec<f64>, biases: Vec<f64> },
    /// `φ = MLP(x)`.
    Neural { mlp: Mlp },
}

impl AngleEncoder {
    pub fn kind(&self) -> EncoderKind {
        match self {
            AngleEncoder::Fixed { .. } => EncoderKind::Fixed,
            AngleEncoder::Linear { .. } => EncoderKind::Linear,
            AngleEncoder::Neural { .. } => EncoderKind::Neural,
        }
    }

    fn num_params(&self) -> usize {
        match self {
            AngleEncoder::Fixed { biases } => biases.len(),
            AngleEncoder::Linear { weights, biases } => weights.len() + biases.len(),
            AngleEncoder::Neural { mlp } => mlp.num_params(),
        }
    }

    fn angles(&self, x: f64) -> Vec<f64> {
        match self {
            AngleEncoder::Fixed { biases } => biases.iter().map(|b| x + b).collect(),
            AngleEncoder::Linear { weights, biases } => weights
                .iter()
                .zip(biases)
                .map(|(w, b)| w * x + b)
                .collect(),
            AngleEncoder::Neural { mlp } => mlp.forward(x),
        }
    }
}

/// Where the gate angles come from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "snake_case")]
pub enum ModelKind {
    /// Input-free model with one trainable angle per rotation.
    Density { angles: Vec<f64> },
    /// Input-dependent angles from an encoder.
    Encoded { encoder: AngleEncoder },
}

/// Parameterized quantum circuit on `n_qubits` with `n_layers` layers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PqcModel {
    pub n_qubits: usize,
    pub n_layers: usize,
    pub kind: ModelKind,
}

impl PqcModel {
    pub fn num_angles(&self) -> usize {
        3 * self.n_qubits * self.n_layers
    }

    /// Density-learning model with angles drawn uniformly from `[0, 2π)`.
    pub fn density<R: Rng + ?Sized>(n_qubits: usize, n_layers: usize, rng: &mut R) -> Self {
        let angles = (0..3 * n_qubits * n_layers)
            .map(|_| rng.random_range(0.0..TAU))
            .collect();
        Self {
            n_qubits,
            n_layers,
            kind: ModelKind::Density { angles },
        }
    }

    /// Input-encoding model. Biases are uniform in `[0, 2π)`, linear weights
    /// uniform in `[-1, 1]`, the MLP is Glorot-initialized.
    pub fn encoded<R: Rng + ?Sized>(
        n_qubits: usize,
        n_layers: usize,
        kind: EncoderKind,
        rng: &mut R,
    ) -> Self {
        let a = 3 * n_qubits * n_layers;
        let encoder = match kind {
            EncoderKind::Fixed => AngleEncoder::Fixed {
                biases: (0..a).map(|_| rng.random_range(0.0..TAU)).collect(),
            },
            EncoderKind::Linear => {
                let weights = (0..a).map(|_| rng.random_range(-1.0..=1.0)).collect();
                let biases = (0..a).map(|_| rng.random_range(0.0..TAU)).collect();
                AngleEncoder::Linear { weights, biases }
            }
            EncoderKind::Neural => AngleEncoder::Neural {
                mlp: Mlp::new(vec![1, MLP_HIDDEN, MLP_HIDDEN, a], rng),
            },
        };
        Self {
            n_qubits,
            n_layers,
            kind: ModelKind::Encoded { encoder },
        }
    }

    pub fn is_density(&self) -> bool {
        matches!(self.kind, ModelKind::Density { .. })
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_qubits == 0 || self.n_layers == 0 {
            return Err(Error::invalid("model needs n_qubits ≥ 1 and n_layers ≥ 1"));
        }
        let a = self.num_angles();
        let ok = match &self.kind {
            ModelKind::Density { angles } => angles.len() == a,
            ModelKind::Encoded { encoder } => match encoder {
                AngleEncoder::Fixed { biases } => biases.len() == a,
                AngleEncoder::Linear { weights, biases } => {
                    weights.len() == a && biases.len() == a
                }
                AngleEncoder::Neural { mlp } => {
                    mlp.check_shapes()?;
                    mlp.sizes.first() == Some(&1) && mlp.sizes.last() == Some(&a)
                }
            },
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "parameter shapes do not match n_qubits={} n_layers={}",
                self.n_qubits, self.n_layers
            )))
        }
    }

    pub fn num_params(&self) -> usize {
        match &self.kind {
            ModelKind::Density { angles } => angles.len(),
            ModelKind::Encoded { encoder } => encoder.num_params(),
        }
    }

    /// Flat trainable parameters. Linear encoders list all weights first,
    /// then all biases.
    pub fn params(&self) -> Vec<f64> {
        match &self.kind {
            ModelKind::Density { angles } => angles.clone(),
            ModelKind::Encoded { encoder } => match encoder {
                AngleEncoder::Fixed { biases } => biases.clone(),
                AngleEncoder::Linear { weights, biases } => {
                    weights.iter().chain(biases).copied().collect()
                }
                AngleEncoder::Neural { mlp } => mlp.params(),
            },
        }
    }

    pub fn set_params(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.num_params() {
            return Err(Error::DimensionMismatch {
                expected: self.num_params(),
                found: flat.len(),
            });
        }
        match &mut self.kind {
            ModelKind::Density { angles } => angles.copy_from_slice(flat),
            ModelKind::Encoded { encoder } => match encoder {
                AngleEncoder::Fixed { biases } => biases.copy_from_slice(flat),
                AngleEncoder::Linear { weights, biases } => {
                    let (w, b) = flat.split_at(weights.len());
                    weights.copy_from_slice(w);
                    biases.copy_from_slice(b);
                }
                AngleEncoder::Neural { mlp } => mlp.set_params(flat)?,
            },
        }
        Ok(())
    }

    /// All `3nL` gate angles for input `x`.
    pub fn angles(&self, x: Option<f64>) -> Result<Vec<f64>> {
        match (&self.kind, x) {
            (ModelKind::Density { angles }, _) => Ok(angles.clone()),
            (ModelKind::Encoded { encoder }, Some(x)) => Ok(encoder.angles(x)),
            (ModelKind::Encoded { .. }, None) => {
                Err(Error::invalid("input-encoding model needs an input x"))
            }
        }
    }

    /// `(φ¹, φ², φ³)` of the rotation on qubit `qubit` in layer `layer`.
    pub fn encode_angles(&self, x: Option<f64>, layer: usize, qubit: usize) -> Result<[f64; 3]> {
        if layer >= self.n_layers {
            return Err(Error::IndexOutOfRange {
                index: layer,
                len: self.n_layers,
            });
        }
        if qubit >= self.n_qubits {
            return Err(Error::IndexOutOfRange {
                index: qubit,
                len: self.n_qubits,
            });
        }
        let off = 3 * (layer * self.n_qubits + qubit);
        let a = match (&self.kind, x) {
            (ModelKind::Encoded { encoder: AngleEncoder::Fixed { biases } }, Some(x)) => {
                return Ok([x + biases[off], x + biases[off + 1], x + biases[off + 2]]);
            }
            (
                ModelKind::Encoded {
                    encoder: AngleEncoder::Linear { weights, biases },
                },
                Some(x),
            ) => {
                let f = |i: usize| weights[off + i] * x + biases[off + i];
                return Ok([f(0), f(1), f(2)]);
            }
            _ => self.angles(x)?,
        };
        Ok([a[off], a[off + 1], a[off + 2]])
    }

    /// Circuit output state for explicit angles.
    pub fn state_from_angles(&self, angles: &[f64]) -> Result<PureState> {
        if angles.len() != self.num_angles() {
            return Err(Error::DimensionMismatch {
                expected: self.num_angles(),
                found: angles.len(),
            });
        }
        Ok(run_layers(self.n_qubits, self.n_layers, angles))
    }

    /// `U(x|θ)|0⟩`.
    pub fn circuit_state(&self, x: Option<f64>) -> Result<PureState> {
        self.validate()?;
        let angles = self.angles(x)?;
        self.state_from_angles(&angles)
    }

    /// Pulls an angle-space gradient back to parameter space.
    pub fn angle_vjp(&self, x: Option<f64>, grad_angles: &[f64]) -> Result<Vec<f64>> {
        if grad_angles.len() != self.num_angles() {
            return Err(Error::DimensionMismatch {
                expected: self.num_angles(),
                found: grad_angles.len(),
            });
        }
        match (&self.kind, x) {
            (ModelKind::Density { .. }, _) => Ok(grad_angles.to_vec()),
            (ModelKind::Encoded { encoder }, Some(x)) => Ok(match encoder {
                AngleEncoder::Fixed { .. } => grad_angles.to_vec(),
                AngleEncoder::Linear { .. } => grad_angles
                    .iter()
                    .map(|g| g * x)
                    .chain(grad_angles.iter().copied())
                    .collect(),
                AngleEncoder::Neural { mlp } => mlp.vjp(x, grad_angles),
            }),
            (ModelKind::Encoded { .. }, None) => {
                Err(Error::invalid("input-encoding model needs an input x"))
            }
        }
    }
}

pub(crate) fn run_layers(n_qubits: usize, n_layers: usize, angles: &[f64]) -> PureState {
    let mut state = PureState::zero(n_qubits);
    for l in 0..n_layers {
        for k in 0..n_qubits {
            let off = 3 * (l * n_qubits + k);
            let g = general_rotation([angles[off], angles[off + 1], angles[off + 2]]);
            state.apply_gate2(&g, k);
        }
        if n_qubits >= 2 {
            state.apply_entangler_unchecked();
        }
    }
    state
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::ComplexMatrix;
    use crate::qcore::{born_probabilities, Observable};
    use num_complex::Complex64;
    use rand::SeedableRng;
    use std::f64::consts::PI;

    fn rng(seed: u64) -> crate::Rng {
        crate::Rng::seed_from_u64(seed)
    }

    #[test]
    fn encode_examples() {
        let mut m = PqcModel::encoded(1, 1, EncoderKind::Fixed, &mut rng(0));
        m.set_params(&[0.1, 0.2, 0.3]).unwrap();
        let a = m.encode_angles(Some(0.3), 0, 0).unwrap();
        for (got, want) in a.iter().zip([0.4, 0.5, 0.6]) {
            assert!((got - want).abs() < 1e-15);
        }

        let mut m = PqcModel::encoded(1, 1, EncoderKind::Linear, &mut rng(0));
        m.set_params(&[0.5, 0.0, -1.0, 0.0, 1.0, 0.0]).unwrap();
        assert_eq!(m.encode_angles(Some(2.0), 0, 0).unwrap(), [1.0, 1.0, -2.0]);

        let mut mlp = Mlp::zeros(vec![1, MLP_HIDDEN, MLP_HIDDEN, 6]);
        let beta = vec![0.1, -0.2, 0.3, 0.4, 0.5, -0.6];
        mlp.biases[2] = beta.clone();
        let m = PqcModel {
            n_qubits: 2,
            n_layers: 1,
            kind: ModelKind::Encoded {
                encoder: AngleEncoder::Neural { mlp },
            },
        };
        for x in [-3.0, 0.0, 7.5] {
            assert_eq!(m.angles(Some(x)).unwrap(), beta);
        }
        assert_eq!(m.encode_angles(Some(1.0), 0, 1).unwrap(), [0.4, 0.5, -0.6]);
        assert!(matches!(
            m.encode_angles(Some(1.0), 1, 0),
            Err(Error::IndexOutOfRange { .. })
        ));
        assert!(m.encode_angles(Some(1.0), 0, 2).is_err());
    }

    #[test]
    fn zero_angles_give_zero_state() {
        for l in 1..4 {
            let m = PqcModel {
                n_qubits: 3,
                n_layers: l,
                kind: ModelKind::Density {
                    angles: vec![0.0; 9 * l],
                },
            };
            let s = m.circuit_state(None).unwrap();
            assert!((s.amplitudes()[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn y_half_turn_gives_one() {
        let m = PqcModel {
            n_qubits: 1,
            n_layers: 1,
            kind: ModelKind::Density {
                angles: vec![0.0, PI, 0.0],
            },
        };
        let s = m.circuit_state(None).unwrap();
        assert!(s.amplitudes()[0].norm() < 1e-15);
        assert!((s.amplitudes()[1].norm() - 1.0).abs() < 1e-15);
    }

    /// Builds `U(θ)` as an explicit `N×N` matrix product.
    fn unitary_oracle(n: usize, l: usize, angles: &[f64]) -> ComplexMatrix {
        let dim = 1 << n;
        let mut cz = ComplexMatrix::identity(dim);
        for i in 0..dim {
            let mut sign = 1.0;
            for k in 0..n - 1 {
                let bk = (i >> (n - 1 - k)) & 1;
                let bk1 = (i >> (n - 2 - k)) & 1;
                if bk == 1 && bk1 == 1 {
                    sign = -sign;
                }
            }
            cz.set(i, i, Complex64::new(sign, 0.0));
        }
        let mut u = ComplexMatrix::identity(dim);
        for layer in 0..l {
            let mut layer_u = ComplexMatrix::identity(1);
            for k in 0..n {
                let off = 3 * (layer * n + k);
                let g = general_rotation([angles[off], angles[off + 1], angles[off + 2]]);
                let gm = ComplexMatrix::from_vec(2, 2, vec![g[0][0], g[0][1], g[1][0], g[1][1]])
                    .unwrap();
                layer_u = layer_u.kron(&gm);
            }
            let full = if n >= 2 { &cz * &layer_u } else { layer_u };
            u = &full * &u;
        }
        u
    }

    #[test]
    fn statevector_matches_matrix_product() {
        let mut r = rng(11);
        for n in 1..=3 {
            for l in 1..=3 {
                let m = PqcModel::density(n, l, &mut r);
                let angles = m.angles(None).unwrap();
                let s = m.circuit_state(None).unwrap();
                let u = unitary_oracle(n, l, &angles);
                let dim = 1 << n;
                let mut e0 = vec![Complex64::new(0.0, 0.0); dim];
                e0[0] = Complex64::new(1.0, 0.0);
                let psi = u.matvec(&e0).unwrap();
                let obs = Observable::equispaced(n).unwrap();
                let p = born_probabilities(&s, &obs).unwrap();
                for j in 0..dim {
                    assert!((p[j] - psi[j].norm_sqr()).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn fixed_encoder_equals_shifted_density_model() {
        let mut r = rng(5);
        let enc = PqcModel::encoded(2, 2, EncoderKind::Fixed, &mut r);
        let x = 0.83;
        let shifted: Vec<f64> = enc.params().iter().map(|b| x + b).collect();
        let dens = PqcModel {
            n_qubits: 2,
            n_layers: 2,
            kind: ModelKind::Density { angles: shifted },
        };
        assert_eq!(
            enc.circuit_state(Some(x)).unwrap(),
            dens.circuit_state(None).unwrap()
        );
    }

    #[test]
    fn circuit_state_is_deterministic() {
        let m = PqcModel::encoded(3, 2, EncoderKind::Neural, &mut rng(3));
        assert_eq!(
            m.circuit_state(Some(0.7)).unwrap(),
            m.circuit_state(Some(0.7)).unwrap()
        );
        assert!(m.circuit_state(None).is_err());
    }

    #[test]
    fn elu_is_smooth_at_zero() {
        let h = 1e-6;
        let fd = (elu(h) - elu(-h)) / (2.0 * h);
        assert!((fd - 1.0).abs() < 1e-6);
        assert_eq!(elu(2.0), 2.0);
        assert!((elu(-1.0) - ((-1.0f64).exp() - 1.0)).abs() < 1e-16);
        for u in [-2.0, -0.3, 0.4] {
            let fd = (elu(u + h) - elu(u - h)) / (2.0 * h);
            assert!((fd - elu_derivative(u)).abs() < 1e-8);
        }
    }

    #[test]
    fn mlp_vjp_matches_finite_differences() {
        let mut mlp = Mlp::new(vec![1, 10, 10, 4], &mut rng(8));
        // push some pre-activations negative
        for b in mlp.biases.iter_mut().flatten() {
            *b = -0.2;
        }
        let x = 0.6;
        let g = [0.3, -1.0, 0.5, 2.0];
        let analytic = mlp.vjp(x, &g);
        let p0 = mlp.params();
        let h = 1e-6;
        for i in 0..p0.len() {
            let mut p = p0.clone();
            p[i] += h;
            mlp.set_params(&p).unwrap();
            let fp: f64 = mlp.forward(x).iter().zip(&g).map(|(a, b)| a * b).sum();
            p[i] -= 2.0 * h;
            mlp.set_params(&p).unwrap();
            let fm: f64 = mlp.forward(x).iter().zip(&g).map(|(a, b)| a * b).sum();
            let fd = (fp - fm) / (2.0 * h);
            assert!((fd - analytic[i]).abs() < 1e-7, "param {i}");
        }
    }

    #[test]
    fn parameter_counts() {
        let mut r = rng(1);
        assert_eq!(PqcModel::encoded(5, 2, EncoderKind::Fixed, &mut r).num_params(), 30);
        assert_eq!(PqcModel::encoded(5, 2, EncoderKind::Linear, &mut r).num_params(), 60);
        assert_eq!(PqcModel::density(5, 2, &mut r).num_params(), 30);
        let neural = PqcModel::encoded(5, 5, EncoderKind::Neural, &mut r);
        assert_eq!(neural.num_params(), (10 + 10) + (100 + 10) + (750 + 75));
        neural.validate().unwrap();
    }

    #[test]
    fn model_json_round_trip() {
        let m = PqcModel::encoded(2, 2, EncoderKind::Neural, &mut rng(2));
        let s = serde_json::to_string(&m).unwrap();
        let back: PqcModel = serde_json::from_str(&s).unwrap();
        assert_eq!(m, back);
    }
}

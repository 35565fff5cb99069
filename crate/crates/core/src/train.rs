//! Training: datasets, losses, parameter-shift gradients and Adam.
//!
//! Gradients with respect to gate angles use the two-point shift rule
//! `∂f/∂φ = (f(φ+π/2) - f(φ-π/2)) / 2`, which is exact because every angle
//! enters a single Pauli rotation. Encoder parameters are reached through the
//! encoder's vector-Jacobian product.

use std::f64::consts::FRAC_PI_2;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::PqcModel;
use crate::error::{Error, Result};
use crate::qcore::{born_probabilities, Observable};

/// Probability floor applied before the logarithm in the cross-entropy loss.
pub const PROB_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// `(y - ⟨O⟩)²`.
    Quadratic,
    /// `-log p(o_{j*})` with `j*` the eigenvalue nearest to `y`.
    #[default]
    CrossEntropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Example {
    pub x: Option<f64>,
    pub y: f64,
}

impl Example {
    pub fn new(x: Option<f64>, y: f64) -> Self {
        Self { x, y }
    }
}

/// Labeled examples with a disjoint train / calibration split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    examples: Vec<Example>,
    train: Vec<usize>,
    cal: Vec<usize>,
}

/// Calibration-set size: equal split for `|D| ≤ 20`, otherwise 10.
pub fn default_n_cal(n_total: usize) -> usize {
    if n_total <= 20 {
        n_total / 2
    } else {
        10
    }
}

impl Dataset {
    pub fn new(examples: Vec<Example>, train: Vec<usize>, cal: Vec<usize>) -> Result<Self> {
        if let Some(e) = examples.iter().find(|e| !e.y.is_finite() || e.x.is_some_and(|x| !x.is_finite())) {
            return Err(Error::invalid(format!("non-finite example {e:?}")));
        }
        let mut seen = vec![false; examples.len()];
        for &i in train.iter().chain(&cal) {
            if i >= examples.len() {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: examples.len(),
                });
            }
            if seen[i] {
                return Err(Error::invalid(format!("example {i} appears twice in the split")));
            }
            seen[i] = true;
        }
        Ok(Self {
            examples,
            train,
            cal,
        })
    }

    /// Everything in the training split.
    pub fn train_only(examples: Vec<Example>) -> Result<Self> {
        let train = (0..examples.len()).collect();
        Self::new(examples, train, Vec::new())
    }

    /// Random split with `n_cal` calibration examples.
    pub fn split<R: rand::Rng + ?Sized>(examples: Vec<Example>, n_cal: usize, rng: &mut R) -> Result<Self> {
        if n_cal > examples.len() {
            return Err(Error::invalid(format!(
                "n_cal {n_cal} exceeds dataset size {}",
                examples.len()
            )));
        }
        let mut idx: Vec<usize> = (0..examples.len()).collect();
        idx.shuffle(rng);
        let train = idx.split_off(n_cal);
        Self::new(examples, train, idx)
    }

    pub fn examples(&self) -> &[Example] {
        &self.examples
    }

    pub fn train_indices(&self) -> &[usize] {
        &self.train
    }

    pub fn cal_indices(&self) -> &[usize] {
        &self.cal
    }

    pub fn train_examples(&self) -> Vec<Example> {
        self.train.iter().map(|&i| self.examples[i]).collect()
    }

    pub fn cal_examples(&self) -> Vec<Example> {
        self.cal.iter().map(|&i| self.examples[i]).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    pub epochs: usize,
    /// `None` means full batch.
    pub batch_size: Option<usize>,
    pub seed: u64,
    pub loss: LossKind,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.01,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            epochs: 200,
            batch_size: None,
            seed: 0,
            loss: LossKind::CrossEntropy,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config("learning_rate", "must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) {
            return Err(Error::config("beta1", "must be in [0, 1)"));
        }
        if !(0.0..1.0).contains(&self.beta2) {
            return Err(Error::config("beta2", "must be in [0, 1)"));
        }
        if !(self.eps > 0.0) {
            return Err(Error::config("eps", "must be positive"));
        }
        if self.batch_size == Some(0) {
            return Err(Error::config("batch_size", "must be at least 1"));
        }
        Ok(())
    }
}

/// Distances within this of each other count as ties.
const TIE_TOL: f64 = 1e-12;

/// Index of the eigenvalue nearest to `y`; ties go to the smaller index.
pub fn quantize_label(y: f64, obs: &Observable) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (j, o) in obs.eigenvalues().iter().enumerate() {
        let d = (y - o).abs();
        if d < best_d - TIE_TOL {
            best = j;
            best_d = d;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct LossGrad {
    pub loss: f64,
    pub grad: Vec<f64>,
    /// Examples whose target probability fell below [`PROB_FLOOR`].
    pub clamped: usize,
}

/// Per-example loss and its derivative with respect to the probabilities.
fn loss_terms(probs: &[f64], y: f64, obs: &Observable, kind: LossKind) -> (f64, Vec<f64>, bool) {
    match kind {
        LossKind::CrossEntropy => {
            let j = quantize_label(y, obs);
            let mut dp = vec![0.0; probs.len()];
            if probs[j] < PROB_FLOOR {
                (-PROB_FLOOR.ln(), dp, true)
            } else {
                dp[j] = -1.0 / probs[j];
                (-probs[j].ln(), dp, false)
            }
        }
        LossKind::Quadratic => {
            let mean: f64 = probs.iter().zip(obs.eigenvalues()).map(|(p, o)| p * o).sum();
            let r = y - mean;
            let dp = obs.eigenvalues().iter().map(|o| -2.0 * r * o).collect();
            (r * r, dp, false)
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Born probabilities at the angles and at every `±π/2` shift.
struct ShiftedProbs {
    center: Vec<f64>,
    plus: Vec<Vec<f64>>,
    minus: Vec<Vec<f64>>,
}

fn shifted_probs(model: &PqcModel, angles: &[f64], obs: &Observable) -> Result<ShiftedProbs> {
    let eval = |a: &[f64]| -> Result<Vec<f64>> {
        born_probabilities(&model.state_from_angles(a)?, obs)
    };
    let center = eval(angles)?;
    let mut plus = Vec::with_capacity(angles.len());
    let mut minus = Vec::with_capacity(angles.len());
    let mut shifted = angles.to_vec();
    for i in 0..angles.len() {
        shifted[i] = angles[i] + FRAC_PI_2;
        plus.push(eval(&shifted)?);
        shifted[i] = angles[i] - FRAC_PI_2;
        minus.push(eval(&shifted)?);
        shifted[i] = angles[i];
    }
    Ok(ShiftedProbs { center, plus, minus })
}

impl ShiftedProbs {
    fn example(&self, y: f64, obs: &Observable, kind: LossKind) -> (f64, Vec<f64>, bool) {
        let (loss, dp, clamped) = loss_terms(&self.center, y, obs, kind);
        let grad = self
            .plus
            .iter()
            .zip(&self.minus)
            .map(|(p, m)| 0.5 * (dot(&dp, p) - dot(&dp, m)))
            .collect();
        (loss, grad, clamped)
    }
}

/// Summed loss over `batch` and its gradient at `params`.
pub fn loss_and_gradient(
    model: &PqcModel,
    params: &[f64],
    batch: &[Example],
    loss: LossKind,
    obs: &Observable,
) -> Result<LossGrad> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    if obs.dim() != 1 << model.n_qubits {
        return Err(Error::DimensionMismatch {
            expected: 1 << model.n_qubits,
            found: obs.dim(),
        });
    }
    let mut m = model.clone();
    m.set_params(params)?;
    m.validate()?;

    let mut out = LossGrad {
        loss: 0.0,
        grad: vec![0.0; params.len()],
        clamped: 0,
    };

    if m.is_density() {
        let sp = shifted_probs(&m, &m.angles(None)?, obs)?;
        for e in batch {
            let (l, g, c) = sp.example(e.y, obs, loss);
            out.loss += l;
            out.clamped += usize::from(c);
            for (acc, gi) in out.grad.iter_mut().zip(g) {
                *acc += gi;
            }
        }
        return Ok(out);
    }

    let per_example: Vec<Result<(f64, Vec<f64>, bool)>> = batch
        .par_iter()
        .map(|e| {
            let angles = m.angles(e.x)?;
            let (l, g_angles, c) = shifted_probs(&m, &angles, obs)?.example(e.y, obs, loss);
            Ok((l, m.angle_vjp(e.x, &g_angles)?, c))
        })
        .collect();
    for r in per_example {
        let (l, g, c) = r?;
        out.loss += l;
        out.clamped += usize::from(c);
        for (acc, gi) in out.grad.iter_mut().zip(g) {
            *acc += gi;
        }
    }
    Ok(out)
}

/// Summed loss without the gradient.
pub fn batch_loss(
    model: &PqcModel,
    params: &[f64],
    batch: &[Example],
    loss: LossKind,
    obs: &Observable,
) -> Result<f64> {
    if batch.is_empty() {
        return Err(Error::invalid("empty batch"));
    }
    let mut m = model.clone();
    m.set_params(params)?;
    m.validate()?;
    let probs_at = |x: Option<f64>| born_probabilities(&m.circuit_state(x)?, obs);
    let shared = if m.is_density() { Some(probs_at(None)?) } else { None };
    let terms: Vec<Result<f64>> = batch
        .par_iter()
        .map(|e| {
            let p = match &shared {
                Some(p) => p.clone(),
                None => probs_at(e.x)?,
            };
            Ok(loss_terms(&p, e.y, obs, loss).0)
        })
        .collect();
    terms.into_iter().sum()
}

/// Adam moment state.
#[derive(Debug, Clone, PartialEq)]
pub struct Adam {
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: i32,
}

impl Adam {
    pub fn new(n: usize, cfg: &TrainConfig) -> Self {
        Self {
            lr: cfg.learning_rate,
            beta1: cfg.beta1,
            beta2: cfg.beta2,
            eps: cfg.eps,
            m: vec![0.0; n],
            v: vec![0.0; n],
            t: 0,
        }
    }

    pub fn step(&mut self, params: &mut [f64], grad: &[f64]) {
        self.t += 1;
        let bc1 = 1.0 - self.beta1.powi(self.t);
        let bc2 = 1.0 - self.beta2.powi(self.t);
        for i in 0..params.len() {
            self.m[i] = self.beta1 * self.m[i] + (1.0 - self.beta1) * grad[i];
            self.v[i] = self.beta2 * self.v[i] + (1.0 - self.beta2) * grad[i] * grad[i];
            let m_hat = self.m[i] / bc1;
            let v_hat = self.v[i] / bc2;
            params[i] -= self.lr * m_hat / (v_hat.sqrt() + self.eps);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainOutcome {
    pub params: Vec<f64>,
    /// Batch loss per epoch, evaluated before that epoch's update.
    pub loss_trace: Vec<f64>,
    pub clamped: usize,
}

/// Trains on the training split of `dataset` and returns the final parameters.
pub fn adam_train(
    model: &PqcModel,
    dataset: &Dataset,
    obs: &Observable,
    cfg: &TrainConfig,
) -> Result<TrainOutcome> {
    cfg.validate()?;
    model.validate()?;
    let train = dataset.train_examples();
    if train.is_empty() {
        return Err(Error::invalid("training split is empty"));
    }
    let mut params = model.params();
    let mut adam = Adam::new(params.len(), cfg);
    let mut rng = crate::Rng::seed_from_u64(cfg.seed);
    let mut order: Vec<usize> = (0..train.len()).collect();
    let batch_size = cfg.batch_size.unwrap_or(train.len()).min(train.len());
    let mut loss_trace = Vec::with_capacity(cfg.epochs);
    let mut clamped = 0;

    for epoch in 0..cfg.epochs {
        if batch_size < train.len() {
            order.shuffle(&mut rng);
        }
        let mut epoch_loss = 0.0;
        for chunk in order.chunks(batch_size) {
            let batch: Vec<Example> = chunk.iter().map(|&i| train[i]).collect();
            let lg = loss_and_gradient(model, &params, &batch, cfg.loss, obs)?;
            if !lg.loss.is_finite() || lg.grad.iter().any(|g| !g.is_finite()) {
                return Err(Error::TrainingFailure {
                    epoch,
                    reason: "non-finite loss or gradient".into(),
                });
            }
            epoch_loss += lg.loss;
            clamped += lg.clamped;
            adam.step(&mut params, &lg.grad);
        }
        loss_trace.push(epoch_loss);
    }
    Ok(TrainOutcome {
        params,
        loss_trace,
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ansatz::EncoderKind;
    use crate::qcore::{expectation_pure, PureState};

    fn rng(seed: u64) -> crate::Rng {
        crate::Rng::seed_from_u64(seed)
    }

    #[test]
    fn quantize_examples() {
        let obs = Observable::equispaced(2).unwrap();
        assert_eq!(quantize_label(0.4, &obs), 2);
        assert_eq!(quantize_label(0.0, &obs), 1);
        for (j, &o) in obs.eigenvalues().iter().enumerate() {
            assert_eq!(quantize_label(o, &obs), j);
        }
        assert_eq!(quantize_label(-7.0, &obs), 0);
        assert_eq!(quantize_label(7.0, &obs), 3);
    }

    #[test]
    fn shift_rule_on_single_rotation() {
        let obs = Observable::equispaced(1).unwrap();
        // ⟨Z⟩ = cos θ with o = (-1, 1) is -cos θ for Ry(θ)
        for &theta in &[0.0, 0.3, 1.1, 2.5, -0.7] {
            let f = |t: f64| {
                let mut s = PureState::zero(1);
                s.apply_gate2(&crate::qcore::rotation(crate::qcore::Axis::Y, t), 0);
                expectation_pure(&s, &obs).unwrap()
            };
            let g = 0.5 * (f(theta + FRAC_PI_2) - f(theta - FRAC_PI_2));
            assert!((g - theta.sin()).abs() < 1e-14);
        }
    }

    #[test]
    fn quadratic_contribution() {
        let obs = Observable::equispaced(1).unwrap();
        // probabilities (0.25, 0.75) give ⟨O⟩ = 0.5
        let (l, _, _) = loss_terms(&[0.25, 0.75], 1.0, &obs, LossKind::Quadratic);
        assert!((l - 0.25).abs() < 1e-15);
    }

    fn finite_difference_check(kind: Option<EncoderKind>, loss: LossKind, seed: u64) {
        let mut r = rng(seed);
        let model = match kind {
            None => PqcModel::density(2, 2, &mut r),
            Some(k) => PqcModel::encoded(2, 2, k, &mut r),
        };
        let obs = Observable::equispaced(2).unwrap();
        let batch: Vec<Example> = (0..3)
            .map(|i| Example::new(kind.map(|_| -0.8 + 0.7 * i as f64), -0.9 + 0.8 * i as f64))
            .collect();
        let p = model.params();
        let lg = loss_and_gradient(&model, &p, &batch, loss, &obs).unwrap();
        let h = 1e-5;
        for i in 0..p.len() {
            let mut pp = p.clone();
            pp[i] += h;
            let up = batch_loss(&model, &pp, &batch, loss, &obs).unwrap();
            pp[i] -= 2.0 * h;
            let down = batch_loss(&model, &pp, &batch, loss, &obs).unwrap();
            let fd = (up - down) / (2.0 * h);
            assert!(
                (lg.grad[i] - fd).abs() <= 1e-5 * (fd.abs() + 1e-3),
                "{kind:?} {loss:?} param {i}: {} vs {fd}",
                lg.grad[i]
            );
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for loss in [LossKind::Quadratic, LossKind::CrossEntropy] {
            finite_difference_check(None, loss, 11);
            for kind in [EncoderKind::Fixed, EncoderKind::Linear, EncoderKind::Neural] {
                finite_difference_check(Some(kind), loss, 12);
            }
        }
    }

    #[test]
    fn adam_zero_gradient_is_noop() {
        let cfg = TrainConfig::default();
        let mut adam = Adam::new(3, &cfg);
        let mut p = vec![0.1, -2.0, 3.5];
        adam.step(&mut p, &[0.0, 0.0, 0.0]);
        assert_eq!(p, vec![0.1, -2.0, 3.5]);
    }

    #[test]
    fn adam_first_step_moves_by_lr() {
        let cfg = TrainConfig::default();
        let mut adam = Adam::new(2, &cfg);
        let mut p = vec![1.0, 1.0];
        adam.step(&mut p, &[2.0, -0.5]);
        assert!((p[0] - (1.0 - 0.01 * 2.0 / (2.0 + 1e-8))).abs() < 1e-15);
        assert!((p[1] - (1.0 + 0.01 * 0.5 / (0.5 + 1e-8))).abs() < 1e-15);
    }

    #[test]
    fn zero_epochs_and_determinism() {
        let model = PqcModel::density(2, 1, &mut rng(3));
        let obs = Observable::equispaced(2).unwrap();
        let data = Dataset::train_only(vec![Example::new(None, -1.0); 4]).unwrap();
        let cfg = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let out = adam_train(&model, &data, &obs, &cfg).unwrap();
        assert_eq!(out.params, model.params());
        assert!(out.loss_trace.is_empty());

        let cfg = TrainConfig {
            epochs: 20,
            batch_size: Some(3),
            seed: 9,
            ..TrainConfig::default()
        };
        let a = adam_train(&model, &data, &obs, &cfg).unwrap();
        let b = adam_train(&model, &data, &obs, &cfg).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn density_toy_improves() {
        let model = PqcModel::density(2, 1, &mut rng(4));
        let obs = Observable::equispaced(2).unwrap();
        let data = Dataset::train_only(vec![Example::new(None, -1.0); 5]).unwrap();
        let cfg = TrainConfig {
            epochs: 200,
            ..TrainConfig::default()
        };
        let out = adam_train(&model, &data, &obs, &cfg).unwrap();
        let train = data.train_examples();
        let before = batch_loss(&model, &model.params(), &train, cfg.loss, &obs).unwrap();
        let after = batch_loss(&model, &out.params, &train, cfg.loss, &obs).unwrap();
        assert!(after < before, "{after} !< {before}");
        assert_eq!(out.loss_trace.len(), 200);
    }

    #[test]
    fn split_rules() {
        assert_eq!(default_n_cal(20), 10);
        assert_eq!(default_n_cal(8), 4);
        assert_eq!(default_n_cal(2000), 10);
        let ex: Vec<Example> = (0..20).map(|i| Example::new(None, i as f64 / 20.0)).collect();
        let d = Dataset::split(ex, 10, &mut rng(1)).unwrap();
        let mut all: Vec<usize> = d.train_indices().iter().chain(d.cal_indices()).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..20).collect::<Vec<_>>());
        assert!(Dataset::new(vec![Example::new(None, 0.0)], vec![0], vec![0]).is_err());
        assert!(loss_and_gradient(
            &PqcModel::density(1, 1, &mut rng(0)),
            &[0.0; 3],
            &[],
            LossKind::Quadratic,
            &Observable::equispaced(1).unwrap()
        )
        .is_err());
    }
}

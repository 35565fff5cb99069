//! Experiment configuration: the JSON schema, defaults and validation.
//!
//! A config file is parsed into [`RawConfig`], where every key is optional,
//! and resolved into an [`ExperimentConfig`] with task defaults filled in.
//! Serializing a resolved config and parsing it again yields the same value.

use serde::{Deserialize, Serialize};

use crate::ansatz::EncoderKind;
use crate::conformal::{default_k, Component, GaussianMixture, SinusoidTarget};
use crate::error::{Error, Result};
use crate::harness::{derive_seed, STREAM_TRAIN};
use crate::noise::{ConfusionMatrix, GateNoise, NoiseModel};
use crate::train::{default_n_cal, LossKind, TrainConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Density,
    Regression,
    QuantumClassify,
}

impl Task {
    pub fn as_str(&self) -> &'static str {
        match self {
            Task::Density => "density",
            Task::Regression => "regression",
            Task::QuantumClassify => "quantum-classify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cp,
    Pcp,
    Qcp,
    Naive,
    Oracle,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Cp => "cp",
            Method::Pcp => "pcp",
            Method::Qcp => "qcp",
            Method::Naive => "naive",
            Method::Oracle => "oracle",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "cp" => Ok(Method::Cp),
            "pcp" => Ok(Method::Pcp),
            "qcp" => Ok(Method::Qcp),
            "naive" => Ok(Method::Naive),
            "oracle" => Ok(Method::Oracle),
            other => Err(Error::config("methods", format!("unknown method `{other}`"))),
        }
    }

    /// Whether the method needs calibration scores.
    pub fn is_conformal(&self) -> bool {
        matches!(self, Method::Cp | Method::Pcp | Method::Qcp)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum GateNoiseConfig {
    None,
    Fixed { gamma: f64 },
    Drift { tau: f64 },
}

/// Gate noise plus an optional readout channel. The noise density is the
/// fully mixed state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NoiseConfig {
    pub gate: GateNoiseConfig,
    /// Symmetric readout flip probability.
    #[serde(default)]
    pub readout_flip: f64,
    /// Explicit column-stochastic confusion matrix; overrides `readout_flip`.
    #[serde(default)]
    pub confusion: Option<Vec<Vec<f64>>>,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            gate: GateNoiseConfig::None,
            readout_flip: 0.0,
            confusion: None,
        }
    }
}

impl NoiseConfig {
    pub fn drift(tau: f64) -> Self {
        Self {
            gate: GateNoiseConfig::Drift { tau },
            ..Self::default()
        }
    }

    /// Noise model over `n_outcomes` recorded outcomes.
    pub fn to_model(&self, n_outcomes: usize) -> Result<NoiseModel> {
        let mut model = match self.gate {
            GateNoiseConfig::None => NoiseModel::noiseless(),
            GateNoiseConfig::Fixed { gamma } => NoiseModel::fixed(gamma)
                .map_err(|e| Error::config("noise.gate.gamma", e.to_string()))?,
            GateNoiseConfig::Drift { tau } => NoiseModel::drift(tau)
                .map_err(|e| Error::config("noise.gate.tau", e.to_string()))?,
        };
        if let Some(rows) = &self.confusion {
            model.confusion = Some(
                ConfusionMatrix::new(rows.clone())
                    .map_err(|e| Error::config("noise.confusion", e.to_string()))?,
            );
            if rows.len() != n_outcomes {
                return Err(Error::config(
                    "noise.confusion",
                    format!("needs {n_outcomes} rows, found {}", rows.len()),
                ));
            }
        } else if self.readout_flip > 0.0 {
            model.confusion = Some(
                ConfusionMatrix::symmetric(n_outcomes, self.readout_flip)
                    .map_err(|e| Error::config("noise.readout_flip", e.to_string()))?,
            );
        } else if self.readout_flip < 0.0 || self.readout_flip.is_nan() {
            return Err(Error::config("noise.readout_flip", "must be in [0, 1]"));
        }
        Ok(model)
    }

    /// Drift constant, if the gate noise drifts.
    pub fn tau(&self) -> Option<f64> {
        match self.gate {
            GateNoiseConfig::Drift { tau } => Some(tau),
            _ => None,
        }
    }
}

impl From<&NoiseModel> for GateNoiseConfig {
    fn from(m: &NoiseModel) -> Self {
        match m.gate {
            GateNoise::None => GateNoiseConfig::None,
            GateNoise::Fixed(gamma) => GateNoiseConfig::Fixed { gamma },
            GateNoise::Drift { tau } => GateNoiseConfig::Drift { tau },
        }
    }
}

/// Quantum-classification ensemble parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantumConfig {
    pub n_classes: usize,
    pub dim: usize,
    pub sparsity: f64,
    pub temperature: f64,
}

impl Default for QuantumConfig {
    fn default() -> Self {
        Self {
            n_classes: 10,
            dim: 16,
            sparsity: 0.2,
            temperature: 0.01,
        }
    }
}

/// Training section with every key optional.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawTrain {
    pub learning_rate: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub eps: Option<f64>,
    pub epochs: Option<usize>,
    pub batch_size: Option<usize>,
    pub seed: Option<u64>,
    pub loss: Option<LossKind>,
}

/// Config document as written by a user; absent keys take task defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RawConfig {
    pub task: Option<Task>,
    pub alpha: Option<f64>,
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub m_shots: Option<usize>,
    pub k: Option<usize>,
    pub methods: Option<Vec<Method>>,
    pub n_cal: Option<usize>,
    pub dataset_size: Option<usize>,
    pub n_qubits: Option<usize>,
    pub n_layers: Option<usize>,
    pub encoder: Option<EncoderKind>,
    pub mixture: Option<Vec<Component>>,
    pub regression: Option<SinusoidTarget>,
    pub quantum: Option<QuantumConfig>,
    pub noise: Option<NoiseConfig>,
    pub oracle_grid_step: Option<f64>,
    pub cp_use_shot_mean: Option<bool>,
    pub shots_sweep: Option<Vec<usize>>,
    pub train: Option<RawTrain>,
}

/// Fully resolved experiment description.
///
/// Task-specific fields are `None` for tasks that do not use them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentConfig {
    pub task: Task,
    pub alpha: f64,
    pub seed: u64,
    pub trials: usize,
    pub m_shots: usize,
    /// Neighbour rank for QCP; `None` means `⌈√M⌉`.
    pub k: Option<usize>,
    pub methods: Vec<Method>,
    pub n_cal: usize,
    pub dataset_size: Option<usize>,
    pub n_qubits: Option<usize>,
    pub n_layers: Option<usize>,
    pub encoder: Option<EncoderKind>,
    pub mixture: Option<GaussianMixture>,
    pub regression: Option<SinusoidTarget>,
    pub quantum: Option<QuantumConfig>,
    pub noise: NoiseConfig,
    pub oracle_grid_step: f64,
    /// Deterministic CP uses the shot mean instead of the exact expectation.
    pub cp_use_shot_mean: bool,
    /// Extra shot counts for coverage/size-versus-M curves.
    pub shots_sweep: Vec<usize>,
    pub train: Option<TrainConfig>,
}

impl<'de> Deserialize<'de> for ExperimentConfig {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let raw = RawConfig::deserialize(d)?;
        raw.resolve().map_err(serde::de::Error::custom)
    }
}

pub const DEFAULT_ALPHA: f64 = 0.1;
pub const DEFAULT_TRIALS: usize = 1000;
pub const DEFAULT_SHOTS: usize = 100;
pub const DEFAULT_GRID_STEP: f64 = 1e-3;
pub const DEFAULT_DRIFT_TAU: f64 = 10.0;

impl RawConfig {
    pub fn resolve(self) -> Result<ExperimentConfig> {
        let task = self
            .task
            .ok_or_else(|| Error::config("task", "missing (density | regression | quantum-classify)"))?;
        let seed = self.seed.unwrap_or(0);
        let quantum = task == Task::QuantumClassify;

        let methods = match self.methods {
            Some(m) => {
                let mut m = m;
                m.sort();
                m.dedup();
                m
            }
            None if quantum => vec![Method::Cp, Method::Qcp, Method::Naive],
            None => vec![Method::Cp, Method::Pcp, Method::Qcp, Method::Naive, Method::Oracle],
        };

        let (dataset_size, n_qubits, n_layers) = match task {
            Task::Density => (
                Some(self.dataset_size.unwrap_or(20)),
                Some(self.n_qubits.unwrap_or(5)),
                Some(self.n_layers.unwrap_or(2)),
            ),
            Task::Regression => (
                Some(self.dataset_size.unwrap_or(100)),
                Some(self.n_qubits.unwrap_or(5)),
                Some(self.n_layers.unwrap_or(5)),
            ),
            Task::QuantumClassify => {
                for (field, set) in [
                    ("dataset_size", self.dataset_size.is_some()),
                    ("n_qubits", self.n_qubits.is_some()),
                    ("n_layers", self.n_layers.is_some()),
                    ("encoder", self.encoder.is_some()),
                    ("train", self.train.is_some()),
                    ("mixture", self.mixture.is_some()),
                    ("regression", self.regression.is_some()),
                ] {
                    if set {
                        return Err(Error::config(field, "not used by the quantum-classify task"));
                    }
                }
                (None, None, None)
            }
        };
        if task != Task::QuantumClassify && self.quantum.is_some() {
            return Err(Error::config("quantum", "only used by the quantum-classify task"));
        }
        if task != Task::Density && self.mixture.is_some() {
            return Err(Error::config("mixture", "only used by the density task"));
        }
        if task != Task::Regression && (self.regression.is_some() || self.encoder.is_some()) {
            let field = if self.encoder.is_some() { "encoder" } else { "regression" };
            return Err(Error::config(field, "only used by the regression task"));
        }

        let n_cal = match (self.n_cal, dataset_size) {
            (Some(n), _) => n,
            (None, Some(d)) => default_n_cal(d),
            (None, None) => 10,
        };

        let mixture = match task {
            Task::Density => Some(match self.mixture {
                Some(c) => GaussianMixture::new(c).map_err(|e| Error::config("mixture", e.to_string()))?,
                None => GaussianMixture::symmetric_bimodal(0.75, 0.1).expect("valid default"),
            }),
            _ => None,
        };

        let train = if quantum {
            None
        } else {
            let r = self.train.unwrap_or_default();
            let d = TrainConfig::default();
            Some(TrainConfig {
                learning_rate: r.learning_rate.unwrap_or(d.learning_rate),
                beta1: r.beta1.unwrap_or(d.beta1),
                beta2: r.beta2.unwrap_or(d.beta2),
                eps: r.eps.unwrap_or(d.eps),
                epochs: r.epochs.unwrap_or(d.epochs),
                batch_size: r.batch_size,
                seed: r.seed.unwrap_or_else(|| derive_seed(seed, STREAM_TRAIN)),
                loss: r.loss.unwrap_or(d.loss),
            })
        };

        let cfg = ExperimentConfig {
            task,
            alpha: self.alpha.unwrap_or(DEFAULT_ALPHA),
            seed,
            trials: self.trials.unwrap_or(DEFAULT_TRIALS),
            m_shots: self.m_shots.unwrap_or(DEFAULT_SHOTS),
            k: self.k,
            methods,
            n_cal,
            dataset_size,
            n_qubits,
            n_layers,
            encoder: match task {
                Task::Regression => Some(self.encoder.unwrap_or(EncoderKind::Neural)),
                _ => None,
            },
            mixture,
            regression: match task {
                Task::Regression => Some(self.regression.unwrap_or_default()),
                _ => None,
            },
            quantum: quantum.then(|| self.quantum.unwrap_or_default()),
            noise: self.noise.unwrap_or_else(|| {
                if quantum {
                    NoiseConfig::drift(DEFAULT_DRIFT_TAU)
                } else {
                    NoiseConfig::default()
                }
            }),
            oracle_grid_step: self.oracle_grid_step.unwrap_or(DEFAULT_GRID_STEP),
            cp_use_shot_mean: self.cp_use_shot_mean.unwrap_or(false),
            shots_sweep: self.shots_sweep.unwrap_or_default(),
            train,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

impl ExperimentConfig {
    /// Resolves a JSON document.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawConfig = serde_json::from_str(text).map_err(|e| {
            let msg = e.to_string();
            let field = msg
                .split('`')
                .nth(1)
                .filter(|_| msg.contains("unknown field") || msg.contains("missing field"))
                .unwrap_or("<document>")
                .to_string();
            Error::config(field, msg)
        })?;
        raw.resolve()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Neighbour rank used by QCP at `m_shots` shots.
    pub fn qcp_k(&self, m_shots: usize) -> usize {
        self.k.unwrap_or_else(|| default_k(m_shots))
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::config("alpha", format!("{} is not in (0, 1)", self.alpha)));
        }
        if self.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        if self.m_shots == 0 {
            return Err(Error::config("m_shots", "must be at least 1"));
        }
        if self.shots_sweep.contains(&0) {
            return Err(Error::config("shots_sweep", "shot counts must be at least 1"));
        }
        if let Some(k) = self.k {
            let min_m = self.shots_sweep.iter().copied().chain([self.m_shots]).min().unwrap_or(0);
            if k == 0 || k > min_m {
                return Err(Error::config("k", format!("must be in [1, M = {min_m}]")));
            }
        }
        if self.methods.is_empty() {
            return Err(Error::config("methods", "at least one method is required"));
        }
        if self.n_cal == 0 {
            return Err(Error::config("n_cal", "must be at least 1"));
        }
        if !(self.oracle_grid_step > 0.0) {
            return Err(Error::config("oracle_grid_step", "must be positive"));
        }
        if let Some(d) = self.dataset_size {
            if d <= self.n_cal {
                return Err(Error::config(
                    "dataset_size",
                    format!("{d} leaves no training examples after n_cal = {}", self.n_cal),
                ));
            }
        }
        if self.n_qubits == Some(0) || self.n_qubits.is_some_and(|n| n > 10) {
            return Err(Error::config("n_qubits", "must be in [1, 10]"));
        }
        if self.n_layers == Some(0) {
            return Err(Error::config("n_layers", "must be at least 1"));
        }
        if let Some(t) = &self.train {
            t.validate().map_err(|e| match e {
                Error::Config { field, message } => Error::config(format!("train.{field}"), message),
                other => other,
            })?;
        }
        if let Some(r) = &self.regression {
            if !(r.sd > 0.0) || !(r.x_lo < r.x_hi) {
                return Err(Error::config("regression", "needs sd > 0 and x_lo < x_hi"));
            }
        }
        if let Some(q) = &self.quantum {
            if q.n_classes == 0 {
                return Err(Error::config("quantum.n_classes", "must be at least 1"));
            }
            if q.dim < 2 || !q.dim.is_power_of_two() {
                return Err(Error::config("quantum.dim", "must be a power of two ≥ 2"));
            }
            if !(q.sparsity > 0.0 && q.sparsity <= 1.0) {
                return Err(Error::config("quantum.sparsity", "must be in (0, 1]"));
            }
            if !(q.temperature > 0.0) {
                return Err(Error::config("quantum.temperature", "must be positive"));
            }
        }
        if self.task == Task::QuantumClassify {
            if let Some(m) = self.methods.iter().find(|m| matches!(m, Method::Pcp | Method::Oracle)) {
                return Err(Error::config(
                    "methods",
                    format!("`{}` is not available for quantum-classify", m.as_str()),
                ));
            }
        }
        self.to_noise_model()?;
        Ok(())
    }

    /// Number of recorded outcomes per shot.
    pub fn n_outcomes(&self) -> usize {
        match (self.task, &self.quantum, self.n_qubits) {
            (Task::QuantumClassify, Some(q), _) => q.n_classes,
            (_, _, Some(n)) => 1 << n,
            _ => 0,
        }
    }

    pub fn to_noise_model(&self) -> Result<NoiseModel> {
        self.noise.to_model(self.n_outcomes())
    }

    /// The resolved config with every field spelled out, as a [`RawConfig`].
    pub fn to_raw(&self) -> RawConfig {
        serde_json::from_value(serde_json::to_value(self).expect("config serializes"))
            .expect("resolved config is a valid raw config")
    }
}

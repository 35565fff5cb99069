//! Model preparation and the per-trial loop.

use rand::SeedableRng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::ansatz::{EncoderKind, PqcModel};
use crate::conformal::{
    conformal_quantile, coverage_measure, cp_set_deterministic, drift_weights, empirical_probabilities,
    histogram_score, knn_score, naive_set, oracle_set, qcp_set_classification, qcp_set_regression,
    uniform_weights, GaussianMixture, NaiveGeometry, PredictionSet, SinusoidTarget,
};
use crate::error::{Error, Result};
use crate::harness::config::{ExperimentConfig, Method, Task};
use crate::harness::stats::{empirical_coverage_stats, CoverageStats};
use crate::harness::{derive_seed, trial_seed, STREAM_DATA, STREAM_ENSEMBLE, STREAM_INIT};
use crate::noise::{NoiseModel, ShotDistribution};
use crate::qcore::{born_probabilities, Observable};
use crate::qdata::{povm_shot_distribution, pretty_good_measurement, Povm, StateClassEnsemble};
use crate::train::{adam_train, Dataset, Example, TrainOutcome};
use crate::Rng;

pub const CSV_HEADER: &str = "trial,method,covered,mass,size,quantile,m_shots";

/// Oracle search window, in component standard deviations beyond the means.
const ORACLE_SPAN_SD: f64 = 12.0;

/// Outcome of one method in one trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub method: Method,
    pub covered: bool,
    /// True-distribution mass of the set; equals `covered` for label sets.
    pub mass: f64,
    pub size: f64,
    /// Conformal threshold; NaN for non-conformal methods.
    pub quantile: f64,
    pub m_shots: usize,
}

fn csv_float(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v}")
    }
}

impl TrialRecord {
    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{},{}",
            self.trial,
            self.method.as_str(),
            u8::from(self.covered),
            csv_float(self.mass),
            csv_float(self.size),
            csv_float(self.quantile),
            self.m_shots
        )
    }
}

/// Trained model or measurement, ready to produce shots.
#[derive(Debug, Clone)]
pub enum Predictor {
    Density {
        model: PqcModel,
        obs: Observable,
        truth: GaussianMixture,
        shots: ShotDistribution,
        /// Noiseless `⟨O⟩`.
        y_hat: f64,
        oracle: Option<PredictionSet>,
    },
    Regression {
        model: PqcModel,
        obs: Observable,
        target: SinusoidTarget,
        noise: NoiseModel,
    },
    Quantum {
        ensemble: StateClassEnsemble,
        povm: Povm,
        /// Shot distribution of each class state.
        shots: Vec<ShotDistribution>,
        tau: Option<f64>,
    },
}

#[derive(Debug, Clone)]
pub struct Prepared {
    pub config: ExperimentConfig,
    pub predictor: Predictor,
    pub training: Option<TrainOutcome>,
}

fn oracle_bounds(truth: &GaussianMixture) -> (f64, f64) {
    let lo = truth
        .components()
        .iter()
        .map(|c| c.mean - ORACLE_SPAN_SD * c.sd)
        .fold(f64::INFINITY, f64::min);
    let hi = truth
        .components()
        .iter()
        .map(|c| c.mean + ORACLE_SPAN_SD * c.sd)
        .fold(f64::NEG_INFINITY, f64::max);
    (lo, hi)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn train_model(cfg: &ExperimentConfig, mut model: PqcModel, examples: Vec<Example>, obs: &Observable) -> Result<(PqcModel, TrainOutcome)> {
    let tc = cfg.train.as_ref().ok_or_else(|| Error::config("train", "missing"))?;
    let outcome = adam_train(&model, &Dataset::train_only(examples)?, obs, tc)?;
    model.set_params(&outcome.params)?;
    Ok((model, outcome))
}

/// Builds the ground truth, trains the model (or builds the measurement) and
/// precomputes everything shared by the trials.
pub fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    cfg.validate()?;
    let noise = cfg.to_noise_model()?;
    let mut data_rng = Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_DATA));
    let mut init_rng = Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_INIT));
    let missing = |f: &str| Error::config(f.to_string(), "missing");

    match cfg.task {
        Task::Density => {
            let n = cfg.n_qubits.ok_or_else(|| missing("n_qubits"))?;
            let l = cfg.n_layers.ok_or_else(|| missing("n_layers"))?;
            let truth = cfg.mixture.clone().ok_or_else(|| missing("mixture"))?;
            let n_train = cfg.dataset_size.ok_or_else(|| missing("dataset_size"))? - cfg.n_cal;
            let examples = (0..n_train)
                .map(|_| Example::new(None, truth.sample(&mut data_rng)))
                .collect();
            let obs = Observable::equispaced(n)?;
            let (model, outcome) = train_model(cfg, PqcModel::density(n, l, &mut init_rng), examples, &obs)?;
            let clean = born_probabilities(&model.circuit_state(None)?, &obs)?;
            let y_hat = dot(&clean, obs.eigenvalues());
            let shots = ShotDistribution::from_probabilities(clean, &obs, &noise)?;
            let oracle = if cfg.methods.contains(&Method::Oracle) {
                Some(oracle_set(&truth, cfg.alpha, oracle_bounds(&truth), cfg.oracle_grid_step)?)
            } else {
                None
            };
            Ok(Prepared {
                config: cfg.clone(),
                predictor: Predictor::Density {
                    model,
                    obs,
                    truth,
                    shots,
                    y_hat,
                    oracle,
                },
                training: Some(outcome),
            })
        }
        Task::Regression => {
            let n = cfg.n_qubits.ok_or_else(|| missing("n_qubits"))?;
            let l = cfg.n_layers.ok_or_else(|| missing("n_layers"))?;
            let target = cfg.regression.ok_or_else(|| missing("regression"))?;
            let n_train = cfg.dataset_size.ok_or_else(|| missing("dataset_size"))? - cfg.n_cal;
            let examples = (0..n_train)
                .map(|_| target.sample(&mut data_rng).map(|(x, y)| Example::new(Some(x), y)))
                .collect::<Result<Vec<_>>>()?;
            let obs = Observable::equispaced(n)?;
            let kind = cfg.encoder.unwrap_or(EncoderKind::Neural);
            let (model, outcome) =
                train_model(cfg, PqcModel::encoded(n, l, kind, &mut init_rng), examples, &obs)?;
            Ok(Prepared {
                config: cfg.clone(),
                predictor: Predictor::Regression {
                    model,
                    obs,
                    target,
                    noise,
                },
                training: Some(outcome),
            })
        }
        Task::QuantumClassify => {
            let q = cfg.quantum.ok_or_else(|| missing("quantum"))?;
            let mut ens_rng = Rng::seed_from_u64(derive_seed(cfg.seed, STREAM_ENSEMBLE));
            let ensemble = StateClassEnsemble::random(q.n_classes, q.dim, q.sparsity, q.temperature, &mut ens_rng)?;
            let povm = pretty_good_measurement(&ensemble)?;
            let shots = ensemble
                .states
                .iter()
                .map(|rho| povm_shot_distribution(rho, &povm, Some(&noise)))
                .collect::<Result<Vec<_>>>()?;
            Ok(Prepared {
                config: cfg.clone(),
                predictor: Predictor::Quantum {
                    ensemble,
                    povm,
                    shots,
                    tau: cfg.noise.tau(),
                },
                training: None,
            })
        }
    }
}

/// One calibration or test point of a real-valued task.
struct Point {
    x: Option<f64>,
    y: f64,
    outcomes: Vec<usize>,
    values: Vec<f64>,
    y_hat: f64,
}

/// Shots recorded for one input.
struct Shots {
    outcomes: Vec<usize>,
    values: Vec<f64>,
    y_hat: f64,
}

/// Scores and threshold from a calibration run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Calibration {
    pub method: Method,
    pub alpha: f64,
    pub m_shots: usize,
    /// Neighbour rank for the k-NN score.
    pub k: Option<usize>,
    /// Shot weights for the histogram score.
    pub weights: Option<Vec<f64>>,
    /// Infinite scores are written as `null`.
    #[serde(with = "inf_as_null::vec")]
    pub scores: Vec<f64>,
    #[serde(with = "inf_as_null")]
    pub quantile: f64,
}

/// JSON has no infinity; `+∞` round-trips through `null`.
mod inf_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_some(v)
        } else {
            s.serialize_none()
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::INFINITY))
    }

    pub mod vec {
        use serde::ser::SerializeSeq;
        use serde::{Deserialize, Deserializer, Serializer};

        pub fn serialize<S: Serializer>(v: &[f64], s: S) -> Result<S::Ok, S::Error> {
            let mut seq = s.serialize_seq(Some(v.len()))?;
            for x in v {
                seq.serialize_element(&x.is_finite().then_some(*x))?;
            }
            seq.end()
        }

        pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
            Ok(Vec::<Option<f64>>::deserialize(d)?
                .into_iter()
                .map(|x| x.unwrap_or(f64::INFINITY))
                .collect())
        }
    }
}

/// A prediction set for one input together with its shots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub method: Method,
    pub x: Option<f64>,
    pub label: Option<usize>,
    pub shots: Vec<f64>,
    pub set: PredictionSet,
}

impl Prepared {
    /// Wraps an already trained model.
    pub fn from_model(cfg: &ExperimentConfig, model: PqcModel) -> Result<Self> {
        cfg.validate()?;
        model.validate()?;
        let noise = cfg.to_noise_model()?;
        let n = cfg.n_qubits.unwrap_or(0);
        if model.n_qubits != n || Some(model.n_layers) != cfg.n_layers {
            return Err(Error::config("n_qubits", "model shape does not match the config"));
        }
        let obs = Observable::equispaced(n)?;
        let predictor = match cfg.task {
            Task::Density if model.is_density() => {
                let truth = cfg.mixture.clone().ok_or_else(|| Error::config("mixture", "missing"))?;
                let clean = born_probabilities(&model.circuit_state(None)?, &obs)?;
                let y_hat = dot(&clean, obs.eigenvalues());
                let oracle = if cfg.methods.contains(&Method::Oracle) {
                    Some(oracle_set(&truth, cfg.alpha, oracle_bounds(&truth), cfg.oracle_grid_step)?)
                } else {
                    None
                };
                Predictor::Density {
                    shots: ShotDistribution::from_probabilities(clean, &obs, &noise)?,
                    model,
                    obs,
                    truth,
                    y_hat,
                    oracle,
                }
            }
            Task::Regression if !model.is_density() => Predictor::Regression {
                model,
                obs,
                target: cfg.regression.ok_or_else(|| Error::config("regression", "missing"))?,
                noise,
            },
            _ => return Err(Error::config("task", "model mode does not match the task")),
        };
        Ok(Self {
            config: cfg.clone(),
            predictor,
            training: None,
        })
    }

    /// The trained circuit model, if the task has one.
    pub fn model(&self) -> Option<&PqcModel> {
        match &self.predictor {
            Predictor::Density { model, .. } | Predictor::Regression { model, .. } => Some(model),
            Predictor::Quantum { .. } => None,
        }
    }

    fn shots_at(&self, x: Option<f64>, m_shots: usize, rng: &mut Rng) -> Result<Shots> {
        let (obs, outcomes, y_hat) = match &self.predictor {
            Predictor::Density { obs, shots, y_hat, .. } => (obs, shots.sample(m_shots, rng)?, *y_hat),
            Predictor::Regression { model, obs, noise, .. } => {
                let x = x.ok_or_else(|| Error::invalid("regression needs an input x"))?;
                let clean = born_probabilities(&model.circuit_state(Some(x))?, obs)?;
                let y_hat = dot(&clean, obs.eigenvalues());
                let dist = ShotDistribution::from_probabilities(clean, obs, noise)?;
                (obs, dist.sample(m_shots, rng)?, y_hat)
            }
            Predictor::Quantum { .. } => return Err(Error::invalid("classification has no real-valued shots")),
        };
        let values = outcomes.iter().map(|&j| obs.eigenvalues()[j]).collect();
        Ok(Shots {
            outcomes,
            values,
            y_hat,
        })
    }

    fn draw_point(&self, m_shots: usize, rng: &mut Rng) -> Result<Point> {
        let (x, y) = match &self.predictor {
            Predictor::Density { truth, .. } => (None, truth.sample(rng)),
            Predictor::Regression { target, .. } => {
                let (x, y) = target.sample(rng)?;
                (Some(x), y)
            }
            Predictor::Quantum { .. } => return Err(Error::invalid("classification has no real-valued points")),
        };
        let s = self.shots_at(x, m_shots, rng)?;
        Ok(Point {
            x,
            y,
            outcomes: s.outcomes,
            values: s.values,
            y_hat: s.y_hat,
        })
    }

    fn point_estimate(&self, values: &[f64], y_hat: f64) -> f64 {
        if self.config.cp_use_shot_mean {
            values.iter().sum::<f64>() / values.len() as f64
        } else {
            y_hat
        }
    }

    fn obs(&self) -> Option<&Observable> {
        match &self.predictor {
            Predictor::Density { obs, .. } | Predictor::Regression { obs, .. } => Some(obs),
            Predictor::Quantum { .. } => None,
        }
    }

    fn knn_rank(&self, method: Method, m_shots: usize) -> Option<usize> {
        match method {
            Method::Pcp => Some(1),
            Method::Qcp => Some(self.config.qcp_k(m_shots)),
            _ => None,
        }
    }

    fn real_scores(&self, method: Method, cal: &[Point], m_shots: usize) -> Result<Vec<f64>> {
        match method {
            Method::Cp => Ok(cal
                .iter()
                .map(|p| (p.y - self.point_estimate(&p.values, p.y_hat)).powi(2))
                .collect()),
            Method::Qcp | Method::Pcp => {
                let k = self.knn_rank(method, m_shots).expect("k-NN method");
                cal.iter().map(|p| knn_score(p.y, &p.values, k)).collect()
            }
            _ => Err(Error::invalid(format!("`{}` does not calibrate", method.as_str()))),
        }
    }

    fn real_set(&self, method: Method, test: &Shots, x: Option<f64>, q: f64) -> Result<PredictionSet> {
        let cfg = &self.config;
        let obs = self.obs().expect("real-valued task");
        match method {
            Method::Cp => cp_set_deterministic(self.point_estimate(&test.values, test.y_hat), q),
            Method::Qcp | Method::Pcp => {
                let k = self.knn_rank(method, test.values.len()).expect("k-NN method");
                qcp_set_regression(&test.values, q, k)
            }
            Method::Naive => {
                let probs = empirical_probabilities(&test.outcomes, obs.len())?;
                naive_set(&probs, cfg.alpha, &NaiveGeometry::equispaced(obs.eigenvalues().to_vec())?)
            }
            Method::Oracle => match &self.predictor {
                Predictor::Density { oracle: Some(s), .. } => Ok(s.clone()),
                _ => {
                    let truth = self.truth_at(x)?;
                    oracle_set(&truth, cfg.alpha, oracle_bounds(&truth), cfg.oracle_grid_step)
                }
            },
        }
    }

    fn truth_at(&self, x: Option<f64>) -> Result<GaussianMixture> {
        match &self.predictor {
            Predictor::Density { truth, .. } => Ok(truth.clone()),
            Predictor::Regression { target, .. } => {
                target.conditional(x.ok_or_else(|| Error::invalid("regression needs an input x"))?)
            }
            Predictor::Quantum { .. } => Err(Error::invalid("classification has no density")),
        }
    }

    fn label_weights(&self, method: Method, m_shots: usize) -> Result<Vec<f64>> {
        match (&self.predictor, method) {
            (Predictor::Quantum { tau: Some(t), .. }, Method::Qcp) => drift_weights(m_shots, *t),
            _ => Ok(uniform_weights(m_shots)),
        }
    }

    fn draw_labeled(&self, m_shots: usize, rng: &mut Rng) -> Result<(usize, Vec<usize>)> {
        let Predictor::Quantum { ensemble, shots, .. } = &self.predictor else {
            return Err(Error::invalid("not a classification task"));
        };
        let y = ensemble.sample_label(rng);
        Ok((y, shots[y].sample(m_shots, rng)?))
    }

    fn n_labels(&self) -> usize {
        match &self.predictor {
            Predictor::Quantum { ensemble, .. } => ensemble.n_classes(),
            _ => 0,
        }
    }

    fn label_set(&self, method: Method, test: &[usize], q: f64, weights: &[f64]) -> Result<PredictionSet> {
        match method {
            Method::Cp | Method::Qcp => qcp_set_classification(test, q, weights, self.n_labels()),
            Method::Naive => {
                let probs = empirical_probabilities(test, self.n_labels())?;
                naive_set(&probs, self.config.alpha, &NaiveGeometry::Labels)
            }
            Method::Pcp | Method::Oracle => Err(Error::config(
                "methods",
                format!("`{}` is not available for quantum-classify", method.as_str()),
            )),
        }
    }

    /// Draws `n_cal` fresh calibration points and computes the threshold of
    /// `method`.
    pub fn calibrate(&self, method: Method, m_shots: usize, rng: &mut Rng) -> Result<Calibration> {
        if !method.is_conformal() {
            return Err(Error::invalid(format!("`{}` does not calibrate", method.as_str())));
        }
        let n_cal = self.config.n_cal;
        let (scores, k, weights) = match &self.predictor {
            Predictor::Quantum { .. } => {
                let w = self.label_weights(method, m_shots)?;
                let scores = (0..n_cal)
                    .map(|_| {
                        let (y, s) = self.draw_labeled(m_shots, rng)?;
                        histogram_score(y, &s, &w, self.n_labels())
                    })
                    .collect::<Result<Vec<_>>>()?;
                (scores, None, Some(w))
            }
            _ => {
                let cal = (0..n_cal)
                    .map(|_| self.draw_point(m_shots, rng))
                    .collect::<Result<Vec<_>>>()?;
                (self.real_scores(method, &cal, m_shots)?, self.knn_rank(method, m_shots), None)
            }
        };
        Ok(Calibration {
            method,
            alpha: self.config.alpha,
            m_shots,
            k,
            weights,
            quantile: conformal_quantile(&scores, self.config.alpha)?,
            scores,
        })
    }

    /// Prediction set for input `x` (regression) or for a state of class
    /// `label` (classification), from `cal.m_shots` fresh shots.
    pub fn predict(
        &self,
        cal: &Calibration,
        x: Option<f64>,
        label: Option<usize>,
        rng: &mut Rng,
    ) -> Result<Prediction> {
        let m = cal.m_shots;
        match &self.predictor {
            Predictor::Quantum { shots, .. } => {
                let y = label.ok_or_else(|| Error::invalid("classification needs the class of the prepared state"))?;
                let dist = shots.get(y).ok_or(Error::IndexOutOfRange {
                    index: y,
                    len: shots.len(),
                })?;
                let outcomes = dist.sample(m, rng)?;
                let weights = match &cal.weights {
                    Some(w) => w.clone(),
                    None => self.label_weights(cal.method, m)?,
                };
                let set = self.label_set(cal.method, &outcomes, cal.quantile, &weights)?;
                Ok(Prediction {
                    method: cal.method,
                    x: None,
                    label: Some(y),
                    shots: outcomes.iter().map(|&o| o as f64).collect(),
                    set,
                })
            }
            _ => {
                let test = self.shots_at(x, m, rng)?;
                let set = self.real_set(cal.method, &test, x, cal.quantile)?;
                Ok(Prediction {
                    method: cal.method,
                    x,
                    label: None,
                    shots: test.values,
                    set,
                })
            }
        }
    }

    fn real_trial(&self, m_shots: usize, trial: usize, rng: &mut Rng) -> Result<Vec<TrialRecord>> {
        let cfg = &self.config;
        let cal = (0..cfg.n_cal)
            .map(|_| self.draw_point(m_shots, rng))
            .collect::<Result<Vec<_>>>()?;
        let test = self.draw_point(m_shots, rng)?;
        let truth = self.truth_at(test.x)?;
        let (y_test, x_test) = (test.y, test.x);
        let test = Shots {
            outcomes: test.outcomes,
            values: test.values,
            y_hat: test.y_hat,
        };

        let mut out = Vec::with_capacity(cfg.methods.len());
        for &method in &cfg.methods {
            let quantile = if method.is_conformal() {
                conformal_quantile(&self.real_scores(method, &cal, m_shots)?, cfg.alpha)?
            } else {
                f64::NAN
            };
            let set = self.real_set(method, &test, x_test, quantile)?;
            out.push(TrialRecord {
                trial,
                method,
                covered: set.contains(y_test),
                mass: coverage_measure(&set, &truth)?,
                size: set.size(),
                quantile,
                m_shots,
            });
        }
        Ok(out)
    }

    fn label_trial(&self, m_shots: usize, trial: usize, rng: &mut Rng) -> Result<Vec<TrialRecord>> {
        let cfg = &self.config;
        let n_labels = self.n_labels();
        let cal = (0..cfg.n_cal)
            .map(|_| self.draw_labeled(m_shots, rng))
            .collect::<Result<Vec<_>>>()?;
        let (y_test, test) = self.draw_labeled(m_shots, rng)?;

        let mut out = Vec::with_capacity(cfg.methods.len());
        for &method in &cfg.methods {
            let weights = self.label_weights(method, m_shots)?;
            let quantile = if method.is_conformal() {
                let scores = cal
                    .iter()
                    .map(|(y, s)| histogram_score(*y, s, &weights, n_labels))
                    .collect::<Result<Vec<_>>>()?;
                conformal_quantile(&scores, cfg.alpha)?
            } else {
                f64::NAN
            };
            let set = self.label_set(method, &test, quantile, &weights)?;
            let covered = set.contains_label(y_test);
            out.push(TrialRecord {
                trial,
                method,
                covered,
                mass: if covered { 1.0 } else { 0.0 },
                size: set.size(),
                quantile,
                m_shots,
            });
        }
        Ok(out)
    }
}


/// Runs trial `index` at `m_shots` shots per point, one record per method.
pub fn run_trial(prep: &Prepared, m_shots: usize, index: usize) -> Result<Vec<TrialRecord>> {
    if m_shots == 0 {
        return Err(Error::invalid("m_shots must be at least 1"));
    }
    let mut rng = Rng::seed_from_u64(trial_seed(prep.config.seed, index));
    match prep.predictor {
        Predictor::Quantum { .. } => prep.label_trial(m_shots, index, &mut rng),
        _ => prep.real_trial(m_shots, index, &mut rng),
    }
}

/// All configured trials in parallel, in trial order.
pub fn run_trials(prep: &Prepared, m_shots: usize) -> Result<Vec<TrialRecord>> {
    let per_trial = (0..prep.config.trials)
        .into_par_iter()
        .map(|t| run_trial(prep, m_shots, t))
        .collect::<Result<Vec<_>>>()?;
    Ok(per_trial.into_iter().flatten().collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MethodReport {
    pub method: Method,
    #[serde(flatten)]
    pub stats: CoverageStats,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub task: Task,
    pub alpha: f64,
    pub n_cal: usize,
    pub m_shots: usize,
    pub trials: usize,
    pub methods: Vec<MethodReport>,
}

impl CoverageReport {
    pub fn get(&self, method: Method) -> Option<&CoverageStats> {
        self.methods.iter().find(|r| r.method == method).map(|r| &r.stats)
    }
}

/// Per-method coverage statistics of `records` at `m_shots`.
pub fn summarize(cfg: &ExperimentConfig, records: &[TrialRecord], m_shots: usize) -> Result<CoverageReport> {
    let mut methods = Vec::with_capacity(cfg.methods.len());
    for &method in &cfg.methods {
        let rs: Vec<&TrialRecord> = records
            .iter()
            .filter(|r| r.method == method && r.m_shots == m_shots)
            .collect();
        let masses: Vec<f64> = rs.iter().map(|r| r.mass).collect();
        let hits: Vec<bool> = rs.iter().map(|r| r.covered).collect();
        let sizes: Vec<f64> = rs.iter().map(|r| r.size).collect();
        methods.push(MethodReport {
            method,
            stats: empirical_coverage_stats(&masses, &hits, &sizes, cfg.alpha, cfg.n_cal)?,
        });
    }
    Ok(CoverageReport {
        task: cfg.task,
        alpha: cfg.alpha,
        n_cal: cfg.n_cal,
        m_shots,
        trials: cfg.trials,
        methods,
    })
}

/// Coverage and size of one method at one shot count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub m_shots: usize,
    pub method: Method,
    pub coverage: f64,
    pub indicator_coverage: f64,
    pub mean_size: Option<f64>,
    pub whole_space_trials: usize,
}

#[derive(Debug, Clone)]
pub struct ExperimentOutput {
    pub config: ExperimentConfig,
    pub report: CoverageReport,
    pub records: Vec<TrialRecord>,
    pub training: Option<TrainOutcome>,
    /// Points of the shot sweep; empty without `shots_sweep`.
    pub sweep: Vec<SweepPoint>,
}

/// Prepares the model, runs all trials and the optional shot sweep.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentOutput> {
    let prep = prepare(cfg)?;
    let records = run_trials(&prep, cfg.m_shots)?;
    let report = summarize(cfg, &records, cfg.m_shots)?;
    let mut sweep = Vec::new();
    for &m in &cfg.shots_sweep {
        let rs = run_trials(&prep, m)?;
        for r in summarize(cfg, &rs, m)?.methods {
            sweep.push(SweepPoint {
                m_shots: m,
                method: r.method,
                coverage: r.stats.coverage,
                indicator_coverage: r.stats.indicator_coverage,
                mean_size: r.stats.mean_size,
                whole_space_trials: r.stats.whole_space_trials,
            });
        }
    }
    Ok(ExperimentOutput {
        config: prep.config.clone(),
        report,
        records,
        training: prep.training,
        sweep,
    })
}

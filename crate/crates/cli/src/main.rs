//! `qconf`: train circuit models, calibrate conformal predictors and run
//! coverage experiments from JSON configs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use qconf_core::ansatz::PqcModel;
use qconf_core::harness::{
    self, coverage_probability_bound, derive_seed, generalization_bound, prepare, run_experiment,
    seeded_rng, Calibration, ExperimentConfig, ExperimentOutput, Method, Prepared, RawConfig, Task, CSV_HEADER,
    STREAM_CALIBRATE, STREAM_PREDICT,
};
use qconf_core::train::TrainOutcome;
use qconf_core::Error;

#[derive(Parser, Debug)]
#[command(name = "qconf", version, about = "Conformal prediction for parameterized quantum circuits")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Default)]
struct Overrides {
    /// Miscoverage level.
    #[arg(long)]
    alpha: Option<f64>,
    /// Shots per input.
    #[arg(long)]
    shots: Option<usize>,
    /// Number of Monte Carlo trials.
    #[arg(long)]
    trials: Option<usize>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Method(s): cp, pcp, qcp, naive, oracle. Repeat or comma-separate.
    #[arg(long, value_delimiter = ',')]
    method: Vec<String>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Train the circuit model of a density or regression config.
    Train {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Draw a calibration set with a trained model and compute the threshold.
    Calibrate {
        #[arg(long)]
        config: PathBuf,
        /// Model written by `train`; not used by quantum-classify.
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Prediction set for one input.
    Predict {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Output of `calibrate`.
        #[arg(long)]
        calibration: PathBuf,
        /// Regression input.
        #[arg(long, allow_hyphen_values = true)]
        x: Option<f64>,
        /// Class of the measured state (quantum-classify).
        #[arg(long)]
        label: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a coverage experiment and write its artifacts.
    Experiment {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Probability that the empirical coverage over K trials exceeds 1-α-ε.
    StatsBound {
        #[arg(long)]
        trials: usize,
        #[arg(long)]
        alpha: f64,
        #[arg(long)]
        ncal: usize,
        #[arg(long)]
        eps: f64,
    },
    /// Generalization-gap bound of a PQC.
    GenBound {
        #[arg(long)]
        gates: usize,
        #[arg(long)]
        ntrain: usize,
        #[arg(long)]
        delta: f64,
        #[arg(long, default_value_t = 1.0)]
        closs: f64,
    },
}

#[derive(Debug)]
enum CliError {
    Io(String),
    Config(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Io(_) => 2,
            CliError::Config(_) => 3,
            CliError::Numerical(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Io(m) | CliError::Config(m) | CliError::Numerical(m) => m,
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Config { .. } | Error::InvalidArgument(_) => CliError::Config(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> CliResult<()> {
    fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut text = serde_json::to_string_pretty(value).expect("serializable");
    text.push('\n');
    write(path, &text)
}

fn ensure_dir(dir: &Path) -> CliResult<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

fn load_config(path: &Path, o: &Overrides) -> CliResult<ExperimentConfig> {
    let text = read(path)?;
    let mut raw: RawConfig = serde_json::from_str(&text).map_err(|e| {
        CliError::Config(format!("{}: {e}", path.display()))
    })?;
    if o.alpha.is_some() {
        raw.alpha = o.alpha;
    }
    if o.shots.is_some() {
        raw.m_shots = o.shots;
    }
    if o.trials.is_some() {
        raw.trials = o.trials;
    }
    if o.seed.is_some() {
        raw.seed = o.seed;
    }
    if !o.method.is_empty() {
        raw.methods = Some(
            o.method
                .iter()
                .map(|m| Method::parse(m.trim()))
                .collect::<qconf_core::Result<Vec<_>>>()?,
        );
    }
    Ok(raw.resolve()?)
}

fn load_model(path: &Path) -> CliResult<PqcModel> {
    let model: PqcModel = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    model.validate()?;
    Ok(model)
}

fn prepared_with(cfg: &ExperimentConfig, model: Option<&Path>) -> CliResult<Prepared> {
    match (cfg.task, model) {
        (Task::QuantumClassify, _) => Ok(prepare(cfg)?),
        (_, Some(p)) => Ok(Prepared::from_model(cfg, load_model(p)?)?),
        (_, None) => Err(CliError::Config("--model is required for this task".into())),
    }
}

fn single_method(cfg: &ExperimentConfig, o: &Overrides) -> CliResult<Method> {
    match (o.method.len(), cfg.methods.iter().find(|m| m.is_conformal())) {
        (1, _) => Ok(Method::parse(o.method[0].trim())?),
        (0, _) if cfg.methods.contains(&Method::Qcp) => Ok(Method::Qcp),
        (0, Some(m)) => Ok(*m),
        _ => Err(CliError::Config("choose a single conformal --method".into())),
    }
}

fn float_field(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v.is_nan() {
        "nan".into()
    } else {
        format!("{v}")
    }
}

#[derive(Serialize)]
struct TrainingSummary {
    epochs: usize,
    initial_loss: Option<f64>,
    final_loss: Option<f64>,
    clamped: usize,
}

impl From<&TrainOutcome> for TrainingSummary {
    fn from(t: &TrainOutcome) -> Self {
        Self {
            epochs: t.loss_trace.len(),
            initial_loss: t.loss_trace.first().copied(),
            final_loss: t.loss_trace.last().copied(),
            clamped: t.clamped,
        }
    }
}

#[derive(Serialize)]
struct Summary<'a> {
    report: &'a harness::CoverageReport,
    training: Option<TrainingSummary>,
    sweep: &'a [harness::SweepPoint],
}

fn write_experiment(out: &Path, res: &ExperimentOutput) -> CliResult<()> {
    ensure_dir(out)?;
    let mut csv = String::with_capacity(64 * res.records.len());
    csv.push_str(CSV_HEADER);
    csv.push('\n');
    for r in &res.records {
        csv.push_str(&r.to_csv_row());
        csv.push('\n');
    }
    write(&out.join("results.csv"), &csv)?;
    write_json(&out.join("resolved_config.json"), &res.config)?;
    write_json(
        &out.join("summary.json"),
        &Summary {
            report: &res.report,
            training: res.training.as_ref().map(TrainingSummary::from),
            sweep: &res.sweep,
        },
    )?;

    for m in &res.config.methods {
        let mut cov = String::from("# m_shots coverage\n");
        let mut size = String::from("# m_shots mean_size\n");
        let mut push = |shots: usize, c: f64, s: Option<f64>| {
            let _ = writeln!(cov, "{shots} {}", float_field(c));
            let _ = writeln!(size, "{shots} {}", float_field(s.unwrap_or(f64::INFINITY)));
        };
        if res.sweep.is_empty() {
            let st = res.report.get(*m).expect("method in report");
            push(res.config.m_shots, st.coverage, st.mean_size);
        } else {
            for p in res.sweep.iter().filter(|p| p.method == *m) {
                push(p.m_shots, p.coverage, p.mean_size);
            }
        }
        write(&out.join(format!("plot_coverage_{}.dat", m.as_str())), &cov)?;
        write(&out.join(format!("plot_size_{}.dat", m.as_str())), &size)?;
    }
    Ok(())
}

fn execute(cmd: Command) -> CliResult<()> {
    match cmd {
        Command::Train { config, out, overrides } => {
            let cfg = load_config(&config, &overrides)?;
            if cfg.task == Task::QuantumClassify {
                return Err(CliError::Config("quantum-classify has no trainable model".into()));
            }
            let prep = prepare(&cfg)?;
            ensure_dir(&out)?;
            write_json(&out.join("model.json"), prep.model().expect("trained model"))?;
            write_json(&out.join("resolved_config.json"), &cfg)?;
            let training = prep.training.as_ref().expect("training outcome");
            write_json(&out.join("training.json"), training)?;
            let s = TrainingSummary::from(training);
            println!(
                "trained {} parameters for {} epochs, final loss {}",
                training.params.len(),
                s.epochs,
                float_field(s.final_loss.unwrap_or(f64::NAN))
            );
        }
        Command::Calibrate { config, model, out, overrides } => {
            let cfg = load_config(&config, &overrides)?;
            let method = single_method(&cfg, &overrides)?;
            let prep = prepared_with(&cfg, model.as_deref())?;
            let mut rng = seeded_rng(derive_seed(cfg.seed, STREAM_CALIBRATE));
            let cal = prep.calibrate(method, cfg.m_shots, &mut rng)?;
            ensure_dir(&out)?;
            write_json(&out.join("calibration.json"), &cal)?;
            println!("{} quantile {}", method.as_str(), float_field(cal.quantile));
        }
        Command::Predict {
            config,
            model,
            calibration,
            x,
            label,
            out,
            overrides,
        } => {
            let cfg = load_config(&config, &overrides)?;
            let cal: Calibration = serde_json::from_str(&read(&calibration)?)
                .map_err(|e| CliError::Config(format!("{}: {e}", calibration.display())))?;
            let prep = prepared_with(&cfg, model.as_deref())?;
            let mut rng = seeded_rng(derive_seed(cfg.seed, STREAM_PREDICT));
            let pred = prep.predict(&cal, x, label, &mut rng)?;
            let text = serde_json::to_string_pretty(&pred.set).expect("serializable");
            println!("{text}");
            if let Some(dir) = out {
                ensure_dir(&dir)?;
                write_json(&dir.join("prediction.json"), &pred)?;
            }
        }
        Command::Experiment { config, out, overrides } => {
            let cfg = load_config(&config, &overrides)?;
            let res = run_experiment(&cfg)?;
            write_experiment(&out, &res)?;
            for r in &res.report.methods {
                println!(
                    "{:<6} coverage {:.4} (band {:.4}..{:.4})  mean size {}",
                    r.method.as_str(),
                    r.stats.coverage,
                    r.stats.band.0,
                    r.stats.band.1,
                    float_field(r.stats.mean_size.unwrap_or(f64::INFINITY))
                );
            }
        }
        Command::StatsBound { trials, alpha, ncal, eps } => {
            println!("{}", coverage_probability_bound(trials, alpha, ncal, eps)?);
        }
        Command::GenBound { gates, ntrain, delta, closs } => {
            println!("{}", generalization_bound(gates, ntrain, delta, closs)?);
        }
    }
    Ok(())
}

fn init_threads() -> CliResult<()> {
    if let Ok(v) = std::env::var("QCONF_THREADS") {
        let n: usize = v
            .trim()
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("QCONF_THREADS must be a positive integer, got `{v}`")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match init_threads().and_then(|_| execute(cli.command)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(CliError::from(Error::Numerical("x".into())).code(), 4);
        assert_eq!(
            CliError::from(Error::Config {
                field: "alpha".into(),
                message: "bad".into()
            })
            .code(),
            3
        );
        assert_eq!(CliError::Io("x".into()).code(), 2);
    }

    #[test]
    fn float_formatting() {
        assert_eq!(float_field(f64::INFINITY), "inf");
        assert_eq!(float_field(f64::NAN), "nan");
        assert_eq!(float_field(0.25), "0.25");
    }

    #[test]
    fn overrides_apply_before_resolution() {
        let dir = std::env::temp_dir().join(format!("qconf-unit-{}", std::process::id()));
        fs::create_dir_all(&dir).unwrap();
        let p = dir.join("c.json");
        fs::write(&p, r#"{"task": "density"}"#).unwrap();
        let o = Overrides {
            alpha: Some(0.2),
            shots: Some(400),
            trials: Some(3),
            seed: Some(9),
            method: vec!["qcp".into(), "cp".into()],
        };
        let cfg = load_config(&p, &o).unwrap();
        assert_eq!(cfg.alpha, 0.2);
        assert_eq!(cfg.qcp_k(cfg.m_shots), 20);
        assert_eq!(cfg.methods, vec![Method::Cp, Method::Qcp]);
        fs::remove_dir_all(&dir).unwrap();
    }
}

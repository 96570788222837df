//! Command-line surface: configuration, sweeps, simulations and the `verify` gate.
//!
//! Exit codes: 0 success, 1 configuration error, 2 verification or I/O failure, 3 sweep
//! finished with degenerate points.

pub mod config;
pub mod emit;
pub mod sweep;
pub mod verify;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};
use indexmap::IndexMap;
use serde_json::Value;

use crate::gaussian_optics::{GaussianPulse, TwoPhotonState};
use crate::measurement_sim::{
    sample_hadamard_trial, sample_joint_time_frequency, simulate_mle_trials, summarize_joint, HadamardShotConfig,
    JointMeasureConfig,
};
use config::{load_config, ConfigError, ConfigFlags, Mode, RunConfig};
use emit::{emit, plot_data, Cell, EmitError, ResultTable};
use sweep::{error_count, run_sweep, SweepError, SweepRegistry};
use verify::{verify, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 1;
pub const EXIT_FAILURE: i32 = 2;
pub const EXIT_DEGENERATE: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "lidar-qfi", version, about = "Quantum Fisher information bounds for lidar ranging and velocimetry")]
pub struct Cli {
    #[command(flatten)]
    pub flags: ConfigFlags,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepModelName {
    SingleTarget,
    TwoTarget,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// QFI over (t, omega, sigma) and (x, beta) for one target (grid if --sweep is given)
    SingleTarget,
    /// QFI over (dt, domega) for two targets (grid if --sweep is given)
    TwoTarget,
    /// Shot-level simulations
    #[command(subcommand)]
    Simulate(SimulateCommand),
    /// Parameter sweep over at least one --sweep axis
    Sweep {
        /// Model to sweep; defaults to the config file's mode
        #[arg(long, value_enum)]
        model: Option<SweepModelName>,
        /// Also write x/y plot-data pairs (x = last axis, one curve per other-axis combination)
        #[arg(long)]
        plot_out: Option<PathBuf>,
        /// Column plotted on y
        #[arg(long)]
        plot_y: Option<String>,
    },
    /// Closed forms vs oracle, commutator laws, CFI = QFI and a reduced Monte-Carlo CRB check
    Verify,
}

#[derive(Debug, Subcommand)]
pub enum SimulateCommand {
    /// Frequency-Hadamard shots (Δω must be 0)
    Hadamard {
        /// Emit one maximum-likelihood estimate per trial instead of the raw shots
        #[arg(long)]
        mle: bool,
    },
    /// Joint (ω₊, t₋) detections on entangled pairs
    Joint,
}

/// Metadata attached to every emitted table.
pub fn metadata(config: &RunConfig) -> IndexMap<String, Value> {
    let mut m = IndexMap::new();
    m.insert("tool".into(), Value::from("lidar-qfi"));
    m.insert("version".into(), Value::from(env!("CARGO_PKG_VERSION")));
    m.insert("mode".into(), Value::from(config.mode.as_str()));
    m.insert("seed".into(), Value::from(config.seed));
    m.insert("config".into(), serde_json::to_value(config).expect("config serializes"));
    m
}

/// Runs `f` on a dedicated pool of `workers` threads.
pub fn with_workers<T: Send>(workers: usize, f: impl FnOnce() -> T + Send) -> T {
    match rayon::ThreadPoolBuilder::new().num_threads(workers.max(1)).build() {
        Ok(pool) => pool.install(f),
        Err(_) => f(),
    }
}

#[derive(Debug, thiserror::Error)]
enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Model(#[from] crate::Error),

    #[error(transparent)]
    Emit(#[from] EmitError),

    #[error("verification failed")]
    Verify,
}

impl From<SweepError> for RunError {
    fn from(e: SweepError) -> Self {
        match e {
            SweepError::Config(c) => Self::Config(c),
            SweepError::Model(m) => Self::Model(m),
            SweepError::Emit(x) => Self::Emit(x),
        }
    }
}

impl RunError {
    fn exit_code(&self) -> i32 {
        match self {
            RunError::Config(_) | RunError::Model(_) => EXIT_CONFIG,
            RunError::Emit(_) | RunError::Verify => EXIT_FAILURE,
        }
    }
}

/// Parses `args` (including the program name) and runs; returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            if !matches!(e, RunError::Verify) {
                eprintln!("error: {e}");
            }
            e.exit_code()
        }
    }
}

fn execute(cli: &Cli) -> Result<i32, RunError> {
    match &cli.command {
        Command::SingleTarget => grid_command(load_config(&cli.flags, Some(Mode::SingleTarget))?, None, None),
        Command::TwoTarget => grid_command(load_config(&cli.flags, Some(Mode::TwoTarget))?, None, None),
        Command::Sweep { model, plot_out, plot_y } => {
            let mode = model.map(|m| match m {
                SweepModelName::SingleTarget => Mode::SingleTarget,
                SweepModelName::TwoTarget => Mode::TwoTarget,
            });
            let cfg = load_config(&cli.flags, mode)?;
            if cfg.sweep.is_empty() {
                return Err(ConfigError::Invalid {
                    field: "sweep".into(),
                    message: "at least one axis is required".into(),
                }
                .into());
            }
            grid_command(cfg, plot_out.as_deref(), plot_y.as_deref())
        }
        Command::Simulate(SimulateCommand::Hadamard { mle }) => {
            let cfg = load_config(&cli.flags, Some(Mode::SimulateHadamard))?;
            simulate_hadamard(&cfg, *mle)
        }
        Command::Simulate(SimulateCommand::Joint) => {
            let cfg = load_config(&cli.flags, Some(Mode::SimulateJoint))?;
            simulate_joint(&cfg)
        }
        Command::Verify => {
            let cfg = load_config(&cli.flags, Some(Mode::Verify))?;
            let options = VerifyOptions {
                tolerance: cfg.tolerance,
                seed: cfg.seed,
                ..Default::default()
            };
            let report = with_workers(cfg.workers, || verify(&options));
            let text = report.render();
            match &cfg.out {
                Some(p) => std::fs::write(p, &text).map_err(EmitError::from)?,
                None => print!("{text}"),
            }
            if report.passed() {
                Ok(EXIT_OK)
            } else {
                Err(RunError::Verify)
            }
        }
    }
}

fn grid_command(cfg: RunConfig, plot_out: Option<&std::path::Path>, plot_y: Option<&str>) -> Result<i32, RunError> {
    let table = run_sweep(&cfg, &SweepRegistry::default())?;
    emit(&table, cfg.format, cfg.out.as_deref())?;
    if let Some(path) = plot_out {
        let axes: Vec<&str> = cfg.sweep.iter().map(|a| a.name.as_str()).collect();
        let (x, groups) = axes.split_last().expect("sweep has at least one axis");
        let default_y = if cfg.mode == Mode::TwoTarget { "H_dt_dt" } else { "J_t_bar_t_bar" };
        let plot = plot_data(&table, x, plot_y.unwrap_or(default_y), groups)?;
        emit(&plot, config::OutputFormat::Csv, Some(path))?;
    }
    let errors = error_count(&table);
    if errors > 0 {
        eprintln!("warning: {errors} grid point(s) could not be evaluated; see the `error` column");
        return Ok(EXIT_DEGENERATE);
    }
    Ok(EXIT_OK)
}

fn simulate_hadamard(cfg: &RunConfig, mle: bool) -> Result<i32, RunError> {
    let mut shot = HadamardShotConfig::new(cfg.scene()?, cfg.shots, cfg.seed)?;
    shot.phase_calibration = cfg.phase_calibration;
    let mut table;
    if mle {
        let estimates = with_workers(cfg.workers, || simulate_mle_trials(&shot, cfg.trials))?;
        table = ResultTable::new(
            ["trial", "delta_t", "std_error", "fisher_information", "log_likelihood"]
                .map(String::from)
                .to_vec(),
        );
        for (k, e) in estimates.iter().enumerate() {
            table.push(vec![
                Cell::Int(k as i64),
                Cell::Real(e.delta_t),
                Cell::Real(e.std_error),
                Cell::Real(e.fisher_information),
                Cell::Real(e.log_likelihood),
            ])?;
        }
    } else {
        let records = with_workers(cfg.workers, || sample_hadamard_trial(&shot, 0))?;
        table = ResultTable::new(["shot_index", "nu_gap", "outcome"].map(String::from).to_vec());
        for r in records {
            table.push(vec![Cell::Int(r.shot_index as i64), Cell::Real(r.nu_gap), Cell::Int(r.outcome.into())])?;
        }
    }
    table.metadata = metadata(cfg);
    emit(&table, cfg.format, cfg.out.as_deref())?;
    Ok(EXIT_OK)
}

fn simulate_joint(cfg: &RunConfig) -> Result<i32, RunError> {
    let signal = GaussianPulse::new(cfg.t_centroid, cfg.omega_centroid, cfg.sigma)?;
    let idler = GaussianPulse::new(0.0, 0.0, cfg.sigma)?;
    let joint = JointMeasureConfig {
        state: TwoPhotonState::new(signal, idler, cfg.kappa)?,
        shots: cfg.shots,
        seed: cfg.seed,
    };
    let samples = with_workers(cfg.workers, || sample_joint_time_frequency(&joint))?;
    let mut table = ResultTable::new(["shot_index", "omega_plus", "t_minus"].map(String::from).to_vec());
    for (i, s) in samples.iter().enumerate() {
        table.push(vec![Cell::Int(i as i64), Cell::Real(s.omega_plus), Cell::Real(s.t_minus)])?;
    }
    table.metadata = metadata(cfg);
    if samples.len() >= 2 {
        let summary = summarize_joint(&joint, &samples)?;
        eprintln!(
            "t variance {:.6} (predicted {:.6}), omega variance {:.6} (predicted {:.6}), dt*dw = {:.6}",
            summary.t_variance,
            summary.t_predicted,
            summary.omega_variance,
            summary.omega_predicted,
            summary.uncertainty_product()
        );
        table
            .metadata
            .insert("summary".into(), serde_json::to_value(summary).expect("summary serializes"));
    }
    emit(&table, cfg.format, cfg.out.as_deref())?;
    Ok(EXIT_OK)
}

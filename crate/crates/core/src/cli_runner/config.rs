//! Run configuration: flat snake_case JSON, optionally overridden by command-line flags.

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use clap::{Args, ValueEnum};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::Error;
use crate::gaussian_optics::{check_kappa, TargetKinematics, TwoTargetScene};
use crate::measurement_sim::HadamardShotConfig;

/// Environment variable naming a default config file.
pub const CONFIG_ENV: &str = "LIDAR_QFI_CONFIG";

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read config {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },

    #[error("cannot parse config {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },

    #[error("invalid `{field}`: {message}")]
    Invalid { field: String, message: String },
}

impl ConfigError {
    fn invalid(field: &str, message: impl Into<String>) -> Self {
        Self::Invalid {
            field: field.to_string(),
            message: message.into(),
        }
    }
}

impl From<Error> for ConfigError {
    fn from(e: Error) -> Self {
        match e {
            Error::InvalidParameter { name, value, reason } => Self::invalid(name, format!("{value} {reason}")),
            other => Self::invalid("config", other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    #[default]
    SingleTarget,
    TwoTarget,
    SimulateHadamard,
    SimulateJoint,
    Verify,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::SingleTarget => "single-target",
            Mode::TwoTarget => "two-target",
            Mode::SimulateHadamard => "simulate-hadamard",
            Mode::SimulateJoint => "simulate-joint",
            Mode::Verify => "verify",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum, Default)]
#[serde(rename_all = "lowercase")]
pub enum OutputFormat {
    #[default]
    Csv,
    Json,
}

/// Parameters a sweep axis may drive. `dt2s2` sets `dt = sqrt(v)/σ` and `dw2s2` sets
/// `domega = σ sqrt(v)`, both applied after the direct axes.
pub const AXIS_NAMES: [&str; 12] = [
    "sigma",
    "kappa",
    "omega0",
    "c",
    "x",
    "beta",
    "dt",
    "domega",
    "t_centroid",
    "omega_centroid",
    "dt2s2",
    "dw2s2",
];

/// `name=start:stop:count`, linearly spaced and inclusive of both ends.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct SweepAxis {
    pub name: String,
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl SweepAxis {
    pub fn values(&self) -> Vec<f64> {
        if self.count == 1 {
            return vec![self.start];
        }
        let last = (self.count - 1) as f64;
        (0..self.count)
            .map(|i| {
                if i + 1 == self.count {
                    self.stop
                } else {
                    self.start + (self.stop - self.start) * i as f64 / last
                }
            })
            .collect()
    }

    pub fn is_derived(&self) -> bool {
        matches!(self.name.as_str(), "dt2s2" | "dw2s2")
    }
}

impl FromStr for SweepAxis {
    type Err = ConfigError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bad = |msg: &str| ConfigError::invalid("sweep", format!("`{s}`: {msg}"));
        let (name, range) = s.split_once('=').ok_or_else(|| bad("expected name=start:stop:count"))?;
        let name = name.trim();
        if !AXIS_NAMES.contains(&name) {
            return Err(bad("unknown sweep parameter"));
        }
        let parts: Vec<&str> = range.split(':').collect();
        if parts.len() != 3 {
            return Err(bad("expected name=start:stop:count"));
        }
        let start: f64 = parts[0].trim().parse().map_err(|_| bad("start is not a number"))?;
        let stop: f64 = parts[1].trim().parse().map_err(|_| bad("stop is not a number"))?;
        let count: usize = parts[2].trim().parse().map_err(|_| bad("count is not an integer"))?;
        if count < 1 {
            return Err(bad("count must be >= 1"));
        }
        if !start.is_finite() || !stop.is_finite() {
            return Err(bad("bounds must be finite"));
        }
        Ok(Self {
            name: name.to_string(),
            start,
            stop,
            count,
        })
    }
}

impl TryFrom<String> for SweepAxis {
    type Error = ConfigError;

    fn try_from(s: String) -> Result<Self, Self::Error> {
        s.parse()
    }
}

impl From<SweepAxis> for String {
    fn from(a: SweepAxis) -> Self {
        a.to_string()
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        // {:?} prints the shortest round-tripping decimal
        write!(f, "{}={:?}:{:?}:{}", self.name, self.start, self.stop, self.count)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub mode: Mode,
    pub sigma: f64,
    pub kappa: f64,
    pub omega0: f64,
    pub c: f64,
    pub x: f64,
    pub beta: f64,
    pub dt: f64,
    pub domega: f64,
    /// Centroid time `T`.
    pub t_centroid: f64,
    /// Centroid frequency `Ω`.
    pub omega_centroid: f64,
    pub sweep: Vec<SweepAxis>,
    pub shots: usize,
    pub trials: usize,
    pub seed: u64,
    pub workers: usize,
    pub phase_calibration: bool,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    /// Oracle tolerance for `verify`.
    pub tolerance: f64,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            mode: Mode::SingleTarget,
            sigma: 1.0,
            kappa: 0.0,
            omega0: 0.0,
            c: 1.0,
            x: 0.0,
            beta: 0.0,
            dt: 0.5,
            domega: 0.0,
            t_centroid: 0.0,
            omega_centroid: 0.0,
            sweep: Vec::new(),
            shots: 1000,
            trials: 1,
            seed: 0,
            workers: 1,
            phase_calibration: true,
            format: OutputFormat::Csv,
            out: None,
            tolerance: 1e-5,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<(), ConfigError> {
        let finite = [
            ("sigma", self.sigma),
            ("kappa", self.kappa),
            ("omega0", self.omega0),
            ("c", self.c),
            ("x", self.x),
            ("beta", self.beta),
            ("dt", self.dt),
            ("domega", self.domega),
            ("t_centroid", self.t_centroid),
            ("omega_centroid", self.omega_centroid),
            ("tolerance", self.tolerance),
        ];
        for (name, v) in finite {
            if !v.is_finite() {
                return Err(ConfigError::invalid(name, format!("{v} is not finite")));
            }
        }
        if self.sigma <= 0.0 {
            return Err(ConfigError::invalid("sigma", format!("{} must be > 0", self.sigma)));
        }
        check_kappa(self.kappa)?;
        TargetKinematics::new(self.x, self.beta, self.c)?;
        if self.shots < 1 {
            return Err(ConfigError::invalid("shots", "must be >= 1"));
        }
        if self.trials < 1 {
            return Err(ConfigError::invalid("trials", "must be >= 1"));
        }
        if self.workers < 1 {
            return Err(ConfigError::invalid("workers", "must be >= 1"));
        }
        if self.tolerance <= 0.0 {
            return Err(ConfigError::invalid("tolerance", "must be > 0"));
        }
        for axis in &self.sweep {
            if axis.count < 1 {
                return Err(ConfigError::invalid("sweep", format!("{axis}: count must be >= 1")));
            }
        }
        if self.mode == Mode::SimulateHadamard {
            HadamardShotConfig::new(self.scene()?, self.shots, self.seed)?;
        }
        Ok(())
    }

    pub fn scene(&self) -> Result<TwoTargetScene, Error> {
        TwoTargetScene::new(self.t_centroid, self.omega_centroid, self.dt, self.domega, self.sigma, self.kappa)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn save(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_json() + "\n")
    }
}

/// Flag overrides; every field left unset keeps the file or default value.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigFlags {
    /// JSON config file (defaults to $LIDAR_QFI_CONFIG when set)
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub sigma: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub kappa: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub omega0: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub c: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub x: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub beta: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub dt: Option<f64>,
    #[arg(long, global = true, allow_negative_numbers = true)]
    pub domega: Option<f64>,
    /// Centroid time T
    #[arg(long = "t-centroid", global = true, allow_negative_numbers = true)]
    pub t_centroid: Option<f64>,
    /// Centroid frequency Ω
    #[arg(long = "omega-centroid", global = true, allow_negative_numbers = true)]
    pub omega_centroid: Option<f64>,
    /// Sweep axis `name=start:stop:count`; repeat for a grid (first axis outermost)
    #[arg(long = "sweep", global = true)]
    pub sweep: Vec<String>,
    #[arg(long, global = true)]
    pub shots: Option<usize>,
    #[arg(long, global = true)]
    pub trials: Option<usize>,
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    #[arg(long, global = true)]
    pub workers: Option<usize>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true)]
    pub tolerance: Option<f64>,
    /// Use the raw centroid phase at T instead of the calibrated one
    #[arg(long = "no-phase-calibration", global = true)]
    pub no_phase_calibration: bool,
}

impl ConfigFlags {
    fn apply(&self, cfg: &mut RunConfig) -> Result<(), ConfigError> {
        macro_rules! set {
            ($($f:ident),*) => {$(
                if let Some(v) = self.$f.clone() {
                    cfg.$f = v;
                }
            )*};
        }
        set!(sigma, kappa, omega0, c, x, beta, dt, domega, t_centroid, omega_centroid, shots, trials, seed, workers, format, tolerance);
        if self.out.is_some() {
            cfg.out = self.out.clone();
        }
        if !self.sweep.is_empty() {
            cfg.sweep = self.sweep.iter().map(|s| s.parse()).collect::<Result<_, _>>()?;
        }
        if self.no_phase_calibration {
            cfg.phase_calibration = false;
        }
        Ok(())
    }
}

/// Reads a config file; an empty file yields the defaults.
pub fn read_config_file(path: &Path) -> Result<RunConfig, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    if text.trim().is_empty() {
        return Ok(RunConfig::default());
    }
    serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
        path: path.to_path_buf(),
        source,
    })
}

/// Resolves file (flag, then environment), applies flags and `mode`, then validates.
pub fn load_config(flags: &ConfigFlags, mode: Option<Mode>) -> Result<RunConfig, ConfigError> {
    let path = flags
        .config
        .clone()
        .or_else(|| std::env::var_os(CONFIG_ENV).filter(|v| !v.is_empty()).map(PathBuf::from));
    let mut cfg = match path {
        Some(p) => read_config_file(&p)?,
        None => RunConfig::default(),
    };
    if let Some(m) = mode {
        cfg.mode = m;
    }
    flags.apply(&mut cfg)?;
    cfg.validate()?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_file_gives_defaults() {
        let f = tempfile::NamedTempFile::new().unwrap();
        let cfg = read_config_file(f.path()).unwrap();
        assert_eq!(cfg, RunConfig::default());
        assert_eq!((cfg.sigma, cfg.kappa, cfg.c, cfg.seed), (1.0, 0.0, 1.0, 0));
    }

    #[test]
    fn kappa_out_of_range_names_field_and_bound() {
        let cfg = RunConfig {
            kappa: 1.5,
            ..Default::default()
        };
        let msg = cfg.validate().unwrap_err().to_string();
        assert!(msg.contains("kappa") && msg.contains("[0, 1 - 1e-6]"), "{msg}");
    }

    #[test]
    fn unknown_keys_rejected() {
        let e = serde_json::from_str::<RunConfig>(r#"{"sigma": 1, "sigmaa": 2}"#).unwrap_err();
        assert!(e.to_string().contains("sigmaa"));
    }

    #[test]
    fn round_trip() {
        let cfg = RunConfig {
            mode: Mode::TwoTarget,
            sigma: 0.1 + 0.2,
            kappa: 0.3,
            sweep: vec!["dw2s2=0:5:11".parse().unwrap(), "dt2s2=0.01:1:3".parse().unwrap()],
            out: Some(PathBuf::from("out.csv")),
            seed: u64::MAX,
            ..Default::default()
        };
        let f = tempfile::NamedTempFile::new().unwrap();
        cfg.save(f.path()).unwrap();
        assert_eq!(read_config_file(f.path()).unwrap(), cfg);
    }

    #[test]
    fn flags_override_file() {
        let f = tempfile::NamedTempFile::new().unwrap();
        std::fs::write(f.path(), r#"{"sigma": 2.0, "kappa": 0.5, "seed": 9}"#).unwrap();
        let flags = ConfigFlags {
            config: Some(f.path().to_path_buf()),
            kappa: Some(0.25),
            ..Default::default()
        };
        let cfg = load_config(&flags, None).unwrap();
        assert_eq!((cfg.sigma, cfg.kappa, cfg.seed), (2.0, 0.25, 9));
    }

    #[test]
    fn axis_parsing() {
        let a: SweepAxis = "kappa=0:0.5:2".parse().unwrap();
        assert_eq!(a.values(), vec![0.0, 0.5]);
        assert_eq!(a.to_string().parse::<SweepAxis>().unwrap(), a);
        let one: SweepAxis = "sigma=2:9:1".parse().unwrap();
        assert_eq!(one.values(), vec![2.0]);
        for bad in ["kappa=0:1:0", "bogus=0:1:2", "kappa=0:1", "kappa"] {
            assert!(bad.parse::<SweepAxis>().is_err(), "{bad}");
        }
    }

    #[test]
    fn hadamard_mode_requires_zero_domega() {
        let cfg = RunConfig {
            mode: Mode::SimulateHadamard,
            domega: 0.1,
            ..Default::default()
        };
        assert!(cfg.validate().unwrap_err().to_string().contains("domega"));
    }
}

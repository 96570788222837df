//! Cartesian parameter sweeps over named evaluation models.

use indexmap::IndexMap;
use rayon::prelude::*;
use serde_json::Value;

use super::config::{ConfigError, RunConfig};
use super::emit::{Cell, EmitError, ResultTable};
use crate::error::{Error, Result};
use crate::gaussian_optics::TargetKinematics;
use crate::single_target::{self, SingleTargetProblem, LAMBDA_NAMES, MU_NAMES};
use crate::two_target::{two_target_report, TwoTargetQfiInputs, PARAMETER_NAMES};

/// Name of the per-row error marker column.
pub const ERROR_COLUMN: &str = "error";

/// Closed-form quantity evaluated at one grid point.
pub trait SweepModel: Send + Sync {
    fn name(&self) -> &str;

    /// Config fields echoed as the leading columns.
    fn input_columns(&self) -> Vec<&'static str>;

    fn output_columns(&self) -> Vec<String>;

    fn evaluate(&self, point: &RunConfig) -> Result<Vec<Cell>>;
}

fn upper_triangle(names: &[&str]) -> Vec<(usize, usize, String)> {
    let mut out = Vec::new();
    for i in 0..names.len() {
        for j in i..names.len() {
            out.push((i, j, format!("{}_{}", names[i], names[j])));
        }
    }
    out
}

fn pairs(names: &[&str]) -> Vec<(usize, usize, String)> {
    upper_triangle(names).into_iter().filter(|(i, j, _)| i != j).collect()
}

/// `J(λ)` over `(t̄, ω̄, σ)`, `H(x, β)`, commutator imaginary parts and saturability flags.
pub struct SingleTargetModel;

impl SweepModel for SingleTargetModel {
    fn name(&self) -> &str {
        "single-target"
    }

    fn input_columns(&self) -> Vec<&'static str> {
        vec!["sigma", "kappa", "omega0", "c", "x", "beta"]
    }

    fn output_columns(&self) -> Vec<String> {
        let mut cols = Vec::new();
        cols.extend(upper_triangle(&LAMBDA_NAMES).into_iter().map(|(_, _, n)| format!("J_{n}")));
        cols.extend(pairs(&LAMBDA_NAMES).into_iter().map(|(_, _, n)| format!("comm_im_{n}")));
        cols.extend(pairs(&LAMBDA_NAMES).into_iter().map(|(_, _, n)| format!("saturable_{n}")));
        cols.extend(upper_triangle(&MU_NAMES).into_iter().map(|(_, _, n)| format!("H_{n}")));
        cols.extend(pairs(&MU_NAMES).into_iter().map(|(_, _, n)| format!("comm_im_{n}")));
        cols.extend(pairs(&MU_NAMES).into_iter().map(|(_, _, n)| format!("saturable_{n}")));
        cols
    }

    fn evaluate(&self, p: &RunConfig) -> Result<Vec<Cell>> {
        let problem = SingleTargetProblem::new(p.sigma, p.omega0, p.kappa, TargetKinematics::new(p.x, p.beta, p.c)?)?;
        let lambda = single_target::lambda_report(p.sigma, p.kappa)?;
        let mu = single_target::position_velocity_report(&problem)?;
        let mut row = Vec::new();
        for report in [&lambda, &mu] {
            let names: Vec<&str> = report.parameter_names.iter().map(String::as_str).collect();
            row.extend(upper_triangle(&names).into_iter().map(|(i, j, _)| Cell::Real(report.qfi_matrix[(i, j)])));
            row.extend(pairs(&names).into_iter().map(|(i, j, _)| Cell::Real(report.commutator_im[(i, j)])));
            row.extend(pairs(&names).into_iter().map(|(i, j, _)| Cell::Int(report.is_saturable(i, j) as i64)));
        }
        Ok(row)
    }
}

/// `H(Δt, Δω)` for two incoherent returns.
pub struct TwoTargetModel;

impl SweepModel for TwoTargetModel {
    fn name(&self) -> &str {
        "two-target"
    }

    fn input_columns(&self) -> Vec<&'static str> {
        vec!["sigma", "kappa", "dt", "domega"]
    }

    fn output_columns(&self) -> Vec<String> {
        let mut cols = vec!["epsilon".to_string(), "gap_factor".to_string()];
        cols.extend(upper_triangle(&PARAMETER_NAMES).into_iter().map(|(_, _, n)| format!("H_{n}")));
        cols.extend(pairs(&PARAMETER_NAMES).into_iter().map(|(_, _, n)| format!("comm_im_{n}")));
        cols.extend(pairs(&PARAMETER_NAMES).into_iter().map(|(_, _, n)| format!("saturable_{n}")));
        cols
    }

    fn evaluate(&self, p: &RunConfig) -> Result<Vec<Cell>> {
        let inputs = TwoTargetQfiInputs::new(p.sigma, p.kappa, p.dt, p.domega)?;
        let report = two_target_report(&inputs)?;
        let mut row = vec![Cell::Real(inputs.epsilon()), Cell::Real(inputs.gap_factor())];
        row.extend(upper_triangle(&PARAMETER_NAMES).into_iter().map(|(i, j, _)| Cell::Real(report.qfi_matrix[(i, j)])));
        row.extend(pairs(&PARAMETER_NAMES).into_iter().map(|(i, j, _)| Cell::Real(report.commutator_im[(i, j)])));
        row.extend(pairs(&PARAMETER_NAMES).into_iter().map(|(i, j, _)| Cell::Int(report.is_saturable(i, j) as i64)));
        Ok(row)
    }
}

pub struct SweepRegistry {
    models: IndexMap<String, Box<dyn SweepModel>>,
}

impl Default for SweepRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register(Box::new(SingleTargetModel));
        r.register(Box::new(TwoTargetModel));
        r
    }
}

impl SweepRegistry {
    pub fn empty() -> Self {
        Self { models: IndexMap::new() }
    }

    pub fn register(&mut self, model: Box<dyn SweepModel>) {
        self.models.insert(model.name().to_string(), model);
    }

    pub fn get(&self, name: &str) -> Result<&dyn SweepModel> {
        self.models
            .get(name)
            .map(|m| m.as_ref())
            .ok_or_else(|| Error::UnknownStrategy(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.models.keys().map(String::as_str)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error(transparent)]
    Config(#[from] ConfigError),

    #[error(transparent)]
    Model(#[from] Error),

    #[error(transparent)]
    Emit(#[from] EmitError),
}

fn set_axis(cfg: &mut RunConfig, name: &str, v: f64) {
    match name {
        "sigma" => cfg.sigma = v,
        "kappa" => cfg.kappa = v,
        "omega0" => cfg.omega0 = v,
        "c" => cfg.c = v,
        "x" => cfg.x = v,
        "beta" => cfg.beta = v,
        "dt" => cfg.dt = v,
        "domega" => cfg.domega = v,
        "t_centroid" => cfg.t_centroid = v,
        "omega_centroid" => cfg.omega_centroid = v,
        "dt2s2" => cfg.dt = v.sqrt() / cfg.sigma,
        "dw2s2" => cfg.domega = cfg.sigma * v.sqrt(),
        _ => unreachable!("axis names are checked at parse time"),
    }
}

fn input_value(cfg: &RunConfig, name: &str) -> f64 {
    match name {
        "sigma" => cfg.sigma,
        "kappa" => cfg.kappa,
        "omega0" => cfg.omega0,
        "c" => cfg.c,
        "x" => cfg.x,
        "beta" => cfg.beta,
        "dt" => cfg.dt,
        "domega" => cfg.domega,
        "t_centroid" => cfg.t_centroid,
        "omega_centroid" => cfg.omega_centroid,
        _ => unreachable!(),
    }
}

/// Grid points in lexicographic order, first axis outermost.
pub fn grid(config: &RunConfig) -> Vec<Vec<f64>> {
    let mut points = vec![Vec::new()];
    for axis in &config.sweep {
        let values = axis.values();
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |&v| {
                    let mut q = p.clone();
                    q.push(v);
                    q
                })
            })
            .collect();
    }
    points
}

fn point_config(config: &RunConfig, values: &[f64]) -> RunConfig {
    let mut cfg = config.clone();
    cfg.sweep.clear();
    for (axis, &v) in config.sweep.iter().zip(values).filter(|(a, _)| !a.is_derived()) {
        set_axis(&mut cfg, &axis.name, v);
    }
    for (axis, &v) in config.sweep.iter().zip(values).filter(|(a, _)| a.is_derived()) {
        set_axis(&mut cfg, &axis.name, v);
    }
    cfg
}

/// Evaluates the model named by `config.mode` on the sweep grid (a single point when no axes
/// are given). Failing points keep their inputs, leave outputs empty and carry a message in
/// the [`ERROR_COLUMN`].
pub fn run_sweep(config: &RunConfig, registry: &SweepRegistry) -> std::result::Result<ResultTable, SweepError> {
    let model = registry.get(config.mode.as_str())?;
    let inputs = model.input_columns();
    let derived: Vec<&str> = config
        .sweep
        .iter()
        .filter(|a| a.is_derived())
        .map(|a| a.name.as_str())
        .collect();
    let outputs = model.output_columns();
    let mut columns: Vec<String> = derived.iter().map(|s| s.to_string()).collect();
    columns.extend(inputs.iter().map(|s| s.to_string()));
    columns.extend(outputs.iter().cloned());
    columns.push(ERROR_COLUMN.to_string());

    let points = grid(config);
    let evaluate = || {
        points
            .par_iter()
            .map(|values| {
                let point = point_config(config, values);
                let mut row: Vec<Cell> = config
                    .sweep
                    .iter()
                    .zip(values)
                    .filter(|(a, _)| a.is_derived())
                    .map(|(_, &v)| Cell::Real(v))
                    .collect();
                row.extend(inputs.iter().map(|n| Cell::Real(input_value(&point, n))));
                let result = point
                    .validate()
                    .map_err(|e| e.to_string())
                    .and_then(|_| model.evaluate(&point).map_err(|e| e.to_string()))
                    .and_then(|cells| {
                        match cells.iter().find(|c| matches!(c, Cell::Real(v) if !v.is_finite())) {
                            Some(_) => Err("non-finite result".to_string()),
                            None => Ok(cells),
                        }
                    });
                match result {
                    Ok(cells) => {
                        row.extend(cells);
                        row.push(Cell::Empty);
                    }
                    Err(msg) => {
                        row.extend(outputs.iter().map(|_| Cell::Empty));
                        row.push(Cell::Text(msg));
                    }
                }
                row
            })
            .collect::<Vec<_>>()
    };
    let rows = super::with_workers(config.workers, evaluate);

    let mut table = ResultTable::new(columns);
    table.metadata = super::metadata(config);
    table.metadata.insert("model".into(), Value::from(model.name()));
    table.metadata.insert("points".into(), Value::from(points.len()));
    for row in rows {
        table.push(row)?;
    }
    Ok(table)
}

/// Number of rows carrying an error marker.
pub fn error_count(table: &ResultTable) -> usize {
    table
        .column(ERROR_COLUMN)
        .map(|c| c.iter().filter(|cell| !matches!(cell, Cell::Empty)).count())
        .unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cli_runner::config::Mode;

    fn real(t: &ResultTable, row: usize, col: &str) -> f64 {
        t.rows()[row][t.column_index(col).unwrap()].as_real().unwrap()
    }

    #[test]
    fn separation_sweep_spot_value() {
        let cfg = RunConfig {
            mode: Mode::TwoTarget,
            sweep: vec!["dt2s2=0.01:0.01:1".parse().unwrap(), "dw2s2=1:1:1".parse().unwrap()],
            ..Default::default()
        };
        let t = run_sweep(&cfg, &SweepRegistry::default()).unwrap();
        assert_eq!(t.rows().len(), 1);
        assert!((real(&t, 0, "H_dt_dt") - 0.158_050_964_766_655_37).abs() < 1e-6);
        assert_eq!(error_count(&t), 0);
    }

    #[test]
    fn single_target_kappa_sweep() {
        let cfg = RunConfig {
            sweep: vec!["kappa=0:0.5:2".parse().unwrap()],
            ..Default::default()
        };
        let t = run_sweep(&cfg, &SweepRegistry::default()).unwrap();
        assert_eq!(real(&t, 0, "J_omega_bar_omega_bar"), 1.0);
        assert!((real(&t, 1, "J_omega_bar_omega_bar") - 4.0 / 3.0).abs() < 1e-12);
        assert_eq!(real(&t, 0, "comm_im_t_bar_omega_bar"), -4.0);
        assert_eq!(t.rows()[0][t.column_index("saturable_t_bar_sigma").unwrap()], Cell::Int(1));
    }

    #[test]
    fn grid_is_lexicographic() {
        let cfg = RunConfig {
            mode: Mode::TwoTarget,
            sweep: vec!["kappa=0:0.5:3".parse().unwrap(), "dt=0.1:0.4:4".parse().unwrap()],
            ..Default::default()
        };
        let t = run_sweep(&cfg, &SweepRegistry::default()).unwrap();
        assert_eq!(t.rows().len(), 12);
        assert_eq!(real(&t, 3, "kappa"), 0.0);
        assert_eq!(real(&t, 4, "kappa"), 0.25);
        assert_eq!(real(&t, 4, "dt"), 0.1);
        assert_eq!(real(&t, 11, "dt"), 0.4);
    }

    #[test]
    fn degenerate_point_is_marked() {
        let cfg = RunConfig {
            mode: Mode::TwoTarget,
            dt: 0.0,
            sweep: vec!["domega=0:1:2".parse().unwrap()],
            ..Default::default()
        };
        let t = run_sweep(&cfg, &SweepRegistry::default()).unwrap();
        assert_eq!(error_count(&t), 1);
        assert_eq!(t.rows()[0][t.column_index("H_dt_dt").unwrap()], Cell::Empty);
    }

    #[test]
    fn invalid_point_is_marked() {
        let cfg = RunConfig {
            sweep: vec!["kappa=0.5:1.5:2".parse().unwrap()],
            ..Default::default()
        };
        let t = run_sweep(&cfg, &SweepRegistry::default()).unwrap();
        assert_eq!(error_count(&t), 1);
    }

    #[test]
    fn unknown_model() {
        let cfg = RunConfig {
            mode: Mode::Verify,
            ..Default::default()
        };
        assert!(matches!(
            run_sweep(&cfg, &SweepRegistry::default()),
            Err(SweepError::Model(Error::UnknownStrategy(_)))
        ));
    }
}

//! End-to-end self-check: closed forms against the numerical oracle, commutator laws,
//! measurement optimality and a reduced Monte-Carlo Cramér–Rao check.

use std::fmt::Write as _;

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::error::Result;
use crate::families::{FamilyRegistry, FamilySettings};
use crate::gaussian_optics::TwoTargetScene;
use crate::measurement_sim::{averaged_cfi, simulate_mle_trials, HadamardShotConfig};
use crate::metrology_engine::{oracle_qfi, OracleOptions};
use crate::quadrature::DEFAULT_ORDER;
use crate::single_target::{lambda_report, qfi_lambda_entangled};
use crate::two_target::{commutator_trace_two, qfi_two, TwoTargetQfiInputs};

pub type TwoTargetClosedForm = fn(&TwoTargetQfiInputs) -> Result<DMatrix<f64>>;

#[derive(Debug, Clone, Copy)]
pub struct VerifyOptions {
    /// Relative tolerance of closed form vs oracle.
    pub tolerance: f64,
    pub commutator_tolerance: f64,
    pub cfi_tolerance: f64,
    pub mc_shots: usize,
    pub mc_trials: usize,
    /// Allowed relative deviation of `N σ² Var(Δt̂)` from 1.
    pub mc_tolerance: f64,
    pub seed: u64,
    /// Two-target closed form under test; replaceable so the gate itself can be tested.
    pub closed_form_two: TwoTargetClosedForm,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-5,
            commutator_tolerance: 1e-9,
            cfi_tolerance: 1e-8,
            mc_shots: 10_000,
            mc_trials: 200,
            mc_tolerance: 0.2,
            seed: 0,
            closed_form_two: qfi_two,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckResult {
    pub name: &'static str,
    pub passed: bool,
    /// Worst observed error (relative or absolute as named by the check).
    pub metric: f64,
    pub tolerance: f64,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct VerifyReport {
    pub checks: Vec<CheckResult>,
}

impl VerifyReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:<28} {:>6} {:>12} {:>12}  detail", "check", "status", "metric", "tolerance");
        for c in &self.checks {
            let _ = writeln!(
                s,
                "{:<28} {:>6} {:>12.3e} {:>12.3e}  {}",
                c.name,
                if c.passed { "PASS" } else { "FAIL" },
                c.metric,
                c.tolerance,
                c.detail
            );
        }
        s
    }
}

fn check(name: &'static str, outcome: Result<(f64, String)>, tolerance: f64) -> CheckResult {
    match outcome {
        Ok((metric, detail)) => CheckResult {
            name,
            passed: metric <= tolerance,
            metric,
            tolerance,
            detail,
        },
        Err(e) => CheckResult {
            name,
            passed: false,
            metric: f64::INFINITY,
            tolerance,
            detail: format!("error: {e}"),
        },
    }
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// The 3 × 3 × 3 × 3 grid over σ, κ, Δt, Δω used for the two-target oracle comparison.
pub fn two_target_grid() -> Vec<(f64, f64, f64, f64)> {
    let mut g = Vec::with_capacity(81);
    for sigma in [0.5, 1.0, 2.0] {
        for kappa in [0.0, 0.3, 0.6] {
            for dt in [0.05, 0.2, 0.5] {
                for dw in [0.05, 0.2, 0.5] {
                    g.push((sigma, kappa, dt, dw));
                }
            }
        }
    }
    g
}

/// Worst relative error of `closed` against the oracle over [`two_target_grid`], for the QFI
/// entries and the commutator.
pub fn two_target_oracle_error(closed: TwoTargetClosedForm) -> Result<(f64, f64)> {
    let registry = FamilyRegistry::default();
    let errors: Vec<(f64, f64)> = two_target_grid()
        .par_iter()
        .map(|&(sigma, kappa, dt, dw)| {
            let settings = FamilySettings {
                sigma,
                kappa,
                central_time: 0.4,
                central_frequency: 1.5,
                delta_time: dt,
                delta_frequency: dw,
                quadrature_order: DEFAULT_ORDER,
            };
            let name = if kappa == 0.0 { "two-target-separable" } else { "two-target-entangled" };
            let family = registry.build(name, &settings)?;
            let out = oracle_qfi(family.as_ref(), &family.nominal(), &OracleOptions::default())?;
            let inputs = TwoTargetQfiInputs::new(sigma, kappa, dt, dw)?;
            let h = closed(&inputs)?;
            let mut worst: f64 = 0.0;
            for i in 0..2 {
                for j in 0..2 {
                    worst = worst.max(rel(out.report.qfi_matrix[(i, j)], h[(i, j)]));
                }
            }
            let comm = commutator_trace_two(&inputs)?.im;
            Ok((worst, rel(out.report.commutator_im[(0, 1)], comm)))
        })
        .collect::<Result<_>>()?;
    Ok(errors.iter().fold((0.0, 0.0), |(a, b), &(x, y)| (f64::max(a, x), f64::max(b, y))))
}

fn single_target_oracle() -> Result<(f64, String)> {
    let registry = FamilyRegistry::default();
    let mut worst: f64 = 0.0;
    for kappa in [0.0, 0.3, 0.6, 0.9] {
        let settings = FamilySettings {
            sigma: 1.3,
            kappa,
            central_time: 0.2,
            central_frequency: 0.7,
            ..Default::default()
        };
        let name = if kappa == 0.0 { "single-separable" } else { "single-entangled" };
        let family = registry.build(name, &settings)?;
        let out = oracle_qfi(family.as_ref(), &family.nominal(), &OracleOptions::default())?;
        let closed = qfi_lambda_entangled(settings.sigma, kappa)?;
        for i in 0..3 {
            for j in 0..3 {
                let (o, c) = (out.report.qfi_matrix[(i, j)], closed[(i, j)]);
                let err = if c == 0.0 { o.abs() } else { rel(o, c) };
                worst = worst.max(err);
            }
        }
        worst = worst.max(rel(out.report.commutator_im[(0, 1)], -4.0));
        worst = worst.max(out.report.commutator_im[(0, 2)].abs());
        worst = worst.max(out.report.commutator_im[(1, 2)].abs());
    }
    Ok((worst, "sigma=1.3, kappa in {0, 0.3, 0.6, 0.9}".into()))
}

fn commutator_minus_4i() -> Result<(f64, String)> {
    let mut worst: f64 = 0.0;
    for kappa in [0.0, 0.3, 0.6, 0.9] {
        for sigma in [0.5, 1.0, 2.0] {
            let r = lambda_report(sigma, kappa)?;
            worst = worst.max((r.commutator(0, 1) - num_complex::Complex64::new(0.0, -4.0)).norm());
            worst = worst.max(r.commutator(0, 2).norm()).max(r.commutator(1, 2).norm());
        }
    }
    Ok((worst, "Tr(rho[L_t,L_w]) = -4i, sigma pairs 0".into()))
}

/// Largest `|Tr(ρ[L_Δt, L_Δω]) + iε/2| / ε²` over points with `ε ≤ 0.1`.
fn small_epsilon_law() -> Result<(f64, String)> {
    let mut worst: f64 = 0.0;
    let mut count = 0;
    for kappa in [0.0, 0.5, 0.9] {
        for sigma in [0.5, 1.0, 2.0] {
            for dt in [1e-3, 0.01, 0.05, 0.1, 0.2] {
                for dw in [1e-3, 0.01, 0.05, 0.1, 0.2] {
                    let inputs = TwoTargetQfiInputs::new(sigma, kappa, dt / sigma, dw * sigma)?;
                    let eps = inputs.epsilon();
                    if eps > 0.1 {
                        continue;
                    }
                    count += 1;
                    let c = commutator_trace_two(&inputs)?;
                    worst = worst.max((c.im + eps / 2.0).abs().max(c.re.abs()) / (eps * eps));
                }
            }
        }
    }
    Ok((worst, format!("{count} points, metric in units of eps^2")))
}

fn cfi_meets_qfi(closed: TwoTargetClosedForm) -> Result<(f64, String)> {
    let mut worst: f64 = 0.0;
    for sigma in [0.5, 1.0, 2.0] {
        let h = closed(&TwoTargetQfiInputs::new(sigma, 0.0, 0.5, 0.0)?)?;
        worst = worst.max(rel(averaged_cfi(sigma)?, h[(0, 0)]));
    }
    Ok((worst, "averaged CFI vs H_dt_dt at domega=0".into()))
}

fn monte_carlo_crb(options: &VerifyOptions) -> Result<(f64, String)> {
    let sigma = 1.0;
    let scene = TwoTargetScene::new(0.0, 0.0, 0.5, 0.0, sigma, 0.0)?;
    let config = HadamardShotConfig::new(scene, options.mc_shots, options.seed)?;
    let estimates = simulate_mle_trials(&config, options.mc_trials)?;
    let values: Vec<f64> = estimates.iter().map(|e| e.delta_t).collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let ratio = var * options.mc_shots as f64 * sigma * sigma;
    Ok((
        (ratio - 1.0).abs(),
        format!("N={}, trials={}, N sigma^2 Var = {ratio:.4}", options.mc_shots, options.mc_trials),
    ))
}

pub fn verify(options: &VerifyOptions) -> VerifyReport {
    let oracle = two_target_oracle_error(options.closed_form_two);
    let mut checks = vec![
        check(
            "two-target oracle (81 pts)",
            oracle.clone().map(|(q, _)| (q, "max relative error of H".into())),
            options.tolerance,
        ),
        check(
            "two-target commutator",
            oracle.map(|(_, c)| (c, "oracle vs closed-form commutator".into())),
            options.tolerance,
        ),
        check("single-target oracle", single_target_oracle(), options.tolerance),
        check("commutator -4i", commutator_minus_4i(), options.commutator_tolerance),
        check("small-eps commutator law", small_epsilon_law(), 1.0),
        check("CFI = QFI", cfi_meets_qfi(options.closed_form_two), options.cfi_tolerance),
    ];
    checks.push(check("Monte-Carlo CRB", monte_carlo_crb(options), options.mc_tolerance));
    VerifyReport { checks }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_has_81_points() {
        assert_eq!(two_target_grid().len(), 81);
    }

    #[test]
    fn report_rendering() {
        let r = VerifyReport {
            checks: vec![
                check("a", Ok((0.5, "x".into())), 1.0),
                check("b", Err(crate::Error::DegeneratePoint), 1.0),
            ],
        };
        assert!(!r.passed());
        let text = r.render();
        assert!(text.contains("PASS") && text.contains("FAIL"));
    }
}

//! Acceptance criteria 1–11. Prints one PASS/FAIL line per criterion and exits non-zero if
//! any criterion fails.

use std::time::{Duration, Instant};

use lidar_qfi::cli_runner::config::{Mode, RunConfig};
use lidar_qfi::cli_runner::sweep::{run_sweep, SweepRegistry};
use lidar_qfi::cli_runner::verify::two_target_oracle_error;
use lidar_qfi::cli_runner::{run, with_workers};
use lidar_qfi::families::{FamilyRegistry, FamilySettings};
use lidar_qfi::gaussian_optics::{GaussianPulse, TargetKinematics, TwoPhotonState, TwoTargetScene};
use lidar_qfi::measurement_sim::{
    averaged_cfi, postselected_cfi, sample_joint_time_frequency, simulate_mle_trials, summarize_joint,
    CentroidPhase, HadamardShotConfig, JointMeasureConfig,
};
use lidar_qfi::metrology_engine::{commutator_trace, oracle_qfi, OracleOptions};
use lidar_qfi::single_target::{
    basis_state, commutator_report, qfi_lambda_entangled, qfi_lambda_separable, qfi_position_velocity, sld_lambda,
    SingleTargetProblem,
};
use lidar_qfi::two_target::{commutator_trace_two, qfi_two, TwoTargetQfiInputs};
use nalgebra::DMatrix;
use num_complex::Complex64;

type Outcome = Result<String, String>;

struct Criterion {
    id: u32,
    title: &'static str,
    run: fn() -> Outcome,
}

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-300)
}

/// Relative error for non-zero references, absolute for zero ones.
fn matrix_error(got: &DMatrix<f64>, want: &DMatrix<f64>) -> f64 {
    got.iter()
        .zip(want.iter())
        .map(|(&g, &w)| if w == 0.0 { g.abs() } else { rel(g, w) })
        .fold(0.0, f64::max)
}

fn oracle(name: &str, settings: &FamilySettings) -> Result<lidar_qfi::metrology_engine::OracleOutput, String> {
    let family = FamilyRegistry::default().build(name, settings).map_err(err)?;
    oracle_qfi(family.as_ref(), &family.nominal(), &OracleOptions::default()).map_err(err)
}

fn timed_within(limit: Duration, start: Instant) -> Result<Duration, String> {
    let elapsed = start.elapsed();
    ensure(elapsed < limit, format!("took {elapsed:.2?}, limit {limit:?}"))?;
    Ok(elapsed)
}

fn c1_single_target_closed_form() -> Outcome {
    let start = Instant::now();
    let j = qfi_lambda_separable(1.0).map_err(err)?;
    let want = DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![4.0, 1.0, 2.0]));
    ensure(j == want, format!("closed form {j} != diag(4,1,2)"))?;
    let settings = FamilySettings {
        sigma: 1.0,
        ..Default::default()
    };
    let out = oracle("single-separable", &settings)?;
    let e = matrix_error(&out.report.qfi_matrix, &want);
    ensure(e < 1e-6, format!("oracle error {e:.3e}"))?;
    let t = timed_within(Duration::from_secs(1), start)?;
    Ok(format!("diag(4,1,2) exact, oracle error {e:.2e}, {t:.2?}"))
}

fn c2_entanglement_tradeoff() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut at_09 = 0.0;
    for kappa in [0.0, 0.3, 0.6, 0.9] {
        let closed = qfi_lambda_entangled(1.0, kappa).map_err(err)?;
        let product = closed[(0, 0)] * closed[(1, 1)];
        let expect = 4.0 / (1.0 - kappa * kappa);
        ensure(rel(product, expect) < 1e-12, format!("closed product {product} at kappa {kappa}"))?;
        let settings = FamilySettings {
            sigma: 1.0,
            kappa,
            ..Default::default()
        };
        let name = if kappa == 0.0 { "single-separable" } else { "single-entangled" };
        let out = oracle(name, &settings)?;
        let oracle_product = out.report.qfi_matrix[(0, 0)] * out.report.qfi_matrix[(1, 1)];
        worst = worst.max(rel(oracle_product, product));
        if kappa == 0.9 {
            at_09 = product;
        }
    }
    ensure(worst < 1e-5, format!("oracle product error {worst:.3e}"))?;
    ensure((at_09 - 21.05263).abs() < 1e-5, format!("kappa=0.9 product {at_09}"))?;
    Ok(format!("max oracle error {worst:.2e}, kappa=0.9 product {at_09:.5}"))
}

fn c3_saturability_traces() -> Outcome {
    let mut worst_t_omega: f64 = 0.0;
    let mut worst_sigma: f64 = 0.0;
    for kappa in [0.0, 0.3, 0.6, 0.9] {
        for sigma in [0.5, 1.0, 2.0] {
            let slds = sld_lambda(sigma, kappa).map_err(err)?;
            let rho = basis_state(kappa).map_err(err)?;
            let engine = commutator_trace(rho.matrix(), &slds[0], &slds[1]).map_err(err)?;
            let problem =
                SingleTargetProblem::new(sigma, 5.0, kappa, TargetKinematics::new(0.0, 0.0, 1.0).map_err(err)?)
                    .map_err(err)?;
            let closed = commutator_report(&problem).map_err(err)?.t_omega();
            let minus_4i = Complex64::new(0.0, -4.0);
            worst_t_omega = worst_t_omega.max((engine - minus_4i).norm()).max((closed - minus_4i).norm());
            for (a, b) in [(0, 2), (1, 2)] {
                let c = commutator_trace(rho.matrix(), &slds[a], &slds[b]).map_err(err)?;
                worst_sigma = worst_sigma.max(c.norm());
            }
        }
    }
    ensure(worst_t_omega < 1e-9, format!("(t,w) trace deviates from -4i by {worst_t_omega:.3e}"))?;
    ensure(worst_sigma < 1e-10, format!("sigma traces reach {worst_sigma:.3e}"))?;
    Ok(format!("|tr + 4i| <= {worst_t_omega:.1e}, sigma traces <= {worst_sigma:.1e}"))
}

/// `H(x, β)` for the separable probe, written out in closed form.
fn explicit_h_x_beta(x: f64, beta: f64, sigma: f64, omega0: f64, c: f64) -> DMatrix<f64> {
    let q = 1.0 - beta;
    let pre = 4.0 / (q * q);
    let s2 = sigma * sigma;
    let xx = 4.0 * s2 / (c * c);
    let xb = 4.0 * x * s2 / (c * c * q);
    let bb = (4.0 * x * x * s2 * s2 + c * c * (2.0 * s2 + omega0 * omega0)) / (c * c * s2 * q * q);
    DMatrix::from_row_slice(2, 2, &[pre * xx, pre * xb, pre * xb, pre * bb])
}

fn c4_position_velocity() -> Outcome {
    let problem = |x, beta, sigma| {
        SingleTargetProblem::new(sigma, 5.0, 0.0, TargetKinematics::new(x, beta, 1.0).map_err(err)?).map_err(err)
    };
    let h = qfi_position_velocity(&problem(0.0, 0.0, 1.0)?).map_err(err)?;
    let want = DMatrix::from_row_slice(2, 2, &[16.0, 0.0, 0.0, 108.0]);
    let e0 = matrix_error(&h, &want);
    ensure(e0 < 1e-12, format!("H(x,beta) = {h}"))?;
    let mut worst: f64 = 0.0;
    for x in [0.0, 0.7, 2.0] {
        for beta in [-0.3, 0.0, 0.4] {
            for sigma in [0.5, 1.0, 2.0] {
                let h = qfi_position_velocity(&problem(x, beta, sigma)?).map_err(err)?;
                worst = worst.max(matrix_error(&h, &explicit_h_x_beta(x, beta, sigma, 5.0, 1.0)));
            }
        }
    }
    ensure(worst < 1e-10, format!("grid error {worst:.3e}"))?;
    Ok(format!("[[16,0],[0,108]] reproduced, 27-point grid error {worst:.2e}"))
}

fn c5_two_target_oracle() -> Outcome {
    let start = Instant::now();
    let (qfi, comm) = with_workers(1, || two_target_oracle_error(qfi_two)).map_err(err)?;
    ensure(qfi < 1e-5, format!("QFI error {qfi:.3e}"))?;
    ensure(comm < 1e-5, format!("commutator error {comm:.3e}"))?;
    let t = timed_within(Duration::from_secs(30), start)?;
    Ok(format!("81 points, QFI error {qfi:.2e}, commutator error {comm:.2e}, {t:.2?} on 1 worker"))
}

/// Oracle value of H_Δt² at Δt²σ² = 0.01, Δω²/σ² = 1, σ = 1, κ = 0.
const SPOT_H_DT_DT: f64 = 0.158_050_964_766_655_37;

fn c6_rayleigh_curse_lift() -> Outcome {
    for sigma in [0.5, 1.0, 2.0] {
        for dt in [0.01, 0.1, 1.0, 3.0] {
            let h = qfi_two(&TwoTargetQfiInputs::new(sigma, 0.0, dt, 0.0).map_err(err)?).map_err(err)?;
            ensure(h[(0, 0)] == sigma * sigma, format!("H_dtdt = {} at sigma {sigma}, dt {dt}", h[(0, 0)]))?;
        }
    }
    let cfg = RunConfig {
        mode: Mode::TwoTarget,
        sweep: vec![
            "dt2s2=0.01:0.01:1".parse().map_err(err)?,
            "dw2s2=1:1:1".parse().map_err(err)?,
        ],
        ..Default::default()
    };
    let spot_table = run_sweep(&cfg, &SweepRegistry::default()).map_err(err)?;
    let spot = spot_table.column("H_dt_dt").map_err(err)?[0].as_real().ok_or("missing spot value")?;
    let settings = FamilySettings {
        sigma: 1.0,
        kappa: 0.0,
        delta_time: 0.1,
        delta_frequency: 1.0,
        ..Default::default()
    };
    let oracle_spot = oracle("two-target-separable", &settings)?.report.qfi_matrix[(0, 0)];
    ensure(
        (spot - SPOT_H_DT_DT).abs() < 1e-6 && (spot - oracle_spot).abs() < 1e-6,
        format!("spot value {spot}, oracle {oracle_spot}"),
    )?;

    let mut failures = Vec::new();
    for dt2s2 in [0.01, 0.1, 1.0] {
        let cfg = RunConfig {
            mode: Mode::TwoTarget,
            sweep: vec![
                format!("dt2s2={dt2s2}:{dt2s2}:1").parse().map_err(err)?,
                "dw2s2=0:5:101".parse().map_err(err)?,
            ],
            ..Default::default()
        };
        let table = run_sweep(&cfg, &SweepRegistry::default()).map_err(err)?;
        let x: Vec<f64> = table.column("dw2s2").map_err(err)?.iter().filter_map(|c| c.as_real()).collect();
        let y: Vec<f64> = table.column("H_dt_dt").map_err(err)?.iter().filter_map(|c| c.as_real()).collect();
        let (imin, ymin) = y.iter().enumerate().fold((0, f64::INFINITY), |a, (i, &v)| if v < a.1 { (i, v) } else { a });
        if let Some(k) = y.windows(2).position(|w| w[1] > w[0]) {
            failures.push(format!(
                "dt2s2={dt2s2}: rises after dw2s2={:.2} (min {ymin:.4} at {:.2}, end {:.4})",
                x[k],
                x[imin],
                y[y.len() - 1]
            ));
        }
    }
    ensure(
        failures.is_empty(),
        format!("H_dt_dt = sigma^2 at domega=0 and spot value {spot:.9} hold; not monotone decreasing: {}", failures.join("; ")),
    )?;
    Ok(format!("spot value {spot:.9}, curves monotone"))
}

fn c7_small_epsilon() -> Outcome {
    let mut worst: f64 = 0.0;
    let mut points = 0;
    for kappa in [0.0, 0.3, 0.6, 0.9] {
        for sigma in [0.5, 1.0, 2.0] {
            for a in [1e-3, 0.01, 0.03, 0.1, 0.2, 0.3] {
                for b in [1e-3, 0.01, 0.03, 0.1, 0.2, 0.3] {
                    let inputs = TwoTargetQfiInputs::new(sigma, kappa, a / sigma, b * sigma).map_err(err)?;
                    let eps = inputs.epsilon();
                    if eps > 0.1 {
                        continue;
                    }
                    points += 1;
                    let c = commutator_trace_two(&inputs).map_err(err)?;
                    worst = worst.max((c - Complex64::new(0.0, -eps / 2.0)).norm() / (eps * eps));
                }
            }
        }
    }
    // the oracle sees the same law
    for (kappa, name) in [(0.0, "two-target-separable"), (0.6, "two-target-entangled")] {
        for (dt, dw) in [(0.1, 0.2), (0.2, 0.3), (0.25, 0.1)] {
            let settings = FamilySettings {
                sigma: 1.0,
                kappa,
                delta_time: dt,
                delta_frequency: dw,
                ..Default::default()
            };
            let inputs = TwoTargetQfiInputs::new(1.0, kappa, dt, dw).map_err(err)?;
            let eps = inputs.epsilon();
            let c = oracle(name, &settings)?.report.commutator_im[(0, 1)];
            points += 1;
            worst = worst.max((c + eps / 2.0).abs() / (eps * eps));
        }
    }
    ensure(worst <= 1.0, format!("worst |tr + i eps/2| / eps^2 = {worst:.3}"))?;
    Ok(format!("{points} points with eps <= 0.1, worst deviation {worst:.3} eps^2"))
}

fn c8_measurement_optimality() -> Outcome {
    let mut worst: f64 = 0.0;
    for sigma in [0.5, 1.0, 2.0, 3.0] {
        worst = worst.max(rel(averaged_cfi(sigma).map_err(err)?, sigma * sigma));
    }
    ensure(worst < 1e-8, format!("averaged CFI error {worst:.3e}"))?;
    for (nu1, nu2) in [(2.0, 0.0), (0.3, 1.7), (-1.0, 4.0)] {
        let expect: f64 = (nu1 - nu2) * (nu1 - nu2) / 4.0;
        for dt in [0.1, 1.0, 3.0] {
            let v = postselected_cfi(nu1, nu2, dt, CentroidPhase::Calibrated);
            ensure((v - expect).abs() <= 1e-12 * expect.max(1.0), format!("CFI {v} vs {expect} at dt {dt}"))?;
        }
    }
    Ok(format!("averaged CFI error {worst:.2e}, calibrated CFI constant in dt"))
}

fn c9_crb_attainment() -> Outcome {
    let start = Instant::now();
    let (shots, trials, sigma) = (100_000, 200, 1.0);
    let scene = TwoTargetScene::new(0.0, 0.0, 0.5, 0.0, sigma, 0.0).map_err(err)?;
    let config = HadamardShotConfig::new(scene, shots, 0).map_err(err)?;
    let estimates = with_workers(4, || simulate_mle_trials(&config, trials)).map_err(err)?;
    let values: Vec<f64> = estimates.iter().map(|e| e.delta_t).collect();
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let crb = 1.0 / (shots as f64 * sigma * sigma);
    let elapsed = start.elapsed();
    let detail = format!(
        "Var = {var:.4e} vs CRB {crb:.1e} (ratio {:.3}), mean {mean:.5}, {elapsed:.2?} on 4 workers",
        var / crb
    );
    ensure(rel(var, crb) <= 0.10, detail.clone())?;
    timed_within(Duration::from_secs(60), start).map_err(|e| format!("{detail}; {e}"))?;
    Ok(detail)
}

fn c10_joint_measurement() -> Outcome {
    let mut parts = Vec::new();
    for (i, kappa) in [0.0, 0.5, 0.9].into_iter().enumerate() {
        let signal = GaussianPulse::new(0.0, 0.0, 1.0).map_err(err)?;
        let config = JointMeasureConfig {
            state: TwoPhotonState::new(signal, signal, kappa).map_err(err)?,
            shots: 1_000_000,
            seed: 100 + i as u64,
        };
        let samples = sample_joint_time_frequency(&config).map_err(err)?;
        let s = summarize_joint(&config, &samples).map_err(err)?;
        let (et, ew) = (rel(s.t_variance, s.t_predicted), rel(s.omega_variance, s.omega_predicted));
        ensure(et < 0.03 && ew < 0.03, format!("kappa {kappa}: variance errors {et:.3e}, {ew:.3e}"))?;
        if kappa == 0.9 {
            let product = s.uncertainty_product();
            ensure((product - 0.229).abs() < 0.005 && product < 0.5, format!("dt*dw = {product}"))?;
            parts.push(format!("kappa=0.9 dt*dw = {product:.4} < 0.5"));
        }
    }
    Ok(format!("variances within 3%; {}", parts.join("")))
}

fn c11_determinism() -> Outcome {
    let dir = tempfile::tempdir().map_err(err)?;
    let commands: [&[&str]; 2] = [
        &["sweep", "--model", "two-target", "--sweep", "dt2s2=0.01:1:3", "--sweep", "dw2s2=0:5:51"],
        &["simulate", "hadamard", "--shots", "50000", "--seed", "9"],
    ];
    for args in commands {
        let mut outputs = Vec::new();
        for (k, workers) in ["1", "1", "4"].into_iter().enumerate() {
            let out = dir.path().join(format!("run{k}.csv"));
            let mut full = vec!["lidar-qfi"];
            full.extend_from_slice(args);
            full.extend(["--workers", workers, "--out", out.to_str().unwrap()]);
            let code = run(full);
            ensure(code == 0, format!("`{}` exited {code}", args.join(" ")))?;
            outputs.push(std::fs::read(&out).map_err(err)?);
        }
        ensure(
            outputs[0] == outputs[1] && outputs[0] == outputs[2],
            format!("`{}` output differs between runs", args.join(" ")),
        )?;
    }
    Ok("sweep and simulate hadamard byte-identical (workers 1, 1, 4)".into())
}

fn main() {
    let criteria = [
        Criterion { id: 1, title: "single-target closed forms", run: c1_single_target_closed_form },
        Criterion { id: 2, title: "entanglement relaxes the trade-off", run: c2_entanglement_tradeoff },
        Criterion { id: 3, title: "saturability traces", run: c3_saturability_traces },
        Criterion { id: 4, title: "(x, beta) reparameterization", run: c4_position_velocity },
        Criterion { id: 5, title: "two-target oracle equivalence", run: c5_two_target_oracle },
        Criterion { id: 6, title: "Rayleigh-curse lift and separation sweep", run: c6_rayleigh_curse_lift },
        Criterion { id: 7, title: "small-eps commutator law", run: c7_small_epsilon },
        Criterion { id: 8, title: "measurement optimality", run: c8_measurement_optimality },
        Criterion { id: 9, title: "CRB attainment by simulation", run: c9_crb_attainment },
        Criterion { id: 10, title: "joint time-frequency measurement", run: c10_joint_measurement },
        Criterion { id: 11, title: "determinism", run: c11_determinism },
    ];
    let mut failed = 0;
    for c in criteria {
        let start = Instant::now();
        let outcome = (c.run)();
        let t = start.elapsed();
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {} [{t:.2?}]  {detail}", c.id, c.title),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {} [{t:.2?}]  {detail}", c.id, c.title);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", 11 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

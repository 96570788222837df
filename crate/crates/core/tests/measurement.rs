use lidar_qfi::gaussian_optics::TwoTargetScene;
use lidar_qfi::measurement_sim::{simulate_mle_trials, HadamardShotConfig};

fn estimates(dt: f64, shots: usize, trials: usize, seed: u64) -> Vec<f64> {
    let scene = TwoTargetScene::new(0.0, 0.0, dt, 0.0, 1.0, 0.0).unwrap();
    let config = HadamardShotConfig::new(scene, shots, seed).unwrap();
    simulate_mle_trials(&config, trials).unwrap().iter().map(|e| e.delta_t).collect()
}

fn normalized_variance(values: &[f64], shots: usize) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) * shots as f64
}

#[test]
fn mle_variance_approaches_crb() {
    // 200 trials: the variance estimate has a relative spread of about 10%
    let r3 = normalized_variance(&estimates(0.5, 1_000, 200, 1), 1_000);
    let r4 = normalized_variance(&estimates(0.5, 10_000, 200, 1), 10_000);
    assert!((r3 - 1.0).abs() < 0.4, "N=1e3: {r3}");
    assert!((r4 - 1.0).abs() < 0.3, "N=1e4: {r4}");
}

#[test]
fn coincident_truth_concentrates_at_zero() {
    let shots = 10_000;
    let mut v = estimates(0.0, shots, 41, 2);
    v.sort_by(f64::total_cmp);
    let median = v[v.len() / 2];
    assert!(median < 2.0 / (shots as f64).sqrt(), "median {median}");
    assert!(v.iter().all(|&x| x >= 0.0));
}

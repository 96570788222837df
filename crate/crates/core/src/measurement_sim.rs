//! Frequency-Hadamard measurement of the time separation of two returns, its Fisher
//! information, shot simulation and maximum-likelihood estimation; plus the joint
//! `(ω₊, t₋)` measurement on entangled pairs.

use std::io::Write;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{check_finite, check_positive, Error, Result};
use crate::gaussian_optics::{check_kappa, TwoPhotonState, TwoTargetScene};
use crate::quadrature::{GaussHermite, DEFAULT_ORDER};

/// Shots drawn from one RNG stream.
pub const SHOT_BLOCK: usize = 4096;

/// `(p₁, p₂)` with `p₁ = ¼(2 + cos((ν₂-ν₁)t₁) + cos((ν₂-ν₁)t₂))`.
pub fn hadamard_probs(nu1: f64, nu2: f64, t1: f64, t2: f64) -> (f64, f64) {
    let g = nu2 - nu1;
    let p1 = (0.25 * (2.0 + (g * t1).cos() + (g * t2).cos())).clamp(0.0, 1.0);
    (p1, 1.0 - p1)
}

/// How the centroid arrival time enters the interference phase.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CentroidPhase {
    /// Phase reference locked so that `cos((ν₂-ν₁)T) = 1`.
    Calibrated,
    /// Uncorrected phase at centroid time `T`.
    Raw { centroid_time: f64 },
}

/// Fisher information about `Δt` from one postselected frequency pair.
///
/// Calibrated: `(ν₁-ν₂)²/4` for every `Δt`. Raw: the two-outcome Fisher information at
/// `t₁,₂ = T ± Δt/2`, or 0 where an outcome probability vanishes.
pub fn postselected_cfi(nu1: f64, nu2: f64, delta_t: f64, phase: CentroidPhase) -> f64 {
    let g = nu2 - nu1;
    match phase {
        CentroidPhase::Calibrated => g * g / 4.0,
        CentroidPhase::Raw { centroid_time } => {
            let (p1, p2) = hadamard_probs(nu1, nu2, centroid_time + delta_t / 2.0, centroid_time - delta_t / 2.0);
            if p1 <= 0.0 || p2 <= 0.0 {
                return 0.0;
            }
            let dp1 = -0.25 * g * (g * centroid_time).cos() * (0.5 * g * delta_t).sin();
            dp1 * dp1 / (p1 * p2)
        }
    }
}

/// Density of the gap `|ν₁-ν₂|`: `p_Ω(gap/2)` with `p_Ω` the returned spectrum `N(0, σ²)`.
pub fn gap_density(sigma: f64, gap: f64) -> f64 {
    if gap < 0.0 {
        return 0.0;
    }
    let x = gap / 2.0;
    (-(x * x) / (2.0 * sigma * sigma)).exp() / ((2.0 * std::f64::consts::PI).sqrt() * sigma)
}

/// `∫₀^∞ p_Ω(g/2) g²/4 dg` by Gauss–Hermite quadrature of the evenly extended integrand.
pub fn averaged_cfi(sigma: f64) -> Result<f64> {
    check_positive("sigma", sigma)?;
    let rule = GaussHermite::new(DEFAULT_ORDER)?;
    let scale = 2.0 * std::f64::consts::SQRT_2 * sigma;
    let full: f64 = rule
        .nodes
        .iter()
        .zip(&rule.scaled_weights)
        .map(|(&z, &w)| {
            let g = scale * z.abs();
            w * gap_density(sigma, g) * g * g / 4.0
        })
        .sum();
    Ok(0.5 * scale * full)
}

/// Hadamard shot-simulation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HadamardShotConfig {
    pub scene: TwoTargetScene,
    pub shots: usize,
    pub seed: u64,
    pub phase_calibration: bool,
}

impl HadamardShotConfig {
    pub fn new(scene: TwoTargetScene, shots: usize, seed: u64) -> Result<Self> {
        let config = Self {
            scene,
            shots,
            seed,
            phase_calibration: true,
        };
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let s = &self.scene;
        TwoTargetScene::new(s.centroid_time, s.centroid_frequency, s.delta_time, s.delta_frequency, s.bandwidth, s.kappa)?;
        if s.delta_frequency != 0.0 {
            return Err(Error::InvalidParameter {
                name: "domega",
                value: s.delta_frequency,
                reason: "the Hadamard measurement requires domega = 0",
            });
        }
        if self.shots == 0 {
            return Err(Error::InvalidParameter {
                name: "shots",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        Ok(())
    }

    fn arrival_times(&self) -> (f64, f64) {
        let centroid = if self.phase_calibration {
            0.0
        } else {
            self.scene.centroid_time
        };
        (
            centroid + self.scene.delta_time / 2.0,
            centroid - self.scene.delta_time / 2.0,
        )
    }
}

/// One detection event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub shot_index: u64,
    pub nu_gap: f64,
    pub outcome: u8,
}

/// Independent stream for `(seed, trial, block)`.
fn block_rng(seed: u64, trial: u32, block: u32) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream((u64::from(trial) << 32) | u64::from(block));
    rng
}

/// Uniform draw on the open interval (0, 1).
fn open_unit(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

fn block_ranges(shots: usize) -> Vec<(u32, usize, usize)> {
    (0..shots.div_ceil(SHOT_BLOCK))
        .map(|b| {
            let start = b * SHOT_BLOCK;
            (b as u32, start, (start + SHOT_BLOCK).min(shots))
        })
        .collect()
}

/// Draws shot records for trial 0.
pub fn sample_hadamard(config: &HadamardShotConfig) -> Result<Vec<ShotRecord>> {
    sample_hadamard_trial(config, 0)
}

/// Draws shot records for one trial. Blocks of [`SHOT_BLOCK`] shots use their own RNG
/// streams, so the output does not depend on how blocks are scheduled.
pub fn sample_hadamard_trial(config: &HadamardShotConfig, trial: u32) -> Result<Vec<ShotRecord>> {
    config.validate()?;
    let sigma = config.scene.bandwidth;
    let (t1, t2) = config.arrival_times();
    let normal = standard_normal();
    let blocks: Vec<Vec<ShotRecord>> = block_ranges(config.shots)
        .into_par_iter()
        .map(|(block, start, end)| {
            let mut rng = block_rng(config.seed, trial, block);
            (start..end)
                .map(|i| {
                    // |ν₁-ν₂| = 2|X|, X ~ N(0, σ²)
                    let x = sigma * normal.inverse_cdf(open_unit(&mut rng));
                    let gap = 2.0 * x.abs();
                    let (p1, _) = hadamard_probs(0.0, gap, t1, t2);
                    let outcome = if open_unit(&mut rng) < p1 { 1 } else { 2 };
                    ShotRecord {
                        shot_index: i as u64,
                        nu_gap: gap,
                        outcome,
                    }
                })
                .collect()
        })
        .collect();
    Ok(blocks.into_iter().flatten().collect())
}

/// Outcomes for a fixed frequency gap, drawn with the same stream layout as
/// [`sample_hadamard_trial`].
pub fn sample_fixed_gap(nu_gap: f64, delta_t: f64, shots: usize, seed: u64) -> Result<Vec<u8>> {
    check_finite("nu_gap", nu_gap)?;
    check_finite("dt", delta_t)?;
    let (p1, _) = hadamard_probs(0.0, nu_gap, delta_t / 2.0, -delta_t / 2.0);
    let blocks: Vec<Vec<u8>> = block_ranges(shots)
        .into_par_iter()
        .map(|(block, start, end)| {
            let mut rng = block_rng(seed, 0, block);
            (start..end)
                .map(|_| if open_unit(&mut rng) < p1 { 1 } else { 2 })
                .collect()
        })
        .collect();
    Ok(blocks.into_iter().flatten().collect())
}

/// Writes `shot_index,nu_gap,outcome` rows.
pub fn write_shot_records<W: Write>(records: &[ShotRecord], writer: W) -> std::io::Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["shot_index", "nu_gap", "outcome"])?;
    for r in records {
        w.write_record([
            r.shot_index.to_string(),
            format!("{:.16e}", r.nu_gap),
            r.outcome.to_string(),
        ])?;
    }
    w.flush()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MleOptions {
    /// Search interval `[0, upper_in_sigma / σ]`.
    pub upper_in_sigma: f64,
    pub grid_points: usize,
    /// Records used for the coarse grid; the refinement always uses all of them.
    pub grid_records: usize,
    pub golden_iterations: usize,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            upper_in_sigma: 6.0,
            grid_points: 48,
            grid_records: 8192,
            golden_iterations: 40,
        }
    }
}

/// Maximum-likelihood `|Δt|` with diagnostics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MleEstimate {
    pub delta_t: f64,
    /// `1/sqrt(Σ gap²/4)`
    pub std_error: f64,
    pub fisher_information: f64,
    pub log_likelihood: f64,
    pub bracket: (f64, f64),
    pub shots: usize,
}

/// Per-shot calibrated log-likelihood `Σ log p_outcome(|Δt|; gap)`.
pub fn log_likelihood(records: &[ShotRecord], delta_t: f64) -> f64 {
    // p₁ = cos²(gΔt/4), p₂ = sin²(gΔt/4)
    records
        .iter()
        .map(|r| {
            let (s, c) = (0.25 * r.nu_gap * delta_t).sin_cos();
            if r.outcome == 1 {
                (c * c).ln()
            } else {
                (s * s).ln()
            }
        })
        .sum()
}

pub fn mle_delta_t(records: &[ShotRecord], sigma: f64) -> Result<MleEstimate> {
    mle_delta_t_with(records, sigma, &MleOptions::default())
}

/// Coarse grid over `[0, upper]` then golden-section refinement around the best grid point.
pub fn mle_delta_t_with(records: &[ShotRecord], sigma: f64, options: &MleOptions) -> Result<MleEstimate> {
    check_positive("sigma", sigma)?;
    if records.is_empty() {
        return Err(Error::NonIdentifiable("no shot records"));
    }
    let upper = options.upper_in_sigma / sigma;
    let max_gap = records.iter().map(|r| r.nu_gap).fold(0.0, f64::max);
    if max_gap * upper <= 1e-12 {
        return Err(Error::NonIdentifiable("all frequency gaps vanish; the likelihood is flat"));
    }
    let fisher: f64 = records.iter().map(|r| r.nu_gap * r.nu_gap / 4.0).sum();

    let n = options.grid_points.max(2);
    let step = upper / (n - 1) as f64;
    let coarse = &records[..records.len().min(options.grid_records.max(1))];
    let mut best = (0usize, f64::NEG_INFINITY);
    for i in 0..n {
        let ll = log_likelihood(coarse, i as f64 * step);
        if ll > best.1 {
            best = (i, ll);
        }
    }
    let centre = best.0 as f64 * step;
    let (mut a, mut b) = ((centre - step).max(0.0), centre + step);
    let bracket = (a, b);

    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = log_likelihood(records, x1);
    let mut f2 = log_likelihood(records, x2);
    for _ in 0..options.golden_iterations {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = log_likelihood(records, x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = log_likelihood(records, x2);
        }
    }
    let (mut estimate, mut ll) = if f1 >= f2 { (x1, f1) } else { (x2, f2) };
    if bracket.0 == 0.0 {
        // the even likelihood often peaks on the boundary
        let at_zero = log_likelihood(records, 0.0);
        if at_zero >= ll {
            estimate = 0.0;
            ll = at_zero;
        }
    }
    Ok(MleEstimate {
        delta_t: estimate,
        std_error: 1.0 / fisher.sqrt(),
        fisher_information: fisher,
        log_likelihood: ll,
        bracket,
        shots: records.len(),
    })
}

/// Samples and estimates `trials` independent repetitions; trial `k` uses stream `k`.
pub fn simulate_mle_trials(config: &HadamardShotConfig, trials: usize) -> Result<Vec<MleEstimate>> {
    config.validate()?;
    (0..trials)
        .into_par_iter()
        .map(|k| {
            let records = sample_hadamard_trial(config, k as u32)?;
            mle_delta_t(&records, config.scene.bandwidth)
        })
        .collect()
}

/// Joint `(ω₊, t₋)` measurement settings. The idler bandwidth must equal the signal's.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointMeasureConfig {
    pub state: TwoPhotonState,
    pub shots: usize,
    pub seed: u64,
}

impl JointMeasureConfig {
    pub fn validate(&self) -> Result<()> {
        let st = TwoPhotonState::new(self.state.signal, self.state.idler, self.state.kappa)?;
        check_kappa(st.kappa)?;
        let (s, si) = (st.signal.bandwidth, st.idler.bandwidth);
        if (s - si).abs() > 1e-12 * s.max(si) {
            return Err(Error::MismatchedStates("joint measurement needs equal signal and idler bandwidths"));
        }
        if self.shots == 0 {
            return Err(Error::InvalidParameter {
                name: "shots",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        Ok(())
    }
}

/// One joint detection: sum frequency and time difference.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointSample {
    pub omega_plus: f64,
    pub t_minus: f64,
}

/// Draws from the factorised density: `t₋ ~ N(t̄ - t̄_i, 1/(2(1+κ)σ²))` and
/// `2ω₊ ~ N(ω̄ + ω̄_i, 2(1-κ)σ²)`.
pub fn sample_joint_time_frequency(config: &JointMeasureConfig) -> Result<Vec<JointSample>> {
    config.validate()?;
    let st = config.state;
    let sigma = st.signal.bandwidth;
    let k = st.kappa;
    let t_mean = st.signal.central_time - st.idler.central_time;
    let t_sd = (1.0 / (2.0 * (1.0 + k) * sigma * sigma)).sqrt();
    let w_mean = 0.5 * (st.signal.central_frequency + st.idler.central_frequency);
    let w_sd = 0.5 * (2.0 * (1.0 - k) * sigma * sigma).sqrt();
    let normal = standard_normal();
    let blocks: Vec<Vec<JointSample>> = block_ranges(config.shots)
        .into_par_iter()
        .map(|(block, start, end)| {
            let mut rng = block_rng(config.seed, 0, block);
            (start..end)
                .map(|_| {
                    let zw = normal.inverse_cdf(open_unit(&mut rng));
                    let zt = normal.inverse_cdf(open_unit(&mut rng));
                    JointSample {
                        omega_plus: w_mean + w_sd * zw,
                        t_minus: t_mean + t_sd * zt,
                    }
                })
                .collect()
        })
        .collect();
    Ok(blocks.into_iter().flatten().collect())
}

/// Empirical performance of `t̂ = t₋ + t̄_i` and `ω̂ = 2ω₊ - ω̄_i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointSummary {
    pub shots: usize,
    pub t_mean: f64,
    pub omega_mean: f64,
    /// Sample variances.
    pub t_variance: f64,
    pub omega_variance: f64,
    /// Mean square errors about the true `t̄`, `ω̄`.
    pub t_mse: f64,
    pub omega_mse: f64,
    /// Predicted `1/(2(1+κ)σ²)` and `2(1-κ)σ²`.
    pub t_predicted: f64,
    pub omega_predicted: f64,
}

impl JointSummary {
    /// `δt·δω` from the sample variances.
    pub fn uncertainty_product(&self) -> f64 {
        (self.t_variance * self.omega_variance).sqrt()
    }
}

pub fn summarize_joint(config: &JointMeasureConfig, samples: &[JointSample]) -> Result<JointSummary> {
    config.validate()?;
    if samples.len() < 2 {
        return Err(Error::InvalidParameter {
            name: "shots",
            value: samples.len() as f64,
            reason: "need at least 2 samples",
        });
    }
    let st = config.state;
    let n = samples.len() as f64;
    let t_hat: Vec<f64> = samples.iter().map(|s| s.t_minus + st.idler.central_time).collect();
    let w_hat: Vec<f64> = samples
        .iter()
        .map(|s| 2.0 * s.omega_plus - st.idler.central_frequency)
        .collect();
    let mean = |v: &[f64]| v.iter().sum::<f64>() / n;
    let var = |v: &[f64], m: f64| v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    let mse = |v: &[f64], truth: f64| v.iter().map(|x| (x - truth).powi(2)).sum::<f64>() / n;
    let (tm, wm) = (mean(&t_hat), mean(&w_hat));
    let sigma = st.signal.bandwidth;
    let k = st.kappa;
    Ok(JointSummary {
        shots: samples.len(),
        t_mean: tm,
        omega_mean: wm,
        t_variance: var(&t_hat, tm),
        omega_variance: var(&w_hat, wm),
        t_mse: mse(&t_hat, st.signal.central_time),
        omega_mse: mse(&w_hat, st.signal.central_frequency),
        t_predicted: 1.0 / (2.0 * (1.0 + k) * sigma * sigma),
        omega_predicted: 2.0 * (1.0 - k) * sigma * sigma,
    })
}

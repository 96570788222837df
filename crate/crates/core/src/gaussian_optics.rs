//! Gaussian single-photon pulses, entangled signal–idler pairs, the delay/Doppler channel and
//! their overlap integrals.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_positive, Error, Result};
use crate::quadrature::QuadratureGrid;

/// Upper guard on the entanglement parameter; the pair state degenerates at κ = 1.
pub const KAPPA_MAX: f64 = 1.0 - 1e-6;

const BANDWIDTH_MATCH: f64 = 1e-12;

pub fn check_kappa(kappa: f64) -> Result<f64> {
    if kappa.is_finite() && (0.0..=KAPPA_MAX).contains(&kappa) {
        Ok(kappa)
    } else {
        Err(Error::InvalidParameter {
            name: "kappa",
            value: kappa,
            reason: "must lie in [0, 1 - 1e-6]",
        })
    }
}

/// Single-photon Gaussian wave packet with central time `t̄`, central angular frequency `ω̄`
/// and bandwidth `σ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianPulse {
    pub central_time: f64,
    pub central_frequency: f64,
    pub bandwidth: f64,
}

impl GaussianPulse {
    pub fn new(central_time: f64, central_frequency: f64, bandwidth: f64) -> Result<Self> {
        Ok(Self {
            central_time: check_finite("central_time", central_time)?,
            central_frequency: check_finite("central_frequency", central_frequency)?,
            bandwidth: check_positive("sigma", bandwidth)?,
        })
    }

    fn validate(&self) -> Result<()> {
        Self::new(self.central_time, self.central_frequency, self.bandwidth).map(|_| ())
    }
}

/// Range `x` at emission time, radial velocity `β = v/c`, and the speed of light.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TargetKinematics {
    pub range: f64,
    pub beta: f64,
    pub light_speed: f64,
}

impl TargetKinematics {
    pub fn new(range: f64, beta: f64, light_speed: f64) -> Result<Self> {
        check_finite("x", range)?;
        check_positive("c", light_speed)?;
        if !(beta.is_finite() && beta.abs() < 1.0) {
            return Err(Error::InvalidParameter {
                name: "beta",
                value: beta,
                reason: "must satisfy |beta| < 1 (superluminal target)",
            });
        }
        Ok(Self {
            range,
            beta,
            light_speed,
        })
    }

    /// Kinematics whose Doppler map undoes this one.
    pub fn inverse(&self) -> Self {
        Self {
            range: -self.range * (1.0 + self.beta) / (1.0 - self.beta),
            beta: -self.beta,
            light_speed: self.light_speed,
        }
    }

    /// `(1 - β) / (1 + β)`
    pub fn doppler_factor(&self) -> f64 {
        (1.0 - self.beta) / (1.0 + self.beta)
    }

    /// Round-trip delay `2x / (c (1 - β))`.
    pub fn delay(&self) -> f64 {
        2.0 * self.range / (self.light_speed * (1.0 - self.beta))
    }
}

/// Signal–idler pair with frequency entanglement `κ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoPhotonState {
    pub signal: GaussianPulse,
    pub idler: GaussianPulse,
    pub kappa: f64,
}

impl TwoPhotonState {
    pub fn new(signal: GaussianPulse, idler: GaussianPulse, kappa: f64) -> Result<Self> {
        signal.validate()?;
        idler.validate()?;
        Ok(Self {
            signal,
            idler,
            kappa: check_kappa(kappa)?,
        })
    }

    /// Idler with the same bandwidth as the signal, centred at `(t̄, 0)`.
    pub fn with_matched_idler(signal: GaussianPulse, kappa: f64) -> Result<Self> {
        let idler = GaussianPulse::new(signal.central_time, 0.0, signal.bandwidth)?;
        Self::new(signal, idler, kappa)
    }
}

/// Two incoherently reflecting targets described by centroid and separation of their returns.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoTargetScene {
    pub centroid_time: f64,
    pub centroid_frequency: f64,
    pub delta_time: f64,
    pub delta_frequency: f64,
    pub bandwidth: f64,
    pub kappa: f64,
}

impl TwoTargetScene {
    pub fn new(
        centroid_time: f64,
        centroid_frequency: f64,
        delta_time: f64,
        delta_frequency: f64,
        bandwidth: f64,
        kappa: f64,
    ) -> Result<Self> {
        Ok(Self {
            centroid_time: check_finite("t_centroid", centroid_time)?,
            centroid_frequency: check_finite("omega_centroid", centroid_frequency)?,
            delta_time: check_finite("dt", delta_time)?,
            delta_frequency: check_finite("domega", delta_frequency)?,
            bandwidth: check_positive("sigma", bandwidth)?,
            kappa: check_kappa(kappa)?,
        })
    }

    /// Returns from target 1 and 2: `t̄_{1,2} = T ± Δt/2`, `ω̄_{1,2} = Ω ± Δω/2`.
    pub fn returns(&self) -> Result<(GaussianPulse, GaussianPulse)> {
        let first = GaussianPulse::new(
            self.centroid_time + 0.5 * self.delta_time,
            self.centroid_frequency + 0.5 * self.delta_frequency,
            self.bandwidth,
        )?;
        let second = GaussianPulse::new(
            self.centroid_time - 0.5 * self.delta_time,
            self.centroid_frequency - 0.5 * self.delta_frequency,
            self.bandwidth,
        )?;
        Ok((first, second))
    }

    /// Entangled returns sharing one idler, centred at `(T, 0)` with bandwidth `σ`.
    pub fn entangled_returns(&self) -> Result<(TwoPhotonState, TwoPhotonState)> {
        let (first, second) = self.returns()?;
        let idler = GaussianPulse::new(self.centroid_time, 0.0, self.bandwidth)?;
        Ok((
            TwoPhotonState::new(first, idler, self.kappa)?,
            TwoPhotonState::new(second, idler, self.kappa)?,
        ))
    }
}

/// Applies the round-trip delay and Doppler scaling of a moving target to an outgoing pulse.
pub fn doppler_transform(pulse: &GaussianPulse, target: &TargetKinematics) -> Result<GaussianPulse> {
    pulse.validate()?;
    let target = TargetKinematics::new(target.range, target.beta, target.light_speed)?;
    let factor = target.doppler_factor();
    GaussianPulse::new(
        pulse.central_time + target.delay(),
        pulse.central_frequency * factor,
        pulse.bandwidth * factor,
    )
}

/// `ψ(t) = (2σ²/π)^{1/4} exp[-(t - t̄)² σ² - i ω̄ (t - t̄)]`
pub fn time_amplitude(pulse: &GaussianPulse, t: f64) -> Complex64 {
    let sigma = pulse.bandwidth;
    let u = t - pulse.central_time;
    let norm = (2.0 * sigma * sigma / std::f64::consts::PI).powf(0.25);
    Complex64::new(-u * u * sigma * sigma, -pulse.central_frequency * u).exp() * norm
}

/// Normalised signal–idler amplitude `Ψ(t, t_i)`.
pub fn two_photon_amplitude(state: &TwoPhotonState, t: f64, t_idler: f64) -> Complex64 {
    let s = state.signal.bandwidth;
    let si = state.idler.bandwidth;
    let k = state.kappa;
    let u = t - state.signal.central_time;
    let v = t_idler - state.idler.central_time;
    let norm = (1.0 - k * k).powf(0.25) * (2.0 * s * si / std::f64::consts::PI).sqrt();
    let envelope = -u * u * s * s - v * v * si * si + 2.0 * k * u * v * s * si;
    let phase = -state.signal.central_frequency * u - state.idler.central_frequency * v;
    Complex64::new(envelope, phase).exp() * norm
}

fn bandwidths_match(a: f64, b: f64) -> bool {
    (a - b).abs() <= BANDWIDTH_MATCH * a.abs().max(b.abs())
}

/// `⟨ψ_a|ψ_b⟩ = exp(-Δt²σ²/2 - Δω²/(8σ²) - i Δt Σω)` for equal-bandwidth pulses.
pub fn pulse_overlap(a: &GaussianPulse, b: &GaussianPulse) -> Result<Complex64> {
    a.validate()?;
    b.validate()?;
    if !bandwidths_match(a.bandwidth, b.bandwidth) {
        return Err(Error::MismatchedStates("pulse bandwidths differ"));
    }
    Ok(overlap_closed_form(a, b, a.bandwidth, 1.0))
}

/// `⟨Ψ_a|Ψ_b⟩` for pair states that differ only in the signal's central time and frequency.
pub fn two_photon_overlap(a: &TwoPhotonState, b: &TwoPhotonState) -> Result<Complex64> {
    check_kappa(a.kappa)?;
    check_kappa(b.kappa)?;
    a.signal.validate()?;
    b.signal.validate()?;
    if a.idler != b.idler {
        return Err(Error::MismatchedStates("idlers differ"));
    }
    if a.kappa != b.kappa {
        return Err(Error::MismatchedStates("entanglement parameters differ"));
    }
    if !bandwidths_match(a.signal.bandwidth, b.signal.bandwidth) {
        return Err(Error::MismatchedStates("signal bandwidths differ"));
    }
    let k = a.kappa;
    Ok(overlap_closed_form(&a.signal, &b.signal, a.signal.bandwidth, 1.0 - k * k))
}

fn overlap_closed_form(a: &GaussianPulse, b: &GaussianPulse, sigma: f64, correlation: f64) -> Complex64 {
    let dt = a.central_time - b.central_time;
    let dw = a.central_frequency - b.central_frequency;
    let sum_w = 0.5 * (a.central_frequency + b.central_frequency);
    let exponent = -0.5 * dt * dt * sigma * sigma - dw * dw / (8.0 * correlation * sigma * sigma);
    Complex64::new(exponent, -dt * sum_w).exp()
}

/// `⟨ψ_a|ψ_b⟩` by Gauss–Hermite quadrature on the midpoint envelope; any bandwidths.
pub fn pulse_overlap_quadrature(a: &GaussianPulse, b: &GaussianPulse, order: usize) -> Result<Complex64> {
    a.validate()?;
    b.validate()?;
    let sigma = (0.5 * (a.bandwidth * a.bandwidth + b.bandwidth * b.bandwidth)).sqrt();
    let center = (a.bandwidth.powi(2) * a.central_time + b.bandwidth.powi(2) * b.central_time)
        / (a.bandwidth.powi(2) + b.bandwidth.powi(2));
    let grid = QuadratureGrid::gaussian_1d(center, sigma, order)?;
    Ok(grid.integrate(|[t, _]| time_amplitude(a, t).conj() * time_amplitude(b, t)))
}

/// `⟨Ψ_a|Ψ_b⟩` by tensor Gauss–Hermite quadrature on the correlated midpoint envelope.
pub fn two_photon_overlap_quadrature(
    a: &TwoPhotonState,
    b: &TwoPhotonState,
    order: usize,
) -> Result<Complex64> {
    check_kappa(a.kappa)?;
    check_kappa(b.kappa)?;
    if !bandwidths_match(a.signal.bandwidth, b.signal.bandwidth)
        || !bandwidths_match(a.idler.bandwidth, b.idler.bandwidth)
        || a.kappa != b.kappa
    {
        return Err(Error::MismatchedStates("quadrature overlap needs a shared envelope"));
    }
    let center = [
        0.5 * (a.signal.central_time + b.signal.central_time),
        0.5 * (a.idler.central_time + b.idler.central_time),
    ];
    let grid = QuadratureGrid::gaussian_2d(
        center,
        a.signal.bandwidth,
        a.idler.bandwidth,
        a.kappa,
        order,
    )?;
    Ok(grid.integrate(|[t, ti]| two_photon_amplitude(a, t, ti).conj() * two_photon_amplitude(b, t, ti)))
}

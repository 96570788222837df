//! Relative time and frequency `(Δt, Δω)` of two incoherently reflecting targets.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_positive, Error, Result};
use crate::families::{FamilySettings, TwoTargetFamily};
use crate::gaussian_optics::{check_kappa, pulse_overlap, two_photon_overlap, TwoTargetScene};
use crate::metrology_engine::{reparameterize, spanned_state, DensityOperator, OracleOptions, QfiReport};

pub const PARAMETER_NAMES: [&str; 2] = ["dt", "domega"];
pub const KINEMATIC_NAMES: [&str; 2] = ["dx", "dbeta"];

/// Inputs of the two-target closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoTargetQfiInputs {
    pub sigma: f64,
    pub kappa: f64,
    pub delta_time: f64,
    pub delta_frequency: f64,
}

impl TwoTargetQfiInputs {
    pub fn new(sigma: f64, kappa: f64, delta_time: f64, delta_frequency: f64) -> Result<Self> {
        let inputs = Self {
            sigma,
            kappa,
            delta_time,
            delta_frequency,
        };
        inputs.validate()?;
        Ok(inputs)
    }

    pub fn from_scene(scene: &TwoTargetScene) -> Result<Self> {
        Self::new(scene.bandwidth, scene.kappa, scene.delta_time, scene.delta_frequency)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("sigma", self.sigma)?;
        check_kappa(self.kappa)?;
        check_finite("dt", self.delta_time)?;
        check_finite("domega", self.delta_frequency)?;
        Ok(())
    }

    /// `ε = Δt²σ² + Δω²/(4(1-κ²)σ²)`
    pub fn epsilon(&self) -> f64 {
        let s2 = self.sigma * self.sigma;
        self.delta_time.powi(2) * s2
            + self.delta_frequency.powi(2) / (4.0 * (1.0 - self.kappa * self.kappa) * s2)
    }

    /// `4(e^ε - 1)`
    pub fn gap_factor(&self) -> f64 {
        4.0 * self.epsilon().exp_m1()
    }

    fn checked_gap(&self) -> Result<f64> {
        self.validate()?;
        let gap = self.gap_factor();
        if self.delta_time == 0.0 && self.delta_frequency == 0.0 || gap.is_nan() || gap <= 0.0 {
            return Err(Error::DegeneratePoint);
        }
        Ok(gap)
    }
}

/// QFI matrix over `(Δt, Δω)`:
/// `[[σ² - Δω²/g, ΔtΔω/g], [ΔtΔω/g, 1/(4(1-κ²)σ²) - Δt²/g]]` with `g` the gap factor.
pub fn qfi_two(inputs: &TwoTargetQfiInputs) -> Result<DMatrix<f64>> {
    let gap = inputs.checked_gap()?;
    let s2 = inputs.sigma * inputs.sigma;
    let dt = inputs.delta_time;
    let dw = inputs.delta_frequency;
    let corr = 1.0 - inputs.kappa * inputs.kappa;
    let off = dt * dw / gap;
    Ok(DMatrix::from_row_slice(
        2,
        2,
        &[s2 - dw * dw / gap, off, off, 1.0 / (4.0 * corr * s2) - dt * dt / gap],
    ))
}

/// `Tr(ρ[L_Δt, L_Δω]) = i (ε/(e^ε - 1) - 1)`
pub fn commutator_trace_two(inputs: &TwoTargetQfiInputs) -> Result<Complex64> {
    inputs.checked_gap()?;
    let eps = inputs.epsilon();
    Ok(Complex64::new(0.0, eps / eps.exp_m1() - 1.0))
}

/// Closed-form report over `(Δt, Δω)`.
pub fn two_target_report(inputs: &TwoTargetQfiInputs) -> Result<QfiReport> {
    let c = commutator_trace_two(inputs)?.im;
    QfiReport::new(
        PARAMETER_NAMES.iter().map(|s| s.to_string()).collect(),
        qfi_two(inputs)?,
        DMatrix::from_row_slice(2, 2, &[0.0, c, -c, 0.0]),
    )
}

/// Non-relativistic relative kinematics: `Δt ≈ 2Δx/c`, `Δω ≈ -2Δβ ω̄₀`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelativeKinematics {
    pub delta_range: f64,
    pub delta_beta: f64,
    pub omega0: f64,
    pub light_speed: f64,
}

impl RelativeKinematics {
    pub fn new(delta_range: f64, delta_beta: f64, omega0: f64, light_speed: f64) -> Result<Self> {
        Ok(Self {
            delta_range: check_finite("dx", delta_range)?,
            delta_beta: check_finite("dbeta", delta_beta)?,
            omega0: check_finite("omega0", omega0)?,
            light_speed: check_positive("c", light_speed)?,
        })
    }

    /// `diag(2/c, -2ω̄₀)`
    pub fn jacobian(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(2, 2, &[2.0 / self.light_speed, 0.0, 0.0, -2.0 * self.omega0])
    }

    /// `(Δt, Δω)` implied by this separation.
    pub fn separations(&self) -> (f64, f64) {
        (
            2.0 * self.delta_range / self.light_speed,
            -2.0 * self.delta_beta * self.omega0,
        )
    }
}

/// Report over `(Δx, Δβ)` from the `(Δt, Δω)` closed forms.
pub fn relative_kinematics_report(inputs: &TwoTargetQfiInputs, kin: &RelativeKinematics) -> Result<QfiReport> {
    let kin = RelativeKinematics::new(kin.delta_range, kin.delta_beta, kin.omega0, kin.light_speed)?;
    reparameterize(
        &two_target_report(inputs)?,
        &kin.jacobian(),
        KINEMATIC_NAMES.iter().map(|s| s.to_string()).collect(),
    )
}

pub fn relative_kinematics_qfi(inputs: &TwoTargetQfiInputs, kin: &RelativeKinematics) -> Result<DMatrix<f64>> {
    Ok(relative_kinematics_report(inputs, kin)?.qfi_matrix)
}

/// The equal-weight mixture of both returns in an orthonormal basis of the span of the
/// returns and their parameter derivatives.
#[derive(Debug, Clone)]
pub struct MixedState {
    pub density: DensityOperator,
    /// `⟨ψ₁|ψ₂⟩` from the closed-form overlaps.
    pub overlap: Complex64,
    /// `(1 + |δ|)/2`, `(1 - |δ|)/2`
    pub populations: (f64, f64),
    pub basis_dim: usize,
}

/// Builds the two-target state numerically: separable returns for κ = 0, entangled returns
/// sharing one idler otherwise.
pub fn mixed_state(scene: &TwoTargetScene, quadrature_order: usize) -> Result<MixedState> {
    let scene = TwoTargetScene::new(
        scene.centroid_time,
        scene.centroid_frequency,
        scene.delta_time,
        scene.delta_frequency,
        scene.bandwidth,
        scene.kappa,
    )?;
    let settings = FamilySettings {
        sigma: scene.bandwidth,
        kappa: scene.kappa,
        central_time: scene.centroid_time,
        central_frequency: scene.centroid_frequency,
        delta_time: scene.delta_time,
        delta_frequency: scene.delta_frequency,
        quadrature_order,
    };
    let overlap = if scene.kappa == 0.0 {
        let (a, b) = scene.returns()?;
        pulse_overlap(&a, &b)?
    } else {
        let (a, b) = scene.entangled_returns()?;
        two_photon_overlap(&a, &b)?
    };
    let family = if scene.kappa == 0.0 {
        TwoTargetFamily::separable(&settings)?
    } else {
        TwoTargetFamily::entangled(&settings)?
    };
    let span = spanned_state(
        &family,
        &[scene.delta_time, scene.delta_frequency],
        &OracleOptions::default(),
    )?;
    let d = overlap.norm();
    Ok(MixedState {
        basis_dim: span.basis.ncols(),
        density: span.state,
        overlap,
        populations: ((1.0 + d) / 2.0, (1.0 - d) / 2.0),
    })
}

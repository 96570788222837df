//! Range and velocity of a single target: closed-form SLDs and QFI matrices over
//! `λ = (t̄, ω̄, σ)` of the returned photon, and their change of variables to `μ = (x, β)`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_positive, Result};
use crate::gaussian_optics::{check_kappa, TargetKinematics};
use crate::linalg::CMatrix;
use crate::metrology_engine::{reparameterize, DensityOperator, HermitianOperator, QfiReport};

pub const LAMBDA_NAMES: [&str; 3] = ["t_bar", "omega_bar", "sigma"];
pub const MU_NAMES: [&str; 2] = ["x", "beta"];

/// One target probed by a single photon (κ = 0) or by the signal of an entangled pair.
///
/// `sigma` is the bandwidth of the returned photon, the quantity estimated alongside `t̄`, `ω̄`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SingleTargetProblem {
    pub sigma: f64,
    pub omega0: f64,
    pub kappa: f64,
    pub kinematics: TargetKinematics,
}

impl SingleTargetProblem {
    pub fn new(sigma: f64, omega0: f64, kappa: f64, kinematics: TargetKinematics) -> Result<Self> {
        let problem = Self {
            sigma,
            omega0,
            kappa,
            kinematics,
        };
        problem.validate()?;
        Ok(problem)
    }

    pub fn validate(&self) -> Result<()> {
        check_positive("sigma", self.sigma)?;
        crate::error::check_finite("omega0", self.omega0)?;
        check_kappa(self.kappa)?;
        let k = self.kinematics;
        TargetKinematics::new(k.range, k.beta, k.light_speed)?;
        Ok(())
    }
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

/// `diag(4σ², 1/σ², 2/σ²)`
pub fn qfi_lambda_separable(sigma: f64) -> Result<DMatrix<f64>> {
    check_positive("sigma", sigma)?;
    let s2 = sigma * sigma;
    Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        4.0 * s2,
        1.0 / s2,
        2.0 / s2,
    ])))
}

/// `diag(4σ², 1/((1-κ²)σ²), (2-κ²)/((1-κ²)σ²))`
pub fn qfi_lambda_entangled(sigma: f64, kappa: f64) -> Result<DMatrix<f64>> {
    check_positive("sigma", sigma)?;
    check_kappa(kappa)?;
    let s2 = sigma * sigma;
    let k2 = kappa * kappa;
    let corr = 1.0 - k2;
    Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
        4.0 * s2,
        1.0 / (corr * s2),
        (2.0 - k2) / (corr * s2),
    ])))
}

/// SLDs for `(t̄, ω̄, σ)` in the three-vector basis (κ = 0) or the four-vector basis (κ > 0),
/// where the first basis vector is the state itself.
pub fn sld_lambda(sigma: f64, kappa: f64) -> Result<[HermitianOperator; 3]> {
    check_positive("sigma", sigma)?;
    check_kappa(kappa)?;
    let zero = Complex64::new(0.0, 0.0);
    let re = |x: f64| Complex64::new(x, 0.0);
    let im = |x: f64| Complex64::new(0.0, x);
    if kappa == 0.0 {
        let mut lt = CMatrix::from_element(3, 3, zero);
        lt[(0, 1)] = re(2.0 * sigma);
        lt[(1, 0)] = re(2.0 * sigma);
        let mut lw = CMatrix::from_element(3, 3, zero);
        lw[(0, 1)] = im(1.0 / sigma);
        lw[(1, 0)] = im(-1.0 / sigma);
        let mut ls = CMatrix::from_element(3, 3, zero);
        ls[(0, 2)] = re(std::f64::consts::SQRT_2 / sigma);
        ls[(2, 0)] = re(std::f64::consts::SQRT_2 / sigma);
        return Ok([
            HermitianOperator::new(lt)?,
            HermitianOperator::new(lw)?,
            HermitianOperator::new(ls)?,
        ]);
    }
    let minus = (1.0 - kappa).sqrt();
    let plus = (1.0 + kappa).sqrt();
    let a = sigma * std::f64::consts::SQRT_2;
    let b = 1.0 / (sigma * std::f64::consts::SQRT_2);
    let mut lt = CMatrix::from_element(4, 4, zero);
    lt[(0, 1)] = re(a * minus);
    lt[(1, 0)] = re(a * minus);
    lt[(0, 2)] = re(a * plus);
    lt[(2, 0)] = re(a * plus);
    let mut lw = CMatrix::from_element(4, 4, zero);
    lw[(0, 1)] = im(b / minus);
    lw[(1, 0)] = im(-b / minus);
    lw[(0, 2)] = im(b / plus);
    lw[(2, 0)] = im(-b / plus);
    let mut ls = CMatrix::from_element(4, 4, zero);
    let s = ((2.0 - kappa * kappa) / (1.0 - kappa * kappa)).sqrt() / sigma;
    ls[(0, 3)] = re(s);
    ls[(3, 0)] = re(s);
    Ok([
        HermitianOperator::new(lt)?,
        HermitianOperator::new(lw)?,
        HermitianOperator::new(ls)?,
    ])
}

/// `|e₁⟩⟨e₁|` in the basis used by [`sld_lambda`].
pub fn basis_state(kappa: f64) -> Result<DensityOperator> {
    check_kappa(kappa)?;
    let d = if kappa == 0.0 { 3 } else { 4 };
    let mut rho = CMatrix::zeros(d, d);
    rho[(0, 0)] = Complex64::new(1.0, 0.0);
    DensityOperator::new(rho, (1..=d).map(|i| format!("e{i}")).collect())
}

/// QFI and commutators obtained by feeding [`sld_lambda`] through the generic engine.
pub fn lambda_report(sigma: f64, kappa: f64) -> Result<QfiReport> {
    let slds = sld_lambda(sigma, kappa)?;
    let rho = basis_state(kappa)?;
    QfiReport::from_slds(rho.matrix(), &slds, names(&LAMBDA_NAMES))
}

/// `∂λ_k/∂μ_i` with rows `(x, β)` and columns `(t̄, ω̄, σ)`.
pub fn position_velocity_jacobian(problem: &SingleTargetProblem) -> Result<DMatrix<f64>> {
    problem.validate()?;
    let TargetKinematics {
        range: x,
        beta,
        light_speed: c,
    } = problem.kinematics;
    let q = 1.0 - beta;
    Ok(DMatrix::from_row_slice(
        2,
        3,
        &[
            2.0 / (c * q),
            0.0,
            0.0,
            2.0 * x / (c * q * q),
            -2.0 * problem.omega0 / (q * q),
            -2.0 * problem.sigma / (q * q),
        ],
    ))
}

/// QFI matrix over `(x, β)` by reparameterising the closed-form `J(λ)`.
pub fn qfi_position_velocity(problem: &SingleTargetProblem) -> Result<DMatrix<f64>> {
    Ok(position_velocity_report(problem)?.qfi_matrix)
}

/// Full `(x, β)` report: reparameterised QFI and commutator expectations.
pub fn position_velocity_report(problem: &SingleTargetProblem) -> Result<QfiReport> {
    let jac = position_velocity_jacobian(problem)?;
    let closed = QfiReport::new(
        names(&LAMBDA_NAMES),
        qfi_lambda_entangled(problem.sigma, problem.kappa)?,
        closed_lambda_commutators(),
    )?;
    reparameterize(&closed, &jac, names(&MU_NAMES))
}

/// `L_x`, `L_β` as linear combinations of the λ-SLDs.
pub fn sld_position_velocity(problem: &SingleTargetProblem) -> Result<[HermitianOperator; 2]> {
    let jac = position_velocity_jacobian(problem)?;
    let slds = sld_lambda(problem.sigma, problem.kappa)?;
    let row = |i: usize| [jac[(i, 0)], jac[(i, 1)], jac[(i, 2)]];
    Ok([
        HermitianOperator::linear_combination(&row(0), &slds)?,
        HermitianOperator::linear_combination(&row(1), &slds)?,
    ])
}

fn closed_lambda_commutators() -> DMatrix<f64> {
    let mut m = DMatrix::zeros(3, 3);
    m[(0, 1)] = -4.0;
    m[(1, 0)] = 4.0;
    m
}

/// Closed-form imaginary parts of `⟨[L_i, L_j]⟩` over `λ` and over `μ`.
#[derive(Debug, Clone, PartialEq)]
pub struct CommutatorReport {
    pub lambda_im: DMatrix<f64>,
    pub mu_im: DMatrix<f64>,
}

impl CommutatorReport {
    pub fn t_omega(&self) -> Complex64 {
        Complex64::new(0.0, self.lambda_im[(0, 1)])
    }

    pub fn x_beta(&self) -> Complex64 {
        Complex64::new(0.0, self.mu_im[(0, 1)])
    }
}

/// `⟨[L_t̄, L_ω̄]⟩ = -4i` for every κ, vanishing `σ` pairs, and
/// `⟨[L_x, L_β]⟩ = 16 i ω̄₀ / (c (1-β)³)`.
pub fn commutator_report(problem: &SingleTargetProblem) -> Result<CommutatorReport> {
    problem.validate()?;
    let k = problem.kinematics;
    let q = 1.0 - k.beta;
    let xb = 16.0 * problem.omega0 / (k.light_speed * q * q * q);
    Ok(CommutatorReport {
        lambda_im: closed_lambda_commutators(),
        mu_im: DMatrix::from_row_slice(2, 2, &[0.0, xb, -xb, 0.0]),
    })
}

/// `J(t̄) J(ω̄) = 4 / (1 - κ²)`
pub fn arthurs_kelly_product(sigma: f64, kappa: f64) -> Result<f64> {
    check_positive("sigma", sigma)?;
    check_kappa(kappa)?;
    Ok(4.0 / (1.0 - kappa * kappa))
}

/// Quantum Cramér–Rao bound on `δt² δω²` per probe, `(1 - κ²)/4`.
pub fn time_frequency_bound_product(sigma: f64, kappa: f64) -> Result<f64> {
    arthurs_kelly_product(sigma, kappa).map(|p| 1.0 / p)
}

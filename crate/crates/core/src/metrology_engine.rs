//! Symmetric logarithmic derivatives and quantum Fisher information on finite-dimensional
//! representations, plus a brute-force oracle that builds those representations numerically.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix, HermitianEigen};

/// Eigenvalue pair sums at or below this are treated as the kernel of ρ.
pub const DEFAULT_EIG_CUTOFF: f64 = 1e-12;
/// Dimensionless saturability threshold on `|Tr(ρ[L_i, L_j])| · sqrt(J⁻¹_ii J⁻¹_jj)`.
pub const SATURABILITY_THRESHOLD: f64 = 1e-3;

const HERMITIAN_TOL: f64 = 1e-12;
const TRACE_TOL: f64 = 1e-10;
const EIGEN_FLOOR: f64 = -1e-10;
const TRACELESS_TOL: f64 = 1e-10;

fn relative_hermitian_check(what: &'static str, m: &CMatrix) -> Result<()> {
    let scale = m.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
    let deviation = linalg::hermitian_deviation(m);
    if deviation > HERMITIAN_TOL * scale {
        return Err(Error::NotHermitian { what, deviation });
    }
    Ok(())
}

/// A density matrix in some orthonormal basis, with its spectral decomposition cached.
#[derive(Debug, Clone)]
pub struct DensityOperator {
    matrix: CMatrix,
    basis_labels: Vec<String>,
    eigen: HermitianEigen,
}

impl DensityOperator {
    pub fn new(matrix: CMatrix, basis_labels: Vec<String>) -> Result<Self> {
        let d = matrix.nrows();
        if matrix.ncols() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: matrix.ncols(),
            });
        }
        if basis_labels.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: basis_labels.len(),
            });
        }
        relative_hermitian_check("density operator", &matrix)?;
        let tr = linalg::trace(&matrix).re;
        if (tr - 1.0).abs() > TRACE_TOL {
            return Err(Error::InvalidTrace(tr));
        }
        let eigen = linalg::hermitian_eigen(&matrix)?;
        if let Some(&lowest) = eigen.values.last() {
            if lowest < EIGEN_FLOOR {
                return Err(Error::NegativeEigenvalue(lowest));
            }
        }
        Ok(Self {
            matrix,
            basis_labels,
            eigen,
        })
    }

    /// `|ψ⟩⟨ψ|` for a normalised coordinate vector.
    pub fn pure(state: &DVector<Complex64>, basis_labels: Vec<String>) -> Result<Self> {
        Self::new(state * state.adjoint(), basis_labels)
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn basis_labels(&self) -> &[String] {
        &self.basis_labels
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigen.values
    }

    pub fn eigenvectors(&self) -> &CMatrix {
        &self.eigen.vectors
    }
}

/// Hermitian operator (SLDs and state derivatives).
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianOperator {
    matrix: CMatrix,
}

impl HermitianOperator {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        if matrix.ncols() != matrix.nrows() {
            return Err(Error::DimensionMismatch {
                expected: matrix.nrows(),
                got: matrix.ncols(),
            });
        }
        relative_hermitian_check("operator", &matrix)?;
        Ok(Self { matrix })
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn scale(&self, factor: f64) -> Self {
        Self {
            matrix: self.matrix.scale(factor),
        }
    }

    /// `Σ_k coeffs[k] * ops[k]`
    pub fn linear_combination(coeffs: &[f64], ops: &[HermitianOperator]) -> Result<Self> {
        let first = ops.first().ok_or(Error::DimensionMismatch {
            expected: 1,
            got: 0,
        })?;
        if coeffs.len() != ops.len() {
            return Err(Error::DimensionMismatch {
                expected: ops.len(),
                got: coeffs.len(),
            });
        }
        let d = first.dim();
        let mut acc = CMatrix::zeros(d, d);
        for (c, op) in coeffs.iter().zip(ops) {
            if op.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: op.dim(),
                });
            }
            acc += op.matrix.scale(*c);
        }
        Ok(Self { matrix: acc })
    }
}

/// QFI matrix together with the pairwise SLD commutator expectations.
#[derive(Debug, Clone, PartialEq)]
pub struct QfiReport {
    pub parameter_names: Vec<String>,
    pub qfi_matrix: DMatrix<f64>,
    /// Imaginary parts of `Tr(ρ[L_i, L_j])`; the real parts vanish identically.
    pub commutator_im: DMatrix<f64>,
    saturable: Vec<bool>,
}

impl QfiReport {
    /// Assembles a report and derives the saturability flags.
    pub fn new(
        parameter_names: Vec<String>,
        qfi_matrix: DMatrix<f64>,
        commutator_im: DMatrix<f64>,
    ) -> Result<Self> {
        let k = parameter_names.len();
        for m in [&qfi_matrix, &commutator_im] {
            if m.nrows() != k || m.ncols() != k {
                return Err(Error::DimensionMismatch {
                    expected: k,
                    got: m.nrows(),
                });
            }
        }
        let inverse = qfi_matrix.clone().try_inverse();
        let mut saturable = vec![false; k * k];
        for i in 0..k {
            for j in 0..k {
                let c = commutator_im[(i, j)].abs();
                saturable[i * k + j] = if i == j {
                    true
                } else {
                    match &inverse {
                        Some(inv) if inv[(i, i)] > 0.0 && inv[(j, j)] > 0.0 => {
                            c * (inv[(i, i)] * inv[(j, j)]).sqrt() < SATURABILITY_THRESHOLD
                        }
                        _ => c < SATURABILITY_THRESHOLD,
                    }
                };
            }
        }
        Ok(Self {
            parameter_names,
            qfi_matrix,
            commutator_im,
            saturable,
        })
    }

    /// `J_ij = ½ Tr(ρ {L_i, L_j})` and `Tr(ρ [L_i, L_j])` from explicit SLDs.
    pub fn from_slds(
        rho: &CMatrix,
        slds: &[HermitianOperator],
        parameter_names: Vec<String>,
    ) -> Result<Self> {
        let k = slds.len();
        if parameter_names.len() != k {
            return Err(Error::DimensionMismatch {
                expected: k,
                got: parameter_names.len(),
            });
        }
        let mut qfi = DMatrix::zeros(k, k);
        let mut comm = DMatrix::zeros(k, k);
        for i in 0..k {
            for j in i..k {
                let anti = anticommutator_trace(rho, &slds[i], &slds[j])?;
                qfi[(i, j)] = 0.5 * anti;
                qfi[(j, i)] = 0.5 * anti;
                if i != j {
                    let c = commutator_trace(rho, &slds[i], &slds[j])?;
                    comm[(i, j)] = c.im;
                    comm[(j, i)] = -c.im;
                }
            }
        }
        Self::new(parameter_names, qfi, comm)
    }

    pub fn len(&self) -> usize {
        self.parameter_names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parameter_names.is_empty()
    }

    pub fn commutator(&self, i: usize, j: usize) -> Complex64 {
        Complex64::new(0.0, self.commutator_im[(i, j)])
    }

    pub fn is_saturable(&self, i: usize, j: usize) -> bool {
        self.saturable[i * self.len() + j]
    }

    /// Quantum Cramér–Rao covariance bound `J⁻¹ / N`.
    pub fn covariance_bound(&self, probes: usize) -> Option<DMatrix<f64>> {
        self.qfi_matrix
            .clone()
            .try_inverse()
            .map(|inv| inv / probes.max(1) as f64)
    }
}

fn check_same_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

/// SLD from the spectral formula, restricted to eigenvalue pairs with `p_n + p_m > eig_cutoff`.
pub fn sld_from_state(
    rho: &DensityOperator,
    drho: &HermitianOperator,
    eig_cutoff: f64,
) -> Result<HermitianOperator> {
    check_same_dim(rho.dim(), drho.dim())?;
    let scale = drho.matrix.norm().max(1.0);
    let tr = linalg::trace(&drho.matrix);
    if tr.norm() > TRACELESS_TOL * scale {
        return Err(Error::NotTraceless(tr.norm()));
    }
    let v = rho.eigenvectors();
    let p = rho.eigenvalues();
    let rotated = v.adjoint() * drho.matrix() * v;
    let d = rho.dim();
    let mut any = false;
    let l_eig = CMatrix::from_fn(d, d, |m, n| {
        let denom = p[m] + p[n];
        if denom > eig_cutoff {
            any = true;
            rotated[(m, n)] * (2.0 / denom)
        } else {
            Complex64::new(0.0, 0.0)
        }
    });
    if !any {
        return Err(Error::DegenerateFamily(eig_cutoff));
    }
    let l = v * l_eig * v.adjoint();
    Ok(HermitianOperator {
        matrix: linalg::hermitize(&l),
    })
}

/// `Tr(ρ [L_i, L_j])`, purely imaginary for Hermitian arguments.
pub fn commutator_trace(rho: &CMatrix, li: &HermitianOperator, lj: &HermitianOperator) -> Result<Complex64> {
    check_same_dim(rho.nrows(), li.dim())?;
    check_same_dim(rho.nrows(), lj.dim())?;
    let t = linalg::trace(&(rho * li.matrix() * lj.matrix()));
    Ok(Complex64::new(0.0, 2.0 * t.im))
}

/// `Tr(ρ {L_i, L_j})`, real for Hermitian arguments.
pub fn anticommutator_trace(rho: &CMatrix, li: &HermitianOperator, lj: &HermitianOperator) -> Result<f64> {
    check_same_dim(rho.nrows(), li.dim())?;
    check_same_dim(rho.nrows(), lj.dim())?;
    let t = linalg::trace(&(rho * li.matrix() * lj.matrix()));
    Ok(2.0 * t.re)
}

/// QFI report for a state and its parameter derivatives.
pub fn qfi_matrix(
    rho: &DensityOperator,
    derivatives: &[HermitianOperator],
    parameter_names: Vec<String>,
) -> Result<QfiReport> {
    let slds = derivatives
        .iter()
        .map(|d| sld_from_state(rho, d, DEFAULT_EIG_CUTOFF))
        .collect::<Result<Vec<_>>>()?;
    QfiReport::from_slds(rho.matrix(), &slds, parameter_names)
}

/// Change of parameters: `J(μ) = Jac · J(λ) · Jacᵀ`, `Jac[i][k] = ∂λ_k/∂μ_i`.
///
/// Commutator expectations transform with the same bilinear form.
pub fn reparameterize(
    report: &QfiReport,
    jacobian: &DMatrix<f64>,
    parameter_names: Vec<String>,
) -> Result<QfiReport> {
    check_same_dim(report.len(), jacobian.ncols())?;
    check_same_dim(jacobian.nrows(), parameter_names.len())?;
    if jacobian.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "jacobian",
            value: f64::NAN,
            reason: "entries must be finite",
        });
    }
    let qfi = jacobian * &report.qfi_matrix * jacobian.transpose();
    let qfi = (&qfi + qfi.transpose()) * 0.5;
    let comm = jacobian * &report.commutator_im * jacobian.transpose();
    let comm = (&comm - comm.transpose()) * 0.5;
    QfiReport::new(parameter_names, qfi, comm)
}

/// Weighted mixture of sampled pure states: `ρ = Σ_j weights[j] |v_j⟩⟨v_j|`.
///
/// The vectors use the quadrature-weighted sampling of [`crate::quadrature::QuadratureGrid::sample`],
/// so a plain Hermitian dot product is the continuum inner product.
#[derive(Debug, Clone)]
pub struct Mixture {
    pub weights: Vec<f64>,
    pub vectors: Vec<DVector<Complex64>>,
}

/// Closed-form QFI matrix and commutator expectations for a family.
#[derive(Debug, Clone)]
pub struct ClosedForm {
    pub qfi_matrix: DMatrix<f64>,
    pub commutator_im: DMatrix<f64>,
}

/// A parameterised family of states `λ ↦ ρ(λ)` sampled on a fixed quadrature grid.
pub trait StateFamily: Send + Sync {
    fn name(&self) -> &str;
    fn parameter_names(&self) -> Vec<String>;
    /// Parameter point the family was configured around.
    fn nominal(&self) -> Vec<f64>;
    fn mixture(&self, params: &[f64]) -> Result<Mixture>;
    /// Analytic QFI and commutators, when known.
    fn closed_form(&self, _params: &[f64]) -> Option<Result<ClosedForm>> {
        None
    }
}

#[derive(Debug, Clone, Copy)]
pub struct OracleOptions {
    /// Relative step: `h_k = step * max(1, |λ_k|)`.
    pub step: f64,
    /// Gram–Schmidt residual below which a candidate direction is treated as dependent.
    pub rank_tolerance: f64,
    pub max_condition: f64,
    pub eig_cutoff: f64,
    /// Richardson-extrapolate the central differences with steps `h` and `h/2`.
    pub richardson: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        Self {
            step: 1e-4,
            rank_tolerance: 1e-6,
            max_condition: 1e12,
            eig_cutoff: DEFAULT_EIG_CUTOFF,
            richardson: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OracleOutput {
    pub report: QfiReport,
    pub state: DensityOperator,
    pub slds: Vec<HermitianOperator>,
    pub basis_dim: usize,
    pub gram_condition: f64,
}

/// A family's state at one parameter point, expressed in an orthonormal basis of the span of
/// its components and their finite-difference derivatives.
#[derive(Debug, Clone)]
pub struct SpannedState {
    pub state: DensityOperator,
    /// Basis vectors as columns, in the family's sampled coordinates.
    pub basis: CMatrix,
    pub gram_condition: f64,
    pub candidates: usize,
}

/// Orthonormal basis of the span of the given vectors, with the condition number of the
/// normalised Gram matrix of the accepted candidates.
pub fn orthonormal_span(
    candidates: &[DVector<Complex64>],
    rank_tolerance: f64,
) -> Result<(Vec<DVector<Complex64>>, f64)> {
    let (basis, accepted) = linalg::gram_schmidt(candidates, rank_tolerance);
    let normalised: Vec<_> = accepted
        .iter()
        .map(|&i| candidates[i].unscale(candidates[i].norm()))
        .collect();
    let n = normalised.len();
    let gram = CMatrix::from_fn(n, n, |i, j| normalised[i].dotc(&normalised[j]));
    let eig = linalg::hermitian_eigen(&gram)?;
    let condition = match (eig.values.first(), eig.values.last()) {
        (Some(&hi), Some(&lo)) if lo > 0.0 => hi / lo,
        (Some(_), Some(_)) => f64::INFINITY,
        _ => 1.0,
    };
    Ok((basis, condition))
}

fn normalised(mixture: Mixture) -> Result<Mixture> {
    if mixture.weights.len() != mixture.vectors.len() || mixture.vectors.is_empty() {
        return Err(Error::DimensionMismatch {
            expected: mixture.weights.len(),
            got: mixture.vectors.len(),
        });
    }
    let vectors = mixture
        .vectors
        .into_iter()
        .map(|v| {
            let n = v.norm();
            v.unscale(n)
        })
        .collect();
    Ok(Mixture {
        weights: mixture.weights,
        vectors,
    })
}

fn project(mixture: &Mixture, basis: &CMatrix) -> CMatrix {
    let d = basis.ncols();
    let mut rho = CMatrix::zeros(d, d);
    for (w, v) in mixture.weights.iter().zip(&mixture.vectors) {
        let c = basis.adjoint() * v;
        rho += (&c * c.adjoint()).scale(*w);
    }
    rho
}

struct Differences {
    base: Mixture,
    steps: Vec<f64>,
    full: Vec<(Mixture, Mixture)>,
    half: Vec<Option<(Mixture, Mixture)>>,
}

fn differences(family: &dyn StateFamily, params: &[f64], options: &OracleOptions) -> Result<Differences> {
    check_same_dim(family.parameter_names().len(), params.len())?;
    if !(options.step > 0.0 && options.step.is_finite()) {
        return Err(Error::InvalidParameter {
            name: "step",
            value: options.step,
            reason: "must be finite and > 0",
        });
    }
    let base = normalised(family.mixture(params)?)?;
    let steps: Vec<f64> = params.iter().map(|x| options.step * x.abs().max(1.0)).collect();
    let shifted = |k: usize, delta: f64| -> Result<Mixture> {
        let mut p = params.to_vec();
        p[k] += delta;
        normalised(family.mixture(&p)?)
    };
    let mut full = Vec::with_capacity(params.len());
    let mut half = Vec::with_capacity(params.len());
    for (k, &h) in steps.iter().enumerate() {
        full.push((shifted(k, h)?, shifted(k, -h)?));
        half.push(if options.richardson {
            Some((shifted(k, 0.5 * h)?, shifted(k, -0.5 * h)?))
        } else {
            None
        });
    }
    Ok(Differences {
        base,
        steps,
        full,
        half,
    })
}

fn span_of(diff: &Differences, options: &OracleOptions) -> Result<SpannedState> {
    let mut candidates = diff.base.vectors.clone();
    for (k, (plus, minus)) in diff.full.iter().enumerate() {
        for (vp, vm) in plus.vectors.iter().zip(&minus.vectors) {
            candidates.push((vp - vm).unscale(2.0 * diff.steps[k]));
        }
    }
    let (basis_vectors, condition) = orthonormal_span(&candidates, options.rank_tolerance)?;
    if condition > options.max_condition {
        return Err(Error::IllConditioned {
            condition,
            rank: basis_vectors.len(),
            candidates: candidates.len(),
        });
    }
    let basis = CMatrix::from_columns(&basis_vectors);
    let labels: Vec<String> = (1..=basis.ncols()).map(|i| format!("e{i}")).collect();
    let state = DensityOperator::new(linalg::hermitize(&project(&diff.base, &basis)), labels)?;
    Ok(SpannedState {
        state,
        basis,
        gram_condition: condition,
        candidates: candidates.len(),
    })
}

/// Represents `ρ(λ)` in the orthonormalised span used by [`oracle_qfi`].
pub fn spanned_state(family: &dyn StateFamily, params: &[f64], options: &OracleOptions) -> Result<SpannedState> {
    span_of(&differences(family, params, options)?, options)
}

/// Brute-force QFI: orthonormalise the span of the family's states and their finite-difference
/// derivatives, express `ρ(λ ± h e_k)` in that basis, difference centrally and apply the
/// spectral SLD formula. Inner products come from quadrature only.
pub fn oracle_qfi(family: &dyn StateFamily, params: &[f64], options: &OracleOptions) -> Result<OracleOutput> {
    let diff = differences(family, params, options)?;
    let span = span_of(&diff, options)?;
    let basis = &span.basis;
    let mut derivatives = Vec::with_capacity(params.len());
    for (k, (plus, minus)) in diff.full.iter().enumerate() {
        let h = diff.steps[k];
        let mut drho = (project(plus, basis) - project(minus, basis)).unscale(2.0 * h);
        if let Some((hp, hm)) = &diff.half[k] {
            let fine = (project(hp, basis) - project(hm, basis)).unscale(h);
            drho = (fine.scale(4.0) - drho).unscale(3.0);
        }
        derivatives.push(HermitianOperator::new(linalg::hermitize(&drho))?);
    }
    let slds = derivatives
        .iter()
        .map(|dr| sld_from_state(&span.state, dr, options.eig_cutoff))
        .collect::<Result<Vec<_>>>()?;
    let report = QfiReport::from_slds(span.state.matrix(), &slds, family.parameter_names())?;
    Ok(OracleOutput {
        report,
        basis_dim: basis.ncols(),
        gram_condition: span.gram_condition,
        state: span.state,
        slds,
    })
}

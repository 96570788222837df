//! Concrete parameterised state families and a name-keyed registry for them.
//!
//! Every family samples its wave functions on a quadrature grid fixed at construction, so
//! states at different parameter points share one finite vector space.

use indexmap::IndexMap;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{check_finite, check_positive, Error, Result};
use crate::gaussian_optics::{
    check_kappa, time_amplitude, two_photon_amplitude, GaussianPulse, TwoPhotonState,
};
use crate::metrology_engine::{ClosedForm, Mixture, StateFamily};
use crate::quadrature::{QuadratureGrid, DEFAULT_ORDER};
use crate::single_target;
use crate::two_target::{self, TwoTargetQfiInputs};

/// Parameters a family is built around.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FamilySettings {
    pub sigma: f64,
    pub kappa: f64,
    pub central_time: f64,
    pub central_frequency: f64,
    pub delta_time: f64,
    pub delta_frequency: f64,
    pub quadrature_order: usize,
}

impl Default for FamilySettings {
    fn default() -> Self {
        Self {
            sigma: 1.0,
            kappa: 0.0,
            central_time: 0.0,
            central_frequency: 0.0,
            delta_time: 0.1,
            delta_frequency: 0.2,
            quadrature_order: DEFAULT_ORDER,
        }
    }
}

impl FamilySettings {
    fn validate(&self) -> Result<()> {
        check_positive("sigma", self.sigma)?;
        check_kappa(self.kappa)?;
        check_finite("t_centroid", self.central_time)?;
        check_finite("omega_centroid", self.central_frequency)?;
        check_finite("dt", self.delta_time)?;
        check_finite("domega", self.delta_frequency)?;
        Ok(())
    }
}

fn names(list: &[&str]) -> Vec<String> {
    list.iter().map(|s| s.to_string()).collect()
}

fn check_len(params: &[f64], expected: usize) -> Result<()> {
    if params.len() != expected {
        return Err(Error::DimensionMismatch {
            expected,
            got: params.len(),
        });
    }
    Ok(())
}

fn pure(vector: DVector<Complex64>) -> Mixture {
    Mixture {
        weights: vec![1.0],
        vectors: vec![vector],
    }
}

fn scalar(qfi: f64) -> ClosedForm {
    ClosedForm {
        qfi_matrix: DMatrix::from_element(1, 1, qfi),
        commutator_im: DMatrix::zeros(1, 1),
    }
}

/// Single pulse, unknown central time.
pub struct TimeShiftFamily {
    pulse: GaussianPulse,
    grid: QuadratureGrid,
}

impl TimeShiftFamily {
    pub fn new(settings: &FamilySettings) -> Result<Self> {
        settings.validate()?;
        let pulse = GaussianPulse::new(settings.central_time, settings.central_frequency, settings.sigma)?;
        let grid = QuadratureGrid::gaussian_1d(pulse.central_time, pulse.bandwidth, settings.quadrature_order)?;
        Ok(Self { pulse, grid })
    }
}

impl StateFamily for TimeShiftFamily {
    fn name(&self) -> &str {
        "time-shift"
    }
    fn parameter_names(&self) -> Vec<String> {
        names(&["t_bar"])
    }
    fn nominal(&self) -> Vec<f64> {
        vec![self.pulse.central_time]
    }
    fn mixture(&self, params: &[f64]) -> Result<Mixture> {
        check_len(params, 1)?;
        let p = GaussianPulse {
            central_time: params[0],
            ..self.pulse
        };
        Ok(pure(self.grid.sample(|[t, _]| time_amplitude(&p, t))))
    }
    fn closed_form(&self, params: &[f64]) -> Option<Result<ClosedForm>> {
        Some(check_len(params, 1).map(|_| scalar(4.0 * self.pulse.bandwidth.powi(2))))
    }
}

/// Single pulse, unknown central frequency.
pub struct FrequencyShiftFamily {
    pulse: GaussianPulse,
    grid: QuadratureGrid,
}

impl FrequencyShiftFamily {
    pub fn new(settings: &FamilySettings) -> Result<Self> {
        settings.validate()?;
        let pulse = GaussianPulse::new(settings.central_time, settings.central_frequency, settings.sigma)?;
        let grid = QuadratureGrid::gaussian_1d(pulse.central_time, pulse.bandwidth, settings.quadrature_order)?;
        Ok(Self { pulse, grid })
    }
}

impl StateFamily for FrequencyShiftFamily {
    fn name(&self) -> &str {
        "frequency-shift"
    }
    fn parameter_names(&self) -> Vec<String> {
        names(&["omega_bar"])
    }
    fn nominal(&self) -> Vec<f64> {
        vec![self.pulse.central_frequency]
    }
    fn mixture(&self, params: &[f64]) -> Result<Mixture> {
        check_len(params, 1)?;
        let p = GaussianPulse {
            central_frequency: params[0],
            ..self.pulse
        };
        Ok(pure(self.grid.sample(|[t, _]| time_amplitude(&p, t))))
    }
    fn closed_form(&self, params: &[f64]) -> Option<Result<ClosedForm>> {
        Some(check_len(params, 1).map(|_| scalar(1.0 / self.pulse.bandwidth.powi(2))))
    }
}

fn lambda_closed_form(sigma: f64, kappa: f64) -> Result<ClosedForm> {
    let mut comm = DMatrix::zeros(3, 3);
    comm[(0, 1)] = -4.0;
    comm[(1, 0)] = 4.0;
    Ok(ClosedForm {
        qfi_matrix: single_target::qfi_lambda_entangled(sigma, kappa)?,
        commutator_im: comm,
    })
}

/// Single pulse, unknown `(t̄, ω̄, σ)`.
pub struct SingleSeparableFamily {
    pulse: GaussianPulse,
    grid: QuadratureGrid,
}

impl SingleSeparableFamily {
    pub fn new(settings: &FamilySettings) -> Result<Self> {
        settings.validate()?;
        let pulse = GaussianPulse::new(settings.central_time, settings.central_frequency, settings.sigma)?;
        let grid = QuadratureGrid::gaussian_1d(pulse.central_time, pulse.bandwidth, settings.quadrature_order)?;
        Ok(Self { pulse, grid })
    }
}

impl StateFamily for SingleSeparableFamily {
    fn name(&self) -> &str {
        "single-separable"
    }
    fn parameter_names(&self) -> Vec<String> {
        names(&single_target::LAMBDA_NAMES)
    }
    fn nominal(&self) -> Vec<f64> {
        vec![self.pulse.central_time, self.pulse.central_frequency, self.pulse.bandwidth]
    }
    fn mixture(&self, params: &[f64]) -> Result<Mixture> {
        check_len(params, 3)?;
        let p = GaussianPulse::new(params[0], params[1], params[2])?;
        Ok(pure(self.grid.sample(|[t, _]| time_amplitude(&p, t))))
    }
    fn closed_form(&self, params: &[f64]) -> Option<Result<ClosedForm>> {
        Some(check_len(params, 3).and_then(|_| lambda_closed_form(params[2], 0.0)))
    }
}

/// Signal of an entangled pair with unknown `(t̄, ω̄, σ)`; the idler stays at the nominal
/// `(t̄, 0, σ)`.
pub struct SingleEntangledFamily {
    state: TwoPhotonState,
    grid: QuadratureGrid,
}

impl SingleEntangledFamily {
    pub fn new(settings: &FamilySettings) -> Result<Self> {
        settings.validate()?;
        let signal = GaussianPulse::new(settings.central_time, settings.central_frequency, settings.sigma)?;
        let state = TwoPhotonState::with_matched_idler(signal, settings.kappa)?;
        let grid = QuadratureGrid::gaussian_2d(
            [signal.central_time, state.idler.central_time],
            signal.bandwidth,
            state.idler.bandwidth,
            state.kappa,
            settings.quadrature_order,
        )?;
        Ok(Self { state, grid })
    }
}

impl StateFamily for SingleEntangledFamily {
    fn name(&self) -> &str {
        "single-entangled"
    }
    fn parameter_names(&self) -> Vec<String> {
        names(&single_target::LAMBDA_NAMES)
    }
    fn nominal(&self) -> Vec<f64> {
        let s = self.state.signal;
        vec![s.central_time, s.central_frequency, s.bandwidth]
    }
    fn mixture(&self, params: &[f64]) -> Result<Mixture> {
        check_len(params, 3)?;
        let st = TwoPhotonState {
            signal: GaussianPulse::new(params[0], params[1], params[2])?,
            ..self.state
        };
        Ok(pure(self.grid.sample(|[t, ti]| two_photon_amplitude(&st, t, ti))))
    }
    fn closed_form(&self, params: &[f64]) -> Option<Result<ClosedForm>> {
        Some(check_len(params, 3).and_then(|_| lambda_closed_form(params[2], self.state.kappa)))
    }
}

/// Equal-weight mixture of the returns from two targets, unknown `(Δt, Δω)` at fixed centroids.
///
/// The separable variant reflects single pulses; the entangled variant reflects the signals
/// of pairs sharing one idler centred at `(T, 0)`.
pub struct TwoTargetFamily {
    settings: FamilySettings,
    entangled: bool,
    grid: QuadratureGrid,
}

impl TwoTargetFamily {
    pub fn separable(settings: &FamilySettings) -> Result<Self> {
        settings.validate()?;
        let grid = QuadratureGrid::gaussian_1d(settings.central_time, settings.sigma, settings.quadrature_order)?;
        Ok(Self {
            settings: FamilySettings {
                kappa: 0.0,
                ..*settings
            },
            entangled: false,
            grid,
        })
    }

    pub fn entangled(settings: &FamilySettings) -> Result<Self> {
        settings.validate()?;
        let grid = QuadratureGrid::gaussian_2d(
            [settings.central_time, settings.central_time],
            settings.sigma,
            settings.sigma,
            settings.kappa,
            settings.quadrature_order,
        )?;
        Ok(Self {
            settings: *settings,
            entangled: true,
            grid,
        })
    }

    pub fn kappa(&self) -> f64 {
        self.settings.kappa
    }

    fn scene(&self, params: &[f64]) -> Result<crate::gaussian_optics::TwoTargetScene> {
        check_len(params, 2)?;
        let s = &self.settings;
        crate::gaussian_optics::TwoTargetScene::new(
            s.central_time,
            s.central_frequency,
            params[0],
            params[1],
            s.sigma,
            s.kappa,
        )
    }

    /// Sampled returns `(ψ₁, ψ₂)` at the given `(Δt, Δω)`.
    pub fn returns(&self, params: &[f64]) -> Result<(DVector<Complex64>, DVector<Complex64>)> {
        let scene = self.scene(params)?;
        if self.entangled {
            let (a, b) = scene.entangled_returns()?;
            Ok((
                self.grid.sample(|[t, ti]| two_photon_amplitude(&a, t, ti)),
                self.grid.sample(|[t, ti]| two_photon_amplitude(&b, t, ti)),
            ))
        } else {
            let (a, b) = scene.returns()?;
            Ok((
                self.grid.sample(|[t, _]| time_amplitude(&a, t)),
                self.grid.sample(|[t, _]| time_amplitude(&b, t)),
            ))
        }
    }
}

impl StateFamily for TwoTargetFamily {
    fn name(&self) -> &str {
        if self.entangled {
            "two-target-entangled"
        } else {
            "two-target-separable"
        }
    }
    fn parameter_names(&self) -> Vec<String> {
        names(&two_target::PARAMETER_NAMES)
    }
    fn nominal(&self) -> Vec<f64> {
        vec![self.settings.delta_time, self.settings.delta_frequency]
    }
    fn mixture(&self, params: &[f64]) -> Result<Mixture> {
        let (a, b) = self.returns(params)?;
        Ok(Mixture {
            weights: vec![0.5, 0.5],
            vectors: vec![a, b],
        })
    }
    fn closed_form(&self, params: &[f64]) -> Option<Result<ClosedForm>> {
        let run = || -> Result<ClosedForm> {
            check_len(params, 2)?;
            let inputs = TwoTargetQfiInputs::new(self.settings.sigma, self.settings.kappa, params[0], params[1])?;
            let c = two_target::commutator_trace_two(&inputs)?.im;
            Ok(ClosedForm {
                qfi_matrix: two_target::qfi_two(&inputs)?,
                commutator_im: DMatrix::from_row_slice(2, 2, &[0.0, c, -c, 0.0]),
            })
        };
        Some(run())
    }
}

pub type FamilyBuilder = fn(&FamilySettings) -> Result<Box<dyn StateFamily>>;

/// Name-keyed constructors for [`StateFamily`] implementations, in registration order.
#[derive(Clone)]
pub struct FamilyRegistry {
    builders: IndexMap<String, FamilyBuilder>,
}

impl Default for FamilyRegistry {
    fn default() -> Self {
        let mut r = Self::empty();
        r.register("time-shift", |s| Ok(Box::new(TimeShiftFamily::new(s)?)));
        r.register("frequency-shift", |s| Ok(Box::new(FrequencyShiftFamily::new(s)?)));
        r.register("single-separable", |s| Ok(Box::new(SingleSeparableFamily::new(s)?)));
        r.register("single-entangled", |s| Ok(Box::new(SingleEntangledFamily::new(s)?)));
        r.register("two-target-separable", |s| Ok(Box::new(TwoTargetFamily::separable(s)?)));
        r.register("two-target-entangled", |s| Ok(Box::new(TwoTargetFamily::entangled(s)?)));
        r
    }
}

impl FamilyRegistry {
    pub fn empty() -> Self {
        Self {
            builders: IndexMap::new(),
        }
    }

    /// Adds or replaces a builder.
    pub fn register(&mut self, name: &str, builder: FamilyBuilder) {
        self.builders.insert(name.to_string(), builder);
    }

    pub fn build(&self, name: &str, settings: &FamilySettings) -> Result<Box<dyn StateFamily>> {
        let builder = self
            .builders
            .get(name)
            .ok_or_else(|| Error::UnknownStrategy(name.to_string()))?;
        builder(settings)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.builders.keys().map(String::as_str)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrology_engine::{oracle_qfi, OracleOptions};

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1e-300)
    }

    #[test]
    fn registry_lists_and_builds() {
        let reg = FamilyRegistry::default();
        let names: Vec<_> = reg.names().collect();
        assert_eq!(names.len(), 6);
        for name in names {
            let fam = reg.build(name, &FamilySettings::default()).unwrap();
            assert_eq!(fam.name(), name);
            assert_eq!(fam.nominal().len(), fam.parameter_names().len());
        }
        assert!(matches!(
            reg.build("no-such-family", &FamilySettings::default()),
            Err(Error::UnknownStrategy(_))
        ));
    }

    #[test]
    fn time_shift_oracle() {
        let fam = TimeShiftFamily::new(&FamilySettings::default()).unwrap();
        let out = oracle_qfi(&fam, &fam.nominal(), &OracleOptions::default()).unwrap();
        assert!(rel(out.report.qfi_matrix[(0, 0)], 4.0) < 1e-6);
    }

    #[test]
    fn frequency_shift_oracle() {
        let fam = FrequencyShiftFamily::new(&FamilySettings {
            sigma: 2.0,
            ..Default::default()
        })
        .unwrap();
        let out = oracle_qfi(&fam, &fam.nominal(), &OracleOptions::default()).unwrap();
        assert!(rel(out.report.qfi_matrix[(0, 0)], 0.25) < 1e-6);
    }

    #[test]
    fn entangled_frequency_oracle() {
        let fam = SingleEntangledFamily::new(&FamilySettings {
            kappa: 0.8,
            ..Default::default()
        })
        .unwrap();
        let out = oracle_qfi(&fam, &fam.nominal(), &OracleOptions::default()).unwrap();
        assert_eq!(out.basis_dim, 4);
        assert!((out.report.qfi_matrix[(1, 1)] - 1.0 / 0.36).abs() < 1e-5);
    }

    #[test]
    fn separable_oracle_reproduces_closed_form_slds() {
        let fam = SingleSeparableFamily::new(&FamilySettings {
            central_frequency: 3.0,
            ..Default::default()
        })
        .unwrap();
        let out = oracle_qfi(&fam, &fam.nominal(), &OracleOptions::default()).unwrap();
        assert_eq!(out.basis_dim, 3);
        let lt = out.slds[0].matrix();
        assert!((lt[(0, 1)].norm() - 2.0).abs() < 1e-6);
        for (i, j) in [(0, 0), (0, 2), (1, 1), (1, 2), (2, 2)] {
            assert!(lt[(i, j)].norm() < 1e-6, "({i},{j}) = {}", lt[(i, j)]);
        }
        let q = &out.report.qfi_matrix;
        let closed = single_target::qfi_lambda_separable(1.0).unwrap();
        assert!((q - &closed).abs().max() < 1e-6 * 4.0);
        assert!((out.report.commutator_im[(0, 1)] + 4.0).abs() < 1e-6);
    }

    #[test]
    fn span_ranks_and_orthonormal_bases() {
        let reg = FamilyRegistry::default();
        let settings = FamilySettings {
            kappa: 0.5,
            central_frequency: 2.0,
            ..Default::default()
        };
        let expected = [
            ("time-shift", 2),
            ("frequency-shift", 2),
            ("single-separable", 3),
            ("single-entangled", 4),
            ("two-target-separable", 4),
            ("two-target-entangled", 6),
        ];
        for (name, rank) in expected {
            let fam = reg.build(name, &settings).unwrap();
            let span = crate::metrology_engine::spanned_state(fam.as_ref(), &fam.nominal(), &OracleOptions::default()).unwrap();
            assert_eq!(span.basis.ncols(), rank, "{name}");
            let gram = span.basis.adjoint() * &span.basis;
            let dev = (gram - crate::linalg::CMatrix::identity(rank, rank)).map(|z| z.norm()).max();
            assert!(dev < 1e-8, "{name}: {dev}");
        }
    }
}

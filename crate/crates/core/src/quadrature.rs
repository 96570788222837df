//! Gauss–Hermite quadrature, mapped onto Gaussian envelopes in one and two dimensions.

use nalgebra::DVector;
use num_complex::Complex64;

use crate::error::{check_positive, Error, Result};

/// Default number of nodes per axis.
pub const DEFAULT_ORDER: usize = 80;

/// Gauss–Hermite rule for the weight `exp(-x^2)`.
///
/// `scaled_weights[i] = weights[i] * exp(nodes[i]^2)`, which is what mapped rules need when the
/// Gaussian factor is carried by the integrand itself.
#[derive(Debug, Clone)]
pub struct GaussHermite {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
    pub scaled_weights: Vec<f64>,
}

impl GaussHermite {
    /// Nodes from Newton iteration on the orthonormal Hermite recurrence.
    pub fn new(order: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::InvalidParameter {
                name: "quadrature_order",
                value: 0.0,
                reason: "must be >= 1",
            });
        }
        let n = order;
        let pi_m4 = std::f64::consts::PI.powf(-0.25);
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let half = n.div_ceil(2);
        let mut z = 0.0_f64;
        for i in 0..half {
            z = match i {
                0 => (2.0 * n as f64 + 1.0).sqrt() - 1.85575 * (2.0 * n as f64 + 1.0).powf(-0.16667),
                1 => z - 1.14 * (n as f64).powf(0.426) / z,
                2 => 1.86 * z - 0.86 * nodes[0],
                3 => 1.91 * z - 0.91 * nodes[1],
                _ => 2.0 * z - nodes[i - 2],
            };
            let mut deriv = 0.0;
            for _ in 0..200 {
                let (p, dp) = hermite_orthonormal(n, z, pi_m4);
                deriv = dp;
                let step = p / dp;
                z -= step;
                if step.abs() <= 1e-15 * z.abs().max(1.0) {
                    break;
                }
            }
            let (_, dp) = hermite_orthonormal(n, z, pi_m4);
            if dp.is_finite() {
                deriv = dp;
            }
            nodes[i] = z;
            nodes[n - 1 - i] = -z;
            let w = 2.0 / (deriv * deriv);
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        // ascending order
        nodes.reverse();
        weights.reverse();
        let scaled_weights = nodes
            .iter()
            .zip(&weights)
            .map(|(x, w)| w * (x * x).exp())
            .collect();
        Ok(Self {
            nodes,
            weights,
            scaled_weights,
        })
    }

    /// `∫ exp(-x^2) f(x) dx`
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).sum()
    }
}

/// Returns `(p_n(z), p_n'(z))` for the orthonormal Hermite polynomials.
fn hermite_orthonormal(n: usize, z: f64, pi_m4: f64) -> (f64, f64) {
    let mut p1 = pi_m4;
    let mut p2 = 0.0;
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
    }
    (p1, (2.0 * n as f64).sqrt() * p2)
}

/// Quadrature nodes in one or two variables, with weights absorbing the change of variables.
///
/// An integral `∫ f` is approximated by `Σ_k weights[k] * f(points[k])`; `f` must carry its
/// own Gaussian decay.
#[derive(Debug, Clone)]
pub struct QuadratureGrid {
    pub dim: usize,
    pub points: Vec<[f64; 2]>,
    pub weights: Vec<f64>,
}

impl QuadratureGrid {
    /// Grid matched to a density `∝ exp(-2 σ² (t - center)²)`.
    pub fn gaussian_1d(center: f64, sigma: f64, order: usize) -> Result<Self> {
        check_positive("sigma", sigma)?;
        let rule = GaussHermite::new(order)?;
        let scale = 1.0 / (sigma * std::f64::consts::SQRT_2);
        let points = rule.nodes.iter().map(|x| [center + scale * x, 0.0]).collect();
        let weights = rule.scaled_weights.iter().map(|w| scale * w).collect();
        Ok(Self {
            dim: 1,
            points,
            weights,
        })
    }

    /// Tensor grid matched to a correlated density
    /// `∝ exp(-2 [σ² u² + σ_i² v² - 2κ σ σ_i u v])` with `(u, v) = (t, t_i) - center`.
    ///
    /// The map `(u, v) = M z` comes from the Cholesky factor of the quadratic form, so the
    /// envelope becomes `exp(-|z|²)` exactly.
    pub fn gaussian_2d(
        center: [f64; 2],
        sigma: f64,
        sigma_idler: f64,
        kappa: f64,
        order: usize,
    ) -> Result<Self> {
        check_positive("sigma", sigma)?;
        check_positive("sigma_idler", sigma_idler)?;
        if kappa.is_nan() || kappa.abs() >= 1.0 {
            return Err(Error::InvalidParameter {
                name: "kappa",
                value: kappa,
                reason: "must satisfy |kappa| < 1",
            });
        }
        let rule = GaussHermite::new(order)?;
        let a = 2.0 * sigma * sigma;
        let b = -2.0 * kappa * sigma * sigma_idler;
        let d = 2.0 * sigma_idler * sigma_idler;
        let r11 = a.sqrt();
        let r12 = b / r11;
        let r22 = (d - r12 * r12).sqrt();
        // M = R^{-1}
        let m11 = 1.0 / r11;
        let m12 = -r12 / (r11 * r22);
        let m22 = 1.0 / r22;
        let jacobian = m11 * m22;

        let n = rule.nodes.len();
        let mut points = Vec::with_capacity(n * n);
        let mut weights = Vec::with_capacity(n * n);
        for (i, &zi) in rule.nodes.iter().enumerate() {
            for (j, &zj) in rule.nodes.iter().enumerate() {
                points.push([center[0] + m11 * zi + m12 * zj, center[1] + m22 * zj]);
                weights.push(jacobian * rule.scaled_weights[i] * rule.scaled_weights[j]);
            }
        }
        Ok(Self {
            dim: 2,
            points,
            weights,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn integrate(&self, f: impl Fn([f64; 2]) -> Complex64) -> Complex64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&p, &w)| f(p) * w)
            .sum()
    }

    /// Samples `f` as a vector whose plain Hermitian dot product is the quadrature inner product.
    pub fn sample(&self, f: impl Fn([f64; 2]) -> Complex64) -> DVector<Complex64> {
        DVector::from_iterator(
            self.len(),
            self.points
                .iter()
                .zip(&self.weights)
                .map(|(&p, &w)| f(p) * w.sqrt()),
        )
    }
}

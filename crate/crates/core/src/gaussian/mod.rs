//! Returned probe states: the Gaussian biphoton, single-photon Gaussians and
//! their mixtures.
//!
//! States are stored by their parameters only. Every quantity the QFI engines
//! need (overlaps, derivative overlaps, second moments) has a closed form, so
//! sampled grids appear only in the quadrature cross-checks.

mod ensemble;
mod packet;

use std::f64::consts::PI;

use nalgebra::Matrix2;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use ensemble::{Branch, GaussianEnsemble, MixedPoint, Param, ProbeModel, TraceConvention};
pub use packet::{Coordinate, Envelope, Packet, Poly, Superposition};

use crate::error::{domain, Error, Result};
use crate::kinematics::{check_kappa, ReturnParams};

/// Derivative of a state along one parameter: a polynomial prefactor on the
/// state's own envelope.
pub type DerivativeState<const D: usize> = Packet<D>;

/// Returned two-photon state with joint temporal amplitude
/// `√(2√(1−κ²)σ₁σ₂/π) e^{−iω̄₁x₁} e^{−iω̄₂x₂} e^{−(σ₁²x₁² + σ₂²x₂² − 2κσ₁σ₂x₁x₂)}`,
/// `xᵢ = tᵢ − t̄ᵢ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianBiphoton {
    pub t1_bar: f64,
    pub t2_bar: f64,
    pub omega1_bar: f64,
    pub omega2_bar: f64,
    pub sigma1: f64,
    pub sigma2: f64,
    pub kappa: f64,
}

impl GaussianBiphoton {
    pub fn new(
        t1_bar: f64,
        t2_bar: f64,
        omega1_bar: f64,
        omega2_bar: f64,
        sigma1: f64,
        sigma2: f64,
        kappa: f64,
    ) -> Result<Self> {
        let s = Self { t1_bar, t2_bar, omega1_bar, omega2_bar, sigma1, sigma2, kappa };
        s.validate()?;
        Ok(s)
    }

    pub fn from_return(params: &ReturnParams, kappa: f64) -> Result<Self> {
        Self::new(params.t1, params.t2, params.omega1, params.omega2, params.sigma1, params.sigma2, kappa)
    }

    pub fn validate(&self) -> Result<()> {
        self.envelope().validate()
    }

    pub fn envelope(&self) -> Envelope<2> {
        Envelope {
            center: [self.t1_bar, self.t2_bar],
            carrier: [self.omega1_bar, self.omega2_bar],
            sigma: [self.sigma1, self.sigma2],
            kappa: self.kappa,
        }
    }

    pub fn packet(&self) -> Packet<2> {
        Packet::plain(self.envelope())
    }

    /// Peak modulus `√(2√(1−κ²)σ₁σ₂/π)`.
    pub fn peak_modulus(&self) -> f64 {
        (2.0 * (1.0 - self.kappa * self.kappa).sqrt() * self.sigma1 * self.sigma2 / PI).sqrt()
    }

    /// Same state with κ = 0: two independent photons with known assignment.
    pub fn uncorrelated(&self) -> Self {
        Self { kappa: 0.0, ..*self }
    }

    /// The single-photon marginal factors; exact only when κ = 0.
    pub fn factors(&self) -> [GaussianSinglePhoton; 2] {
        [
            GaussianSinglePhoton { t_bar: self.t1_bar, omega_bar: self.omega1_bar, sigma: self.sigma1 },
            GaussianSinglePhoton { t_bar: self.t2_bar, omega_bar: self.omega2_bar, sigma: self.sigma2 },
        ]
    }

    /// Covariance of the arrival times under `|φ|²`: `(4A)⁻¹`.
    pub fn time_covariance(&self) -> Matrix2<f64> {
        let (s1, s2, k) = (self.sigma1, self.sigma2, self.kappa);
        let scale = 1.0 / (4.0 * s1 * s1 * s2 * s2 * (1.0 - k * k));
        Matrix2::new(s2 * s2, k * s1 * s2, k * s1 * s2, s1 * s1) * scale
    }

    /// Covariance of the two photon frequencies under the spectral intensity: `A`.
    pub fn frequency_covariance(&self) -> Matrix2<f64> {
        self.envelope().quad()
    }
}

/// Returned single photon `(2σ²/π)^{1/4} e^{−(t−t̄)²σ²} e^{−iω̄(t−t̄)}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianSinglePhoton {
    pub t_bar: f64,
    pub omega_bar: f64,
    pub sigma: f64,
}

impl GaussianSinglePhoton {
    pub fn new(t_bar: f64, omega_bar: f64, sigma: f64) -> Result<Self> {
        let s = Self { t_bar, omega_bar, sigma };
        s.envelope().validate()?;
        Ok(s)
    }

    pub fn envelope(&self) -> Envelope<1> {
        Envelope { center: [self.t_bar], carrier: [self.omega_bar], sigma: [self.sigma], kappa: 0.0 }
    }

    pub fn packet(&self) -> Packet<1> {
        Packet::plain(self.envelope())
    }

    pub fn peak_modulus(&self) -> f64 {
        (2.0 * self.sigma * self.sigma / PI).powf(0.25)
    }
}

pub fn biphoton_amplitude(state: &GaussianBiphoton, t1: f64, t2: f64) -> Complex64 {
    state.packet().eval(&[t1, t2])
}

pub fn single_amplitude(state: &GaussianSinglePhoton, t: f64) -> Complex64 {
    state.packet().eval(&[t])
}

/// `⟨a|b⟩` for two single-photon Gaussians.
pub fn overlap_single(a: &GaussianSinglePhoton, b: &GaussianSinglePhoton) -> Complex64 {
    a.packet().overlap(&b.packet())
}

/// Modulus of the single-photon overlap in closed form,
/// `√(2σ₁σ₂/(σ₁²+σ₂²)) exp(−(ω̄₋² + 4t̄₋²σ₁²σ₂²)/(4(σ₁²+σ₂²)))`.
pub fn overlap_single_modulus(sigma1: f64, sigma2: f64, t_minus: f64, omega_minus: f64) -> f64 {
    let ss = sigma1 * sigma1 + sigma2 * sigma2;
    (2.0 * sigma1 * sigma2 / ss).sqrt()
        * (-(omega_minus * omega_minus + 4.0 * t_minus * t_minus * sigma1 * sigma1 * sigma2 * sigma2) / (4.0 * ss))
            .exp()
}

/// `⟨a|b⟩` for two biphotons.
pub fn overlap_biphoton(a: &GaussianBiphoton, b: &GaussianBiphoton) -> Result<Complex64> {
    a.validate()?;
    b.validate()?;
    let v = a.packet().overlap(&b.packet());
    if !(v.re.is_finite() && v.im.is_finite()) {
        return Err(Error::Numeric("biphoton overlap is not finite".into()));
    }
    Ok(v)
}

/// Analytic `∂φ/∂λ` of a biphoton, photon `p` belonging to target `p`.
pub fn derivative(state: &GaussianBiphoton, param: Param) -> Result<DerivativeState<2>> {
    state.validate()?;
    let branch = Branch { weight: 1.0, envelope: state.envelope(), roles: [Some(0), Some(1)] };
    branch.derivative(param)
}

/// Analytic derivative of a lone photon assigned to target 0.
pub fn derivative_single(state: &GaussianSinglePhoton, param: Param) -> Result<DerivativeState<1>> {
    if param.touches_target(1) {
        return Err(Error::Unsupported(format!("{param:?} needs a second photon")));
    }
    let branch = Branch { weight: 1.0, envelope: state.envelope(), roles: [Some(0)] };
    branch.derivative(param)
}

/// `check_kappa` re-exported for the modules that build states.
pub(crate) fn validate_kappa(k: f64) -> Result<()> {
    check_kappa(k)
}

pub(crate) fn require_positive(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return domain(format!("{name} must be positive, got {v}"));
    }
    Ok(())
}

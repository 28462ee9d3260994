//! Emission, reflection and return of a probe photon, plus the inversions
//! that map measured sum/difference statistics back to scenario quantities.
//!
//! Sign convention: a positive radial velocity means the target recedes from
//! the radar. The reflected carrier is `ω₀ (c − v)/(c + v)`, so a receding
//! target red-shifts the return. Every inversion below is derived from this
//! exact Doppler factor; first-order forms are offered separately and are only
//! accurate for `|v| ≪ c`.

use nalgebra::SMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// Physical constants. Only the speed of light enters the model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhysicalConstants {
    pub c: f64,
}

impl PhysicalConstants {
    pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

    pub fn si() -> Self {
        Self { c: Self::SPEED_OF_LIGHT }
    }

    /// Natural units, `c = 1`.
    pub fn natural() -> Self {
        Self { c: 1.0 }
    }

    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return domain(format!("speed of light must be positive, got {c}"));
        }
        Ok(Self { c })
    }

    fn check_velocity(&self, v: f64) -> Result<()> {
        if !(v.abs() < self.c) {
            return domain(format!("|v| must be below c = {}, got v = {v}", self.c));
        }
        Ok(())
    }

    /// `(c − v)/(c + v)`.
    pub fn doppler_factor(&self, v: f64) -> Result<f64> {
        self.check_velocity(v)?;
        Ok((self.c - v) / (self.c + v))
    }
}

impl Default for PhysicalConstants {
    fn default() -> Self {
        Self::si()
    }
}

/// A point scatterer: range at the reference time and radial velocity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Target {
    pub r: f64,
    pub v: f64,
}

impl Target {
    pub fn new(r: f64, v: f64) -> Self {
        Self { r, v }
    }

    pub fn validate(&self, consts: &PhysicalConstants) -> Result<()> {
        if !(self.r >= 0.0) {
            return domain(format!("target range must be non-negative, got {}", self.r));
        }
        consts.check_velocity(self.v)
    }

    /// `Γ = v/c`.
    pub fn gamma(&self, consts: &PhysicalConstants) -> f64 {
        self.v / consts.c
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    EntangledBiphoton,
    TwoSinglePhotons,
    QuantumIllumination,
}

impl Strategy {
    pub const ALL: [Strategy; 3] =
        [Strategy::EntangledBiphoton, Strategy::TwoSinglePhotons, Strategy::QuantumIllumination];

    pub fn name(&self) -> &'static str {
        match self {
            Strategy::EntangledBiphoton => "entangled",
            Strategy::TwoSinglePhotons => "single_photon",
            Strategy::QuantumIllumination => "quantum_illumination",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "entangled" | "entangled_biphoton" => Some(Strategy::EntangledBiphoton),
            "single_photon" | "single" | "two_single_photons" => Some(Strategy::TwoSinglePhotons),
            "quantum_illumination" | "qi" => Some(Strategy::QuantumIllumination),
            _ => None,
        }
    }
}

/// Which pair of combined parameters is estimated jointly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParameterPair {
    /// `(t̄₊, ω̄₋)`: central position and relative velocity of two bodies.
    TimeSumFreqDiff,
    /// `(t̄₋, ω̄₊)`: size and velocity of one extended object.
    TimeDiffFreqSum,
}

impl ParameterPair {
    pub const ALL: [ParameterPair; 2] = [ParameterPair::TimeSumFreqDiff, ParameterPair::TimeDiffFreqSum];

    pub fn name(&self) -> &'static str {
        match self {
            ParameterPair::TimeSumFreqDiff => "A",
            ParameterPair::TimeDiffFreqSum => "B",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        match s {
            "A" | "a" | "time_sum_freq_diff" => Some(ParameterPair::TimeSumFreqDiff),
            "B" | "b" | "time_diff_freq_sum" => Some(ParameterPair::TimeDiffFreqSum),
            _ => None,
        }
    }
}

/// Emitted probe description.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProbeConfig {
    /// Carrier angular frequency ω₀ (rad/s).
    pub omega0: f64,
    /// Bandwidth σ₀ (rad/s).
    pub sigma0: f64,
    /// Time correlation κ ∈ (−1, 1).
    pub kappa: f64,
    pub strategy: Strategy,
}

impl ProbeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.omega0 > 0.0) {
            return domain(format!("carrier frequency must be positive, got {}", self.omega0));
        }
        if !(self.sigma0 > 0.0) {
            return domain(format!("bandwidth must be positive, got {}", self.sigma0));
        }
        check_kappa(self.kappa)
    }
}

pub(crate) fn check_kappa(kappa: f64) -> Result<()> {
    if !(kappa > -1.0 && kappa < 1.0) {
        return domain(format!("kappa must lie in (-1, 1), got {kappa}"));
    }
    Ok(())
}

/// Returned-photon parameters for the two photons.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReturnParams {
    pub t1: f64,
    pub t2: f64,
    pub omega1: f64,
    pub omega2: f64,
    pub sigma1: f64,
    pub sigma2: f64,
}

impl ReturnParams {
    pub fn sum_diff(&self) -> SumDiffParams {
        SumDiffParams {
            t_plus: self.t1 + self.t2,
            t_minus: self.t2 - self.t1,
            omega_plus: self.omega1 + self.omega2,
            omega_minus: self.omega2 - self.omega1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SumDiffParams {
    pub t_plus: f64,
    pub t_minus: f64,
    pub omega_plus: f64,
    pub omega_minus: f64,
}

impl SumDiffParams {
    /// Inverse of [`ReturnParams::sum_diff`]; bandwidths are carried through.
    pub fn to_return_params(&self, sigma1: f64, sigma2: f64) -> ReturnParams {
        ReturnParams {
            t1: (self.t_plus - self.t_minus) / 2.0,
            t2: (self.t_plus + self.t_minus) / 2.0,
            omega1: (self.omega_plus - self.omega_minus) / 2.0,
            omega2: (self.omega_plus + self.omega_minus) / 2.0,
            sigma1,
            sigma2,
        }
    }
}

/// How to invert frequency shifts into velocities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VelocityMode {
    /// Linearised Doppler relation, valid for `|v| ≪ c`.
    FirstOrder,
    /// Exact inversion of the `(c − v)/(c + v)` factor photon by photon.
    ExactPairwise,
}

/// Returned carrier `ω₀ (c − v)/(c + v)`.
pub fn doppler_frequency(omega0: f64, v: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(omega0 > 0.0) {
        return domain(format!("carrier frequency must be positive, got {omega0}"));
    }
    Ok(omega0 * consts.doppler_factor(v)?)
}

/// Returned bandwidth; scales by the same factor as the carrier.
pub fn doppler_bandwidth(sigma0: f64, v: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(sigma0 > 0.0) {
        return domain(format!("bandwidth must be positive, got {sigma0}"));
    }
    Ok(sigma0 * consts.doppler_factor(v)?)
}

/// Arrival time of a photon emitted at `t_emit` towards a target that is at
/// range `r` at time zero and recedes at `v`.
pub fn round_trip_time(t_emit: f64, r: f64, v: f64, consts: &PhysicalConstants) -> Result<f64> {
    consts.check_velocity(v)?;
    if !(r + v * t_emit > 0.0) {
        return domain(format!("target must be in front of the radar at emission (r + v t = {})", r + v * t_emit));
    }
    let c = consts.c;
    Ok(t_emit + 2.0 * r / (c - v) + 2.0 * v * t_emit / (c - v))
}

/// Centre delay, carrier and bandwidth of the photon returned by one target.
pub fn return_single(target: &Target, probe: &ProbeConfig, consts: &PhysicalConstants) -> Result<(f64, f64, f64)> {
    target.validate(consts)?;
    let t = 2.0 * target.r / (consts.c - target.v);
    let omega = doppler_frequency(probe.omega0, target.v, consts)?;
    let sigma = doppler_bandwidth(probe.sigma0, target.v, consts)?;
    Ok((t, omega, sigma))
}

pub fn return_params(
    target_a: &Target,
    target_b: &Target,
    probe: &ProbeConfig,
    consts: &PhysicalConstants,
) -> Result<ReturnParams> {
    probe.validate()?;
    let (t1, omega1, sigma1) = return_single(target_a, probe, consts)?;
    let (t2, omega2, sigma2) = return_single(target_b, probe, consts)?;
    Ok(ReturnParams { t1, t2, omega1, omega2, sigma1, sigma2 })
}

/// Midpoint of two collinear targets from the summed delay, `c t̄₊ / 4`.
///
/// The textbook expression `c (t̄₁ + t̄₂)/2` evaluates to `r₁ + r₂`, twice the
/// midpoint; it is available through [`central_position_sum`].
pub fn central_position(t_plus: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(t_plus > 0.0) {
        return domain(format!("summed delay must be positive, got {t_plus}"));
    }
    Ok(consts.c * t_plus / 4.0)
}

/// Literal `c t̄₊ / 2`, i.e. the sum of the two ranges.
pub fn central_position_sum(t_plus: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(t_plus > 0.0) {
        return domain(format!("summed delay must be positive, got {t_plus}"));
    }
    Ok(consts.c * t_plus / 2.0)
}

/// Velocity of a single target from its returned carrier (exact inversion).
pub fn velocity_from_frequency(omega: f64, omega0: f64, consts: &PhysicalConstants) -> Result<f64> {
    if !(omega > 0.0) || !(omega0 > 0.0) {
        return domain(format!("frequencies must be positive, got ω = {omega}, ω₀ = {omega0}"));
    }
    Ok(consts.c * (omega0 - omega) / (omega0 + omega))
}

/// Relative velocity `v₂ − v₁`.
///
/// `FirstOrder` uses `Δv = −c ω̄₋ / (2 ω₀)`, the linearisation of the exact
/// Doppler factor; `omega_pair` is ignored. `ExactPairwise` inverts each
/// returned carrier in `omega_pair = (ω̄₁, ω̄₂)` and ignores `omega_minus`.
pub fn relative_velocity(
    omega_minus: f64,
    omega0: f64,
    consts: &PhysicalConstants,
    mode: VelocityMode,
    omega_pair: Option<(f64, f64)>,
) -> Result<f64> {
    if !(omega0 > 0.0) {
        return domain(format!("carrier frequency must be positive, got {omega0}"));
    }
    match mode {
        VelocityMode::FirstOrder => Ok(-consts.c * omega_minus / (2.0 * omega0)),
        VelocityMode::ExactPairwise => {
            let (w1, w2) = omega_pair
                .ok_or_else(|| crate::Error::Domain("exact pairwise inversion needs both returned carriers".into()))?;
            let v1 = velocity_from_frequency(w1, omega0, consts)?;
            let v2 = velocity_from_frequency(w2, omega0, consts)?;
            Ok(v2 - v1)
        }
    }
}

/// Separation of two scatterers on one object, `c t̄₋ / 2` (signed).
pub fn object_size(t_minus: f64, consts: &PhysicalConstants) -> f64 {
    consts.c * t_minus / 2.0
}

/// Separation corrected for the object's own velocity, `(c − v) t̄₋ / 2`.
pub fn object_size_moving(t_minus: f64, v: f64, consts: &PhysicalConstants) -> Result<f64> {
    consts.check_velocity(v)?;
    Ok((consts.c - v) * t_minus / 2.0)
}

/// Object velocity from the summed carriers of two photons that hit the same
/// rigid object.
///
/// `ExactPairwise` inverts the Doppler factor with `ω̄ = ω̄₊/2`:
/// `v = c (2ω₀ − ω̄₊)/(2ω₀ + ω̄₊)`. `FirstOrder` is its linearisation
/// `c (2ω₀ − ω̄₊)/(4ω₀)`.
pub fn object_velocity(omega_plus: f64, omega0: f64, consts: &PhysicalConstants, mode: VelocityMode) -> Result<f64> {
    if !(omega0 > 0.0) {
        return domain(format!("carrier frequency must be positive, got {omega0}"));
    }
    if !(omega_plus > 0.0) {
        return domain(format!("summed carrier must be positive, got {omega_plus}"));
    }
    let c = consts.c;
    Ok(match mode {
        VelocityMode::ExactPairwise => c * (2.0 * omega0 - omega_plus) / (2.0 * omega0 + omega_plus),
        VelocityMode::FirstOrder => c * (2.0 * omega0 - omega_plus) / (4.0 * omega0),
    })
}

/// Rows `(t̄, ω̄, σ)`, columns `(r, Γ)` with `Γ = v/c`.
pub type ParamJacobian = SMatrix<f64, 3, 2>;

/// Exact derivatives of the returned delay, carrier and bandwidth with
/// respect to range and reduced velocity.
pub fn jacobian_params(
    r: f64,
    gamma: f64,
    omega0: f64,
    sigma0: f64,
    consts: &PhysicalConstants,
) -> Result<ParamJacobian> {
    if !(gamma.abs() < 1.0) {
        return domain(format!("|Γ| must be below 1, got {gamma}"));
    }
    let c = consts.c;
    let one_minus = 1.0 - gamma;
    let one_plus_sq = (1.0 + gamma) * (1.0 + gamma);
    Ok(ParamJacobian::new(
        2.0 / (c * one_minus),
        2.0 * r / (c * one_minus * one_minus),
        0.0,
        -2.0 * omega0 / one_plus_sq,
        0.0,
        -2.0 * sigma0 / one_plus_sq,
    ))
}

/// `(t̄, ω̄, σ)` of a single target in `(r, Γ)` coordinates.
pub fn returned_triplet(r: f64, gamma: f64, omega0: f64, sigma0: f64, consts: &PhysicalConstants) -> Result<[f64; 3]> {
    if !(gamma.abs() < 1.0) {
        return domain(format!("|Γ| must be below 1, got {gamma}"));
    }
    let factor = (1.0 - gamma) / (1.0 + gamma);
    Ok([2.0 * r / (consts.c * (1.0 - gamma)), omega0 * factor, sigma0 * factor])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const NAT: PhysicalConstants = PhysicalConstants { c: 1.0 };

    #[test]
    fn doppler_examples() {
        let si = PhysicalConstants::si();
        assert_eq!(doppler_frequency(1.0, 0.0, &si).unwrap(), 1.0);
        assert_relative_eq!(doppler_frequency(1.0, si.c / 3.0, &si).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(doppler_frequency(2.0, -si.c / 3.0, &si).unwrap(), 4.0, epsilon = 1e-14);
        assert!(doppler_frequency(1.0, si.c, &si).is_err());
        assert!(doppler_frequency(1.0, -2.0 * si.c, &si).is_err());

        assert_eq!(doppler_bandwidth(1.0, 0.0, &si).unwrap(), 1.0);
        assert_relative_eq!(doppler_bandwidth(1.0, si.c / 3.0, &si).unwrap(), 0.5, epsilon = 1e-15);
        assert_relative_eq!(doppler_bandwidth(0.3, -si.c / 3.0, &si).unwrap(), 0.6, epsilon = 1e-15);
    }

    #[test]
    fn round_trip_examples() {
        assert_eq!(round_trip_time(0.0, 1.0, 0.0, &NAT).unwrap(), 2.0);
        assert_relative_eq!(round_trip_time(1.0, 1.0, 0.5, &NAT).unwrap(), 7.0, epsilon = 1e-14);
        assert_relative_eq!(round_trip_time(0.0, 3.0, -0.5, &NAT).unwrap(), 4.0, epsilon = 1e-14);
        assert!(round_trip_time(0.0, 1.0, 1.0, &NAT).is_err());
        // target already behind the radar at emission
        assert!(round_trip_time(2.0, 1.0, -0.6, &NAT).is_err());
    }

    #[test]
    fn return_params_examples() {
        let probe = ProbeConfig { omega0: 1.0, sigma0: 1.0, kappa: 0.0, strategy: Strategy::EntangledBiphoton };
        let p = return_params(&Target::new(1.0, 0.0), &Target::new(1.0, 0.0), &probe, &NAT).unwrap();
        assert_eq!((p.t1, p.t2, p.omega1, p.sigma2), (2.0, 2.0, 1.0, 1.0));

        let p = return_params(&Target::new(300.0, 0.0), &Target::new(500.0, 0.0), &probe, &NAT).unwrap();
        assert_eq!((p.t1, p.t2), (600.0, 1000.0));

        let p = return_params(&Target::new(1.0, 1.0 / 3.0), &Target::new(1.0, 0.0), &probe, &NAT).unwrap();
        assert_relative_eq!(p.t1, 3.0, epsilon = 1e-14);
        assert_relative_eq!(p.omega1, 0.5, epsilon = 1e-15);

        assert!(return_params(&Target::new(-1.0, 0.0), &Target::new(1.0, 0.0), &probe, &NAT).is_err());
    }

    #[test]
    fn central_position_examples() {
        assert_eq!(central_position(1600.0, &NAT).unwrap(), 400.0);
        assert_eq!(central_position(4.0, &NAT).unwrap(), 1.0);
        let si = PhysicalConstants::si();
        assert_eq!(central_position(4.0, &si).unwrap(), 299_792_458.0);
        assert_eq!(central_position_sum(1600.0, &NAT).unwrap(), 800.0);
        assert!(central_position(0.0, &NAT).is_err());
    }

    #[test]
    fn relative_velocity_examples() {
        let dv = relative_velocity(0.0, 3.0, &NAT, VelocityMode::ExactPairwise, Some((3.0, 3.0))).unwrap();
        assert_eq!(dv, 0.0);
        let dv = relative_velocity(0.0, 1.0, &NAT, VelocityMode::ExactPairwise, Some((1.0, 0.5))).unwrap();
        assert_relative_eq!(dv, 1.0 / 3.0, epsilon = 1e-15);
        let dv = relative_velocity(-2.0, 1000.0, &NAT, VelocityMode::FirstOrder, None).unwrap();
        assert_relative_eq!(dv, 0.001, epsilon = 1e-18);
        assert!(relative_velocity(0.0, 1.0, &NAT, VelocityMode::ExactPairwise, Some((0.0, 1.0))).is_err());
        assert!(relative_velocity(0.0, 1.0, &NAT, VelocityMode::ExactPairwise, None).is_err());
    }

    #[test]
    fn object_examples() {
        assert_eq!(object_size(0.0, &NAT), 0.0);
        assert_eq!(object_size(2.0, &NAT), 1.0);
        assert_relative_eq!(object_size(2e-9, &PhysicalConstants::si()), 0.299792458, epsilon = 1e-12);
        assert_relative_eq!(object_size_moving(3.0, 1.0 / 3.0, &NAT).unwrap(), 1.0, epsilon = 1e-15);

        assert_eq!(object_velocity(2.0, 1.0, &NAT, VelocityMode::ExactPairwise).unwrap(), 0.0);
        assert_relative_eq!(
            object_velocity(1.0, 1.0, &NAT, VelocityMode::ExactPairwise).unwrap(),
            1.0 / 3.0,
            epsilon = 1e-15
        );
        // linearisation agrees with the exact inversion to O(v²)
        let first = object_velocity(1.998, 1.0, &NAT, VelocityMode::FirstOrder).unwrap();
        let exact = object_velocity(1.998, 1.0, &NAT, VelocityMode::ExactPairwise).unwrap();
        assert_relative_eq!(first, 0.0005, epsilon = 1e-15);
        assert!((first - exact).abs() < 1e-6);
        assert!(object_velocity(0.0, 1.0, &NAT, VelocityMode::ExactPairwise).is_err());
    }

    #[test]
    fn jacobian_examples() {
        let j = jacobian_params(0.0, 0.0, 1.0, 1.0, &NAT).unwrap();
        assert_eq!(j[(0, 1)], 0.0);
        assert_eq!(j[(0, 0)], 2.0);
        let j = jacobian_params(1.0, 0.0, 1.0, 1.0, &NAT).unwrap();
        let expected = ParamJacobian::new(2.0, 2.0, 0.0, -2.0, 0.0, -2.0);
        assert_eq!(j, expected);
        let j = jacobian_params(5.0, 0.0, 7.0, 1.0, &NAT).unwrap();
        assert_eq!(j[(1, 1)], -14.0);
        assert!(jacobian_params(1.0, 1.0, 1.0, 1.0, &NAT).is_err());
    }

    #[test]
    fn jacobian_matches_central_differences() {
        let si = PhysicalConstants::si();
        for &(r, gamma, consts) in &[(1.0, 0.0, NAT), (3.5, 0.4, NAT), (2.0, -0.3, NAT), (1500.0, 1e-6, si)] {
            let (w0, s0) = (2.5, 0.7);
            let j = jacobian_params(r, gamma, w0, s0, &consts).unwrap();
            let hr = 1e-7 * r.abs().max(1.0);
            let hg = 1e-7;
            let fp = returned_triplet(r + hr, gamma, w0, s0, &consts).unwrap();
            let fm = returned_triplet(r - hr, gamma, w0, s0, &consts).unwrap();
            let gp = returned_triplet(r, gamma + hg, w0, s0, &consts).unwrap();
            let gm = returned_triplet(r, gamma - hg, w0, s0, &consts).unwrap();
            for row in 0..3 {
                let dr = (fp[row] - fm[row]) / (2.0 * hr);
                let dg = (gp[row] - gm[row]) / (2.0 * hg);
                assert_relative_eq!(j[(row, 0)], dr, epsilon = 1e-12, max_relative = 1e-6);
                assert_relative_eq!(j[(row, 1)], dg, epsilon = 1e-12, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn sum_diff_roundtrip() {
        let p = ReturnParams { t1: 1.25, t2: -3.5, omega1: 7.0, omega2: 2.0, sigma1: 1.0, sigma2: 2.0 };
        let back = p.sum_diff().to_return_params(1.0, 2.0);
        assert_eq!(p, back);
    }
}

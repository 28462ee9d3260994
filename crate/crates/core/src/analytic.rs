//! Closed-form QFI matrices, uncertainty-product bounds and symmetric
//! logarithmic derivatives for the three probe strategies.
//!
//! Mixed-state strategies have no trustworthy closed form away from the
//! orthogonal-branch limit. For them the literal appendix-style expressions are
//! evaluated next to the oracle and both values are returned.

use nalgebra::{DMatrix, Matrix2};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::gaussian::{MixedPoint, TraceConvention};
use crate::kinematics::{check_kappa, ParameterPair, Strategy};
use crate::oracle::{qfi_numeric, OracleSettings};

type C64 = Complex64;

/// Relative tolerance at which a printed expression counts as confirmed.
pub const CONFIRM_TOL: f64 = 1e-8;

/// 2×2 QFI matrix for one parameter pair, its bound and the SLD commutator.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QfiResult {
    pub strategy: Strategy,
    pub pair: ParameterPair,
    pub h: [[f64; 2]; 2],
    /// `min δa·δb = √((H⁻¹)₁₁(H⁻¹)₂₂)`.
    pub bound_product: f64,
    /// `|Tr ρ[L_a, L_b]|`.
    pub compat_residual: f64,
}

impl QfiResult {
    pub fn new(strategy: Strategy, pair: ParameterPair, h: [[f64; 2]; 2], compat_residual: f64) -> Self {
        Self { strategy, pair, h, bound_product: bound_product(&h), compat_residual }
    }

    pub fn diagonal(strategy: Strategy, pair: ParameterPair, h11: f64, h22: f64) -> Self {
        Self::new(strategy, pair, [[h11, 0.0], [0.0, h22]], 0.0)
    }

    pub fn matrix(&self) -> Matrix2<f64> {
        Matrix2::new(self.h[0][0], self.h[0][1], self.h[1][0], self.h[1][1])
    }

    /// Same result with the state's trace rescaled by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let h = self.h.map(|row| row.map(|v| v * factor));
        Self::new(self.strategy, self.pair, h, self.compat_residual * factor)
    }
}

/// `√((H⁻¹)₁₁(H⁻¹)₂₂) = √(H₁₁H₂₂)/det H`; infinite for a singular matrix.
pub fn bound_product(h: &[[f64; 2]; 2]) -> f64 {
    let det = h[0][0] * h[1][1] - h[0][1] * h[1][0];
    if det > 0.0 {
        (h[0][0] * h[1][1]).sqrt() / det
    } else {
        f64::INFINITY
    }
}

fn check_sigma(name: &str, s: f64) -> Result<()> {
    if !(s > 0.0 && s.is_finite()) {
        return domain(format!("{name} must be positive, got {s}"));
    }
    Ok(())
}

/// Entangled biphoton with bandwidths `sigma1`, `sigma2`. The estimated sum
/// and difference parameters are shifts generated by sums and differences of
/// the conjugate variables, so each diagonal entry is a variance of the pure
/// Gaussian state and the off-diagonal entries vanish.
pub fn qfi_entangled(sigma1: f64, sigma2: f64, kappa: f64, pair: ParameterPair) -> Result<QfiResult> {
    check_sigma("sigma1", sigma1)?;
    check_sigma("sigma2", sigma2)?;
    check_kappa(kappa)?;
    let s = match pair {
        ParameterPair::TimeSumFreqDiff => -1.0,
        ParameterPair::TimeDiffFreqSum => 1.0,
    };
    let spread = sigma1 * sigma1 + sigma2 * sigma2 + 2.0 * s * kappa * sigma1 * sigma2;
    let h22 = spread / (4.0 * (1.0 - kappa * kappa) * sigma1 * sigma1 * sigma2 * sigma2);
    Ok(QfiResult::diagonal(Strategy::EntangledBiphoton, pair, spread, h22))
}

/// `2√(1−κ²)σ₁σ₂/(σ₁² ∓ 2κσ₁σ₂ + σ₂²)`, the entangled bound at general bandwidths.
pub fn entangled_bound_general(sigma1: f64, sigma2: f64, kappa: f64, pair: ParameterPair) -> Result<f64> {
    Ok(qfi_entangled(sigma1, sigma2, kappa, pair)?.bound_product)
}

/// Strategy-level bound product at correlation `kappa`; mixed strategies are
/// taken in the orthogonal-branch limit.
pub fn bound_value(strategy: Strategy, pair: ParameterPair, kappa: f64) -> Result<f64> {
    check_kappa(kappa)?;
    Ok(match (strategy, pair) {
        (Strategy::EntangledBiphoton, ParameterPair::TimeSumFreqDiff) => ((1.0 + kappa) / (1.0 - kappa)).sqrt(),
        (Strategy::EntangledBiphoton, ParameterPair::TimeDiffFreqSum) => ((1.0 - kappa) / (1.0 + kappa)).sqrt(),
        (Strategy::TwoSinglePhotons, _) => 1.0,
        (Strategy::QuantumIllumination, _) => 2.0 * ((1.0 - kappa) * (1.0 + kappa)).sqrt(),
    })
}

/// `(κ, bound)` rows for a grid of correlations.
pub fn bound_curve(strategy: Strategy, pair: ParameterPair, kappas: &[f64]) -> Result<Vec<(f64, f64)>> {
    kappas.iter().map(|&k| Ok((k, bound_value(strategy, pair, k)?))).collect()
}

/// Orthogonal-branch QFI diagonal of a mixed strategy with equal bandwidths.
pub fn orthogonal_limit(strategy: Strategy, sigma: f64, kappa: f64, convention: TraceConvention) -> Result<[f64; 2]> {
    check_sigma("sigma", sigma)?;
    check_kappa(kappa)?;
    let s2 = sigma * sigma;
    let normalized = match strategy {
        Strategy::EntangledBiphoton => return Err(Error::Unsupported("the entangled probe is pure".into())),
        Strategy::TwoSinglePhotons => [s2, 1.0 / (4.0 * s2)],
        Strategy::QuantumIllumination => [s2, 1.0 / (4.0 * (1.0 - kappa * kappa) * s2)],
    };
    Ok(match convention {
        TraceConvention::Normalized => normalized,
        TraceConvention::PhotonCounted => normalized.map(|v| 2.0 * v),
    })
}

/// `num / (eˣ − 1)`; undefined when both vanish.
fn over_expm1(num: f64, x: f64) -> f64 {
    if x == 0.0 {
        return f64::NAN;
    }
    num / x.exp_m1()
}

/// The literal printed expressions for two single photons of equal bandwidth.
pub fn printed_single_photon(sigma: f64, t_minus: f64, omega_minus: f64, pair: ParameterPair) -> Result<[f64; 2]> {
    check_sigma("sigma", sigma)?;
    let (s2, t2, w2) = (sigma * sigma, t_minus * t_minus, omega_minus * omega_minus);
    Ok(match pair {
        ParameterPair::TimeSumFreqDiff => {
            let x = (w2 + 4.0 * t2 * s2 * s2) / (4.0 * s2);
            [2.0 * s2 - 2.0 * (-x).exp() * t2 * s2 * s2, 1.0 / (2.0 * s2) - over_expm1(t2 / 2.0, x)]
        }
        ParameterPair::TimeDiffFreqSum => {
            let x = (w2 + 4.0 * t2 * s2) / (4.0 * s2);
            [2.0 * s2 - over_expm1(w2 / 2.0, x), 1.0 / (2.0 * s2) - (-x).exp() * w2 / (2.0 * s2 * s2)]
        }
    })
}

/// The literal printed expressions for quantum illumination.
pub fn printed_illumination(
    sigma: f64,
    kappa: f64,
    t_minus: f64,
    omega_minus: f64,
    pair: ParameterPair,
) -> Result<[f64; 2]> {
    check_sigma("sigma", sigma)?;
    check_kappa(kappa)?;
    let (s2, t2, w2) = (sigma * sigma, t_minus * t_minus, omega_minus * omega_minus);
    let q = 1.0 - kappa * kappa;
    let spread = w2 + 4.0 * t2 * s2 * s2;
    Ok(match pair {
        ParameterPair::TimeSumFreqDiff => [
            2.0 * s2 - 2.0 * (-spread / (4.0 * s2)).exp() * t2 * s2 * s2,
            1.0 / (2.0 * q * s2) - over_expm1(t2 / 2.0, spread / (4.0 * q * s2)),
        ],
        ParameterPair::TimeDiffFreqSum => [
            2.0 * s2 - 2.0 * (-spread / (4.0 * s2)).exp() * w2 / 2.0,
            1.0 / (2.0 * q * s2) - (spread / (4.0 * q * s2)).exp() * w2 / (2.0 * s2 * s2),
        ],
    })
}

/// A mixed-strategy QFI evaluated both ways.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedQfi {
    pub point: MixedPoint,
    /// Diagonal from the printed expressions, photon-counted scale.
    pub printed: [f64; 2],
    /// Oracle result with one unit of trace per photon.
    pub oracle: QfiResult,
    /// Oracle result for the unit-trace state.
    pub normalized: QfiResult,
    /// `|printed − oracle| / |oracle|` per diagonal entry.
    pub rel_diff: [f64; 2],
    pub oracle_verified: bool,
}

fn mixed(strategy: Strategy, point: MixedPoint, pair: ParameterPair, printed: [f64; 2]) -> Result<MixedQfi> {
    let settings = OracleSettings::default();
    let (normalized, _) = qfi_numeric(strategy, &point, pair, TraceConvention::Normalized, &settings)?;
    let oracle = normalized.scaled(2.0);
    let rel_diff = [0, 1].map(|i| rel_diff(printed[i], oracle.h[i][i]));
    let oracle_verified = rel_diff.iter().all(|d| *d <= CONFIRM_TOL);
    Ok(MixedQfi { point, printed, oracle, normalized, rel_diff, oracle_verified })
}

/// `|a − b| / |b|`, infinite when `a` is not finite.
pub fn rel_diff(a: f64, b: f64) -> f64 {
    if !a.is_finite() {
        return f64::INFINITY;
    }
    let d = (a - b).abs();
    if b == 0.0 {
        d
    } else {
        d / b.abs()
    }
}

pub fn qfi_single_photon(sigma: f64, t_minus: f64, omega_minus: f64, pair: ParameterPair) -> Result<MixedQfi> {
    let point = MixedPoint { sigma, kappa: 0.0, t_minus, omega_minus };
    let printed = printed_single_photon(sigma, t_minus, omega_minus, pair)?;
    mixed(Strategy::TwoSinglePhotons, point, pair, printed)
}

pub fn qfi_quantum_illumination(
    sigma: f64,
    kappa: f64,
    t_minus: f64,
    omega_minus: f64,
    pair: ParameterPair,
) -> Result<MixedQfi> {
    let point = MixedPoint { sigma, kappa, t_minus, omega_minus };
    let printed = printed_illumination(sigma, kappa, t_minus, omega_minus, pair)?;
    mixed(Strategy::QuantumIllumination, point, pair, printed)
}

/// SLDs for one pair together with the state, all in one orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct SldPair {
    pub rho: DMatrix<C64>,
    pub a: DMatrix<C64>,
    pub b: DMatrix<C64>,
}

impl SldPair {
    pub fn dim(&self) -> usize {
        self.rho.nrows()
    }

    fn trace_with(&self, x: &DMatrix<C64>, y: &DMatrix<C64>) -> C64 {
        (&self.rho * x * y).trace()
    }

    /// `½ Tr ρ{L_i, L_j}`.
    pub fn qfi(&self) -> [[f64; 2]; 2] {
        let ls = [&self.a, &self.b];
        let mut h = [[0.0; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                h[i][j] = 0.5 * (self.trace_with(ls[i], ls[j]) + self.trace_with(ls[j], ls[i])).re;
            }
        }
        h
    }

    /// `|Tr ρ[L_a, L_b]|`.
    pub fn compat(&self) -> f64 {
        (self.trace_with(&self.a, &self.b) - self.trace_with(&self.b, &self.a)).norm()
    }

    /// `|Tr ρ L_a|`, `|Tr ρ L_b|`.
    pub fn means(&self) -> [f64; 2] {
        [(&self.rho * &self.a).trace().norm(), (&self.rho * &self.b).trace().norm()]
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        [&self.rho, &self.a, &self.b].iter().all(|m| (*m - m.adjoint()).iter().all(|z| z.norm() <= tol))
    }
}

/// Closed-form entangled SLDs in the basis `ψ`, then the normalised parts of
/// `∂_aψ` and `∂_bψ` orthogonal to `ψ`: `L_a = √H_aa (|1⟩⟨2| + |2⟩⟨1|)` and
/// `L_b = √H_bb (|1⟩⟨3| + |3⟩⟨1|)`.
pub fn sld_entangled(sigma1: f64, sigma2: f64, kappa: f64, pair: ParameterPair) -> Result<SldPair> {
    let q = qfi_entangled(sigma1, sigma2, kappa, pair)?;
    let unit = |i: usize, j: usize, v: f64| {
        let mut m = DMatrix::<C64>::zeros(3, 3);
        m[(i, j)] = C64::new(v, 0.0);
        m[(j, i)] = C64::new(v, 0.0);
        m
    };
    let mut rho = DMatrix::<C64>::zeros(3, 3);
    rho[(0, 0)] = C64::new(1.0, 0.0);
    Ok(SldPair { rho, a: unit(0, 1, q.h[0][0].sqrt()), b: unit(0, 2, q.h[1][1].sqrt()) })
}

/// SLD matrices for a strategy at a local point. Entangled probes use the
/// closed form; mixtures come from the oracle, expressed in the eigenbasis of `ρ`.
pub fn sld_matrices(
    strategy: Strategy,
    point: &MixedPoint,
    pair: ParameterPair,
    convention: TraceConvention,
    settings: &OracleSettings,
) -> Result<SldPair> {
    if strategy == Strategy::EntangledBiphoton {
        point.validate()?;
        return sld_entangled(point.sigma, point.sigma, point.kappa, pair);
    }
    let (_, report) = qfi_numeric(strategy, point, pair, convention, settings)?;
    let n = report.rho_eigenvalues.len();
    let rho =
        DMatrix::from_fn(
            n,
            n,
            |i, j| {
                if i == j {
                    C64::new(report.rho_eigenvalues[i], 0.0)
                } else {
                    C64::new(0.0, 0.0)
                }
            },
        );
    let mut slds = report.slds.into_iter();
    let a = slds.next().expect("two parameters");
    let b = slds.next().expect("two parameters");
    Ok(SldPair { rho, a, b })
}

pub fn compatibility_residual(
    strategy: Strategy,
    point: &MixedPoint,
    pair: ParameterPair,
    convention: TraceConvention,
    settings: &OracleSettings,
) -> Result<f64> {
    Ok(sld_matrices(strategy, point, pair, convention, settings)?.compat())
}

/// Congruence `JᵀHJ` moving a QFI matrix to new coordinates, with `J` holding
/// the derivatives of the old coordinates (rows) by the new ones (columns).
pub fn reparametrize(h: &DMatrix<f64>, j: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    if h.nrows() != h.ncols() {
        return Err(Error::DimensionMismatch {
            expected: "square QFI matrix".into(),
            got: format!("{}x{}", h.nrows(), h.ncols()),
        });
    }
    if j.nrows() != h.nrows() {
        return Err(Error::DimensionMismatch {
            expected: format!("Jacobian with {} rows", h.nrows()),
            got: format!("{}x{}", j.nrows(), j.ncols()),
        });
    }
    Ok(j.transpose() * h * j)
}

//! Mixed single-photon QFI from the Bures fidelity of states sampled on a
//! time grid. Amplitudes are written out here, so nothing but the parameter
//! layout is shared with the library.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64 as C64;
use qfi_radar::gaussian::{MixedPoint, TraceConvention};
use qfi_radar::kinematics::{ParameterPair, Strategy};
use qfi_radar::oracle::{qfi_numeric, OracleSettings};

/// `(2σ²/π)^{1/4} exp(−σ²(t − t̄)² − i ω̄ t)`, so `|φ|²` has variance `1/(4σ²)`.
fn amplitude(t: f64, t_bar: f64, omega_bar: f64, sigma: f64) -> C64 {
    let norm = (2.0 * sigma * sigma / std::f64::consts::PI).powf(0.25);
    let d = t - t_bar;
    C64::from_polar(norm * (-sigma * sigma * d * d).exp(), -omega_bar * t)
}

struct Grid {
    ts: Vec<f64>,
    dt: f64,
}

impl Grid {
    fn new(sigma: f64, spread: f64) -> Self {
        let half = 12.0 / sigma + spread;
        let n = 4000;
        let dt = 2.0 * half / n as f64;
        Self { ts: (0..n).map(|i| -half + (i as f64 + 0.5) * dt).collect(), dt }
    }

    fn sample(&self, t_bar: f64, omega_bar: f64, sigma: f64) -> DVector<C64> {
        DVector::from_iterator(self.ts.len(), self.ts.iter().map(|&t| amplitude(t, t_bar, omega_bar, sigma)))
    }
}

fn sqrt_psd(m: &DMatrix<C64>) -> DMatrix<C64> {
    let e = m.clone().symmetric_eigen();
    let d = DMatrix::from_diagonal(&e.eigenvalues.map(|v| C64::new(v.max(0.0).sqrt(), 0.0)));
    &e.eigenvectors * d * e.eigenvectors.adjoint()
}

/// `Tr √(√ρ σ √ρ)` for equal-weight mixtures of the given branch vectors.
fn root_fidelity(a: &[DVector<C64>], b: &[DVector<C64>], dt: f64) -> f64 {
    let all: Vec<&DVector<C64>> = a.iter().chain(b).collect();
    let n = all.len();
    let gram = DMatrix::from_fn(n, n, |i, j| all[i].dotc(all[j]) * dt);
    // orthonormal coordinates through the Gram square root
    let g_half = sqrt_psd(&gram);
    let coords: Vec<DVector<C64>> = (0..n).map(|k| g_half.column(k).into_owned()).collect();
    let mix = |vs: &[DVector<C64>]| {
        vs.iter().fold(DMatrix::zeros(n, n), |acc, v| acc + v * v.adjoint()) / C64::new(vs.len() as f64, 0.0)
    };
    let rho = mix(&coords[..a.len()]);
    let sig = mix(&coords[a.len()..]);
    // Work on the support of ρ: square roots of round-off eigenvalues in its
    // kernel would swamp the O(ε²) signal.
    let e = rho.symmetric_eigen();
    let keep: Vec<usize> = (0..n).filter(|&k| e.eigenvalues[k] > 1e-10).collect();
    let m = keep.len();
    let inner = DMatrix::from_fn(m, m, |i, j| {
        let (ki, kj) = (keep[i], keep[j]);
        let ui = e.eigenvectors.column(ki);
        let uj = e.eigenvectors.column(kj);
        (ui.adjoint() * &sig * uj)[(0, 0)] * (e.eigenvalues[ki] * e.eigenvalues[kj]).sqrt()
    });
    inner.symmetric_eigen().eigenvalues.iter().map(|v| v.max(0.0).sqrt()).sum()
}

/// Branches displaced by `eps` along `dir` in (first, second) pair coordinates.
fn branches(grid: &Grid, p: &MixedPoint, pair: ParameterPair, dir: [f64; 2], eps: f64) -> Vec<DVector<C64>> {
    let (da, db) = (eps * dir[0], eps * dir[1]);
    (0..2)
        .map(|j| {
            let (mut t, mut w) = p.target(j);
            let sign = if j == 0 { -0.5 } else { 0.5 };
            match pair {
                ParameterPair::TimeSumFreqDiff => {
                    t += 0.5 * da;
                    w += sign * db;
                }
                ParameterPair::TimeDiffFreqSum => {
                    t += sign * da;
                    w += 0.5 * db;
                }
            }
            grid.sample(t, w, p.sigma)
        })
        .collect()
}

fn bures_qfi(p: &MixedPoint, pair: ParameterPair, dir: [f64; 2], eps: f64) -> f64 {
    let grid = Grid::new(p.sigma, p.t_minus.abs());
    let minus = branches(&grid, p, pair, dir, -eps);
    let plus = branches(&grid, p, pair, dir, eps);
    let f = root_fidelity(&minus, &plus, grid.dt);
    8.0 * (1.0 - f) / (2.0 * eps).powi(2)
}

#[test]
fn mixed_single_photon_matches_bures_fidelity() {
    for sigma in [0.5, 1.0, 2.0] {
        for (tm, wm) in [(0.5, 0.0), (1.0, 1.0), (2.0, 0.0), (0.7, 1.5)] {
            let p = MixedPoint { sigma, kappa: 0.0, t_minus: tm / sigma, omega_minus: wm * sigma };
            for pair in [ParameterPair::TimeSumFreqDiff, ParameterPair::TimeDiffFreqSum] {
                let (q, _) = qfi_numeric(
                    Strategy::TwoSinglePhotons,
                    &p,
                    pair,
                    TraceConvention::Normalized,
                    &OracleSettings::default(),
                )
                .unwrap();
                // step chosen in each coordinate's natural unit
                let scale = [1.0 / sigma, sigma];
                let h11 = bures_qfi(&p, pair, [scale[0], 0.0], 1e-3) / (scale[0] * scale[0]);
                let h22 = bures_qfi(&p, pair, [0.0, scale[1]], 1e-3) / (scale[1] * scale[1]);
                let diag = bures_qfi(&p, pair, [scale[0], scale[1]], 1e-3);
                let h12 = (diag - h11 * scale[0] * scale[0] - h22 * scale[1] * scale[1]) / (2.0 * scale[0] * scale[1]);
                let tol = |x: f64| 1e-4 * x.abs().max(1e-3);
                assert!((h11 - q.h[0][0]).abs() < tol(q.h[0][0]), "{p:?} {pair:?}: H11 {h11} vs {}", q.h[0][0]);
                assert!((h22 - q.h[1][1]).abs() < tol(q.h[1][1]), "{p:?} {pair:?}: H22 {h22} vs {}", q.h[1][1]);
                let off_tol = 1e-4 * (q.h[0][0] * q.h[1][1]).sqrt();
                assert!((h12 - q.h[0][1]).abs() < off_tol, "{p:?} {pair:?}: H12 {h12} vs {}", q.h[0][1]);
            }
        }
    }
}

//! Finite mixtures of Gaussian packets and the parameters they depend on.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::packet::{Coordinate, Envelope, Packet, Poly, Superposition};
use super::{require_positive, validate_kappa, GaussianBiphoton, GaussianSinglePhoton};
use crate::error::{domain, Error, Result};
use crate::kinematics::ParameterPair;

/// Number of targets a parameter can refer to.
pub const TARGETS: usize = 2;

/// Estimated parameter. Sum and difference parameters combine the per-target
/// coordinates with weights ±½, so that `t̄₁ = (t̄₊ − t̄₋)/2`, `t̄₂ = (t̄₊ + t̄₋)/2`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Param {
    TimeSum,
    TimeDiff,
    FreqSum,
    FreqDiff,
    Time(usize),
    Freq(usize),
    Bandwidth(usize),
}

impl Param {
    /// The two parameters estimated jointly for a pair.
    pub fn of_pair(pair: ParameterPair) -> [Param; 2] {
        match pair {
            ParameterPair::TimeSumFreqDiff => [Param::TimeSum, Param::FreqDiff],
            ParameterPair::TimeDiffFreqSum => [Param::TimeDiff, Param::FreqSum],
        }
    }

    /// `(target, coordinate, ∂coordinate/∂param)` for every coordinate moved by this parameter.
    pub fn coefficients(&self) -> Vec<(usize, Coordinate, f64)> {
        use Coordinate::*;
        match *self {
            Param::TimeSum => vec![(0, Center, 0.5), (1, Center, 0.5)],
            Param::TimeDiff => vec![(0, Center, -0.5), (1, Center, 0.5)],
            Param::FreqSum => vec![(0, Carrier, 0.5), (1, Carrier, 0.5)],
            Param::FreqDiff => vec![(0, Carrier, -0.5), (1, Carrier, 0.5)],
            Param::Time(j) => vec![(j, Center, 1.0)],
            Param::Freq(j) => vec![(j, Carrier, 1.0)],
            Param::Bandwidth(j) => vec![(j, Bandwidth, 1.0)],
        }
    }

    pub fn touches_target(&self, target: usize) -> bool {
        self.coefficients().iter().any(|(t, _, _)| *t == target)
    }

    fn check(&self) -> Result<()> {
        match self.coefficients().iter().find(|(t, _, _)| *t >= TARGETS) {
            Some((t, _, _)) => Err(Error::Unsupported(format!("{self:?}: no target {t}"))),
            None => Ok(()),
        }
    }

    /// Typical size of a change of this parameter for a packet of bandwidth `sigma`.
    pub fn scale(&self, sigma: f64) -> f64 {
        match self {
            Param::TimeSum | Param::TimeDiff | Param::Time(_) => 1.0 / sigma,
            _ => sigma,
        }
    }
}

/// How the weights of a mixture are normalised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum TraceConvention {
    /// Weights sum to one.
    Normalized,
    /// One unit of weight per detected photon; the trace equals the photon number.
    PhotonCounted,
}

impl TraceConvention {
    pub fn name(&self) -> &'static str {
        match self {
            TraceConvention::Normalized => "normalized",
            TraceConvention::PhotonCounted => "photon_counted",
        }
    }
}

/// One pure component of a mixture. `roles[m]` names the target that photon
/// mode `m` was reflected from, or `None` for a photon kept at the source.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Branch<const D: usize> {
    pub weight: f64,
    pub envelope: Envelope<D>,
    pub roles: [Option<usize>; D],
}

impl<const D: usize> Branch<D> {
    pub fn packet(&self) -> Packet<D> {
        Packet::plain(self.envelope)
    }

    /// Analytic `∂ψ/∂param` of this branch; the zero packet when no mode is involved.
    pub fn derivative(&self, param: Param) -> Result<Packet<D>> {
        param.check()?;
        let mut poly = Poly::zero();
        for (target, coord, coef) in param.coefficients() {
            for m in self.modes_of(target) {
                let dp = self.envelope.derivative_poly(m, coord);
                poly = poly.add(&dp.scaled(Complex64::new(coef, 0.0)));
            }
        }
        Ok(Packet { envelope: self.envelope, poly })
    }

    /// Copy with `param` moved by `h`.
    pub fn displaced(&self, param: Param, h: f64) -> Self {
        let mut out = *self;
        for (target, coord, coef) in param.coefficients() {
            for m in self.modes_of(target) {
                out.envelope = out.envelope.displaced(m, coord, coef * h);
            }
        }
        out
    }

    /// Central difference `(ψ(λ+h) − ψ(λ−h))/2h` as a two-term superposition.
    pub fn central_difference(&self, param: Param, h: f64) -> Result<Superposition<D>> {
        param.check()?;
        if !(h > 0.0 && h.is_finite()) {
            return domain(format!("finite-difference step must be positive, got {h}"));
        }
        let mut s = Superposition::default();
        if self.modes_of_param(param).next().is_none() {
            return Ok(s);
        }
        let c = Complex64::new(0.5 / h, 0.0);
        s.push(c, self.displaced(param, h).packet());
        s.push(-c, self.displaced(param, -h).packet());
        Ok(s)
    }

    fn modes_of(&self, target: usize) -> impl Iterator<Item = usize> + '_ {
        (0..D).filter(move |&m| self.roles[m] == Some(target))
    }

    fn modes_of_param(&self, param: Param) -> impl Iterator<Item = usize> + '_ {
        let targets: Vec<usize> = param.coefficients().iter().map(|c| c.0).collect();
        (0..D).filter(move |&m| self.roles[m].is_some_and(|t| targets.contains(&t)))
    }

    /// Smallest bandwidth among the modes, used to scale finite-difference steps.
    pub fn min_sigma(&self) -> f64 {
        self.envelope.sigma.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// `ρ = Σ w_b |ψ_b⟩⟨ψ_b|`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianEnsemble<const D: usize> {
    pub branches: Vec<Branch<D>>,
    pub convention: TraceConvention,
}

impl<const D: usize> GaussianEnsemble<D> {
    pub fn new(branches: Vec<Branch<D>>, convention: TraceConvention) -> Result<Self> {
        let e = Self { branches, convention };
        e.validate()?;
        Ok(e)
    }

    pub fn validate(&self) -> Result<()> {
        if self.branches.is_empty() {
            return domain("ensemble has no branches");
        }
        for b in &self.branches {
            require_positive("branch weight", b.weight)?;
            b.envelope.validate()?;
            if b.roles.iter().flatten().any(|&t| t >= TARGETS) {
                return domain("branch role refers to an unknown target");
            }
        }
        if self.convention == TraceConvention::Normalized && (self.trace() - 1.0).abs() > 1e-12 {
            return domain(format!("normalized ensemble has trace {}", self.trace()));
        }
        Ok(())
    }

    pub fn trace(&self) -> f64 {
        self.branches.iter().map(|b| b.weight).sum()
    }

    /// Same branches with weights rescaled to unit trace.
    pub fn normalized(&self) -> Self {
        let tr = self.trace();
        let branches = self.branches.iter().map(|b| Branch { weight: b.weight / tr, ..*b }).collect();
        Self { branches, convention: TraceConvention::Normalized }
    }

    pub fn is_pure(&self) -> bool {
        self.branches.len() == 1
    }
}

impl GaussianEnsemble<2> {
    /// A single biphoton, photon `m` reflected from target `m`.
    pub fn pure_biphoton(state: &GaussianBiphoton) -> Result<Self> {
        let b = Branch { weight: 1.0, envelope: state.envelope(), roles: [Some(0), Some(1)] };
        Self::new(vec![b], TraceConvention::Normalized)
    }

    /// Signal photon of branch `j` reflected from target `j`, idler retained.
    pub fn illumination(branches: [GaussianBiphoton; 2], convention: TraceConvention) -> Result<Self> {
        let w = weight_for(convention);
        let b = branches
            .iter()
            .enumerate()
            .map(|(j, s)| Branch { weight: w, envelope: s.envelope(), roles: [Some(j), None] })
            .collect();
        Self::new(b, convention)
    }
}

impl GaussianEnsemble<1> {
    /// Two single photons in one shared mode, photon `j` reflected from target `j`.
    pub fn single_photons(photons: [GaussianSinglePhoton; 2], convention: TraceConvention) -> Result<Self> {
        let w = weight_for(convention);
        let b = photons
            .iter()
            .enumerate()
            .map(|(j, p)| Branch { weight: w, envelope: p.envelope(), roles: [Some(j)] })
            .collect();
        Self::new(b, convention)
    }

    /// A lone photon reflected from target 0.
    pub fn pure_single(photon: &GaussianSinglePhoton) -> Result<Self> {
        let b = Branch { weight: 1.0, envelope: photon.envelope(), roles: [Some(0)] };
        Self::new(vec![b], TraceConvention::Normalized)
    }
}

fn weight_for(convention: TraceConvention) -> f64 {
    match convention {
        TraceConvention::Normalized => 0.5,
        TraceConvention::PhotonCounted => 1.0,
    }
}

/// Probe family evaluated at a local point of the parameter space.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ProbeModel {
    Entangled,
    SinglePhotons,
    Illumination,
}

impl From<crate::kinematics::Strategy> for ProbeModel {
    fn from(s: crate::kinematics::Strategy) -> Self {
        use crate::kinematics::Strategy;
        match s {
            Strategy::EntangledBiphoton => ProbeModel::Entangled,
            Strategy::TwoSinglePhotons => ProbeModel::SinglePhotons,
            Strategy::QuantumIllumination => ProbeModel::Illumination,
        }
    }
}

/// Local evaluation point: equal bandwidths, the two targets placed
/// symmetrically about zero delay and zero carrier offset.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MixedPoint {
    pub sigma: f64,
    pub kappa: f64,
    pub t_minus: f64,
    pub omega_minus: f64,
}

impl MixedPoint {
    pub fn validate(&self) -> Result<()> {
        require_positive("sigma", self.sigma)?;
        validate_kappa(self.kappa)?;
        if !(self.t_minus.is_finite() && self.omega_minus.is_finite()) {
            return domain("separation must be finite");
        }
        Ok(())
    }

    /// Per-target `(t̄ⱼ, ω̄ⱼ)`.
    pub fn target(&self, j: usize) -> (f64, f64) {
        let s = if j == 0 { -0.5 } else { 0.5 };
        (s * self.t_minus, s * self.omega_minus)
    }

    /// The entangled probe: one biphoton, photon `j` from target `j`.
    pub fn biphoton(&self) -> Result<GaussianBiphoton> {
        self.validate()?;
        let (t1, w1) = self.target(0);
        let (t2, w2) = self.target(1);
        GaussianBiphoton::new(t1, t2, w1, w2, self.sigma, self.sigma, self.kappa)
    }

    pub fn photons(&self) -> Result<[GaussianSinglePhoton; 2]> {
        self.validate()?;
        let p = |j| {
            let (t, w) = self.target(j);
            GaussianSinglePhoton::new(t, w, self.sigma)
        };
        Ok([p(0)?, p(1)?])
    }

    /// Signal from target `j` paired with an idler at zero delay and offset.
    pub fn illumination_branches(&self) -> Result<[GaussianBiphoton; 2]> {
        self.validate()?;
        let b = |j| {
            let (t, w) = self.target(j);
            GaussianBiphoton::new(t, 0.0, w, 0.0, self.sigma, self.sigma, self.kappa)
        };
        Ok([b(0)?, b(1)?])
    }

    pub fn single_photon_ensemble(&self, convention: TraceConvention) -> Result<GaussianEnsemble<1>> {
        GaussianEnsemble::single_photons(self.photons()?, convention)
    }

    pub fn illumination_ensemble(&self, convention: TraceConvention) -> Result<GaussianEnsemble<2>> {
        GaussianEnsemble::illumination(self.illumination_branches()?, convention)
    }

    pub fn entangled_ensemble(&self) -> Result<GaussianEnsemble<2>> {
        GaussianEnsemble::pure_biphoton(&self.biphoton()?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn point() -> MixedPoint {
        MixedPoint { sigma: 1.2, kappa: 0.4, t_minus: 0.8, omega_minus: -0.6 }
    }

    #[test]
    fn sum_difference_coefficients_invert() {
        let b = Branch { weight: 1.0, envelope: point().biphoton().unwrap().envelope(), roles: [Some(0), Some(1)] };
        let moved = b.displaced(Param::TimeSum, 0.2).displaced(Param::TimeDiff, 0.6);
        assert_relative_eq!(moved.envelope.center[0], -0.4 + 0.1 - 0.3, epsilon = 1e-15);
        assert_relative_eq!(moved.envelope.center[1], 0.4 + 0.1 + 0.3, epsilon = 1e-15);
        let moved = b.displaced(Param::FreqDiff, 1.0);
        assert_relative_eq!(moved.envelope.carrier[1] - moved.envelope.carrier[0], -0.6 + 1.0, epsilon = 1e-15);
    }

    #[test]
    fn retained_idler_is_never_moved() {
        let e = point().illumination_ensemble(TraceConvention::Normalized).unwrap();
        for b in &e.branches {
            let moved = b.displaced(Param::TimeSum, 1.0).displaced(Param::FreqSum, 1.0);
            assert_eq!(moved.envelope.center[1], 0.0);
            assert_eq!(moved.envelope.carrier[1], 0.0);
        }
        let d = e.branches[0].derivative(Param::Time(1)).unwrap();
        assert_eq!(d.poly.terms().count(), 0);
        assert!(e.branches[0].central_difference(Param::Time(1), 1e-3).unwrap().terms.is_empty());
    }

    #[test]
    fn conventions_and_validation() {
        let p = point();
        let e = p.single_photon_ensemble(TraceConvention::PhotonCounted).unwrap();
        assert_eq!(e.trace(), 2.0);
        assert_eq!(e.normalized().trace(), 1.0);
        assert_eq!(p.single_photon_ensemble(TraceConvention::Normalized).unwrap().trace(), 1.0);
        let mut bad = e.normalized();
        bad.branches[0].weight = 0.9;
        assert!(bad.validate().is_err());
        assert!(MixedPoint { kappa: 1.0, ..p }.biphoton().is_err());
        assert!(MixedPoint { sigma: 0.0, ..p }.photons().is_err());
        let b = e.branches[0];
        assert!(b.derivative(Param::Freq(5)).is_err());
        assert!(b.central_difference(Param::TimeSum, 0.0).is_err());
    }

    #[test]
    fn central_difference_tracks_analytic_derivative() {
        let e = point().illumination_ensemble(TraceConvention::Normalized).unwrap();
        let probes: Vec<Superposition<2>> = e.branches.iter().map(|b| Superposition::single(b.packet())).collect();
        for b in &e.branches {
            for param in [Param::TimeSum, Param::FreqDiff, Param::Bandwidth(0), Param::Bandwidth(1)] {
                let an = Superposition::single(b.derivative(param).unwrap());
                let fd = b.central_difference(param, 1e-6 * param.scale(b.min_sigma())).unwrap();
                for probe in &probes {
                    let diff = probe.overlap(&an) - probe.overlap(&fd);
                    assert!(diff.norm() < 1e-7, "{param:?}: {diff}");
                }
            }
        }
    }
}

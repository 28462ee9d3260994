//! Monte Carlo measurement campaigns against the quantum Cramér–Rao bound.
//!
//! Arrival times are drawn from `|φ(t₁,t₂)|²` and frequencies from the
//! spectral intensity; both are bivariate normal for a Gaussian biphoton.
//! Samples are produced in fixed-size chunks, each with its own ChaCha12
//! stream `(seed ^ domain tag, chunk index)`, so the output depends only on
//! the seed and chunk size and never on the thread count. Statistics are
//! accumulated per chunk and merged in chunk order.

use nalgebra::Matrix2;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::analytic::qfi_entangled;
use crate::error::{domain, Error, Result};
use crate::gaussian::GaussianBiphoton;
use crate::kinematics::{
    central_position, object_size_moving, object_velocity, relative_velocity, return_params, ParameterPair,
    PhysicalConstants, ProbeConfig, Strategy, Target, VelocityMode,
};

pub const DEFAULT_CHUNK: usize = 8192;
const TIME_TAG: u64 = 0x7469_6d65_0000_0001;
const FREQ_TAG: u64 = 0x6672_6571_0000_0002;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleDomain {
    Time,
    Frequency,
}

impl SampleDomain {
    pub fn name(&self) -> &'static str {
        match self {
            SampleDomain::Time => "time",
            SampleDomain::Frequency => "frequency",
        }
    }

    fn tag(&self) -> u64 {
        match self {
            SampleDomain::Time => TIME_TAG,
            SampleDomain::Frequency => FREQ_TAG,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub n_samples: usize,
    pub seed: u64,
    pub domain: SampleDomain,
    pub strategy: Strategy,
    pub chunk_size: usize,
}

impl McConfig {
    pub fn new(n_samples: usize, seed: u64, domain: SampleDomain, strategy: Strategy) -> Self {
        Self { n_samples, seed, domain, strategy, chunk_size: DEFAULT_CHUNK }
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_samples < 2 {
            return domain(format!("need at least 2 samples, got {}", self.n_samples));
        }
        if self.chunk_size == 0 {
            return domain("chunk size must be positive");
        }
        if self.strategy == Strategy::QuantumIllumination {
            return Err(Error::Unsupported("quantum illumination is not sampled".into()));
        }
        Ok(())
    }
}

/// Measured pairs from one domain, kept in chunk order.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleSet {
    pub domain: SampleDomain,
    pub chunk_size: usize,
    pub points: Vec<[f64; 2]>,
}

/// The state actually measured: two single photons with known assignment are
/// the uncorrelated product of their modes.
fn measured_state(state: &GaussianBiphoton, strategy: Strategy) -> GaussianBiphoton {
    match strategy {
        Strategy::TwoSinglePhotons => state.uncorrelated(),
        _ => *state,
    }
}

fn sample(mean: [f64; 2], cov: Matrix2<f64>, config: &McConfig) -> Result<SampleSet> {
    config.validate()?;
    let chol = cov.cholesky().ok_or_else(|| Error::Numeric("sampling covariance is not positive definite".into()))?.l();
    let n = config.n_samples;
    let chunks = n.div_ceil(config.chunk_size);
    let parts: Vec<Vec<[f64; 2]>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha12Rng::seed_from_u64(config.seed ^ config.domain.tag());
            rng.set_stream(c as u64);
            let len = config.chunk_size.min(n - c * config.chunk_size);
            (0..len)
                .map(|_| {
                    let z0: f64 = StandardNormal.sample(&mut rng);
                    let z1: f64 = StandardNormal.sample(&mut rng);
                    [mean[0] + chol[(0, 0)] * z0, mean[1] + chol[(1, 0)] * z0 + chol[(1, 1)] * z1]
                })
                .collect()
        })
        .collect();
    Ok(SampleSet { domain: config.domain, chunk_size: config.chunk_size, points: parts.concat() })
}

/// Arrival-time pairs `(t₁, t₂)`.
pub fn sample_times(state: &GaussianBiphoton, config: &McConfig) -> Result<SampleSet> {
    state.validate()?;
    let s = measured_state(state, config.strategy);
    let config = McConfig { domain: SampleDomain::Time, ..*config };
    sample([s.t1_bar, s.t2_bar], s.time_covariance(), &config)
}

/// Frequency pairs `(ω₁, ω₂)`.
pub fn sample_frequencies(state: &GaussianBiphoton, config: &McConfig) -> Result<SampleSet> {
    state.validate()?;
    let s = measured_state(state, config.strategy);
    let config = McConfig { domain: SampleDomain::Frequency, ..*config };
    sample([s.omega1_bar, s.omega2_bar], s.frequency_covariance(), &config)
}

/// Streaming count, mean and sum of squared deviations.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    pub count: u64,
    pub mean: f64,
    pub m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let d = x - self.mean;
        self.mean += d / self.count as f64;
        self.m2 += d * (x - self.mean);
    }

    pub fn merge(&self, other: &Self) -> Self {
        if self.count == 0 {
            return *other;
        }
        if other.count == 0 {
            return *self;
        }
        let n = self.count + other.count;
        let d = other.mean - self.mean;
        let mean = self.mean + d * other.count as f64 / n as f64;
        let m2 = self.m2 + other.m2 + d * d * (self.count as f64 * other.count as f64) / n as f64;
        Self { count: n, mean, m2 }
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}

/// Per-shot combination of a measured pair that estimates the pair component
/// in `domain`: `t₁+t₂`, `ω₂−ω₁`, `t₂−t₁` or `ω₁+ω₂`.
pub fn estimator(pair: ParameterPair, domain: SampleDomain) -> (&'static str, fn(&[f64; 2]) -> f64) {
    match (pair, domain) {
        (ParameterPair::TimeSumFreqDiff, SampleDomain::Time) => ("t_plus", |p| p[0] + p[1]),
        (ParameterPair::TimeSumFreqDiff, SampleDomain::Frequency) => ("omega_minus", |p| p[1] - p[0]),
        (ParameterPair::TimeDiffFreqSum, SampleDomain::Time) => ("t_minus", |p| p[1] - p[0]),
        (ParameterPair::TimeDiffFreqSum, SampleDomain::Frequency) => ("omega_plus", |p| p[0] + p[1]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct McReport {
    pub strategy: Strategy,
    pub pair: ParameterPair,
    pub domain: SampleDomain,
    pub quantity: String,
    pub n: usize,
    pub truth: f64,
    pub estimate: f64,
    /// Standard error of the mean.
    pub standard_error: f64,
    /// `(estimate − truth) / standard_error`.
    pub bias_z: f64,
    /// Empirical per-shot variance.
    pub variance: f64,
    /// `1/H` for one shot.
    pub qcrb_variance: f64,
    pub ratio: f64,
    /// Two-sided 99% χ² interval for `ratio`.
    pub ratio_low: f64,
    pub ratio_high: f64,
}

fn reduce(samples: &SampleSet, f: fn(&[f64; 2]) -> f64) -> Welford {
    let chunk = samples.chunk_size.max(1);
    let parts: Vec<Welford> = samples
        .points
        .par_chunks(chunk)
        .map(|c| {
            let mut w = Welford::default();
            c.iter().for_each(|p| w.push(f(p)));
            w
        })
        .collect();
    parts.iter().fold(Welford::default(), |acc, w| acc.merge(w))
}

/// Compares the empirical variance of the per-shot estimator with the
/// single-shot QCRB of the measured state.
pub fn estimate_pair(
    samples: &SampleSet,
    pair: ParameterPair,
    state: &GaussianBiphoton,
    strategy: Strategy,
) -> Result<McReport> {
    let n = samples.points.len();
    if n < 2 {
        return domain(format!("need at least 2 samples, got {n}"));
    }
    if strategy == Strategy::QuantumIllumination {
        return Err(Error::Unsupported("quantum illumination is not sampled".into()));
    }
    let s = measured_state(state, strategy);
    let q = qfi_entangled(s.sigma1, s.sigma2, s.kappa, pair)?;
    let (quantity, f) = estimator(pair, samples.domain);
    let (truth, h) = match samples.domain {
        SampleDomain::Time => (f(&[s.t1_bar, s.t2_bar]), q.h[0][0]),
        SampleDomain::Frequency => (f(&[s.omega1_bar, s.omega2_bar]), q.h[1][1]),
    };
    let w = reduce(samples, f);
    let variance = w.variance();
    let qcrb_variance = 1.0 / h;
    let ratio = variance / qcrb_variance;
    let dof = (n - 1) as f64;
    let chi = ChiSquared::new(dof).map_err(|e| Error::Numeric(e.to_string()))?;
    let (lo_q, hi_q) = (chi.inverse_cdf(0.005), chi.inverse_cdf(0.995));
    let standard_error = (variance / n as f64).sqrt();
    Ok(McReport {
        strategy,
        pair,
        domain: samples.domain,
        quantity: quantity.to_string(),
        n,
        truth,
        estimate: w.mean,
        standard_error,
        bias_z: (w.mean - truth) / standard_error,
        variance,
        qcrb_variance,
        ratio,
        ratio_low: ratio * dof / hi_q,
        ratio_high: ratio * dof / lo_q,
    })
}

/// Empirical per-shot `δa·δb` from a time and a frequency report of one pair,
/// with the bound it should respect.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProductCheck {
    pub product: f64,
    pub bound: f64,
    pub ratio: f64,
}

pub fn uncertainty_product(time: &McReport, freq: &McReport) -> Result<ProductCheck> {
    if time.pair != freq.pair || time.domain != SampleDomain::Time || freq.domain != SampleDomain::Frequency {
        return domain("need a time and a frequency report of the same pair");
    }
    let product = (time.variance * freq.variance).sqrt();
    let bound = (time.qcrb_variance * freq.qcrb_variance).sqrt();
    Ok(ProductCheck { product, bound, ratio: product / bound })
}

/// Both domains of one pair for one state.
pub fn run_pair(
    state: &GaussianBiphoton,
    pair: ParameterPair,
    strategy: Strategy,
    n: usize,
    seed: u64,
) -> Result<(McReport, McReport, ProductCheck)> {
    let cfg = McConfig::new(n, seed, SampleDomain::Time, strategy);
    let t = estimate_pair(&sample_times(state, &cfg)?, pair, state, strategy)?;
    let f = estimate_pair(&sample_frequencies(state, &cfg)?, pair, state, strategy)?;
    let p = uncertainty_product(&t, &f)?;
    Ok((t, f, p))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Scenario {
    /// Two point targets; estimates their midpoint and relative velocity.
    Multibody { targets: [Target; 2] },
    /// Two points of one rigid object at `range` and `range + size`, moving at `velocity`.
    MovingObject { range: f64, size: f64, velocity: f64 },
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Multibody { .. } => "multibody",
            Scenario::MovingObject { .. } => "moving_object",
        }
    }

    pub fn targets(&self) -> [Target; 2] {
        match *self {
            Scenario::Multibody { targets } => targets,
            Scenario::MovingObject { range, size, velocity } => {
                [Target::new(range, velocity), Target::new(range + size, velocity)]
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantityEstimate {
    pub name: String,
    pub truth: f64,
    pub estimate: f64,
    pub standard_error: f64,
    /// Standard error implied by the QCRB for the same number of shots.
    pub predicted_error: f64,
    /// `(estimate − truth) / predicted_error`.
    pub z: f64,
}

impl QuantityEstimate {
    fn new(name: &str, truth: f64, estimate: f64, standard_error: f64, predicted_error: f64) -> Self {
        Self {
            name: name.to_string(),
            truth,
            estimate,
            standard_error,
            predicted_error,
            z: (estimate - truth) / predicted_error,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioReport {
    pub scenario: String,
    pub strategy: Strategy,
    pub n_time: usize,
    pub n_frequency: usize,
    pub seed: u64,
    pub estimates: Vec<QuantityEstimate>,
}

impl ScenarioReport {
    pub fn get(&self, name: &str) -> Option<&QuantityEstimate> {
        self.estimates.iter().find(|q| q.name == name)
    }
}

/// Forward-simulates the returns of a scenario, measures half of the shots in
/// time and half in frequency (by `time_fraction`), and inverts the sample
/// means to physical quantities.
pub fn run_scenario(
    scenario: &Scenario,
    probe: &ProbeConfig,
    consts: &PhysicalConstants,
    n_shots: usize,
    seed: u64,
    time_fraction: f64,
) -> Result<ScenarioReport> {
    probe.validate()?;
    if !(time_fraction > 0.0 && time_fraction < 1.0) {
        return domain(format!("time fraction must lie in (0, 1), got {time_fraction}"));
    }
    let n_time = ((n_shots as f64) * time_fraction).round() as usize;
    let n_freq = n_shots.saturating_sub(n_time);
    if n_time < 2 || n_freq < 2 {
        return domain(format!("{n_shots} shots leave fewer than 2 in a domain"));
    }
    let [a, b] = scenario.targets();
    let ret = return_params(&a, &b, probe, consts)?;
    let state = GaussianBiphoton::from_return(&ret, probe.kappa)?;
    let strategy = probe.strategy;
    let (pair, quantities) = match scenario {
        Scenario::Multibody { .. } => (ParameterPair::TimeSumFreqDiff, 0),
        Scenario::MovingObject { .. } => (ParameterPair::TimeDiffFreqSum, 1),
    };
    let times = sample_times(&state, &McConfig::new(n_time, seed, SampleDomain::Time, strategy))?;
    let freqs = sample_frequencies(&state, &McConfig::new(n_freq, seed, SampleDomain::Frequency, strategy))?;
    let t = estimate_pair(&times, pair, &state, strategy)?;
    let f = estimate_pair(&freqs, pair, &state, strategy)?;
    let predicted = |r: &McReport| (r.qcrb_variance / r.n as f64).sqrt();
    let c = consts.c;
    let w0 = probe.omega0;

    let estimates = if quantities == 0 {
        let mid_truth = 0.5 * (a.r + b.r);
        let mid = central_position(t.estimate, consts)?;
        let w1 = reduce(&freqs, |p| p[0]).mean;
        let w2 = reduce(&freqs, |p| p[1]).mean;
        let dv = relative_velocity(f.estimate, w0, consts, VelocityMode::ExactPairwise, Some((w1, w2)))?;
        // slope of v(ω) = c(ω₀ − ω)/(ω₀ + ω), averaged over both photons
        let slope = |w: f64| 2.0 * c * w0 / ((w0 + w) * (w0 + w));
        let k = 0.5 * (slope(w1) + slope(w2));
        vec![
            QuantityEstimate::new("midpoint", mid_truth, mid, c / 4.0 * t.standard_error, c / 4.0 * predicted(&t)),
            QuantityEstimate::new("relative_velocity", b.v - a.v, dv, k * f.standard_error, k * predicted(&f)),
        ]
    } else {
        let v = object_velocity(f.estimate, w0, consts, VelocityMode::ExactPairwise)?;
        let x = object_size_moving(t.estimate, v, consts)?;
        let slope = 4.0 * c * w0 / ((2.0 * w0 + f.estimate) * (2.0 * w0 + f.estimate));
        let half = 0.5 * (c - v);
        vec![
            QuantityEstimate::new("size", b.r - a.r, x, half * t.standard_error, half * predicted(&t)),
            QuantityEstimate::new("velocity", a.v, v, slope * f.standard_error, slope * predicted(&f)),
        ]
    };
    Ok(ScenarioReport { scenario: scenario.name().to_string(), strategy, n_time, n_frequency: n_freq, seed, estimates })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn state(k: f64) -> GaussianBiphoton {
        GaussianBiphoton::new(3.0, 5.0, 10.0, 12.0, 1.0, 1.0, k).unwrap()
    }

    fn cfg(n: usize) -> McConfig {
        McConfig::new(n, 42, SampleDomain::Time, Strategy::EntangledBiphoton)
    }

    fn corr(points: &[[f64; 2]]) -> f64 {
        let n = points.len() as f64;
        let m0 = points.iter().map(|p| p[0]).sum::<f64>() / n;
        let m1 = points.iter().map(|p| p[1]).sum::<f64>() / n;
        let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
        for p in points {
            sxy += (p[0] - m0) * (p[1] - m1);
            sxx += (p[0] - m0).powi(2);
            syy += (p[1] - m1).powi(2);
        }
        sxy / (sxx * syy).sqrt()
    }

    #[test]
    fn welford_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut all = Welford::default();
        xs.iter().for_each(|&x| all.push(x));
        let mut a = Welford::default();
        let mut b = Welford::default();
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        let m = a.merge(&b);
        assert_eq!(m.count, all.count);
        assert_relative_eq!(m.mean, all.mean, max_relative = 1e-13);
        assert_relative_eq!(m.variance(), all.variance(), max_relative = 1e-12);
    }

    #[test]
    fn independent_times_at_zero_correlation() {
        let n = 20_000;
        let s = sample_times(&state(0.0), &cfg(n)).unwrap();
        assert!(corr(&s.points).abs() < 3.0 / (n as f64).sqrt());
    }

    #[test]
    fn time_sum_variance() {
        let s = sample_times(&state(-0.8), &cfg(100_000)).unwrap();
        let r = estimate_pair(&s, ParameterPair::TimeSumFreqDiff, &state(-0.8), Strategy::EntangledBiphoton).unwrap();
        assert!((r.variance / (1.0 / 3.6) - 1.0).abs() < 0.02);
        assert!(r.bias_z.abs() < 5.0);
    }

    #[test]
    fn frequency_statistics() {
        let c = McConfig { domain: SampleDomain::Frequency, ..cfg(100_000) };
        let s = sample_frequencies(&state(0.0), &c).unwrap();
        for i in 0..2 {
            let mut w = Welford::default();
            s.points.iter().for_each(|p| w.push(p[i]));
            assert!((w.variance() - 1.0).abs() < 0.02);
            let truth = [10.0, 12.0][i];
            assert!((w.mean - truth).abs() < 5.0 * (w.variance() / 1e5).sqrt());
        }
        let s = sample_frequencies(&state(-0.9), &c).unwrap();
        let r = estimate_pair(&s, ParameterPair::TimeSumFreqDiff, &state(-0.9), Strategy::EntangledBiphoton).unwrap();
        assert!((r.variance / 0.2 - 1.0).abs() < 0.02);
    }

    #[test]
    fn reproducible_and_thread_independent() {
        let a = sample_times(&state(0.3), &cfg(30_000)).unwrap();
        let b = sample_times(&state(0.3), &cfg(30_000)).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| sample_times(&state(0.3), &cfg(30_000)).unwrap());
        assert_eq!(a, c);
        let other = sample_times(&state(0.3), &McConfig { seed: 43, ..cfg(30_000) }).unwrap();
        assert_ne!(a, other);
    }

    #[test]
    fn saturation_ratios() {
        for pair in [ParameterPair::TimeSumFreqDiff, ParameterPair::TimeDiffFreqSum] {
            let (t, f, p) = run_pair(&state(-0.8), pair, Strategy::EntangledBiphoton, 100_000, 7).unwrap();
            assert!((t.ratio - 1.0).abs() < 0.03 && (f.ratio - 1.0).abs() < 0.03);
            assert!(p.ratio > 0.97 && p.ratio < 1.05);
            assert!(t.ratio_low < t.ratio && t.ratio < t.ratio_high);
        }
        let (_, _, p) =
            run_pair(&state(0.6), ParameterPair::TimeSumFreqDiff, Strategy::TwoSinglePhotons, 100_000, 7).unwrap();
        assert!((p.product - 1.0).abs() < 0.05 && p.product > 0.97);
    }

    #[test]
    fn tiny_runs_and_errors() {
        let s = sample_times(&state(0.0), &cfg(2)).unwrap();
        let r = estimate_pair(&s, ParameterPair::TimeSumFreqDiff, &state(0.0), Strategy::EntangledBiphoton).unwrap();
        assert!(r.ratio_high / r.ratio_low > 100.0);
        assert!(sample_times(&state(0.0), &cfg(1)).is_err());
        let qi = McConfig { strategy: Strategy::QuantumIllumination, ..cfg(10) };
        assert!(sample_times(&state(0.0), &qi).is_err());
    }

    #[test]
    fn scenarios() {
        let c = PhysicalConstants::natural();
        let probe = ProbeConfig { omega0: 10.0, sigma0: 1.0, kappa: -0.9, strategy: Strategy::EntangledBiphoton };
        let multi = Scenario::Multibody { targets: [Target::new(300.0, 0.0), Target::new(500.0, 0.0)] };
        let r = run_scenario(&multi, &probe, &c, 10_000, 1, 0.5).unwrap();
        let mid = r.get("midpoint").unwrap();
        assert!(mid.z.abs() <= 3.0, "{mid:?}");
        assert_eq!(r, run_scenario(&multi, &probe, &c, 10_000, 1, 0.5).unwrap());

        let probe = ProbeConfig { kappa: 0.9, ..probe };
        let still = Scenario::MovingObject { range: 10.0, size: 0.0, velocity: 0.0 };
        let r = run_scenario(&still, &probe, &c, 10_000, 2, 0.5).unwrap();
        let x = r.get("size").unwrap();
        assert!(x.z.abs() <= 3.0 && x.truth == 0.0);

        let moving = Scenario::MovingObject { range: 10.0, size: 1.0, velocity: 1.0 / 3.0 };
        let r = run_scenario(&moving, &probe, &c, 10_000, 3, 0.5).unwrap();
        for q in &r.estimates {
            assert!(q.z.abs() <= 3.0, "{q:?}");
        }
        assert!((r.get("velocity").unwrap().estimate - 1.0 / 3.0).abs() < 1e-2);
        assert!(run_scenario(&moving, &probe, &c, 3, 3, 0.5).is_err());
    }
}

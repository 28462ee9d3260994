//! Polynomial-times-Gaussian wave packets in one or two time variables, with
//! closed-form inner products.
//!
//! A packet is
//!
//! ```text
//! f(t) = N · P(x) · exp(−xᵀ A x − i ω̄·x),   x = t − t̄
//! ```
//!
//! where `A` is the real positive-definite envelope form built from the
//! per-mode bandwidths and the correlation κ, `N` normalises the plain
//! envelope, and `P` is a complex polynomial in the centred coordinates.
//! Plain states have `P = 1`; parameter derivatives of a state are packets of
//! the same envelope with a low-degree `P`.

use std::cmp::Ordering;
use std::collections::{BTreeMap, HashMap};
use std::f64::consts::PI;

use nalgebra::{SMatrix, SVector};
use num_complex::Complex64;

use crate::error::{domain, Result};

type C64 = Complex64;

/// Gaussian envelope with carrier. `kappa` is ignored for single-mode packets.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Envelope<const D: usize> {
    pub center: [f64; D],
    pub carrier: [f64; D],
    pub sigma: [f64; D],
    pub kappa: f64,
}

/// Native coordinates of one mode of an envelope.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Coordinate {
    Center,
    Carrier,
    Bandwidth,
}

impl<const D: usize> Envelope<D> {
    pub fn validate(&self) -> Result<()> {
        if D == 0 || D > 2 {
            return domain(format!("packets have one or two modes, not {D}"));
        }
        for (i, s) in self.sigma.iter().enumerate() {
            if !(*s > 0.0 && s.is_finite()) {
                return domain(format!("bandwidth of mode {i} must be positive, got {s}"));
            }
        }
        if D == 2 {
            crate::kinematics::check_kappa(self.kappa)?;
        }
        Ok(())
    }

    /// Envelope form `A`: `A_ii = σ_i²`, `A_ij = −κ σ_i σ_j`.
    pub fn quad(&self) -> SMatrix<f64, D, D> {
        SMatrix::from_fn(|i, j| {
            if i == j {
                self.sigma[i] * self.sigma[i]
            } else {
                -self.kappa * self.sigma[i] * self.sigma[j]
            }
        })
    }

    /// `(det 2A / π^D)^{1/4}`.
    pub fn norm(&self) -> f64 {
        let det = small_det(&(self.quad() * 2.0));
        (det / PI.powi(D as i32)).powf(0.25)
    }

    /// Prefactor polynomial of `∂f/∂q` for a coordinate `q` of mode `mode`.
    pub fn derivative_poly(&self, mode: usize, coord: Coordinate) -> Poly<D> {
        let a = self.quad();
        let mut p = Poly::zero();
        match coord {
            Coordinate::Center => {
                // −∂/∂x of the exponent
                for j in 0..D {
                    p.add_term(unit(j), C64::new(2.0 * a[(mode, j)], 0.0));
                }
                p.add_term([0; D], C64::new(0.0, self.carrier[mode]));
            }
            Coordinate::Carrier => {
                p.add_term(unit(mode), C64::new(0.0, -1.0));
            }
            Coordinate::Bandwidth => {
                let s = self.sigma[mode];
                p.add_term([0; D], C64::new(0.5 / s, 0.0));
                let mut sq = [0u32; D];
                sq[mode] = 2;
                p.add_term(sq, C64::new(-2.0 * s, 0.0));
                for j in 0..D {
                    if j != mode {
                        let mut cross = unit::<D>(mode);
                        cross[j] += 1;
                        p.add_term(cross, C64::new(2.0 * self.kappa * self.sigma[j], 0.0));
                    }
                }
            }
        }
        p
    }

    /// Copy with one native coordinate displaced by `h`.
    pub fn displaced(&self, mode: usize, coord: Coordinate, h: f64) -> Self {
        let mut out = *self;
        match coord {
            Coordinate::Center => out.center[mode] += h,
            Coordinate::Carrier => out.carrier[mode] += h,
            Coordinate::Bandwidth => out.sigma[mode] += h,
        }
        out
    }

    fn key(&self, out: &mut Vec<f64>) {
        out.extend_from_slice(&self.center);
        out.extend_from_slice(&self.carrier);
        out.extend_from_slice(&self.sigma);
        out.push(self.kappa);
    }
}

// Packets have one or two modes; closed forms avoid generic-dimension bounds.
fn small_det<const D: usize>(m: &SMatrix<f64, D, D>) -> f64 {
    match D {
        1 => m[(0, 0)],
        2 => m[(0, 0)] * m[(1, 1)] - m[(0, 1)] * m[(1, 0)],
        _ => unreachable!("packets have one or two modes"),
    }
}

fn small_inv<const D: usize>(m: &SMatrix<f64, D, D>, det: f64) -> SMatrix<f64, D, D> {
    match D {
        1 => SMatrix::from_element(1.0 / det),
        2 => SMatrix::from_fn(|i, j| {
            let v = if i == j { m[(1 - i, 1 - j)] } else { -m[(i, j)] };
            v / det
        }),
        _ => unreachable!("packets have one or two modes"),
    }
}

fn unit<const D: usize>(i: usize) -> [u32; D] {
    let mut e = [0u32; D];
    e[i] = 1;
    e
}

/// Sparse complex polynomial in `D` variables.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Poly<const D: usize> {
    terms: BTreeMap<[u32; D], C64>,
}

impl<const D: usize> Poly<D> {
    pub fn zero() -> Self {
        Self { terms: BTreeMap::new() }
    }

    pub fn one() -> Self {
        Self::constant(C64::new(1.0, 0.0))
    }

    pub fn constant(c: C64) -> Self {
        let mut p = Self::zero();
        p.add_term([0; D], c);
        p
    }

    pub fn add_term(&mut self, exps: [u32; D], c: C64) {
        *self.terms.entry(exps).or_insert(C64::new(0.0, 0.0)) += c;
    }

    pub fn terms(&self) -> impl Iterator<Item = (&[u32; D], &C64)> {
        self.terms.iter()
    }

    pub fn degree(&self) -> u32 {
        self.terms.keys().map(|e| e.iter().sum()).max().unwrap_or(0)
    }

    pub fn scaled(&self, s: C64) -> Self {
        Self { terms: self.terms.iter().map(|(e, c)| (*e, c * s)).collect() }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.add_term(*e, *c);
        }
        out
    }

    pub fn conj(&self) -> Self {
        Self { terms: self.terms.iter().map(|(e, c)| (*e, c.conj())).collect() }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let mut e = [0u32; D];
                for i in 0..D {
                    e[i] = ea[i] + eb[i];
                }
                out.add_term(e, ca * cb);
            }
        }
        out
    }

    /// `Q(y) = P(y + s)`.
    pub fn shifted(&self, s: &[C64; D]) -> Self {
        let mut out = Self::zero();
        for (e, c) in &self.terms {
            // expand Π_i (y_i + s_i)^{e_i}
            let mut partial: Vec<([u32; D], C64)> = vec![([0; D], *c)];
            for i in 0..D {
                let n = e[i];
                let mut next = Vec::with_capacity(partial.len() * (n as usize + 1));
                for (pe, pc) in &partial {
                    for k in 0..=n {
                        let mut ne = *pe;
                        ne[i] += k;
                        let coef = binomial(n, k) * s[i].powu(n - k);
                        next.push((ne, pc * coef));
                    }
                }
                partial = next;
            }
            for (pe, pc) in partial {
                out.add_term(pe, pc);
            }
        }
        out
    }

    pub fn eval(&self, x: &[f64; D]) -> C64 {
        self.terms
            .iter()
            .map(|(e, c)| {
                let m: f64 = (0..D).map(|i| x[i].powi(e[i] as i32)).product();
                c * m
            })
            .sum()
    }

    fn key(&self, out: &mut Vec<f64>) {
        out.push(self.terms.len() as f64);
        for (e, c) in &self.terms {
            out.extend(e.iter().map(|&v| v as f64));
            out.push(c.re);
            out.push(c.im);
        }
    }
}

fn binomial(n: u32, k: u32) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Moments `E[yᵐ]` of a centred Gaussian with covariance `cov`, via Stein's
/// identity `E[y_i f(y)] = Σ_j cov_ij E[∂_j f(y)]`.
struct CentredMoments<'a, const D: usize> {
    cov: &'a SMatrix<f64, D, D>,
    memo: HashMap<[u32; D], f64>,
}

impl<'a, const D: usize> CentredMoments<'a, D> {
    fn new(cov: &'a SMatrix<f64, D, D>) -> Self {
        Self { cov, memo: HashMap::new() }
    }

    fn get(&mut self, m: [u32; D]) -> f64 {
        let total: u32 = m.iter().sum();
        if total == 0 {
            return 1.0;
        }
        if total % 2 == 1 {
            return 0.0;
        }
        if let Some(v) = self.memo.get(&m) {
            return *v;
        }
        let i = m.iter().position(|&v| v > 0).expect("non-zero multi-index");
        let mut rest = m;
        rest[i] -= 1;
        let mut acc = 0.0;
        for j in 0..D {
            if rest[j] > 0 {
                let mut lower = rest;
                lower[j] -= 1;
                acc += self.cov[(i, j)] * rest[j] as f64 * self.get(lower);
            }
        }
        self.memo.insert(m, acc);
        acc
    }
}

/// Polynomial prefactor on a Gaussian envelope.
#[derive(Debug, Clone, PartialEq)]
pub struct Packet<const D: usize> {
    pub envelope: Envelope<D>,
    pub poly: Poly<D>,
}

impl<const D: usize> Packet<D> {
    pub fn plain(envelope: Envelope<D>) -> Self {
        Self { envelope, poly: Poly::one() }
    }

    pub fn eval(&self, t: &[f64; D]) -> C64 {
        let env = &self.envelope;
        let a = env.quad();
        let x: SVector<f64, D> = SVector::from_fn(|i, _| t[i] - env.center[i]);
        let quad = (x.transpose() * a * x)[(0, 0)];
        let phase: f64 = (0..D).map(|i| env.carrier[i] * x[i]).sum();
        let xs: [f64; D] = std::array::from_fn(|i| x[i]);
        self.poly.eval(&xs) * env.norm() * (C64::new(-quad, -phase)).exp()
    }

    fn key(&self, out: &mut Vec<f64>) {
        self.envelope.key(out);
        self.poly.key(out);
    }

    /// `⟨self|other⟩ = ∫ conj(self) · other`, evaluated in a canonical order so
    /// that swapping the arguments conjugates the result exactly.
    pub fn overlap(&self, other: &Self) -> C64 {
        match compare_keys(&key_of(|v| self.key(v)), &key_of(|v| other.key(v))) {
            Ordering::Greater => raw_overlap(other, self).conj(),
            _ => raw_overlap(self, other),
        }
    }
}

fn key_of(f: impl FnOnce(&mut Vec<f64>)) -> Vec<f64> {
    let mut v = Vec::new();
    f(&mut v);
    v
}

fn compare_keys(a: &[f64], b: &[f64]) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        match x.total_cmp(y) {
            Ordering::Equal => continue,
            o => return o,
        }
    }
    a.len().cmp(&b.len())
}

fn raw_overlap<const D: usize>(a: &Packet<D>, b: &Packet<D>) -> C64 {
    let ea = &a.envelope;
    let eb = &b.envelope;
    let qa = ea.quad();
    let qb = eb.quad();
    let k = qa + qb;
    let det_k = small_det(&k);
    let k_inv = small_inv(&k, det_k);

    // Work in coordinates centred on `a`; `b` sits at offset `d`.
    let d: SVector<f64, D> = SVector::from_fn(|i, _| eb.center[i] - ea.center[i]);
    let dw: SVector<f64, D> = SVector::from_fn(|i, _| ea.carrier[i] - eb.carrier[i]);
    let wb: SVector<f64, D> = SVector::from_fn(|i, _| eb.carrier[i]);

    let qb_d = qb * d;
    let re = -(d.transpose() * qb * k_inv * qa * d)[(0, 0)] - 0.25 * (dw.transpose() * k_inv * dw)[(0, 0)];
    let im = (qb_d.transpose() * k_inv * dw)[(0, 0)] + wb.dot(&d);

    let mean_re = k_inv * qb_d;
    let mean_im = k_inv * dw * 0.5;
    let mu: [C64; D] = std::array::from_fn(|i| C64::new(mean_re[i], mean_im[i]));
    let mu_minus_d: [C64; D] = std::array::from_fn(|i| C64::new(mean_re[i] - d[i], mean_im[i]));

    let integrand = a.poly.conj().shifted(&mu).mul(&b.poly.shifted(&mu_minus_d));
    let cov = k_inv * 0.5;
    let mut moments = CentredMoments::new(&cov);
    let poly_avg: C64 = integrand.terms().map(|(e, c)| c * moments.get(*e)).sum();

    let gauss = ea.norm() * eb.norm() * PI.powf(D as f64 / 2.0) / det_k.sqrt();
    poly_avg * gauss * C64::new(re, im).exp()
}

/// Finite linear combination of packets.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Superposition<const D: usize> {
    pub terms: Vec<(C64, Packet<D>)>,
}

impl<const D: usize> Superposition<D> {
    pub fn single(p: Packet<D>) -> Self {
        Self { terms: vec![(C64::new(1.0, 0.0), p)] }
    }

    pub fn push(&mut self, c: C64, p: Packet<D>) {
        self.terms.push((c, p));
    }

    pub fn eval(&self, t: &[f64; D]) -> C64 {
        self.terms.iter().map(|(c, p)| c * p.eval(t)).sum()
    }

    fn key(&self, out: &mut Vec<f64>) {
        out.push(self.terms.len() as f64);
        for (c, p) in &self.terms {
            out.push(c.re);
            out.push(c.im);
            p.key(out);
        }
    }

    /// `⟨self|other⟩`; `a.overlap(b) == b.overlap(a).conj()` holds bitwise.
    pub fn overlap(&self, other: &Self) -> C64 {
        if compare_keys(&key_of(|v| self.key(v)), &key_of(|v| other.key(v))) == Ordering::Greater {
            return other.overlap(self).conj();
        }
        let mut acc = C64::new(0.0, 0.0);
        for (ca, pa) in &self.terms {
            for (cb, pb) in &other.terms {
                acc += ca.conj() * cb * pa.overlap(pb);
            }
        }
        acc
    }

    pub fn norm_sqr(&self) -> f64 {
        self.overlap(self).re
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn env1(t: f64, w: f64, s: f64) -> Envelope<1> {
        Envelope { center: [t], carrier: [w], sigma: [s], kappa: 0.0 }
    }

    #[test]
    fn stein_moments_match_isserlis() {
        let cov = SMatrix::<f64, 2, 2>::new(2.0, 0.3, 0.3, 0.5);
        let mut m = CentredMoments::new(&cov);
        assert_eq!(m.get([2, 0]), 2.0);
        assert!((m.get([1, 1]) - 0.3).abs() < 1e-15);
        assert!((m.get([4, 0]) - 3.0 * 4.0).abs() < 1e-12);
        // E[y1² y2²] = Σ11 Σ22 + 2 Σ12²
        assert!((m.get([2, 2]) - (1.0 + 2.0 * 0.09)).abs() < 1e-12);
        assert_eq!(m.get([1, 2]), 0.0);
    }

    #[test]
    fn shifted_polynomial_matches_direct_evaluation() {
        let mut p = Poly::<2>::zero();
        p.add_term([2, 1], C64::new(1.5, -0.5));
        p.add_term([0, 1], C64::new(0.0, 2.0));
        p.add_term([0, 0], C64::new(-1.0, 0.0));
        let s = [C64::new(0.3, 0.0), C64::new(-1.2, 0.0)];
        let q = p.shifted(&s);
        let y = [0.7, -0.4];
        let direct = p.eval(&[y[0] + 0.3, y[1] - 1.2]);
        assert!((q.eval(&y) - direct).norm() < 1e-13);
    }

    #[test]
    fn plain_packet_is_normalised() {
        let p = Packet::plain(env1(3.0, 5.0, 0.7));
        assert!((p.overlap(&p) - 1.0).norm() < 1e-14);
        let e2 = Envelope { center: [1.0, -2.0], carrier: [4.0, 1.0], sigma: [0.5, 2.0], kappa: -0.6 };
        let p2 = Packet::plain(e2);
        assert!((p2.overlap(&p2) - 1.0).norm() < 1e-14);
    }

    #[test]
    fn overlap_is_conjugate_symmetric_bitwise() {
        let a = Packet::plain(env1(0.0, 1.0, 1.0));
        let mut b = Packet::plain(env1(0.4, -0.3, 1.3));
        b.poly = b.envelope.derivative_poly(0, Coordinate::Bandwidth);
        assert_eq!(a.overlap(&b), b.overlap(&a).conj());
    }
}

//! Numerical quantum Fisher information for finite Gaussian ensembles.
//!
//! The engine never uses a closed-form QFI. It spans the branch states and
//! their parameter derivatives with an orthonormal basis built from exact
//! overlaps, projects `ρ` and `∂ρ` onto it, solves for the symmetric
//! logarithmic derivative in the eigenbasis of `ρ` and contracts.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::analytic::QfiResult;
use crate::error::{domain, Error, Result};
use crate::gaussian::{
    Branch, GaussianBiphoton, GaussianEnsemble, GaussianSinglePhoton, MixedPoint, Param, Superposition, TraceConvention,
};
use crate::kinematics::{ParameterPair, Strategy};

type C64 = Complex64;

/// Default relative step for central differences.
pub const FD_REL_STEP: f64 = 1e-5;

/// How `∂ρ` is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum DerivativeMode {
    Analytic,
    /// Central differences of the branch parameters; the step is `rel_step`
    /// times `1/σ` for times and `σ` for frequencies and bandwidths.
    CentralDifference {
        rel_step: f64,
    },
}

/// Order in which subspace generators are listed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GeneratorOrder {
    /// All branch states, then derivatives grouped by parameter.
    Natural,
    Reversed,
    /// Each branch followed by its own derivatives.
    Interleaved,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OracleSettings {
    /// Gram eigenvalues below `drop_tol · λ_max` are discarded.
    pub drop_tol: f64,
    /// Eigenvalues of `ρ` below `support_tol · Tr ρ` are treated as null.
    pub support_tol: f64,
    pub derivatives: DerivativeMode,
    pub order: GeneratorOrder,
}

impl Default for OracleSettings {
    fn default() -> Self {
        Self {
            drop_tol: 1e-12,
            support_tol: 1e-12,
            derivatives: DerivativeMode::Analytic,
            order: GeneratorOrder::Natural,
        }
    }
}

impl OracleSettings {
    pub fn finite_difference(rel_step: f64) -> Self {
        Self { derivatives: DerivativeMode::CentralDifference { rel_step }, ..Self::default() }
    }

    pub fn with_order(self, order: GeneratorOrder) -> Self {
        Self { order, ..self }
    }
}

/// Orthonormal basis `e_k = Σ_i W_ik g_i` of the span of the generators.
#[derive(Debug, Clone)]
pub struct SubspaceBasis<const D: usize> {
    pub generators: Vec<Superposition<D>>,
    pub gram: DMatrix<C64>,
    pub transform: DMatrix<C64>,
    /// Gram eigenvalues of the unit-normalised generators, descending.
    pub gram_eigenvalues: Vec<f64>,
    pub drop_tol: f64,
}

impl<const D: usize> SubspaceBasis<D> {
    pub fn dim(&self) -> usize {
        self.transform.ncols()
    }

    /// `max |W†GW − 1|`.
    pub fn orthonormality_error(&self) -> f64 {
        let m = self.transform.adjoint() * &self.gram * &self.transform;
        let id = DMatrix::<C64>::identity(m.nrows(), m.ncols());
        (m - id).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Coordinates `⟨e_k|s⟩` and the relative squared norm left outside the span.
    pub fn coords(&self, s: &Superposition<D>) -> (DVector<C64>, f64) {
        let g = DVector::from_iterator(self.generators.len(), self.generators.iter().map(|gi| gi.overlap(s)));
        let c = self.transform.adjoint() * g;
        let norm = s.norm_sqr();
        let inside: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        let residual = if norm > 0.0 { ((norm - inside) / norm).max(0.0) } else { 0.0 };
        (c, residual)
    }
}

/// Builds an orthonormal basis of the generators' span. Generators are first
/// scaled to unit norm (zero ones are skipped), then the Gram matrix is
/// diagonalised and directions with eigenvalue at most `drop_tol · λ_max` dropped.
pub fn build_subspace<const D: usize>(generators: &[Superposition<D>], drop_tol: f64) -> Result<SubspaceBasis<D>> {
    if !(drop_tol > 0.0 && drop_tol < 1.0) {
        return domain(format!("drop tolerance must lie in (0, 1), got {drop_tol}"));
    }
    let gens: Vec<Superposition<D>> = generators
        .iter()
        .filter_map(|g| {
            let n = g.norm_sqr();
            (n > 0.0).then(|| Superposition { terms: g.terms.iter().map(|(c, p)| (c / n.sqrt(), p.clone())).collect() })
        })
        .collect();
    if gens.is_empty() {
        return domain("no non-zero generators");
    }
    let n = gens.len();
    let mut gram = DMatrix::<C64>::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = gens[i].overlap(&gens[j]);
            gram[(i, j)] = v;
            gram[(j, i)] = v.conj();
        }
        gram[(i, i)] = C64::new(gram[(i, i)].re, 0.0);
    }
    if gram.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
        return Err(Error::Numeric("non-finite Gram entry".into()));
    }

    let (values, vectors) = sorted_eigen(&gram);
    let lmax = values[0];
    let lmin = *values.last().unwrap();
    if lmin < -1e3 * drop_tol * lmax {
        return Err(Error::Conditioning(format!("Gram eigenvalue {lmin:e} against largest {lmax:e}")));
    }
    let keep: Vec<usize> = (0..n).filter(|&k| values[k] > drop_tol * lmax).collect();
    let mut transform = DMatrix::<C64>::zeros(n, keep.len());
    for (col, &k) in keep.iter().enumerate() {
        let s = 1.0 / values[k].sqrt();
        for i in 0..n {
            transform[(i, col)] = vectors[(i, k)] * s;
        }
    }
    Ok(SubspaceBasis { generators: gens, gram, transform, gram_eigenvalues: values, drop_tol })
}

/// Eigen-decomposition with eigenvalues descending and every eigenvector's
/// first non-negligible component made real and positive.
fn sorted_eigen(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let eig = SymmetricEigen::new(m.clone());
    let n = m.nrows();
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| eig.eigenvalues[b].total_cmp(&eig.eigenvalues[a]));
    let values: Vec<f64> = idx.iter().map(|&k| eig.eigenvalues[k]).collect();
    let mut vectors = DMatrix::<C64>::zeros(n, n);
    for (col, &k) in idx.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let big = v.iter().map(|z| z.norm()).fold(0.0, f64::max);
        let phase = v.iter().find(|z| z.norm() > 1e-8 * big).map(|z| z.conj() / z.norm()).unwrap_or(C64::new(1.0, 0.0));
        for i in 0..n {
            vectors[(i, col)] = v[i] * phase;
        }
    }
    (values, vectors)
}

/// `ρ` and `∂ρ` in an orthonormal basis.
#[derive(Debug, Clone)]
pub struct ProjectedState {
    pub rho: DMatrix<C64>,
    pub drho: Vec<DMatrix<C64>>,
    /// Largest relative squared norm of a projected vector outside the basis.
    pub span_residual: f64,
}

impl ProjectedState {
    pub fn trace(&self) -> f64 {
        self.rho.trace().re
    }

    pub fn derivative_traces(&self) -> Vec<f64> {
        self.drho.iter().map(|d| d.trace().norm()).collect()
    }
}

/// Projects the ensemble and its derivatives along `params` onto `basis`.
pub fn project<const D: usize>(
    ensemble: &GaussianEnsemble<D>,
    basis: &SubspaceBasis<D>,
    params: &[Param],
    mode: DerivativeMode,
) -> Result<ProjectedState> {
    ensemble.validate()?;
    let r = basis.dim();
    let mut span = 0.0f64;
    let mut coords = |s: &Superposition<D>| {
        let (c, res) = basis.coords(s);
        span = span.max(res);
        c
    };
    let outer = |a: &DVector<C64>, b: &DVector<C64>| a * b.adjoint();

    let mut rho = DMatrix::<C64>::zeros(r, r);
    let mut drho = vec![DMatrix::<C64>::zeros(r, r); params.len()];
    for b in &ensemble.branches {
        let c = coords(&Superposition::single(b.packet()));
        rho += outer(&c, &c) * C64::new(b.weight, 0.0);
        for (p, param) in params.iter().enumerate() {
            let term = match mode {
                DerivativeMode::Analytic => {
                    let d = coords(&Superposition::single(b.derivative(*param)?));
                    outer(&d, &c) + outer(&c, &d)
                }
                DerivativeMode::CentralDifference { rel_step } => {
                    let h = fd_step(b, *param, rel_step)?;
                    let plus = coords(&Superposition::single(b.displaced(*param, h).packet()));
                    let minus = coords(&Superposition::single(b.displaced(*param, -h).packet()));
                    (outer(&plus, &plus) - outer(&minus, &minus)) / C64::new(2.0 * h, 0.0)
                }
            };
            drho[p] += term * C64::new(b.weight, 0.0);
        }
    }
    let bound = 10.0 * basis.drop_tol;
    if span > bound {
        return Err(Error::Span { residual: span, bound });
    }
    Ok(ProjectedState { rho, drho, span_residual: span })
}

fn fd_step<const D: usize>(b: &Branch<D>, param: Param, rel_step: f64) -> Result<f64> {
    if !(rel_step > 0.0 && rel_step.is_finite()) {
        return domain(format!("relative step must be positive, got {rel_step}"));
    }
    Ok(rel_step * param.scale(b.min_sigma()))
}

/// Symmetric logarithmic derivatives in the eigenbasis of `ρ`.
#[derive(Debug, Clone)]
pub struct SldSolution {
    /// Eigenvalues of `ρ`, descending.
    pub eigenvalues: Vec<f64>,
    /// Columns are the eigenvectors of `ρ` in the projection basis.
    pub eigenvectors: DMatrix<C64>,
    /// One SLD per parameter, in the eigenbasis of `ρ`.
    pub slds: Vec<DMatrix<C64>>,
    /// Number of eigenvalues above the support threshold.
    pub support: usize,
    /// `max |∂ρ − (ρL + Lρ)/2|` over entries touching the support.
    pub residual: f64,
    /// `max |∂ρ|` on the null block, where no SLD can absorb it.
    pub kernel_leak: f64,
}

impl SldSolution {
    pub fn rho(&self) -> DMatrix<C64> {
        let n = self.eigenvalues.len();
        DMatrix::from_fn(n, n, |i, j| if i == j { C64::new(self.eigenvalues[i], 0.0) } else { C64::new(0.0, 0.0) })
    }

    /// `Tr(ρ L_a L_b)`.
    pub fn trace_product(&self, a: usize, b: usize) -> C64 {
        let prod = &self.slds[a] * &self.slds[b];
        self.eigenvalues.iter().enumerate().map(|(i, &l)| prod[(i, i)] * l).sum()
    }

    /// `Tr(ρ L)` for every SLD.
    pub fn means(&self) -> Vec<f64> {
        self.slds
            .iter()
            .map(|l| self.eigenvalues.iter().enumerate().map(|(i, &w)| l[(i, i)] * w).sum::<C64>().norm())
            .collect()
    }
}

/// Solves `∂ρ = (ρL + Lρ)/2` on the support of `ρ`:
/// `L_ij = 2⟨i|∂ρ|j⟩/(λ_i + λ_j)` whenever `λ_i` or `λ_j` exceeds `support_tol · Tr ρ`.
pub fn sld_solve(projected: &ProjectedState, support_tol: f64) -> Result<SldSolution> {
    let (raw, u) = sorted_eigen(&projected.rho);
    let trace = projected.trace();
    if !(trace > 0.0) {
        return Err(Error::Numeric(format!("state has trace {trace}")));
    }
    let threshold = support_tol * trace;
    let lam: Vec<f64> = raw.iter().map(|&l| l.max(0.0)).collect();
    let n = lam.len();
    let support = lam.iter().filter(|&&l| l > threshold).count();

    let mut slds = Vec::with_capacity(projected.drho.len());
    let mut residual = 0.0f64;
    let mut kernel_leak = 0.0f64;
    for d in &projected.drho {
        let dd = u.adjoint() * d * &u;
        let scale = dd.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let mut l = DMatrix::<C64>::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                if lam[i] > threshold || lam[j] > threshold {
                    l[(i, j)] = dd[(i, j)] * (2.0 / (lam[i] + lam[j]));
                } else {
                    kernel_leak = kernel_leak.max(dd[(i, j)].norm());
                }
            }
        }
        for i in 0..n {
            for j in 0..n {
                if lam[i] > threshold || lam[j] > threshold {
                    let back = l[(i, j)] * (0.5 * (lam[i] + lam[j]));
                    residual = residual.max((dd[(i, j)] - back).norm() / scale);
                }
            }
        }
        slds.push(l);
    }
    if residual > 1e-9 {
        return Err(Error::Numeric(format!("SLD reconstruction residual {residual:e}")));
    }
    Ok(SldSolution { eigenvalues: lam, eigenvectors: u, slds, support, residual, kernel_leak })
}

/// `H_ab = Re Tr(ρ L_a L_b)` and `|Tr ρ[L_a, L_b]| = 2|Im Tr(ρ L_a L_b)|`.
pub fn qfi_from_sld(sol: &SldSolution) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = sol.slds.len();
    let mut h = DMatrix::zeros(n, n);
    let mut c = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let t = sol.trace_product(a, b);
            h[(a, b)] = t.re;
            c[(a, b)] = 2.0 * t.im.abs();
        }
    }
    (h, c)
}

/// Pure-state formula `H_ab = 4 Re(⟨∂_a|∂_b⟩ − ⟨∂_a|ψ⟩⟨ψ|∂_b⟩)`; the second
/// matrix holds `8|Im(…)|`, the commutator expectation for a pure state.
pub fn pure_state_qfi<const D: usize>(
    psi: &Superposition<D>,
    derivs: &[Superposition<D>],
) -> (DMatrix<f64>, DMatrix<f64>) {
    let n = derivs.len();
    let proj: Vec<C64> = derivs.iter().map(|d| psi.overlap(d)).collect();
    let mut h = DMatrix::zeros(n, n);
    let mut c = DMatrix::zeros(n, n);
    for a in 0..n {
        for b in 0..n {
            let q = derivs[a].overlap(&derivs[b]) - proj[a].conj() * proj[b];
            h[(a, b)] = 4.0 * q.re;
            c[(a, b)] = 8.0 * q.im.abs();
        }
    }
    (h, c)
}

/// Everything one oracle evaluation produced.
#[derive(Debug, Clone)]
pub struct OracleReport {
    pub params: Vec<Param>,
    pub h: DMatrix<f64>,
    pub compat: DMatrix<f64>,
    /// `max |H − Hᵀ|` before symmetrisation.
    pub asymmetry: f64,
    pub generator_count: usize,
    pub dim: usize,
    pub support: usize,
    pub rho_eigenvalues: Vec<f64>,
    pub trace: f64,
    pub derivative_traces: Vec<f64>,
    pub span_residual: f64,
    pub orthonormality_error: f64,
    pub sld_residual: f64,
    pub kernel_leak: f64,
    /// `|Tr ρ L|` per parameter.
    pub sld_means: Vec<f64>,
    pub slds: Vec<DMatrix<C64>>,
    /// Pure-state formula, when the ensemble has a single branch.
    pub pure_h: Option<DMatrix<f64>>,
}

impl OracleReport {
    /// `max |H_sld − H_pure| / max |H_pure|`, when a pure path exists.
    pub fn pure_path_gap(&self) -> Option<f64> {
        self.pure_h.as_ref().map(|p| {
            let scale = p.iter().map(|v| v.abs()).fold(f64::MIN_POSITIVE, f64::max);
            (&self.h - p).iter().map(|v| v.abs()).fold(0.0, f64::max) / scale
        })
    }

    pub fn max_compat(&self) -> f64 {
        self.compat.iter().copied().fold(0.0, f64::max)
    }
}

/// The subspace generators for an ensemble and a parameter list, in `order`.
pub fn generators<const D: usize>(
    ensemble: &GaussianEnsemble<D>,
    params: &[Param],
    order: GeneratorOrder,
) -> Result<Vec<Superposition<D>>> {
    let state = |b: &Branch<D>| Superposition::single(b.packet());
    let deriv = |b: &Branch<D>, p: Param| b.derivative(p).map(Superposition::single);
    let mut out = Vec::new();
    match order {
        GeneratorOrder::Natural | GeneratorOrder::Reversed => {
            out.extend(ensemble.branches.iter().map(state));
            for &p in params {
                for b in &ensemble.branches {
                    out.push(deriv(b, p)?);
                }
            }
            if order == GeneratorOrder::Reversed {
                out.reverse();
            }
        }
        GeneratorOrder::Interleaved => {
            for b in &ensemble.branches {
                out.push(state(b));
                for &p in params {
                    out.push(deriv(b, p)?);
                }
            }
        }
    }
    Ok(out)
}

/// Full oracle pipeline for any finite ensemble and parameter list.
pub fn oracle_qfi<const D: usize>(
    ensemble: &GaussianEnsemble<D>,
    params: &[Param],
    settings: &OracleSettings,
) -> Result<OracleReport> {
    if params.is_empty() {
        return domain("no parameters to estimate");
    }
    let gens = generators(ensemble, params, settings.order)?;
    let basis = build_subspace(&gens, settings.drop_tol)?;
    let projected = project(ensemble, &basis, params, settings.derivatives)?;
    let sol = sld_solve(&projected, settings.support_tol)?;
    let (h_raw, compat) = qfi_from_sld(&sol);
    let asymmetry = (&h_raw - h_raw.transpose()).iter().map(|v| v.abs()).fold(0.0, f64::max);
    let h = (&h_raw + h_raw.transpose()) * 0.5;

    let pure_h = if ensemble.is_pure() {
        let b = &ensemble.branches[0];
        let derivs = params.iter().map(|&p| b.derivative(p).map(Superposition::single)).collect::<Result<Vec<_>>>()?;
        let (ph, _) = pure_state_qfi(&Superposition::single(b.packet()), &derivs);
        Some(ph * b.weight)
    } else {
        None
    };

    Ok(OracleReport {
        params: params.to_vec(),
        h,
        compat,
        asymmetry,
        generator_count: basis.generators.len(),
        dim: basis.dim(),
        support: sol.support,
        rho_eigenvalues: sol.eigenvalues.clone(),
        trace: projected.trace(),
        derivative_traces: projected.derivative_traces(),
        span_residual: projected.span_residual,
        orthonormality_error: basis.orthonormality_error(),
        sld_residual: sol.residual,
        kernel_leak: sol.kernel_leak,
        sld_means: sol.means(),
        slds: sol.slds,
        pure_h,
    })
}

fn pair_result(strategy: Strategy, pair: ParameterPair, report: &OracleReport) -> QfiResult {
    let h = [[report.h[(0, 0)], report.h[(0, 1)]], [report.h[(1, 0)], report.h[(1, 1)]]];
    QfiResult::new(strategy, pair, h, report.compat[(0, 1)])
}

/// Oracle QFI of a strategy at a local point for one parameter pair.
pub fn qfi_numeric(
    strategy: Strategy,
    point: &MixedPoint,
    pair: ParameterPair,
    convention: TraceConvention,
    settings: &OracleSettings,
) -> Result<(QfiResult, OracleReport)> {
    let params = Param::of_pair(pair);
    let report = match strategy {
        Strategy::EntangledBiphoton => oracle_qfi(&point.entangled_ensemble()?, &params, settings)?,
        Strategy::TwoSinglePhotons => oracle_qfi(&point.single_photon_ensemble(convention)?, &params, settings)?,
        Strategy::QuantumIllumination => oracle_qfi(&point.illumination_ensemble(convention)?, &params, settings)?,
    };
    Ok((pair_result(strategy, pair, &report), report))
}

/// Oracle QFI of an arbitrary biphoton, photon `m` from target `m`.
pub fn qfi_numeric_biphoton(
    state: &GaussianBiphoton,
    pair: ParameterPair,
    settings: &OracleSettings,
) -> Result<(QfiResult, OracleReport)> {
    let report = oracle_qfi(&GaussianEnsemble::pure_biphoton(state)?, &Param::of_pair(pair), settings)?;
    Ok((pair_result(Strategy::EntangledBiphoton, pair, &report), report))
}

/// Quadrature grid for [`grid_crosscheck`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Half-width in units of the widest standard deviation of `|φ|²`.
    pub half_width_sd: f64,
    /// Minimum points per axis.
    pub points: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { half_width_sd: 8.0, points: 512 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub norm: f64,
    pub norm_error: f64,
    /// Largest `|analytic − quadrature|` over the partner overlaps.
    pub max_overlap_error: f64,
    pub half_width: f64,
    pub points: usize,
}

fn check_grid(spec: &GridSpec) -> Result<()> {
    if !(spec.half_width_sd >= 8.0) || spec.points < 512 {
        return domain("grid must span at least 8 standard deviations with at least 512 points per axis");
    }
    Ok(())
}

/// Points per axis so the spacing resolves the narrowest standard deviation.
fn grid_points(spec: &GridSpec, half: f64, sd_min: f64) -> usize {
    let needed = (2.0 * half / (sd_min / 3.0)).ceil() as usize;
    spec.points.max(needed)
}

/// Midpoint-rule overlaps of a biphoton with itself and with displaced copies,
/// against the closed forms. The grid follows the principal widths of `|φ|²`.
pub fn grid_crosscheck(state: &GaussianBiphoton, spec: &GridSpec) -> Result<GridReport> {
    state.validate()?;
    check_grid(spec)?;
    let cov = state.time_covariance();
    let eig = cov.symmetric_eigenvalues();
    let (sd_min, sd_max) = (eig.min().sqrt(), eig.max().sqrt());
    let half = spec.half_width_sd * sd_max;
    let n = grid_points(spec, half, sd_min);
    let h = 2.0 * half / n as f64;

    let partners = [
        GaussianBiphoton { t1_bar: state.t1_bar + 0.5 / state.sigma1, ..*state },
        GaussianBiphoton { omega2_bar: state.omega2_bar + 0.7 * state.sigma2, ..*state },
        GaussianBiphoton {
            t2_bar: state.t2_bar - 0.3 / state.sigma2,
            omega1_bar: state.omega1_bar - 0.4 * state.sigma1,
            sigma1: state.sigma1 * 1.1,
            ..*state
        },
    ];
    let base = state.packet();
    let others: Vec<_> = partners.iter().map(|p| p.packet()).collect();
    let mut norm = 0.0;
    let mut acc = vec![C64::new(0.0, 0.0); others.len()];
    for i in 0..n {
        let t1 = state.t1_bar - half + (i as f64 + 0.5) * h;
        for j in 0..n {
            let t2 = state.t2_bar - half + (j as f64 + 0.5) * h;
            let a = base.eval(&[t1, t2]);
            norm += a.norm_sqr();
            for (k, o) in others.iter().enumerate() {
                acc[k] += a.conj() * o.eval(&[t1, t2]);
            }
        }
    }
    norm *= h * h;
    let mut max_err = (norm - 1.0).abs();
    for (k, o) in others.iter().enumerate() {
        max_err = max_err.max((acc[k] * (h * h) - base.overlap(o)).norm());
    }
    Ok(GridReport { norm, norm_error: (norm - 1.0).abs(), max_overlap_error: max_err, half_width: half, points: n })
}

/// One-dimensional counterpart of [`grid_crosscheck`]; partners are `others`.
pub fn grid_crosscheck_single(
    state: &GaussianSinglePhoton,
    others: &[GaussianSinglePhoton],
    spec: &GridSpec,
) -> Result<GridReport> {
    state.envelope().validate()?;
    check_grid(spec)?;
    let sd = 0.5 / state.sigma;
    let sd_max = others.iter().map(|o| 0.5 / o.sigma).fold(sd, f64::max);
    let span_lo = others.iter().map(|o| o.t_bar).fold(state.t_bar, f64::min);
    let span_hi = others.iter().map(|o| o.t_bar).fold(state.t_bar, f64::max);
    let half = spec.half_width_sd * sd_max + 0.5 * (span_hi - span_lo);
    let centre = 0.5 * (span_lo + span_hi);
    let sd_min = others.iter().map(|o| 0.5 / o.sigma).fold(sd, f64::min);
    let n = grid_points(spec, half, sd_min);
    let h = 2.0 * half / n as f64;

    let base = state.packet();
    let packets: Vec<_> = others.iter().map(|o| o.packet()).collect();
    let mut norm = 0.0;
    let mut acc = vec![C64::new(0.0, 0.0); packets.len()];
    for i in 0..n {
        let t = centre - half + (i as f64 + 0.5) * h;
        let a = base.eval(&[t]);
        norm += a.norm_sqr();
        for (k, p) in packets.iter().enumerate() {
            acc[k] += a.conj() * p.eval(&[t]);
        }
    }
    norm *= h;
    let mut max_err = (norm - 1.0).abs();
    for (k, p) in packets.iter().enumerate() {
        max_err = max_err.max((acc[k] * h - base.overlap(p)).norm());
    }
    Ok(GridReport { norm, norm_error: (norm - 1.0).abs(), max_overlap_error: max_err, half_width: half, points: n })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn at(h: &DMatrix<f64>) -> [f64; 3] {
        [h[(0, 0)], h[(1, 1)], h[(0, 1)]]
    }

    #[test]
    fn subspace_dimensions() {
        let s = GaussianBiphoton::new(0.0, 0.0, 1.0, 2.0, 1.0, 1.0, 0.3).unwrap();
        let psi = Superposition::single(s.packet());
        assert_eq!(build_subspace(std::slice::from_ref(&psi), 1e-12).unwrap().dim(), 1);
        assert_eq!(build_subspace(&[psi.clone(), psi.clone()], 1e-12).unwrap().dim(), 1);

        let e = GaussianEnsemble::pure_biphoton(&s).unwrap();
        let params = Param::of_pair(ParameterPair::TimeSumFreqDiff);
        let b = build_subspace(&generators(&e, &params, GeneratorOrder::Natural).unwrap(), 1e-12).unwrap();
        assert_eq!(b.dim(), 3);
        assert!(b.orthonormality_error() < 1e-10);

        let p = MixedPoint { sigma: 1.0, kappa: 0.5, t_minus: 0.7, omega_minus: 0.4 };
        let qi = p.illumination_ensemble(TraceConvention::Normalized).unwrap();
        let b = build_subspace(&generators(&qi, &params, GeneratorOrder::Natural).unwrap(), 1e-12).unwrap();
        assert!(b.dim() <= 6);
        let sp = p.single_photon_ensemble(TraceConvention::Normalized).unwrap();
        let b = build_subspace(&generators(&sp, &params, GeneratorOrder::Natural).unwrap(), 1e-12).unwrap();
        assert_eq!(b.dim(), 4);

        assert!(build_subspace::<2>(&[], 1e-12).is_err());
        assert!(build_subspace(&[psi], 0.0).is_err());
    }

    #[test]
    fn projected_spectra() {
        let p = MixedPoint { sigma: 1.0, kappa: 0.0, t_minus: 80.0, omega_minus: 0.0 };
        let e = p.single_photon_ensemble(TraceConvention::Normalized).unwrap();
        let r = oracle_qfi(&e, &Param::of_pair(ParameterPair::TimeSumFreqDiff), &OracleSettings::default()).unwrap();
        assert_relative_eq!(r.rho_eigenvalues[0], 0.5, epsilon = 1e-12);
        assert_relative_eq!(r.rho_eigenvalues[1], 0.5, epsilon = 1e-12);
        assert_relative_eq!(r.trace, 1.0, epsilon = 1e-12);

        let s = p.biphoton().unwrap();
        let r = oracle_qfi(
            &GaussianEnsemble::pure_biphoton(&s).unwrap(),
            &Param::of_pair(ParameterPair::TimeSumFreqDiff),
            &OracleSettings::default(),
        )
        .unwrap();
        assert_eq!(r.support, 1);
        assert_relative_eq!(r.rho_eigenvalues[0], 1.0, epsilon = 1e-12);
    }

    #[test]
    fn overlapping_photons_have_binomial_spectrum() {
        let p = MixedPoint { sigma: 1.0, kappa: 0.0, t_minus: 0.6, omega_minus: 0.9 };
        let e = p.single_photon_ensemble(TraceConvention::PhotonCounted).unwrap();
        let r = oracle_qfi(&e, &Param::of_pair(ParameterPair::TimeSumFreqDiff), &OracleSettings::default()).unwrap();
        let overlap = crate::gaussian::overlap_single_modulus(1.0, 1.0, 0.6, 0.9);
        assert_relative_eq!(r.rho_eigenvalues[0], 1.0 + overlap, epsilon = 1e-12);
        assert_relative_eq!(r.rho_eigenvalues[1], 1.0 - overlap, epsilon = 1e-12);
    }

    #[test]
    fn pure_state_sld_is_twice_derivative() {
        let s = GaussianBiphoton::new(0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0).unwrap();
        let (res, rep) = qfi_numeric_biphoton(&s, ParameterPair::TimeSumFreqDiff, &OracleSettings::default()).unwrap();
        assert_relative_eq!(res.h[0][0], 2.0, epsilon = 1e-12);
        assert_relative_eq!(res.h[1][1], 0.5, epsilon = 1e-12);
        assert!(res.h[0][1].abs() < 1e-12);
        // off-diagonal entry of L in the eigenbasis: magnitude √H
        let l = &rep.slds[0];
        let off: f64 = (1..l.nrows()).map(|j| l[(0, j)].norm_sqr()).sum::<f64>().sqrt();
        assert_relative_eq!(off, 2.0f64.sqrt(), epsilon = 1e-12);
        assert!(rep.sld_means.iter().all(|m| *m < 1e-10));
        assert!(rep.pure_path_gap().unwrap() < 1e-12);
    }

    #[test]
    fn finite_difference_mode_agrees() {
        let p = MixedPoint { sigma: 1.3, kappa: -0.4, t_minus: 0.9, omega_minus: 0.5 };
        for strategy in Strategy::ALL {
            for pair in [ParameterPair::TimeSumFreqDiff, ParameterPair::TimeDiffFreqSum] {
                let (a, _) =
                    qfi_numeric(strategy, &p, pair, TraceConvention::Normalized, &OracleSettings::default()).unwrap();
                let fd = OracleSettings::finite_difference(FD_REL_STEP);
                let (b, _) = qfi_numeric(strategy, &p, pair, TraceConvention::Normalized, &fd).unwrap();
                assert_relative_eq!(a.h[0][0], b.h[0][0], max_relative = 1e-6);
                assert_relative_eq!(a.h[1][1], b.h[1][1], max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn generator_order_does_not_matter() {
        let p = MixedPoint { sigma: 0.8, kappa: 0.6, t_minus: 1.1, omega_minus: -0.7 };
        for strategy in Strategy::ALL {
            let base = qfi_numeric(
                strategy,
                &p,
                ParameterPair::TimeDiffFreqSum,
                TraceConvention::Normalized,
                &OracleSettings::default(),
            )
            .unwrap()
            .1;
            for order in [GeneratorOrder::Reversed, GeneratorOrder::Interleaved] {
                let s = OracleSettings::default().with_order(order);
                let r = qfi_numeric(strategy, &p, ParameterPair::TimeDiffFreqSum, TraceConvention::Normalized, &s)
                    .unwrap()
                    .1;
                for (x, y) in at(&base.h).iter().zip(at(&r.h)) {
                    assert!((x - y).abs() <= 1e-9 * x.abs().max(1.0), "{strategy:?} {order:?}: {x} vs {y}");
                }
            }
        }
    }

    #[test]
    fn missing_derivative_direction_is_a_span_error() {
        let s = GaussianBiphoton::new(0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.2).unwrap();
        let e = GaussianEnsemble::pure_biphoton(&s).unwrap();
        let basis = build_subspace(&[Superposition::single(s.packet())], 1e-12).unwrap();
        let err = project(&e, &basis, &[Param::TimeSum], DerivativeMode::Analytic).unwrap_err();
        assert!(matches!(err, Error::Span { .. }));
    }

    #[test]
    fn grid_checks() {
        let s = GaussianBiphoton::new(0.0, 0.5, 1.0, 2.0, 1.0, 1.0, 0.3).unwrap();
        let r = grid_crosscheck(&s, &GridSpec::default()).unwrap();
        assert!(r.norm_error < 1e-8 && r.max_overlap_error < 1e-8, "{r:?}");
        let wide = GaussianBiphoton { kappa: 0.9, ..s };
        let r = grid_crosscheck(&wide, &GridSpec::default()).unwrap();
        assert!(r.norm_error < 1e-6, "{r:?}");
        assert!(grid_crosscheck(&s, &GridSpec { half_width_sd: 4.0, points: 512 }).is_err());

        let a = GaussianSinglePhoton::new(0.0, 0.0, 1.0).unwrap();
        let b = GaussianSinglePhoton::new(0.0, 2.0, 1.0).unwrap();
        let r = grid_crosscheck_single(&a, &[b], &GridSpec::default()).unwrap();
        assert!(r.max_overlap_error < 1e-8);
    }
}

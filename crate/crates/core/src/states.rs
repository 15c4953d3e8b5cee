//! Truncated multi-matrix vector coherent states.
//!
//! A state over `τ` factors has coefficients
//! `N^{-1/2}·[C₁(m₁)⋯C_τ(m_τ)]_{i,j}` on the basis `χ^i ⊗ φ_{m₁} ⊗ ⋯ ⊗ φ_{m_τ}`,
//! where `C_k(m)` is the weighted matrix power of factor `k`. Coefficients
//! are stored flat with `idx = i·Π(M_k+1) + Σ m_k·stride_k`, strides
//! row-major over the mode indices.

use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypercomplex::clifford_scalar;
use crate::matrix::{herm_exp, psd_pow, ComplexMatrix, ONE, ZERO};
use crate::weights::{MatrixWeights, ScalarWeights};

pub const DEFAULT_TAIL_TOL: f64 = 1e-10;
/// Default cap on the number of stored complex entries.
pub const DEFAULT_MEMORY_CAP: usize = 1 << 26;
/// Relative size of the last term at which a series counts as converged.
const SERIES_REL_TOL: f64 = 1e-18;
const SERIES_START: usize = 32;
const SERIES_MAX: usize = 4096;

/// Spinor dimension and per-factor cutoffs `M_k` (indices `0..=M_k`).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationSpec {
    pub spinor_dim: usize,
    pub cutoffs: Vec<usize>,
}

impl TruncationSpec {
    pub fn new(spinor_dim: usize, cutoffs: Vec<usize>) -> Result<Self> {
        if spinor_dim == 0 {
            return Err(Error::InvalidParameter("spinor dimension must be positive".into()));
        }
        if cutoffs.is_empty() || cutoffs.contains(&0) {
            return Err(Error::InvalidParameter("every factor cutoff must be at least 1".into()));
        }
        Ok(Self { spinor_dim, cutoffs })
    }

    pub fn uniform(spinor_dim: usize, factors: usize, cutoff: usize) -> Result<Self> {
        Self::new(spinor_dim, vec![cutoff; factors])
    }

    /// `Π(M_k + 1)`.
    pub fn mode_size(&self) -> usize {
        self.cutoffs.iter().map(|m| m + 1).product()
    }

    pub fn total_size(&self) -> usize {
        self.spinor_dim * self.mode_size()
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.cutoffs.len()];
        for k in (0..self.cutoffs.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * (self.cutoffs[k + 1] + 1);
        }
        strides
    }

    pub fn flat_index(&self, i: usize, modes: &[usize]) -> usize {
        debug_assert_eq!(modes.len(), self.cutoffs.len());
        let strides = self.strides();
        i * self.mode_size() + modes.iter().zip(&strides).map(|(m, s)| m * s).sum::<usize>()
    }

    pub fn unflatten(&self, idx: usize) -> (usize, Vec<usize>) {
        let mode_size = self.mode_size();
        let (i, mut rest) = (idx / mode_size, idx % mode_size);
        let modes = self
            .strides()
            .iter()
            .map(|&s| {
                let m = rest / s;
                rest %= s;
                m
            })
            .collect();
        (i, modes)
    }

    pub fn check_memory(&self, entries: usize, cap: usize) -> Result<()> {
        if entries > cap {
            return Err(Error::MemoryCap { needed: entries, cap });
        }
        Ok(())
    }
}

/// How the matrix power of a factor is weighted.
#[derive(Debug, Clone)]
pub enum FactorWeight {
    /// `C(m) = A^m / √ρ(m)`.
    Scalar(ScalarWeights),
    /// `C(m) = R(m)·A^m`.
    Matrix(MatrixWeights),
    /// `C(m) = diag(ρ_1(m), …, ρ_n(m))^{-1/2}·A^m`.
    Diagonal(Vec<ScalarWeights>),
}

/// One factor of a state: the matrix `A` and its weight sequence.
#[derive(Debug, Clone)]
pub struct Factor {
    pub label: String,
    pub matrix: ComplexMatrix,
    pub weight: FactorWeight,
}

impl Factor {
    pub fn scalar(label: impl Into<String>, matrix: ComplexMatrix, weights: ScalarWeights) -> Self {
        Self { label: label.into(), matrix, weight: FactorWeight::Scalar(weights) }
    }

    pub fn matrix_weighted(label: impl Into<String>, matrix: ComplexMatrix, weights: MatrixWeights) -> Self {
        Self { label: label.into(), matrix, weight: FactorWeight::Matrix(weights) }
    }

    pub fn diagonal(label: impl Into<String>, matrix: ComplexMatrix, weights: Vec<ScalarWeights>) -> Self {
        Self { label: label.into(), matrix, weight: FactorWeight::Diagonal(weights) }
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    /// `C(0..=M)`, built by iterated multiplication so that neither `A^m` nor
    /// `ρ(m)` is formed on its own.
    pub fn blocks(&self, cutoff: usize) -> Result<Vec<ComplexMatrix>> {
        let n = self.dim();
        let a = &self.matrix;
        let mut out = Vec::with_capacity(cutoff + 1);
        match &self.weight {
            FactorWeight::Scalar(w) => {
                let ratios = w.ratios(cutoff)?;
                let mut c = ComplexMatrix::scalar(n, C64::new(w.rho0.sqrt().recip(), 0.0));
                out.push(c.clone());
                for x in ratios {
                    c = (&c * a).scale_real(x.sqrt().recip());
                    out.push(c.clone());
                }
            }
            FactorWeight::Matrix(w) => {
                if w.dim != n {
                    return Err(Error::DimensionMismatch { expected: n, got: w.dim });
                }
                let ratios = w.scalar.ratios(cutoff)?;
                let mut q = ComplexMatrix::scalar(n, C64::new(w.scalar.rho0.sqrt().recip(), 0.0));
                out.push(&w.generator_at(0) * &q);
                for (m, x) in ratios.into_iter().enumerate() {
                    q = (&q * a).scale_real(x.sqrt().recip());
                    out.push(&w.generator_at(m + 1) * &q);
                }
            }
            FactorWeight::Diagonal(ws) => {
                if ws.len() != n {
                    return Err(Error::DimensionMismatch { expected: n, got: ws.len() });
                }
                let ratios: Vec<Vec<f64>> = ws.iter().map(|w| w.ratios(cutoff)).collect::<Result<_>>()?;
                let d0: Vec<f64> = ws.iter().map(|w| w.rho0.sqrt().recip()).collect();
                let mut c = ComplexMatrix::diag_real(&d0);
                out.push(c.clone());
                for m in 0..cutoff {
                    let prod = &c * a;
                    c = ComplexMatrix::from_fn(n, |i, j| prod.get(i, j) * ratios[i][m].sqrt().recip());
                    out.push(c.clone());
                }
            }
        }
        if out.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidParameter(format!("factor {} overflowed at the requested cutoff", self.label)));
        }
        Ok(out)
    }
}

/// Squared spectral norms `‖C(m)‖₂²`, a per-factor majorant of the trace series.
pub fn majorants(blocks: &[ComplexMatrix]) -> Vec<f64> {
    blocks.iter().map(|c| c.spectral_norm().powi(2)).collect()
}

/// Estimate of `Σ_{m>M} t(m)` from the last few terms of a positive series.
///
/// With ratios `q_m = t(m)/t(m−1)` that do not increase over the last five
/// indices, `t(M)·q/(1−q)` with `q = q_M` bounds the remainder. Otherwise the
/// largest recent ratio is used. A last ratio of at least one is accepted only
/// when the last five terms are already below `1e−16` of the sum.
pub fn tail_estimate(t: &[f64]) -> Result<f64> {
    let m = t.len() - 1;
    let sum: f64 = t.iter().sum();
    if t[m] == 0.0 || m == 0 {
        return Ok(0.0);
    }
    let lo = m.saturating_sub(4).max(1);
    let ratios: Vec<f64> = (lo..=m).map(|k| if t[k - 1] > 0.0 { t[k] / t[k - 1] } else { f64::INFINITY }).collect();
    let q_last = *ratios.last().unwrap();
    if q_last >= 1.0 {
        if t[m.saturating_sub(4)..].iter().all(|&x| x < 1e-16 * sum) {
            return Ok(t[m]);
        }
        return Err(Error::SeriesNotDecaying { index: m });
    }
    let monotone = ratios.windows(2).all(|w| w[1] <= w[0] * (1.0 + 1e-12));
    let q = if monotone { q_last } else { ratios.iter().copied().fold(0.0, f64::max) };
    if q >= 1.0 {
        return Err(Error::SeriesNotDecaying { index: m });
    }
    Ok(t[m] * q / (1.0 - q))
}

/// `Tr X₁` with `X_{τ+1} = I`, `X_k = Σ_m C_k(m) X_{k+1} C_k(m)†`; this is
/// `Σ_{m⃗} Tr|C₁(m₁)⋯C_τ(m_τ)|²`.
pub fn nested_trace(blocks: &[Vec<ComplexMatrix>]) -> f64 {
    let n = blocks[0][0].dim();
    let mut x = ComplexMatrix::identity(n);
    for factor in blocks.iter().rev() {
        let mut acc = ComplexMatrix::zeros(n);
        for c in factor {
            acc = &acc + &(&(c * &x) * &c.adjoint());
        }
        x = acc;
    }
    x.trace().re
}

/// Partial trace series at the cutoffs plus a bound on what lies beyond.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalizationEstimate {
    pub partial: f64,
    /// `n·[Π(S_k + T_k) − Π S_k]` from the per-factor majorant sums `S_k` and tails `T_k`.
    pub tail_bound: f64,
}

pub fn normalization_factor(factors: &[Factor], cutoffs: &[usize]) -> Result<NormalizationEstimate> {
    check_factors(factors)?;
    if cutoffs.len() != factors.len() {
        return Err(Error::DimensionMismatch { expected: factors.len(), got: cutoffs.len() });
    }
    let blocks: Vec<Vec<ComplexMatrix>> =
        factors.iter().zip(cutoffs).map(|(f, &m)| f.blocks(m)).collect::<Result<_>>()?;
    let partial = nested_trace(&blocks);
    let (mut with_tail, mut without) = (1.0, 1.0);
    for b in &blocks {
        let t = majorants(b);
        let s: f64 = t.iter().sum();
        with_tail *= s + tail_estimate(&t)?;
        without *= s;
    }
    let n = factors[0].dim() as f64;
    Ok(NormalizationEstimate { partial, tail_bound: n * (with_tail - without) })
}

/// The trace series summed until every factor's terms are negligible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergedNormalization {
    pub value: f64,
    pub cutoffs: Vec<usize>,
}

pub fn converged_normalization(factors: &[Factor]) -> Result<ConvergedNormalization> {
    check_factors(factors)?;
    let mut blocks = Vec::with_capacity(factors.len());
    let mut cutoffs = Vec::with_capacity(factors.len());
    for f in factors {
        let (b, k) = converged_blocks(f)?;
        blocks.push(b);
        cutoffs.push(k);
    }
    Ok(ConvergedNormalization { value: nested_trace(&blocks), cutoffs })
}

fn converged_blocks(f: &Factor) -> Result<(Vec<ComplexMatrix>, usize)> {
    let mut k = SERIES_START;
    loop {
        let b = f.blocks(k)?;
        let t = majorants(&b);
        let sum: f64 = t.iter().sum();
        let decreasing = t[k] == 0.0 || t[k] < t[k - 1];
        if decreasing && t[k] <= SERIES_REL_TOL * sum {
            return Ok((b, k));
        }
        if k >= SERIES_MAX {
            return Err(Error::SeriesNotDecaying { index: k });
        }
        k *= 2;
    }
}

fn check_factors(factors: &[Factor]) -> Result<()> {
    let first = factors.first().ok_or_else(|| Error::InvalidParameter("at least one factor is required".into()))?;
    for f in factors {
        if f.dim() != first.dim() {
            return Err(Error::DimensionMismatch { expected: first.dim(), got: f.dim() });
        }
    }
    Ok(())
}

/// Where the normalization constant comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormalizationSource {
    /// The trace series summed to convergence, independent of the state cutoffs.
    Series,
    /// A supplied value, e.g. a closed form.
    Value(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BuildOptions {
    pub tail_tol: f64,
    /// Fail with `TruncationTooSmall` instead of returning an undertruncated state.
    pub strict: bool,
    pub normalization: NormalizationSource,
    pub memory_cap: usize,
}

impl Default for BuildOptions {
    fn default() -> Self {
        Self {
            tail_tol: DEFAULT_TAIL_TOL,
            strict: true,
            normalization: NormalizationSource::Series,
            memory_cap: DEFAULT_MEMORY_CAP,
        }
    }
}

/// Coefficients of one state `|…, j⟩` on the truncated basis.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TruncatedState {
    pub family: String,
    pub label: BTreeMap<String, f64>,
    pub j: usize,
    pub trunc: TruncationSpec,
    pub coeffs: Vec<C64>,
    pub normalization: f64,
    /// Bound on the fraction of `Σ_j‖·‖²` lost to truncation.
    pub tail_bound: f64,
}

impl TruncatedState {
    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn coeff(&self, i: usize, modes: &[usize]) -> C64 {
        self.coeffs[self.trunc.flat_index(i, modes)]
    }

    pub fn to_json(&self) -> Result<String> {
        serde_json::to_string_pretty(self).map_err(|e| Error::Config(e.to_string()))
    }
}

/// A product-form MVCS: named family, parameter label and factors.
#[derive(Debug, Clone)]
pub struct MvcsSpec {
    pub family: String,
    pub label: BTreeMap<String, f64>,
    pub factors: Vec<Factor>,
}

impl MvcsSpec {
    pub fn new(family: impl Into<String>, label: BTreeMap<String, f64>, factors: Vec<Factor>) -> Self {
        Self { family: family.into(), label, factors }
    }

    pub fn dim(&self) -> usize {
        self.factors[0].dim()
    }

    pub fn normalization(&self, source: NormalizationSource) -> Result<f64> {
        match source {
            NormalizationSource::Series => Ok(converged_normalization(&self.factors)?.value),
            NormalizationSource::Value(v) if v > 0.0 && v.is_finite() => Ok(v),
            NormalizationSource::Value(v) => {
                Err(Error::InvalidParameter(format!("normalization must be positive, got {v}")))
            }
        }
    }

    pub fn build(&self, j: usize, trunc: &TruncationSpec, opts: &BuildOptions) -> Result<TruncatedState> {
        Ok(self.build_all_inner(Some(j), trunc, opts)?.remove(0))
    }

    pub fn build_all(&self, trunc: &TruncationSpec, opts: &BuildOptions) -> Result<Vec<TruncatedState>> {
        self.build_all_inner(None, trunc, opts)
    }

    fn build_all_inner(
        &self,
        only: Option<usize>,
        trunc: &TruncationSpec,
        opts: &BuildOptions,
    ) -> Result<Vec<TruncatedState>> {
        check_factors(&self.factors)?;
        let n = self.dim();
        if trunc.spinor_dim != n {
            return Err(Error::DimensionMismatch { expected: n, got: trunc.spinor_dim });
        }
        if trunc.cutoffs.len() != self.factors.len() {
            return Err(Error::DimensionMismatch { expected: self.factors.len(), got: trunc.cutoffs.len() });
        }
        if let Some(j) = only {
            if j >= n {
                return Err(Error::InvalidParameter(format!("spinor index {j} out of range for dimension {n}")));
            }
        }
        let count = only.map_or(n, |_| 1);
        trunc.check_memory(trunc.total_size() * count, opts.memory_cap)?;

        let estimate = normalization_factor(&self.factors, &trunc.cutoffs)?;
        let norm = self.normalization(opts.normalization)?;
        let tail_bound = estimate.tail_bound / norm;
        if opts.strict && tail_bound > opts.tail_tol {
            return Err(Error::TruncationTooSmall { tail: tail_bound, tol: opts.tail_tol });
        }
        let blocks: Vec<Vec<ComplexMatrix>> =
            self.factors.iter().zip(&trunc.cutoffs).map(|(f, &m)| f.blocks(m)).collect::<Result<_>>()?;
        let js: Vec<usize> = match only {
            Some(j) => vec![j],
            None => (0..n).collect(),
        };
        let scale = norm.sqrt().recip();
        Ok(js
            .into_iter()
            .map(|j| TruncatedState {
                family: self.family.clone(),
                label: self.label.clone(),
                j,
                trunc: trunc.clone(),
                coeffs: product_coefficients(&blocks, j, trunc, scale),
                normalization: norm,
                tail_bound,
            })
            .collect())
    }
}

/// Coefficients `scale·[C₁(m₁)⋯C_τ(m_τ) e_j]_i` in flat order.
fn product_coefficients(blocks: &[Vec<ComplexMatrix>], j: usize, trunc: &TruncationSpec, scale: f64) -> Vec<C64> {
    let n = trunc.spinor_dim;
    let strides = trunc.strides();
    let mut e = vec![ZERO; n];
    e[j] = ONE;
    let mut frontier: Vec<(usize, Vec<C64>)> = vec![(0, e)];
    for (k, factor) in blocks.iter().enumerate().rev() {
        let mut next = Vec::with_capacity(frontier.len() * factor.len());
        for (offset, w) in &frontier {
            for (m, c) in factor.iter().enumerate() {
                next.push((offset + m * strides[k], c.mul_vec(w)));
            }
        }
        frontier = next;
    }
    let mode_size = trunc.mode_size();
    let mut coeffs = vec![ZERO; trunc.total_size()];
    for (offset, w) in frontier {
        for (i, z) in w.into_iter().enumerate() {
            coeffs[i * mode_size + offset] = z * scale;
        }
    }
    coeffs
}

/// Builds a state whose factors carry matrix weights `R_k(m)`, validating the
/// Clifford identities of every `R_k(m)` up to the cutoff and of every `Z_k`.
pub fn build_matrix_weight_mvcs(
    spec: &MvcsSpec,
    j: usize,
    trunc: &TruncationSpec,
    opts: &BuildOptions,
) -> Result<TruncatedState> {
    for (f, &m) in spec.factors.iter().zip(&trunc.cutoffs) {
        if let FactorWeight::Matrix(w) = &f.weight {
            w.validate(m)?;
        }
        clifford_scalar(&f.matrix)?;
    }
    spec.build(j, trunc, opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormCheck {
    pub total: f64,
    pub residual: f64,
    pub flagged: bool,
}

/// `|Σ_j ‖state_j‖² − 1|`, flagged when above the tail tolerance.
pub fn norm_check(states: &[TruncatedState]) -> Result<NormCheck> {
    norm_check_with(states, DEFAULT_TAIL_TOL)
}

pub fn norm_check_with(states: &[TruncatedState], tail_tol: f64) -> Result<NormCheck> {
    let first = states.first().ok_or_else(|| Error::LabelMismatch("no states supplied".into()))?;
    for s in states {
        if s.family != first.family || s.label != first.label || s.trunc != first.trunc {
            return Err(Error::LabelMismatch(format!("state j={} differs from state j={}", s.j, first.j)));
        }
    }
    let mut seen: Vec<usize> = states.iter().map(|s| s.j).collect();
    seen.sort_unstable();
    seen.dedup();
    if seen.len() != states.len() {
        return Err(Error::LabelMismatch("duplicate spinor index".into()));
    }
    let total: f64 = states.iter().map(TruncatedState::norm_sqr).sum();
    let residual = (total - 1.0).abs();
    Ok(NormCheck { total, residual, flagged: residual > tail_tol })
}

/// A matrix in polar form `radial·exp(i·angle·generator)` with commuting parts.
#[derive(Debug, Clone, PartialEq)]
pub struct PolarLabel {
    pub radial: ComplexMatrix,
    pub generator: ComplexMatrix,
    pub angle: f64,
}

impl PolarLabel {
    pub fn matrix(&self) -> Result<ComplexMatrix> {
        self.power(1.0)
    }

    /// `radial^p·exp(i·p·angle·generator)`. Non-integer powers require a
    /// positive semidefinite Hermitian radial part.
    pub fn power(&self, p: f64) -> Result<ComplexMatrix> {
        if p < 0.0 {
            return Err(Error::InvalidParameter(format!("negative power {p}")));
        }
        let radial = if p.fract() == 0.0 && p <= f64::from(u32::MAX) {
            self.radial.powi(p as u32)
        } else {
            psd_pow(&self.radial, p)?
        };
        Ok(&radial * &herm_exp(&self.generator, p * self.angle)?)
    }
}

pub type PairWeightFn = Arc<dyn Fn(usize, usize) -> f64 + Send + Sync>;

/// States whose inner sum depends on the outer index:
/// `N₁^{-1/2} Σ_m A^{f(m)}/√ρ₁(m) · N₂(m)^{-1/2} Σ_l B^{g(l)}/√ρ₂(m,l) χ^j ⊗ φ_m ⊗ ψ_l`
/// with `f(m) = outer_exponent·m`, `g(l) = inner_exponent·l` and a
/// Clifford-type inner radial part.
#[derive(Clone)]
pub struct DependentSpec {
    pub family: String,
    pub label: BTreeMap<String, f64>,
    pub outer: PolarLabel,
    pub outer_exponent: f64,
    pub outer_weights: ScalarWeights,
    pub inner: PolarLabel,
    pub inner_exponent: f64,
    /// `ln ρ₂(m, l)`.
    pub inner_ln_rho: PairWeightFn,
}

impl fmt::Debug for DependentSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DependentSpec")
            .field("family", &self.family)
            .field("label", &self.label)
            .field("outer_exponent", &self.outer_exponent)
            .field("inner_exponent", &self.inner_exponent)
            .finish()
    }
}

/// Sum of a positive series given by `ln` of its terms, to convergence.
fn log_series(ln_term: impl Fn(usize) -> f64, max_terms: usize) -> Result<(f64, usize)> {
    let first = ln_term(0);
    let mut sum = 1.0;
    let mut prev = 0.0;
    for k in 1..max_terms {
        let rel = (ln_term(k) - first).exp();
        sum += rel;
        if rel <= SERIES_REL_TOL * sum && rel <= prev {
            return Ok((sum * first.exp(), k));
        }
        prev = rel;
    }
    Err(Error::SeriesNotDecaying { index: max_terms })
}

impl DependentSpec {
    pub fn dim(&self) -> usize {
        self.outer.radial.dim()
    }

    /// `ln` of the Clifford scalar of the inner radial part.
    fn ln_inner_scalar(&self) -> Result<f64> {
        Ok(clifford_scalar(&self.inner.radial)?.ln())
    }

    fn ln_inner_term(&self, ln_g: f64, m: usize, l: usize) -> f64 {
        let power = self.inner_exponent * l as f64;
        let base = if power == 0.0 { 0.0 } else { power * ln_g };
        base - (self.inner_ln_rho)(m, l)
    }

    /// `N₂(m) = Σ_l |B|^{2g(l)}/ρ₂(m, l)`, summed to convergence.
    pub fn inner_norm(&self, m: usize) -> Result<f64> {
        let ln_g = self.ln_inner_scalar()?;
        Ok(log_series(|l| self.ln_inner_term(ln_g, m, l), 1_000_000)?.0)
    }

    /// The same series truncated at `l ≤ L`.
    pub fn inner_partial(&self, m: usize, cutoff: usize) -> Result<f64> {
        let ln_g = self.ln_inner_scalar()?;
        Ok((0..=cutoff).map(|l| self.ln_inner_term(ln_g, m, l).exp()).sum())
    }

    fn outer_block(&self, ln_rho: f64, m: usize) -> Result<ComplexMatrix> {
        Ok(self.outer.power(self.outer_exponent * m as f64)?.scale_real((-0.5 * ln_rho).exp()))
    }

    /// `N₁ = Σ_m Tr|A^{f(m)}|²/ρ₁(m)`; the inner sums cancel against `N₂(m)`.
    pub fn outer_norm(&self) -> Result<f64> {
        let mut k = SERIES_START;
        loop {
            let ln_rho = self.outer_weights.ln_values(k)?;
            let terms: Vec<f64> = (0..=k)
                .map(|m| Ok(self.outer_block(ln_rho[m], m)?.frobenius().powi(2)))
                .collect::<Result<_>>()?;
            let sum: f64 = terms.iter().sum();
            if (terms[k] == 0.0 || terms[k] < terms[k - 1]) && terms[k] <= SERIES_REL_TOL * sum {
                return Ok(sum);
            }
            if k >= SERIES_MAX {
                return Err(Error::SeriesNotDecaying { index: k });
            }
            k *= 2;
        }
    }

    pub fn build_all(&self, trunc: &TruncationSpec, opts: &BuildOptions) -> Result<Vec<TruncatedState>> {
        let n = self.dim();
        if trunc.spinor_dim != n || trunc.cutoffs.len() != 2 {
            return Err(Error::InvalidParameter("dependent states need spinor_dim = n and two cutoffs".into()));
        }
        trunc.check_memory(trunc.total_size() * n, opts.memory_cap)?;
        let (mc, lc) = (trunc.cutoffs[0], trunc.cutoffs[1]);
        let norm1 = match opts.normalization {
            NormalizationSource::Series => self.outer_norm()?,
            NormalizationSource::Value(v) => v,
        };
        let ln_rho1 = self.outer_weights.ln_values(mc)?;
        let inner_powers: Vec<ComplexMatrix> =
            (0..=lc).map(|l| self.inner.power(self.inner_exponent * l as f64)).collect::<Result<_>>()?;
        let mut products = Vec::with_capacity((mc + 1) * (lc + 1));
        let mut partial = 0.0;
        for (m, &ln_rho) in ln_rho1.iter().enumerate().take(mc + 1) {
            let outer = self.outer_block(ln_rho, m)?;
            let ln_n2 = self.inner_norm(m)?.ln();
            for (l, b) in inner_powers.iter().enumerate() {
                let w = (-0.5 * ((self.inner_ln_rho)(m, l) + ln_n2)).exp();
                let p = (&outer * b).scale_real(w);
                partial += p.frobenius().powi(2);
                products.push(p);
            }
        }
        let tail_bound = ((norm1 - partial) / norm1).max(0.0);
        if opts.strict && tail_bound > opts.tail_tol {
            return Err(Error::TruncationTooSmall { tail: tail_bound, tol: opts.tail_tol });
        }
        let scale = norm1.sqrt().recip();
        let mode_size = trunc.mode_size();
        Ok((0..n)
            .map(|j| {
                let mut coeffs = vec![ZERO; trunc.total_size()];
                for (idx, p) in products.iter().enumerate() {
                    for i in 0..n {
                        coeffs[i * mode_size + idx] = p.get(i, j) * scale;
                    }
                }
                TruncatedState {
                    family: self.family.clone(),
                    label: self.label.clone(),
                    j,
                    trunc: trunc.clone(),
                    coeffs,
                    normalization: norm1,
                    tail_bound,
                }
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypercomplex::{quat_complex_rep, quat_real_rep, Quaternion};
    use crate::special::{binomial, factorial};

    fn label(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn quat_spec(q1: Quaternion, q2: Quaternion) -> MvcsSpec {
        MvcsSpec::new(
            "q",
            label(&[]),
            vec![
                Factor::scalar("A", quat_complex_rep(q1), ScalarWeights::factorial()),
                Factor::scalar("B", quat_complex_rep(q2), ScalarWeights::factorial()),
            ],
        )
    }

    #[test]
    fn flat_index_round_trip() {
        let t = TruncationSpec::new(3, vec![2, 4, 1]).unwrap();
        assert_eq!(t.mode_size(), 30);
        assert_eq!(t.strides(), vec![10, 2, 1]);
        assert_eq!(t.flat_index(2, &[1, 3, 1]), 2 * 30 + 10 + 6 + 1);
        for idx in 0..t.total_size() {
            let (i, m) = t.unflatten(idx);
            assert_eq!(t.flat_index(i, &m), idx);
        }
        assert!(TruncationSpec::new(2, vec![0]).is_err());
    }

    #[test]
    fn scalar_reduction_is_canonical() {
        let z = C64::new(0.3, -0.4);
        let spec = MvcsSpec::new(
            "scalar",
            label(&[]),
            vec![Factor::scalar("z", ComplexMatrix::scalar(1, z), ScalarWeights::factorial())],
        );
        let trunc = TruncationSpec::new(1, vec![40]).unwrap();
        let s = spec.build(0, &trunc, &BuildOptions::default()).unwrap();
        let n = (z.norm_sqr()).exp();
        assert!((s.normalization / n - 1.0).abs() < 1e-14);
        for m in 0..=40usize {
            let want = z.powu(m as u32) / factorial(m as u64).sqrt() / n.sqrt();
            assert!((s.coeffs[m] - want).norm() < 1e-15);
        }
    }

    #[test]
    fn vacuum_state_has_single_coefficient() {
        let zero = Quaternion::new(0.0, 0.0, 0.0, 0.0);
        let spec = quat_spec(zero, zero);
        let trunc = TruncationSpec::new(2, vec![5, 5]).unwrap();
        let s = spec.build(1, &trunc, &BuildOptions::default()).unwrap();
        assert!((s.normalization - 2.0).abs() < 1e-15);
        for (idx, c) in s.coeffs.iter().enumerate() {
            if idx == trunc.flat_index(1, &[0, 0]) {
                assert!((c.re - 0.5f64.sqrt()).abs() < 1e-15);
            } else {
                assert_eq!(*c, ZERO);
            }
        }
    }

    #[test]
    fn quaternion_normalization_examples() {
        let zero = Quaternion::new(0.0, 0.0, 0.0, 0.0);
        let est = normalization_factor(&quat_spec(zero, zero).factors, &[40, 40]).unwrap();
        assert_eq!(est.partial, 2.0);
        let q1 = Quaternion::new(0.6, 0.0, 0.8, 0.0);
        let q2 = Quaternion::new(0.0, 0.0, 0.0, 1.0);
        let est = normalization_factor(&quat_spec(q1, q2).factors, &[40, 40]).unwrap();
        assert!((est.partial / (2.0 * 2f64.exp()) - 1.0).abs() < 1e-12);
        assert!(est.tail_bound < 1e-20);
    }

    #[test]
    fn real_rep_norm_sum_unity() {
        let q1 = Quaternion::new(0.25, 0.25, 0.25, 0.25);
        let q2 = Quaternion::new(0.5, 0.0, 0.0, 0.0);
        let spec = MvcsSpec::new(
            "real",
            label(&[]),
            vec![
                Factor::scalar("q1", quat_real_rep(q1), ScalarWeights::factorial()),
                Factor::scalar("q2", quat_real_rep(q2), ScalarWeights::factorial()),
            ],
        );
        let trunc = TruncationSpec::new(4, vec![40, 40]).unwrap();
        let states = spec.build_all(&trunc, &BuildOptions::default()).unwrap();
        assert_eq!(states.len(), 4);
        let check = norm_check(&states).unwrap();
        assert!(check.residual < 1e-10, "{check:?}");
        assert!((states[0].normalization / (4.0 * 0.5f64.exp()) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn undertruncated_state_is_flagged() {
        let q = Quaternion::new(1.0, 0.0, 0.0, 0.0);
        let spec = quat_spec(q, q);
        let trunc = TruncationSpec::new(2, vec![2, 2]).unwrap();
        assert!(matches!(
            spec.build_all(&trunc, &BuildOptions::default()),
            Err(Error::TruncationTooSmall { .. })
        ));
        let opts = BuildOptions { strict: false, ..BuildOptions::default() };
        let states = spec.build_all(&trunc, &opts).unwrap();
        let check = norm_check(&states).unwrap();
        // Explicit tail: 1 − (Σ_{m≤2} 1/m!)² / e².
        let kept = 2.5f64 * 2.5;
        assert!((check.residual - (1.0 - kept / 1f64.exp().powi(2))).abs() < 1e-12);
        assert!(check.flagged);
        assert!(states[0].tail_bound >= check.residual);
    }

    #[test]
    fn norm_check_rejects_mismatched_labels() {
        let q = Quaternion::new(0.1, 0.0, 0.0, 0.0);
        let trunc = TruncationSpec::new(2, vec![10, 10]).unwrap();
        let mut states = quat_spec(q, q).build_all(&trunc, &BuildOptions::default()).unwrap();
        states[1].label.insert("r".into(), 1.0);
        assert!(matches!(norm_check(&states), Err(Error::LabelMismatch(_))));
    }

    #[test]
    fn divergent_series_reported() {
        let t: Vec<f64> = (0..10).map(|m| 1.5f64.powi(m)).collect();
        assert!(matches!(tail_estimate(&t), Err(Error::SeriesNotDecaying { .. })));
    }

    #[test]
    fn matrix_weights_normalize_like_exponential() {
        let q1 = Quaternion::new(0.0, 1.0, 0.0, 0.0);
        let q2 = Quaternion::new(0.6, 0.0, 0.0, 0.8);
        let spec = MvcsSpec::new(
            "matrix-weight",
            label(&[]),
            vec![
                Factor::matrix_weighted("Z1", quat_real_rep(q1), MatrixWeights::rotation_block(0.3)),
                Factor::matrix_weighted("Z2", quat_real_rep(q2), MatrixWeights::rotation_block(1.1)),
            ],
        );
        let n = converged_normalization(&spec.factors).unwrap().value;
        assert!((n / (4.0 * 2f64.exp()) - 1.0).abs() < 1e-13);
        let trunc = TruncationSpec::new(4, vec![40, 40]).unwrap();
        let s = build_matrix_weight_mvcs(&spec, 2, &trunc, &BuildOptions::default()).unwrap();
        assert_eq!(s.j, 2);
    }

    fn dependent_example(r: f64, s: f64) -> DependentSpec {
        DependentSpec {
            family: "dep".into(),
            label: label(&[("r", r), ("s", s)]),
            outer: PolarLabel {
                radial: ComplexMatrix::scalar(2, C64::new(r, 0.0)),
                generator: crate::hypercomplex::sigma_n(0.4, 1.0),
                angle: 0.7,
            },
            outer_exponent: 0.5,
            outer_weights: ScalarWeights::factorial(),
            inner: PolarLabel {
                radial: ComplexMatrix::scalar(2, C64::new(s, 0.0)),
                generator: crate::hypercomplex::sigma_n(2.0, 3.0),
                angle: 1.9,
            },
            inner_exponent: 0.5,
            inner_ln_rho: Arc::new(|m, l| -binomial((m + l) as u64, l as u64).ln()),
        }
    }

    #[test]
    fn dependent_inner_norm_examples() {
        assert!((dependent_example(1.0, 0.0).inner_norm(7).unwrap() - 1.0).abs() < 1e-15);
        let d = dependent_example(1.0, 0.5);
        assert!((d.inner_norm(1).unwrap() - 4.0).abs() < 1e-12);
        let partial = d.inner_partial(2, 60).unwrap();
        assert!((partial / 8.0 - 1.0).abs() < 1e-9);
    }

    #[test]
    fn dependent_states_normalize() {
        let d = dependent_example(0.8, 0.5);
        assert!((d.outer_norm().unwrap() / (2.0 * 0.8f64.exp()) - 1.0).abs() < 1e-13);
        let trunc = TruncationSpec::new(2, vec![40, 80]).unwrap();
        let states = d.build_all(&trunc, &BuildOptions::default()).unwrap();
        assert!(norm_check(&states).unwrap().residual < 1e-10);
    }

    #[test]
    fn polar_label_fractional_power() {
        let p = PolarLabel {
            radial: ComplexMatrix::scalar(2, C64::new(4.0, 0.0)),
            generator: crate::hypercomplex::sigma_n(0.3, 0.2),
            angle: 0.9,
        };
        let half = p.power(0.5).unwrap();
        let back = &half * &half;
        assert!((&back - &p.matrix().unwrap()).frobenius() < 1e-13);
        let bad = PolarLabel { radial: ComplexMatrix::diag_real(&[1.0, -1.0]), ..p };
        assert!(bad.power(0.5).is_err());
    }
}

//! Resolution-of-identity checks: phase averages, radial moment grids and
//! numerical assembly of `Σ_j ∫ |…, j⟩⟨…, j| dμ` on the truncated basis.

use std::collections::HashMap;
use std::f64::consts::PI;
use std::ops::RangeInclusive;
use std::sync::Arc;

use itertools::Itertools;
use num_complex::Complex64 as C64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conditions::integer_spectrum_check;
use crate::error::{Error, Result};
use crate::hypercomplex::{quat_real_rep, sigma_n, QuaternionPolar};
use crate::matrix::{ComplexMatrix, ZERO};
use crate::quadrature::{converged, gauss_laguerre, gauss_legendre, pairwise_sum, uniform_angle, GaussianRadialRule};
use crate::special::{binomial, ln_factorial};
use crate::states::{Factor, FactorWeight, TruncationSpec, DEFAULT_MEMORY_CAP};
use crate::weights::{MatrixWeights, ScalarWeights};

/// Default tolerance for moment residuals.
pub const MOMENT_TOL: f64 = 1e-8;
/// Default tolerance for the identity deviation.
pub const IDENTITY_TOL: f64 = 1e-6;
/// Nodes per task when accumulating quadrature sums in parallel.
const CHUNK: usize = 256;

/// Node counts for radial, angular and polar-angle axes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuadratureSpec {
    pub radial_nodes: usize,
    pub angle_nodes: usize,
    pub polar_nodes: usize,
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self { radial_nodes: 64, angle_nodes: 16, polar_nodes: 32 }
    }
}

impl QuadratureSpec {
    pub fn validate(&self) -> Result<()> {
        if self.radial_nodes < 2 || self.angle_nodes < 2 || self.polar_nodes < 2 {
            return Err(Error::InvalidParameter("quadrature node counts must be at least 2".into()));
        }
        Ok(())
    }
}

/// `2π·mean_ζ exp(i(m−ν)ζΘ)` over `nodes` equally spaced angles.
pub fn phase_average(theta: &ComplexMatrix, m: i64, nu: i64, nodes: usize) -> Result<ComplexMatrix> {
    let spectrum = integer_spectrum_check(theta)?;
    if !spectrum.pass {
        return Err(Error::InvalidParameter(format!(
            "phase generator needs a nonzero integer spectrum, got {:?}",
            spectrum.eigenvalues
        )));
    }
    let rule = uniform_angle(nodes)?;
    let d = (m - nu) as f64;
    let eig = theta.eigh()?;
    Ok(eig.reconstruct(|lambda| {
        let terms: Vec<C64> = rule.iter().map(|(z, w)| C64::from_polar(w, d * lambda * z)).collect();
        C64::new(
            pairwise_sum(&terms.iter().map(|t| t.re).collect::<Vec<_>>()),
            pairwise_sum(&terms.iter().map(|t| t.im).collect::<Vec<_>>()),
        )
    }))
}

/// Exponent `α` and scale `c` of the Gaussian reference weight `r^{2α+1}e^{−r²/c}` on one axis.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AxisRule {
    pub alpha: f64,
    pub scale: f64,
}

impl AxisRule {
    pub const fn new(alpha: f64, scale: f64) -> Self {
        Self { alpha, scale }
    }
}

pub type IndexFn<T> = Arc<dyn Fn(&[usize]) -> T + Send + Sync>;
pub type LnIntegrandFn = Arc<dyn Fn(&[usize], &[f64]) -> f64 + Send + Sync>;

/// A grid of half-line moment equations `∫ g_idx(r⃗) dr⃗ = target(idx)`, with
/// the positive integrand given by its logarithm.
#[derive(Clone)]
pub struct MomentProblem {
    pub name: String,
    pub index_ranges: Vec<RangeInclusive<usize>>,
    /// Reference rule for every radial axis, chosen per index so that the
    /// remaining factor is a low-degree polynomial in `r²` when possible.
    pub axes: IndexFn<Vec<AxisRule>>,
    pub ln_integrand: LnIntegrandFn,
    pub ln_target: IndexFn<f64>,
    pub tol: f64,
}

impl std::fmt::Debug for MomentProblem {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("MomentProblem")
            .field("name", &self.name)
            .field("index_ranges", &self.index_ranges)
            .field("tol", &self.tol)
            .finish()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentRow {
    pub indices: Vec<usize>,
    pub target: f64,
    pub computed: f64,
    pub relative_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MomentGrid {
    pub name: String,
    pub rows: Vec<MomentRow>,
    pub max_residual: f64,
    pub tol: f64,
    pub pass: bool,
}

impl MomentGrid {
    pub fn from_rows(name: impl Into<String>, rows: Vec<MomentRow>, tol: f64) -> Self {
        let max_residual = rows.iter().map(|r| r.relative_residual).fold(0.0, f64::max);
        let pass = rows.iter().all(|r| r.relative_residual <= tol);
        Self { name: name.into(), rows, max_residual, tol, pass }
    }

    /// The row with the largest residual.
    pub fn worst(&self) -> Option<&MomentRow> {
        self.rows.iter().max_by(|a, b| a.relative_residual.total_cmp(&b.relative_residual))
    }
}

pub fn relative_residual(computed: f64, target: f64) -> f64 {
    if computed.is_nan() {
        return f64::INFINITY;
    }
    (computed - target).abs() / target.abs()
}

type RuleKey = (u64, u64, usize);

/// Cache of radial rules keyed by `(α, c, n)`.
#[derive(Default)]
struct RuleCache(HashMap<RuleKey, Arc<GaussianRadialRule>>);

impl RuleCache {
    fn get(&mut self, axis: AxisRule, n: usize) -> Result<Arc<GaussianRadialRule>> {
        let key = (axis.alpha.to_bits(), axis.scale.to_bits(), n);
        if let Some(rule) = self.0.get(&key) {
            return Ok(rule.clone());
        }
        let rule = Arc::new(GaussianRadialRule::new(n, axis.alpha, axis.scale)?);
        self.0.insert(key, rule.clone());
        Ok(rule)
    }
}

fn product_integral(rules: &[Arc<GaussianRadialRule>], ln_g: impl Fn(&[f64]) -> f64) -> f64 {
    let terms: Vec<f64> = rules
        .iter()
        .map(|r| 0..r.len())
        .multi_cartesian_product()
        .map(|idx| {
            let mut radii = Vec::with_capacity(idx.len());
            let (mut weight, mut ln_ref) = (1.0, 0.0);
            for (rule, &i) in rules.iter().zip(&idx) {
                let r = rule.radii[i];
                radii.push(r);
                weight *= rule.weights[i];
                ln_ref += (2.0 * rule.alpha + 1.0) * r.ln() - r * r / rule.scale;
            }
            weight * (ln_g(&radii) - ln_ref).exp()
        })
        .collect();
    pairwise_sum(&terms)
}

/// Evaluates every moment equation with `n` and `2n` radial nodes per axis,
/// failing when the two estimates disagree beyond `10·tol`.
pub fn moment_residuals(problem: &MomentProblem, quad: &QuadratureSpec) -> Result<MomentGrid> {
    quad.validate()?;
    let mut cache = RuleCache::default();
    let mut rows = Vec::new();
    for indices in problem.index_ranges.iter().cloned().multi_cartesian_product() {
        let axes = (problem.axes)(&indices);
        let target = (problem.ln_target)(&indices).exp();
        let mut integrate = |n: usize| -> Result<f64> {
            let rules: Vec<_> = axes.iter().map(|&a| cache.get(a, n)).collect::<Result<_>>()?;
            Ok(product_integral(&rules, |r| (problem.ln_integrand)(&indices, r)))
        };
        let coarse = integrate(quad.radial_nodes)?;
        let fine = integrate(2 * quad.radial_nodes)?;
        let drift = (fine - coarse).abs() / fine.abs().max(f64::MIN_POSITIVE);
        if !(drift <= 10.0 * problem.tol) {
            return Err(Error::QuadratureNonConvergence {
                computed_a: coarse,
                computed_b: fine,
                context: format!("{} at indices {indices:?}", problem.name),
            });
        }
        let computed = fine;
        rows.push(MomentRow { relative_residual: relative_residual(computed, target), indices, target, computed });
    }
    Ok(MomentGrid::from_rows(problem.name.clone(), rows, problem.tol))
}

fn ln_fact(m: usize) -> f64 {
    ln_factorial(m as u64)
}

/// `c·∫∫ r^{2m+1}s^{2l+1} e^{−r²−s²} dr ds = m!·l!` for measures whose density
/// over the closed-form normalization reduces to the constant `c`.
fn gaussian_pair_problem(name: &str, ln_c: f64, max: usize) -> MomentProblem {
    MomentProblem {
        name: name.to_string(),
        index_ranges: vec![0..=max, 0..=max],
        axes: Arc::new(|_| vec![AxisRule::new(0.0, 1.0), AxisRule::new(0.0, 1.0)]),
        ln_integrand: Arc::new(move |idx, r| {
            ln_c + (2 * idx[0] + 1) as f64 * r[0].ln() + (2 * idx[1] + 1) as f64 * r[1].ln() - r[0] * r[0] - r[1] * r[1]
        }),
        ln_target: Arc::new(|idx| ln_fact(idx[0]) + ln_fact(idx[1])),
        tol: MOMENT_TOL,
    }
}

/// Quaternions in the complex representation: `W = 2/π²`, `N = 2e^{r²+s²}`,
/// so the radial equations read `4π²·W/2 ∫∫ r^{2m+1}s^{2l+1}e^{−r²−s²} = m!·l!`.
pub fn quaternion_complex_moments(max: usize) -> MomentProblem {
    let w = 2.0 / (PI * PI);
    gaussian_pair_problem("quaternion-complex", (4.0 * PI * PI * w / 2.0).ln(), max)
}

/// Quaternions in the real representation: `W = 4/π²`, `N = 4e^{t²+s²}`.
pub fn quaternion_real_moments(max: usize) -> MomentProblem {
    let w = 4.0 / (PI * PI);
    gaussian_pair_problem("quaternion-real", (4.0 * PI * PI * w / 4.0).ln(), max)
}

/// Matrix weights over two quaternion factors: density `4/π²`, `N = 4e^{|q₁|²+|q₂|²}`,
/// angular integrals `(2π)²`.
pub fn matrix_weight_moments(max: usize) -> MomentProblem {
    gaussian_pair_problem("matrix-weight", (4.0 / (PI * PI) * 4.0 * PI * PI / 4.0).ln(), max)
}

/// Per-mode check for diagonal exponential weights `ρ(m) = ω^m m!` with
/// density `r e^{−r²/ω}/(ωπ)`: `(2π/(ωπ))∫ r^{2m+1}e^{−r²/ω}dr / (ω^m m!) = 1`.
pub fn diagonal_mode_moments(name: &str, omega: f64, max: usize) -> MomentProblem {
    MomentProblem {
        name: name.to_string(),
        index_ranges: vec![0..=max],
        axes: Arc::new(move |_| vec![AxisRule::new(0.0, omega)]),
        ln_integrand: Arc::new(move |idx, r| {
            let m = idx[0] as f64;
            (2.0 / omega).ln() + (2.0 * m + 1.0) * r[0].ln() - r[0] * r[0] / omega - m * omega.ln() - ln_fact(idx[0])
        }),
        ln_target: Arc::new(|_| 0.0),
        tol: MOMENT_TOL,
    }
}

/// `m·∫₀¹ s^l(1−s)^{m−1} ds` against `1/C(m+l, l)`; absolute residual.
pub fn beta_moment_check(m: usize, l: usize, nodes: usize) -> Result<f64> {
    if m == 0 {
        return Err(Error::InvalidParameter("the beta identity needs m ≥ 1".into()));
    }
    let rule = gauss_legendre(nodes, 0.0, 1.0)?;
    let value = m as f64 * rule.integrate(|s| s.powi(l as i32) * (1.0 - s).powi(m as i32 - 1));
    Ok((value - 1.0 / binomial((m + l) as u64, l as u64)).abs())
}

/// `J(m) = ∫∫ w(r,s)(r²+s²)^m e^{−r²−s²} rs dr ds` with `w = 16/(r²+s²)`,
/// so that `J(m)/4` is the moment with normalization `N = 4e^{r²+s²}`.
///
/// For `m ≥ 1` the integrand is a polynomial against the Gaussian weight and
/// the product rule is exact; `m = 0` is done in polar coordinates.
pub fn extension_weighted_moment(m: usize, quad: &QuadratureSpec) -> Result<f64> {
    let n = quad.radial_nodes;
    if m == 0 {
        // r = ρcos t, s = ρsin t: 16 ρ e^{−ρ²} cos t sin t dρ dt.
        let radial = GaussianRadialRule::new(n, 0.0, 1.0)?;
        let angular = gauss_legendre(quad.polar_nodes, 0.0, PI / 2.0)?;
        let rho: f64 = radial.weights.iter().sum();
        return Ok(16.0 * rho * angular.integrate(|t| t.cos() * t.sin()));
    }
    converged(n, 1e-13, "extension moment", |n| {
        let rule = GaussianRadialRule::new(n, 0.0, 1.0)?;
        let mut terms = Vec::with_capacity(n * n);
        for (&r, &wr) in rule.radii.iter().zip(&rule.weights) {
            for (&s, &ws) in rule.radii.iter().zip(&rule.weights) {
                terms.push(wr * ws * 16.0 * (r * r + s * s).powi(m as i32 - 1));
            }
        }
        Ok(pairwise_sum(&terms))
    })
}

/// `∬ w(r,s)(r²+s²)^m/N · rs dr ds` with `N = 4e^{r²+s²}`; equals `m!`.
pub fn extension_moment_check(m: usize, quad: &QuadratureSpec) -> Result<f64> {
    Ok(extension_weighted_moment(m, quad)? / 4.0)
}

/// Moment grid for two extension blocks: each factor carries its own density
/// and normalization, so the double moment is `J(m)J(l)/16`.
pub fn extension_moment_grid(max: usize, quad: &QuadratureSpec) -> Result<MomentGrid> {
    let j: Vec<f64> = (0..=max).map(|m| extension_weighted_moment(m, quad)).collect::<Result<_>>()?;
    let rows = (0..=max)
        .cartesian_product(0..=max)
        .map(|(m, l)| {
            let computed = j[m] * j[l] / 16.0;
            let target = (ln_fact(m) + ln_fact(l)).exp();
            MomentRow { indices: vec![m, l], target, computed, relative_residual: relative_residual(computed, target) }
        })
        .collect();
    Ok(MomentGrid::from_rows("extension", rows, MOMENT_TOL))
}

/// The same double moment with one normalization `4e^{Σ}` shared by both
/// blocks and the product density `W₁W₂`: `J(m)J(l)/4`.
pub fn extension_composite_moment_grid(max: usize, quad: &QuadratureSpec) -> Result<MomentGrid> {
    let j: Vec<f64> = (0..=max).map(|m| extension_weighted_moment(m, quad)).collect::<Result<_>>()?;
    let rows = (0..=max)
        .cartesian_product(0..=max)
        .map(|(m, l)| {
            let computed = j[m] * j[l] / 4.0;
            let target = (ln_fact(m) + ln_fact(l)).exp();
            MomentRow { indices: vec![m, l], target, computed, relative_residual: relative_residual(computed, target) }
        })
        .collect();
    Ok(MomentGrid::from_rows("extension-composite", rows, MOMENT_TOL))
}

/// Which pair of densities and outer normalization to use in the dependent-sum identity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DependentDensity {
    /// `λ₁ = 1/(2π)`, `λ₂ = m e^{rs}/(2π(1−s))` with `N₁ = (1−s)e^{r(1−s)}`.
    Printed,
    /// `λ₁ = 1/(2π)`, `λ₂ = m/(π(1−s)²)` with the series value `N₁ = 2e^r`.
    Corrected,
}

/// `4π²∫₀^∞∫₀¹ r^m s^l (1−s)^{m+1} λ₁λ₂ / N₁ ds dr = m!/C(m+l, l)` for
/// `1 ≤ m ≤ m_max`, `0 ≤ l ≤ l_max`.
///
/// The `r` integral uses a Laguerre rule for `e^{−r}` and the `s` integral a
/// Legendre rule on `[0, 1]`; rows whose `r` integral does not settle under
/// node doubling are reported as divergent.
pub fn dependent_identity_check(
    density: DependentDensity,
    m_max: usize,
    l_max: usize,
    quad: &QuadratureSpec,
) -> Result<MomentGrid> {
    let s_rule = gauss_legendre(128, 0.0, 1.0)?;
    let coarse = gauss_laguerre(quad.radial_nodes, 0.0)?;
    let fine = gauss_laguerre(2 * quad.radial_nodes, 0.0)?;
    // Integrand divided by e^{−r}, in log form.
    let ln_f = move |m: usize, l: usize, r: f64, s: f64| -> f64 {
        let (mf, lf) = (m as f64, l as f64);
        let common = mf * r.ln() + lf * s.ln() + (mf + 1.0) * (1.0 - s).ln() + (4.0 * PI * PI).ln()
            - (2.0 * PI).ln();
        match density {
            DependentDensity::Printed => {
                let ln_n1 = (1.0 - s).ln() + r * (1.0 - s);
                let ln_l2 = mf.ln() + r * s - (2.0 * PI * (1.0 - s)).ln();
                common + ln_l2 - ln_n1 + r
            }
            DependentDensity::Corrected => {
                let ln_n1 = 2f64.ln() + r;
                let ln_l2 = mf.ln() - (PI * (1.0 - s).powi(2)).ln();
                common + ln_l2 - ln_n1 + r
            }
        }
    };
    let integrate = |rule: &crate::quadrature::Rule, m: usize, l: usize| -> f64 {
        let terms: Vec<f64> = s_rule
            .iter()
            .flat_map(|(s, ws)| rule.iter().map(move |(r, wr)| ws * wr * ln_f(m, l, r, s).exp()))
            .collect();
        pairwise_sum(&terms)
    };
    let tol = MOMENT_TOL;
    let rows = (1..=m_max)
        .cartesian_product(0..=l_max)
        .map(|(m, l)| {
            let (a, b) = (integrate(&coarse, m, l), integrate(&fine, m, l));
            let settled = b.is_finite() && (a - b).abs() <= 10.0 * tol * b.abs();
            let computed = if settled { b } else { f64::INFINITY };
            let target = (ln_fact(m) - binomial((m + l) as u64, l as u64).ln()).exp();
            MomentRow { indices: vec![m, l], target, computed, relative_residual: relative_residual(computed, target) }
        })
        .collect();
    let name = match density {
        DependentDensity::Printed => "dependent-printed",
        DependentDensity::Corrected => "dependent-corrected",
    };
    Ok(MomentGrid::from_rows(name, rows, tol))
}

/// Quadrature nodes of one factor of the measure.
#[derive(Debug, Clone)]
pub enum FactorNodes {
    /// The label matrix at every node with its weight (rule weight times density).
    General(Vec<(f64, ComplexMatrix)>),
    /// Labels `A = r·U` over a product of a radial rule `(r, w)` and an
    /// angular rule `(w, U)`.
    Separable { radial: Vec<(f64, f64)>, angular: Vec<(f64, ComplexMatrix)> },
}

/// One factor: its node set and weight sequence.
#[derive(Debug, Clone)]
pub struct MeasureFactor {
    pub weight: FactorWeight,
    pub nodes: FactorNodes,
}

/// A product measure for `Σ_j ∫|…, j⟩⟨…, j| dμ`, written as
/// `constant · Π_k (factor-k density)` times the unnormalized projectors.
#[derive(Debug, Clone)]
pub struct IdentityProblem {
    pub name: String,
    pub dim: usize,
    pub constant: f64,
    pub factors: Vec<MeasureFactor>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IdentityReport {
    pub name: String,
    pub trunc: TruncationSpec,
    pub max_deviation: f64,
    /// Smallest and largest diagonal entries.
    pub diagonal_range: (f64, f64),
    pub max_off_diagonal: f64,
    #[serde(skip)]
    pub operator: Option<ComplexMatrix>,
}

/// Superoperator blocks `S[m·(M+1)+ν] = Σ w·C(m) ⊗ conj C(ν)` (row-major vec).
/// `add_kron_scaled` takes `C(ν)` itself and conjugates on the fly.
type Superop = Vec<ComplexMatrix>;

fn add_kron_scaled(acc: &mut [C64], a: &ComplexMatrix, b: &ComplexMatrix, w: f64) {
    let n = a.dim();
    let nn = n * n;
    let (ad, bd) = (a.as_slice(), b.as_slice());
    for i in 0..n {
        for j in 0..n {
            let x = ad[i * n + j] * w;
            if x == ZERO {
                continue;
            }
            for k in 0..n {
                for l in 0..n {
                    acc[(i * n + k) * nn + j * n + l] += x * bd[k * n + l].conj();
                }
            }
        }
    }
}

fn accumulate(
    nodes: &[(f64, ComplexMatrix)],
    weight: &FactorWeight,
    cutoff: usize,
    n: usize,
) -> Result<Vec<Vec<C64>>> {
    let blocks_len = (cutoff + 1) * (cutoff + 1);
    let partials: Vec<Vec<Vec<C64>>> = nodes
        .par_chunks(CHUNK)
        .map(|chunk| -> Result<Vec<Vec<C64>>> {
            let mut acc = vec![vec![ZERO; n.pow(4)]; blocks_len];
            for (w, a) in chunk {
                if *w == 0.0 {
                    continue;
                }
                let factor = Factor { label: String::new(), matrix: a.clone(), weight: weight.clone() };
                let c = factor.blocks(cutoff)?;
                for m in 0..=cutoff {
                    for nu in 0..=cutoff {
                        add_kron_scaled(&mut acc[m * (cutoff + 1) + nu], &c[m], &c[nu], *w);
                    }
                }
            }
            Ok(acc)
        })
        .collect::<Result<_>>()?;
    let mut total = vec![vec![ZERO; n.pow(4)]; blocks_len];
    for p in partials {
        for (t, q) in total.iter_mut().zip(p) {
            for (x, y) in t.iter_mut().zip(q) {
                *x += y;
            }
        }
    }
    Ok(total)
}

fn factor_superop(factor: &MeasureFactor, cutoff: usize, n: usize) -> Result<Superop> {
    let raw = match &factor.nodes {
        FactorNodes::General(nodes) => accumulate(nodes, &factor.weight, cutoff, n)?,
        FactorNodes::Separable { radial, angular } => {
            let moments: Vec<f64> = (0..=2 * cutoff)
                .map(|k| pairwise_sum(&radial.iter().map(|&(r, w)| w * r.powi(k as i32)).collect::<Vec<_>>()))
                .collect();
            let mut ang = accumulate(angular, &factor.weight, cutoff, n)?;
            for m in 0..=cutoff {
                for nu in 0..=cutoff {
                    for x in &mut ang[m * (cutoff + 1) + nu] {
                        *x *= moments[m + nu];
                    }
                }
            }
            ang
        }
    };
    raw.into_iter()
        .map(|data| {
            let dim = n * n;
            ComplexMatrix::from_row_major(data).and_then(|m| {
                if m.dim() == dim {
                    Ok(m)
                } else {
                    Err(Error::DimensionMismatch { expected: dim, got: m.dim() })
                }
            })
        })
        .collect()
}

/// Integrates `Σ_j |…, j⟩⟨…, j|` over the measure and compares with the
/// identity on the truncated basis.
///
/// Each factor contributes a superoperator `S_k[m, ν]`; the operator block
/// between mode indices `m⃗` and `ν⃗` is `S₁[m₁,ν₁]⋯S_τ[m_τ,ν_τ] vec(I)`.
pub fn assemble_identity(problem: &IdentityProblem, trunc: &TruncationSpec) -> Result<IdentityReport> {
    assemble_identity_with_cap(problem, trunc, DEFAULT_MEMORY_CAP)
}

pub fn assemble_identity_with_cap(
    problem: &IdentityProblem,
    trunc: &TruncationSpec,
    memory_cap: usize,
) -> Result<IdentityReport> {
    let n = problem.dim;
    if trunc.spinor_dim != n {
        return Err(Error::DimensionMismatch { expected: n, got: trunc.spinor_dim });
    }
    if trunc.cutoffs.len() != problem.factors.len() {
        return Err(Error::DimensionMismatch { expected: problem.factors.len(), got: trunc.cutoffs.len() });
    }
    let total = trunc.total_size();
    let superop_entries: usize = trunc.cutoffs.iter().map(|m| (m + 1).pow(2) * n.pow(4)).sum();
    trunc.check_memory(total * total + superop_entries, memory_cap)?;

    let superops: Vec<Superop> = problem
        .factors
        .iter()
        .zip(&trunc.cutoffs)
        .map(|(f, &m)| factor_superop(f, m, n))
        .collect::<Result<_>>()?;

    let identity_vec: Vec<C64> = ComplexMatrix::identity(n).as_slice().to_vec();
    let mode_size = trunc.mode_size();
    let strides = trunc.strides();
    let modes: Vec<Vec<usize>> = trunc.cutoffs.iter().map(|&m| (0..=m).collect::<Vec<_>>()).multi_cartesian_product().collect();
    let mut op = ComplexMatrix::zeros(total);
    for mu in &modes {
        for nu in &modes {
            let mut x = identity_vec.clone();
            for k in (0..superops.len()).rev() {
                let cut = trunc.cutoffs[k];
                x = superops[k][mu[k] * (cut + 1) + nu[k]].mul_vec(&x);
            }
            let row_off: usize = mu.iter().zip(&strides).map(|(a, b)| a * b).sum();
            let col_off: usize = nu.iter().zip(&strides).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for ip in 0..n {
                    op.set(i * mode_size + row_off, ip * mode_size + col_off, x[i * n + ip] * problem.constant);
                }
            }
        }
    }
    let mut max_deviation = 0.0_f64;
    let mut max_off = 0.0_f64;
    let mut diag = (f64::INFINITY, f64::NEG_INFINITY);
    for i in 0..total {
        for j in 0..total {
            let v = op.get(i, j);
            if i == j {
                max_deviation = max_deviation.max((v - 1.0).norm());
                diag = (diag.0.min(v.re), diag.1.max(v.re));
            } else {
                max_deviation = max_deviation.max(v.norm());
                max_off = max_off.max(v.norm());
            }
        }
    }
    Ok(IdentityReport {
        name: problem.name.clone(),
        trunc: trunc.clone(),
        max_deviation,
        diagonal_range: diag,
        max_off_diagonal: max_off,
        operator: Some(op),
    })
}

fn radial_nodes(n: usize, scale: f64) -> Result<Vec<(f64, f64)>> {
    let rule = GaussianRadialRule::new(n, 0.0, scale)?;
    Ok(rule.radii.into_iter().zip(rule.weights).collect())
}

/// Quaternions in the complex representation with `dμ = W/(16π²)·r dr sinφ dφ dψ dθ`
/// per factor, `W = 2/π²` and `N = 2e^{r²+s²}`; over `N` the measure is
/// `1/(16π⁴)·Π r e^{−r²} sinφ`.
pub fn quaternion_complex_identity(quad: &QuadratureSpec) -> Result<IdentityProblem> {
    quad.validate()?;
    let radial = radial_nodes(quad.radial_nodes, 1.0)?;
    let polar = gauss_legendre(quad.polar_nodes, 0.0, PI)?;
    let angle = uniform_angle(quad.angle_nodes)?;
    let mut angular = Vec::with_capacity(polar.len() * angle.len() * angle.len());
    for (phi, wphi) in polar.iter() {
        for (psi, wpsi) in angle.iter() {
            let sigma = sigma_n(phi, psi);
            for (theta, wtheta) in angle.iter() {
                let (s, c) = theta.sin_cos();
                let u = &ComplexMatrix::scalar(2, C64::new(c, 0.0)) + &sigma.scale(C64::new(0.0, s));
                angular.push((wphi * phi.sin() * wpsi * wtheta, u));
            }
        }
    }
    let factor = MeasureFactor {
        weight: FactorWeight::Scalar(ScalarWeights::factorial()),
        nodes: FactorNodes::Separable { radial, angular },
    };
    Ok(IdentityProblem {
        name: "quaternion-complex".into(),
        dim: 2,
        constant: 1.0 / (16.0 * PI.powi(4)),
        factors: vec![factor.clone(), factor],
    })
}

/// A fixed unit quaternion used as the direction of the real-representation labels.
pub const REAL_REP_DIRECTION: QuaternionPolar = QuaternionPolar { r: 1.0, theta: 0.7, phi: 1.1, psi: 2.3 };

fn real_rep_angular(quad: &QuadratureSpec, direction: QuaternionPolar) -> Result<Vec<(f64, ComplexMatrix)>> {
    let m = quat_real_rep(direction.to_quaternion());
    Ok(uniform_angle(quad.angle_nodes)?
        .iter()
        .map(|(theta, w)| (w, m.scale(C64::from_polar(1.0, theta))))
        .collect())
}

/// Real-representation quaternions `t·M(â)e^{iθ}` with `dμ = dθ₁dθ₂ t dt s ds`
/// and `W = 4/π²`; over `N = 4e^{t²+s²}` this is `1/π²·Π t e^{−t²} dt dθ`.
pub fn quaternion_real_identity(quad: &QuadratureSpec) -> Result<IdentityProblem> {
    quad.validate()?;
    let factor = MeasureFactor {
        weight: FactorWeight::Scalar(ScalarWeights::factorial()),
        nodes: FactorNodes::Separable {
            radial: radial_nodes(quad.radial_nodes, 1.0)?,
            angular: real_rep_angular(quad, REAL_REP_DIRECTION)?,
        },
    };
    Ok(IdentityProblem {
        name: "quaternion-real".into(),
        dim: 4,
        constant: 1.0 / (PI * PI),
        factors: vec![factor.clone(), factor],
    })
}

/// Matrix-weighted real-representation quaternions with rotation blocks
/// `R_k(m)`; over `N = 4e^{Σ|q_k|²}` the measure is `1/π^τ·Π |q| e^{−|q|²} d|q| dθ`.
pub fn matrix_weight_identity(rotations: &[f64], quad: &QuadratureSpec) -> Result<IdentityProblem> {
    quad.validate()?;
    let radial = radial_nodes(quad.radial_nodes, 1.0)?;
    let angular = real_rep_angular(quad, REAL_REP_DIRECTION)?;
    let factors = rotations
        .iter()
        .map(|&x| MeasureFactor {
            weight: FactorWeight::Matrix(MatrixWeights::rotation_block(x)),
            nodes: FactorNodes::Separable { radial: radial.clone(), angular: angular.clone() },
        })
        .collect();
    Ok(IdentityProblem {
        name: "matrix-weight".into(),
        dim: 4,
        constant: PI.powi(-(rotations.len() as i32)),
        factors,
    })
}

/// Diagonal labels `Z = diag(r₁e^{iθ₁}, r₂e^{iθ₂})` with weights `diag(ω₁^m m!, ω₂^m m!)`
/// and density `Π_k r_k e^{−r_k²/ω_k}/(ω_k π)`.
pub fn diagonal_factor(omegas: [f64; 2], quad: &QuadratureSpec) -> Result<MeasureFactor> {
    let r1 = radial_nodes(quad.radial_nodes, omegas[0])?;
    let r2 = radial_nodes(quad.radial_nodes, omegas[1])?;
    let angle = uniform_angle(quad.angle_nodes)?;
    let norm = 1.0 / (omegas[0] * omegas[1] * PI * PI);
    let mut nodes = Vec::with_capacity(r1.len() * r2.len() * angle.len() * angle.len());
    for &(a, wa) in &r1 {
        for &(b, wb) in &r2 {
            for (t1, w1) in angle.iter() {
                for (t2, w2) in angle.iter() {
                    let z = ComplexMatrix::diag(&[C64::from_polar(a, t1), C64::from_polar(b, t2)]);
                    nodes.push((wa * wb * w1 * w2 * norm, z));
                }
            }
        }
    }
    Ok(MeasureFactor {
        weight: FactorWeight::Diagonal(omegas.iter().map(|&w| ScalarWeights::scaled_factorial(w)).collect()),
        nodes: FactorNodes::General(nodes),
    })
}

/// Two diagonal factors, e.g. a weak-coupling and a resonant JC system.
pub fn diagonal_identity(name: &str, first: [f64; 2], second: [f64; 2], quad: &QuadratureSpec) -> Result<IdentityProblem> {
    quad.validate()?;
    Ok(IdentityProblem {
        name: name.to_string(),
        dim: 2,
        constant: 1.0,
        factors: vec![diagonal_factor(first, quad)?, diagonal_factor(second, quad)?],
    })
}

/// Multiplies every node weight by zero; the assembled operator must vanish.
pub fn zero_measure(problem: &IdentityProblem) -> IdentityProblem {
    let mut p = problem.clone();
    p.constant = 0.0;
    p
}

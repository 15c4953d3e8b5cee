//! Jaynes–Cummings models: weak-coupling and resonant spectra, the two-mode
//! two-level spectrum, and the coherent-state families built on them.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::matrix::ComplexMatrix;
use crate::quadrature::{gauss_legendre, uniform_angle, GaussianRadialRule};
use crate::resolution::{moment_residuals, AxisRule, MomentGrid, MomentProblem, QuadratureSpec, MOMENT_TOL};
use crate::special::{hyp1f1, ln_factorial, ln_pochhammer};
use crate::states::{BuildOptions, DependentSpec, Factor, MvcsSpec, PolarLabel, TruncatedState, TruncationSpec};
use crate::weights::ScalarWeights;

/// Relative tolerance for two energies to count as equal.
pub const DEGENERACY_TOL: f64 = 1e-9;

/// Field frequency `ω`, atomic frequency `ω₀` and coupling `κ` (ħ = 1).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JcParams {
    pub omega: f64,
    pub omega0: f64,
    pub kappa: f64,
}

impl JcParams {
    pub fn new(omega: f64, omega0: f64, kappa: f64) -> Self {
        Self { omega, omega0, kappa }
    }

    /// Builds the parameters from the detuning `Δ = ω − ω₀`.
    pub fn with_detuning(omega: f64, detuning: f64, kappa: f64) -> Self {
        Self { omega, omega0: omega - detuning, kappa }
    }

    pub fn detuning(&self) -> f64 {
        self.omega - self.omega0
    }

    /// `δ = (Δ/2κ)²`; infinite without coupling.
    pub fn delta(&self) -> f64 {
        (self.detuning() / (2.0 * self.kappa)).powi(2)
    }

    fn require_weak(&self) -> Result<()> {
        if !(self.detuning() > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "weak-coupling model needs a positive detuning, got {}",
                self.detuning()
            )));
        }
        Ok(())
    }

    /// `ω±(κ) = (ω ∓ κ²)/Δ`.
    pub fn omega_pm(&self) -> Result<(f64, f64)> {
        self.require_weak()?;
        let d = self.detuning();
        let k2 = self.kappa * self.kappa;
        Ok(((self.omega - k2) / d, (self.omega + k2) / d))
    }

    /// `0 ≤ κ/ω ≤ 2√(δ+1)`.
    pub fn in_monotonicity_window(&self) -> bool {
        let ratio = self.kappa / self.omega;
        ratio >= 0.0 && (self.kappa == 0.0 || ratio <= 2.0 * (self.delta() + 1.0).sqrt())
    }
}

/// `(E_n^+, E_n^−) = (ω₊n, ω₋n)`.
pub fn jc_weak_spectrum(p: &JcParams, n: u64) -> Result<(f64, f64)> {
    let (wp, wm) = p.omega_pm()?;
    Ok((wp * n as f64, wm * n as f64))
}

/// `κ√(δ+n) = √(Δ²/4 + κ²n)`, finite at zero coupling.
fn kappa_root(p: &JcParams, n: f64) -> f64 {
    (p.detuning().powi(2) / 4.0 + p.kappa * p.kappa * n).sqrt()
}

/// Exact levels `(ε_n^+, ε_n^−)` with `ε_n^− = ωn + κ√(δ+n)` and
/// `ε_n^+ = ω(n+1) − κ√(δ+n+1)`.
pub fn jc_exact_spectrum(p: &JcParams, n: u64) -> (f64, f64) {
    let nf = n as f64;
    (p.omega * (nf + 1.0) - kappa_root(p, nf + 1.0), p.omega * nf + kappa_root(p, nf))
}

/// `Ê_n = ωn` for exact resonance without coupling.
pub fn jc_resonance_spectrum(omega: f64, n: u64) -> f64 {
    omega * n as f64
}

/// `ρ̂(n) = ωⁿ Γ(n+1)`.
pub fn resonance_weights(omega: f64) -> ScalarWeights {
    ScalarWeights::scaled_factorial(omega)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotonicityReport {
    pub params: JcParams,
    pub in_window: bool,
    pub n_max: u64,
    pub plus_increasing: bool,
    pub minus_increasing: bool,
}

/// Checks that `ε_n^±` strictly increase for `n ≤ n_max`.
pub fn monotonicity_scan(p: &JcParams, n_max: u64) -> Result<MonotonicityReport> {
    p.require_weak()?;
    let levels: Vec<(f64, f64)> = (0..=n_max).map(|n| jc_exact_spectrum(p, n)).collect();
    let plus_increasing = levels.windows(2).all(|w| w[1].0 > w[0].0);
    let minus_increasing = levels.windows(2).all(|w| w[1].1 > w[0].1);
    Ok(MonotonicityReport { params: *p, in_window: p.in_monotonicity_window(), n_max, plus_increasing, minus_increasing })
}

/// Mode frequencies and coupling of the two-mode two-level model.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TwoModeParams {
    pub omega1: f64,
    pub omega2: f64,
    pub g: f64,
}

impl TwoModeParams {
    pub fn new(omega1: f64, omega2: f64, g: f64) -> Result<Self> {
        if !(omega1 > 0.0 && omega2 > 0.0) {
            return Err(Error::InvalidParameter("mode frequencies must be positive".into()));
        }
        Ok(Self { omega1, omega2, g })
    }

    /// `α = 1 + [ω₁(n+1) + ω₂]/ω₂`.
    pub fn alpha(&self, n: usize) -> f64 {
        1.0 + (self.omega1 * (n as f64 + 1.0) + self.omega2) / self.omega2
    }
}

/// `E_±^{n,m} = ω₁(n+1) + ω₂(m+1) ± g(n+1)(m+1)`.
pub fn two_mode_spectrum(p: &TwoModeParams, n: u64, m: u64) -> (f64, f64) {
    let (nf, mf) = (n as f64 + 1.0, m as f64 + 1.0);
    let base = p.omega1 * nf + p.omega2 * mf;
    (base + p.g * nf * mf, base - p.g * nf * mf)
}

/// Two levels `(n, m, branch)` with equal energy; branch `+1` or `−1`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Collision {
    pub first: (u64, u64, i8),
    pub second: (u64, u64, i8),
    pub energy: f64,
}

/// All coincidences between levels with distinct `(n, m)` and `n + m ≤ max_sum`.
pub fn degeneracy_scan(p: &TwoModeParams, max_sum: u64) -> Vec<Collision> {
    let mut levels = Vec::new();
    for n in 0..=max_sum {
        for m in 0..=max_sum - n {
            let (ep, em) = two_mode_spectrum(p, n, m);
            levels.push((n, m, 1i8, ep));
            levels.push((n, m, -1i8, em));
        }
    }
    levels.sort_by(|a, b| a.3.total_cmp(&b.3));
    let mut out = Vec::new();
    for (i, a) in levels.iter().enumerate() {
        for b in &levels[i + 1..] {
            if (b.3 - a.3).abs() > DEGENERACY_TOL * a.3.abs().max(1.0) {
                break;
            }
            if (a.0, a.1) != (b.0, b.1) {
                out.push(Collision { first: (a.0, a.1, a.2), second: (b.0, b.1, b.2), energy: a.3 });
            }
        }
    }
    out
}

fn label(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

/// Labels `Z₁ = diag(z₁¹, z₂¹)` and `Z₂ = diag(z₁², z₂²)` with weights
/// `diag(ρ₊, ρ₋)` and `diag(ρ̂, ρ̂)`.
pub fn tensored_jc_spec(weak: &JcParams, omega_c: f64, z1: [C64; 2], z2: [C64; 2]) -> Result<MvcsSpec> {
    let (wp, wm) = weak.omega_pm()?;
    if !(wp > 0.0 && wm > 0.0 && omega_c > 0.0) {
        return Err(Error::WeightNonPositive { index: 1, value: wp.min(wm).min(omega_c) });
    }
    Ok(MvcsSpec::new(
        "tensored-jc",
        label(&[
            ("r11", z1[0].norm()),
            ("theta11", z1[0].arg()),
            ("r21", z1[1].norm()),
            ("theta21", z1[1].arg()),
            ("r12", z2[0].norm()),
            ("theta12", z2[0].arg()),
            ("r22", z2[1].norm()),
            ("theta22", z2[1].arg()),
        ]),
        vec![
            Factor::diagonal(
                "Z1",
                ComplexMatrix::diag(&z1),
                vec![ScalarWeights::scaled_factorial(wp), ScalarWeights::scaled_factorial(wm)],
            ),
            Factor::diagonal("Z2", ComplexMatrix::diag(&z2), vec![resonance_weights(omega_c); 2]),
        ],
    ))
}

/// The product of exponentials given for the tensored JC states,
/// `exp(|z₁¹|²/ω₊ + |z₂¹|²/ω₋ + |z₁²|²/ω + |z₂²|²/ω)`.
pub fn tensored_jc_printed_normalization(weak: &JcParams, omega_c: f64, z1: [C64; 2], z2: [C64; 2]) -> Result<f64> {
    let (wp, wm) = weak.omega_pm()?;
    Ok((z1[0].norm_sqr() / wp + z1[1].norm_sqr() / wm + (z2[0].norm_sqr() + z2[1].norm_sqr()) / omega_c).exp())
}

/// The trace series in closed form:
/// `exp(|z₁¹|²/ω₊ + |z₁²|²/ω) + exp(|z₂¹|²/ω₋ + |z₂²|²/ω)`.
pub fn tensored_jc_trace_normalization(weak: &JcParams, omega_c: f64, z1: [C64; 2], z2: [C64; 2]) -> Result<f64> {
    let (wp, wm) = weak.omega_pm()?;
    Ok((z1[0].norm_sqr() / wp + z2[0].norm_sqr() / omega_c).exp()
        + (z1[1].norm_sqr() / wm + z2[1].norm_sqr() / omega_c).exp())
}

pub fn build_tensored_jc_cs(
    weak: &JcParams,
    omega_c: f64,
    z1: [C64; 2],
    z2: [C64; 2],
    trunc: &TruncationSpec,
    opts: &BuildOptions,
) -> Result<Vec<TruncatedState>> {
    tensored_jc_spec(weak, omega_c, z1, z2)?.build_all(trunc, opts)
}

fn require_uncoupled(p: &TwoModeParams) -> Result<()> {
    if p.g != 0.0 {
        return Err(Error::InvalidParameter("two-mode coherent states are defined for g = 0 only".into()));
    }
    Ok(())
}

/// States over `Z = diag(z₁, z₂)` and `𝔷 = diag(v, v̄)` with
/// `R(n) = Γ(n+2)ω₁ⁿ`, `R(n,m) = ω₂^m(α_n)_m` and inner sums normalized by
/// `₁F₁(1; α_n; s²/ω₂)`.
pub fn two_mode_spec(p: &TwoModeParams, z: [C64; 2], v: C64) -> Result<DependentSpec> {
    require_uncoupled(p)?;
    let params = *p;
    Ok(DependentSpec {
        family: "two-mode".into(),
        label: label(&[
            ("r1", z[0].norm()),
            ("theta1", z[0].arg()),
            ("r2", z[1].norm()),
            ("theta2", z[1].arg()),
            ("s", v.norm()),
            ("eta", v.arg()),
        ]),
        outer: PolarLabel {
            radial: ComplexMatrix::diag_real(&[z[0].norm(), z[1].norm()]),
            generator: ComplexMatrix::diag_real(&[z[0].arg(), z[1].arg()]),
            angle: 1.0,
        },
        outer_exponent: 1.0,
        outer_weights: ScalarWeights::shifted_gamma(p.omega1),
        inner: PolarLabel {
            radial: ComplexMatrix::scalar(2, C64::new(v.norm(), 0.0)),
            generator: ComplexMatrix::diag_real(&[v.arg(), -v.arg()]),
            angle: 1.0,
        },
        inner_exponent: 1.0,
        inner_ln_rho: Arc::new(move |n, m| m as f64 * params.omega2.ln() + ln_pochhammer(params.alpha(n), m as u64)),
    })
}

pub fn build_two_mode_cs(
    p: &TwoModeParams,
    z: [C64; 2],
    v: C64,
    trunc: &TruncationSpec,
    opts: &BuildOptions,
) -> Result<Vec<TruncatedState>> {
    two_mode_spec(p, z, v)?.build_all(trunc, opts)
}

/// `N(𝔷, n) = ₁F₁(1; α_n; s²/ω₂)`.
pub fn two_mode_inner_norm(p: &TwoModeParams, s: f64, n: usize) -> Result<f64> {
    hyp1f1(1.0, p.alpha(n), s * s / p.omega2)
}

/// The stated upper bound `(ω₁/r₁²)e^{r₁²/ω₁} + (ω₁/r₂²)e^{r₂²/ω₁}` on `N(Z, 𝔷)`.
pub fn two_mode_outer_bound(p: &TwoModeParams, r1: f64, r2: f64) -> f64 {
    let term = |r: f64| p.omega1 / (r * r) * (r * r / p.omega1).exp();
    term(r1) + term(r2)
}

/// `N(Z, 𝔷) = Σ_n (r₁^{2n} + r₂^{2n})/(ω₁ⁿ Γ(n+2))` in closed form.
pub fn two_mode_outer_norm(p: &TwoModeParams, r1: f64, r2: f64) -> f64 {
    let term = |r: f64| {
        let x = r * r / p.omega1;
        if x == 0.0 {
            1.0
        } else {
            x.exp_m1() / x
        }
    };
    term(r1) + term(r2)
}

/// The variant with shifted levels: `R(n) = n!ω₁ⁿ`, `R(n,m) = m!ω₂^m` and
/// independent sums over `Z = diag(z₁, z₂)`, `𝔷 = diag(v₁, v₂)`.
pub fn shifted_two_mode_spec(p: &TwoModeParams, z: [C64; 2], v: [C64; 2]) -> Result<MvcsSpec> {
    require_uncoupled(p)?;
    Ok(MvcsSpec::new(
        "shifted-two-mode",
        label(&[
            ("r1", z[0].norm()),
            ("r2", z[1].norm()),
            ("s1", v[0].norm()),
            ("s2", v[1].norm()),
        ]),
        vec![
            Factor::diagonal("Z", ComplexMatrix::diag(&z), vec![ScalarWeights::scaled_factorial(p.omega1); 2]),
            Factor::diagonal("V", ComplexMatrix::diag(&v), vec![ScalarWeights::scaled_factorial(p.omega2); 2]),
        ],
    ))
}

/// Which radial density to test against `∫ r^{2n}λ(r)dr = ω₁ⁿΓ(n+2)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RadialDensity {
    /// `λ(r) = (2r²/ω₁²)e^{−r²/ω₁²}`.
    Printed,
    /// `λ*(r) = (2r³/ω₁²)e^{−r²/ω₁}`.
    Corrected,
}

impl RadialDensity {
    pub fn ln_density(self, omega1: f64, r: f64) -> f64 {
        let w2 = omega1 * omega1;
        match self {
            Self::Printed => (2.0 / w2).ln() + 2.0 * r.ln() - r * r / w2,
            Self::Corrected => (2.0 / w2).ln() + 3.0 * r.ln() - r * r / omega1,
        }
    }

    /// Reference rule that makes `r^{2n}λ(r)` exact.
    fn axis(self, omega1: f64, n: usize) -> AxisRule {
        match self {
            Self::Printed => AxisRule::new(n as f64 + 0.5, omega1 * omega1),
            Self::Corrected => AxisRule::new(n as f64 + 1.0, omega1),
        }
    }
}

pub fn radial_density_problem(density: RadialDensity, omega1: f64, n_max: usize) -> MomentProblem {
    let name = match density {
        RadialDensity::Printed => "two-mode-lambda-printed",
        RadialDensity::Corrected => "two-mode-lambda-corrected",
    };
    MomentProblem {
        name: name.into(),
        index_ranges: vec![0..=n_max],
        axes: Arc::new(move |idx| vec![density.axis(omega1, idx[0])]),
        ln_integrand: Arc::new(move |idx, r| 2.0 * idx[0] as f64 * r[0].ln() + density.ln_density(omega1, r[0])),
        ln_target: Arc::new(move |idx| idx[0] as f64 * omega1.ln() + ln_factorial(idx[0] as u64 + 1)),
        tol: MOMENT_TOL,
    }
}

/// `ln λ̂(s, n) = ln 2 + (2α−1)ln s − α ln ω₂ − ln Γ(α) − s²/ω₂`.
pub fn ln_inner_density(p: &TwoModeParams, n: usize, s: f64) -> f64 {
    let a = p.alpha(n);
    2f64.ln() + (2.0 * a - 1.0) * s.ln() - a * p.omega2.ln() - ln_gamma(a) - s * s / p.omega2
}

/// `∫ s^{2m}λ̂(s, n)ds = ω₂^m(α_n)_m` for `n, m ≤ max`.
pub fn inner_density_problem(p: &TwoModeParams, max: usize) -> MomentProblem {
    let params = *p;
    MomentProblem {
        name: "two-mode-lambda-hat".into(),
        index_ranges: vec![0..=max, 0..=max],
        axes: Arc::new(move |idx| vec![AxisRule::new(idx[1] as f64 + params.alpha(idx[0]) - 1.0, params.omega2)]),
        ln_integrand: Arc::new(move |idx, s| 2.0 * idx[1] as f64 * s[0].ln() + ln_inner_density(&params, idx[0], s[0])),
        ln_target: Arc::new(move |idx| {
            idx[1] as f64 * params.omega2.ln() + ln_pochhammer(params.alpha(idx[0]), idx[1] as u64)
        }),
        tol: MOMENT_TOL,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityReport {
    pub printed: MomentGrid,
    pub corrected: MomentGrid,
    pub inner: MomentGrid,
}

/// Moment checks for both radial densities and the inner density, `n, m ≤ max`.
pub fn two_mode_density_check(p: &TwoModeParams, max: usize, quad: &QuadratureSpec) -> Result<DensityReport> {
    Ok(DensityReport {
        printed: moment_residuals(&radial_density_problem(RadialDensity::Printed, p.omega1, max), quad)?,
        corrected: moment_residuals(&radial_density_problem(RadialDensity::Corrected, p.omega1, max), quad)?,
        inner: moment_residuals(&inner_density_problem(p, max), quad)?,
    })
}

/// `(2π)^{−4}∫ λ(r₁)λ(r₂)λ̂(s,0)² dr₁dθ₁dr₂dθ₂ dsdη dsdη`, integrated numerically.
/// Equals 1 exactly when both densities have unit mass.
pub fn composite_normalization(p: &TwoModeParams, density: RadialDensity, quad: &QuadratureSpec) -> Result<f64> {
    let n = quad.radial_nodes;
    // Rules exact for each one-dimensional factor.
    let radial_rule = GaussianRadialRule::new(n, density.axis(p.omega1, 0).alpha, density.axis(p.omega1, 0).scale)?;
    let inner_rule = GaussianRadialRule::new(n, p.alpha(0) - 1.0, p.omega2)?;
    let radial_mass = radial_rule.integrate_ln(|r| density.ln_density(p.omega1, r));
    let inner_mass = inner_rule.integrate_ln(|s| ln_inner_density(p, 0, s));
    let angle_mass: f64 = uniform_angle(quad.angle_nodes)?.weights.iter().sum();
    Ok((radial_mass * angle_mass).powi(2) * (inner_mass * angle_mass).powi(2) / (2.0 * PI).powi(4))
}

/// Legendre check of `₁F₁(1; α; x) ≥ 1` against its integral representation
/// `₁F₁(1; α; x) = (α−1)∫₀¹ e^{xt}(1−t)^{α−2} dt`; accurate for `α ≥ 2`.
pub fn hyp1f1_integral(alpha: f64, x: f64, nodes: usize) -> Result<f64> {
    if alpha <= 1.0 {
        return Err(Error::InvalidParameter("integral form needs α > 1".into()));
    }
    let rule = gauss_legendre(nodes, 0.0, 1.0)?;
    Ok((alpha - 1.0) * rule.integrate(|t| (x * t).exp() * (1.0 - t).powf(alpha - 2.0)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::{factorial, pochhammer};
    use crate::states::norm_check;

    #[test]
    fn weak_spectrum_examples() {
        let p = JcParams::with_detuning(2.0, 1.0, 0.0);
        assert_eq!(jc_weak_spectrum(&p, 3).unwrap(), (6.0, 6.0));
        let p = JcParams::with_detuning(3.0, 2.0, 1.0);
        assert_eq!(jc_weak_spectrum(&p, 1).unwrap(), (1.0, 2.0));
        assert_eq!(jc_weak_spectrum(&p, 0).unwrap(), (0.0, 0.0));
        assert!(jc_weak_spectrum(&JcParams::with_detuning(1.0, 0.0, 0.1), 1).is_err());
    }

    #[test]
    fn exact_levels_against_root_form() {
        let p = JcParams::with_detuning(1.3, 0.4, 0.2);
        let delta = p.delta();
        for n in 0..20u64 {
            let (ep, em) = jc_exact_spectrum(&p, n);
            let nf = n as f64;
            assert!((em - (p.omega * nf + p.kappa * (delta + nf).sqrt())).abs() < 1e-12);
            assert!((ep - (p.omega * (nf + 1.0) - p.kappa * (delta + nf + 1.0).sqrt())).abs() < 1e-12);
        }
    }

    #[test]
    fn monotone_inside_window() {
        for &omega in &[0.5, 1.0, 3.0] {
            for &det in &[0.1, 0.5, 2.0] {
                for &kappa in &[0.0, 0.05, 0.3, 1.0, 4.0] {
                    let p = JcParams::with_detuning(omega, det, kappa);
                    let rep = monotonicity_scan(&p, 200).unwrap();
                    assert!(rep.minus_increasing);
                    if rep.in_window {
                        assert!(rep.plus_increasing, "{p:?}");
                    }
                }
            }
        }
    }

    #[test]
    fn resonance_examples() {
        assert_eq!(jc_resonance_spectrum(1.0, 5), 5.0);
        assert_eq!(jc_resonance_spectrum(1.0, 0), 0.0);
        let w = resonance_weights(2.0).values(3).unwrap();
        assert_eq!(w[0], 1.0);
        assert!((w[3] - 48.0).abs() < 1e-12);
    }

    #[test]
    fn two_mode_spectrum_examples() {
        let p = TwoModeParams::new(1.0, 2.0, 0.0).unwrap();
        assert_eq!(two_mode_spectrum(&p, 0, 0), (3.0, 3.0));
        let p = TwoModeParams::new(1.0, 2.0, 1.0).unwrap();
        assert_eq!(two_mode_spectrum(&p, 1, 1), (10.0, 2.0));
        let free = TwoModeParams::new(0.7, 1.9, 0.0).unwrap();
        for n in 0..5 {
            for m in 0..5 {
                let (ep, em) = two_mode_spectrum(&free, n, m);
                let sum = free.omega1 * (n + 1) as f64 + free.omega2 * (m + 1) as f64;
                assert_eq!((ep, em), (sum, sum));
            }
        }
    }

    #[test]
    fn degeneracy_depends_on_frequency_ratio() {
        let equal = TwoModeParams::new(1.0, 1.0, 0.0).unwrap();
        let hits = degeneracy_scan(&equal, 30);
        assert!(hits.iter().any(|c| {
            let pair = [(c.first.0, c.first.1), (c.second.0, c.second.1)];
            pair.contains(&(0, 1)) && pair.contains(&(1, 0))
        }));
        let irrational = TwoModeParams::new(1.0, 2f64.sqrt(), 0.0).unwrap();
        assert!(degeneracy_scan(&irrational, 30).is_empty());
    }

    #[test]
    fn alpha_and_hypergeometric() {
        let p = TwoModeParams::new(1.0, 1.0, 0.0).unwrap();
        assert_eq!(p.alpha(0), 3.0);
        assert_eq!(two_mode_inner_norm(&p, 0.0, 0).unwrap(), 1.0);
        let partial: f64 = (0..60).map(|m| 1.0 / pochhammer(3.0, m)).sum();
        assert!((two_mode_inner_norm(&p, 1.0, 0).unwrap() - partial).abs() < 1e-12);
        assert_eq!(pochhammer(3.0, 2), 12.0);
        for &(a, x) in &[(2.5, 0.3), (3.0, 2.0), (7.25, 9.0)] {
            let f = hyp1f1(1.0, a, x).unwrap();
            assert!(f >= 1.0);
            assert!((f / hyp1f1_integral(a, x, 200).unwrap() - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn tensored_jc_states() {
        let weak = JcParams::with_detuning(2.0, 1.0, 0.3);
        let zero = [C64::new(0.0, 0.0); 2];
        assert_eq!(tensored_jc_printed_normalization(&weak, 1.0, zero, zero).unwrap(), 1.0);
        let trunc = TruncationSpec::new(2, vec![40, 40]).unwrap();
        let z1 = [C64::from_polar(0.8, 0.3), C64::from_polar(1.0, -1.2)];
        let z2 = [C64::from_polar(0.5, 2.0), C64::from_polar(0.9, 0.1)];
        let states = build_tensored_jc_cs(&weak, 1.0, z1, z2, &trunc, &BuildOptions::default()).unwrap();
        assert!(norm_check(&states).unwrap().residual < 1e-10);
        let series = states[0].normalization;
        let closed = tensored_jc_trace_normalization(&weak, 1.0, z1, z2).unwrap();
        assert!((series / closed - 1.0).abs() < 1e-12);
    }

    #[test]
    fn unit_frequencies_normalization() {
        let weak = JcParams::new(1.0, 0.0, 0.0);
        let ones = [C64::new(1.0, 0.0); 2];
        let printed = tensored_jc_printed_normalization(&weak, 1.0, ones, ones).unwrap();
        assert!((printed - 4f64.exp()).abs() < 1e-12);
        let trace = tensored_jc_trace_normalization(&weak, 1.0, ones, ones).unwrap();
        assert!((trace - 2.0 * 2f64.exp()).abs() < 1e-12);
    }

    #[test]
    fn two_mode_states() {
        let p = TwoModeParams::new(1.2, 0.8, 0.0).unwrap();
        let z = [C64::from_polar(0.9, 0.4), C64::from_polar(0.6, 2.2)];
        let v = C64::from_polar(0.7, 1.1);
        let spec = two_mode_spec(&p, z, v).unwrap();
        for n in 0..5 {
            let series = spec.inner_norm(n).unwrap();
            assert!((series / two_mode_inner_norm(&p, 0.7, n).unwrap() - 1.0).abs() < 1e-13);
        }
        let outer = spec.outer_norm().unwrap();
        assert!((outer / two_mode_outer_norm(&p, 0.9, 0.6) - 1.0).abs() < 1e-13);
        assert!(outer <= two_mode_outer_bound(&p, 0.9, 0.6));
        let trunc = TruncationSpec::new(2, vec![40, 40]).unwrap();
        let states = build_two_mode_cs(&p, z, v, &trunc, &BuildOptions::default()).unwrap();
        assert!(norm_check(&states).unwrap().residual < 1e-10);
        assert!(two_mode_spec(&TwoModeParams::new(1.0, 1.0, 0.5).unwrap(), z, v).is_err());
    }

    #[test]
    fn shifted_variant_normalizes() {
        let p = TwoModeParams::new(0.9, 1.4, 0.0).unwrap();
        let spec = shifted_two_mode_spec(&p, [C64::new(0.5, 0.5), C64::new(-0.3, 0.8)], [C64::new(0.2, -0.9), C64::new(1.0, 0.0)]).unwrap();
        let trunc = TruncationSpec::new(2, vec![40, 40]).unwrap();
        assert!(norm_check(&spec.build_all(&trunc, &BuildOptions::default()).unwrap()).unwrap().residual < 1e-10);
    }

    #[test]
    fn density_outcomes() {
        let quad = QuadratureSpec::default();
        let p = TwoModeParams::new(1.0, 1.0, 0.0).unwrap();
        let rep = two_mode_density_check(&p, 8, &quad).unwrap();
        assert!(!rep.printed.pass);
        assert!((rep.printed.rows[0].computed - PI.sqrt() / 2.0).abs() < 1e-12);
        assert!(rep.corrected.pass, "{:?}", rep.corrected.worst());
        assert!(rep.inner.pass, "{:?}", rep.inner.worst());
        assert!((rep.inner.rows[0].computed - 1.0).abs() < 1e-12);
        let q = TwoModeParams::new(1.7, 0.6, 0.0).unwrap();
        let rep = two_mode_density_check(&q, 8, &quad).unwrap();
        assert!(rep.corrected.pass && rep.inner.pass && !rep.printed.pass);
        for row in &rep.corrected.rows {
            let n = row.indices[0] as u64;
            assert!((row.target / (1.7f64.powi(n as i32) * factorial(n + 1)) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn composite_normalization_outcomes() {
        let quad = QuadratureSpec::default();
        let p = TwoModeParams::new(1.0, 1.0, 0.0).unwrap();
        let printed = composite_normalization(&p, RadialDensity::Printed, &quad).unwrap();
        assert!((printed - PI / 4.0).abs() < 1e-12);
        let corrected = composite_normalization(&p, RadialDensity::Corrected, &quad).unwrap();
        assert!((corrected - 1.0).abs() < 1e-12);
    }
}

//! Named verification presets. Each preset bundles the check suites of one
//! construction together with default parameters that a config may override.

use std::collections::BTreeMap;
use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::conditions::{
    check_clifford_alternative, check_pair_conditions, extension_family, quaternion_complex_family,
    quaternion_real_family, scaled_family, DEFAULT_CONDITION_TOL, DEFAULT_SAMPLES,
};
use crate::error::{Error, Result};
use crate::hypercomplex::{
    extension_block, extension_theta, oct_left_rep, oct_right_rep, quat_complex_rep, quat_polar_decompose,
    quat_real_rep, sigma_n, Octonion, Quaternion, QuaternionPolar,
};
use crate::jc::{self, JcParams, RadialDensity, TwoModeParams};
use crate::matrix::{herm_exp, ComplexMatrix};
use crate::oscillator::{
    build_ladders, commutator_report, eigen_check, ladder_residual, number_operator_residual, LadderVariant,
    LADDER_TOL,
};
use crate::report::{Check, Provenance, SpectrumRow};
use crate::resolution::{
    assemble_identity, beta_moment_check, dependent_identity_check, diagonal_identity, diagonal_mode_moments,
    extension_composite_moment_grid, extension_moment_grid, matrix_weight_identity, matrix_weight_moments,
    moment_residuals, quaternion_complex_identity, quaternion_complex_moments, quaternion_real_identity,
    quaternion_real_moments, DependentDensity, REAL_REP_DIRECTION, IdentityProblem, MomentGrid, MomentProblem, QuadratureSpec,
    IDENTITY_TOL,
};
use crate::special::binomial;
use crate::states::{
    norm_check, normalization_factor, BuildOptions, DependentSpec, Factor, MvcsSpec, PolarLabel, TruncatedState,
    TruncationSpec,
};
use crate::weights::{x_sequence, MatrixWeights, ScalarWeights};

use Provenance::{ClosedForm, DerivedOracle, Trivial};

pub const DEFAULT_CUTOFF: usize = 40;
/// Per-factor cutoff of the identity assemblies.
pub const IDENTITY_CUTOFF: usize = 5;
/// Relative tolerance of series normalizations against closed forms.
pub const NORMALIZATION_TOL: f64 = 1e-9;
/// Tolerance of `|Σ_j ‖state_j‖² − 1|`.
pub const UNITY_TOL: f64 = 1e-10;
/// Tolerance of the representation identities.
pub const ALGEBRA_TOL: f64 = 1e-12;
pub const ALGEBRA_SAMPLES: usize = 1000;
pub const MOMENT_MAX: usize = 10;

/// Settings shared by every suite of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSettings {
    /// Per-factor cutoff of the state builds and normalization series.
    pub cutoff: usize,
    pub identity_cutoff: usize,
    pub quad: QuadratureSpec,
    /// Replaces every default tolerance when set.
    pub tol: Option<f64>,
    pub seed: u64,
    /// Parameter overrides for the preset, as a JSON object.
    pub params: serde_json::Value,
}

impl Default for RunSettings {
    fn default() -> Self {
        Self {
            cutoff: DEFAULT_CUTOFF,
            identity_cutoff: IDENTITY_CUTOFF,
            quad: QuadratureSpec::default(),
            tol: None,
            seed: 0,
            params: serde_json::Value::Object(Default::default()),
        }
    }
}

impl RunSettings {
    fn tol(&self, default: f64) -> f64 {
        self.tol.unwrap_or(default)
    }

    fn params<T: DeserializeOwned>(&self) -> Result<T> {
        parse_params(&self.params)
    }

    fn opts(&self) -> BuildOptions {
        BuildOptions { strict: false, tail_tol: self.tol(UNITY_TOL), ..BuildOptions::default() }
    }

    fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

fn parse_params<T: DeserializeOwned>(params: &serde_json::Value) -> Result<T> {
    let value = if params.is_null() { serde_json::Value::Object(Default::default()) } else { params.clone() };
    serde_json::from_value(value).map_err(|e| Error::Config(format!("invalid preset parameters: {e}")))
}

/// Checks, moment grids and spectrum rows produced by one or more suites.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SuiteOutput {
    pub checks: Vec<Check>,
    pub moments: Vec<MomentGrid>,
    pub spectrum: Vec<SpectrumRow>,
}

impl SuiteOutput {
    fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    fn grid(&mut self, grid: MomentGrid, provenance: Provenance) {
        self.checks.push(Check::from_grid(&grid, provenance));
        self.moments.push(grid);
    }

    fn extend(&mut self, prefix: &str, other: SuiteOutput) {
        self.checks.extend(other.checks.into_iter().map(|mut c| {
            c.name = format!("{prefix}/{}", c.name);
            c
        }));
        self.moments.extend(other.moments);
        self.spectrum.extend(other.spectrum);
    }
}

type SuiteFn = fn(&RunSettings) -> Result<SuiteOutput>;
type StateFn = fn(&serde_json::Value, usize) -> Result<Vec<TruncatedState>>;

pub struct Preset {
    pub name: &'static str,
    pub description: &'static str,
    suites: &'static [(&'static str, SuiteFn)],
    states: StateFn,
}

impl std::fmt::Debug for Preset {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Preset").field("name", &self.name).finish()
    }
}

impl Preset {
    pub fn suite_names(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.suites.iter().map(|(n, _)| *n)
    }

    /// Runs every suite. A suite that errors contributes one failing check
    /// carrying the error message; the output order never depends on `parallel`.
    pub fn run(&self, settings: &RunSettings, parallel: bool) -> SuiteOutput {
        let run_one = |(name, f): &(&'static str, SuiteFn)| -> (&'static str, SuiteOutput) {
            let out = f(settings).unwrap_or_else(|e| SuiteOutput {
                checks: vec![Check::new("error", 0.0, f64::NAN, f64::INFINITY, 0.0, Trivial).with_detail(e.to_string())],
                ..SuiteOutput::default()
            });
            (name, out)
        };
        let results: Vec<_> = if parallel {
            self.suites.par_iter().map(run_one).collect()
        } else {
            self.suites.iter().map(run_one).collect()
        };
        let mut out = SuiteOutput::default();
        for (name, r) in results {
            out.extend(name, r);
        }
        out
    }

    /// States for every spinor index `j` at the given parameters.
    pub fn states(&self, params: &serde_json::Value, cutoff: usize) -> Result<Vec<TruncatedState>> {
        (self.states)(params, cutoff)
    }
}

pub fn presets() -> &'static [Preset] {
    PRESETS
}

pub fn find_preset(name: &str) -> Result<&'static Preset> {
    PRESETS.iter().find(|p| p.name == name).ok_or_else(|| {
        let known: Vec<_> = PRESETS.iter().map(|p| p.name).collect();
        Error::Config(format!("unknown preset '{name}' (known: {})", known.join(", ")))
    })
}

static PRESETS: &[Preset] = &[
    Preset {
        name: "quaternion-complex-2.1",
        description: "Quaternions in the 2x2 complex representation with factorial weights",
        suites: &[
            ("algebra", qc_algebra),
            ("conditions", qc_conditions),
            ("norms", qc_norms),
            ("moments", qc_moments),
            ("identity", qc_identity),
        ],
        states: qc_states,
    },
    Preset {
        name: "extension-2.2",
        description: "4x4 block extension with per-factor densities 16/(r^2+s^2)",
        suites: &[
            ("algebra", ext_algebra),
            ("conditions", ext_conditions),
            ("norms", ext_norms),
            ("moments", ext_moments),
        ],
        states: ext_states,
    },
    Preset {
        name: "extension-2.2-printed-composite",
        description: "Block extension moments with a single shared normalization (expected to fail)",
        suites: &[("moments", ext_composite_moments)],
        states: ext_states,
    },
    Preset {
        name: "quaternion-real-2.3",
        description: "Quaternions in the real 4x4 representation with factorial weights",
        suites: &[
            ("algebra", qr_algebra),
            ("conditions", qr_conditions),
            ("norms", qr_norms),
            ("moments", qr_moments),
            ("identity", qr_identity),
        ],
        states: qr_states,
    },
    Preset {
        name: "octonion-2.4",
        description: "Left and right 8x8 octonion representations",
        suites: &[("algebra", oct_algebra), ("norms", oct_norms)],
        states: oct_states,
    },
    Preset {
        name: "matrix-weight-3",
        description: "Real quaternion labels with 4x4 rotation-block matrix weights",
        suites: &[
            ("algebra", mw_algebra),
            ("norms", mw_norms),
            ("moments", mw_moments),
            ("identity", mw_identity),
        ],
        states: mw_states,
    },
    Preset {
        name: "dependent-5",
        description: "Dependent summation with binomial inner weights and corrected densities",
        suites: &[("norms", dep_norms), ("moments", dep_moments)],
        states: dep_states,
    },
    Preset {
        name: "dependent-5-printed-density",
        description: "Dependent summation with the stated outer normalization and density (expected to fail)",
        suites: &[("norms", dep_printed_norms), ("moments", dep_printed_moments)],
        states: dep_states,
    },
    Preset {
        name: "oscillator-6",
        description: "Ladder operators, Weyl-Heisenberg commutators and the eigenrelation",
        suites: &[("oscillator", osc_suite)],
        states: qr_states,
    },
    Preset {
        name: "tensored-jc-7.1",
        description: "Weak-coupling JC tensored with a resonant JC system",
        suites: &[
            ("spectrum", tjc_spectrum),
            ("norms", tjc_norms),
            ("moments", tjc_moments),
            ("identity", tjc_identity),
        ],
        states: tjc_states,
    },
    Preset {
        name: "tensored-jc-7.1-printed-normalization",
        description: "Tensored JC states against the stated product-of-exponentials normalization (expected to fail)",
        suites: &[("norms", tjc_printed_norms)],
        states: tjc_states,
    },
    Preset {
        name: "two-mode-7.2",
        description: "Two-mode two-level model with Pochhammer weights and corrected radial density",
        suites: &[
            ("spectrum", tm_spectrum),
            ("norms", tm_norms),
            ("moments", tm_moments),
        ],
        states: tm_states,
    },
    Preset {
        name: "two-mode-7.2-printed-density",
        description: "Two-mode model with the stated radial density (expected to fail)",
        suites: &[("moments", tm_printed_moments)],
        states: tm_states,
    },
    Preset {
        name: "shifted-two-mode-7.2",
        description: "Two-mode model with shifted levels and independent sums",
        suites: &[("norms", stm_norms), ("moments", stm_moments), ("identity", stm_identity)],
        states: stm_states,
    },
];

// Shared helpers.

fn label(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

fn random_quaternion(rng: &mut impl Rng) -> Quaternion {
    Quaternion::new(
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
        rng.random_range(-2.0..2.0),
    )
}

/// `max ‖MM† − fI‖/max(1, f)` over samples.
fn gram_residual(samples: impl Iterator<Item = (ComplexMatrix, f64)>) -> f64 {
    samples
        .map(|(m, f)| {
            let dev = &m.gram_left() - &ComplexMatrix::identity(m.dim()).scale_real(f);
            dev.max_abs() / f.max(1.0)
        })
        .fold(0.0, f64::max)
}

fn unity_check(states: &[TruncatedState], s: &RunSettings) -> Result<Check> {
    let nc = norm_check(states)?;
    Ok(Check::zero("norm-sum-unity", nc.residual, s.tol(UNITY_TOL), DerivedOracle)
        .with_detail(format!("sum over j of |state_j|^2 = {}", nc.total)))
}

fn series_check(name: &str, spec: &MvcsSpec, cutoff: usize, target: f64, s: &RunSettings) -> Result<Check> {
    let est = normalization_factor(&spec.factors, &vec![cutoff; spec.factors.len()])?;
    Ok(Check::relative(name, target, est.partial, s.tol(NORMALIZATION_TOL), ClosedForm)
        .with_detail(format!("series tail bound {:e}", est.tail_bound)))
}

fn moment_check(out: &mut SuiteOutput, problem: &MomentProblem, s: &RunSettings, provenance: Provenance) -> Result<()> {
    let mut problem_tol = problem.clone();
    problem_tol.tol = s.tol(problem.tol);
    out.grid(moment_residuals(&problem_tol, &s.quad)?, provenance);
    Ok(())
}

fn identity_check(problem: &IdentityProblem, spinor_dim: usize, s: &RunSettings) -> Result<SuiteOutput> {
    let trunc = TruncationSpec::uniform(spinor_dim, problem.factors.len(), s.identity_cutoff)?;
    let rep = assemble_identity(problem, &trunc)?;
    let mut out = SuiteOutput::default();
    out.check(
        Check::zero(format!("resolution-of-identity/{}", problem.name), rep.max_deviation, s.tol(IDENTITY_TOL), DerivedOracle)
            .with_detail(format!(
                "basis size {}, diagonal range [{}, {}]",
                trunc.total_size(),
                rep.diagonal_range.0,
                rep.diagonal_range.1
            )),
    );
    Ok(out)
}

// Quaternion labels in polar form.

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct QuaternionPair {
    q1: [f64; 4],
    q2: [f64; 4],
}

impl Default for QuaternionPair {
    fn default() -> Self {
        Self { q1: [0.25, 0.25, 0.25, 0.25], q2: [0.3, 0.0, 0.4, 0.0] }
    }
}

impl QuaternionPair {
    fn quaternions(&self) -> (Quaternion, Quaternion) {
        (Quaternion::from_array(self.q1), Quaternion::from_array(self.q2))
    }
}

/// A quaternion of radius `r` with fixed generic angles.
fn at_radius(r: f64, shift: f64) -> Quaternion {
    QuaternionPolar { r, theta: 0.7 + shift, phi: 1.1 - shift, psi: 2.3 + shift }.to_quaternion()
}

fn pair_spec(family: &str, rep: fn(Quaternion) -> ComplexMatrix, q1: Quaternion, q2: Quaternion) -> MvcsSpec {
    MvcsSpec::new(
        family,
        label(&[("r1", q1.norm()), ("r2", q2.norm())]),
        vec![
            Factor::scalar("A", rep(q1), ScalarWeights::factorial()),
            Factor::scalar("B", rep(q2), ScalarWeights::factorial()),
        ],
    )
}

const CLOSED_FORM_RADII: [(f64, f64); 4] = [(0.0, 0.0), (0.5, 0.5), (1.0, 1.0), (0.3, 0.9)];

fn qc_algebra(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let mut rng = s.rng(1);
    let qs: Vec<Quaternion> = (0..ALGEBRA_SAMPLES).map(|_| random_quaternion(&mut rng)).collect();
    let norm = gram_residual(qs.iter().map(|&q| (quat_complex_rep(q), q.norm_sqr())));
    out.check(Check::zero("complex-rep-norm", norm, s.tol(ALGEBRA_TOL), ClosedForm));
    let mult = qs
        .windows(2)
        .map(|w| {
            let lhs = &quat_complex_rep(w[0]) * &quat_complex_rep(w[1]);
            (&lhs - &quat_complex_rep(w[0] * w[1])).max_abs() / (w[0].norm() * w[1].norm()).max(1.0)
        })
        .fold(0.0, f64::max);
    out.check(Check::zero("complex-rep-multiplicative", mult, s.tol(ALGEBRA_TOL), Trivial));
    let sigma = (0..ALGEBRA_SAMPLES)
        .map(|_| {
            let m = sigma_n(rng.random_range(0.0..PI), rng.random_range(0.0..2.0 * PI));
            (&(&m * &m) - &ComplexMatrix::identity(2)).max_abs()
        })
        .fold(0.0, f64::max);
    out.check(Check::zero("sigma-squared-identity", sigma, s.tol(ALGEBRA_TOL), ClosedForm));
    let round_trip = qs
        .iter()
        .map(|&q| {
            let back = quat_polar_decompose(q).to_quaternion();
            let d = Quaternion::new(back.a0 - q.a0, back.a1 - q.a1, back.a2 - q.a2, back.a3 - q.a3);
            d.norm() / q.norm().max(1.0)
        })
        .fold(0.0, f64::max);
    out.check(Check::zero("polar-round-trip", round_trip, s.tol(ALGEBRA_TOL), Trivial));
    // Polar form r·exp(iθσ(n̂)) reproduces the representation.
    let polar = qs
        .iter()
        .map(|&q| {
            let p = quat_polar_decompose(q);
            let m = herm_exp(&sigma_n(p.phi, p.psi), p.theta)?.scale_real(p.r);
            Ok((&m - &quat_complex_rep(q)).max_abs() / p.r.max(1.0))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.check(Check::zero("polar-form", polar, s.tol(ALGEBRA_TOL), ClosedForm));
    Ok(out)
}

fn pair_conditions(out: &mut SuiteOutput, a: &crate::conditions::PolarMatrixFamily, b: &crate::conditions::PolarMatrixFamily, s: &RunSettings) -> Result<()> {
    let tol = s.tol(DEFAULT_CONDITION_TOL);
    let rep = check_pair_conditions(a, b, DEFAULT_SAMPLES, s.seed, tol)?;
    let worst = rep
        .conditions
        .iter()
        .chain(&rep.consequences)
        .max_by(|x, y| x.max_residual.total_cmp(&y.max_residual))
        .map(|c| c.name.clone())
        .unwrap_or_default();
    out.check(
        Check::zero("pair-conditions", rep.max_residual(), tol, DerivedOracle)
            .with_detail(format!("{} samples, largest residual in {worst}", rep.samples)),
    );
    out.check(Check::zero("implication-violations", rep.implication_violations as f64, 0.0, DerivedOracle));
    let clifford = check_clifford_alternative(a, DEFAULT_SAMPLES, s.seed)?;
    out.check(Check::zero("clifford-type", clifford.max_residual, s.tol(1e-10), DerivedOracle));
    Ok(())
}

fn qc_conditions(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    pair_conditions(&mut out, &quaternion_complex_family("A"), &quaternion_complex_family("B"), s)?;
    Ok(out)
}

fn qc_norms(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    for (r, t) in CLOSED_FORM_RADII {
        let spec = pair_spec("quaternion-complex", quat_complex_rep, at_radius(r, 0.0), at_radius(t, 0.4));
        out.check(series_check(&format!("normalization(r={r},s={t})"), &spec, s.cutoff, 2.0 * (r * r + t * t).exp(), s)?);
    }
    let states = qc_states(&s.params, s.cutoff)?;
    out.check(unity_check(&states, s)?);
    // The norm sum does not depend on the phases of the labels.
    let (q1, q2) = s.params::<QuaternionPair>()?.quaternions();
    let rotated = pair_spec("quaternion-complex", quat_complex_rep, at_radius(q1.norm(), 1.3), at_radius(q2.norm(), -0.6))
        .build_all(&TruncationSpec::uniform(2, 2, s.cutoff)?, &s.opts())?;
    let total = |v: &[TruncatedState]| v.iter().map(TruncatedState::norm_sqr).sum::<f64>();
    out.check(Check::zero("phase-independence", (total(&states) - total(&rotated)).abs(), s.tol(ALGEBRA_TOL), DerivedOracle));
    Ok(out)
}

fn qc_moments(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    moment_check(&mut out, &quaternion_complex_moments(MOMENT_MAX), s, ClosedForm)?;
    Ok(out)
}

fn qc_identity(s: &RunSettings) -> Result<SuiteOutput> {
    identity_check(&quaternion_complex_identity(&s.quad)?, 2, s)
}

fn qc_states(params: &serde_json::Value, cutoff: usize) -> Result<Vec<TruncatedState>> {
    let (q1, q2) = parse_params::<QuaternionPair>(params)?.quaternions();
    let opts = BuildOptions { strict: false, ..BuildOptions::default() };
    pair_spec("quaternion-complex", quat_complex_rep, q1, q2).build_all(&TruncationSpec::uniform(2, 2, cutoff)?, &opts)
}

fn qr_algebra(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let mut rng = s.rng(2);
    let qs: Vec<Quaternion> = (0..ALGEBRA_SAMPLES).map(|_| random_quaternion(&mut rng)).collect();
    let norm = gram_residual(qs.iter().map(|&q| (quat_real_rep(q), q.norm_sqr())));
    out.check(Check::zero("real-rep-norm", norm, s.tol(ALGEBRA_TOL), ClosedForm));
    Ok(out)
}

fn qr_conditions(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    // Both labels share the fixed direction â: A = t·M(â), B = s·M(â).
    let direction = quat_real_rep(REAL_REP_DIRECTION.to_quaternion());
    pair_conditions(&mut out, &scaled_family("A", direction.clone()), &scaled_family("B", direction), s)?;
    let varying = check_clifford_alternative(&quaternion_real_family("A"), DEFAULT_SAMPLES, s.seed)?;
    out.check(Check::zero("clifford-type-any-direction", varying.max_residual, s.tol(1e-10), DerivedOracle));
    Ok(out)
}

fn qr_norms(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    for (r, t) in CLOSED_FORM_RADII {
        let spec = pair_spec("quaternion-real", quat_real_rep, at_radius(r, 0.0), at_radius(t, 0.4));
        out.check(series_check(&format!("normalization(t={r},s={t})"), &spec, s.cutoff, 4.0 * (r * r + t * t).exp(), s)?);
    }
    out.check(unity_check(&qr_states(&s.params, s.cutoff)?, s)?);
    Ok(out)
}

fn qr_moments(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    moment_check(&mut out, &quaternion_real_moments(MOMENT_MAX), s, ClosedForm)?;
    Ok(out)
}

fn qr_identity(s: &RunSettings) -> Result<SuiteOutput> {
    identity_check(&quaternion_real_identity(&s.quad)?, 4, s)
}

fn qr_states(params: &serde_json::Value, cutoff: usize) -> Result<Vec<TruncatedState>> {
    let (q1, q2) = parse_params::<QuaternionPair>(params)?.quaternions();
    let opts = BuildOptions { strict: false, ..BuildOptions::default() };
    pair_spec("quaternion-real", quat_real_rep, q1, q2).build_all(&TruncationSpec::uniform(4, 2, cutoff)?, &opts)
}

// Block extension.

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ExtensionParams {
    r1: f64,
    s1: f64,
    r2: f64,
    s2: f64,
    /// Phase angles `(φ, ψ, χ, θ)` and `ζ` of each factor.
    phases1: [f64; 5],
    phases2: [f64; 5],
}

impl Default for ExtensionParams {
    fn default() -> Self {
        let h = 0.5 * SQRT_2;
        Self { r1: h, s1: h, r2: h, s2: h, phases1: [0.4, 1.2, 0.3, 0.9, 0.6], phases2: [2.1, 0.2, 1.7, 2.5, -1.1] }
    }
}

fn extension_label(r: f64, s: f64, p: [f64; 5]) -> Result<ComplexMatrix> {
    let theta = extension_theta(p[0], p[1], p[2], p[3]);
    Ok(&extension_block(r, s) * &herm_exp(&theta, p[4])?)
}

fn ext_spec(p: &ExtensionParams) -> Result<MvcsSpec> {
    Ok(MvcsSpec::new(
        "extension",
        label(&[("r1", p.r1), ("s1", p.s1), ("r2", p.r2), ("s2", p.s2)]),
        vec![
            Factor::scalar("A", extension_label(p.r1, p.s1, p.phases1)?, ScalarWeights::factorial()),
            Factor::scalar("B", extension_label(p.r2, p.s2, p.phases2)?, ScalarWeights::factorial()),
        ],
    ))
}

fn ext_algebra(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let mut rng = s.rng(3);
    let samples = (0..ALGEBRA_SAMPLES)
        .map(|_| {
            let (r, t) = (rng.random_range(0.0..2.0), rng.random_range(0.0..2.0));
            let p = [0, 1, 2, 3, 4].map(|_| rng.random_range(0.0..2.0 * PI));
            Ok((extension_label(r, t, p)?, r * r + t * t))
        })
        .collect::<Result<Vec<_>>>()?;
    out.check(Check::zero("extension-clifford-type", gram_residual(samples.into_iter()), s.tol(ALGEBRA_TOL), ClosedForm));
    Ok(out)
}

fn ext_conditions(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    pair_conditions(&mut out, &extension_family("A"), &extension_family("B"), s)?;
    Ok(out)
}

fn ext_norms(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let base: ExtensionParams = s.params()?;
    let h = 0.5 * SQRT_2;
    for radii in [[0.0; 4], [0.5; 4], [h; 4], [base.r1, base.s1, base.r2, base.s2]] {
        let p = ExtensionParams { r1: radii[0], s1: radii[1], r2: radii[2], s2: radii[3], ..base };
        let target = 4.0 * radii.iter().map(|x| x * x).sum::<f64>().exp();
        out.check(series_check(&format!("normalization{radii:?}"), &ext_spec(&p)?, s.cutoff, target, s)?);
    }
    out.check(unity_check(&ext_states(&s.params, s.cutoff)?, s)?);
    Ok(out)
}

fn ext_moments(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let mut grid = extension_moment_grid(MOMENT_MAX, &s.quad)?;
    retol(&mut grid, s);
    out.grid(grid, ClosedForm);
    Ok(out)
}

fn ext_composite_moments(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let mut grid = extension_composite_moment_grid(MOMENT_MAX, &s.quad)?;
    retol(&mut grid, s);
    out.grid(grid, ClosedForm);
    Ok(out)
}

fn retol(grid: &mut MomentGrid, s: &RunSettings) {
    let tol = s.tol(grid.tol);
    *grid = MomentGrid::from_rows(grid.name.clone(), std::mem::take(&mut grid.rows), tol);
}

fn ext_states(params: &serde_json::Value, cutoff: usize) -> Result<Vec<TruncatedState>> {
    let p: ExtensionParams = parse_params(params)?;
    let opts = BuildOptions { strict: false, ..BuildOptions::default() };
    ext_spec(&p)?.build_all(&TruncationSpec::uniform(4, 2, cutoff)?, &opts)
}

// Octonions.

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct OctonionPair {
    a: [f64; 8],
    b: [f64; 8],
}

impl Default for OctonionPair {
    fn default() -> Self {
        Self { a: [0.3, -0.1, 0.2, 0.0, 0.4, 0.1, -0.2, 0.3], b: [0.1, 0.5, 0.0, -0.3, 0.2, 0.0, 0.1, 0.4] }
    }
}

fn oct_spec(a: &Octonion, b: &Octonion) -> MvcsSpec {
    MvcsSpec::new(
        "octonion",
        label(&[("|a|", a.norm_sqr().sqrt()), ("|b|", b.norm_sqr().sqrt())]),
        vec![
            Factor::scalar("L(a)", oct_left_rep(a), ScalarWeights::factorial()),
            Factor::scalar("R(b)", oct_right_rep(b), ScalarWeights::factorial()),
        ],
    )
}

fn oct_algebra(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let mut rng = s.rng(4);
    let os: Vec<Octonion> = (0..ALGEBRA_SAMPLES).map(|_| Octonion([0; 8].map(|_| rng.random_range(-2.0..2.0)))).collect();
    let left = gram_residual(os.iter().map(|a| (oct_left_rep(a), a.norm_sqr())));
    let right = gram_residual(os.iter().map(|a| (oct_right_rep(a), a.norm_sqr())));
    out.check(Check::zero("left-rep-norm", left, s.tol(ALGEBRA_TOL), ClosedForm));
    out.check(Check::zero("right-rep-norm", right, s.tol(ALGEBRA_TOL), ClosedForm));
    Ok(out)
}

fn oct_norms(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let p: OctonionPair = s.params()?;
    let scaled = |x: [f64; 8], r: f64| {
        let n = Octonion(x).norm_sqr().sqrt();
        Octonion(x.map(|v| if n > 0.0 { v * r / n } else { 0.0 }))
    };
    let (a, b) = (Octonion(p.a), Octonion(p.b));
    let cases = [(scaled(p.a, 0.0), scaled(p.b, 0.0)), (scaled(p.a, 1.0), scaled(p.b, 1.0)), (a, b)];
    for (a, b) in cases {
        let target = 8.0 * (a.norm_sqr() + b.norm_sqr()).exp();
        let name = format!("normalization(|a|^2={:.3},|b|^2={:.3})", a.norm_sqr(), b.norm_sqr());
        out.check(series_check(&name, &oct_spec(&a, &b), s.cutoff, target, s)?);
    }
    out.check(unity_check(&oct_states(&s.params, s.cutoff)?, s)?);
    Ok(out)
}

fn oct_states(params: &serde_json::Value, cutoff: usize) -> Result<Vec<TruncatedState>> {
    let p: OctonionPair = parse_params(params)?;
    let opts = BuildOptions { strict: false, ..BuildOptions::default() };
    oct_spec(&Octonion(p.a), &Octonion(p.b)).build_all(&TruncationSpec::uniform(8, 2, cutoff)?, &opts)
}

// Matrix weights.

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct MatrixWeightParams {
    q1: [f64; 4],
    q2: [f64; 4],
    x1: f64,
    x2: f64,
}

impl Default for MatrixWeightParams {
    fn default() -> Self {
        let base = QuaternionPair::default();
        Self { q1: base.q1, q2: base.q2, x1: 0.3, x2: 1.1 }
    }
}

fn mw_spec(p: &MatrixWeightParams) -> MvcsSpec {
    let (q1, q2) = (Quaternion::from_array(p.q1), Quaternion::from_array(p.q2));
    MvcsSpec::new(
        "matrix-weight",
        label(&[("r1", q1.norm()), ("r2", q2.norm()), ("x1", p.x1), ("x2", p.x2)]),
        vec![
            Factor::matrix_weighted("Z1", quat_real_rep(q1), MatrixWeights::rotation_block(p.x1)),
            Factor::matrix_weighted("Z2", quat_real_rep(q2), MatrixWeights::rotation_block(p.x2)),
        ],
    )
}

fn mw_algebra(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let p: MatrixWeightParams = s.params()?;
    let worst = [p.x1, p.x2]
        .iter()
        .map(|&x| {
            let f = MatrixWeights::rotation_block(x).validate(s.cutoff)?;
            Ok(f.iter().enumerate().map(|(m, fm)| (fm * crate::special::factorial(m as u64) - 1.0).abs()).fold(0.0, f64::max))
        })
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.check(Check::zero("weight-clifford-scalar", worst, s.tol(ALGEBRA_TOL), ClosedForm));
    Ok(out)
}

fn mw_norms(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let base: MatrixWeightParams = s.params()?;
    for (r, t) in CLOSED_FORM_RADII {
        let p = MatrixWeightParams { q1: at_radius(r, 0.0).to_array(), q2: at_radius(t, 0.4).to_array(), ..base };
        out.check(series_check(&format!("normalization(|q1|={r},|q2|={t})"), &mw_spec(&p), s.cutoff, 4.0 * (r * r + t * t).exp(), s)?);
    }
    out.check(unity_check(&mw_states(&s.params, s.cutoff)?, s)?);
    Ok(out)
}

fn mw_moments(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    moment_check(&mut out, &matrix_weight_moments(MOMENT_MAX), s, ClosedForm)?;
    Ok(out)
}

fn mw_identity(s: &RunSettings) -> Result<SuiteOutput> {
    let p: MatrixWeightParams = s.params()?;
    let mut out = identity_check(&matrix_weight_identity(&[p.x1], &s.quad)?, 4, s)?;
    let two = identity_check(&matrix_weight_identity(&[p.x1, p.x2], &s.quad)?, 4, s)?;
    for mut c in two.checks {
        c.name.push_str("-two-factors");
        out.check(c);
    }
    Ok(out)
}

fn mw_states(params: &serde_json::Value, cutoff: usize) -> Result<Vec<TruncatedState>> {
    let p: MatrixWeightParams = parse_params(params)?;
    let spec = mw_spec(&p);
    let trunc = TruncationSpec::uniform(4, 2, cutoff)?;
    let opts = BuildOptions { strict: false, ..BuildOptions::default() };
    (0..4).map(|j| crate::states::build_matrix_weight_mvcs(&spec, j, &trunc, &opts)).collect()
}

// Dependent summation.

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct DependentParams {
    r: f64,
    s: f64,
    /// `(φ, ψ, angle)` of the outer and inner labels.
    outer_phase: [f64; 3],
    inner_phase: [f64; 3],
}

impl Default for DependentParams {
    fn default() -> Self {
        Self { r: 0.8, s: 0.5, outer_phase: [0.4, 1.0, 0.7], inner_phase: [2.0, 3.0, 1.9] }
    }
}

fn dep_spec(p: &DependentParams) -> Result<DependentSpec> {
    if !(0.0..1.0).contains(&p.s) {
        return Err(Error::InvalidParameter(format!("s must lie in [0, 1), got {}", p.s)));
    }
    Ok(DependentSpec {
        family: "dependent".into(),
        label: label(&[("r", p.r), ("s", p.s)]),
        outer: PolarLabel {
            radial: ComplexMatrix::scalar(2, C64::new(p.r, 0.0)),
            generator: sigma_n(p.outer_phase[0], p.outer_phase[1]),
            angle: p.outer_phase[2],
        },
        outer_exponent: 0.5,
        outer_weights: ScalarWeights::factorial(),
        inner: PolarLabel {
            radial: ComplexMatrix::scalar(2, C64::new(p.s, 0.0)),
            generator: sigma_n(p.inner_phase[0], p.inner_phase[1]),
            angle: p.inner_phase[2],
        },
        inner_exponent: 0.5,
        inner_ln_rho: std::sync::Arc::new(|m, l| -binomial((m + l) as u64, l as u64).ln()),
    })
}

fn dep_norms(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let base: DependentParams = s.params()?;
    let mut worst = (0.0_f64, 0.0, 0);
    for sv in [0.0, 0.25, 0.5] {
        let spec = dep_spec(&DependentParams { s: sv, ..base })?;
        for m in 0..=4 {
            let partial = spec.inner_partial(m, 60)?;
            let target = (1.0 - sv).powi(-(m as i32 + 1));
            let res = (partial / target - 1.0).abs();
            if res >= worst.0 {
                worst = (res, sv, m);
            }
        }
    }
    out.check(
        Check::zero("inner-normalization", worst.0, s.tol(NORMALIZATION_TOL), ClosedForm)
            .with_detail(format!("partial sums to l = 60; worst at s = {}, m = {}", worst.1, worst.2)),
    );
    let spec = dep_spec(&base)?;
    out.check(Check::relative("outer-normalization-series", 2.0 * base.r.exp(), spec.outer_norm()?, s.tol(UNITY_TOL), DerivedOracle));
    out.check(unity_check(&dep_states(&s.params, s.cutoff)?, s)?);
    Ok(out)
}

fn dep_moments(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let beta = (1..=12usize)
        .flat_map(|m| (0..=12 - m).map(move |l| (m, l)))
        .map(|(m, l)| beta_moment_check(m, l, 64))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.check(Check::zero("beta-identity", beta, s.tol(1e-10), ClosedForm).with_detail("1 <= m, m + l <= 12"));
    let mut grid = dependent_identity_check(DependentDensity::Corrected, 6, 6, &s.quad)?;
    retol(&mut grid, s);
    out.grid(grid, DerivedOracle);
    Ok(out)
}

fn dep_printed_norms(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let p: DependentParams = s.params()?;
    let printed = (1.0 - p.s) * (p.r * (1.0 - p.s)).exp();
    out.check(Check::relative("outer-normalization-stated", printed, dep_spec(&p)?.outer_norm()?, s.tol(NORMALIZATION_TOL), ClosedForm));
    Ok(out)
}

fn dep_printed_moments(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let mut grid = dependent_identity_check(DependentDensity::Printed, 6, 6, &s.quad)?;
    retol(&mut grid, s);
    out.grid(grid, ClosedForm);
    Ok(out)
}

fn dep_states(params: &serde_json::Value, cutoff: usize) -> Result<Vec<TruncatedState>> {
    let p: DependentParams = parse_params(params)?;
    let opts = BuildOptions { strict: false, ..BuildOptions::default() };
    dep_spec(&p)?.build_all(&TruncationSpec::new(2, vec![cutoff, 2 * cutoff])?, &opts)
}

// Oscillator algebra.

fn integers(m: usize) -> Vec<f64> {
    (1..=m).map(|k| k as f64).collect()
}

/// Documented witness point for the diagonal variant.
const WITNESS: ([f64; 4], [f64; 4]) = ([0.2, 0.9, 0.0, 0.1], [0.4, 0.0, 0.8, 0.3]);

fn osc_suite(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let tol = s.tol(LADDER_TOL);
    let trunc = TruncationSpec::new(1, vec![s.cutoff, s.cutoff])?;
    let first = build_ladders(LadderVariant::FirstFactor, &trunc, &[integers(s.cutoff), integers(s.cutoff)])?;
    let rep = commutator_report(&first, 1);
    for (name, r) in [("[A,A+]=I", rep.a_adag), ("[N,A]=-A", rep.n_a), ("[N,A+]=A+", rep.n_adag)] {
        out.check(
            Check::zero(format!("first-factor {name}"), r, tol, ClosedForm)
                .with_detail(format!("{} interior states", rep.interior_states)),
        );
    }
    out.check(Check::zero("first-factor N=A+A", number_operator_residual(&first), tol, Trivial));

    let diag = build_ladders(LadderVariant::Diagonal, &trunc, &[integers(s.cutoff), integers(s.cutoff)])?;
    let drep = commutator_report(&diag, 1);
    out.check(
        Check::holds("diagonal-spacing-not-constant", drep.measured_spacings.1 > drep.measured_spacings.0, Trivial)
            .with_detail(format!("measured [A,A+] diagonal range {:?}", drep.measured_spacings)),
    );

    let jc_weights = ScalarWeights::scaled_factorial(0.75);
    let xs = x_sequence(&jc_weights, s.cutoff)?;
    out.check(Check::relative("scaled-factorial-spacing", 0.75, xs.constant_spacing.unwrap_or(f64::NAN), s.tol(ALGEBRA_TOL), Trivial));

    let (q1, _) = s.params::<QuaternionPair>()?.quaternions();
    let states = qr_states(&s.params, s.cutoff)?;
    let four = TruncationSpec::new(4, vec![s.cutoff, s.cutoff])?;
    let ladder = build_ladders(LadderVariant::FirstFactor, &four, &[integers(s.cutoff), integers(s.cutoff)])?;
    let eig = states
        .iter()
        .map(|st| eigen_check(st, &quat_real_rep(q1), &ladder))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.check(Check::zero("eigenrelation", eig, s.tol(1e-8), DerivedOracle));

    let (c1, c2) = (quat_complex_rep(Quaternion::from_array(WITNESS.0)), quat_complex_rep(Quaternion::from_array(WITNESS.1)));
    let witness_states = pair_spec("quaternion-complex", quat_complex_rep, Quaternion::from_array(WITNESS.0), Quaternion::from_array(WITNESS.1))
        .build_all(&TruncationSpec::uniform(2, 2, s.cutoff)?, &s.opts())?;
    let two = TruncationSpec::new(2, vec![s.cutoff, s.cutoff])?;
    let dl = build_ladders(LadderVariant::Diagonal, &two, &[integers(s.cutoff), integers(s.cutoff)])?;
    let witness = ladder_residual(&dl, &(&c1 * &c2), &witness_states[0])?;
    out.check(
        Check::at_least("diagonal-non-eigenvector-witness", 1e-3, witness, DerivedOracle)
            .with_detail(format!("q1 = {:?}, q2 = {:?}, j = 0", WITNESS.0, WITNESS.1)),
    );
    Ok(out)
}

// Tensored JC.

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TensoredJcParams {
    omega: f64,
    detuning: f64,
    kappa: f64,
    omega_c: f64,
    z1: [C64; 2],
    z2: [C64; 2],
}

impl Default for TensoredJcParams {
    fn default() -> Self {
        Self {
            omega: 2.0,
            detuning: 1.0,
            kappa: 0.3,
            omega_c: 1.0,
            z1: [C64::from_polar(0.8, 0.3), C64::from_polar(1.0, -1.2)],
            z2: [C64::from_polar(0.5, 2.0), C64::from_polar(0.9, 0.1)],
        }
    }
}

impl TensoredJcParams {
    fn weak(&self) -> JcParams {
        JcParams::with_detuning(self.omega, self.detuning, self.kappa)
    }
}

fn tjc_spectrum(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let tol = s.tol(ALGEBRA_TOL);
    let examples = [
        (JcParams::with_detuning(2.0, 1.0, 0.0), 3, (6.0, 6.0)),
        (JcParams::with_detuning(3.0, 2.0, 1.0), 1, (1.0, 2.0)),
        (JcParams::with_detuning(3.0, 2.0, 1.0), 0, (0.0, 0.0)),
    ];
    for (p, n, (ep, em)) in examples {
        let (cp, cm) = jc::jc_weak_spectrum(&p, n)?;
        out.check(Check::zero(format!("weak-spectrum(omega={},detuning={},kappa={},n={n})", p.omega, p.detuning(), p.kappa), (cp - ep).abs().max((cm - em).abs()), tol, ClosedForm));
    }
    out.check(Check::zero("resonance-spectrum(omega=1,n=5)", (jc::jc_resonance_spectrum(1.0, 5) - 5.0).abs(), tol, ClosedForm));
    let w = jc::resonance_weights(2.0).values(3)?;
    out.check(Check::relative("resonance-weight(omega=2,n=3)", 48.0, w[3], tol, ClosedForm));

    let mut scanned = 0;
    let mut violations = Vec::new();
    for &omega in &[0.5, 1.0, 2.0, 3.0] {
        for &det in &[0.1, 0.5, 1.0, 2.0] {
            for &kappa in &[0.0, 0.05, 0.3, 1.0, 2.0, 4.0] {
                let p = JcParams::with_detuning(omega, det, kappa);
                let rep = jc::monotonicity_scan(&p, 200)?;
                if rep.in_window {
                    scanned += 1;
                    if !(rep.plus_increasing && rep.minus_increasing) {
                        violations.push((omega, det, kappa));
                    }
                }
            }
        }
    }
    out.check(
        Check::holds("monotonicity-window", violations.is_empty(), DerivedOracle)
            .with_detail(format!("{scanned} in-window parameter points, n <= 200, violations {violations:?}")),
    );

    let p: TensoredJcParams = s.params()?;
    let weak = p.weak();
    for n in 0..=10u64 {
        let (ep, em) = jc::jc_weak_spectrum(&weak, n)?;
        out.spectrum.push(SpectrumRow { model: "jc-weak".into(), n, m: None, e_plus: ep, e_minus: em });
    }
    for n in 0..=10u64 {
        let (ep, em) = jc::jc_exact_spectrum(&weak, n);
        out.spectrum.push(SpectrumRow { model: "jc-exact".into(), n, m: None, e_plus: ep, e_minus: em });
    }
    Ok(out)
}

fn tjc_norms(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let p: TensoredJcParams = s.params()?;
    let spec = jc::tensored_jc_spec(&p.weak(), p.omega_c, p.z1, p.z2)?;
    let target = jc::tensored_jc_trace_normalization(&p.weak(), p.omega_c, p.z1, p.z2)?;
    let est = normalization_factor(&spec.factors, &[s.cutoff, s.cutoff])?;
    out.check(Check::relative("normalization-trace-series", target, est.partial, s.tol(NORMALIZATION_TOL), DerivedOracle));
    out.check(unity_check(&tjc_states(&s.params, s.cutoff)?, s)?);
    let xs = x_sequence(&ScalarWeights::scaled_factorial(p.weak().omega_pm()?.0), s.cutoff)?;
    out.check(Check::relative("weak-weight-spacing", p.weak().omega_pm()?.0, xs.constant_spacing.unwrap_or(f64::NAN), s.tol(ALGEBRA_TOL), Trivial));
    Ok(out)
}

fn tjc_printed_norms(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let p: TensoredJcParams = s.params()?;
    let spec = jc::tensored_jc_spec(&p.weak(), p.omega_c, p.z1, p.z2)?;
    let printed = jc::tensored_jc_printed_normalization(&p.weak(), p.omega_c, p.z1, p.z2)?;
    let est = normalization_factor(&spec.factors, &[s.cutoff, s.cutoff])?;
    out.check(Check::relative("normalization-stated-product", printed, est.partial, s.tol(NORMALIZATION_TOL), ClosedForm));
    Ok(out)
}

fn tjc_moments(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let p: TensoredJcParams = s.params()?;
    let (wp, wm) = p.weak().omega_pm()?;
    for (name, w) in [("mode-omega-plus", wp), ("mode-omega-minus", wm), ("mode-omega-resonant", p.omega_c)] {
        moment_check(&mut out, &diagonal_mode_moments(name, w, MOMENT_MAX), s, ClosedForm)?;
    }
    Ok(out)
}

fn tjc_identity(s: &RunSettings) -> Result<SuiteOutput> {
    let p: TensoredJcParams = s.params()?;
    let (wp, wm) = p.weak().omega_pm()?;
    identity_check(&diagonal_identity("tensored-jc", [wp, wm], [p.omega_c, p.omega_c], &s.quad)?, 2, s)
}

fn tjc_states(params: &serde_json::Value, cutoff: usize) -> Result<Vec<TruncatedState>> {
    let p: TensoredJcParams = parse_params(params)?;
    let opts = BuildOptions { strict: false, ..BuildOptions::default() };
    jc::build_tensored_jc_cs(&p.weak(), p.omega_c, p.z1, p.z2, &TruncationSpec::uniform(2, 2, cutoff)?, &opts)
}

// Two-mode two-level model.

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct TwoModeConfig {
    omega1: f64,
    omega2: f64,
    /// Coupling used for the spectrum table; the states need `g = 0`.
    g: f64,
    z: [C64; 2],
    v: C64,
}

impl Default for TwoModeConfig {
    fn default() -> Self {
        Self {
            omega1: 1.2,
            omega2: 0.8,
            g: 0.1,
            z: [C64::from_polar(0.9, 0.4), C64::from_polar(0.6, 2.2)],
            v: C64::from_polar(0.7, 1.1),
        }
    }
}

impl TwoModeConfig {
    fn uncoupled(&self) -> Result<TwoModeParams> {
        TwoModeParams::new(self.omega1, self.omega2, 0.0)
    }
}

fn tm_spectrum(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let tol = s.tol(ALGEBRA_TOL);
    let examples = [((1.0, 2.0, 0.0), (0, 0), (3.0, 3.0)), ((1.0, 2.0, 1.0), (1, 1), (10.0, 2.0))];
    for ((w1, w2, g), (n, m), (ep, em)) in examples {
        let (cp, cm) = jc::two_mode_spectrum(&TwoModeParams::new(w1, w2, g)?, n, m);
        out.check(Check::zero(format!("spectrum(omega1={w1},omega2={w2},g={g},n={n},m={m})"), (cp - ep).abs().max((cm - em).abs()), tol, ClosedForm));
    }
    let equal = jc::degeneracy_scan(&TwoModeParams::new(1.0, 1.0, 0.0)?, 30);
    let found = equal.iter().any(|c| {
        let pair = [(c.first.0, c.first.1), (c.second.0, c.second.1)];
        pair.contains(&(0, 1)) && pair.contains(&(1, 0))
    });
    out.check(
        Check::holds("degeneracy-equal-frequencies", found, DerivedOracle)
            .with_detail(format!("{} collisions with n + m <= 30, including E(0,1) = E(1,0)", equal.len())),
    );
    let irrational = jc::degeneracy_scan(&TwoModeParams::new(1.0, SQRT_2, 0.0)?, 30);
    out.check(Check::zero("degeneracy-incommensurate", irrational.len() as f64, 0.0, DerivedOracle).with_detail("omega1 = 1, omega2 = sqrt 2, n + m <= 30"));

    let mut rng = s.rng(5);
    let mut min = f64::INFINITY;
    for _ in 0..200 {
        let (a, x) = (rng.random_range(1.0..30.0), rng.random_range(0.0..40.0));
        min = min.min(crate::special::hyp1f1(1.0, a, x)?);
    }
    out.check(Check::at_least("hyp1f1-at-least-one", 1.0, min, Trivial).with_detail("200 samples, alpha in [1, 30), x in [0, 40)"));

    let p: TwoModeConfig = s.params()?;
    let params = TwoModeParams::new(p.omega1, p.omega2, p.g)?;
    for n in 0..=5u64 {
        for m in 0..=5u64 {
            let (ep, em) = jc::two_mode_spectrum(&params, n, m);
            out.spectrum.push(SpectrumRow { model: "two-mode".into(), n, m: Some(m), e_plus: ep, e_minus: em });
        }
    }
    Ok(out)
}

fn tm_norms(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let p: TwoModeConfig = s.params()?;
    let params = p.uncoupled()?;
    let spec = jc::two_mode_spec(&params, p.z, p.v)?;
    let inner = (0..=5)
        .map(|n| Ok((spec.inner_norm(n)? / jc::two_mode_inner_norm(&params, p.v.norm(), n)? - 1.0).abs()))
        .collect::<Result<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    out.check(Check::zero("inner-normalization-hyp1f1", inner, s.tol(NORMALIZATION_TOL), ClosedForm).with_detail("n <= 5"));
    let outer = spec.outer_norm()?;
    let (r1, r2) = (p.z[0].norm(), p.z[1].norm());
    out.check(Check::relative("outer-normalization-series", jc::two_mode_outer_norm(&params, r1, r2), outer, s.tol(NORMALIZATION_TOL), DerivedOracle));
    let bound = jc::two_mode_outer_bound(&params, r1, r2);
    out.check(Check::at_least("outer-normalization-bound", 0.0, bound - outer, ClosedForm).with_detail(format!("bound {bound}, value {outer}")));
    out.check(unity_check(&tm_states(&s.params, s.cutoff)?, s)?);
    Ok(out)
}

fn tm_moments(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let p = s.params::<TwoModeConfig>()?.uncoupled()?;
    moment_check(&mut out, &jc::radial_density_problem(RadialDensity::Corrected, p.omega1, 8), s, DerivedOracle)?;
    moment_check(&mut out, &jc::inner_density_problem(&p, 8), s, ClosedForm)?;
    let composite = jc::composite_normalization(&p, RadialDensity::Corrected, &s.quad)?;
    out.check(Check::relative("composite-normalization", 1.0, composite, s.tol(1e-10), DerivedOracle));
    Ok(out)
}

fn tm_printed_moments(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let p = s.params::<TwoModeConfig>()?.uncoupled()?;
    moment_check(&mut out, &jc::radial_density_problem(RadialDensity::Printed, p.omega1, 8), s, ClosedForm)?;
    let composite = jc::composite_normalization(&p, RadialDensity::Printed, &s.quad)?;
    out.check(Check::relative("composite-normalization", 1.0, composite, s.tol(1e-10), ClosedForm));
    Ok(out)
}

fn tm_states(params: &serde_json::Value, cutoff: usize) -> Result<Vec<TruncatedState>> {
    let p: TwoModeConfig = parse_params(params)?;
    let opts = BuildOptions { strict: false, ..BuildOptions::default() };
    jc::build_two_mode_cs(&p.uncoupled()?, p.z, p.v, &TruncationSpec::uniform(2, 2, cutoff)?, &opts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ShiftedConfig {
    omega1: f64,
    omega2: f64,
    z: [C64; 2],
    v: [C64; 2],
}

impl Default for ShiftedConfig {
    fn default() -> Self {
        Self {
            omega1: 0.9,
            omega2: 1.4,
            z: [C64::new(0.5, 0.5), C64::new(-0.3, 0.8)],
            v: [C64::new(0.2, -0.9), C64::new(1.0, 0.0)],
        }
    }
}

fn stm_norms(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let p: ShiftedConfig = s.params()?;
    let spec = jc::shifted_two_mode_spec(&TwoModeParams::new(p.omega1, p.omega2, 0.0)?, p.z, p.v)?;
    let target = (0..2).map(|i| (p.z[i].norm_sqr() / p.omega1 + p.v[i].norm_sqr() / p.omega2).exp()).sum::<f64>();
    let est = normalization_factor(&spec.factors, &[s.cutoff, s.cutoff])?;
    out.check(Check::relative("normalization-trace-series", target, est.partial, s.tol(NORMALIZATION_TOL), DerivedOracle));
    out.check(unity_check(&stm_states(&s.params, s.cutoff)?, s)?);
    Ok(out)
}

fn stm_moments(s: &RunSettings) -> Result<SuiteOutput> {
    let mut out = SuiteOutput::default();
    let p: ShiftedConfig = s.params()?;
    moment_check(&mut out, &diagonal_mode_moments("mode-omega1", p.omega1, MOMENT_MAX), s, DerivedOracle)?;
    moment_check(&mut out, &diagonal_mode_moments("mode-omega2", p.omega2, MOMENT_MAX), s, DerivedOracle)?;
    Ok(out)
}

fn stm_identity(s: &RunSettings) -> Result<SuiteOutput> {
    let p: ShiftedConfig = s.params()?;
    identity_check(&diagonal_identity("shifted-two-mode", [p.omega1; 2], [p.omega2; 2], &s.quad)?, 2, s)
}

fn stm_states(params: &serde_json::Value, cutoff: usize) -> Result<Vec<TruncatedState>> {
    let p: ShiftedConfig = parse_params(params)?;
    let opts = BuildOptions { strict: false, ..BuildOptions::default() };
    jc::shifted_two_mode_spec(&TwoModeParams::new(p.omega1, p.omega2, 0.0)?, p.z, p.v)?
        .build_all(&TruncationSpec::uniform(2, 2, cutoff)?, &opts)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_are_unique() {
        let mut names: Vec<_> = presets().iter().map(|p| p.name).collect();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), presets().len());
        assert!(find_preset("nope").is_err());
    }

    #[test]
    fn unknown_parameters_rejected() {
        let bad = serde_json::json!({ "q3": [0, 0, 0, 0] });
        assert!(matches!(qc_states(&bad, 5), Err(Error::Config(_))));
        let ok = serde_json::json!({ "q1": [0.0, 0.0, 0.0, 0.0], "q2": [0.0, 0.0, 0.0, 0.0] });
        let states = qc_states(&ok, 5).unwrap();
        assert_eq!(states.len(), 2);
        assert!((states[0].normalization - 2.0).abs() < 1e-15);
    }

    #[test]
    fn states_available_for_every_preset() {
        for p in presets() {
            let states = p.states(&serde_json::Value::Null, 30).unwrap();
            assert!(!states.is_empty(), "{}", p.name);
        }
    }

    #[test]
    fn suite_errors_become_failing_checks() {
        let preset = find_preset("dependent-5").unwrap();
        let settings = RunSettings { params: serde_json::json!({ "s": 1.5 }), cutoff: 10, ..RunSettings::default() };
        let out = preset.run(&settings, false);
        assert!(out.checks.iter().any(|c| c.name == "norms/error" && !c.pass));
    }
}

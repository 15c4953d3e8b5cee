//! Polar matrix families `A = A(r)·exp(iζΘ(k))` and sampled checks of the
//! admissibility conditions imposed on them: the commutation and Hermiticity
//! relations between two families, the Clifford-type alternative
//! `AA† = A†A = f·I`, and integer spectra of the phase generators.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hypercomplex::{
    clifford_residual, clifford_tolerance, extension_block, extension_theta, quat_real_rep, sigma_n,
    QuaternionPolar,
};
use crate::matrix::{commutator, herm_exp, ComplexMatrix};

pub const DEFAULT_SAMPLES: usize = 64;
pub const DEFAULT_CONDITION_TOL: f64 = 1e-12;
pub const TOL_INT: f64 = 1e-9;
/// Half-line parameters are sampled uniformly on `[0, HALF_LINE_SAMPLE_MAX]`.
pub const HALF_LINE_SAMPLE_MAX: f64 = 3.0;

pub type MatrixFn = Arc<dyn Fn(&[f64]) -> ComplexMatrix + Send + Sync>;

/// Named measure attached to a parameter domain.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureTag {
    /// Lebesgue measure on the half line or an interval (density supplied separately).
    Lebesgue,
    /// `sinφ dφ dψ / 4π` on the sphere, for a `(φ, ψ)` pair.
    UniformSphere,
    /// Uniform probability measure on a box of angles.
    UniformBox,
    /// A single point; the parameter is held fixed.
    Fixed,
}

/// A box of parameters with a measure tag. Infinite upper bounds denote the half line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParamDomain {
    pub names: Vec<String>,
    pub bounds: Vec<(f64, f64)>,
    pub measure: MeasureTag,
}

impl ParamDomain {
    pub fn new(names: &[&str], bounds: &[(f64, f64)], measure: MeasureTag) -> Self {
        assert_eq!(names.len(), bounds.len());
        Self { names: names.iter().map(|s| s.to_string()).collect(), bounds: bounds.to_vec(), measure }
    }

    pub fn empty() -> Self {
        Self { names: Vec::new(), bounds: Vec::new(), measure: MeasureTag::Fixed }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Draws one parameter vector; half-line coordinates are drawn from `[lo, 3]`.
    pub fn sample(&self, rng: &mut impl Rng) -> Vec<f64> {
        self.bounds
            .iter()
            .map(|&(lo, hi)| {
                let hi = if hi.is_finite() { hi } else { lo.max(0.0) + HALF_LINE_SAMPLE_MAX };
                if hi <= lo {
                    lo
                } else {
                    rng.random_range(lo..hi)
                }
            })
            .collect()
    }
}

/// `A = A(r)·exp(iζΘ(k))` with declared domains.
#[derive(Clone)]
pub struct PolarMatrixFamily {
    pub name: String,
    pub dim: usize,
    pub radial: MatrixFn,
    pub phase: MatrixFn,
    pub radial_domain: ParamDomain,
    pub phase_domain: ParamDomain,
    /// Set when every `Θ(k)` squares to the identity, enabling the closed form
    /// `exp(iζΘ) = cosζ·I + i sinζ·Θ`.
    pub involutory_phase: bool,
}

impl fmt::Debug for PolarMatrixFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolarMatrixFamily")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("radial_domain", &self.radial_domain)
            .field("phase_domain", &self.phase_domain)
            .finish()
    }
}

/// One evaluated member of a family.
#[derive(Debug, Clone)]
pub struct FamilySample {
    pub radial_params: Vec<f64>,
    pub phase_params: Vec<f64>,
    pub angle: f64,
    pub radial: ComplexMatrix,
    pub phase: ComplexMatrix,
}

impl FamilySample {
    pub fn full(&self) -> Result<ComplexMatrix> {
        Ok(&self.radial * &herm_exp(&self.phase, self.angle)?)
    }
}

impl PolarMatrixFamily {
    pub fn radial_at(&self, r: &[f64]) -> Result<ComplexMatrix> {
        let m = (self.radial)(r);
        self.check_eval(&m)?;
        Ok(m)
    }

    pub fn phase_at(&self, k: &[f64]) -> Result<ComplexMatrix> {
        let m = (self.phase)(k);
        self.check_eval(&m)?;
        Ok(m)
    }

    fn check_eval(&self, m: &ComplexMatrix) -> Result<()> {
        if m.dim() != self.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: m.dim() });
        }
        if !m.is_finite() {
            return Err(Error::InvalidParameter(format!("family {} produced non-finite entries", self.name)));
        }
        Ok(())
    }

    /// `exp(iζΘ)`.
    pub fn phase_exp(&self, theta: &ComplexMatrix, angle: f64) -> Result<ComplexMatrix> {
        if self.involutory_phase {
            let (s, c) = angle.sin_cos();
            let id = ComplexMatrix::scalar(self.dim, C64::new(c, 0.0));
            Ok(&id + &theta.scale(C64::new(0.0, s)))
        } else {
            herm_exp(theta, angle)
        }
    }

    /// `A(r)·exp(iζΘ(k))`.
    pub fn eval(&self, r: &[f64], k: &[f64], angle: f64) -> Result<ComplexMatrix> {
        let a = self.radial_at(r)?;
        let theta = self.phase_at(k)?;
        Ok(&a * &self.phase_exp(&theta, angle)?)
    }

    pub fn sample(&self, rng: &mut impl Rng) -> Result<FamilySample> {
        let radial_params = self.radial_domain.sample(rng);
        let phase_params = self.phase_domain.sample(rng);
        let angle = rng.random_range(0.0..2.0 * PI);
        Ok(FamilySample {
            radial: self.radial_at(&radial_params)?,
            phase: self.phase_at(&phase_params)?,
            radial_params,
            phase_params,
            angle,
        })
    }
}

/// Quaternions in the 2×2 complex representation: `A(r) = r·σ₀`, `Θ = σ(n̂)`.
pub fn quaternion_complex_family(name: &str) -> PolarMatrixFamily {
    PolarMatrixFamily {
        name: name.to_string(),
        dim: 2,
        radial: Arc::new(|p| ComplexMatrix::scalar(2, C64::new(p[0], 0.0))),
        phase: Arc::new(|k| sigma_n(k[0], k[1])),
        radial_domain: ParamDomain::new(&["r"], &[(0.0, f64::INFINITY)], MeasureTag::Lebesgue),
        phase_domain: ParamDomain::new(&["phi", "psi"], &[(0.0, PI), (0.0, 2.0 * PI)], MeasureTag::UniformSphere),
        involutory_phase: true,
    }
}

/// Quaternions in the real 4×4 representation with a scalar phase:
/// `A(t) = t·M(â)` for a unit quaternion `â` with polar angles `(χ, φ, ψ)`,
/// and `Θ = I₄`.
pub fn quaternion_real_family(name: &str) -> PolarMatrixFamily {
    PolarMatrixFamily {
        name: name.to_string(),
        dim: 4,
        radial: Arc::new(|p| {
            let unit = QuaternionPolar { r: 1.0, theta: p[1], phi: p[2], psi: p[3] }.to_quaternion();
            quat_real_rep(unit).scale_real(p[0])
        }),
        phase: Arc::new(|_| ComplexMatrix::identity(4)),
        radial_domain: ParamDomain::new(
            &["t", "chi", "phi", "psi"],
            &[(0.0, f64::INFINITY), (0.0, PI), (0.0, PI), (0.0, 2.0 * PI)],
            MeasureTag::Lebesgue,
        ),
        phase_domain: ParamDomain::empty(),
        involutory_phase: true,
    }
}

/// The 4×4 block extension `A(r, s)·exp(iζΘ(n̂₁, n̂₂, θ))`.
pub fn extension_family(name: &str) -> PolarMatrixFamily {
    PolarMatrixFamily {
        name: name.to_string(),
        dim: 4,
        radial: Arc::new(|p| extension_block(p[0], p[1])),
        phase: Arc::new(|k| extension_theta(k[0], k[1], k[2], k[3])),
        radial_domain: ParamDomain::new(
            &["r", "s"],
            &[(0.0, f64::INFINITY), (0.0, f64::INFINITY)],
            MeasureTag::Lebesgue,
        ),
        phase_domain: ParamDomain::new(
            &["phi", "psi", "chi", "theta"],
            &[(0.0, PI), (0.0, 2.0 * PI), (0.0, 2.0 * PI), (0.0, 2.0 * PI)],
            MeasureTag::UniformBox,
        ),
        involutory_phase: true,
    }
}

/// A constant family with `A(r) = M` and `Θ = I`.
pub fn constant_family(name: &str, m: ComplexMatrix) -> PolarMatrixFamily {
    let dim = m.dim();
    PolarMatrixFamily {
        name: name.to_string(),
        dim,
        radial: Arc::new(move |_| m.clone()),
        phase: Arc::new(move |_| ComplexMatrix::identity(dim)),
        radial_domain: ParamDomain::empty(),
        phase_domain: ParamDomain::empty(),
        involutory_phase: true,
    }
}

/// A family with a radial part scaled by a half-line parameter: `A(r) = r·M`, `Θ = I`.
pub fn scaled_family(name: &str, m: ComplexMatrix) -> PolarMatrixFamily {
    let dim = m.dim();
    PolarMatrixFamily {
        name: name.to_string(),
        dim,
        radial: Arc::new(move |p| m.scale_real(p[0])),
        phase: Arc::new(move |_| ComplexMatrix::identity(dim)),
        radial_domain: ParamDomain::new(&["r"], &[(0.0, f64::INFINITY)], MeasureTag::Lebesgue),
        phase_domain: ParamDomain::empty(),
        involutory_phase: true,
    }
}

/// Maximum residual of one named condition over the sample set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionResidual {
    pub name: String,
    pub max_residual: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionsReport {
    pub samples: usize,
    pub tol: f64,
    /// The conditions imposed on the pair.
    pub conditions: Vec<ConditionResidual>,
    /// Adjoint consequences of the cross conditions, checked independently.
    pub consequences: Vec<ConditionResidual>,
    /// Samples where every cross condition held but a consequence did not.
    pub implication_violations: usize,
    pub pass: bool,
}

impl ConditionsReport {
    pub fn max_residual(&self) -> f64 {
        self.conditions
            .iter()
            .chain(&self.consequences)
            .map(|c| c.max_residual)
            .fold(0.0, f64::max)
    }

    pub fn get(&self, name: &str) -> Option<&ConditionResidual> {
        self.conditions.iter().chain(&self.consequences).find(|c| c.name == name)
    }
}

/// `‖[M, N]‖ / max(1, ‖M‖‖N‖)`.
fn rel_commutator(m: &ComplexMatrix, n: &ComplexMatrix) -> Result<f64> {
    let c = commutator(m, n)?;
    Ok(c.frobenius() / (m.frobenius() * n.frobenius()).max(1.0))
}

fn rel_hermiticity(m: &ComplexMatrix) -> f64 {
    m.hermiticity_residual() / m.frobenius().max(1.0)
}

/// Stable 64-bit FNV-1a hash, used to give each family its own random stream.
fn stream_id(name: &str) -> u64 {
    name.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

fn family_rng(seed: u64, fam: &PolarMatrixFamily) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream_id(&fam.name));
    rng
}

const PAIR_CONDITIONS: [&str; 10] = [
    "Theta hermitian",
    "[A, A+]",
    "[A, Theta]",
    "Lambda hermitian",
    "[B, B+]",
    "[B, Lambda]",
    "[B, A]",
    "[Lambda, A]",
    "[B, A+]",
    "[Theta, B]",
];

const PAIR_CONSEQUENCES: [&str; 4] = ["[B+, A+]", "[Lambda, A+]", "[B+, A]", "[Theta, B+]"];

/// Samples both families and reports the maxima of every pair condition and
/// of the adjoint consequences of the cross conditions.
///
/// Each family draws from its own seeded stream keyed by its name, so
/// swapping the arguments evaluates the same matrices. When both arguments
/// are the same family the draws are shared, making the cross conditions
/// reduce to the single-family ones.
pub fn check_pair_conditions(
    fam_a: &PolarMatrixFamily,
    fam_b: &PolarMatrixFamily,
    samples: usize,
    seed: u64,
    tol: f64,
) -> Result<ConditionsReport> {
    if fam_a.dim != fam_b.dim {
        return Err(Error::DimensionMismatch { expected: fam_a.dim, got: fam_b.dim });
    }
    if samples == 0 {
        return Err(Error::InvalidParameter("sample count must be positive".into()));
    }
    let same = fam_a.name == fam_b.name && Arc::ptr_eq(&fam_a.radial, &fam_b.radial);
    let mut rng_a = family_rng(seed, fam_a);
    let mut rng_b = family_rng(seed, fam_b);
    let mut cond_max = [0.0_f64; 10];
    let mut cons_max = [0.0_f64; 4];
    let mut violations = 0;
    for _ in 0..samples {
        let sa = fam_a.sample(&mut rng_a)?;
        let sb = if same { sa.clone() } else { fam_b.sample(&mut rng_b)? };
        let (a, theta) = (&sa.radial, &sa.phase);
        let (b, lambda) = (&sb.radial, &sb.phase);
        let (a_dag, b_dag) = (a.adjoint(), b.adjoint());
        let cond = [
            rel_hermiticity(theta),
            rel_commutator(a, &a_dag)?,
            rel_commutator(a, theta)?,
            rel_hermiticity(lambda),
            rel_commutator(b, &b_dag)?,
            rel_commutator(b, lambda)?,
            rel_commutator(b, a)?,
            rel_commutator(lambda, a)?,
            rel_commutator(b, &a_dag)?,
            rel_commutator(theta, b)?,
        ];
        let cons = [
            rel_commutator(&b_dag, &a_dag)?,
            rel_commutator(lambda, &a_dag)?,
            rel_commutator(&b_dag, a)?,
            rel_commutator(theta, &b_dag)?,
        ];
        if cond[6..].iter().all(|&c| c <= tol) && cons.iter().any(|&c| c > tol) {
            violations += 1;
        }
        for (m, c) in cond_max.iter_mut().zip(cond) {
            *m = m.max(c);
        }
        for (m, c) in cons_max.iter_mut().zip(cons) {
            *m = m.max(c);
        }
    }
    let mk = |names: &[&str], vals: &[f64]| -> Vec<ConditionResidual> {
        names
            .iter()
            .zip(vals)
            .map(|(n, &v)| ConditionResidual { name: n.to_string(), max_residual: v, pass: v <= tol })
            .collect()
    };
    let conditions = mk(&PAIR_CONDITIONS, &cond_max);
    let consequences = mk(&PAIR_CONSEQUENCES, &cons_max);
    let pass = conditions.iter().chain(&consequences).all(|c| c.pass) && violations == 0;
    Ok(ConditionsReport { samples, tol, conditions, consequences, implication_violations: violations, pass })
}

/// Per-sample Clifford scalars of the full family members.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CliffordReport {
    pub samples: usize,
    /// `(radial parameters, f)` for every sample.
    pub values: Vec<(Vec<f64>, f64)>,
    pub max_residual: f64,
}

/// Checks `AA† = A†A = f·I` at sampled members of the family.
pub fn check_clifford_alternative(fam: &PolarMatrixFamily, samples: usize, seed: u64) -> Result<CliffordReport> {
    let mut rng = family_rng(seed, fam);
    let mut values = Vec::with_capacity(samples);
    let mut max_residual = 0.0_f64;
    for _ in 0..samples {
        let s = fam.sample(&mut rng)?;
        let full = &s.radial * &fam.phase_exp(&s.phase, s.angle)?;
        let (f, residual) = clifford_residual(&full);
        let tol = clifford_tolerance(&full);
        if residual > tol {
            return Err(Error::NotCliffordType { residual, tol });
        }
        max_residual = max_residual.max(residual);
        values.push((s.radial_params, f));
    }
    Ok(CliffordReport { samples, values, max_residual })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumReport {
    pub eigenvalues: Vec<f64>,
    /// Largest distance from an eigenvalue to the nearest integer.
    pub max_deviation: f64,
    pub has_zero: bool,
    pub pass: bool,
}

/// Passes when every eigenvalue lies within `TOL_INT` of a nonzero integer.
pub fn integer_spectrum_check(theta: &ComplexMatrix) -> Result<SpectrumReport> {
    let eigenvalues = theta.eigenvalues_hermitian()?;
    let max_deviation = eigenvalues.iter().map(|v| (v - v.round()).abs()).fold(0.0, f64::max);
    let has_zero = eigenvalues.iter().any(|v| v.round() == 0.0);
    let pass = max_deviation <= TOL_INT && !has_zero;
    Ok(SpectrumReport { eigenvalues, max_deviation, has_zero, pass })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::ONE;

    #[test]
    fn quaternion_pair_passes() {
        let a = quaternion_complex_family("q1");
        let b = quaternion_complex_family("q2");
        let rep = check_pair_conditions(&a, &b, DEFAULT_SAMPLES, 7, DEFAULT_CONDITION_TOL).unwrap();
        assert!(rep.pass, "{rep:?}");
        assert!(rep.max_residual() < 1e-12);
        assert_eq!(rep.conditions.len(), 10);
        assert_eq!(rep.consequences.len(), 4);
    }

    #[test]
    fn non_commuting_pair_fails() {
        let diag = ComplexMatrix::diag_real(&[1.0, 2.0]);
        let off = ComplexMatrix::from_real_rows([[0.0, 1.0], [1.0, 0.0]]);
        let a = scaled_family("diag", diag);
        let b = scaled_family("off", off);
        let rep = check_pair_conditions(&a, &b, 16, 1, DEFAULT_CONDITION_TOL).unwrap();
        assert!(!rep.pass);
        assert!(rep.get("[B, A]").unwrap().max_residual > 1e-3);
        let swapped = check_pair_conditions(&b, &a, 16, 1, DEFAULT_CONDITION_TOL).unwrap();
        assert_eq!(rep.pass, swapped.pass);
    }

    #[test]
    fn same_family_cross_terms_vanish() {
        let a = quaternion_complex_family("q");
        let rep = check_pair_conditions(&a, &a, 32, 3, DEFAULT_CONDITION_TOL).unwrap();
        for name in ["[B, A]", "[Lambda, A]", "[B, A+]", "[Theta, B]"] {
            assert!(rep.get(name).unwrap().max_residual < 1e-15);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let a = quaternion_complex_family("q");
        let b = extension_family("e");
        assert!(matches!(check_pair_conditions(&a, &b, 4, 0, 1e-12), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn clifford_alternative_examples() {
        let rep = check_clifford_alternative(&extension_family("ext"), 32, 5).unwrap();
        for (p, f) in &rep.values {
            assert!((f - (p[0] * p[0] + p[1] * p[1])).abs() < 1e-12 * f.max(1.0));
        }
        let rep = check_clifford_alternative(&quaternion_real_family("real"), 32, 5).unwrap();
        for (p, f) in &rep.values {
            assert!((f - p[0] * p[0]).abs() < 1e-12 * f.max(1.0));
        }
        let bad = constant_family("bad", ComplexMatrix::diag_real(&[1.0, 2.0]));
        assert!(matches!(check_clifford_alternative(&bad, 4, 0), Err(Error::NotCliffordType { .. })));
    }

    #[test]
    fn integer_spectrum_examples() {
        let rep = integer_spectrum_check(&sigma_n(0.4, 1.9)).unwrap();
        assert!(rep.pass);
        assert!((rep.eigenvalues[0] + 1.0).abs() < 1e-12 && (rep.eigenvalues[1] - 1.0).abs() < 1e-12);
        assert!(!integer_spectrum_check(&ComplexMatrix::diag_real(&[0.0, 1.0])).unwrap().pass);
        assert!(!integer_spectrum_check(&ComplexMatrix::diag_real(&[0.5, -0.5])).unwrap().pass);
        let nh = ComplexMatrix::from_rows([[ONE, ONE], [-ONE, ONE]]);
        assert!(integer_spectrum_check(&nh).is_err());
    }

    #[test]
    fn closed_form_phase_matches_eigendecomposition() {
        let fam = extension_family("ext");
        let theta = fam.phase_at(&[0.3, 1.2, 2.2, 0.9]).unwrap();
        let closed = fam.phase_exp(&theta, 1.7).unwrap();
        let eig = herm_exp(&theta, 1.7).unwrap();
        assert!((&closed - &eig).frobenius() < 1e-13);
    }
}

//! Quaternions and octonions together with the matrix representations used to
//! build coherent-state families: the 2×2 complex and 4×4 real quaternion
//! representations, the 8×8 left/right octonion representations, and the 4×4
//! block extension with its Clifford-type norm identity.

use std::f64::consts::PI;
use std::ops::Mul;

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, I, ONE, ZERO};

/// `a0 + a1 i + a2 j + a3 k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quaternion {
    pub a0: f64,
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
}

impl Quaternion {
    pub const fn new(a0: f64, a1: f64, a2: f64, a3: f64) -> Self {
        Self { a0, a1, a2, a3 }
    }

    pub fn from_array(a: [f64; 4]) -> Self {
        Self::new(a[0], a[1], a[2], a[3])
    }

    pub fn to_array(self) -> [f64; 4] {
        [self.a0, self.a1, self.a2, self.a3]
    }

    pub fn norm_sqr(self) -> f64 {
        self.a0 * self.a0 + self.a1 * self.a1 + self.a2 * self.a2 + self.a3 * self.a3
    }

    pub fn norm(self) -> f64 {
        self.norm_sqr().sqrt()
    }

    pub fn conj(self) -> Self {
        Self::new(self.a0, -self.a1, -self.a2, -self.a3)
    }

    pub fn scale(self, c: f64) -> Self {
        Self::new(self.a0 * c, self.a1 * c, self.a2 * c, self.a3 * c)
    }

    /// Unit pure quaternion pointing along `(sinφ cosψ, sinφ sinψ, cosφ)`.
    pub fn unit_pure(phi: f64, psi: f64) -> Self {
        Self::new(0.0, phi.sin() * psi.cos(), phi.sin() * psi.sin(), phi.cos())
    }
}

/// Hamilton product.
impl Mul for Quaternion {
    type Output = Quaternion;
    fn mul(self, q: Quaternion) -> Quaternion {
        let p = self;
        Quaternion::new(
            p.a0 * q.a0 - p.a1 * q.a1 - p.a2 * q.a2 - p.a3 * q.a3,
            p.a0 * q.a1 + p.a1 * q.a0 + p.a2 * q.a3 - p.a3 * q.a2,
            p.a0 * q.a2 - p.a1 * q.a3 + p.a2 * q.a0 + p.a3 * q.a1,
            p.a0 * q.a3 + p.a1 * q.a2 - p.a2 * q.a1 + p.a3 * q.a0,
        )
    }
}

/// Polar coordinates of a quaternion.
///
/// `x0 = r cosθ`, `x1 = r sinθ sinφ cosψ`, `x2 = r sinθ sinφ sinψ`,
/// `x3 = r sinθ cosφ`. The decomposition returns θ ∈ [0, π], φ ∈ [0, π],
/// ψ ∈ [0, 2π); when the vector part vanishes φ = ψ = 0, and when r = 0 every
/// angle is 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuaternionPolar {
    pub r: f64,
    pub theta: f64,
    pub phi: f64,
    pub psi: f64,
}

impl QuaternionPolar {
    pub fn to_quaternion(self) -> Quaternion {
        let (st, ct) = self.theta.sin_cos();
        let (sp, cp) = self.phi.sin_cos();
        Quaternion::new(
            self.r * ct,
            self.r * st * sp * self.psi.cos(),
            self.r * st * sp * self.psi.sin(),
            self.r * st * cp,
        )
    }
}

/// An octonion `a0 + Σ a_k e_k`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Octonion(pub [f64; 8]);

impl Octonion {
    pub fn norm_sqr(&self) -> f64 {
        self.0.iter().map(|a| a * a).sum()
    }
}

/// The 2×2 complex representation `[[x0+ix3, −x2+ix1], [x2+ix1, x0−ix3]]`.
pub fn quat_complex_rep(q: Quaternion) -> ComplexMatrix {
    ComplexMatrix::from_rows([
        [C64::new(q.a0, q.a3), C64::new(-q.a2, q.a1)],
        [C64::new(q.a2, q.a1), C64::new(q.a0, -q.a3)],
    ])
}

/// `n1 σ1 − n2 σ2 + n3 σ3`, the Hermitian matrix paired with a unit vector in
/// the complex quaternion representation (so that `i·sigma_vec(n)` represents
/// the pure quaternion `n`).
pub fn sigma_vec(n: [f64; 3]) -> ComplexMatrix {
    ComplexMatrix::from_rows([
        [C64::new(n[2], 0.0), C64::new(n[0], n[1])],
        [C64::new(n[0], -n[1]), C64::new(-n[2], 0.0)],
    ])
}

pub fn unit_vector(phi: f64, psi: f64) -> [f64; 3] {
    [phi.sin() * psi.cos(), phi.sin() * psi.sin(), phi.cos()]
}

/// `σ(n̂) = [[cosφ, sinφ e^{iψ}], [sinφ e^{−iψ}, −cosφ]]`.
pub fn sigma_n(phi: f64, psi: f64) -> ComplexMatrix {
    sigma_vec(unit_vector(phi, psi))
}

/// Unit vector perpendicular to `unit_vector(φ, ψ)`, rotated by `χ` in the
/// tangent plane spanned by the φ and ψ directions.
pub fn perpendicular_unit_vector(phi: f64, psi: f64, chi: f64) -> [f64; 3] {
    let e_phi = [phi.cos() * psi.cos(), phi.cos() * psi.sin(), -phi.sin()];
    let e_psi = [-psi.sin(), psi.cos(), 0.0];
    let (s, c) = chi.sin_cos();
    [c * e_phi[0] + s * e_psi[0], c * e_phi[1] + s * e_psi[1], c * e_phi[2] + s * e_psi[2]]
}

pub fn quat_polar_decompose(q: Quaternion) -> QuaternionPolar {
    let r = q.norm();
    if r == 0.0 {
        return QuaternionPolar { r: 0.0, theta: 0.0, phi: 0.0, psi: 0.0 };
    }
    let v = (q.a1 * q.a1 + q.a2 * q.a2 + q.a3 * q.a3).sqrt();
    let theta = v.atan2(q.a0);
    if v == 0.0 {
        return QuaternionPolar { r, theta, phi: 0.0, psi: 0.0 };
    }
    let rho = (q.a1 * q.a1 + q.a2 * q.a2).sqrt();
    let phi = rho.atan2(q.a3);
    let mut psi = q.a2.atan2(q.a1);
    if psi < 0.0 {
        psi += 2.0 * PI;
    }
    if psi >= 2.0 * PI {
        psi -= 2.0 * PI;
    }
    QuaternionPolar { r, theta, phi, psi }
}

/// Real 4×4 matrix of left multiplication by `q`; `M·Mᵀ = |q|² I₄`.
pub fn quat_real_rep(q: Quaternion) -> ComplexMatrix {
    let [a0, a1, a2, a3] = q.to_array();
    ComplexMatrix::from_real_rows([
        [a0, -a1, -a2, -a3],
        [a1, a0, -a3, a2],
        [a2, a3, a0, -a1],
        [a3, -a2, a1, a0],
    ])
}

/// Hermitian generator of the real representation: `Θ = −i·quat_real_rep(n̂)`
/// for a unit pure quaternion, so that `exp(iθΘ)` is the real rep of
/// `cosθ + n̂ sinθ`. Spectrum {−1, −1, 1, 1}.
pub fn quat_real_phase(phi: f64, psi: f64) -> ComplexMatrix {
    quat_real_rep(Quaternion::unit_pure(phi, psi)).scale(-I)
}

// Entry (i, j) of the octonion representations is `sign · a_k`, encoded as
// `±(k + 1)`.
const OMEGA_TABLE: [[i8; 8]; 8] = [
    [1, -2, -3, -4, -5, -6, -7, -8],
    [2, 1, -4, 3, -6, 5, 8, -7],
    [3, 4, 1, -2, -7, -8, 5, 6],
    [4, -3, 2, 1, -8, 7, -6, 5],
    [5, 6, 7, 8, 1, -2, -3, -4],
    [6, -5, 8, -7, 2, 1, 4, -3],
    [7, -8, -5, 6, 3, -4, 1, 2],
    [8, 7, -6, -5, 4, 3, -2, 1],
];

const NU_TABLE: [[i8; 8]; 8] = [
    [1, -2, -3, -4, -5, -6, -7, -8],
    [2, 1, 4, -3, 6, -5, -8, 7],
    [3, -4, 1, 2, 7, 8, -5, -6],
    [4, 3, -2, 1, 8, -7, 6, -5],
    [5, -6, -7, -8, 1, 2, 3, 4],
    [6, 5, -8, 7, -2, 1, -4, 3],
    [7, 8, 5, -6, -3, 4, 1, -2],
    [8, -7, 6, 5, -4, -3, 2, 1],
];

fn from_sign_table(table: &[[i8; 8]; 8], a: &Octonion) -> ComplexMatrix {
    ComplexMatrix::from_fn(8, |i, j| {
        let code = table[i][j];
        let k = (code.unsigned_abs() - 1) as usize;
        C64::new(f64::from(code.signum()) * a.0[k], 0.0)
    })
}

/// Left representation `ω(a)`.
pub fn oct_left_rep(a: &Octonion) -> ComplexMatrix {
    from_sign_table(&OMEGA_TABLE, a)
}

/// Right representation `ν(a)`.
pub fn oct_right_rep(a: &Octonion) -> ComplexMatrix {
    from_sign_table(&NU_TABLE, a)
}

/// Scale-aware tolerance for Clifford-type identities: `1e−10·n·max|M|²`.
pub fn clifford_tolerance(m: &ComplexMatrix) -> f64 {
    let mx = m.max_abs();
    1e-10 * m.dim() as f64 * mx * mx
}

/// Residual of `MM† = M†M = f·I` with `f = Tr(MM†)/n`.
pub fn clifford_residual(m: &ComplexMatrix) -> (f64, f64) {
    let n = m.dim();
    let left = m.gram_left();
    let right = m.gram_right();
    let f = left.trace().re / n as f64;
    let fi = ComplexMatrix::scalar(n, C64::new(f, 0.0));
    let residual = (&left - &fi).frobenius().max((&right - &fi).frobenius());
    (f, residual)
}

/// Returns `f ≥ 0` with `MM† = M†M = f·I`, or `NotCliffordType`.
pub fn clifford_scalar(m: &ComplexMatrix) -> Result<f64> {
    let (f, residual) = clifford_residual(m);
    let tol = clifford_tolerance(m);
    if residual > tol {
        return Err(Error::NotCliffordType { residual, tol });
    }
    Ok(f)
}

/// `A(r, s) = [[r I₂, −s I₂], [s I₂, r I₂]]`, so `AA† = (r² + s²) I₄`.
pub fn extension_block(r: f64, s: f64) -> ComplexMatrix {
    ComplexMatrix::from_fn(4, |i, j| {
        let (bi, bj) = (i / 2, j / 2);
        if i % 2 != j % 2 {
            return ZERO;
        }
        match (bi, bj) {
            (0, 0) | (1, 1) => C64::new(r, 0.0),
            (0, 1) => C64::new(-s, 0.0),
            _ => C64::new(s, 0.0),
        }
    })
}

/// `Θ(n̂₁, n̂₂, θ) = [[σ(n̂₁) sinθ, iσ(n̂₂) cosθ], [−iσ(n̂₂) cosθ, σ(n̂₁) sinθ]]`
/// with `n̂₁ = n̂(φ, ψ)` and `n̂₂` the perpendicular direction selected by `χ`.
/// Hermitian, squares to the identity and commutes with every
/// [`extension_block`].
pub fn extension_theta(phi: f64, psi: f64, chi: f64, theta: f64) -> ComplexMatrix {
    let s1 = sigma_n(phi, psi);
    let s2 = sigma_vec(perpendicular_unit_vector(phi, psi, chi));
    let (st, ct) = theta.sin_cos();
    let diag = s1.scale_real(st);
    let upper = s2.scale(C64::new(0.0, ct));
    ComplexMatrix::from_fn(4, |i, j| {
        let (bi, bj, ii, jj) = (i / 2, j / 2, i % 2, j % 2);
        match (bi, bj) {
            (0, 0) | (1, 1) => diag.get(ii, jj),
            (0, 1) => upper.get(ii, jj),
            _ => -upper.get(ii, jj),
        }
    })
}

/// Identity as a convenience for scalar families.
pub fn identity_rep(dim: usize) -> ComplexMatrix {
    ComplexMatrix::scalar(dim, ONE)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::{commutator, herm_exp};

    fn close(a: &ComplexMatrix, b: &ComplexMatrix, tol: f64) -> bool {
        (a - b).frobenius() < tol
    }

    #[test]
    fn complex_rep_examples() {
        assert_eq!(quat_complex_rep(Quaternion::new(1.0, 0.0, 0.0, 0.0)), ComplexMatrix::identity(2));
        assert_eq!(
            quat_complex_rep(Quaternion::new(0.0, 0.0, 0.0, 1.0)),
            ComplexMatrix::diag(&[I, -I])
        );
        assert_eq!(
            quat_complex_rep(Quaternion::new(0.0, 1.0, 0.0, 0.0)),
            ComplexMatrix::from_rows([[ZERO, I], [I, ZERO]])
        );
        let q = Quaternion::new(0.3, -1.2, 0.5, 2.0);
        let det = {
            let m = quat_complex_rep(q);
            m.get(0, 0) * m.get(1, 1) - m.get(0, 1) * m.get(1, 0)
        };
        assert!((det.re - q.norm_sqr()).abs() < 1e-14 && det.im.abs() < 1e-14);
    }

    #[test]
    fn sigma_n_examples() {
        assert_eq!(sigma_n(0.0, 1.234), ComplexMatrix::diag_real(&[1.0, -1.0]));
        let s = sigma_n(PI / 2.0, 0.0);
        assert!(close(&s, &ComplexMatrix::from_real_rows([[0.0, 1.0], [1.0, 0.0]]), 1e-15));
        for a in 0..10 {
            for b in 0..10 {
                let phi = PI * a as f64 / 9.0;
                let psi = 2.0 * PI * b as f64 / 10.0;
                let ev = sigma_n(phi, psi).eigenvalues_hermitian().unwrap();
                assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[1] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn polar_examples() {
        let p = quat_polar_decompose(Quaternion::new(1.0, 0.0, 0.0, 0.0));
        assert_eq!((p.r, p.theta), (1.0, 0.0));
        let p = quat_polar_decompose(Quaternion::new(0.0, 0.0, 0.0, 1.0));
        assert!((p.r - 1.0).abs() < 1e-15);
        assert!((p.theta - PI / 2.0).abs() < 1e-15);
        assert_eq!(p.phi, 0.0);
        let p = quat_polar_decompose(Quaternion::new(0.0, 0.0, 0.0, 0.0));
        assert_eq!(p, QuaternionPolar { r: 0.0, theta: 0.0, phi: 0.0, psi: 0.0 });
        let q = Quaternion::new(-0.4, 0.1, -0.9, 0.2);
        let p = quat_polar_decompose(q);
        let back = herm_exp(&sigma_n(p.phi, p.psi), p.theta).unwrap().scale_real(p.r);
        assert!(close(&back, &quat_complex_rep(q), 1e-14));
        assert!((0.0..2.0 * PI).contains(&p.psi));
    }

    #[test]
    fn real_rep_examples() {
        assert_eq!(quat_real_rep(Quaternion::new(1.0, 0.0, 0.0, 0.0)), ComplexMatrix::identity(4));
        let m = quat_real_rep(Quaternion::new(1.0, 1.0, 1.0, 1.0));
        // Direct multiply oracle: every row has norm² 4 and distinct rows are orthogonal.
        for i in 0..4 {
            for j in 0..4 {
                let dot: f64 = (0..4).map(|k| m.get(i, k).re * m.get(j, k).re).sum();
                let want = if i == j { 4.0 } else { 0.0 };
                assert_eq!(dot, want);
            }
        }
        assert_eq!(clifford_scalar(&quat_real_rep(Quaternion::new(0.0, 1.0, 0.0, 0.0))).unwrap(), 1.0);
    }

    #[test]
    fn real_phase_generates_unit_quaternions() {
        let (phi, psi, theta) = (1.1, 4.0, 0.8);
        let e = herm_exp(&quat_real_phase(phi, psi), theta).unwrap();
        let n = Quaternion::unit_pure(phi, psi);
        let q = Quaternion::new(theta.cos(), 0.0, 0.0, 0.0)
            .to_array()
            .iter()
            .zip(n.scale(theta.sin()).to_array())
            .map(|(a, b)| a + b)
            .collect::<Vec<_>>();
        let want = quat_real_rep(Quaternion::new(q[0], q[1], q[2], q[3]));
        assert!(close(&e, &want, 1e-14));
    }

    /// Independent transcription of the printed tables as text.
    const OMEGA_TEXT: &str = "a0 -a1 -a2 -a3 -a4 -a5 -a6 -a7 / a1 a0 -a3 a2 -a5 a4 a7 -a6 / \
        a2 a3 a0 -a1 -a6 -a7 a4 a5 / a3 -a2 a1 a0 -a7 a6 -a5 a4 / a4 a5 a6 a7 a0 -a1 -a2 -a3 / \
        a5 -a4 a7 -a6 a1 a0 a3 -a2 / a6 -a7 -a4 a5 a2 -a3 a0 a1 / a7 a6 -a5 -a4 a3 a2 -a1 a0";
    const NU_TEXT: &str = "a0 -a1 -a2 -a3 -a4 -a5 -a6 -a7 / a1 a0 a3 -a2 a5 -a4 -a7 a6 / \
        a2 -a3 a0 a1 a6 a7 -a4 -a5 / a3 a2 -a1 a0 a7 -a6 a5 -a4 / a4 -a5 -a6 -a7 a0 a1 a2 a3 / \
        a5 a4 -a7 a6 -a1 a0 -a3 a2 / a6 a7 a4 -a5 -a2 a3 a0 -a1 / a7 -a6 a5 a4 -a3 -a2 a1 a0";

    fn parse_table(text: &str, a: &Octonion) -> ComplexMatrix {
        let rows: Vec<Vec<f64>> = text
            .split('/')
            .map(|row| {
                row.split_whitespace()
                    .map(|tok| {
                        let (sign, body) = match tok.strip_prefix('-') {
                            Some(rest) => (-1.0, rest),
                            None => (1.0, tok),
                        };
                        let k: usize = body.trim_start_matches('a').parse().unwrap();
                        sign * a.0[k]
                    })
                    .collect()
            })
            .collect();
        ComplexMatrix::from_fn(8, |i, j| C64::new(rows[i][j], 0.0))
    }

    #[test]
    fn octonion_tables_match_transcription() {
        let a = Octonion([1.0, 2.0, 3.0, 5.0, 7.0, 11.0, 13.0, 17.0]);
        assert_eq!(oct_left_rep(&a), parse_table(OMEGA_TEXT, &a));
        assert_eq!(oct_right_rep(&a), parse_table(NU_TEXT, &a));
    }

    #[test]
    fn octonion_examples() {
        let mut unit = [0.0; 8];
        unit[0] = 1.0;
        let e = Octonion(unit);
        assert_eq!(oct_left_rep(&e), ComplexMatrix::identity(8));
        assert_eq!(oct_right_rep(&e), ComplexMatrix::identity(8));
        let ones = Octonion([1.0; 8]);
        let w = oct_left_rep(&ones);
        let g = &w * &w.adjoint();
        assert!(close(&g, &ComplexMatrix::scalar(8, C64::new(8.0, 0.0)), 1e-13));
        let v = oct_right_rep(&ones);
        let g = &v * &v.adjoint();
        assert!(close(&g, &ComplexMatrix::scalar(8, C64::new(8.0, 0.0)), 1e-13));
    }

    #[test]
    fn clifford_examples() {
        assert!((clifford_scalar(&extension_block(1.0, 2.0)).unwrap() - 5.0).abs() < 1e-14);
        assert!(matches!(
            clifford_scalar(&ComplexMatrix::diag_real(&[1.0, 2.0])),
            Err(Error::NotCliffordType { .. })
        ));
        assert_eq!(clifford_scalar(&ComplexMatrix::zeros(3)).unwrap(), 0.0);
    }

    #[test]
    fn extension_theta_properties() {
        for &(phi, psi, chi, theta) in &[(0.3, 1.0, 0.2, 0.7), (2.0, 5.5, 3.0, 2.9), (0.0, 0.0, 0.0, 0.0)] {
            let t = extension_theta(phi, psi, chi, theta);
            assert!(t.hermiticity_residual() < 1e-14);
            assert!(close(&(&t * &t), &ComplexMatrix::identity(4), 1e-14));
            let a = extension_block(0.8, -1.3);
            assert!(commutator(&a, &t).unwrap().frobenius() < 1e-14);
            let ev = t.eigenvalues_hermitian().unwrap();
            assert!((ev[0] + 1.0).abs() < 1e-12 && (ev[3] - 1.0).abs() < 1e-12);
        }
    }
}

//! Dense square complex matrices and the handful of spectral helpers the rest
//! of the crate is built on.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::DMatrix;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Frobenius tolerance used when deciding whether an input is Hermitian.
pub const TOL_HERM: f64 = 1e-10;

pub const ZERO: C64 = C64 { re: 0.0, im: 0.0 };
pub const ONE: C64 = C64 { re: 1.0, im: 0.0 };
pub const I: C64 = C64 { re: 0.0, im: 1.0 };

/// A dense `dim × dim` complex matrix stored row-major.
#[derive(Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<C64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        assert!(dim > 0, "matrix dimension must be positive");
        Self { dim, data: vec![ZERO; dim * dim] }
    }

    pub fn identity(dim: usize) -> Self {
        Self::scalar(dim, ONE)
    }

    pub fn scalar(dim: usize, c: C64) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m.data[i * dim + i] = c;
        }
        m
    }

    pub fn diag(entries: &[C64]) -> Self {
        let mut m = Self::zeros(entries.len());
        for (i, &e) in entries.iter().enumerate() {
            m.data[i * entries.len() + i] = e;
        }
        m
    }

    pub fn diag_real(entries: &[f64]) -> Self {
        let c: Vec<C64> = entries.iter().map(|&x| C64::new(x, 0.0)).collect();
        Self::diag(&c)
    }

    /// Builds a matrix from row-major entries. Fails unless the length is a
    /// perfect square and every entry is finite.
    pub fn from_row_major(data: Vec<C64>) -> Result<Self> {
        let dim = (data.len() as f64).sqrt().round() as usize;
        if dim == 0 || dim * dim != data.len() {
            return Err(Error::InvalidParameter(format!(
                "{} entries do not form a square matrix",
                data.len()
            )));
        }
        if data.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidParameter("matrix has non-finite entries".into()));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<const N: usize>(rows: [[C64; N]; N]) -> Self {
        let data = rows.iter().flat_map(|r| r.iter().copied()).collect();
        Self { dim: N, data }
    }

    pub fn from_real_rows<const N: usize>(rows: [[f64; N]; N]) -> Self {
        let data = rows.iter().flat_map(|r| r.iter().map(|&x| C64::new(x, 0.0))).collect();
        Self { dim: N, data }
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> C64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> C64 {
        self.data[i * self.dim + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: C64) {
        self.data[i * self.dim + j] = v;
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn column(&self, j: usize) -> Vec<C64> {
        (0..self.dim).map(|i| self.get(i, j)).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|z| z.re.is_finite() && z.im.is_finite())
    }

    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i).conj())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self.get(j, i))
    }

    pub fn scale(&self, c: C64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&z| z * c).collect() }
    }

    pub fn scale_real(&self, c: f64) -> Self {
        Self { dim: self.dim, data: self.data.iter().map(|&z| z * c).collect() }
    }

    pub fn trace(&self) -> C64 {
        (0..self.dim).map(|i| self.get(i, i)).sum()
    }

    pub fn frobenius(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn check_dim(&self, other: &Self) -> Result<()> {
        if self.dim != other.dim {
            return Err(Error::DimensionMismatch { expected: self.dim, got: other.dim });
        }
        Ok(())
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_dim(other)?;
        Ok(self.mul_unchecked(other))
    }

    fn mul_unchecked(&self, other: &Self) -> Self {
        let n = self.dim;
        let mut out = vec![ZERO; n * n];
        for i in 0..n {
            for k in 0..n {
                let a = self.data[i * n + k];
                if a == ZERO {
                    continue;
                }
                let row = &other.data[k * n..(k + 1) * n];
                let dst = &mut out[i * n..(i + 1) * n];
                for (d, &b) in dst.iter_mut().zip(row) {
                    *d += a * b;
                }
            }
        }
        Self { dim: n, data: out }
    }

    pub fn mul_vec(&self, v: &[C64]) -> Vec<C64> {
        assert_eq!(v.len(), self.dim);
        (0..self.dim)
            .map(|i| (0..self.dim).map(|k| self.get(i, k) * v[k]).sum())
            .collect()
    }

    /// `self^p` by repeated squaring.
    pub fn powi(&self, mut p: u32) -> Self {
        let mut base = self.clone();
        let mut acc = Self::identity(self.dim);
        while p > 0 {
            if p & 1 == 1 {
                acc = &acc * &base;
            }
            p >>= 1;
            if p > 0 {
                base = &base * &base;
            }
        }
        acc
    }

    /// Kronecker product `self ⊗ other`.
    pub fn kron(&self, other: &Self) -> Self {
        let (a, b) = (self.dim, other.dim);
        Self::from_fn(a * b, |i, j| self.get(i / b, j / b) * other.get(i % b, j % b))
    }

    /// Frobenius norm of `self − self†`.
    pub fn hermiticity_residual(&self) -> f64 {
        (self - &self.adjoint()).frobenius()
    }

    pub fn is_hermitian(&self) -> bool {
        self.hermiticity_residual() <= TOL_HERM
    }

    pub fn require_hermitian(&self) -> Result<()> {
        let residual = self.hermiticity_residual();
        if residual > TOL_HERM {
            return Err(Error::NotHermitian { residual });
        }
        Ok(())
    }

    fn to_nalgebra(&self) -> DMatrix<C64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.data)
    }

    /// Spectral decomposition of a Hermitian matrix; eigenvalues ascending.
    pub fn eigh(&self) -> Result<HermitianEigen> {
        self.require_hermitian()?;
        let sym = self.to_nalgebra();
        let eig = nalgebra::SymmetricEigen::try_new(sym, f64::EPSILON, 0)
            .ok_or_else(|| Error::EigenFailure("symmetric eigensolver did not converge".into()))?;
        let mut order: Vec<usize> = (0..self.dim).collect();
        order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
        let values: Vec<f64> = order.iter().map(|&k| eig.eigenvalues[k]).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::EigenFailure("non-finite eigenvalue".into()));
        }
        let vectors = Self::from_fn(self.dim, |i, j| eig.eigenvectors[(i, order[j])]);
        Ok(HermitianEigen { values, vectors })
    }

    pub fn eigenvalues_hermitian(&self) -> Result<Vec<f64>> {
        Ok(self.eigh()?.values)
    }

    /// Largest singular value.
    pub fn spectral_norm(&self) -> f64 {
        let gram = self.gram_left();
        match gram.eigh() {
            Ok(e) => e.values.last().copied().unwrap_or(0.0).max(0.0).sqrt(),
            Err(_) => {
                let svd = self.to_nalgebra().svd(false, false);
                svd.singular_values.iter().copied().fold(0.0, f64::max)
            }
        }
    }

    /// `M·M†`, symmetrised so it is exactly Hermitian.
    pub fn gram_left(&self) -> Self {
        let g = self * &self.adjoint();
        (&g + &g.adjoint()).scale_real(0.5)
    }

    /// `M†·M`, symmetrised.
    pub fn gram_right(&self) -> Self {
        let g = &self.adjoint() * self;
        (&g + &g.adjoint()).scale_real(0.5)
    }

    /// Applies a real function to the spectrum of a Hermitian matrix.
    pub fn herm_apply(&self, f: impl Fn(f64) -> C64) -> Result<Self> {
        let e = self.eigh()?;
        Ok(e.reconstruct(f))
    }
}

/// Eigenpairs of a Hermitian matrix. Column `k` of `vectors` belongs to `values[k]`.
#[derive(Debug, Clone)]
pub struct HermitianEigen {
    pub values: Vec<f64>,
    pub vectors: ComplexMatrix,
}

impl HermitianEigen {
    /// `V·diag(f(λ))·V†`.
    pub fn reconstruct(&self, f: impl Fn(f64) -> C64) -> ComplexMatrix {
        let n = self.values.len();
        let fv: Vec<C64> = self.values.iter().map(|&x| f(x)).collect();
        ComplexMatrix::from_fn(n, |i, j| {
            (0..n)
                .map(|k| self.vectors.get(i, k) * fv[k] * self.vectors.get(j, k).conj())
                .sum()
        })
    }
}

/// `MN − NM`.
pub fn commutator(m: &ComplexMatrix, n: &ComplexMatrix) -> Result<ComplexMatrix> {
    m.check_dim(n)?;
    Ok(&(m * n) - &(n * m))
}

/// `exp(i·t·Θ)` for Hermitian `Θ`, computed from its eigendecomposition.
pub fn herm_exp(theta: &ComplexMatrix, t: f64) -> Result<ComplexMatrix> {
    theta.herm_apply(|x| C64::from_polar(1.0, t * x))
}

/// `|A| = (AA†)^{1/2}`, the positive semidefinite square root.
pub fn abs_matrix(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    a.gram_left().herm_apply(|x| C64::new(x.max(0.0).sqrt(), 0.0))
}

/// Real power of a positive semidefinite Hermitian matrix.
pub fn psd_pow(a: &ComplexMatrix, p: f64) -> Result<ComplexMatrix> {
    let e = a.eigh()?;
    let scale = e.values.iter().map(|v| v.abs()).fold(0.0, f64::max).max(1.0);
    if let Some(&min) = e.values.first() {
        if min < -1e-10 * scale {
            return Err(Error::InvalidParameter(format!(
                "fractional power of a matrix with negative eigenvalue {min}"
            )));
        }
    }
    Ok(e.reconstruct(|x| {
        let x = x.max(0.0);
        if x == 0.0 {
            if p == 0.0 {
                ONE
            } else {
                ZERO
            }
        } else {
            C64::new(x.powf(p), 0.0)
        }
    }))
}

impl fmt::Debug for ComplexMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "ComplexMatrix({}x{}) [", self.dim, self.dim)?;
        for i in 0..self.dim {
            write!(f, "  ")?;
            for j in 0..self.dim {
                let z = self.get(i, j);
                write!(f, "{:>10.4}{:+.4}i ", z.re, z.im)?;
            }
            writeln!(f)?;
        }
        write!(f, "]")
    }
}

impl<'a> Mul<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix product");
        self.mul_unchecked(rhs)
    }
}

impl<'a> Add<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn add(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix sum");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'a> Sub<&'a ComplexMatrix> for &'a ComplexMatrix {
    type Output = ComplexMatrix;
    fn sub(self, rhs: &'a ComplexMatrix) -> ComplexMatrix {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch in matrix difference");
        ComplexMatrix {
            dim: self.dim,
            data: self.data.iter().zip(&rhs.data).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale_real(-1.0)
    }
}

//! Weight sequences `ρ(m)`: positive scalars stored through their ratios
//! `x_m = ρ(m)/ρ(m−1)`, and matrix-valued weights `R(m) = U(m)/√ρ(m)` with a
//! Clifford-type generator `U(m)`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::hypercomplex::clifford_scalar;
use crate::matrix::ComplexMatrix;

pub type RatioFn = Arc<dyn Fn(usize) -> f64 + Send + Sync>;
pub type GeneratorFn = Arc<dyn Fn(usize) -> ComplexMatrix + Send + Sync>;

/// A positive sequence with `ρ(0) = rho0` (conventionally 1) and
/// `ρ(m) = ρ(m−1)·x_m`.
#[derive(Clone)]
pub struct ScalarWeights {
    pub name: String,
    pub rho0: f64,
    ratio: RatioFn,
}

impl fmt::Debug for ScalarWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ScalarWeights").field("name", &self.name).field("rho0", &self.rho0).finish()
    }
}

impl ScalarWeights {
    pub fn new(name: impl Into<String>, rho0: f64, ratio: impl Fn(usize) -> f64 + Send + Sync + 'static) -> Self {
        Self { name: name.into(), rho0, ratio: Arc::new(ratio) }
    }

    /// `ρ(m) = m!`.
    pub fn factorial() -> Self {
        Self::new("factorial", 1.0, |m| m as f64)
    }

    /// `ρ(m) = ω^m m!`.
    pub fn scaled_factorial(omega: f64) -> Self {
        Self::new(format!("scaled-factorial({omega})"), 1.0, move |m| omega * m as f64)
    }

    /// `ρ(m) = (m!)²`.
    pub fn factorial_squared() -> Self {
        Self::new("factorial-squared", 1.0, |m| (m * m) as f64)
    }

    /// `ρ(m) = Γ(m+2) ω^m`.
    pub fn shifted_gamma(omega: f64) -> Self {
        Self::new(format!("shifted-gamma({omega})"), 1.0, move |m| omega * (m + 1) as f64)
    }

    /// `ρ(m) = ω^m (α)_m`.
    pub fn pochhammer_scaled(omega: f64, alpha: f64) -> Self {
        Self::new(format!("pochhammer({omega},{alpha})"), 1.0, move |m| omega * (alpha + m as f64 - 1.0))
    }

    /// Tabulated values `ρ(0), ρ(1), …`; indices past the table are invalid.
    pub fn from_values(name: impl Into<String>, values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidParameter("empty weight table".into()));
        }
        if let Some((index, &value)) = values.iter().enumerate().find(|(_, &v)| !(v > 0.0 && v.is_finite())) {
            return Err(Error::WeightNonPositive { index, value });
        }
        let rho0 = values[0];
        let table = Arc::new(values);
        Ok(Self::new(name, rho0, move |m| match table.get(m) {
            Some(&v) => v / table[m - 1],
            None => f64::NAN,
        }))
    }

    /// `x_m` for `m ≥ 1`.
    pub fn ratio(&self, m: usize) -> f64 {
        (self.ratio)(m)
    }

    /// Ratios `x_1..=x_M`, failing on the first nonpositive or undefined one.
    pub fn ratios(&self, cutoff: usize) -> Result<Vec<f64>> {
        if !(self.rho0 > 0.0 && self.rho0.is_finite()) {
            return Err(Error::WeightNonPositive { index: 0, value: self.rho0 });
        }
        (1..=cutoff)
            .map(|m| {
                let x = self.ratio(m);
                if x > 0.0 && x.is_finite() {
                    Ok(x)
                } else {
                    Err(Error::WeightNonPositive { index: m, value: x })
                }
            })
            .collect()
    }

    /// `ln ρ(0..=M)`.
    pub fn ln_values(&self, cutoff: usize) -> Result<Vec<f64>> {
        let ratios = self.ratios(cutoff)?;
        let mut out = Vec::with_capacity(cutoff + 1);
        out.push(self.rho0.ln());
        for x in ratios {
            let last = *out.last().unwrap();
            out.push(last + x.ln());
        }
        Ok(out)
    }

    /// `ρ(0..=M)`; may overflow to infinity for long factorial-type tables.
    pub fn values(&self, cutoff: usize) -> Result<Vec<f64>> {
        Ok(self.ln_values(cutoff)?.into_iter().map(f64::exp).collect())
    }
}

/// `R(m) = U(m)/√ρ(m)` with `U(m)U(m)† = c·I`, so `R(m)R(m)† = f(m)·I` with
/// `f(m) = c/ρ(m)`.
#[derive(Clone)]
pub struct MatrixWeights {
    pub name: String,
    pub dim: usize,
    pub generator: GeneratorFn,
    pub scalar: ScalarWeights,
}

impl fmt::Debug for MatrixWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("MatrixWeights")
            .field("name", &self.name)
            .field("dim", &self.dim)
            .field("scalar", &self.scalar)
            .finish()
    }
}

impl MatrixWeights {
    pub fn new(
        name: impl Into<String>,
        dim: usize,
        generator: impl Fn(usize) -> ComplexMatrix + Send + Sync + 'static,
        scalar: ScalarWeights,
    ) -> Self {
        Self { name: name.into(), dim, generator: Arc::new(generator), scalar }
    }

    /// `R(m) = (1/√m!)·[[cos x I₂, −sin x I₂], [sin x I₂, cos x I₂]]`.
    pub fn rotation_block(x: f64) -> Self {
        let (s, c) = x.sin_cos();
        let rot = ComplexMatrix::from_real_rows([
            [c, 0.0, -s, 0.0],
            [0.0, c, 0.0, -s],
            [s, 0.0, c, 0.0],
            [0.0, s, 0.0, c],
        ]);
        Self::new(format!("rotation-block({x})"), 4, move |_| rot.clone(), ScalarWeights::factorial())
    }

    pub fn generator_at(&self, m: usize) -> ComplexMatrix {
        (self.generator)(m)
    }

    /// `R(m)`, possibly overflowing for large `m`; prefer the factor builders.
    pub fn matrix_at(&self, m: usize) -> Result<ComplexMatrix> {
        let ln_rho = self.scalar.ln_values(m)?[m];
        Ok(self.generator_at(m).scale(C64::new((-0.5 * ln_rho).exp(), 0.0)))
    }

    /// Checks the Clifford identity of `R(m)` for `m ≤ M` and returns `f(0..=M)`.
    pub fn validate(&self, cutoff: usize) -> Result<Vec<f64>> {
        let ln_rho = self.scalar.ln_values(cutoff)?;
        (0..=cutoff)
            .map(|m| {
                let u = self.generator_at(m);
                if u.dim() != self.dim {
                    return Err(Error::DimensionMismatch { expected: self.dim, got: u.dim() });
                }
                Ok(clifford_scalar(&u)? * (-ln_rho[m]).exp())
            })
            .collect()
    }
}

/// Ratio sequence with the spacing diagnostics used by the oscillator algebra.
#[derive(Debug, Clone, PartialEq)]
pub struct XSequence {
    /// `x_1..=x_M`.
    pub values: Vec<f64>,
    /// `x_m − x_{m−1}` for `m ≥ 1`, with `x_0 = 0`.
    pub spacings: Vec<f64>,
    /// The common spacing when every spacing agrees to `1e−12` relative.
    pub constant_spacing: Option<f64>,
}

pub fn x_sequence(weights: &ScalarWeights, cutoff: usize) -> Result<XSequence> {
    let values = weights.ratios(cutoff)?;
    let mut spacings = Vec::with_capacity(values.len());
    let mut prev = 0.0;
    for &x in &values {
        spacings.push(x - prev);
        prev = x;
    }
    let constant_spacing = spacings.first().copied().filter(|&c| {
        spacings.iter().all(|&s| (s - c).abs() <= 1e-12 * c.abs().max(s.abs()).max(1.0))
    });
    Ok(XSequence { values, spacings, constant_spacing })
}

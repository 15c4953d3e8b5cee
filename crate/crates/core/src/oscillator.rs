//! Generalized oscillator algebra on the truncated basis
//! `χ^j ⊗ φ_{n₁} ⊗ ⋯ ⊗ φ_{n_τ}`, built from `x_m = ρ(m)/ρ(m−1)` with `x₀ = 0`.
//!
//! Operators are stored sparsely: every column of the lowering operator has at
//! most one nonzero entry.

use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::{ComplexMatrix, ZERO};
use crate::states::{TruncatedState, TruncationSpec};

pub const LADDER_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LadderVariant {
    /// Lowers every mode index at once with amplitude `√(x_{n₁}⋯x_{n_τ})`.
    Diagonal,
    /// Lowers only the first mode index with amplitude `√x_{n₁}`.
    FirstFactor,
}

/// An operator with at most one nonzero entry per column: `e_b ↦ v·e_{row}`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftOperator {
    dim: usize,
    columns: Vec<Option<(usize, f64)>>,
}

impl ShiftOperator {
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// The image of basis vector `b`.
    pub fn column(&self, b: usize) -> Option<(usize, f64)> {
        self.columns[b]
    }

    /// Exact transpose; the entries are real, so this is the adjoint.
    pub fn adjoint(&self) -> Self {
        let mut columns = vec![None; self.dim];
        for (b, entry) in self.columns.iter().enumerate() {
            if let Some((row, v)) = *entry {
                debug_assert!(columns[row].is_none(), "lowering operator must be injective on its support");
                columns[row] = Some((b, v));
            }
        }
        Self { dim: self.dim, columns }
    }

    pub fn apply(&self, v: &[C64]) -> Vec<C64> {
        let mut out = vec![ZERO; self.dim];
        for (b, entry) in self.columns.iter().enumerate() {
            if let Some((row, w)) = *entry {
                out[row] += v[b] * w;
            }
        }
        out
    }

    pub fn to_dense(&self) -> ComplexMatrix {
        let mut m = ComplexMatrix::zeros(self.dim);
        for (b, entry) in self.columns.iter().enumerate() {
            if let Some((row, v)) = *entry {
                m.set(row, b, C64::new(v, 0.0));
            }
        }
        m
    }
}

/// Lowering, raising and number operators on the flattened truncated basis.
#[derive(Debug, Clone)]
pub struct LadderSet {
    pub variant: LadderVariant,
    pub trunc: TruncationSpec,
    pub a: ShiftOperator,
    pub a_dagger: ShiftOperator,
    /// Diagonal of `N`: `x_{n₁}⋯x_{n_τ}` (diagonal) or `x_{n₁}` (first factor).
    pub number: Vec<f64>,
    /// `x_1..=x_{M_k}` per factor.
    pub x: Vec<Vec<f64>>,
}

fn x_at(x: &[f64], m: usize) -> f64 {
    if m == 0 {
        0.0
    } else {
        x[m - 1]
    }
}

pub fn build_ladders(variant: LadderVariant, trunc: &TruncationSpec, x: &[Vec<f64>]) -> Result<LadderSet> {
    if x.len() != trunc.cutoffs.len() {
        return Err(Error::DimensionMismatch { expected: trunc.cutoffs.len(), got: x.len() });
    }
    for (seq, &m) in x.iter().zip(&trunc.cutoffs) {
        if seq.len() != m {
            return Err(Error::DimensionMismatch { expected: m, got: seq.len() });
        }
        if let Some((i, &v)) = seq.iter().enumerate().find(|(_, &v)| !(v > 0.0)) {
            return Err(Error::WeightNonPositive { index: i + 1, value: v });
        }
    }
    let dim = trunc.total_size();
    let strides = trunc.strides();
    let mut columns = vec![None; dim];
    let mut number = vec![0.0; dim];
    for (b, col) in columns.iter_mut().enumerate() {
        let (_, modes) = trunc.unflatten(b);
        match variant {
            LadderVariant::Diagonal => {
                let prod: f64 = modes.iter().zip(x).map(|(&m, seq)| x_at(seq, m)).product();
                number[b] = prod;
                if modes.iter().all(|&m| m >= 1) {
                    let shift: usize = strides.iter().sum();
                    *col = Some((b - shift, prod.sqrt()));
                }
            }
            LadderVariant::FirstFactor => {
                let x1 = x_at(&x[0], modes[0]);
                number[b] = x1;
                if modes[0] >= 1 {
                    *col = Some((b - strides[0], x1.sqrt()));
                }
            }
        }
    }
    let a = ShiftOperator { dim, columns };
    let a_dagger = a.adjoint();
    Ok(LadderSet { variant, trunc: trunc.clone(), a, a_dagger, number, x: x.to_vec() })
}

impl LadderSet {
    pub fn dim(&self) -> usize {
        self.a.dim()
    }

    pub fn apply_number(&self, v: &[C64]) -> Vec<C64> {
        v.iter().zip(&self.number).map(|(z, n)| z * n).collect()
    }

    /// The constant spacing shared by every factor, if any.
    pub fn spacing(&self) -> Option<f64> {
        let mut common: Option<f64> = None;
        for seq in &self.x {
            let mut prev = 0.0;
            for &v in seq {
                let d = v - prev;
                match common {
                    None => common = Some(d),
                    Some(c) if (d - c).abs() > 1e-12 * c.abs().max(1.0) => return None,
                    _ => {}
                }
                prev = v;
            }
        }
        common
    }

    /// Basis indices with every mode index in `[1, M_k − margin]`.
    pub fn interior(&self, margin: usize) -> Vec<usize> {
        (0..self.dim())
            .filter(|&b| {
                let (_, modes) = self.trunc.unflatten(b);
                modes.iter().zip(&self.trunc.cutoffs).all(|(&m, &cut)| m >= 1 && m + margin <= cut)
            })
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorReport {
    pub variant: LadderVariant,
    pub interior_margin: usize,
    pub interior_states: usize,
    /// Common spacing `c` of the x-sequences; residuals are measured against it.
    pub spacing: Option<f64>,
    /// `max‖[A,A†]e − c·e‖`.
    pub a_adag: f64,
    /// `max‖[N,A]e + c·Ae‖`.
    pub n_a: f64,
    /// `max‖[N,A†]e − c·A†e‖`.
    pub n_adag: f64,
    /// Range of the diagonal of `[A,A†]` over the interior.
    pub measured_spacings: (f64, f64),
    pub pass: bool,
}

fn unit(dim: usize, b: usize) -> Vec<C64> {
    let mut e = vec![ZERO; dim];
    e[b] = C64::new(1.0, 0.0);
    e
}

fn dist(a: &[C64], b: &[C64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm_sqr()).sum::<f64>().sqrt()
}

fn scaled(v: &[C64], c: f64) -> Vec<C64> {
    v.iter().map(|z| z * c).collect()
}

fn sub(a: &[C64], b: &[C64]) -> Vec<C64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

/// Checks `[A,A†] = c`, `[N,A] = −cA`, `[N,A†] = cA†` on interior basis vectors.
/// Without a common spacing the residuals are measured against the first
/// factor's first spacing and the report never passes.
pub fn commutator_report(l: &LadderSet, interior_margin: usize) -> CommutatorReport {
    let spacing = l.spacing();
    let c = spacing.unwrap_or_else(|| l.x[0][0]);
    let interior = l.interior(interior_margin);
    let dim = l.dim();
    let (mut r1, mut r2, mut r3) = (0.0_f64, 0.0_f64, 0.0_f64);
    let mut range = (f64::INFINITY, f64::NEG_INFINITY);
    for &b in &interior {
        let e = unit(dim, b);
        let ae = l.a.apply(&e);
        let ade = l.a_dagger.apply(&e);
        let comm = sub(&l.a.apply(&ade), &l.a_dagger.apply(&ae));
        range = (range.0.min(comm[b].re), range.1.max(comm[b].re));
        r1 = r1.max(dist(&comm, &scaled(&e, c)));
        let na = sub(&l.apply_number(&ae), &l.a.apply(&l.apply_number(&e)));
        r2 = r2.max(dist(&na, &scaled(&ae, -c)));
        let nad = sub(&l.apply_number(&ade), &l.a_dagger.apply(&l.apply_number(&e)));
        r3 = r3.max(dist(&nad, &scaled(&ade, c)));
    }
    let pass = spacing.is_some() && !interior.is_empty() && r1.max(r2).max(r3) <= LADDER_TOL;
    CommutatorReport {
        variant: l.variant,
        interior_margin,
        interior_states: interior.len(),
        spacing,
        a_adag: r1,
        n_a: r2,
        n_adag: r3,
        measured_spacings: range,
        pass,
    }
}

/// `max |N − A†A|` over the diagonal and off-diagonal images of all basis vectors.
pub fn number_operator_residual(l: &LadderSet) -> f64 {
    (0..l.dim())
        .map(|b| {
            let e = unit(l.dim(), b);
            dist(&l.apply_number(&e), &l.a_dagger.apply(&l.a.apply(&e)))
        })
        .fold(0.0, f64::max)
}

/// `(M ⊗ I ⊗ ⋯ ⊗ I)ψ`: the matrix acts on the spinor slot.
pub fn apply_spinor(m: &ComplexMatrix, state: &TruncatedState) -> Result<Vec<C64>> {
    let n = state.trunc.spinor_dim;
    if m.dim() != n {
        return Err(Error::DimensionMismatch { expected: n, got: m.dim() });
    }
    let mode_size = state.trunc.mode_size();
    let mut out = vec![ZERO; state.coeffs.len()];
    for offset in 0..mode_size {
        for i in 0..n {
            let mut acc = ZERO;
            for k in 0..n {
                acc += m.get(i, k) * state.coeffs[k * mode_size + offset];
            }
            out[i * mode_size + offset] = acc;
        }
    }
    Ok(out)
}

/// `‖A·ψ − (M ⊗ I)ψ‖` for a ladder set and a spinor-slot matrix.
pub fn ladder_residual(l: &LadderSet, spinor_op: &ComplexMatrix, state: &TruncatedState) -> Result<f64> {
    if state.trunc != l.trunc {
        return Err(Error::LabelMismatch(format!(
            "state truncation {:?} differs from ladder truncation {:?}",
            state.trunc, l.trunc
        )));
    }
    Ok(dist(&l.a.apply(&state.coeffs), &apply_spinor(spinor_op, state)?))
}

/// Eigenrelation `A|A₁,…,A_τ,j⟩ = A₁|A₁,…,A_τ,j⟩` for the first-factor variant,
/// with `A₁` acting on the spinor slot. The residual is bounded by the
/// truncated top rung of the first factor.
pub fn eigen_check(state: &TruncatedState, a1: &ComplexMatrix, l: &LadderSet) -> Result<f64> {
    if l.variant != LadderVariant::FirstFactor {
        return Err(Error::InvalidParameter("eigen_check needs the first-factor ladder".into()));
    }
    ladder_residual(l, a1, state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hypercomplex::{quat_complex_rep, quat_real_rep, Quaternion};
    use crate::states::{BuildOptions, Factor, MvcsSpec};
    use crate::weights::{x_sequence, ScalarWeights};
    use std::collections::BTreeMap;

    fn integers(m: usize) -> Vec<f64> {
        (1..=m).map(|k| k as f64).collect()
    }

    #[test]
    fn ladder_actions() {
        let trunc = TruncationSpec::new(2, vec![6, 6]).unwrap();
        let d = build_ladders(LadderVariant::Diagonal, &trunc, &[integers(6), integers(6)]).unwrap();
        let b = trunc.flat_index(1, &[1, 1]);
        assert_eq!(d.a.column(b), Some((trunc.flat_index(1, &[0, 0]), 1.0)));
        assert_eq!(d.a.column(trunc.flat_index(0, &[0, 3])), None);
        let f = build_ladders(LadderVariant::FirstFactor, &trunc, &[integers(6), integers(6)]).unwrap();
        assert_eq!(f.a.column(trunc.flat_index(0, &[1, 5])), Some((trunc.flat_index(0, &[0, 5]), 1.0)));
        assert_eq!(f.a.column(trunc.flat_index(0, &[0, 5])), None);
        assert_eq!(f.a_dagger.to_dense(), f.a.to_dense().adjoint());
    }

    #[test]
    fn first_factor_is_weyl_heisenberg() {
        let trunc = TruncationSpec::new(2, vec![8, 5]).unwrap();
        let l = build_ladders(LadderVariant::FirstFactor, &trunc, &[integers(8), integers(5)]).unwrap();
        let rep = commutator_report(&l, 1);
        assert!(rep.pass, "{rep:?}");
        assert_eq!(rep.spacing, Some(1.0));
        assert!(number_operator_residual(&l) < 1e-13);
        let boundary = commutator_report(&l, 0);
        assert!(!boundary.pass);
        // Top rung: [A,A†]e = −x_M·e, so the residual is x_M + c.
        assert!((boundary.a_adag - 9.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_spacing() {
        let xs = x_sequence(&ScalarWeights::scaled_factorial(0.75), 6).unwrap();
        let trunc = TruncationSpec::new(1, vec![6]).unwrap();
        let l = build_ladders(LadderVariant::FirstFactor, &trunc, &[xs.values]).unwrap();
        let rep = commutator_report(&l, 1);
        assert!(rep.pass);
        assert_eq!(rep.spacing, Some(0.75));
    }

    #[test]
    fn diagonal_variant_spacings_vary() {
        let trunc = TruncationSpec::new(1, vec![6, 6]).unwrap();
        let l = build_ladders(LadderVariant::Diagonal, &trunc, &[integers(6), integers(6)]).unwrap();
        let rep = commutator_report(&l, 1);
        assert!(!rep.pass);
        // [A,A†] = (n₁+1)(n₂+1) − n₁n₂ = n₁ + n₂ + 1 on the interior.
        assert_eq!(rep.measured_spacings, (3.0, 11.0));
        assert!(number_operator_residual(&l) < 1e-13);
    }

    fn scalar_state(z: C64, cutoff: usize) -> TruncatedState {
        let spec = MvcsSpec::new(
            "scalar",
            BTreeMap::new(),
            vec![Factor::scalar("z", ComplexMatrix::scalar(1, z), ScalarWeights::factorial())],
        );
        spec.build(0, &TruncationSpec::new(1, vec![cutoff]).unwrap(), &BuildOptions::default()).unwrap()
    }

    #[test]
    fn canonical_eigenrelation() {
        for (z, tol) in [(C64::new(0.0, 0.0), 0.0), (C64::new(0.5, 0.0), 1e-10)] {
            let s = scalar_state(z, 40);
            let l = build_ladders(LadderVariant::FirstFactor, &s.trunc, &[integers(40)]).unwrap();
            let r = eigen_check(&s, &ComplexMatrix::scalar(1, z), &l).unwrap();
            assert!(r <= tol, "z={z} residual {r}");
        }
    }

    #[test]
    fn quaternion_eigenrelation_and_witness() {
        let q1 = Quaternion::new(0.3, 0.0, 0.4, 0.0);
        let q2 = Quaternion::new(0.1, 0.5, 0.2, 0.3);
        let a1 = quat_real_rep(q1);
        let spec = MvcsSpec::new(
            "real",
            BTreeMap::new(),
            vec![
                Factor::scalar("q1", a1.clone(), ScalarWeights::factorial()),
                Factor::scalar("q2", quat_real_rep(q2), ScalarWeights::factorial()),
            ],
        );
        let trunc = TruncationSpec::new(4, vec![40, 40]).unwrap();
        let state = spec.build(0, &trunc, &BuildOptions::default()).unwrap();
        let first = build_ladders(LadderVariant::FirstFactor, &trunc, &[integers(40), integers(40)]).unwrap();
        assert!(eigen_check(&state, &a1, &first).unwrap() < 1e-8);

        let c1 = quat_complex_rep(Quaternion::new(0.2, 0.9, 0.0, 0.1));
        let c2 = quat_complex_rep(Quaternion::new(0.4, 0.0, 0.8, 0.3));
        let spec = MvcsSpec::new(
            "complex",
            BTreeMap::new(),
            vec![
                Factor::scalar("A1", c1.clone(), ScalarWeights::factorial()),
                Factor::scalar("A2", c2.clone(), ScalarWeights::factorial()),
            ],
        );
        let trunc = TruncationSpec::new(2, vec![30, 30]).unwrap();
        let state = spec.build(0, &trunc, &BuildOptions::default()).unwrap();
        let diag = build_ladders(LadderVariant::Diagonal, &trunc, &[integers(30), integers(30)]).unwrap();
        assert!(ladder_residual(&diag, &(&c1 * &c2), &state).unwrap() > 1e-3);
    }

    #[test]
    fn mismatched_truncation_rejected() {
        let s = scalar_state(C64::new(0.1, 0.0), 10);
        let l = build_ladders(LadderVariant::FirstFactor, &TruncationSpec::new(1, vec![12]).unwrap(), &[integers(12)]).unwrap();
        assert!(matches!(eigen_check(&s, &ComplexMatrix::identity(1), &l), Err(Error::LabelMismatch(_))));
    }
}

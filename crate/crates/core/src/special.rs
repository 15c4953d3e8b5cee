//! Gamma-type sequences and the confluent hypergeometric series.

use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

/// Stop the `₁F₁` series once a term falls below this fraction of the sum.
pub const HYP1F1_REL_TOL: f64 = 1e-16;
const HYP1F1_MAX_TERMS: usize = 100_000;

const EXACT_FACTORIAL_MAX: u64 = 22;

pub fn ln_factorial(n: u64) -> f64 {
    if n <= EXACT_FACTORIAL_MAX {
        factorial(n).ln()
    } else {
        ln_gamma(n as f64 + 1.0)
    }
}

/// `n!` as a float, exact for `n ≤ 22` and from `ln Γ` beyond.
pub fn factorial(n: u64) -> f64 {
    if n <= EXACT_FACTORIAL_MAX {
        (1..=n).fold(1.0, |acc, k| acc * k as f64)
    } else {
        ln_gamma(n as f64 + 1.0).exp()
    }
}

/// Binomial coefficient `C(n, k)` as a float.
pub fn binomial(n: u64, k: u64) -> f64 {
    if k > n {
        return 0.0;
    }
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}

/// Rising factorial `(a)_m = a (a+1) ⋯ (a+m−1)`.
pub fn pochhammer(a: f64, m: u64) -> f64 {
    (0..m).fold(1.0, |acc, k| acc * (a + k as f64))
}

pub fn ln_pochhammer(a: f64, m: u64) -> f64 {
    ln_gamma(a + m as f64) - ln_gamma(a)
}

/// `₁F₁(a; b; x)` by its forward power series.
///
/// Intended for the regime `b > 0`, `x ≥ 0` used throughout the crate, where
/// every term is positive and the partial sums increase monotonically.
pub fn hyp1f1(a: f64, b: f64, x: f64) -> Result<f64> {
    if b <= 0.0 && b.fract() == 0.0 {
        return Err(Error::InvalidParameter(format!("1F1 undefined for b = {b}")));
    }
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 0..HYP1F1_MAX_TERMS {
        let kf = k as f64;
        term *= (a + kf) * x / ((b + kf) * (kf + 1.0));
        sum += term;
        if term == 0.0 || (term.abs() < HYP1F1_REL_TOL * sum.abs() && (kf + 1.0) > x) {
            return Ok(sum);
        }
        if !sum.is_finite() {
            break;
        }
    }
    Err(Error::SeriesNotDecaying { index: HYP1F1_MAX_TERMS })
}

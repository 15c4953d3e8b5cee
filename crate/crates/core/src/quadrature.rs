//! Gauss-type rules: Legendre on finite intervals, generalized Laguerre on the
//! half line, and uniform (trapezoidal) rules for periodic angles.

use std::f64::consts::PI;

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

const NEWTON_ITERS: usize = 100;

/// Nodes and weights of a one-dimensional rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self.nodes.iter().zip(&self.weights).map(|(&x, &w)| w * f(x)).collect();
        pairwise_sum(&terms)
    }

    pub fn iter(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.nodes.iter().copied().zip(self.weights.iter().copied())
    }
}

/// Pairwise summation; error grows like `log n` rather than `n`.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= 8 {
        return xs.iter().sum();
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

fn require_nodes(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!("a quadrature rule needs at least 2 nodes, got {n}")));
    }
    Ok(())
}

/// Gauss–Legendre rule on `[a, b]`.
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Result<Rule> {
    require_nodes(n)?;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let (half, mid) = (0.5 * (b - a), 0.5 * (b + a));
    for i in 0..n.div_ceil(2) {
        let mut z = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..NEWTON_ITERS {
            let (p, d) = legendre_with_derivative(n, z);
            dp = d;
            let dz = p / d;
            z -= dz;
            if dz.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, z);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - z * z) * dp * dp);
        nodes[i] = mid - half * z;
        nodes[n - 1 - i] = mid + half * z;
        weights[i] = half * w;
        weights[n - 1 - i] = half * w;
    }
    Ok(Rule { nodes, weights })
}

fn legendre_with_derivative(n: usize, z: f64) -> (f64, f64) {
    let (mut p1, mut p2) = (1.0, 0.0);
    for j in 0..n {
        let p3 = p2;
        p2 = p1;
        p1 = ((2 * j + 1) as f64 * z * p2 - j as f64 * p3) / (j + 1) as f64;
    }
    let dp = n as f64 * (z * p1 - p2) / (z * z - 1.0);
    (p1, dp)
}

/// Generalized Gauss–Laguerre rule: `∫₀^∞ x^α e^{−x} f(x) dx ≈ Σ wᵢ f(xᵢ)`.
///
/// Initial nodes come from the eigenvalues of the Jacobi matrix; each is then
/// polished by Newton iteration on `L_n^α` and the weight is taken from the
/// derivative formula, which keeps tiny weights accurate in relative terms.
pub fn gauss_laguerre(n: usize, alpha: f64) -> Result<Rule> {
    require_nodes(n)?;
    if alpha <= -1.0 {
        return Err(Error::InvalidParameter(format!("Laguerre exponent must exceed -1, got {alpha}")));
    }
    let mut jacobi = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        jacobi[(i, i)] = 2.0 * i as f64 + alpha + 1.0;
        if i + 1 < n {
            let off = ((i as f64 + 1.0) * (i as f64 + 1.0 + alpha)).sqrt();
            jacobi[(i, i + 1)] = off;
            jacobi[(i + 1, i)] = off;
        }
    }
    let eig = SymmetricEigen::new(jacobi);
    let mut guesses: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    guesses.sort_by(f64::total_cmp);

    let ln_scale = ln_gamma(alpha + n as f64) - ln_gamma(n as f64);
    let mut nodes = Vec::with_capacity(n);
    let mut weights = Vec::with_capacity(n);
    for mut z in guesses {
        let mut state = laguerre_eval(n, alpha, z);
        for _ in 0..NEWTON_ITERS {
            let dz = state.0 / state.1;
            if !dz.is_finite() {
                break;
            }
            z -= dz;
            state = laguerre_eval(n, alpha, z);
            if dz.abs() <= 1e-16 * z.abs() {
                break;
            }
        }
        let (_, pp, p2) = state;
        // w = Γ(n+α)/Γ(n) · (−1 / (n · L'_n(z) · L_{n−1}(z))), kept in log form.
        let denom = -pp * n as f64 * p2;
        if denom <= 0.0 || !z.is_finite() {
            return Err(Error::QuadratureNonConvergence {
                computed_a: z,
                computed_b: denom,
                context: format!("Laguerre node polishing (n = {n}, alpha = {alpha})"),
            });
        }
        nodes.push(z);
        weights.push((ln_scale - denom.ln()).exp());
    }
    Ok(Rule { nodes, weights })
}

/// Returns `(L_n^α(z), d/dz L_n^α(z), L_{n−1}^α(z))`.
fn laguerre_eval(n: usize, alpha: f64, z: f64) -> (f64, f64, f64) {
    let (mut p1, mut p2) = (1.0, 0.0);
    for j in 1..=n {
        let p3 = p2;
        p2 = p1;
        let jf = j as f64;
        p1 = ((2.0 * jf - 1.0 + alpha - z) * p2 - (jf - 1.0 + alpha) * p3) / jf;
    }
    let pp = (n as f64 * p1 - (n as f64 + alpha) * p2) / z;
    (p1, pp, p2)
}

/// Uniform rule on `[0, 2π)`: nodes `2πk/n`, weights `2π/n`. Exact for
/// trigonometric polynomials of degree below `n`.
pub fn uniform_angle(n: usize) -> Result<Rule> {
    require_nodes(n)?;
    let h = 2.0 * PI / n as f64;
    Ok(Rule { nodes: (0..n).map(|k| k as f64 * h).collect(), weights: vec![h; n] })
}

/// Rule for radial integrals of Gaussian type:
/// `∫₀^∞ h(r) r^{2α+1} e^{−r²/c} dr ≈ Σ Wᵢ h(rᵢ)`.
///
/// Built from the generalized Laguerre rule in `u = r²/c`, so it is exact
/// whenever `h` is a polynomial in `r²` of degree below `2n`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianRadialRule {
    pub alpha: f64,
    pub scale: f64,
    pub radii: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussianRadialRule {
    pub fn new(n: usize, alpha: f64, scale: f64) -> Result<Self> {
        if scale <= 0.0 || !scale.is_finite() {
            return Err(Error::InvalidParameter(format!("radial scale must be positive, got {scale}")));
        }
        let base = gauss_laguerre(n, alpha)?;
        let factor = 0.5 * scale.powf(alpha + 1.0);
        Ok(Self {
            alpha,
            scale,
            radii: base.nodes.iter().map(|&u| (scale * u).sqrt()).collect(),
            weights: base.weights.iter().map(|&w| w * factor).collect(),
        })
    }

    pub fn len(&self) -> usize {
        self.radii.len()
    }

    pub fn is_empty(&self) -> bool {
        self.radii.is_empty()
    }

    /// `∫₀^∞ g(r) dr` for a positive integrand supplied through `ln g`.
    /// The reference weight is divided out in log space so that neither it
    /// nor `g` needs to be representable on its own.
    pub fn integrate_ln(&self, ln_g: impl Fn(f64) -> f64) -> f64 {
        let terms: Vec<f64> = self
            .radii
            .iter()
            .zip(&self.weights)
            .map(|(&r, &w)| {
                let ln_ref = (2.0 * self.alpha + 1.0) * r.ln() - r * r / self.scale;
                w * (ln_g(r) - ln_ref).exp()
            })
            .collect();
        pairwise_sum(&terms)
    }
}

/// Integrates with `n` and `2n` nodes and returns the finer value, failing if
/// the two disagree by more than `10·tol` in relative terms.
pub fn converged(
    n: usize,
    tol: f64,
    context: &str,
    integrate: impl Fn(usize) -> Result<f64>,
) -> Result<f64> {
    let coarse = integrate(n)?;
    let fine = integrate(2 * n)?;
    let scale = fine.abs().max(f64::MIN_POSITIVE);
    if (fine - coarse).abs() / scale > 10.0 * tol {
        return Err(Error::QuadratureNonConvergence {
            computed_a: coarse,
            computed_b: fine,
            context: context.to_string(),
        });
    }
    Ok(fine)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::factorial;

    #[test]
    fn legendre_integrates_polynomials() {
        let rule = gauss_legendre(10, 0.0, 2.0).unwrap();
        // ∫₀² x^19 dx = 2^20 / 20
        let got = rule.integrate(|x| x.powi(19));
        assert!((got / (2f64.powi(20) / 20.0) - 1.0).abs() < 1e-13);
        assert!(rule.weights.iter().all(|&w| w > 0.0));
    }

    #[test]
    fn laguerre_moments_are_gamma_values() {
        for &alpha in &[0.0, 0.5, 2.0] {
            let rule = gauss_laguerre(32, alpha).unwrap();
            for m in 0..20u64 {
                let got = rule.integrate(|x| x.powi(m as i32));
                let want = (ln_gamma(alpha + m as f64 + 1.0)).exp();
                assert!((got / want - 1.0).abs() < 1e-12, "alpha={alpha} m={m}");
            }
        }
    }

    #[test]
    fn laguerre_large_rule() {
        let rule = gauss_laguerre(128, 0.0).unwrap();
        assert!((rule.weights.iter().sum::<f64>() - 1.0).abs() < 2e-12);
        let got = rule.integrate(|x| x.powi(10));
        assert!((got / factorial(10) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn radial_rule_gaussian_moments() {
        let rule = GaussianRadialRule::new(40, 0.0, 2.0).unwrap();
        for m in 0..10 {
            // ∫ r^{2m+1} e^{−r²/2} dr = 2^m · m!
            let got = rule.integrate_ln(|r| (2 * m + 1) as f64 * r.ln() - r * r / 2.0);
            let want = 2f64.powi(m) * factorial(m as u64);
            assert!((got / want - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn uniform_angle_exact_for_low_degree() {
        let rule = uniform_angle(16).unwrap();
        assert!((rule.integrate(|t| (3.0 * t).cos())).abs() < 1e-14);
        assert!((rule.integrate(|t| (5.0 * t).sin().powi(2)) - PI).abs() < 1e-13);
    }

    #[test]
    fn rules_reject_tiny_node_counts() {
        assert!(gauss_legendre(1, 0.0, 1.0).is_err());
        assert!(uniform_angle(0).is_err());
        assert!(gauss_laguerre(8, -1.5).is_err());
    }
}

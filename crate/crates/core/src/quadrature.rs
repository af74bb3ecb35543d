//! Gauss-Jacobi quadrature adapted to the endpoint singularities of the
//! weight kernels on (0,1).
//!
//! The kernels behave like `θ^{−α}(1−θ)^{α−1}` near the endpoints, so a
//! uniform rule diverges; the Jacobi rule with matching exponents absorbs
//! the singular factor into the quadrature weights.

use crate::special::{beta_fn, FractionalOrder};
use crate::{Error, Result};
use nalgebra::{DMatrix, SymmetricEigen};

/// Gauss-Jacobi rule for ∫_{−1}^{1} (1−x)^a (1+x)^b f(x) dx.
#[derive(Debug, Clone)]
pub struct GaussJacobi {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussJacobi {
    /// Builds an `n`-point rule via the Golub-Welsch algorithm.
    pub fn new(n: usize, a: f64, b: f64) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("quadrature order must be >= 1".into()));
        }
        if !(a > -1.0) || !(b > -1.0) {
            return Err(Error::Domain(format!(
                "Jacobi exponents must exceed -1, got ({a}, {b})"
            )));
        }
        // Three-term recurrence coefficients of the monic Jacobi polynomials
        // (Gautschi's r_jacobi).
        let mut diag = vec![0.0f64; n];
        let mut off = vec![0.0f64; n.saturating_sub(1)];
        let ab = a + b;
        diag[0] = (b - a) / (ab + 2.0);
        for (k, d) in diag.iter_mut().enumerate().skip(1) {
            let kf = k as f64;
            *d = (b * b - a * a) / ((2.0 * kf + ab) * (2.0 * kf + ab + 2.0));
        }
        if n > 1 {
            off[0] = (4.0 * (a + 1.0) * (b + 1.0) / ((ab + 2.0).powi(2) * (ab + 3.0))).sqrt();
            for (k, o) in off.iter_mut().enumerate().skip(1) {
                let kf = (k + 1) as f64;
                let denom = (2.0 * kf + ab).powi(2) * (2.0 * kf + ab + 1.0) * (2.0 * kf + ab - 1.0);
                *o = (4.0 * kf * (kf + a) * (kf + b) * (kf + ab) / denom).sqrt();
            }
        }
        let mut jac = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            jac[(i, i)] = diag[i];
            if i + 1 < n {
                jac[(i, i + 1)] = off[i];
                jac[(i + 1, i)] = off[i];
            }
        }
        let eig = SymmetricEigen::new(jac);
        let mu0 = 2.0f64.powf(ab + 1.0) * beta_fn(a + 1.0, b + 1.0)?;
        let mut pairs: Vec<(f64, f64)> = (0..n)
            .map(|i| {
                let node = eig.eigenvalues[i];
                let w = mu0 * eig.eigenvectors[(0, i)].powi(2);
                (node, w)
            })
            .collect();
        pairs.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
        Ok(Self {
            nodes: pairs.iter().map(|p| p.0).collect(),
            weights: pairs.iter().map(|p| p.1).collect(),
        })
    }

    /// Approximates ∫_{−1}^{1} (1−x)^a (1+x)^b f(x) dx.
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Rule for the w_α-weighted integral ∫_0^1 w_α(θ) f(θ) dθ.
///
/// Maps θ = (1+x)/2 onto the Jacobi weight (1−x)^{α−1}(1+x)^{−α}; the
/// normalization 1/(Γ(α)Γ(1−α)) is folded into the weights so `integrate`
/// returns the w_α-weighted integral directly.
pub struct WeightedRule {
    rule: GaussJacobi,
    scale: f64,
}

impl WeightedRule {
    pub fn new(n: usize, alpha: FractionalOrder) -> Result<Self> {
        let a = alpha.get();
        if alpha.is_classical() {
            return Err(Error::Domain(
                "w_alpha quadrature requires alpha in (0,1)".into(),
            ));
        }
        let rule = GaussJacobi::new(n, a - 1.0, -a)?;
        let scale =
            1.0 / (crate::special::gamma_fn(a)? * crate::special::gamma_fn(1.0 - a)?);
        Ok(Self { rule, scale })
    }

    /// ∫_0^1 w_α(θ) f(θ) dθ
    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.scale * self.rule.integrate(|x| f(0.5 * (1.0 + x)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn legendre_special_case() {
        // a = b = 0 reduces to Gauss-Legendre; ∫ x² dx = 2/3
        let rule = GaussJacobi::new(5, 0.0, 0.0).unwrap();
        assert_relative_eq!(rule.integrate(|x| x * x), 2.0 / 3.0, max_relative = 1e-14);
        assert_relative_eq!(rule.integrate(|_| 1.0), 2.0, max_relative = 1e-14);
    }

    #[test]
    fn chebyshev_special_case() {
        // a = b = -1/2 gives the Chebyshev weight; total mass π
        let rule = GaussJacobi::new(8, -0.5, -0.5).unwrap();
        assert_relative_eq!(
            rule.integrate(|_| 1.0),
            std::f64::consts::PI,
            max_relative = 1e-13
        );
    }

    #[test]
    fn weight_identities() {
        // ∫ w_α = 1, ∫ w_{α,0} = α, ∫ w_{α,1} = 1−α
        for i in 1..=9 {
            let a = i as f64 / 10.0;
            let alpha = FractionalOrder::new(a).unwrap();
            let rule = WeightedRule::new(80, alpha).unwrap();
            assert_relative_eq!(rule.integrate(|_| 1.0), 1.0, epsilon = 1e-10);
            assert_relative_eq!(rule.integrate(|t| 1.0 - t), a, epsilon = 1e-10);
            assert_relative_eq!(rule.integrate(|t| t), 1.0 - a, epsilon = 1e-10);
        }
    }

    #[test]
    fn kernel_representation_lemma() {
        // (1, c_0 e^{−c_1 t})_{L²_α} = g_α(t) with c_0 = 1/(1−θ), c_1 = θ/(1−θ)
        for &a in &[0.25, 0.5, 0.75] {
            let alpha = FractionalOrder::new(a).unwrap();
            let rule = WeightedRule::new(600, alpha).unwrap();
            for &t in &[0.01, 0.1, 1.0, 5.0] {
                let approx = rule.integrate(|theta| {
                    let c0 = 1.0 / (1.0 - theta);
                    let c1 = theta / (1.0 - theta);
                    c0 * (-c1 * t).exp()
                });
                let exact = crate::special::g_alpha(alpha, t).unwrap();
                assert_relative_eq!(approx, exact, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GaussJacobi::new(0, 0.0, 0.0).is_err());
        assert!(GaussJacobi::new(5, -1.0, 0.0).is_err());
        assert!(WeightedRule::new(10, FractionalOrder::new(1.0).unwrap()).is_err());
    }
}

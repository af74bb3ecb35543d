//! Direct L1 discretization of the Caputo derivative — the independent
//! oracle for cross-validating the kernel-compression scheme on scalar and
//! desk-scale problems. Stores the full history (O(N) memory): exactly the
//! cost the compressed scheme avoids, acceptable for an oracle.

use crate::special::{gamma_fn, FractionalOrder};
use crate::{Error, Result};

/// L1 weights b_0..b_{n−1} with
/// ∂_t^α u(t_n) ≈ Σ_{j=0}^{n−1} b_j (u^{n−j} − u^{n−j−1}),
/// b_j = ((j+1)^{1−α} − j^{1−α})·dt^{−α}/Γ(2−α).
pub fn l1_coefficients(alpha: FractionalOrder, n: usize, dt: f64) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::Domain("need n >= 1 L1 coefficients".into()));
    }
    if dt <= 0.0 {
        return Err(Error::Domain(format!("dt must be positive, got {dt}")));
    }
    let a = alpha.get();
    let scale = dt.powf(-a) / gamma_fn(2.0 - a)?;
    Ok((0..n)
        .map(|j| {
            let jf = j as f64;
            // j^{1−α} with the α→1 limit 0 at j=0 (0^0 is 1 in powf)
            let lower = if j == 0 { 0.0 } else { jf.powf(1.0 - a) };
            ((jf + 1.0).powf(1.0 - a) - lower) * scale
        })
        .collect())
}

/// Full-history L1 state for a scalar trajectory.
#[derive(Debug, Clone)]
pub struct L1History {
    alpha: FractionalOrder,
    dt: f64,
    u: Vec<f64>,
}

impl L1History {
    pub fn new(alpha: FractionalOrder, dt: f64, u0: f64) -> Self {
        Self {
            alpha,
            dt,
            u: vec![u0],
        }
    }

    pub fn alpha(&self) -> FractionalOrder {
        self.alpha
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Stored states u^0..u^n; length = step count + 1.
    pub fn trajectory(&self) -> &[f64] {
        &self.u
    }
}

/// Semi-implicit L1 solve of ∂_t^α u = −λu:
/// b_0 u^n + λ u^n = b_0 u^{n−1} − Σ_{j≥1} b_j (u^{n−j} − u^{n−j−1}).
/// Returns u^0..u^N.
pub fn l1_solve_scalar(
    alpha: FractionalOrder,
    lam: f64,
    u0: f64,
    dt: f64,
    n_steps: usize,
) -> Result<L1History> {
    if lam <= 0.0 {
        return Err(Error::Domain(format!("lam must be positive, got {lam}")));
    }
    let b = l1_coefficients(alpha, n_steps.max(1), dt)?;
    let mut hist = L1History::new(alpha, dt, u0);
    for step in 1..=n_steps {
        let u = &hist.u;
        let mut rhs = b[0] * u[step - 1];
        for j in 1..step {
            rhs -= b[j] * (u[step - j] - u[step - j - 1]);
        }
        hist.u.push(rhs / (b[0] + lam));
    }
    Ok(hist)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::special::mittag_leffler;
    use approx::assert_relative_eq;

    fn fo(a: f64) -> FractionalOrder {
        FractionalOrder::new(a).unwrap()
    }

    #[test]
    fn classical_weights_are_backward_difference() {
        let b = l1_coefficients(fo(1.0), 5, 0.1).unwrap();
        assert_relative_eq!(b[0], 10.0, max_relative = 1e-14);
        for &bj in &b[1..] {
            assert!(bj.abs() <= 1e-13);
        }
    }

    #[test]
    fn leading_weight_formula() {
        for &a in &[0.2, 0.5, 0.8] {
            let dt = 0.01f64;
            let b = l1_coefficients(fo(a), 3, dt).unwrap();
            let expected = dt.powf(-a) / gamma_fn(2.0 - a).unwrap();
            assert_relative_eq!(b[0], expected, max_relative = 1e-14);
        }
    }

    #[test]
    fn weights_positive_decreasing() {
        for &a in &[0.1, 0.3, 0.5, 0.7, 0.9] {
            let b = l1_coefficients(fo(a), 1000, 1e-3).unwrap();
            assert!(b.iter().all(|&x| x > 0.0));
            assert!(b.windows(2).all(|p| p[1] < p[0]));
        }
    }

    #[test]
    fn classical_solve_is_backward_euler() {
        let hist = l1_solve_scalar(fo(1.0), 1.0, 1.0, 0.01, 50).unwrap();
        for (n, &u) in hist.trajectory().iter().enumerate() {
            assert_relative_eq!(u, 1.01f64.powi(-(n as i32)), max_relative = 1e-12);
        }
    }

    #[test]
    fn relaxation_matches_mittag_leffler_at_one() {
        let hist = l1_solve_scalar(fo(0.5), 1.0, 1.0, 1e-3, 1000).unwrap();
        let exact = mittag_leffler(fo(0.5), -1.0).unwrap();
        assert!((hist.trajectory()[1000] - exact).abs() <= 5e-3);
    }

    #[test]
    fn trajectory_positive_strictly_decreasing() {
        for &a in &[0.3, 0.7] {
            let hist = l1_solve_scalar(fo(a), 2.0, 1.0, 0.01, 300).unwrap();
            let u = hist.trajectory();
            assert!(u.iter().all(|&x| x > 0.0));
            assert!(u.windows(2).all(|p| p[1] < p[0]));
        }
    }

    #[test]
    fn rejects_bad_arguments() {
        assert!(l1_coefficients(fo(0.5), 0, 0.1).is_err());
        assert!(l1_coefficients(fo(0.5), 5, -0.1).is_err());
        assert!(l1_solve_scalar(fo(0.5), 0.0, 1.0, 0.1, 10).is_err());
    }
}

//! Time integration of the augmented mode system: per-mode implicit Euler,
//! reconstruction `u = u_0 + Σ recon_w_k ũ_k + w_∞ ũ_∞`, and the discrete
//! history energy.
//!
//! The stepper is generic over the state space: scalars for desk-scale
//! problems, grid fields for the phase-field flows. The gradient itself is
//! supplied by the flow module; the mode updates are the same for every flow.

use crate::rational::{NodeWeights, SoeApprox};

/// State-space element of a gradient flow: contiguous real coefficients
/// with vector-space operations. The H-inner product lives with the flow,
/// not here, so one state type can serve several metrics.
pub trait StateVector: Clone {
    /// A zero vector of the same shape.
    fn zero_like(&self) -> Self;
    /// `self ← a·self`.
    fn scale_mut(&mut self, a: f64);
    /// `self ← self + a·x`.
    fn scaled_add(&mut self, a: f64, x: &Self);
}

impl StateVector for f64 {
    fn zero_like(&self) -> Self {
        0.0
    }
    fn scale_mut(&mut self, a: f64) {
        *self *= a;
    }
    fn scaled_add(&mut self, a: f64, x: &Self) {
        *self += a * x;
    }
}

/// The m+1 discrete modes ũ_k of the augmented representation, plus the
/// initial datum they perturb. All modes start at zero, so `reconstruct`
/// at t = 0 returns `u0` exactly.
#[derive(Debug, Clone)]
pub struct ModeBank<S: StateVector> {
    approx: SoeApprox,
    nw: NodeWeights,
    lambda: Vec<f64>,
    u0: S,
    modes: Vec<S>,
    mode_inf: S,
    t: f64,
}

/// Closed-form constants of the implicit-Euler mode update at step size dt.
///
/// With the history state `h^n = u_0 + Σ recon_w_k·decay_k·ũ_k^n`, the
/// reconstruction after `mode_step(g, dt)` satisfies
/// `u^{n+1} = h^n − kappa·g` exactly; the flow modules solve their implicit
/// equations against this scalar shift.
#[derive(Debug, Clone)]
pub struct StepperCoefficients {
    pub kappa: f64,
    pub decay: Vec<f64>,
    pub inject: Vec<f64>,
}

/// kappa = Σ w_k·dt/(1+λ_k·dt) + w_∞, decay_k = 1/(1+λ_k·dt),
/// inject_k = (1+λ_k)·dt/(1+λ_k·dt).
pub fn stepper_coefficients(approx: &SoeApprox, dt: f64) -> StepperCoefficients {
    let lambda = approx.lambda();
    let w = approx.weights();
    let kappa = lambda
        .iter()
        .zip(w)
        .map(|(&l, &wk)| wk * dt / (1.0 + l * dt))
        .sum::<f64>()
        + approx.w_inf();
    let decay: Vec<f64> = lambda.iter().map(|&l| 1.0 / (1.0 + l * dt)).collect();
    let inject: Vec<f64> = lambda
        .iter()
        .map(|&l| (1.0 + l) * dt / (1.0 + l * dt))
        .collect();
    StepperCoefficients {
        kappa,
        decay,
        inject,
    }
}

impl<S: StateVector> ModeBank<S> {
    /// A bank at t = 0 with all modes zero ("zero initial condition").
    pub fn new(approx: SoeApprox, u0: S) -> Self {
        let zero = u0.zero_like();
        let modes = vec![zero.clone(); approx.len()];
        let nw = approx.node_weights();
        let lambda = approx.lambda().to_vec();
        Self {
            approx,
            nw,
            lambda,
            u0,
            modes,
            mode_inf: zero,
            t: 0.0,
        }
    }

    pub fn approx(&self) -> &SoeApprox {
        &self.approx
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    pub fn u0(&self) -> &S {
        &self.u0
    }

    pub fn modes(&self) -> &[S] {
        &self.modes
    }

    pub fn mode_inf(&self) -> &S {
        &self.mode_inf
    }

    /// Implicit-Euler update of every mode with the gradient g of this step:
    /// ũ_k ← (ũ_k − (1+λ_k)·dt·g)/(1+λ_k·dt), ũ_∞ ← −g, t ← t + dt.
    pub fn mode_step(&mut self, g: &S, dt: f64) {
        for (u, &l) in self.modes.iter_mut().zip(&self.lambda) {
            let denom = 1.0 + l * dt;
            u.scale_mut(1.0 / denom);
            u.scaled_add(-(1.0 + l) * dt / denom, g);
        }
        self.mode_inf = g.zero_like();
        self.mode_inf.scaled_add(-1.0, g);
        self.t += dt;
    }

    /// u_0 + Σ recon_w_k·ũ_k + w_∞·ũ_∞, summed in λ-ascending order so the
    /// result is bit-identical across runs.
    pub fn reconstruct(&self) -> S {
        let mut u = self.u0.clone();
        for (m, &w) in self.modes.iter().zip(&self.nw.recon_w) {
            u.scaled_add(w, m);
        }
        u.scaled_add(self.nw.w_inf, &self.mode_inf);
        u
    }

    /// The history state h^n = u_0 + Σ recon_w_k·decay_k·ũ_k^n. After
    /// `mode_step(g, dt)` with the same dt, `reconstruct() = h^n − kappa·g`.
    pub fn history_state(&self, coeffs: &StepperCoefficients) -> S {
        let mut h = self.u0.clone();
        for ((m, &w), &d) in self.modes.iter().zip(&self.nw.recon_w).zip(&coeffs.decay) {
            h.scaled_add(w * d, m);
        }
        h
    }

    /// Discrete history energy ½ Σ hist_w_k ‖ũ_k‖²_H + ½ w_∞ ‖ũ_∞‖²_H for
    /// the flow's squared H-norm.
    pub fn history_energy<F: FnMut(&S) -> f64>(&self, mut norm_sq: F) -> f64 {
        let mut h = 0.0;
        for (m, &w) in self.modes.iter().zip(&self.nw.hist_w) {
            h += 0.5 * w * norm_sq(m);
        }
        h += 0.5 * self.nw.w_inf * norm_sq(&self.mode_inf);
        h
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::aaa_fit;
    use crate::special::{mittag_leffler, FractionalOrder};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fo(a: f64) -> FractionalOrder {
        FractionalOrder::new(a).unwrap()
    }

    #[test]
    fn fresh_bank_reconstructs_initial_datum() {
        let soe = aaa_fit(fo(0.5), 0.2, 200.0, 1e-8).unwrap();
        let bank = ModeBank::new(soe, 3.25f64);
        assert_eq!(bank.reconstruct(), 3.25);
        assert_eq!(bank.history_energy(|x| x * x), 0.0);
        assert_eq!(bank.t(), 0.0);
    }

    #[test]
    fn classical_mode_is_pure_integration() {
        // α=1 gives the single λ=0 mode: ũ ← ũ − dt·g, u = u0 + ũ.
        let soe = aaa_fit(fo(1.0), 0.2, 200.0, 1e-8).unwrap();
        let mut bank = ModeBank::new(soe, 1.0f64);
        let g = 2.0;
        for _ in 0..10 {
            bank.mode_step(&g, 0.1);
        }
        assert_relative_eq!(bank.modes()[0], -2.0, max_relative = 1e-14);
        assert_relative_eq!(bank.reconstruct(), 1.0 - 2.0, max_relative = 1e-13);
        // classical limit carries no history energy
        assert_eq!(bank.history_energy(|x| x * x), 0.0);
    }

    #[test]
    fn homogeneous_decay() {
        let soe = aaa_fit(fo(0.5), 0.2, 200.0, 1e-8).unwrap();
        let lambda = soe.lambda().to_vec();
        let mut bank = ModeBank::new(soe, 0.0f64);
        bank.mode_step(&1.0, 0.01); // charge the modes
        let charged: Vec<f64> = bank.modes().to_vec();
        for _ in 0..3 {
            bank.mode_step(&0.0, 0.01);
        }
        for ((&m, &c), &l) in bank.modes().iter().zip(&charged).zip(&lambda) {
            let factor = (1.0 + l * 0.01).powi(-3);
            assert_relative_eq!(m, c * factor, max_relative = 1e-13);
        }
        assert_eq!(*bank.mode_inf(), 0.0);
    }

    #[test]
    fn classical_kappa_is_dt() {
        let soe = aaa_fit(fo(1.0), 0.2, 200.0, 1e-8).unwrap();
        let c = stepper_coefficients(&soe, 0.005);
        assert_eq!(c.kappa, 0.005);
        assert_eq!(c.decay, vec![1.0]);
        assert_eq!(c.inject, vec![0.005]);
    }

    #[test]
    fn kappa_small_dt_limit_is_w_inf() {
        let soe = aaa_fit(fo(0.5), 0.2, 200.0, 1e-8).unwrap();
        let c = stepper_coefficients(&soe, 1e-12);
        assert_relative_eq!(c.kappa, soe.w_inf(), max_relative = 1e-6);
    }

    #[test]
    fn step_identity_matches_history_state() {
        // reconstruct(mode_step(bank, g, dt)) = h^n − kappa·g to 1e-12,
        // for randomly charged banks.
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for &a in &[0.3, 0.7] {
            let soe = aaa_fit(fo(a), 0.2, 200.0, 1e-8).unwrap();
            let dt = 0.005;
            let coeffs = stepper_coefficients(&soe, dt);
            let mut bank = ModeBank::new(soe, rng.gen_range(-1.0..1.0));
            for _ in 0..20 {
                bank.mode_step(&rng.gen_range(-1.0..1.0), dt);
            }
            for _ in 0..5 {
                let g: f64 = rng.gen_range(-1.0..1.0);
                let h = bank.history_state(&coeffs);
                bank.mode_step(&g, dt);
                let u = bank.reconstruct();
                let expected = h - coeffs.kappa * g;
                assert!(
                    (u - expected).abs() <= 1e-12 * expected.abs().max(1.0),
                    "identity violated: {u} vs {expected}"
                );
            }
        }
    }

    #[test]
    fn scalar_relaxation_matches_mittag_leffler() {
        // ∂_t^α u = −u, u(0)=1: semi-implicit g^{n+1} = u^{n+1} = h/(1+κ).
        // The solution has a t^α initial layer; the first steps are
        // geometrically substepped so the uniform-grid sup error stays
        // below 1e-3.
        for &a in &[0.3, 0.5, 0.7] {
            let alpha = fo(a);
            let dt = 1e-3;
            let soe = aaa_fit(alpha, 0.5, 2000.0, 1e-8).unwrap();
            let mut bank = ModeBank::new(soe.clone(), 1.0f64);
            let mut worst = 0.0f64;
            for n in 0..1000 {
                let subs = if n < 30 { (1024usize >> n).max(1) } else { 1 };
                let sdt = dt / subs as f64;
                let coeffs = stepper_coefficients(&soe, sdt);
                for _ in 0..subs {
                    let g = bank.history_state(&coeffs) / (1.0 + coeffs.kappa);
                    bank.mode_step(&g, sdt);
                }
                let t = (n + 1) as f64 * dt;
                let exact = mittag_leffler(alpha, -t.powf(a)).unwrap();
                worst = worst.max((bank.reconstruct() - exact).abs());
            }
            assert!(worst <= 1e-3, "alpha = {a}: sup error {worst:.3e}");
        }
    }

    #[test]
    fn mode_bound_under_bounded_gradient() {
        // ‖ũ_k‖ ≤ (1+λ_k)·G/λ_k for λ_k > 0 when every ‖g‖ ≤ G.
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let soe = aaa_fit(fo(0.4), 0.2, 200.0, 1e-8).unwrap();
        let lambda = soe.lambda().to_vec();
        let g_cap = 2.0;
        let mut bank = ModeBank::new(soe, 0.0f64);
        for _ in 0..400 {
            let g = rng.gen_range(-g_cap..g_cap);
            bank.mode_step(&g, 0.01);
            for (&m, &l) in bank.modes().iter().zip(&lambda) {
                if l > 0.0 {
                    assert!(m.abs() <= (1.0 + l) * g_cap / l * (1.0 + 1e-12));
                }
            }
        }
    }

    #[test]
    fn history_energy_decays_at_steady_state() {
        let soe = aaa_fit(fo(0.5), 0.2, 200.0, 1e-8).unwrap();
        let mut bank = ModeBank::new(soe, 0.0f64);
        for _ in 0..10 {
            bank.mode_step(&1.0, 0.01);
        }
        let charged = bank.history_energy(|x| x * x);
        assert!(charged > 0.0);
        for _ in 0..2000 {
            bank.mode_step(&0.0, 0.01);
        }
        let relaxed = bank.history_energy(|x| x * x);
        assert!(relaxed < 0.05 * charged, "{relaxed} vs {charged}");
    }
}

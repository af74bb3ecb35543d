//! Energy functionals and their H-gradients: the scalar quadratic test flow,
//! Allen–Cahn (H = L²) and Cahn–Hilliard (H = Ḣ⁻¹) with the scaled
//! Ginzburg–Landau energy, convex-concave splitting, and the per-step
//! semi-implicit Newton solve against the mode system's shift identity
//! `u^{n+1} + κ·g^{n+1} = h^n`.

use crate::fields::{
    dct2_forward, dct2_inverse, inner_hm1, inner_l2, invert_laplacian, laplacian_neumann,
    neumann_eigenvalue, GridField,
};
use crate::stepper::{stepper_coefficients, ModeBank, StateVector};
use crate::{Error, Result};

/// Ginzburg–Landau parameters: interface parameter ε̃, scale β, mobility M.
/// Derived: eps_sq = ε̃·β (gradient-term prefactor ε²), c_psi = β/ε̃
/// (potential prefactor).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GLParams {
    eps_tilde: f64,
    beta: f64,
    mobility: f64,
}

impl GLParams {
    pub fn new(eps_tilde: f64, beta: f64, mobility: f64) -> Result<Self> {
        if eps_tilde <= 0.0 || beta <= 0.0 || mobility <= 0.0 {
            return Err(Error::Domain(format!(
                "GL parameters must be positive: eps_tilde={eps_tilde}, beta={beta}, mobility={mobility}"
            )));
        }
        Ok(Self {
            eps_tilde,
            beta,
            mobility,
        })
    }

    pub fn eps_tilde(&self) -> f64 {
        self.eps_tilde
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn mobility(&self) -> f64 {
        self.mobility
    }

    pub fn eps_sq(&self) -> f64 {
        self.eps_tilde * self.beta
    }

    pub fn c_psi(&self) -> f64 {
        self.beta / self.eps_tilde
    }
}

impl Default for GLParams {
    /// ε̃ = 0.05, β = 0.1, M = 1 ⇒ ε² = 0.005, c_psi = 2.
    fn default() -> Self {
        Self {
            eps_tilde: 0.05,
            beta: 0.1,
            mobility: 1.0,
        }
    }
}

/// Which gradient flow is being integrated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FlowKind {
    /// grad E(u) = λ·u; the desk-scale linear test flow.
    ScalarQuadratic(f64),
    /// H = L²: grad = M·μ.
    AllenCahn(GLParams),
    /// H = Ḣ⁻¹: grad = −M·Δμ; conserves the field mean.
    CahnHilliard(GLParams),
}

impl FlowKind {
    pub fn is_mass_conserving(&self) -> bool {
        matches!(self, FlowKind::CahnHilliard(_))
    }

    /// Squared H-norm of the flow's Hilbert space: L² for the scalar and
    /// Allen–Cahn flows, Ḣ⁻¹ (zero-mean) for Cahn–Hilliard.
    pub fn h_norm_sq(&self, f: &GridField) -> Result<f64> {
        match self {
            FlowKind::CahnHilliard(_) => inner_hm1(f, f),
            _ => inner_l2(f, f),
        }
    }
}

/// Scaled Ginzburg–Landau energy
/// `E(u) = Σ (c_psi/4)(1−u²)² dx² + (eps_sq/2) Σ_edges (Δ_edge u)²`.
///
/// The potential prefactor is c_psi/4 so that the chemical potential
/// `c_psi(u³−u)` is the exact variational derivative; pure phases u = ±1
/// have zero energy.
pub fn gl_energy(u: &GridField, p: &GLParams) -> f64 {
    let (nx, ny) = (u.nx(), u.ny());
    let v = u.values();
    let mut pot = 0.0;
    for &x in v {
        let q = 1.0 - x * x;
        pot += q * q;
    }
    pot *= 0.25 * p.c_psi() * u.dx() * u.dx();
    let mut grad = 0.0;
    for j in 0..ny {
        for i in 0..nx {
            if i + 1 < nx {
                let d = v[j * nx + i + 1] - v[j * nx + i];
                grad += d * d;
            }
            if j + 1 < ny {
                let d = v[(j + 1) * nx + i] - v[j * nx + i];
                grad += d * d;
            }
        }
    }
    pot + 0.5 * p.eps_sq() * grad
}

/// Convex-concave split chemical potential
/// `μ = c_psi(u_impl³ − u_expl) − eps_sq·Δu_impl`.
pub fn chemical_potential(u_impl: &GridField, u_expl: &GridField, p: &GLParams) -> GridField {
    let mut mu = laplacian_neumann(u_impl);
    mu.scale_mut(-p.eps_sq());
    let c = p.c_psi();
    for ((m, &ui), &ue) in mu
        .values_mut()
        .iter_mut()
        .zip(u_impl.values())
        .zip(u_expl.values())
    {
        *m += c * (ui * ui * ui - ue);
    }
    mu
}

/// H-gradient of the flow's energy at the split evaluation point.
pub fn gradient(kind: &FlowKind, u_impl: &GridField, u_expl: &GridField) -> GridField {
    match kind {
        FlowKind::ScalarQuadratic(lam) => {
            let mut g = u_impl.clone();
            g.scale_mut(*lam);
            g
        }
        FlowKind::AllenCahn(p) => {
            let mut g = chemical_potential(u_impl, u_expl, p);
            g.scale_mut(p.mobility());
            g
        }
        FlowKind::CahnHilliard(p) => {
            let mu = chemical_potential(u_impl, u_expl, p);
            let mut g = laplacian_neumann(&mu);
            g.scale_mut(-p.mobility());
            g
        }
    }
}

/// How far the per-step Newton solve had to work; useful for diagnostics.
#[derive(Debug, Clone, Copy)]
pub struct StepReport {
    pub newton_iters: usize,
    pub residual: f64,
}

/// One semi-implicit step: solves `u + κ·gradient(kind, u, u^n) = h^n` by
/// Newton (damped by residual backtracking, one halving at a time, max 5),
/// then advances the mode bank with the implied gradient `(h − u)/κ` so the
/// reconstruction reproduces the Newton solution to machine precision.
///
/// Returns the new field and the Newton report.
pub fn semi_implicit_step(
    bank: &mut ModeBank<GridField>,
    kind: &FlowKind,
    dt: f64,
    newton_tol: f64,
    max_iter: usize,
    step_index: usize,
) -> Result<(GridField, StepReport)> {
    let coeffs = stepper_coefficients(bank.approx(), dt);
    let h = bank.history_state(&coeffs);
    let u_expl = bank.reconstruct();
    let (u, report) = newton_solve(
        kind,
        &h,
        &u_expl,
        coeffs.kappa,
        newton_tol,
        max_iter,
        step_index,
    )?;
    // implied gradient: exact in the shift identity, differs from the true
    // gradient by residual/κ
    let mut g = h.clone();
    g.scaled_add(-1.0, &u);
    g.scale_mut(1.0 / coeffs.kappa);
    if kind.is_mass_conserving() {
        // the Ḣ⁻¹ gradient is zero-mean exactly; remove the 1/κ-amplified
        // rounding drift so the modes stay in the zero-mean subspace
        let m = g.mean();
        for v in g.values_mut() {
            *v -= m;
        }
    }
    bank.mode_step(&g, dt);
    Ok((u, report))
}

/// One step of the classical backward-Euler convex-concave splitting
/// `u + dt·gradient(kind, u, u^n) = u^n` — the α = 1 reference scheme. Uses
/// the identical Newton solve as [`semi_implicit_step`].
pub fn classical_splitting_step(
    u_prev: &GridField,
    kind: &FlowKind,
    dt: f64,
    newton_tol: f64,
    max_iter: usize,
    step_index: usize,
) -> Result<GridField> {
    let (u, _) = newton_solve(kind, u_prev, u_prev, dt, newton_tol, max_iter, step_index)?;
    Ok(u)
}

fn residual(kind: &FlowKind, u: &GridField, u_expl: &GridField, h: &GridField, kappa: f64) -> GridField {
    let mut f = gradient(kind, u, u_expl);
    f.scale_mut(kappa);
    f.scaled_add(1.0, u);
    f.scaled_add(-1.0, h);
    f
}

fn newton_solve(
    kind: &FlowKind,
    h: &GridField,
    u_expl: &GridField,
    kappa: f64,
    newton_tol: f64,
    max_iter: usize,
    step_index: usize,
) -> Result<(GridField, StepReport)> {
    // scale for the relative residual test
    let scale = 1.0 + inner_l2(h, h)?.sqrt();
    let mut u = h.clone();
    let mut f = residual(kind, &u, u_expl, h, kappa);
    let mut fnorm = kind.h_norm_sq(&f)?.sqrt();
    for iter in 0..max_iter {
        if fnorm <= newton_tol * scale {
            return Ok((
                u,
                StepReport {
                    newton_iters: iter,
                    residual: fnorm,
                },
            ));
        }
        let delta = solve_jacobian(kind, &u, kappa, &f)?;
        // residual backtracking: halve the step while it increases the norm
        let mut s = 1.0;
        let mut accepted = None;
        for _ in 0..=5 {
            let mut trial = u.clone();
            trial.scaled_add(-s, &delta);
            let ft = residual(kind, &trial, u_expl, h, kappa);
            let ftnorm = kind.h_norm_sq(&ft)?.sqrt();
            if ftnorm < fnorm || s < 1.0 / 32.0 {
                accepted = Some((trial, ft, ftnorm));
                break;
            }
            s *= 0.5;
        }
        let (trial, ft, ftnorm) =
            accepted.expect("backtracking accepts the smallest step unconditionally");
        u = trial;
        f = ft;
        fnorm = ftnorm;
    }
    if fnorm <= newton_tol * scale {
        return Ok((
            u,
            StepReport {
                newton_iters: max_iter,
                residual: fnorm,
            },
        ));
    }
    Err(Error::NewtonDiverged {
        step: step_index,
        residual: fnorm,
        iters: max_iter,
    })
}

/// Solves J·δ = f for the Newton correction δ.
fn solve_jacobian(kind: &FlowKind, u: &GridField, kappa: f64, f: &GridField) -> Result<GridField> {
    match kind {
        FlowKind::ScalarQuadratic(lam) => {
            let mut d = f.clone();
            d.scale_mut(1.0 / (1.0 + kappa * lam));
            Ok(d)
        }
        FlowKind::AllenCahn(p) => pcg_allen_cahn(p, u, kappa, f),
        FlowKind::CahnHilliard(p) => pcg_cahn_hilliard(p, u, kappa, f),
    }
}

const PCG_MAX_ITER: usize = 400;
const PCG_RTOL: f64 = 1e-12;

/// CG on the SPD Jacobian `I + κM(3c_psi u²· + eps_sq(−Δ))` with the
/// constant-coefficient cosine-basis preconditioner (u² replaced by its
/// mean).
fn pcg_allen_cahn(p: &GLParams, u: &GridField, kappa: f64, rhs: &GridField) -> Result<GridField> {
    let km = kappa * p.mobility();
    let c3: Vec<f64> = u.values().iter().map(|&x| 3.0 * p.c_psi() * x * x).collect();
    let u2_mean = u.values().iter().map(|&x| x * x).sum::<f64>() / u.values().len() as f64;
    let apply = |v: &GridField| -> GridField {
        let mut out = laplacian_neumann(v);
        out.scale_mut(-km * p.eps_sq());
        for ((o, &vv), &c) in out.values_mut().iter_mut().zip(v.values()).zip(&c3) {
            *o += vv * (1.0 + km * c);
        }
        out
    };
    let (nx, ny, dx) = (u.nx(), u.ny(), u.dx());
    let precond = |v: &GridField| -> GridField {
        let mut c = dct2_forward(v);
        for j in 0..ny {
            for i in 0..nx {
                let lam = neumann_eigenvalue(i, nx, dx) + neumann_eigenvalue(j, ny, dx);
                c[j * nx + i] /= 1.0 + km * (3.0 * p.c_psi() * u2_mean + p.eps_sq() * lam);
            }
        }
        GridField::from_values(nx, ny, dx, dct2_inverse(&c, nx, ny)).expect("finite precond output")
    };
    pcg(apply, precond, rhs, false)
}

/// PCG on the Ḣ⁻¹-transformed Cahn–Hilliard Jacobian
/// `(−Δ)^{−1} + κM(3c_psi u²· + eps_sq(−Δ))`, SPD on the zero-mean
/// subspace; operator and preconditioner outputs are projected back to zero
/// mean each application.
fn pcg_cahn_hilliard(p: &GLParams, u: &GridField, kappa: f64, rhs: &GridField) -> Result<GridField> {
    let km = kappa * p.mobility();
    let c3: Vec<f64> = u.values().iter().map(|&x| 3.0 * p.c_psi() * x * x).collect();
    let u2_mean = u.values().iter().map(|&x| x * x).sum::<f64>() / u.values().len() as f64;
    let apply = |v: &GridField| -> GridField {
        let mut out = invert_laplacian(v).expect("zero-mean PCG iterate");
        let mut lap = laplacian_neumann(v);
        lap.scale_mut(-km * p.eps_sq());
        out.scaled_add(1.0, &lap);
        for ((o, &vv), &c) in out.values_mut().iter_mut().zip(v.values()).zip(&c3) {
            *o += km * c * vv;
        }
        let m = out.mean();
        for o in out.values_mut() {
            *o -= m;
        }
        out
    };
    let (nx, ny, dx) = (u.nx(), u.ny(), u.dx());
    let precond = |v: &GridField| -> GridField {
        let mut c = dct2_forward(v);
        for j in 0..ny {
            for i in 0..nx {
                if i == 0 && j == 0 {
                    c[0] = 0.0;
                    continue;
                }
                let lam = neumann_eigenvalue(i, nx, dx) + neumann_eigenvalue(j, ny, dx);
                c[j * nx + i] /=
                    1.0 / lam + km * (3.0 * p.c_psi() * u2_mean + p.eps_sq() * lam);
            }
        }
        GridField::from_values(nx, ny, dx, dct2_inverse(&c, nx, ny)).expect("finite precond output")
    };
    // transformed right-hand side (−Δ)^{−1}·rhs, zero-mean
    let rhs_t = invert_laplacian(rhs)?;
    pcg(apply, precond, &rhs_t, true)
}

/// Preconditioned conjugate gradients; `project` subtracts the mean of the
/// solution iterate updates (zero-mean subspace variant).
fn pcg(
    apply: impl Fn(&GridField) -> GridField,
    precond: impl Fn(&GridField) -> GridField,
    rhs: &GridField,
    project: bool,
) -> Result<GridField> {
    let mut x = rhs.zero_like();
    let mut r = rhs.clone();
    if project {
        let m = r.mean();
        for v in r.values_mut() {
            *v -= m;
        }
    }
    let mut z = precond(&r);
    let mut p = z.clone();
    let mut rz = inner_l2(&r, &z)?;
    let rhs_norm = inner_l2(rhs, rhs)?.sqrt().max(f64::MIN_POSITIVE);
    for _ in 0..PCG_MAX_ITER {
        if inner_l2(&r, &r)?.sqrt() <= PCG_RTOL * rhs_norm {
            break;
        }
        let ap = apply(&p);
        let denom = inner_l2(&p, &ap)?;
        if denom <= 0.0 {
            return Err(Error::Conditioning(format!(
                "PCG curvature non-positive: {denom:.3e}"
            )));
        }
        let alpha = rz / denom;
        x.scaled_add(alpha, &p);
        r.scaled_add(-alpha, &ap);
        z = precond(&r);
        let rz_new = inner_l2(&r, &z)?;
        p.scale_mut(rz_new / rz);
        p.scaled_add(1.0, &z);
        rz = rz_new;
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::aaa_fit;
    use crate::special::FractionalOrder;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fo(a: f64) -> FractionalOrder {
        FractionalOrder::new(a).unwrap()
    }

    fn random_small_field(rng: &mut ChaCha8Rng, n: usize, amp: f64) -> GridField {
        let dx = 1.0 / n as f64;
        GridField::from_values(n, n, dx, (0..n * n).map(|_| rng.gen_range(-amp..amp)).collect())
            .unwrap()
    }

    #[test]
    fn derived_parameters() {
        let p = GLParams::default();
        assert_relative_eq!(p.eps_sq(), 0.005, max_relative = 1e-14);
        assert_relative_eq!(p.c_psi(), 2.0, max_relative = 1e-14);
        assert!(GLParams::new(-1.0, 0.1, 1.0).is_err());
    }

    #[test]
    fn energy_of_pure_phases() {
        let p = GLParams::default();
        for c in [1.0, -1.0] {
            let u = GridField::from_fn(16, 16, 1.0 / 16.0, |_, _| c).unwrap();
            assert!(gl_energy(&u, &p).abs() <= 1e-14);
        }
        // u ≡ 0: (c_psi/4)·|Ω| = 0.5 with defaults
        let u = GridField::zeros(16, 16, 1.0 / 16.0).unwrap();
        assert_relative_eq!(gl_energy(&u, &p), 0.5, max_relative = 1e-12);
    }

    #[test]
    fn chemical_potential_constants() {
        let p = GLParams::default();
        for (c, expected) in [(1.0, 0.0), (0.0, 0.0), (0.5, -0.75)] {
            let u = GridField::from_fn(8, 8, 0.125, |_, _| c).unwrap();
            let mu = chemical_potential(&u, &u, &p);
            for &m in mu.values() {
                assert_relative_eq!(m, expected, epsilon = 1e-13);
            }
        }
    }

    #[test]
    fn gradient_matches_directional_derivative() {
        // (grad E(u), v)_{L²} vs (E(u+hv) − E(u−hv))/2h at O(h²)
        let p = GLParams::default();
        let kind = FlowKind::AllenCahn(p);
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..3 {
            let u = random_small_field(&mut rng, 32, 0.8);
            let v = random_small_field(&mut rng, 32, 1.0);
            let g = gradient(&kind, &u, &u);
            let exact = inner_l2(&g, &v).unwrap();
            let mut errs = Vec::new();
            for h in [1e-3, 1e-4] {
                let mut up = u.clone();
                up.scaled_add(h, &v);
                let mut um = u.clone();
                um.scaled_add(-h, &v);
                let fd = (gl_energy(&up, &p) - gl_energy(&um, &p)) / (2.0 * h);
                errs.push((fd - exact).abs());
            }
            // O(h²): shrinking h by 10 shrinks the error by ~100
            assert!(errs[1] <= errs[0] / 50.0 + 1e-12, "errors {errs:?}");
        }
    }

    #[test]
    fn cahn_hilliard_gradient_has_zero_mean() {
        let p = GLParams::default();
        let kind = FlowKind::CahnHilliard(p);
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let u = random_small_field(&mut rng, 16, 0.9);
        let g = gradient(&kind, &u, &u);
        assert!(g.mean().abs() <= 1e-10 * g.max_abs());
    }

    #[test]
    fn scalar_quadratic_step_is_closed_form() {
        let soe = aaa_fit(fo(0.5), 0.2, 200.0, 1e-8).unwrap();
        let coeffs = stepper_coefficients(&soe, 0.005);
        let u0 = GridField::from_fn(8, 8, 0.125, |x, y| x + y).unwrap();
        let mut bank = ModeBank::new(soe, u0);
        let kind = FlowKind::ScalarQuadratic(2.0);
        let (u, report) = semi_implicit_step(&mut bank, &kind, 0.005, 1e-12, 30, 0).unwrap();
        assert!(report.newton_iters <= 1, "iters {}", report.newton_iters);
        let h = bank.u0().clone(); // modes were zero: h^0 = u0
        for (a, &b) in u.values().iter().zip(h.values()) {
            assert_relative_eq!(*a, b / (1.0 + 2.0 * coeffs.kappa), max_relative = 1e-12);
        }
        // reconstruction agrees with the Newton solution to rounding
        let mut diff = bank.reconstruct();
        diff.scaled_add(-1.0, &u);
        assert!(diff.max_abs() <= 1e-14);
    }

    #[test]
    fn equilibrium_is_fixed_point() {
        let soe = aaa_fit(fo(0.5), 0.2, 200.0, 1e-8).unwrap();
        let u0 = GridField::from_fn(16, 16, 1.0 / 16.0, |_, _| 1.0).unwrap();
        let mut bank = ModeBank::new(soe, u0.clone());
        let kind = FlowKind::CahnHilliard(GLParams::default());
        for step in 0..5 {
            let (u, _) = semi_implicit_step(&mut bank, &kind, 0.005, 1e-10, 30, step).unwrap();
            let mut diff = u;
            diff.scaled_add(-1.0, &u0);
            assert!(diff.max_abs() <= 1e-12);
        }
    }

    #[test]
    fn cahn_hilliard_conserves_mass_and_dissipates() {
        let p = GLParams::default();
        let kind = FlowKind::CahnHilliard(p);
        let soe = aaa_fit(fo(0.5), 0.2, 200.0, 1e-8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let u0 = random_small_field(&mut rng, 32, 1e-3);
        let mass0 = u0.mean();
        let mut bank = ModeBank::new(soe, u0.clone());
        let mut u = u0;
        let mut e_aug_prev = gl_energy(&u, &p); // H(0) = 0
        for step in 0..40 {
            let (un, _) = semi_implicit_step(&mut bank, &kind, 0.005, 1e-10, 30, step).unwrap();
            u = un;
            assert!((u.mean() - mass0).abs() <= 1e-10, "mass drift at {step}");
            let e_aug = gl_energy(&u, &p) + bank.history_energy(|f| kind.h_norm_sq(f).unwrap());
            assert!(
                e_aug <= e_aug_prev + 1e-8 * (1.0 + e_aug_prev.abs()),
                "augmented energy rose at step {step}: {e_aug_prev} -> {e_aug}"
            );
            e_aug_prev = e_aug;
        }
        assert!(u.max_abs() <= 1.1);
    }

    #[test]
    fn classical_limit_reduces_to_splitting_reference() {
        // α = 1 mode system vs the direct backward-Euler splitting
        let p = GLParams::default();
        let kind = FlowKind::CahnHilliard(p);
        let soe = aaa_fit(fo(1.0), 0.2, 200.0, 1e-8).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let u0 = random_small_field(&mut rng, 16, 1e-3);
        let mut bank = ModeBank::new(soe, u0.clone());
        let mut u_ref = u0;
        for step in 0..20 {
            let (u, _) = semi_implicit_step(&mut bank, &kind, 0.005, 1e-10, 30, step).unwrap();
            u_ref = classical_splitting_step(&u_ref, &kind, 0.005, 1e-10, 30, step).unwrap();
            let mut diff = u;
            diff.scaled_add(-1.0, &u_ref);
            assert!(diff.max_abs() <= 1e-12, "step {step}: {}", diff.max_abs());
            // history energy identically zero in the classical limit
            assert_eq!(bank.history_energy(|f| kind.h_norm_sq(f).unwrap()), 0.0);
        }
    }
}

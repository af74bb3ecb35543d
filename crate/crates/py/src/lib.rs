//! Python bindings: kernel fitting, scalar relaxation, and full simulation
//! runs with energy traces.

use fracflow::special::{g_alpha, gamma_fn, mittag_leffler};
use fracflow::{aaa_fit, sim, FractionalOrder, SimConfig, SoeApprox};
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;

fn err(e: fracflow::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

fn order(alpha: f64) -> PyResult<FractionalOrder> {
    FractionalOrder::new(alpha).map_err(err)
}

/// Sum-of-exponentials compression of the memory kernel g_α.
#[pyclass(name = "SoeApprox")]
struct PySoeApprox {
    inner: SoeApprox,
}

#[pymethods]
impl PySoeApprox {
    #[getter]
    fn alpha(&self) -> f64 {
        self.inner.alpha().get()
    }

    #[getter]
    fn lam(&self) -> Vec<f64> {
        self.inner.lambda().to_vec()
    }

    #[getter]
    fn weights(&self) -> Vec<f64> {
        self.inner.weights().to_vec()
    }

    #[getter]
    fn w_inf(&self) -> f64 {
        self.inner.w_inf()
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    /// Compressed kernel Σ w_k e^{−λ_k t}.
    fn kernel(&self, t: f64) -> f64 {
        self.inner.kernel_eval(t)
    }

    /// Rational approximant of z^{−α}.
    fn rational(&self, z: f64) -> f64 {
        self.inner.eval_rational(z)
    }

    /// Relative kernel error at t against the exact g_α.
    fn kernel_rel_error(&self, t: f64) -> PyResult<f64> {
        let exact = g_alpha(self.inner.alpha(), t).map_err(err)?;
        Ok((self.inner.kernel_eval(t) - exact).abs() / exact)
    }

    /// Plain-text mode table (round-trips through `fit_kernel` output files).
    fn to_table(&self) -> String {
        self.inner.to_table()
    }

    fn __repr__(&self) -> String {
        format!(
            "SoeApprox(alpha={}, modes={})",
            self.inner.alpha().get(),
            self.inner.len()
        )
    }
}

/// Energy trace and final state of one simulation run.
#[pyclass(name = "RunResult")]
struct PyRunResult {
    #[pyo3(get)]
    times: Vec<f64>,
    #[pyo3(get)]
    energy: Vec<f64>,
    #[pyo3(get)]
    history_energy: Vec<f64>,
    #[pyo3(get)]
    augmented_energy: Vec<f64>,
    #[pyo3(get)]
    nx: usize,
    /// Final field, row-major nx×nx.
    #[pyo3(get)]
    final_field: Vec<f64>,
    #[pyo3(get)]
    modes: usize,
}

#[pymethods]
impl PyRunResult {
    /// Count of steps where the augmented energy increased beyond
    /// tol·(1+|E_aug|).
    #[pyo3(signature = (tol=1e-8))]
    fn dissipation_violations(&self, tol: f64) -> usize {
        let mut count = 0;
        for i in 0..self.augmented_energy.len().saturating_sub(1) {
            let inc = self.augmented_energy[i + 1] - self.augmented_energy[i];
            if inc > tol * (1.0 + self.augmented_energy[i].abs()) {
                count += 1;
            }
        }
        count
    }

    fn __repr__(&self) -> String {
        format!(
            "RunResult(steps={}, nx={}, E_aug[-1]={:.6e})",
            self.times.len().saturating_sub(1),
            self.nx,
            self.augmented_energy.last().copied().unwrap_or(f64::NAN)
        )
    }
}

/// Γ(x) for x > 0.
#[pyfunction]
fn gamma(x: f64) -> PyResult<f64> {
    gamma_fn(x).map_err(err)
}

/// One-parameter Mittag-Leffler function E_α(z) for z ≤ 0.
#[pyfunction(name = "mittag_leffler")]
fn py_mittag_leffler(alpha: f64, z: f64) -> PyResult<f64> {
    mittag_leffler(order(alpha)?, z).map_err(err)
}

/// Fits z^{−α} on [z_min, z_max] and returns the mode table.
#[pyfunction]
#[pyo3(signature = (alpha, z_min=0.2, z_max=200.0, tol=1e-8))]
fn fit_kernel(alpha: f64, z_min: f64, z_max: f64, tol: f64) -> PyResult<PySoeApprox> {
    let inner = aaa_fit(order(alpha)?, z_min, z_max, tol).map_err(err)?;
    Ok(PySoeApprox { inner })
}

/// Semi-implicit solve of ∂_t^α u = −lam·u, u(0) = u0; returns u at the
/// uniform grid times dt, 2·dt, …, n_steps·dt.
#[pyfunction]
#[pyo3(signature = (alpha, lam=1.0, u0=1.0, dt=1e-3, n_steps=1000, tol=1e-8))]
fn scalar_relaxation(
    alpha: f64,
    lam: f64,
    u0: f64,
    dt: f64,
    n_steps: usize,
    tol: f64,
) -> PyResult<Vec<f64>> {
    sim::scalar_relaxation(order(alpha)?, lam, u0, dt, n_steps, tol).map_err(err)
}

/// Runs a phase-field simulation from flat `key = value` config text
/// (same format as the CLI config files; all keys optional).
#[pyfunction]
#[pyo3(signature = (config_text=""))]
fn run(config_text: &str) -> PyResult<PyRunResult> {
    let cfg = SimConfig::parse(config_text).map_err(err)?;
    let res = sim::run(&cfg).map_err(err)?;
    let tr = &res.trace;
    Ok(PyRunResult {
        times: tr.times().to_vec(),
        energy: tr.e().to_vec(),
        history_energy: tr.h().to_vec(),
        augmented_energy: tr.e_aug().to_vec(),
        nx: res.final_field.nx(),
        final_field: res.final_field.values().to_vec(),
        modes: res.soe.len(),
    })
}

#[pymodule]
fn fracflow_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PySoeApprox>()?;
    m.add_class::<PyRunResult>()?;
    m.add_function(wrap_pyfunction!(gamma, m)?)?;
    m.add_function(wrap_pyfunction!(py_mittag_leffler, m)?)?;
    m.add_function(wrap_pyfunction!(fit_kernel, m)?)?;
    m.add_function(wrap_pyfunction!(scalar_relaxation, m)?)?;
    m.add_function(wrap_pyfunction!(run, m)?)?;
    Ok(())
}

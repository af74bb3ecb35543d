//! 2-D uniform-grid scalar fields on Ω = (0,1)² with homogeneous Neumann
//! boundary: 5-point Laplacian, cosine-transform elliptic solves, and the
//! L²/Ḣ⁻¹ inner products.
//!
//! The grid is cell-centered (nodes at (i+½)Δx), so the mirror reflection of
//! the Neumann stencil matches the type-II cosine basis exactly and the
//! Laplacian diagonalizes with eigenvalues −(2−2cos(πk/n))/Δx² per direction.

use crate::stepper::StateVector;
use crate::{Error, Result};
use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use std::cell::RefCell;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

/// Relative tolerance for the zero-mean precondition of Ḣ⁻¹ operations.
const MEAN_TOL: f64 = 1e-10;

/// Scalar field sampled at cell centers, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct GridField {
    nx: usize,
    ny: usize,
    dx: f64,
    values: Vec<f64>,
}

impl GridField {
    pub fn zeros(nx: usize, ny: usize, dx: f64) -> Result<Self> {
        if nx < 4 || ny < 4 {
            return Err(Error::Domain(format!(
                "grid must be at least 4x4, got {nx}x{ny}"
            )));
        }
        if dx <= 0.0 {
            return Err(Error::Domain(format!("dx must be positive, got {dx}")));
        }
        Ok(Self {
            nx,
            ny,
            dx,
            values: vec![0.0; nx * ny],
        })
    }

    pub fn from_values(nx: usize, ny: usize, dx: f64, values: Vec<f64>) -> Result<Self> {
        if values.len() != nx * ny {
            return Err(Error::DimensionMismatch {
                expected: nx * ny,
                got: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain("field contains non-finite values".into()));
        }
        let mut f = Self::zeros(nx, ny, dx)?;
        f.values = values;
        Ok(f)
    }

    /// Field with values f(x, y) at cell centers x=(i+½)dx, y=(j+½)dx.
    pub fn from_fn(nx: usize, ny: usize, dx: f64, f: impl Fn(f64, f64) -> f64) -> Result<Self> {
        let mut out = Self::zeros(nx, ny, dx)?;
        for j in 0..ny {
            for i in 0..nx {
                let x = (i as f64 + 0.5) * dx;
                let y = (j as f64 + 0.5) * dx;
                out.values[j * nx + i] = f(x, y);
            }
        }
        Ok(out)
    }

    pub fn nx(&self) -> usize {
        self.nx
    }

    pub fn ny(&self) -> usize {
        self.ny
    }

    pub fn dx(&self) -> f64 {
        self.dx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    fn same_shape(&self, other: &Self) -> Result<()> {
        if self.nx != other.nx || self.ny != other.ny {
            return Err(Error::DimensionMismatch {
                expected: self.nx * self.ny,
                got: other.nx * other.ny,
            });
        }
        Ok(())
    }
}

impl StateVector for GridField {
    fn zero_like(&self) -> Self {
        Self {
            nx: self.nx,
            ny: self.ny,
            dx: self.dx,
            values: vec![0.0; self.values.len()],
        }
    }
    fn scale_mut(&mut self, a: f64) {
        for v in &mut self.values {
            *v *= a;
        }
    }
    fn scaled_add(&mut self, a: f64, x: &Self) {
        debug_assert_eq!(self.values.len(), x.values.len());
        for (v, &xv) in self.values.iter_mut().zip(&x.values) {
            *v += a * xv;
        }
    }
}

/// 5-point Laplacian with mirror (homogeneous Neumann) boundary: out-of-grid
/// neighbors reflect to the boundary cell itself, so their difference term
/// vanishes.
pub fn laplacian_neumann(f: &GridField) -> GridField {
    let (nx, ny) = (f.nx, f.ny);
    let inv_dx2 = 1.0 / (f.dx * f.dx);
    let mut out = f.zero_like();
    let v = &f.values;
    for j in 0..ny {
        for i in 0..nx {
            let c = v[j * nx + i];
            let left = if i > 0 { v[j * nx + i - 1] } else { c };
            let right = if i + 1 < nx { v[j * nx + i + 1] } else { c };
            let down = if j > 0 { v[(j - 1) * nx + i] } else { c };
            let up = if j + 1 < ny { v[(j + 1) * nx + i] } else { c };
            out.values[j * nx + i] = (left + right + up + down - 4.0 * c) * inv_dx2;
        }
    }
    out
}

/// Eigenvalue of −Δ (Neumann, mirror stencil) for wavenumber k of n cells.
pub fn neumann_eigenvalue(k: usize, n: usize, dx: f64) -> f64 {
    (2.0 - 2.0 * (std::f64::consts::PI * k as f64 / n as f64).cos()) / (dx * dx)
}

thread_local! {
    static FFT_CACHE: RefCell<HashMap<(usize, bool), Arc<dyn Fft<f64>>>> =
        RefCell::new(HashMap::new());
}

fn plan(n: usize, inverse: bool) -> Arc<dyn Fft<f64>> {
    FFT_CACHE.with(|c| {
        c.borrow_mut()
            .entry((n, inverse))
            .or_insert_with(|| {
                let mut planner = FftPlanner::new();
                if inverse {
                    planner.plan_fft_inverse(n)
                } else {
                    planner.plan_fft_forward(n)
                }
            })
            .clone()
    })
}

/// In-place DCT-II of each length-n slice: X_k = Σ x_j cos(π(j+½)k/n),
/// via the even extension of length 2n and a complex FFT.
fn dct2_rows(data: &mut [f64], n: usize) {
    let fft = plan(2 * n, false);
    let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
    for row in data.chunks_mut(n) {
        for (j, &x) in row.iter().enumerate() {
            buf[j] = Complex64::new(x, 0.0);
            buf[2 * n - 1 - j] = Complex64::new(x, 0.0);
        }
        fft.process(&mut buf);
        for (k, x) in row.iter_mut().enumerate() {
            let phase = Complex64::from_polar(0.5, -std::f64::consts::PI * k as f64 / (2 * n) as f64);
            *x = (phase * buf[k]).re;
        }
    }
}

/// In-place inverse of [`dct2_rows`] (DCT-III scaled by 2/n).
fn dct3_rows(data: &mut [f64], n: usize) {
    let fft = plan(2 * n, true);
    let mut buf = vec![Complex64::new(0.0, 0.0); 2 * n];
    for row in data.chunks_mut(n) {
        buf[n] = Complex64::new(0.0, 0.0);
        for (k, &x) in row.iter().enumerate() {
            let y = Complex64::from_polar(2.0 * x, std::f64::consts::PI * k as f64 / (2 * n) as f64);
            buf[k] = y;
            if k > 0 {
                buf[2 * n - k] = y.conj();
            }
        }
        fft.process(&mut buf);
        for (j, x) in row.iter_mut().enumerate() {
            *x = buf[j].re / (2 * n) as f64;
        }
    }
}

fn transpose(data: &[f64], nx: usize, ny: usize, out: &mut [f64]) {
    for j in 0..ny {
        for i in 0..nx {
            out[i * ny + j] = data[j * nx + i];
        }
    }
}

/// Forward 2-D DCT-II of the field values (row-major coefficients).
pub fn dct2_forward(f: &GridField) -> Vec<f64> {
    let (nx, ny) = (f.nx, f.ny);
    let mut a = f.values.clone();
    dct2_rows(&mut a, nx);
    let mut b = vec![0.0; nx * ny];
    transpose(&a, nx, ny, &mut b);
    dct2_rows(&mut b, ny);
    transpose(&b, ny, nx, &mut a);
    a
}

/// Inverse of [`dct2_forward`].
pub fn dct2_inverse(coeffs: &[f64], nx: usize, ny: usize) -> Vec<f64> {
    let mut a = coeffs.to_vec();
    dct3_rows(&mut a, nx);
    let mut b = vec![0.0; nx * ny];
    transpose(&a, nx, ny, &mut b);
    dct3_rows(&mut b, ny);
    transpose(&b, ny, nx, &mut a);
    a
}

fn require_zero_mean(f: &GridField) -> Result<()> {
    let mean = f.mean();
    let scale = f.max_abs();
    // absolute floor: converged residuals and relaxed history modes are
    // numerically zero; rounding leaves |mean| ≳ 1e-10·max|f| on them even
    // though they are zero-mean by construction
    if mean.abs() > MEAN_TOL * scale.max(1e-3) {
        return Err(Error::NonZeroMean { mean, scale });
    }
    Ok(())
}

/// (−Δ)^{−1} f on the zero-mean subspace by diagonalization in the cosine
/// basis; the constant mode is zeroed.
pub fn invert_laplacian(f: &GridField) -> Result<GridField> {
    require_zero_mean(f)?;
    let mut c = dct2_forward(f);
    let (nx, ny, dx) = (f.nx, f.ny, f.dx);
    for j in 0..ny {
        for i in 0..nx {
            if i == 0 && j == 0 {
                c[0] = 0.0;
                continue;
            }
            let lam = neumann_eigenvalue(i, nx, dx) + neumann_eigenvalue(j, ny, dx);
            c[j * nx + i] /= lam;
        }
    }
    let values = dct2_inverse(&c, nx, ny);
    // transform-exact scaling: DCT-II∘DCT-III here is 2nx·2ny/4 = nx·ny… the
    // row transforms are already normalized, so only the solve scaling remains
    GridField::from_values(nx, ny, dx, values)
}

/// L² inner product Σ f_ij g_ij · dx².
pub fn inner_l2(f: &GridField, g: &GridField) -> Result<f64> {
    f.same_shape(g)?;
    let dx2 = f.dx * f.dx;
    Ok(f
        .values
        .iter()
        .zip(&g.values)
        .map(|(&a, &b)| a * b)
        .sum::<f64>()
        * dx2)
}

/// Ḣ⁻¹ inner product ((−Δ)^{−1} f, g)_{L²} on the zero-mean subspace.
pub fn inner_hm1(f: &GridField, g: &GridField) -> Result<f64> {
    require_zero_mean(g)?;
    inner_l2(&invert_laplacian(f)?, g)
}

/// Writes `path` (little-endian doubles, row-major) and the `path.meta`
/// sidecar with one line: `nx=… ny=… dx=… time=… alpha=…`.
pub fn write_snapshot(f: &GridField, path: &Path, time: f64, alpha: f64) -> Result<()> {
    let mut bytes = Vec::with_capacity(f.values.len() * 8);
    for v in &f.values {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    std::fs::write(path, bytes)?;
    let mut meta = String::new();
    let _ = writeln!(
        meta,
        "nx={} ny={} dx={:.17e} time={:.17e} alpha={:.17e}",
        f.nx, f.ny, f.dx, time, alpha
    );
    std::fs::write(path.with_extension("meta"), meta)?;
    Ok(())
}

/// Reads a snapshot written by [`write_snapshot`]; returns (field, time, alpha).
pub fn read_snapshot(path: &Path) -> Result<(GridField, f64, f64)> {
    let meta = std::fs::read_to_string(path.with_extension("meta"))?;
    let mut nx = None;
    let mut ny = None;
    let mut dx = None;
    let mut time = None;
    let mut alpha = None;
    for pair in meta.split_whitespace() {
        let (key, value) = pair
            .split_once('=')
            .ok_or_else(|| Error::Config(format!("bad sidecar entry {pair:?}")))?;
        let parse = || {
            value
                .parse::<f64>()
                .map_err(|e| Error::Config(format!("bad sidecar number {value:?}: {e}")))
        };
        match key {
            "nx" => nx = Some(parse()? as usize),
            "ny" => ny = Some(parse()? as usize),
            "dx" => dx = Some(parse()?),
            "time" => time = Some(parse()?),
            "alpha" => alpha = Some(parse()?),
            _ => {}
        }
    }
    let missing = |name: &str| Error::Config(format!("missing {name} in sidecar"));
    let nx = nx.ok_or_else(|| missing("nx"))?;
    let ny = ny.ok_or_else(|| missing("ny"))?;
    let bytes = std::fs::read(path)?;
    if bytes.len() != nx * ny * 8 {
        return Err(Error::DimensionMismatch {
            expected: nx * ny * 8,
            got: bytes.len(),
        });
    }
    let values: Vec<f64> = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    let field = GridField::from_values(nx, ny, dx.ok_or_else(|| missing("dx"))?, values)?;
    Ok((
        field,
        time.ok_or_else(|| missing("time"))?,
        alpha.ok_or_else(|| missing("alpha"))?,
    ))
}

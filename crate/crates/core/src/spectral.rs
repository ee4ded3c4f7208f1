//! Periodic spectral calculus on a [`GridSpec`].
//!
//! Coefficients use the same row-major layout as the node values. Index `j`
//! along an axis carries wavenumber `j` for `j < N/2` and `j - N` otherwise,
//! scaled by `pi / L`. First-derivative multipliers vanish on the Nyquist
//! index so that derivatives of real data stay real; the Laplacian symbol
//! keeps the full `|k|^2` so it is invertible on every nonzero mode.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{LabError, Result};
use crate::grid::{GridSpec, ObstacleMask};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

#[derive(Debug, Clone, PartialEq)]
pub struct ScalarField {
    grid: GridSpec,
    values: Vec<f64>,
}

impl ScalarField {
    pub fn new(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.len() {
            return Err(LabError::InvalidGrid(format!(
                "field has {} samples, grid has {}",
                values.len(),
                grid.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::InvalidSettings("field contains non-finite values".into()));
        }
        Ok(Self { grid, values })
    }

    pub(crate) fn from_vec(grid: GridSpec, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), grid.len());
        Self { grid, values }
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self::from_vec(grid, vec![0.0; grid.len()])
    }

    pub fn constant(grid: GridSpec, c: f64) -> Self {
        Self::from_vec(grid, vec![c; grid.len()])
    }

    pub fn from_fn(grid: GridSpec, f: impl Fn(f64, f64) -> f64) -> Self {
        Self::from_vec(grid, grid.sample(f))
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn add_scaled(&mut self, a: f64, other: &ScalarField) {
        for (x, y) in self.values.iter_mut().zip(&other.values) {
            *x += a * y;
        }
    }

    pub fn shifted(&self, c: f64) -> ScalarField {
        Self::from_vec(self.grid, self.values.iter().map(|v| v + c).collect())
    }

    pub fn scaled(&self, a: f64) -> ScalarField {
        Self::from_vec(self.grid, self.values.iter().map(|v| a * v).collect())
    }

    pub fn sub(&self, other: &ScalarField) -> ScalarField {
        let mut out = self.clone();
        out.add_scaled(-1.0, other);
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub u1: ScalarField,
    pub u2: ScalarField,
}

impl VectorField {
    pub fn new(u1: ScalarField, u2: ScalarField) -> Result<Self> {
        if u1.grid != u2.grid {
            return Err(LabError::InvalidGrid("vector components on different grids".into()));
        }
        Ok(Self { u1, u2 })
    }

    pub fn zeros(grid: GridSpec) -> Self {
        Self {
            u1: ScalarField::zeros(grid),
            u2: ScalarField::zeros(grid),
        }
    }

    pub fn from_fn(
        grid: GridSpec,
        f1: impl Fn(f64, f64) -> f64,
        f2: impl Fn(f64, f64) -> f64,
    ) -> Self {
        Self {
            u1: ScalarField::from_fn(grid, f1),
            u2: ScalarField::from_fn(grid, f2),
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.u1.grid
    }

    pub fn components(&self) -> [&ScalarField; 2] {
        [&self.u1, &self.u2]
    }

    pub fn add_scaled(&mut self, a: f64, other: &VectorField) {
        self.u1.add_scaled(a, &other.u1);
        self.u2.add_scaled(a, &other.u2);
    }

    pub fn scaled(&self, a: f64) -> VectorField {
        Self {
            u1: self.u1.scaled(a),
            u2: self.u2.scaled(a),
        }
    }

    pub fn sub(&self, other: &VectorField) -> VectorField {
        Self {
            u1: self.u1.sub(&other.u1),
            u2: self.u2.sub(&other.u2),
        }
    }

    pub fn shifted(&self, c: [f64; 2]) -> VectorField {
        Self {
            u1: self.u1.shifted(c[0]),
            u2: self.u2.shifted(c[1]),
        }
    }

    /// Largest pointwise speed.
    pub fn max_speed(&self) -> f64 {
        self.u1
            .values
            .iter()
            .zip(&self.u2.values)
            .fold(0.0, |m, (a, b)| m.max(a.hypot(*b)))
    }
}

/// Anything sampled on a grid with one or more real components.
pub trait GridField {
    fn grid(&self) -> &GridSpec;
    fn component_values(&self) -> Vec<&[f64]>;
}

impl GridField for ScalarField {
    fn grid(&self) -> &GridSpec {
        &self.grid
    }
    fn component_values(&self) -> Vec<&[f64]> {
        vec![&self.values]
    }
}

impl GridField for VectorField {
    fn grid(&self) -> &GridSpec {
        &self.u1.grid
    }
    fn component_values(&self) -> Vec<&[f64]> {
        vec![&self.u1.values, &self.u2.values]
    }
}

/// Unnormalized discrete Fourier coefficients of one real field.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralCoeffs {
    n: usize,
    data: Vec<Complex64>,
}

impl SpectralCoeffs {
    pub fn zeros(n: usize) -> Self {
        Self {
            n,
            data: vec![ZERO; n * n],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    /// Coefficient at signed wavenumber index `(k1, k2)`.
    pub fn get(&self, k1: i64, k2: i64) -> Complex64 {
        let n = self.n as i64;
        let ix = k1.rem_euclid(n) as usize;
        let iy = k2.rem_euclid(n) as usize;
        self.data[iy * self.n + ix]
    }

    /// Largest deviation from `c(-k) = conj(c(k))`, relative to the largest
    /// coefficient.
    pub fn conjugate_symmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut worst = 0.0f64;
        let mut scale = 0.0f64;
        for iy in 0..n {
            for ix in 0..n {
                let a = self.data[iy * n + ix];
                let b = self.data[((n - iy) % n) * n + (n - ix) % n];
                worst = worst.max((a - b.conj()).norm());
                scale = scale.max(a.norm());
            }
        }
        if scale == 0.0 {
            0.0
        } else {
            worst / scale
        }
    }
}

/// FFT plans plus wavenumber tables for one grid.
#[derive(Clone)]
pub struct SpectralOps {
    grid: GridSpec,
    fwd: Arc<dyn Fft<f64>>,
    inv: Arc<dyn Fft<f64>>,
    /// Signed wavenumber per axis index, Nyquist included.
    wave: Vec<f64>,
    /// First-derivative multiplier per axis index, Nyquist zeroed.
    deriv: Vec<f64>,
    /// `|k|^2` per coefficient.
    k2: Vec<f64>,
    /// `|k_deriv|^2` per coefficient.
    k2_deriv: Vec<f64>,
}

impl std::fmt::Debug for SpectralOps {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SpectralOps").field("grid", &self.grid).finish()
    }
}

/// Signed index `j -> j` for `j < N/2`, `j - N` otherwise.
pub fn signed_index(j: usize, n: usize) -> i64 {
    if j < n / 2 {
        j as i64
    } else {
        j as i64 - n as i64
    }
}

impl SpectralOps {
    pub fn new(grid: &GridSpec) -> Self {
        let n = grid.n();
        let mut planner = FftPlanner::new();
        let fwd = planner.plan_fft_forward(n);
        let inv = planner.plan_fft_inverse(n);
        let scale = std::f64::consts::PI / grid.half_width();
        let wave: Vec<f64> = (0..n).map(|j| signed_index(j, n) as f64 * scale).collect();
        let deriv: Vec<f64> = (0..n)
            .map(|j| if j == n / 2 { 0.0 } else { wave[j] })
            .collect();
        let mut k2 = Vec::with_capacity(n * n);
        let mut k2_deriv = Vec::with_capacity(n * n);
        for iy in 0..n {
            for ix in 0..n {
                k2.push(wave[ix] * wave[ix] + wave[iy] * wave[iy]);
                k2_deriv.push(deriv[ix] * deriv[ix] + deriv[iy] * deriv[iy]);
            }
        }
        Self {
            grid: *grid,
            fwd,
            inv,
            wave,
            deriv,
            k2,
            k2_deriv,
        }
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn n(&self) -> usize {
        self.grid.n()
    }

    /// `|k|^2` table, row-major.
    pub fn laplacian_symbol(&self) -> &[f64] {
        &self.k2
    }

    pub fn wavenumbers(&self) -> &[f64] {
        &self.wave
    }

    pub fn derivative_multipliers(&self) -> &[f64] {
        &self.deriv
    }

    fn fft2(&self, buf: &mut [Complex64], plan: &Arc<dyn Fft<f64>>) {
        let n = self.n();
        let mut scratch = vec![ZERO; plan.get_inplace_scratch_len()];
        plan.process_with_scratch(buf, &mut scratch);
        transpose(buf, n);
        plan.process_with_scratch(buf, &mut scratch);
        transpose(buf, n);
    }

    pub fn forward_raw(&self, values: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = values.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft2(&mut buf, &self.fwd);
        buf
    }

    /// Inverse transform, normalized, real part kept.
    pub fn inverse_raw(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.fft2(&mut buf, &self.inv);
        let norm = 1.0 / self.grid.len() as f64;
        buf.iter().map(|c| c.re * norm).collect()
    }

    pub fn forward(&self, s: &ScalarField) -> SpectralCoeffs {
        SpectralCoeffs {
            n: self.n(),
            data: self.forward_raw(&s.values),
        }
    }

    pub fn inverse(&self, c: &SpectralCoeffs) -> ScalarField {
        ScalarField::from_vec(self.grid, self.inverse_raw(&c.data))
    }

    /// Physical-space L2 norm of a field from its coefficients (Parseval).
    pub fn coeff_l2(&self, c: &[Complex64]) -> f64 {
        let sum: f64 = c.iter().map(|z| z.norm_sqr()).sum();
        (self.grid.cell_area() * sum / self.grid.len() as f64).sqrt()
    }

    /// Physical-space inner product `h^2 sum a b` from coefficients.
    pub fn coeff_dot(&self, a: &[Complex64], b: &[Complex64]) -> f64 {
        let sum: f64 = a.iter().zip(b).map(|(x, y)| x.re * y.re + x.im * y.im).sum();
        self.grid.cell_area() * sum / self.grid.len() as f64
    }

    /// `i k_deriv c` along axis 0 (x) or 1 (y).
    pub fn differentiate_coeffs(&self, c: &[Complex64], axis: usize) -> Vec<Complex64> {
        let n = self.n();
        let mut out = vec![ZERO; n * n];
        for iy in 0..n {
            for ix in 0..n {
                let k = if axis == 0 { self.deriv[ix] } else { self.deriv[iy] };
                let z = c[iy * n + ix];
                out[iy * n + ix] = Complex64::new(-k * z.im, k * z.re);
            }
        }
        out
    }

    pub fn gradient(&self, s: &ScalarField) -> VectorField {
        let c = self.forward_raw(&s.values);
        VectorField {
            u1: ScalarField::from_vec(self.grid, self.inverse_raw(&self.differentiate_coeffs(&c, 0))),
            u2: ScalarField::from_vec(self.grid, self.inverse_raw(&self.differentiate_coeffs(&c, 1))),
        }
    }

    pub fn divergence_coeffs(&self, c1: &[Complex64], c2: &[Complex64]) -> Vec<Complex64> {
        let mut d = self.differentiate_coeffs(c1, 0);
        for (a, b) in d.iter_mut().zip(self.differentiate_coeffs(c2, 1)) {
            *a += b;
        }
        d
    }

    pub fn divergence(&self, v: &VectorField) -> ScalarField {
        let c1 = self.forward_raw(&v.u1.values);
        let c2 = self.forward_raw(&v.u2.values);
        ScalarField::from_vec(self.grid, self.inverse_raw(&self.divergence_coeffs(&c1, &c2)))
    }

    /// Spectral Laplacian `-|k|^2 c`.
    pub fn laplacian(&self, s: &ScalarField) -> ScalarField {
        let mut c = self.forward_raw(&s.values);
        for (z, k2) in c.iter_mut().zip(&self.k2) {
            *z *= -k2;
        }
        ScalarField::from_vec(self.grid, self.inverse_raw(&c))
    }

    /// Divides by `|k|^2`, zero mode set to zero.
    pub fn solve_neg_laplacian_coeffs(&self, c: &mut [Complex64]) {
        c[0] = ZERO;
        for (z, k2) in c.iter_mut().zip(&self.k2).skip(1) {
            *z /= *k2;
        }
    }

    /// Zero-mean solution of `-Δu = f`.
    ///
    /// Fails with [`LabError::NonZeroMean`] when `|mean f| > tol (||f|| + 1)`.
    pub fn inv_laplacian_zero_mean(&self, f: &ScalarField, tol: f64) -> Result<ScalarField> {
        let empty = ObstacleMask::empty(&self.grid);
        let mean = box_mean(f, &empty);
        if mean.abs() > tol * (masked_l2(f, &empty) + 1.0) {
            return Err(LabError::NonZeroMean { mean });
        }
        let mut c = self.forward_raw(&f.values);
        self.solve_neg_laplacian_coeffs(&mut c);
        Ok(ScalarField::from_vec(self.grid, self.inverse_raw(&c)))
    }

    /// In-place Leray projection of a coefficient pair. Modes with vanishing
    /// derivative symbol (the mean and the pure-Nyquist modes) pass through.
    pub fn project_coeffs(&self, c1: &mut [Complex64], c2: &mut [Complex64]) {
        let n = self.n();
        for iy in 0..n {
            let ky = self.deriv[iy];
            for ix in 0..n {
                let idx = iy * n + ix;
                let kk = self.k2_deriv[idx];
                if kk == 0.0 {
                    continue;
                }
                let kx = self.deriv[ix];
                let dot = (c1[idx] * kx + c2[idx] * ky) / kk;
                c1[idx] -= dot * kx;
                c2[idx] -= dot * ky;
            }
        }
    }

    pub fn leray_project(&self, v: &VectorField) -> VectorField {
        let mut c1 = self.forward_raw(&v.u1.values);
        let mut c2 = self.forward_raw(&v.u2.values);
        self.project_coeffs(&mut c1, &mut c2);
        VectorField {
            u1: ScalarField::from_vec(self.grid, self.inverse_raw(&c1)),
            u2: ScalarField::from_vec(self.grid, self.inverse_raw(&c2)),
        }
    }

    /// Pressure from a force density: the zero-mean `p` with
    /// `grad p = (I - P) g`, i.e. `p_hat = -i (k . g_hat) / |k|^2` with the
    /// derivative symbol.
    pub fn gradient_potential_coeffs(&self, g1: &[Complex64], g2: &[Complex64]) -> Vec<Complex64> {
        let n = self.n();
        let mut out = vec![ZERO; n * n];
        for iy in 0..n {
            let ky = self.deriv[iy];
            for ix in 0..n {
                let idx = iy * n + ix;
                let kk = self.k2_deriv[idx];
                if kk == 0.0 {
                    continue;
                }
                let kx = self.deriv[ix];
                let dot = g1[idx] * kx + g2[idx] * ky;
                out[idx] = Complex64::new(dot.im, -dot.re) / kk;
            }
        }
        out
    }

    /// Zeroes every coefficient with `max(|k1|, |k2|) > N/3` in index units.
    pub fn dealias_coeffs(&self, c: &mut [Complex64]) {
        let n = self.n();
        let keep = |j: usize| 3 * signed_index(j, n).unsigned_abs() as usize <= n;
        for iy in 0..n {
            let row_keep = keep(iy);
            for ix in 0..n {
                if !(row_keep && keep(ix)) {
                    c[iy * n + ix] = ZERO;
                }
            }
        }
    }

    pub fn dealias(&self, s: &ScalarField) -> ScalarField {
        let mut c = self.forward_raw(&s.values);
        self.dealias_coeffs(&mut c);
        ScalarField::from_vec(self.grid, self.inverse_raw(&c))
    }
}

fn transpose(buf: &mut [Complex64], n: usize) {
    for i in 0..n {
        for j in (i + 1)..n {
            buf.swap(i * n + j, j * n + i);
        }
    }
}

/// `sqrt(h^2 sum_{chi = 0} |s|^2)`.
pub fn masked_l2<F: GridField + ?Sized>(s: &F, mask: &ObstacleMask) -> f64 {
    let h2 = s.grid().cell_area();
    let chi = mask.chi();
    let mut sum = 0.0;
    for comp in s.component_values() {
        sum += comp
            .iter()
            .zip(chi)
            .filter(|(_, &c)| !c)
            .map(|(v, _)| v * v)
            .sum::<f64>();
    }
    (h2 * sum).sqrt()
}

/// `||grad s||` from periodic centered differences, summed over fluid nodes.
pub fn masked_h1_seminorm<F: GridField + ?Sized>(s: &F, mask: &ObstacleMask) -> f64 {
    let grid = s.grid();
    let n = grid.n();
    let chi = mask.chi();
    let mut sum = 0.0;
    for comp in s.component_values() {
        for iy in 0..n {
            let up = ((iy + 1) % n) * n;
            let down = ((iy + n - 1) % n) * n;
            let row = iy * n;
            for ix in 0..n {
                if chi[row + ix] {
                    continue;
                }
                let right = (ix + 1) % n;
                let left = (ix + n - 1) % n;
                let dx = comp[row + right] - comp[row + left];
                let dy = comp[up + ix] - comp[down + ix];
                sum += dx * dx + dy * dy;
            }
        }
    }
    // h^2 * sum (d/2h)^2
    (sum / 4.0).sqrt()
}

/// Box average `(4L^2)^{-1} h^2 sum s` with masked nodes counted as zero.
pub fn box_mean(s: &ScalarField, mask: &ObstacleMask) -> f64 {
    let sum: f64 = s
        .values
        .iter()
        .zip(mask.chi())
        .filter(|(_, &c)| !c)
        .map(|(v, _)| v)
        .sum();
    sum * s.grid.cell_area() / s.grid.box_area()
}

pub fn box_mean_vector(v: &VectorField, mask: &ObstacleMask) -> [f64; 2] {
    [box_mean(&v.u1, mask), box_mean(&v.u2, mask)]
}

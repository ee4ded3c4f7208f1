//! Dense reference operators assembled from explicit Fourier sums, kept
//! independent of the FFT code paths.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use ptlab_core::{GridSpec, ObstacleMask};
use std::f64::consts::PI;

/// Signed wavenumbers for one axis; index `-N/2` for the Nyquist entry.
fn wavenumbers(g: &GridSpec) -> Vec<(f64, bool)> {
    let n = g.n() as i64;
    (0..n)
        .map(|j| {
            let s = if j < n / 2 { j } else { j - n };
            (s as f64 * PI / g.half_width(), s == -n / 2)
        })
        .collect()
}

/// 1D kernel `(1/N) sum_k m(k) cos(k d)` for node offsets `d = j h`.
fn kernel_1d(g: &GridSpec, m: impl Fn(f64, bool) -> f64) -> Vec<f64> {
    let n = g.n();
    let h = g.spacing();
    let ks = wavenumbers(g);
    (0..n)
        .map(|j| ks.iter().map(|&(k, nyq)| m(k, nyq) * (k * j as f64 * h).cos()).sum::<f64>() / n as f64)
        .collect()
}

fn offset(a: usize, b: usize, n: usize) -> usize {
    (a + n - b) % n
}

/// `-Δ` as a dense matrix on row-major node values.
pub fn neg_laplacian(g: &GridSpec) -> DMatrix<f64> {
    let n = g.n();
    let k1 = kernel_1d(g, |k, _| k * k);
    let ident = kernel_1d(g, |_, _| 1.0);
    DMatrix::from_fn(n * n, n * n, |i, j| {
        let (iy, ix) = (i / n, i % n);
        let (jy, jx) = (j / n, j % n);
        let dx = offset(ix, jx, n);
        let dy = offset(iy, jy, n);
        k1[dx] * ident[dy] + ident[dx] * k1[dy]
    })
}

pub fn penalized(g: &GridSpec, mask: &ObstacleMask, eta: f64) -> DMatrix<f64> {
    let mut a = neg_laplacian(g);
    for i in mask.masked_indices() {
        a[(i, i)] += 1.0 / eta;
    }
    a
}

/// Leray projector on stacked `(u1, u2)`, using the derivative wavenumbers
/// (zero at Nyquist) in the symbol `k k^T / |k|^2`.
pub fn leray(g: &GridSpec) -> DMatrix<f64> {
    let n = g.n();
    let m = n * n;
    let ks = wavenumbers(g);
    let keff: Vec<f64> = ks.iter().map(|&(k, nyq)| if nyq { 0.0 } else { k }).collect();
    let h = g.spacing();
    // kernels of k_a k_b / |k|^2 as functions of the 2D offset
    let mut kern = vec![[0.0f64; 3]; m];
    for dy in 0..n {
        for dx in 0..n {
            let mut acc = [0.0; 3];
            for (iy, &ky) in keff.iter().enumerate() {
                for (ix, &kx) in keff.iter().enumerate() {
                    let kk = kx * kx + ky * ky;
                    if kk == 0.0 {
                        continue;
                    }
                    let c = (ks[ix].0 * dx as f64 * h + ks[iy].0 * dy as f64 * h).cos();
                    acc[0] += kx * kx / kk * c;
                    acc[1] += kx * ky / kk * c;
                    acc[2] += ky * ky / kk * c;
                }
            }
            kern[dy * n + dx] = acc.map(|v| v / m as f64);
        }
    }
    DMatrix::from_fn(2 * m, 2 * m, |i, j| {
        let (ci, ni) = (i / m, i % m);
        let (cj, nj) = (j / m, j % m);
        let d = offset(ni / n, nj / n, n) * n + offset(ni % n, nj % n, n);
        let part = match (ci, cj) {
            (0, 0) => kern[d][0],
            (1, 1) => kern[d][2],
            _ => kern[d][1],
        };
        let delta = if i == j { 1.0 } else { 0.0 };
        delta - part
    })
}

pub fn solve_dense(a: DMatrix<f64>, b: &[f64]) -> Vec<f64> {
    let rhs = DVector::from_column_slice(b);
    a.lu().solve(&rhs).expect("dense system is nonsingular").as_slice().to_vec()
}

/// Dense Stokes system `P A P + (I - P)` with right-hand side `P f`.
pub fn stokes_dense(g: &GridSpec, mask: &ObstacleMask, eta: f64, f: &[f64]) -> Vec<f64> {
    let m = g.len();
    let a = penalized(g, mask, eta);
    let p = leray(g);
    let mut block = DMatrix::zeros(2 * m, 2 * m);
    block.view_mut((0, 0), (m, m)).copy_from(&a);
    block.view_mut((m, m), (m, m)).copy_from(&a);
    let ident = DMatrix::<f64>::identity(2 * m, 2 * m);
    let sys = &p * block * &p + (&ident - &p);
    let pf = &p * DVector::from_column_slice(f);
    solve_dense(sys, pf.as_slice())
}

pub fn smallest_eigenvalue(a: DMatrix<f64>) -> f64 {
    a.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min)
}

pub fn rel_l2(a: &[f64], b: &[f64]) -> f64 {
    let num: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum();
    let den: f64 = b.iter().map(|y| y * y).sum();
    (num / den).sqrt()
}

//! Punctured Poisson problem by volume penalization, and the discrete
//! Poincaré constant of the punctured box.
//!
//! The Dirichlet condition on the disc is replaced by the Brinkman term
//! `eta^{-1} chi u`, giving the symmetric positive definite system
//! `(-Δ + eta^{-1} chi) u = f`. It is solved by conjugate gradients on node
//! values, preconditioned by the spectral multiplier `(|k|^2 + kappa)^{-1}`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{GridSpec, ObstacleMask};
use crate::krylov::{pcg, CgOutcome};
use crate::spectral::{box_mean, masked_h1_seminorm, masked_l2, ScalarField, SpectralOps};

/// Inverse power iteration stops once the relative eigenvalue change drops
/// below this.
pub const EIGEN_CHANGE_TOL: f64 = 1e-8;
pub const EIGEN_MAX_ITER: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverSettings {
    /// Penalization strength.
    pub eta: f64,
    /// Relative residual tolerance.
    pub cg_tol: f64,
    pub cg_max_iter: usize,
    /// Shift in the spectral preconditioner `(-Δ + kappa)^{-1}`.
    pub precond_shift: f64,
}

impl Default for SolverSettings {
    fn default() -> Self {
        Self {
            eta: 1e-6,
            cg_tol: 1e-10,
            cg_max_iter: 20_000,
            precond_shift: 1.0,
        }
    }
}

impl SolverSettings {
    pub fn validate(&self) -> Result<()> {
        if !(self.eta > 0.0) {
            return Err(LabError::InvalidSettings(format!("eta must be positive, got {}", self.eta)));
        }
        if !(self.cg_tol > 0.0 && self.cg_tol < 1.0) {
            return Err(LabError::InvalidSettings(format!(
                "cg_tol must lie in (0, 1), got {}",
                self.cg_tol
            )));
        }
        if self.cg_max_iter == 0 {
            return Err(LabError::InvalidSettings("cg_max_iter must be at least 1".into()));
        }
        if !(self.precond_shift > 0.0) {
            return Err(LabError::InvalidSettings(format!(
                "precond_shift must be positive, got {}",
                self.precond_shift
            )));
        }
        Ok(())
    }

    pub fn with_eta(self, eta: f64) -> Self {
        Self { eta, ..self }
    }
}

/// `(-Δ + eta^{-1} chi)` acting on node values.
///
/// The penalty is applied pointwise in physical space: disc values are tiny
/// and must not pass through a transform before being multiplied by
/// `eta^{-1}`.
pub(crate) struct PenalizedOperator<'a> {
    pub ops: &'a SpectralOps,
    pub mask: &'a ObstacleMask,
    pub inv_eta: f64,
    pub shift: f64,
}

impl<'a> PenalizedOperator<'a> {
    pub fn new(ops: &'a SpectralOps, mask: &'a ObstacleMask, settings: &SolverSettings) -> Self {
        Self {
            ops,
            mask,
            inv_eta: 1.0 / settings.eta,
            shift: settings.precond_shift,
        }
    }

    /// `|k|^2 x_hat`, unnormalized coefficients.
    pub fn neg_laplacian_coeffs(&self, x: &[f64]) -> Vec<Complex64> {
        let mut c = self.ops.forward_raw(x);
        for (z, k2) in c.iter_mut().zip(self.ops.laplacian_symbol()) {
            *z *= *k2;
        }
        c
    }

    pub fn add_penalty(&self, x: &[f64], y: &mut [f64]) {
        for i in self.mask.masked_indices() {
            y[i] += self.inv_eta * x[i];
        }
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.ops.inverse_raw(&self.neg_laplacian_coeffs(x));
        self.add_penalty(x, &mut y);
        y
    }

    pub fn precondition_coeffs(&self, c: &mut [Complex64]) {
        for (z, k2) in c.iter_mut().zip(self.ops.laplacian_symbol()) {
            *z /= k2 + self.shift;
        }
    }

    pub fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let mut c = self.ops.forward_raw(r);
        self.precondition_coeffs(&mut c);
        self.ops.inverse_raw(&c)
    }

    pub fn solve(&self, b: &[f64], settings: &SolverSettings) -> Result<CgOutcome> {
        pcg(
            b,
            |x| self.apply(x),
            |r| self.precondition(r),
            settings.cg_tol,
            settings.cg_max_iter,
        )
    }
}

#[derive(Debug, Clone)]
pub struct PoissonSolution {
    pub u: ScalarField,
    /// Box average with `u` extended by zero into the disc.
    pub mean: f64,
    pub grad_norm: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Solves the penalized punctured Poisson problem. An empty mask falls back
/// to the zero-mean periodic solve.
pub fn solve_poisson_obstacle(
    f: &ScalarField,
    grid: &GridSpec,
    mask: &ObstacleMask,
    settings: &SolverSettings,
) -> Result<PoissonSolution> {
    settings.validate()?;
    check_shapes(f.grid(), grid, mask)?;
    let ops = SpectralOps::new(grid);
    solve_with_ops(f, &ops, mask, settings)
}

pub(crate) fn solve_with_ops(
    f: &ScalarField,
    ops: &SpectralOps,
    mask: &ObstacleMask,
    settings: &SolverSettings,
) -> Result<PoissonSolution> {
    let (u, residual, iterations) = if mask.is_empty() {
        let u = ops.inv_laplacian_zero_mean(f, settings.cg_tol)?;
        let res = ops.laplacian(&u).scaled(-1.0).sub(f);
        let empty = ObstacleMask::empty(ops.grid());
        let fnorm = masked_l2(f, &empty);
        let rel = if fnorm > 0.0 { masked_l2(&res, &empty) / fnorm } else { 0.0 };
        (u, rel, 0)
    } else {
        let op = PenalizedOperator::new(ops, mask, settings);
        let out = op.solve(f.values(), settings)?;
        (
            ScalarField::from_vec(*ops.grid(), out.solution),
            out.residual,
            out.iterations,
        )
    };
    Ok(PoissonSolution {
        mean: box_mean(&u, mask),
        grad_norm: masked_h1_seminorm(&u, mask),
        u,
        residual,
        iterations,
    })
}

pub(crate) fn check_shapes(field_grid: &GridSpec, grid: &GridSpec, mask: &ObstacleMask) -> Result<()> {
    if field_grid != grid || mask.len() != grid.len() {
        return Err(LabError::InvalidGrid("field, mask and grid do not match".into()));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PoincareEstimate {
    /// Smallest eigenvalue of `-Δ + eta^{-1} chi`.
    pub lambda_min: f64,
    /// `lambda_min^{-1/2}`.
    pub c_p: f64,
    pub iterations: usize,
    /// Total inner conjugate-gradient iterations.
    pub inner_iterations: usize,
}

/// Smallest eigenvalue of the penalized operator by inverse power iteration.
pub fn poincare_constant(
    grid: &GridSpec,
    mask: &ObstacleMask,
    settings: &SolverSettings,
) -> Result<PoincareEstimate> {
    settings.validate()?;
    if mask.len() != grid.len() {
        return Err(LabError::InvalidGrid("mask and grid do not match".into()));
    }
    if mask.is_empty() {
        return Err(LabError::NonCoerciveDomain);
    }
    let ops = SpectralOps::new(grid);
    poincare_with_ops(&ops, mask, settings)
}

pub(crate) fn poincare_with_ops(
    ops: &SpectralOps,
    mask: &ObstacleMask,
    settings: &SolverSettings,
) -> Result<PoincareEstimate> {
    let op = PenalizedOperator::new(ops, mask, settings);
    // indicator of the fluid region
    let mut v: Vec<f64> = mask.chi().iter().map(|&c| if c { 0.0 } else { 1.0 }).collect();
    normalize(&mut v);
    let mut lambda = rayleigh(&op, &v);
    let mut inner = 0;
    for it in 1..=EIGEN_MAX_ITER {
        let out = op.solve(&v, settings)?;
        inner += out.iterations;
        v = out.solution;
        normalize(&mut v);
        let next = rayleigh(&op, &v);
        let change = ((next - lambda) / next).abs();
        lambda = next;
        if change < EIGEN_CHANGE_TOL {
            return Ok(PoincareEstimate {
                lambda_min: lambda,
                c_p: lambda.powf(-0.5),
                iterations: it,
                inner_iterations: inner,
            });
        }
    }
    Ok(PoincareEstimate {
        lambda_min: lambda,
        c_p: lambda.powf(-0.5),
        iterations: EIGEN_MAX_ITER,
        inner_iterations: inner,
    })
}

fn normalize(v: &mut [f64]) {
    let norm = v.iter().map(|z| z * z).sum::<f64>().sqrt();
    for z in v.iter_mut() {
        *z /= norm;
    }
}

fn rayleigh(op: &PenalizedOperator<'_>, v: &[f64]) -> f64 {
    let av = op.apply(v);
    let num: f64 = v.iter().zip(&av).map(|(a, b)| a * b).sum();
    let den: f64 = v.iter().map(|z| z * z).sum();
    num / den
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, build_obstacle_mask};
    use std::f64::consts::PI;

    #[test]
    fn settings_validation() {
        assert!(SolverSettings::default().validate().is_ok());
        let bad = [
            SolverSettings { eta: 0.0, ..Default::default() },
            SolverSettings { cg_tol: 1.0, ..Default::default() },
            SolverSettings { cg_max_iter: 0, ..Default::default() },
            SolverSettings { precond_shift: -1.0, ..Default::default() },
        ];
        for s in bad {
            assert!(matches!(s.validate(), Err(LabError::InvalidSettings(_))));
        }
    }

    #[test]
    fn empty_mask_uses_periodic_gauge() {
        let g = build_grid(PI, 32).unwrap();
        let mask = ObstacleMask::empty(&g);
        let f = ScalarField::from_fn(g, |x, _| x.cos());
        let sol = solve_poisson_obstacle(&f, &g, &mask, &SolverSettings::default()).unwrap();
        let diff = sol.u.sub(&f);
        assert!(diff.max_abs() < 1e-13);
        assert!(sol.mean.abs() < 1e-14);
        assert_eq!(sol.iterations, 0);

        let ones = ScalarField::constant(g, 1.0);
        assert!(matches!(
            solve_poisson_obstacle(&ones, &g, &mask, &SolverSettings::default()),
            Err(LabError::NonZeroMean { .. })
        ));
    }

    #[test]
    fn penalized_solve_converges_and_vanishes_in_disc() {
        let g = build_grid(PI, 64).unwrap();
        let mask = build_obstacle_mask(&g, 0.4).unwrap();
        let settings = SolverSettings::default();
        let f = ScalarField::from_fn(g, |x, y| x.cos() * y.cos());
        let sol = solve_poisson_obstacle(&f, &g, &mask, &settings).unwrap();
        assert!(sol.residual <= settings.cg_tol);
        let inside: f64 = mask
            .masked_indices()
            .map(|i| sol.u.values()[i].powi(2))
            .sum::<f64>()
            .sqrt()
            * g.spacing();
        let empty = ObstacleMask::empty(&g);
        assert!(inside <= settings.eta.sqrt() * (masked_l2(&f, &empty) + 1.0));
    }

    #[test]
    fn constant_forcing_is_solvable_with_obstacle() {
        let g = build_grid(PI, 64).unwrap();
        let settings = SolverSettings::default();
        let f = ScalarField::constant(g, 1.0);
        let mut prev = 0.0;
        for r in [0.4, 0.2, 0.1] {
            let mask = build_obstacle_mask(&g, r).unwrap();
            let sol = solve_poisson_obstacle(&f, &g, &mask, &settings).unwrap();
            assert!(sol.grad_norm > prev);
            prev = sol.grad_norm;
        }
    }

    #[test]
    fn stall_is_reported() {
        let g = build_grid(PI, 32).unwrap();
        let mask = build_obstacle_mask(&g, 0.4).unwrap();
        let settings = SolverSettings { cg_max_iter: 2, ..Default::default() };
        let f = ScalarField::from_fn(g, |x, y| x.cos() * y.cos());
        assert!(matches!(
            solve_poisson_obstacle(&f, &g, &mask, &settings),
            Err(LabError::KrylovStall { .. })
        ));
    }

    #[test]
    fn rotation_invariant_forcing_gives_rotation_invariant_solution() {
        let n = 64;
        let g = build_grid(PI, n).unwrap();
        let mask = build_obstacle_mask(&g, 0.3).unwrap();
        let f = ScalarField::from_fn(g, |x, y| x.cos() + y.cos() + (x * y).sin().powi(2));
        let sol = solve_poisson_obstacle(&f, &g, &mask, &SolverSettings::default()).unwrap();
        let c = n / 2;
        let u = sol.u.values();
        let scale = sol.u.max_abs();
        for iy in 0..n {
            for ix in 0..n {
                let dx = ix as isize - c as isize;
                let dy = iy as isize - c as isize;
                let rx = (c as isize - dy).rem_euclid(n as isize) as usize;
                let ry = (c as isize + dx).rem_euclid(n as isize) as usize;
                assert!((u[iy * n + ix] - u[ry * n + rx]).abs() < 1e-8 * scale);
            }
        }
    }

    #[test]
    fn poincare_requires_obstacle() {
        let g = build_grid(PI, 32).unwrap();
        assert!(matches!(
            poincare_constant(&g, &ObstacleMask::empty(&g), &SolverSettings::default()),
            Err(LabError::NonCoerciveDomain)
        ));
    }

    #[test]
    fn poincare_lambda_is_rayleigh_minimum() {
        let g = build_grid(PI, 32).unwrap();
        let mask = build_obstacle_mask(&g, 0.5).unwrap();
        let est = poincare_constant(&g, &mask, &SolverSettings::default()).unwrap();
        assert!(est.lambda_min > 0.0 && est.lambda_min < 1.0);
        assert!((est.c_p - est.lambda_min.powf(-0.5)).abs() < 1e-12);
        // any test vector has a larger Rayleigh quotient
        let ops = SpectralOps::new(&g);
        let op = PenalizedOperator::new(&ops, &mask, &SolverSettings::default());
        let trial: Vec<f64> = g.sample(|x, y| (x * x + y * y).sqrt().min(1.0));
        assert!(rayleigh(&op, &trial) >= est.lambda_min);
    }
}

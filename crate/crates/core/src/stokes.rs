//! Punctured stationary Stokes problem.
//!
//! The velocity is sought in the discretely divergence-free subspace: the
//! system `P (-Δ + eta^{-1} chi) P u = P f` is solved by conjugate gradients
//! with every Krylov vector Leray-projected. Pressure is recovered afterwards
//! from the gradient part of the momentum balance.

use num_complex::Complex64;

use crate::error::{LabError, Result};
use crate::grid::{GridSpec, ObstacleMask};
use crate::krylov::pcg;
use crate::poisson::{check_shapes, PenalizedOperator, SolverSettings};
use crate::spectral::{
    box_mean, box_mean_vector, masked_h1_seminorm, masked_l2, ScalarField, SpectralOps,
    VectorField,
};

#[derive(Debug, Clone)]
pub struct StokesSolution {
    pub u: VectorField,
    /// Zero-mean pressure.
    pub p: ScalarField,
    pub mean: [f64; 2],
    pub grad_norm: f64,
    pub residual: f64,
    pub iterations: usize,
    /// `||div u|| / ||u||` over the whole box.
    pub divergence_residual: f64,
}

/// Acts on the two velocity components stacked into one vector of node values.
struct ProjectedOperator<'a> {
    inner: PenalizedOperator<'a>,
}

impl ProjectedOperator<'_> {
    fn project_to_nodes(&self, mut c1: Vec<Complex64>, mut c2: Vec<Complex64>) -> Vec<f64> {
        let ops = self.inner.ops;
        ops.project_coeffs(&mut c1, &mut c2);
        let mut y = ops.inverse_raw(&c1);
        y.extend(ops.inverse_raw(&c2));
        y
    }

    fn apply(&self, x: &[f64]) -> Vec<f64> {
        let ops = self.inner.ops;
        let (x1, x2) = x.split_at(x.len() / 2);
        let comp = |xc: &[f64]| {
            let mut pen = vec![0.0; xc.len()];
            self.inner.add_penalty(xc, &mut pen);
            let mut c = ops.forward_raw(&pen);
            for ((z, k2), v) in c.iter_mut().zip(ops.laplacian_symbol()).zip(ops.forward_raw(xc)) {
                *z += v * *k2;
            }
            c
        };
        self.project_to_nodes(comp(x1), comp(x2))
    }

    fn precondition(&self, r: &[f64]) -> Vec<f64> {
        let ops = self.inner.ops;
        let (r1, r2) = r.split_at(r.len() / 2);
        let mut c1 = ops.forward_raw(r1);
        let mut c2 = ops.forward_raw(r2);
        self.inner.precondition_coeffs(&mut c1);
        self.inner.precondition_coeffs(&mut c2);
        self.project_to_nodes(c1, c2)
    }
}

pub fn solve_stokes_obstacle(
    f: &VectorField,
    grid: &GridSpec,
    mask: &ObstacleMask,
    settings: &SolverSettings,
) -> Result<StokesSolution> {
    settings.validate()?;
    check_shapes(f.grid(), grid, mask)?;
    let ops = SpectralOps::new(grid);
    solve_with_ops(f, &ops, mask, settings)
}

pub(crate) fn solve_with_ops(
    f: &VectorField,
    ops: &SpectralOps,
    mask: &ObstacleMask,
    settings: &SolverSettings,
) -> Result<StokesSolution> {
    let grid = *ops.grid();
    let empty = ObstacleMask::empty(&grid);
    let mut b1 = ops.forward_raw(f.u1.values());
    let mut b2 = ops.forward_raw(f.u2.values());
    ops.project_coeffs(&mut b1, &mut b2);

    let (v1, v2, residual, iterations) = if mask.is_empty() {
        let fnorm = masked_l2(f, &empty);
        for comp in f.components() {
            let mean = box_mean(comp, &empty);
            if mean.abs() > settings.cg_tol * (fnorm + 1.0) {
                return Err(LabError::NonZeroMean { mean });
            }
        }
        ops.solve_neg_laplacian_coeffs(&mut b1);
        ops.solve_neg_laplacian_coeffs(&mut b2);
        (ops.inverse_raw(&b1), ops.inverse_raw(&b2), 0.0, 0)
    } else {
        let op = ProjectedOperator {
            inner: PenalizedOperator::new(ops, mask, settings),
        };
        let mut b = ops.inverse_raw(&b1);
        b.extend(ops.inverse_raw(&b2));
        let out = pcg(
            &b,
            |x| op.apply(x),
            |r| op.precondition(r),
            settings.cg_tol,
            settings.cg_max_iter,
        )?;
        let mut sol = out.solution;
        let v2 = sol.split_off(sol.len() / 2);
        (sol, v2, out.residual, out.iterations)
    };

    let u = VectorField {
        u1: ScalarField::from_vec(grid, v1),
        u2: ScalarField::from_vec(grid, v2),
    };
    let p = pressure_with_ops(&u, f, ops, mask, settings);
    let divergence_residual = divergence_residual(ops, &u);
    Ok(StokesSolution {
        mean: box_mean_vector(&u, mask),
        grad_norm: masked_h1_seminorm(&u, mask),
        u,
        p,
        residual,
        iterations,
        divergence_residual,
    })
}

/// `||div u|| / ||u||` on the whole box, zero for the zero field.
pub fn divergence_residual(ops: &SpectralOps, u: &VectorField) -> f64 {
    let empty = ObstacleMask::empty(ops.grid());
    let norm = masked_l2(u, &empty);
    if norm == 0.0 {
        return 0.0;
    }
    masked_l2(&ops.divergence(u), &empty) / norm
}

/// Zero-mean pressure balancing the gradient part of `f - eta^{-1} chi u`.
///
/// Solves `-Δp = div(eta^{-1} chi u - f)` with the Laplacian taken as
/// `div grad`, which makes `grad p` exactly the part of the force removed by
/// the Leray projector.
pub fn recover_pressure(
    u: &VectorField,
    f: &VectorField,
    mask: &ObstacleMask,
    settings: &SolverSettings,
) -> Result<ScalarField> {
    let grid = *u.grid();
    check_shapes(f.grid(), &grid, mask)?;
    let ops = SpectralOps::new(&grid);
    Ok(pressure_with_ops(u, f, &ops, mask, settings))
}

fn pressure_with_ops(
    u: &VectorField,
    f: &VectorField,
    ops: &SpectralOps,
    mask: &ObstacleMask,
    settings: &SolverSettings,
) -> ScalarField {
    let inv_eta = 1.0 / settings.eta;
    let force = |comp: &ScalarField, fc: &ScalarField| -> Vec<f64> {
        comp.values()
            .iter()
            .zip(fc.values())
            .zip(mask.chi())
            .map(|((&v, &fv), &c)| if c { fv - inv_eta * v } else { fv })
            .collect()
    };
    let g1 = ops.forward_raw(&force(&u.u1, &f.u1));
    let g2 = ops.forward_raw(&force(&u.u2, &f.u2));
    let p = ops.gradient_potential_coeffs(&g1, &g2);
    ScalarField::from_vec(*ops.grid(), ops.inverse_raw(&p))
}

/// `-Δu + grad p + eta^{-1} chi u - f`, evaluated spectrally.
pub fn momentum_residual(
    u: &VectorField,
    p: &ScalarField,
    f: &VectorField,
    mask: &ObstacleMask,
    settings: &SolverSettings,
) -> VectorField {
    let grid = *u.grid();
    let ops = SpectralOps::new(&grid);
    let grad_p = ops.gradient(p);
    let inv_eta = 1.0 / settings.eta;
    let comp = |uc: &ScalarField, gp: &ScalarField, fc: &ScalarField| {
        let mut r = ops.laplacian(uc).scaled(-1.0);
        for (i, v) in r.values_mut().iter_mut().enumerate() {
            let pen = if mask.is_masked(i) { inv_eta * uc.values()[i] } else { 0.0 };
            *v += gp.values()[i] + pen - fc.values()[i];
        }
        r
    };
    VectorField {
        u1: comp(&u.u1, &grad_p.u1, &f.u1),
        u2: comp(&u.u2, &grad_p.u2, &f.u2),
    }
}

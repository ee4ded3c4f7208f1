//! Preconditioned conjugate gradients on real vectors.

use crate::error::{LabError, Result};

/// Iterations between explicit residual recomputations.
const RESIDUAL_REFRESH: usize = 50;

#[derive(Debug, Clone)]
pub struct CgOutcome {
    pub solution: Vec<f64>,
    /// Relative residual `||b - A x|| / ||b||`, recomputed explicitly at exit.
    pub residual: f64,
    pub iterations: usize,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Solves `A x = b` for symmetric positive definite `A` (on the subspace the
/// operators preserve), starting from zero.
///
/// The Euclidean inner product is used throughout; grid vectors with a
/// uniform cell weight give the same relative residual as the discrete L2
/// product.
pub fn pcg(
    b: &[f64],
    apply_a: impl Fn(&[f64]) -> Vec<f64>,
    apply_m: impl Fn(&[f64]) -> Vec<f64>,
    tol: f64,
    max_iter: usize,
) -> Result<CgOutcome> {
    let b_norm = dot(b, b).sqrt();
    let mut x = vec![0.0; b.len()];
    if b_norm == 0.0 {
        return Ok(CgOutcome {
            solution: x,
            residual: 0.0,
            iterations: 0,
        });
    }
    let mut r = b.to_vec();
    let mut z = apply_m(&r);
    let mut p = z.clone();
    let mut rz = dot(&r, &z);
    let mut rel = 1.0;
    for it in 1..=max_iter {
        let q = apply_a(&p);
        let pq = dot(&p, &q);
        if !(pq > 0.0) {
            break;
        }
        let alpha = rz / pq;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &q);
        if it % RESIDUAL_REFRESH == 0 {
            r = true_residual(b, &x, &apply_a);
        }
        rel = dot(&r, &r).sqrt() / b_norm;
        if rel <= tol {
            r = true_residual(b, &x, &apply_a);
            rel = dot(&r, &r).sqrt() / b_norm;
            if rel <= tol {
                return Ok(CgOutcome {
                    solution: x,
                    residual: rel,
                    iterations: it,
                });
            }
            // recurrence drifted; restart the search direction
            z = apply_m(&r);
            p = z.clone();
            rz = dot(&r, &z);
            continue;
        }
        z = apply_m(&r);
        let rz_new = dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + *pi * beta;
        }
    }
    Err(LabError::KrylovStall {
        iterations: max_iter,
        residual: rel,
    })
}

fn true_residual(
    b: &[f64],
    x: &[f64],
    apply_a: &impl Fn(&[f64]) -> Vec<f64>,
) -> Vec<f64> {
    let ax = apply_a(x);
    b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect()
}

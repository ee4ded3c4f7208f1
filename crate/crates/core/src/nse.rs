//! Time-dependent Navier–Stokes on the punctured box, unit viscosity.
//!
//! One step of the split scheme:
//! 1. Heun update of the projected, dealiased advection `-P[(u·∇)u]`;
//! 2. exact diffusion `e^{-|k|^2 dt}`, with the projected forcing integrated
//!    exactly against the same factor (taken at the step midpoint);
//! 3. implicit penalization `u <- u / (1 + dt/eta)` on disc nodes;
//! 4. Leray projection.
//!
//! The discrete energy, dissipation and forcing integrals are accumulated
//! alongside so the energy inequality can be audited afterwards.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::{GridSpec, ObstacleMask};
use crate::poisson::{check_shapes, SolverSettings};
use crate::spectral::{masked_h1_seminorm, masked_l2, ScalarField, SpectralOps, VectorField};
use crate::stokes::divergence_residual;

pub const DEFAULT_CFL_CAP: f64 = 0.5;

/// Relative tolerance below which the last step is considered to land on `T`.
const TIME_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeSettings {
    pub dt: f64,
    /// Final time.
    #[serde(rename = "T")]
    pub t_final: f64,
    /// Largest allowed `dt max|u| / h`.
    pub cfl_cap: f64,
}

impl TimeSettings {
    pub fn new(dt: f64, t_final: f64) -> Result<Self> {
        let ts = Self {
            dt,
            t_final,
            cfl_cap: DEFAULT_CFL_CAP,
        };
        ts.validate()?;
        Ok(ts)
    }

    /// `T = 0` is allowed and means no steps; otherwise `0 < dt <= T`.
    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(LabError::InvalidSettings(format!("dt must be positive, got {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(LabError::InvalidSettings(format!(
                "T must be nonnegative, got {}",
                self.t_final
            )));
        }
        if self.t_final > 0.0 && self.dt > self.t_final {
            return Err(LabError::InvalidSettings(format!(
                "dt = {} exceeds T = {}",
                self.dt, self.t_final
            )));
        }
        if !(self.cfl_cap > 0.0) {
            return Err(LabError::InvalidSettings(format!(
                "cfl_cap must be positive, got {}",
                self.cfl_cap
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct NseState {
    pub t: f64,
    pub u: VectorField,
    /// `||u||^2` over the whole box.
    pub energy: f64,
    /// Trapezoidal `∫ ||∇u||^2 dt` over the fluid region.
    pub dissipation_accum: f64,
    /// Midpoint `∫ ||f||^2 dt`.
    pub forcing_accum: f64,
}

impl NseState {
    pub fn initial(u: VectorField) -> Self {
        let empty = ObstacleMask::empty(u.grid());
        let e = masked_l2(&u, &empty);
        Self {
            t: 0.0,
            u,
            energy: e * e,
            dissipation_accum: 0.0,
            forcing_accum: 0.0,
        }
    }
}

/// Body force as a function of time.
pub enum Forcing {
    Zero,
    Steady(VectorField),
    Unsteady(Box<dyn Fn(f64) -> VectorField + Send + Sync>),
}

impl Forcing {
    pub fn at(&self, t: f64) -> Option<VectorField> {
        match self {
            Forcing::Zero => None,
            Forcing::Steady(f) => Some(f.clone()),
            Forcing::Unsteady(f) => Some(f(t)),
        }
    }
}

impl std::fmt::Debug for Forcing {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Forcing::Zero => f.write_str("Zero"),
            Forcing::Steady(_) => f.write_str("Steady(..)"),
            Forcing::Unsteady(_) => f.write_str("Unsteady(..)"),
        }
    }
}

/// Stepper bound to one grid and mask; owns its transform plans.
pub struct NseSolver<'a> {
    ops: SpectralOps,
    mask: &'a ObstacleMask,
    eta: f64,
    ts: TimeSettings,
}

type Coeffs = Vec<Complex64>;

impl<'a> NseSolver<'a> {
    pub fn new(grid: &GridSpec, mask: &'a ObstacleMask, settings: &SolverSettings, ts: &TimeSettings) -> Result<Self> {
        settings.validate()?;
        ts.validate()?;
        if mask.len() != grid.len() {
            return Err(LabError::InvalidGrid("mask and grid do not match".into()));
        }
        Ok(Self {
            ops: SpectralOps::new(grid),
            mask,
            eta: settings.eta,
            ts: *ts,
        })
    }

    pub fn ops(&self) -> &SpectralOps {
        &self.ops
    }

    /// Projection, zeroing on the disc, projection.
    pub fn admissible_initial(&self, u0: &VectorField) -> VectorField {
        let mut u = self.ops.leray_project(u0);
        for comp in [&mut u.u1, &mut u.u2] {
            let v = comp.values_mut();
            for i in self.mask.masked_indices() {
                v[i] = 0.0;
            }
        }
        self.ops.leray_project(&u)
    }

    /// `P dealias[(u_d·∇) u_d]` from the coefficients of `u`.
    fn advection(&self, c1: &[Complex64], c2: &[Complex64]) -> (Coeffs, Coeffs) {
        let ops = &self.ops;
        let mut d1 = c1.to_vec();
        let mut d2 = c2.to_vec();
        ops.dealias_coeffs(&mut d1);
        ops.dealias_coeffs(&mut d2);
        let u1 = ops.inverse_raw(&d1);
        let u2 = ops.inverse_raw(&d2);
        let conv = |d: &[Complex64]| -> Coeffs {
            let dx = ops.inverse_raw(&ops.differentiate_coeffs(d, 0));
            let dy = ops.inverse_raw(&ops.differentiate_coeffs(d, 1));
            let prod: Vec<f64> = (0..dx.len()).map(|i| u1[i] * dx[i] + u2[i] * dy[i]).collect();
            let mut c = ops.forward_raw(&prod);
            ops.dealias_coeffs(&mut c);
            c
        };
        let mut n1 = conv(&d1);
        let mut n2 = conv(&d2);
        ops.project_coeffs(&mut n1, &mut n2);
        (n1, n2)
    }

    /// Advances by `dt` (which may be shorter than the configured step for the
    /// last step). `f_mid` is the forcing at `t + dt/2`.
    pub fn step_by(&self, state: &NseState, f_mid: Option<&VectorField>, dt: f64, index: usize) -> Result<NseState> {
        let ops = &self.ops;
        let grid = *ops.grid();
        let cfl = dt * state.u.max_speed() / grid.spacing();
        if !(cfl <= self.ts.cfl_cap) {
            return Err(LabError::CflViolation {
                step: index,
                cfl,
                cap: self.ts.cfl_cap,
            });
        }

        let c1 = ops.forward_raw(state.u.u1.values());
        let c2 = ops.forward_raw(state.u.u2.values());
        let (a1, a2) = self.advection(&c1, &c2);
        let s1: Coeffs = c1.iter().zip(&a1).map(|(c, a)| c - a * dt).collect();
        let s2: Coeffs = c2.iter().zip(&a2).map(|(c, a)| c - a * dt).collect();
        let (b1, b2) = self.advection(&s1, &s2);
        let mut h1: Coeffs = (0..c1.len()).map(|i| c1[i] - (a1[i] + b1[i]) * (0.5 * dt)).collect();
        let mut h2: Coeffs = (0..c2.len()).map(|i| c2[i] - (a2[i] + b2[i]) * (0.5 * dt)).collect();

        let forcing = f_mid.map(|f| {
            let mut g1 = ops.forward_raw(f.u1.values());
            let mut g2 = ops.forward_raw(f.u2.values());
            ops.project_coeffs(&mut g1, &mut g2);
            (g1, g2)
        });
        for (i, &k2) in ops.laplacian_symbol().iter().enumerate() {
            let decay = (-k2 * dt).exp();
            h1[i] *= decay;
            h2[i] *= decay;
            if let Some((g1, g2)) = &forcing {
                let phi = if k2 == 0.0 { dt } else { -(-k2 * dt).exp_m1() / k2 };
                h1[i] += g1[i] * phi;
                h2[i] += g2[i] * phi;
            }
        }

        let damp = 1.0 / (1.0 + dt / self.eta);
        let mut v1 = ops.inverse_raw(&h1);
        let mut v2 = ops.inverse_raw(&h2);
        for i in self.mask.masked_indices() {
            v1[i] *= damp;
            v2[i] *= damp;
        }
        let mut p1 = ops.forward_raw(&v1);
        let mut p2 = ops.forward_raw(&v2);
        ops.project_coeffs(&mut p1, &mut p2);
        let u = VectorField {
            u1: ScalarField::from_vec(grid, ops.inverse_raw(&p1)),
            u2: ScalarField::from_vec(grid, ops.inverse_raw(&p2)),
        };

        let empty = ObstacleMask::empty(&grid);
        let e = masked_l2(&u, &empty);
        let g_old = masked_h1_seminorm(&state.u, self.mask);
        let g_new = masked_h1_seminorm(&u, self.mask);
        let f_sq = f_mid.map_or(0.0, |f| masked_l2(f, &empty).powi(2));
        Ok(NseState {
            t: state.t + dt,
            u,
            energy: e * e,
            dissipation_accum: state.dissipation_accum + 0.5 * dt * (g_old * g_old + g_new * g_new),
            forcing_accum: state.forcing_accum + dt * f_sq,
        })
    }

    pub fn step(&self, state: &NseState, f_mid: Option<&VectorField>, index: usize) -> Result<NseState> {
        self.step_by(state, f_mid, self.ts.dt, index)
    }
}

/// One step with the configured `dt`; `f_mid` is the forcing at the step
/// midpoint.
pub fn nse_step(
    state: &NseState,
    f_mid: &VectorField,
    mask: &ObstacleMask,
    settings: &SolverSettings,
    ts: &TimeSettings,
) -> Result<NseState> {
    check_shapes(state.u.grid(), f_mid.grid(), mask)?;
    let solver = NseSolver::new(state.u.grid(), mask, settings, ts)?;
    solver.step(state, Some(f_mid), 0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerPoint {
    pub t: f64,
    pub energy: f64,
    pub dissipation: f64,
    pub forcing: f64,
}

#[derive(Debug, Clone)]
pub struct FieldSample {
    pub t: f64,
    pub u: VectorField,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    /// Ledger quantities after every accepted step, starting at `t = 0`.
    pub ledger: Vec<LedgerPoint>,
    /// Velocity snapshots: `t = 0`, every `sample_every` steps, and `T`.
    pub samples: Vec<FieldSample>,
    pub final_state: NseState,
    pub steps: usize,
    /// Largest `||div u|| / ||u||` over accepted steps.
    pub max_divergence: f64,
}

impl Trajectory {
    pub fn initial_energy(&self) -> f64 {
        self.ledger[0].energy
    }
}

fn ledger_point(s: &NseState) -> LedgerPoint {
    LedgerPoint {
        t: s.t,
        energy: s.energy,
        dissipation: s.dissipation_accum,
        forcing: s.forcing_accum,
    }
}

/// Integrates from the admissible projection of `u0` to `T` with fixed `dt`,
/// shortening the last step to land on `T`. `sample_every = 0` keeps only the
/// initial and final fields.
pub fn nse_integrate(
    u0: &VectorField,
    forcing: &Forcing,
    mask: &ObstacleMask,
    settings: &SolverSettings,
    ts: &TimeSettings,
    sample_every: usize,
) -> Result<Trajectory> {
    let grid = *u0.grid();
    if mask.len() != grid.len() {
        return Err(LabError::InvalidGrid("mask and grid do not match".into()));
    }
    let solver = NseSolver::new(&grid, mask, settings, ts)?;
    let mut state = NseState::initial(solver.admissible_initial(u0));
    let mut max_divergence = divergence_residual(solver.ops(), &state.u);
    let mut ledger = vec![ledger_point(&state)];
    let mut samples = vec![FieldSample {
        t: 0.0,
        u: state.u.clone(),
    }];
    let t_final = ts.t_final;
    let mut steps = 0;
    while t_final - state.t > TIME_EPS * t_final.max(1.0) {
        let dt = ts.dt.min(t_final - state.t);
        let f_mid = forcing.at(state.t + 0.5 * dt);
        if let Some(f) = &f_mid {
            check_shapes(f.grid(), &grid, mask)?;
        }
        state = solver.step_by(&state, f_mid.as_ref(), dt, steps)?;
        steps += 1;
        max_divergence = max_divergence.max(divergence_residual(solver.ops(), &state.u));
        ledger.push(ledger_point(&state));
        let last = t_final - state.t <= TIME_EPS * t_final.max(1.0);
        if last {
            state.t = t_final;
        }
        if last || (sample_every > 0 && steps % sample_every == 0) {
            samples.push(FieldSample {
                t: state.t,
                u: state.u.clone(),
            });
        }
    }
    Ok(Trajectory {
        ledger,
        samples,
        final_state: state,
        steps,
        max_divergence,
    })
}

/// Gronwall constant of the energy inequality.
pub fn gronwall_constant(t: f64) -> f64 {
    (1.0 + t) * t.exp()
}

#[derive(Debug, Clone, PartialEq)]
pub struct LedgerReport {
    pub passed: bool,
    /// Smallest `rhs - lhs` over all points.
    pub worst_margin: f64,
    pub worst_t: f64,
    /// Index of the first failing point.
    pub first_failure: Option<usize>,
}

/// Checks `energy + dissipation <= C(T)(|u0|^2 + forcing) + slack` at every
/// ledger point, with `C(T) = (1+T)e^T` and `slack = 1e-8 (1 + |u0|^2)`.
pub fn energy_ledger_check(traj: &Trajectory, u0_norm_sq: f64, t_final: f64) -> LedgerReport {
    check_ledger_points(&traj.ledger, u0_norm_sq, t_final)
}

pub fn check_ledger_points(points: &[LedgerPoint], u0_norm_sq: f64, t_final: f64) -> LedgerReport {
    let c = gronwall_constant(t_final);
    let slack = 1e-8 * (1.0 + u0_norm_sq);
    let mut report = LedgerReport {
        passed: true,
        worst_margin: f64::INFINITY,
        worst_t: 0.0,
        first_failure: None,
    };
    for (i, p) in points.iter().enumerate() {
        let margin = c * (u0_norm_sq + p.forcing) + slack - (p.energy + p.dissipation);
        if margin < report.worst_margin {
            report.worst_margin = margin;
            report.worst_t = p.t;
        }
        if !(margin >= 0.0) && report.first_failure.is_none() {
            report.passed = false;
            report.first_failure = Some(i);
        }
    }
    if points.is_empty() {
        report.worst_margin = slack;
    }
    report
}

/// `(∫ ||a - b||^2 dt)^{1/2}` over matching sample times, trapezoidal in time.
pub fn space_time_distance(a: &Trajectory, b: &Trajectory) -> Result<f64> {
    if a.samples.len() != b.samples.len()
        || a.samples.iter().zip(&b.samples).any(|(x, y)| (x.t - y.t).abs() > TIME_EPS * x.t.max(1.0))
    {
        return Err(LabError::InvalidSettings("trajectories are sampled at different times".into()));
    }
    let empty = ObstacleMask::empty(a.samples[0].u.grid());
    let d: Vec<f64> = a
        .samples
        .iter()
        .zip(&b.samples)
        .map(|(x, y)| masked_l2(&x.u.sub(&y.u), &empty).powi(2))
        .collect();
    let mut sum = 0.0;
    for i in 1..d.len() {
        sum += 0.5 * (a.samples[i].t - a.samples[i - 1].t) * (d[i] + d[i - 1]);
    }
    Ok(sum.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, build_obstacle_mask};
    use std::f64::consts::PI;

    fn tg(g: GridSpec, a: f64) -> VectorField {
        VectorField::from_fn(g, move |x, y| a * x.sin() * y.cos(), move |x, y| -a * x.cos() * y.sin())
    }

    #[test]
    fn time_settings_validation() {
        assert!(TimeSettings::new(1e-3, 1.0).is_ok());
        assert!(TimeSettings::new(1e-3, 0.0).is_ok());
        assert!(TimeSettings::new(0.0, 1.0).is_err());
        assert!(TimeSettings::new(2.0, 1.0).is_err());
    }

    #[test]
    fn rest_state_stays_at_rest() {
        let g = build_grid(PI, 16).unwrap();
        let mask = build_obstacle_mask(&g, 0.5).unwrap();
        let ts = TimeSettings::new(0.01, 0.1).unwrap();
        let traj = nse_integrate(&VectorField::zeros(g), &Forcing::Zero, &mask, &SolverSettings::default(), &ts, 1)
            .unwrap();
        assert_eq!(traj.final_state.u.max_speed(), 0.0);
        assert_eq!(traj.steps, 10);
        let rep = energy_ledger_check(&traj, 0.0, 0.1);
        assert!(rep.passed);
        assert_eq!(rep.worst_margin, 1e-8);
    }

    #[test]
    fn zero_final_time_returns_projected_data() {
        let g = build_grid(PI, 16).unwrap();
        let ts = TimeSettings::new(0.01, 0.0).unwrap();
        let u0 = VectorField::from_fn(g, |x, _| x.sin(), |_, y| y.cos());
        let traj = nse_integrate(&u0, &Forcing::Zero, &ObstacleMask::empty(&g), &SolverSettings::default(), &ts, 1)
            .unwrap();
        assert_eq!(traj.steps, 0);
        assert_eq!(traj.samples.len(), 1);
        assert!(traj.final_state.u.u1.max_abs() < 1e-14);
    }

    #[test]
    fn taylor_green_decays_exactly() {
        let g = build_grid(PI, 32).unwrap();
        let ts = TimeSettings::new(1e-2, 0.5).unwrap();
        let empty = ObstacleMask::empty(&g);
        let traj = nse_integrate(&tg(g, 1.0), &Forcing::Zero, &empty, &SolverSettings::default(), &ts, 10).unwrap();
        let err = masked_l2(&traj.final_state.u.sub(&tg(g, (-1.0f64).exp())), &empty);
        assert!(err < 1e-10, "err {err}");
        assert!((traj.initial_energy() - 2.0 * PI * PI).abs() < 1e-10);
    }

    #[test]
    fn forced_taylor_green_is_steady() {
        let g = build_grid(PI, 32).unwrap();
        let ts = TimeSettings::new(1e-2, 0.3).unwrap();
        let empty = ObstacleMask::empty(&g);
        let u0 = tg(g, 1.0);
        let f = Forcing::Steady(u0.scaled(2.0));
        let traj = nse_integrate(&u0, &f, &empty, &SolverSettings::default(), &ts, 0).unwrap();
        assert!(masked_l2(&traj.final_state.u.sub(&u0), &empty) < 1e-10);
    }

    #[test]
    fn last_step_lands_on_final_time() {
        let g = build_grid(PI, 16).unwrap();
        let ts = TimeSettings::new(0.03, 0.1).unwrap();
        let traj = nse_integrate(&tg(g, 1.0), &Forcing::Zero, &ObstacleMask::empty(&g), &SolverSettings::default(), &ts, 0)
            .unwrap();
        assert_eq!(traj.steps, 4);
        assert_eq!(traj.final_state.t, 0.1);
        assert_eq!(traj.samples.last().unwrap().t, 0.1);
    }

    #[test]
    fn cfl_violation_reports_step() {
        let g = build_grid(PI, 16).unwrap();
        let ts = TimeSettings::new(0.5, 1.0).unwrap();
        let err = nse_integrate(&tg(g, 1.0), &Forcing::Zero, &ObstacleMask::empty(&g), &SolverSettings::default(), &ts, 0)
            .unwrap_err();
        assert!(matches!(err, LabError::CflViolation { step: 0, .. }));
    }

    #[test]
    fn obstacle_run_is_divergence_free_and_satisfies_ledger() {
        let g = build_grid(PI, 64).unwrap();
        let mask = build_obstacle_mask(&g, 0.3).unwrap();
        let ts = TimeSettings::new(5e-3, 0.2).unwrap();
        let u0 = tg(g, 1.0).shifted([0.3, 0.0]);
        let traj = nse_integrate(&u0, &Forcing::Zero, &mask, &SolverSettings::default(), &ts, 10).unwrap();
        assert!(traj.max_divergence < 1e-10);
        let rep = energy_ledger_check(&traj, traj.initial_energy(), 0.2);
        assert!(rep.passed, "{rep:?}");
        for w in traj.ledger.windows(2) {
            assert!(w[1].dissipation >= w[0].dissipation);
            assert!(w[1].energy <= w[0].energy * (1.0 + 1e-12));
        }
    }

    #[test]
    fn constructed_violation_is_caught() {
        let mut pts = vec![
            LedgerPoint { t: 0.0, energy: 1.0, dissipation: 0.0, forcing: 0.0 },
            LedgerPoint { t: 0.1, energy: 0.9, dissipation: 0.05, forcing: 0.0 },
        ];
        assert!(check_ledger_points(&pts, 1.0, 1.0).passed);
        pts[1].energy *= gronwall_constant(1.0) + 1.0;
        let rep = check_ledger_points(&pts, 1.0, 1.0);
        assert_eq!(rep.first_failure, Some(1));
        assert!(!rep.passed);
    }

    #[test]
    fn integration_is_deterministic() {
        let g = build_grid(PI, 32).unwrap();
        let mask = build_obstacle_mask(&g, 0.4).unwrap();
        let ts = TimeSettings::new(1e-2, 0.05).unwrap();
        let u0 = VectorField::from_fn(g, |x, y| (x + 2.0 * y).sin(), |x, y| (x - y).cos());
        let run = || nse_integrate(&u0, &Forcing::Zero, &mask, &SolverSettings::default(), &ts, 1).unwrap();
        let a = run();
        let b = run();
        assert_eq!(a.final_state.u.u1.values(), b.final_state.u.u1.values());
        assert_eq!(a.ledger, b.ledger);
    }
}

//! Vanishing-obstacle laboratory on the punctured periodic box
//! `(-L, L)^2 \ B(0, r)`.
//!
//! Poisson, Stokes and time-dependent Navier–Stokes problems are discretized
//! on one uniform periodic grid. The disc is imposed by volume penalization,
//! so the obstacle-free limit problem runs through the same code with an
//! empty mask.

pub mod config;
pub mod error;
pub mod grid;
pub mod krylov;
pub mod lab;
pub mod nse;
pub mod oracles;
pub mod poisson;
pub mod spectral;
pub mod stokes;

pub use config::{ExperimentConfig, ForcingSpec, NamedForcing, Problem};
pub use error::{LabError, Result};
pub use grid::{build_grid, build_obstacle_mask, obstacle_area, GridSpec, ObstacleMask};
pub use spectral::{
    box_mean, box_mean_vector, masked_h1_seminorm, masked_l2, GridField, ScalarField,
    SpectralCoeffs, SpectralOps, VectorField,
};
pub use lab::{
    run_nse_convergence, run_poisson_sweep, run_stokes_sweep, write_report, ConvergenceReport,
    ReportRow, RunOptions, CSV_HEADER,
};
pub use nse::{
    energy_ledger_check, gronwall_constant, nse_integrate, nse_step, space_time_distance, Forcing,
    LedgerPoint, LedgerReport, NseSolver, NseState, TimeSettings, Trajectory,
};
pub use oracles::{
    annulus_h2_blowup, annulus_solution, lemma22_bounds, lemma22_field, taylor_green,
    Lemma22Bounds, RadialProfile,
};
pub use poisson::{
    poincare_constant, solve_poisson_obstacle, PoincareEstimate, PoissonSolution, SolverSettings,
};
pub use stokes::{
    divergence_residual, momentum_residual, recover_pressure, solve_stokes_obstacle,
    StokesSolution,
};

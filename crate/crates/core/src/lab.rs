//! Radius sweeps, the two-radius Navier–Stokes comparison, and report files.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;

use crate::config::{
    initial_velocity, scalar_forcing, vector_forcing, ExperimentConfig, ForcingSpec, InitialData,
    NamedForcing, Problem,
};
use crate::error::{LabError, Result};
use crate::grid::{GridSpec, ObstacleMask};
use crate::nse::{energy_ledger_check, nse_integrate, space_time_distance, Forcing, TimeSettings, Trajectory};
use crate::oracles::taylor_green;
use crate::poisson::{poincare_with_ops, solve_with_ops as solve_poisson_with_ops, SolverSettings};
use crate::spectral::{box_mean, masked_h1_seminorm, masked_l2, SpectralOps};
use crate::stokes::solve_with_ops as solve_stokes_with_ops;

pub const CSV_HEADER: &str = "r,grad_norm,mean_1,mean_2,e_l2,e_h1,lambda_min,c_p,iters,wall_ms";

/// Relative slack on strict-decrease and monotonicity checks.
pub const ORDER_SLACK: f64 = 1e-3;

/// Target number of stored velocity samples per trajectory.
const NSE_SAMPLES: usize = 50;

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub r: f64,
    pub grad_norm: f64,
    pub mean: [f64; 2],
    pub e_l2: Option<f64>,
    pub e_h1: Option<f64>,
    pub lambda_min: Option<f64>,
    pub c_p: Option<f64>,
    pub iters: usize,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub config: ExperimentConfig,
    /// Descending `r`; an NSE report ends with the `r = 0` reference run.
    pub rows: Vec<ReportRow>,
    pub diagnostics: toml::Table,
    pub passed: bool,
}

/// Overrides applied on top of a config.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct RunOptions {
    pub cg_max_iter: Option<usize>,
}

impl RunOptions {
    pub fn settings(&self, cfg: &ExperimentConfig) -> SolverSettings {
        let mut s = SolverSettings::default().with_eta(cfg.eta);
        if let Some(m) = self.cg_max_iter {
            s.cg_max_iter = m;
        }
        s
    }
}

/// Zero-mean forcing selects convergence mode; otherwise the sweep runs in
/// blow-up mode and the limit problem is skipped.
pub fn is_blowup_forcing(spec: &ForcingSpec, problem: Problem, grid: &GridSpec) -> bool {
    if let ForcingSpec::Named(n) = spec {
        return *n == NamedForcing::Constant;
    }
    let empty = ObstacleMask::empty(grid);
    let tol = 1e-12;
    match problem {
        Problem::Poisson => {
            let f = scalar_forcing(spec, grid);
            box_mean(&f, &empty).abs() > tol * (masked_l2(&f, &empty) + 1.0)
        }
        _ => {
            let f = vector_forcing(spec, grid);
            let fnorm = masked_l2(&f, &empty);
            f.components().iter().any(|c| box_mean(c, &empty).abs() > tol * (fnorm + 1.0))
        }
    }
}

fn check_problem(cfg: &ExperimentConfig, expected: Problem) -> Result<()> {
    if cfg.problem != expected {
        return Err(LabError::Config(format!(
            "config describes problem \"{}\" but a {} run was requested",
            cfg.problem.name(),
            expected.name()
        )));
    }
    cfg.validate()
}

fn elapsed_ms(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn float_value(v: f64) -> toml::Value {
    toml::Value::Float(v)
}

fn float_array(v: impl IntoIterator<Item = f64>) -> toml::Value {
    toml::Value::Array(v.into_iter().map(float_value).collect())
}

/// Least-squares slope of `log y` against `log r`.
pub fn fitted_rate(r: &[f64], y: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = r
        .iter()
        .zip(y)
        .filter(|(a, b)| **a > 0.0 && **b > 0.0)
        .map(|(a, b)| (a.ln(), b.ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Strictly decreasing along the list, up to relative `slack`.
pub fn strictly_decreasing(v: &[f64], slack: f64) -> bool {
    v.windows(2).all(|w| w[1] < w[0] * (1.0 + slack))
}

/// Nondecreasing along the list, up to relative `slack`.
pub fn nondecreasing(v: &[f64], slack: f64) -> bool {
    v.windows(2).all(|w| w[1] >= w[0] * (1.0 - slack))
}

fn sweep_diagnostics(rows: &[ReportRow], fnorm: f64, blowup: bool, slack: f64) -> toml::Table {
    let mut d = toml::Table::new();
    let r: Vec<f64> = rows.iter().map(|x| x.r).collect();
    let grad: Vec<f64> = rows.iter().map(|x| x.grad_norm).collect();
    d.insert("mode".into(), toml::Value::String(if blowup { "blowup" } else { "convergence" }.into()));
    d.insert("order_slack".into(), float_value(slack));
    d.insert("forcing_l2".into(), float_value(fnorm));
    d.insert("grad_norm_nondecreasing".into(), toml::Value::Boolean(nondecreasing(&grad, slack)));
    if fnorm > 0.0 && !grad.is_empty() {
        let c = grad.iter().fold(0.0f64, |a, g| a.max(g / fnorm));
        d.insert("grad_bound_constant".into(), float_value(c));
    }
    if let Some(rate) = fitted_rate(&r, &grad) {
        d.insert("grad_norm_rate".into(), float_value(rate));
    }
    if !blowup {
        for (name, col) in [
            ("e_l2", rows.iter().filter_map(|x| x.e_l2).collect::<Vec<_>>()),
            ("e_h1", rows.iter().filter_map(|x| x.e_h1).collect::<Vec<_>>()),
        ] {
            d.insert(format!("{name}_strictly_decreasing"), toml::Value::Boolean(strictly_decreasing(&col, slack)));
            if let Some(rate) = fitted_rate(&r, &col) {
                d.insert(format!("{name}_rate"), float_value(rate));
            }
        }
    }
    let cp: Vec<f64> = rows.iter().filter_map(|x| x.c_p).collect();
    if cp.len() == rows.len() && !cp.is_empty() {
        d.insert("c_p_increasing".into(), toml::Value::Boolean(cp.windows(2).all(|w| w[1] > w[0])));
        let env = rows
            .iter()
            .filter(|x| x.r < 1.0)
            .filter_map(|x| x.c_p.map(|c| c / -x.r.ln()))
            .fold(0.0f64, f64::max);
        if env > 0.0 {
            d.insert("c_p_log_envelope".into(), float_value(env));
        }
    }
    d
}

fn poincare_columns(ops: &SpectralOps, mask: &ObstacleMask, settings: &SolverSettings) -> Result<(f64, f64, usize)> {
    if mask.is_empty() {
        return Err(LabError::NonCoerciveDomain);
    }
    let p = poincare_with_ops(ops, mask, settings)?;
    Ok((p.lambda_min, p.c_p, p.inner_iterations))
}

/// Poisson sweep: limit solve once (convergence mode), then every radius.
pub fn run_poisson_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ConvergenceReport> {
    check_problem(cfg, Problem::Poisson)?;
    let grid = cfg.grid()?;
    let settings = opts.settings(cfg);
    let spec = cfg.forcing_spec();
    let f = scalar_forcing(&spec, &grid);
    let blowup = is_blowup_forcing(&spec, Problem::Poisson, &grid);
    let empty = ObstacleMask::empty(&grid);
    let ops = SpectralOps::new(&grid);
    let limit = if blowup {
        None
    } else {
        Some(solve_poisson_with_ops(&f, &ops, &empty, &settings)?.u)
    };
    let rows = cfg
        .radii
        .par_iter()
        .map(|&r| -> Result<ReportRow> {
            let start = Instant::now();
            let inner = || -> Result<ReportRow> {
                let ops = SpectralOps::new(&grid);
                let mask = ObstacleMask::new(&grid, r)?;
                let sol = solve_poisson_with_ops(&f, &ops, &mask, &settings)?;
                let (lambda, cp, _) = poincare_columns(&ops, &mask, &settings)?;
                let (e_l2, e_h1) = match &limit {
                    Some(u0) => (
                        Some(masked_l2(&sol.u.shifted(-sol.mean).sub(u0), &empty)),
                        Some(masked_h1_seminorm(&sol.u.sub(u0), &empty)),
                    ),
                    None => (None, None),
                };
                Ok(ReportRow {
                    r,
                    grad_norm: sol.grad_norm,
                    mean: [sol.mean, 0.0],
                    e_l2,
                    e_h1,
                    lambda_min: Some(lambda),
                    c_p: Some(cp),
                    iters: sol.iterations,
                    wall_ms: 0.0,
                })
            };
            let mut row = inner().map_err(|e| e.at_radius(r))?;
            row.wall_ms = elapsed_ms(start);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;
    let fnorm = masked_l2(&f, &empty);
    let diagnostics = sweep_diagnostics(&rows, fnorm, blowup, ORDER_SLACK);
    Ok(ConvergenceReport {
        config: cfg.clone(),
        rows,
        diagnostics,
        passed: true,
    })
}

/// Stokes sweep; also records the divergence residual of every row.
pub fn run_stokes_sweep(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<ConvergenceReport> {
    check_problem(cfg, Problem::Stokes)?;
    let grid = cfg.grid()?;
    let settings = opts.settings(cfg);
    let spec = cfg.forcing_spec();
    let f = vector_forcing(&spec, &grid);
    let blowup = is_blowup_forcing(&spec, Problem::Stokes, &grid);
    let empty = ObstacleMask::empty(&grid);
    let ops = SpectralOps::new(&grid);
    let limit = if blowup {
        None
    } else {
        Some(solve_stokes_with_ops(&f, &ops, &empty, &settings)?.u)
    };
    let rows = cfg
        .radii
        .par_iter()
        .map(|&r| -> Result<(ReportRow, f64)> {
            let start = Instant::now();
            let inner = || -> Result<(ReportRow, f64)> {
                let ops = SpectralOps::new(&grid);
                let mask = ObstacleMask::new(&grid, r)?;
                let sol = solve_stokes_with_ops(&f, &ops, &mask, &settings)?;
                let (lambda, cp, _) = poincare_columns(&ops, &mask, &settings)?;
                let (e_l2, e_h1) = match &limit {
                    Some(u0) => (
                        Some(masked_l2(&sol.u.shifted([-sol.mean[0], -sol.mean[1]]).sub(u0), &empty)),
                        Some(masked_h1_seminorm(&sol.u.sub(u0), &empty)),
                    ),
                    None => (None, None),
                };
                let row = ReportRow {
                    r,
                    grad_norm: sol.grad_norm,
                    mean: sol.mean,
                    e_l2,
                    e_h1,
                    lambda_min: Some(lambda),
                    c_p: Some(cp),
                    iters: sol.iterations,
                    wall_ms: 0.0,
                };
                Ok((row, sol.divergence_residual))
            };
            let (mut row, div) = inner().map_err(|e| e.at_radius(r))?;
            row.wall_ms = elapsed_ms(start);
            Ok((row, div))
        })
        .collect::<Result<Vec<_>>>()?;
    let (rows, divs): (Vec<ReportRow>, Vec<f64>) = rows.into_iter().unzip();
    let fnorm = masked_l2(&f, &empty);
    let mut diagnostics = sweep_diagnostics(&rows, fnorm, blowup, ORDER_SLACK);
    diagnostics.insert("divergence_residual".into(), float_array(divs.iter().copied()));
    diagnostics.insert(
        "max_divergence_residual".into(),
        float_value(divs.iter().copied().fold(0.0, f64::max)),
    );
    Ok(ConvergenceReport {
        config: cfg.clone(),
        rows,
        diagnostics,
        passed: true,
    })
}

/// Per-run outcome of [`run_nse_convergence`].
#[derive(Debug, Clone)]
pub struct NseRun {
    pub r: f64,
    pub trajectory: Trajectory,
    pub ledger_passed: bool,
    pub ledger_margin: f64,
    pub wall_ms: f64,
}

/// Runs the obstacle-free reference and every radius from the same data,
/// and reports `D(r)`, the space-time L2 distance to the reference.
///
/// Rows use the common report columns: `e_l2` holds `D(r)` (for the `r = 0`
/// row, the L2 distance of the final state to the exact Taylor–Green
/// decay when that applies), `grad_norm` and the means describe the final
/// state, and `iters` counts time steps.
pub fn run_nse_convergence(cfg: &ExperimentConfig, opts: &RunOptions) -> Result<(ConvergenceReport, Vec<NseRun>)> {
    check_problem(cfg, Problem::Nse)?;
    let grid = cfg.grid()?;
    let settings = opts.settings(cfg);
    let nse = cfg.nse_spec();
    let ts = TimeSettings::new(nse.dt, nse.t_final)?;
    let u0 = initial_velocity(nse.u0, &grid)?;
    let spec = cfg.forcing_spec();
    let f_field = vector_forcing(&spec, &grid);
    let zero_forcing = spec == ForcingSpec::Named(NamedForcing::Zero);
    let steps = (nse.t_final / nse.dt).ceil() as usize;
    let stride = (steps / NSE_SAMPLES).max(1);

    let mut radii = cfg.radii.clone();
    radii.push(0.0);
    let runs = radii
        .par_iter()
        .map(|&r| -> Result<NseRun> {
            let start = Instant::now();
            let run = || -> Result<NseRun> {
                let mask = ObstacleMask::new(&grid, r)?;
                let forcing = if zero_forcing {
                    Forcing::Zero
                } else {
                    Forcing::Steady(f_field.clone())
                };
                let traj = nse_integrate(&u0, &forcing, &mask, &settings, &ts, stride)?;
                let rep = energy_ledger_check(&traj, traj.initial_energy(), nse.t_final);
                Ok(NseRun {
                    r,
                    ledger_passed: rep.passed,
                    ledger_margin: rep.worst_margin,
                    trajectory: traj,
                    wall_ms: 0.0,
                })
            };
            let mut out = run().map_err(|e| if r > 0.0 { e.at_radius(r) } else { e })?;
            out.wall_ms = elapsed_ms(start);
            Ok(out)
        })
        .collect::<Result<Vec<_>>>()?;

    let reference = runs.last().expect("reference run is always present");
    let empty = ObstacleMask::empty(&grid);
    let mut rows = Vec::with_capacity(runs.len());
    let mut distances = Vec::new();
    for run in &runs {
        let fin = &run.trajectory.final_state;
        let mask = ObstacleMask::new(&grid, run.r)?;
        let e_l2 = if run.r > 0.0 {
            let d = space_time_distance(&run.trajectory, &reference.trajectory)?;
            distances.push(d);
            Some(d)
        } else if zero_forcing && nse.u0 == InitialData::TaylorGreen {
            Some(masked_l2(&fin.u.sub(&taylor_green(nse.t_final, &grid)?), &empty))
        } else {
            None
        };
        rows.push(ReportRow {
            r: run.r,
            grad_norm: masked_h1_seminorm(&fin.u, &mask),
            mean: crate::spectral::box_mean_vector(&fin.u, &mask),
            e_l2,
            e_h1: None,
            lambda_min: None,
            c_p: None,
            iters: run.trajectory.steps,
            wall_ms: run.wall_ms,
        });
    }

    let mut d = toml::Table::new();
    d.insert("sample_stride".into(), toml::Value::Integer(stride as i64));
    d.insert("order_slack".into(), float_value(ORDER_SLACK));
    d.insert("distance".into(), float_array(distances.iter().copied()));
    d.insert("distance_strictly_decreasing".into(), toml::Value::Boolean(distances.windows(2).all(|w| w[1] < w[0])));
    d.insert(
        "ledger_passed".into(),
        toml::Value::Array(runs.iter().map(|x| toml::Value::Boolean(x.ledger_passed)).collect()),
    );
    d.insert("ledger_margin".into(), float_array(runs.iter().map(|x| x.ledger_margin)));
    d.insert(
        "max_divergence_residual".into(),
        float_array(runs.iter().map(|x| x.trajectory.max_divergence)),
    );
    d.insert("gronwall_constant".into(), float_value(crate::nse::gronwall_constant(nse.t_final)));
    let r_pos: Vec<f64> = cfg.radii.clone();
    if let Some(rate) = fitted_rate(&r_pos, &distances) {
        d.insert("distance_rate".into(), float_value(rate));
    }
    let passed = runs.iter().all(|x| x.ledger_passed);
    Ok((
        ConvergenceReport {
            config: cfg.clone(),
            rows,
            diagnostics: d,
            passed,
        },
        runs,
    ))
}

fn fmt_float(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_float).unwrap_or_default()
}

pub fn report_csv(report: &ConvergenceReport) -> String {
    let mut s = String::new();
    s.push_str(CSV_HEADER);
    s.push('\n');
    for row in &report.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{},{},{}",
            fmt_float(row.r),
            fmt_float(row.grad_norm),
            fmt_float(row.mean[0]),
            fmt_float(row.mean[1]),
            fmt_opt(row.e_l2),
            fmt_opt(row.e_h1),
            fmt_opt(row.lambda_min),
            fmt_opt(row.c_p),
            row.iters,
            fmt_float(row.wall_ms),
        );
    }
    s
}

/// Parses the output of [`report_csv`].
pub fn parse_report_csv(text: &str) -> Result<Vec<ReportRow>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(LabError::Config("report header does not match".into()));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>().map_err(|e| LabError::Config(format!("bad number {s:?}: {e}")))
    };
    let opt = |s: &str| -> Result<Option<f64>> {
        if s.is_empty() {
            Ok(None)
        } else {
            num(s).map(Some)
        }
    };
    lines
        .map(|line| {
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 10 {
                return Err(LabError::Config(format!("expected 10 fields, got {}", f.len())));
            }
            Ok(ReportRow {
                r: num(f[0])?,
                grad_norm: num(f[1])?,
                mean: [num(f[2])?, num(f[3])?],
                e_l2: opt(f[4])?,
                e_h1: opt(f[5])?,
                lambda_min: opt(f[6])?,
                c_p: opt(f[7])?,
                iters: f[8].parse().map_err(|e| LabError::Config(format!("bad count {:?}: {e}", f[8])))?,
                wall_ms: num(f[9])?,
            })
        })
        .collect()
}

pub fn config_echo(report: &ConvergenceReport) -> String {
    let mut doc = toml::Table::new();
    doc.insert("code_version".into(), toml::Value::String(env!("CARGO_PKG_VERSION").into()));
    doc.insert("passed".into(), toml::Value::Boolean(report.passed));
    let cfg_value = toml::Value::try_from(&report.config).expect("config serializes");
    if let toml::Value::Table(t) = cfg_value {
        doc.extend(t);
    }
    let mut diag = report.diagnostics.clone();
    let defaults = SolverSettings::default();
    diag.insert("cg_tol".into(), float_value(defaults.cg_tol));
    diag.insert("precond_shift".into(), float_value(defaults.precond_shift));
    doc.insert("diagnostics".into(), toml::Value::Table(diag));
    toml::to_string(&doc).expect("echo serializes")
}

pub fn plot_script(report: &ConvergenceReport) -> String {
    let mut s = String::new();
    let title = report.config.problem.name();
    let _ = writeln!(s, "set datafile separator ','");
    let _ = writeln!(s, "set logscale xy");
    let _ = writeln!(s, "set xlabel 'r'");
    let _ = writeln!(s, "set key left top");
    let _ = writeln!(s, "set title '{title} sweep'");
    let _ = writeln!(s, "set terminal pngcairo size 900,600");
    let _ = writeln!(s, "set output 'report.png'");
    let _ = writeln!(
        s,
        "plot 'report.csv' every ::1 using 1:5 with linespoints title 'e_L2', \\"
    );
    let _ = writeln!(s, "     '' every ::1 using 1:6 with linespoints title 'e_H1', \\");
    let _ = writeln!(s, "     '' every ::1 using 1:2 with linespoints title 'grad_norm', \\");
    let _ = writeln!(s, "     '' every ::1 using 1:8 with linespoints title 'C_P'");
    s
}

fn write_file(path: PathBuf, contents: &str) -> Result<()> {
    std::fs::write(&path, contents).map_err(|source| LabError::Io { path, source })
}

/// Writes `report.csv`, `config.echo.toml` and `plot.gp` into `out_dir`.
pub fn write_report(report: &ConvergenceReport, out_dir: &Path) -> Result<()> {
    std::fs::create_dir_all(out_dir).map_err(|source| LabError::Io {
        path: out_dir.to_path_buf(),
        source,
    })?;
    write_file(out_dir.join("report.csv"), &report_csv(report))?;
    write_file(out_dir.join("config.echo.toml"), &config_echo(report))?;
    write_file(out_dir.join("plot.gp"), &plot_script(report))?;
    Ok(())
}

/// Radii of the logarithmic-profile table printed by `ptlab oracles`.
pub const ORACLE_RADII: [f64; 5] = [0.1, 0.05, 0.025, 0.0125, 1e-3];
/// Inner radii of the annulus table.
pub const ORACLE_EPS: [f64; 4] = [1e-1, 1e-2, 1e-3, 1e-4];

/// Text table of the closed-form oracles at `L = pi`.
pub fn oracle_table() -> Result<String> {
    use crate::oracles::{
        annulus_coefficient, annulus_h2_blowup, annulus_leading_term, lemma22_bounds,
        lemma22_grad_sq_quadrature, lemma22_profile, lemma22_tail_integral,
    };
    let l = std::f64::consts::PI;
    let mut s = String::new();
    let _ = writeln!(s, "log-log profile, L = pi");
    let _ = writeln!(s, "{:>12} {:>24} {:>24} {:>24}", "r", "l2_lower", "grad_sq_exact", "grad_sq_quadrature");
    for r in ORACLE_RADII {
        let b = lemma22_bounds(r, l)?;
        let q = lemma22_grad_sq_quadrature(&lemma22_profile(r, l)?)?;
        let _ = writeln!(s, "{r:>12.4e} {:>24.16e} {:>24.16e} {q:>24.16e}", b.l2_lower, b.grad_sq_exact);
    }
    let _ = writeln!(s, "tail integral: {:.16e}", lemma22_tail_integral()?);
    let _ = writeln!(s);
    let _ = writeln!(s, "annulus blow-up");
    let _ = writeln!(s, "{:>12} {:>24} {:>24} {:>24} {:>12}", "eps", "C", "h2_norm_sq", "pi C^2/eps^2", "ratio");
    for eps in ORACLE_EPS {
        let v = annulus_h2_blowup(eps, 1000)?;
        let lead = annulus_leading_term(eps);
        let _ = writeln!(
            s,
            "{eps:>12.4e} {:>24.16e} {v:>24.16e} {lead:>24.16e} {:>12.6}",
            annulus_coefficient(eps),
            v / lead
        );
    }
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_report() -> ConvergenceReport {
        let cfg = ExperimentConfig::from_toml_str(
            "problem = \"poisson\"\nL = 3.141592653589793\nN = 16\nradii = [0.5, 0.25]\n",
        )
        .unwrap();
        ConvergenceReport {
            config: cfg,
            rows: vec![
                ReportRow {
                    r: 0.5,
                    grad_norm: 1.0 / 3.0,
                    mean: [-0.1, 0.0],
                    e_l2: Some(1e-3),
                    e_h1: Some(std::f64::consts::PI),
                    lambda_min: Some(0.07),
                    c_p: None,
                    iters: 12,
                    wall_ms: 3.5,
                },
                ReportRow {
                    r: 0.25,
                    grad_norm: 2.0_f64.sqrt(),
                    mean: [f64::MIN_POSITIVE, -0.0],
                    e_l2: None,
                    e_h1: None,
                    lambda_min: None,
                    c_p: Some(1e300),
                    iters: 0,
                    wall_ms: 0.1 + 0.2,
                },
            ],
            diagnostics: toml::Table::new(),
            passed: true,
        }
    }

    #[test]
    fn csv_round_trips_exactly() {
        let rep = sample_report();
        let text = report_csv(&rep);
        assert_eq!(text.lines().next(), Some(CSV_HEADER));
        assert!(text.lines().all(|l| l == l.trim_end()));
        assert_eq!(parse_report_csv(&text).unwrap(), rep.rows);
    }

    #[test]
    fn order_helpers() {
        assert!(strictly_decreasing(&[3.0, 2.0, 1.0], 0.0));
        assert!(!strictly_decreasing(&[3.0, 3.0], 0.0));
        assert!(strictly_decreasing(&[3.0, 3.0], 1e-3));
        assert!(nondecreasing(&[1.0, 0.9995, 2.0], 1e-3));
        assert!(!nondecreasing(&[1.0, 0.99], 1e-3));
        let r = [0.4, 0.2, 0.1];
        let y: Vec<f64> = r.iter().map(|x: &f64| 3.0 * x * x).collect();
        assert!((fitted_rate(&r, &y).unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn blowup_mode_inference() {
        let g = crate::grid::build_grid(std::f64::consts::PI, 16).unwrap();
        assert!(is_blowup_forcing(&ForcingSpec::Named(NamedForcing::Constant), Problem::Poisson, &g));
        assert!(!is_blowup_forcing(&ForcingSpec::Named(NamedForcing::ZeroMeanTrig), Problem::Stokes, &g));
        let custom: ForcingSpec = toml::from_str::<toml::Table>("f = { custom = [{ k = [0, 0], cos = 1.0 }] }")
            .unwrap()["f"]
            .clone()
            .try_into()
            .unwrap();
        assert!(is_blowup_forcing(&custom, Problem::Poisson, &g));
    }
}

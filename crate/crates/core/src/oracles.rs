//! Closed-form reference objects and the quadratures that check them.
//!
//! * the logarithmic profile `log(1 + log(rho/r))` on the punctured box,
//!   whose L2 norm outgrows its gradient norm as `r -> 0`;
//! * the radial annulus problem `(rho u')'/rho = 1 - 3 rho/4`,
//!   `u(eps) = u(2) = 0`, whose second derivatives blow up as `eps -> 0`;
//! * the Taylor–Green vortex.

use std::f64::consts::{PI, SQRT_2};

use crate::error::{LabError, Result};
use crate::grid::GridSpec;
use crate::spectral::{ScalarField, VectorField};

/// Relative tolerance requested from each quadrature panel.
const PANEL_TOL: f64 = 1e-12;
/// Ratio of consecutive geometric panel lengths.
const PANEL_RATIO: f64 = 2.0;
/// First panel length as a fraction of the singular endpoint.
const FIRST_PANEL: f64 = 1e-3;
/// Clamp for nodes numerically on the circle.
const CIRCLE_CLAMP: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureResult {
    pub value: f64,
    pub error_estimate: f64,
    pub evaluations: usize,
    pub panels: usize,
}

/// `∫_a^b g` by tanh-sinh quadrature on geometric panels that refine toward
/// `a`. Fails when any panel misses the tolerance or uses more than
/// `max_evals_per_panel` evaluations.
pub fn integrate_graded(
    g: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    first: f64,
    max_evals_per_panel: usize,
) -> Result<QuadratureResult> {
    let mut out = QuadratureResult {
        value: 0.0,
        error_estimate: 0.0,
        evaluations: 0,
        panels: 0,
    };
    let mut lo = a;
    let mut len = first.min(b - a);
    while lo < b {
        let hi = if b - (lo + len) < 0.5 * len { b } else { lo + len };
        let panel = quadrature::double_exponential::integrate(&g, lo, hi, PANEL_TOL);
        out.value += panel.integral;
        out.error_estimate += panel.error_estimate;
        out.evaluations += panel.num_function_evaluations as usize;
        out.panels += 1;
        let ok = panel.integral.is_finite()
            && panel.error_estimate <= 1e3 * PANEL_TOL * panel.integral.abs().max(f64::MIN_POSITIVE)
            && panel.num_function_evaluations as usize <= max_evals_per_panel;
        if !ok {
            return Err(LabError::QuadratureNotConverged {
                evaluations: out.evaluations,
                estimate: out.error_estimate,
            });
        }
        lo = hi;
        len *= PANEL_RATIO;
    }
    Ok(out)
}

/// `∫_0^∞ h` through the map `t = x / (1 - x)`.
pub fn integrate_half_line(h: impl Fn(f64) -> f64, max_evals: usize) -> Result<QuadratureResult> {
    let mapped = |x: f64| {
        if x >= 1.0 {
            return 0.0;
        }
        let w = 1.0 - x;
        h(x / w) / (w * w)
    };
    integrate_graded(mapped, 0.0, 1.0, 1.0, max_evals)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum RadialKind {
    /// `log(1 + log(rho/r))`.
    LogLog { r: f64 },
    /// Annulus solution with its log coefficient.
    Annulus { eps: f64, c: f64 },
}

/// A radial function with its derivative, defined on `[inner, outer]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RadialProfile {
    pub kind: RadialKind,
    pub inner: f64,
    pub outer: f64,
}

impl RadialProfile {
    pub fn value(&self, rho: f64) -> f64 {
        match self.kind {
            RadialKind::LogLog { r } => (1.0 + (rho / r).ln()).ln(),
            RadialKind::Annulus { eps, c } => {
                rho * rho / 4.0 - rho.powi(3) / 12.0 - eps * eps / 4.0 + eps.powi(3) / 12.0
                    + c * (rho / eps).ln()
            }
        }
    }

    pub fn derivative(&self, rho: f64) -> f64 {
        match self.kind {
            RadialKind::LogLog { r } => 1.0 / (rho * (1.0 + (rho / r).ln())),
            RadialKind::Annulus { c, .. } => rho / 2.0 - rho * rho / 4.0 + c / rho,
        }
    }
}

fn check_radius(r: f64, half_width: f64) -> Result<()> {
    let limit = crate::grid::OBSTACLE_LIMIT_FACTOR * half_width;
    if !(r > 0.0 && r < limit) {
        return Err(LabError::ObstacleTooLarge { r, limit });
    }
    Ok(())
}

/// Profile on `[r, sqrt(2) L]`.
pub fn lemma22_profile(r: f64, half_width: f64) -> Result<RadialProfile> {
    check_radius(r, half_width)?;
    Ok(RadialProfile {
        kind: RadialKind::LogLog { r },
        inner: r,
        outer: SQRT_2 * half_width,
    })
}

/// Profile and its grid sampling; nodes inside the disc are zero.
pub fn lemma22_field(r: f64, grid: &GridSpec) -> Result<(RadialProfile, ScalarField)> {
    let profile = lemma22_profile(r, grid.half_width())?;
    let floor = r * (1.0 + CIRCLE_CLAMP);
    let field = ScalarField::from_fn(*grid, |x, y| {
        let rho = (x * x + y * y).sqrt();
        if rho < r {
            0.0
        } else {
            profile.value(rho.max(floor))
        }
    });
    Ok((profile, field))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Lemma22Bounds {
    /// `(L^2/4) log(1 + log(L/(2r)))^2`.
    pub l2_lower: f64,
    /// `∫ |∂_rho u|^2` over the annulus `r <= rho <= sqrt(2) L`.
    pub grad_sq_exact: f64,
}

pub fn lemma22_bounds(r: f64, half_width: f64) -> Result<Lemma22Bounds> {
    check_radius(r, half_width)?;
    let l = half_width;
    Ok(Lemma22Bounds {
        l2_lower: 0.25 * l * l * (1.0 + (l / (2.0 * r)).ln()).ln().powi(2),
        grad_sq_exact: 2.0 * PI * (1.0 - 1.0 / (1.0 + (SQRT_2 * l / r).ln())),
    })
}

/// `2 pi ∫ rho |u'|^2` over the profile's annulus, by quadrature.
pub fn lemma22_grad_sq_quadrature(profile: &RadialProfile) -> Result<f64> {
    let q = integrate_graded(
        |rho| rho * profile.derivative(rho).powi(2),
        profile.inner,
        profile.outer,
        FIRST_PANEL * profile.inner,
        100_000,
    )?;
    Ok(2.0 * PI * q.value)
}

/// `∫_1^∞ ds / (s (1 + log s)^2)`, which equals one. Integrated in
/// `t = log s`, where the integrand `s g(s)` is `(1 + t)^{-2}`.
pub fn lemma22_tail_integral() -> Result<f64> {
    Ok(integrate_half_line(|t| (1.0 + t).powi(-2), 100_000)?.value)
}

/// Log coefficient of the annulus solution.
pub fn annulus_coefficient(eps: f64) -> f64 {
    (-1.0 / 3.0 + eps * eps / 4.0 - eps.powi(3) / 12.0) / (2.0 / eps).ln()
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps < 2.0) {
        return Err(LabError::InvalidEpsilon(eps));
    }
    Ok(())
}

/// Solution of `(rho u')'/rho = 1 - 3 rho/4` on `[eps, 2]` vanishing at both
/// ends; also returns the log coefficient.
pub fn annulus_solution(eps: f64) -> Result<(RadialProfile, f64)> {
    check_eps(eps)?;
    let c = annulus_coefficient(eps);
    Ok((
        RadialProfile {
            kind: RadialKind::Annulus { eps, c },
            inner: eps,
            outer: 2.0,
        },
        c,
    ))
}

/// `2 pi ∫_eps^2 rho (u'/rho)^2 drho`, graded toward `eps`.
///
/// `quad_points` bounds the evaluations spent on any single panel and must be
/// at least 1000.
pub fn annulus_h2_blowup(eps: f64, quad_points: usize) -> Result<f64> {
    check_eps(eps)?;
    if quad_points < 1000 {
        return Err(LabError::InvalidSettings(format!(
            "quad_points must be at least 1000, got {quad_points}"
        )));
    }
    let (profile, _) = annulus_solution(eps)?;
    let q = integrate_graded(
        |rho| profile.derivative(rho).powi(2) / rho,
        eps,
        2.0,
        FIRST_PANEL * eps,
        quad_points,
    )?;
    Ok(2.0 * PI * q.value)
}

/// Leading-order blow-up `pi C^2 / eps^2`.
pub fn annulus_leading_term(eps: f64) -> f64 {
    let c = annulus_coefficient(eps);
    PI * c * c / (eps * eps)
}

/// `(sin x cos y, -cos x sin y) e^{-2t}`; needs `L = pi`.
pub fn taylor_green(t: f64, grid: &GridSpec) -> Result<VectorField> {
    let l = grid.half_width();
    if (l - PI).abs() > 1e-12 * PI {
        return Err(LabError::IncompatibleBox(l));
    }
    let a = (-2.0 * t).exp();
    Ok(VectorField::from_fn(
        *grid,
        move |x, y| a * x.sin() * y.cos(),
        move |x, y| -a * x.cos() * y.sin(),
    ))
}

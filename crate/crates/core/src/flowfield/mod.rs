//! Steady incompressible 2D flow fields.
//!
//! A [`FlowField`] evaluates the ambient current `F(x) = (u, v)` and the stream
//! value between two points,
//!
//! ```text
//! psi(p, q) = integral from p to q of (u dy - v dx)
//! ```
//!
//! which is path independent when the field is divergence free. With that sign
//! convention a stream function `Psi` satisfies `u = dPsi/dy`, `v = -dPsi/dx`
//! and `psi(p, q) = Psi(q) - Psi(p)`.
//!
//! Fields are immutable once built, so evaluation from many threads is safe.

mod analytic;
mod grid;

pub use analytic::{AnalyticField, AnalyticKind};
pub use grid::{load_grid, GriddedField};

use thiserror::Error;

use crate::geom::{Domain, Vec2};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FlowError {
    #[error("point ({x}, {y}) lies outside the field domain")]
    OutOfDomain { x: f64, y: f64 },
    #[error("point ({x}, {y}) lies in a masked cell")]
    Masked { x: f64, y: f64 },
    #[error("grid parse error on line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("grid declares {expected} nodes but provides {found} data rows")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("invalid field parameter: {0}")]
    InvalidParameter(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl FlowError {
    pub(crate) fn out_of_domain(p: Vec2) -> Self {
        FlowError::OutOfDomain { x: p.x, y: p.y }
    }
}

/// Read-only access to a steady 2D current.
pub trait FlowField: Send + Sync {
    fn domain(&self) -> Domain;

    /// Ambient velocity at `p`. Fails outside the domain or inside masked cells.
    fn velocity_at(&self, p: Vec2) -> Result<Vec2, FlowError>;

    /// Stream value `psi(p, q)` in m^2/s.
    fn stream_value(&self, p: Vec2, q: Vec2) -> Result<f64, FlowError>;

    /// Step used for finite-difference Hessians when the caller has no preference.
    fn default_hessian_step(&self) -> f64;

    /// True when `p` is inside the domain and not masked.
    fn is_free(&self, p: Vec2) -> bool {
        self.velocity_at(p).is_ok()
    }
}

impl<F: FlowField + ?Sized> FlowField for &F {
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn velocity_at(&self, p: Vec2) -> Result<Vec2, FlowError> {
        (**self).velocity_at(p)
    }
    fn stream_value(&self, p: Vec2, q: Vec2) -> Result<f64, FlowError> {
        (**self).stream_value(p, q)
    }
    fn default_hessian_step(&self) -> f64 {
        (**self).default_hessian_step()
    }
    fn is_free(&self, p: Vec2) -> bool {
        (**self).is_free(p)
    }
}

impl<F: FlowField + ?Sized> FlowField for Box<F> {
    fn domain(&self) -> Domain {
        (**self).domain()
    }
    fn velocity_at(&self, p: Vec2) -> Result<Vec2, FlowError> {
        (**self).velocity_at(p)
    }
    fn stream_value(&self, p: Vec2, q: Vec2) -> Result<f64, FlowError> {
        (**self).stream_value(p, q)
    }
    fn default_hessian_step(&self) -> f64 {
        (**self).default_hessian_step()
    }
    fn is_free(&self, p: Vec2) -> bool {
        (**self).is_free(p)
    }
}

/// Which axis-aligned two-segment path the quadrature follows from `p` to `q`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PathOrder {
    /// `p -> (q.x, p.y) -> q`
    XFirst,
    /// `p -> (p.x, q.y) -> q`
    YFirst,
}

/// Stream value by composite trapezoidal quadrature of `u dy - v dx` along an
/// axis-aligned two-segment path, with sub-steps no longer than `max_step`.
pub fn stream_value_along<F: FlowField + ?Sized>(
    field: &F,
    p: Vec2,
    q: Vec2,
    order: PathOrder,
    max_step: f64,
) -> Result<f64, FlowError> {
    if !(max_step > 0.0) {
        return Err(FlowError::InvalidParameter(format!(
            "quadrature step must be positive, got {max_step}"
        )));
    }
    let corner = match order {
        PathOrder::XFirst => Vec2::new(q.x, p.y),
        PathOrder::YFirst => Vec2::new(p.x, q.y),
    };
    Ok(segment_flux(field, p, corner, max_step)? + segment_flux(field, corner, q, max_step)?)
}

fn segment_flux<F: FlowField + ?Sized>(
    field: &F,
    a: Vec2,
    b: Vec2,
    max_step: f64,
) -> Result<f64, FlowError> {
    let d = b - a;
    let len = d.norm();
    if len == 0.0 {
        // Still reject endpoints outside the domain.
        field.velocity_at(a)?;
        return Ok(0.0);
    }
    let n = (len / max_step).ceil().max(1.0) as usize;
    let flux = |t: f64| -> Result<f64, FlowError> {
        let f = field.velocity_at(a.lerp(b, t))?;
        Ok(f.x * d.y - f.y * d.x)
    };
    let mut sum = 0.5 * (flux(0.0)? + flux(1.0)?);
    for i in 1..n {
        sum += flux(i as f64 / n as f64)?;
    }
    Ok(sum / n as f64)
}

fn check_stencil(p: Vec2, h: f64) -> Result<(), FlowError> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(FlowError::InvalidParameter(format!(
            "finite-difference step must be positive, got {h}"
        )));
    }
    if !p.is_finite() {
        return Err(FlowError::out_of_domain(p));
    }
    Ok(())
}

/// Central-difference partials `(du/dx, du/dy, dv/dx, dv/dy)` at `p`.
fn velocity_gradient<F: FlowField + ?Sized>(
    field: &F,
    p: Vec2,
    h: f64,
) -> Result<[f64; 4], FlowError> {
    check_stencil(p, h)?;
    let e = field.velocity_at(p + Vec2::new(h, 0.0))?;
    let w = field.velocity_at(p - Vec2::new(h, 0.0))?;
    let n = field.velocity_at(p + Vec2::new(0.0, h))?;
    let s = field.velocity_at(p - Vec2::new(0.0, h))?;
    let inv = 1.0 / (2.0 * h);
    Ok([
        (e.x - w.x) * inv,
        (n.x - s.x) * inv,
        (e.y - w.y) * inv,
        (n.y - s.y) * inv,
    ])
}

/// Central finite-difference estimate of `du/dx + dv/dy` at `p` (1/s).
pub fn divergence_at<F: FlowField + ?Sized>(field: &F, p: Vec2, h: f64) -> Result<f64, FlowError> {
    let [du_dx, _, _, dv_dy] = velocity_gradient(field, p, h)?;
    Ok(du_dx + dv_dy)
}

/// Determinant of the stream-function Hessian at `p`, built from velocity
/// derivatives: `psi_xx = -dv/dx`, `psi_yy = du/dy`, `psi_xy = du/dx`.
///
/// The Hessian is symmetric, so a negative determinant means eigenvalues of
/// opposite sign (a saddle of the stream function).
pub fn hessian_det_psi<F: FlowField + ?Sized>(
    field: &F,
    p: Vec2,
    h: f64,
) -> Result<f64, FlowError> {
    let [du_dx, du_dy, dv_dx, _] = velocity_gradient(field, p, h)?;
    let psi_xx = -dv_dx;
    let psi_yy = du_dy;
    let psi_xy = du_dx;
    Ok(psi_xx * psi_yy - psi_xy * psi_xy)
}

/// Passive (idle) advection with classic fourth-order Runge-Kutta.
///
/// Returns every visited point including `p`. This is a diagnostic for stream
/// value conservation; the planner itself integrates with explicit Euler.
pub fn advect_rk4<F: FlowField + ?Sized>(
    field: &F,
    p: Vec2,
    dt: f64,
    steps: usize,
) -> Result<Vec<Vec2>, FlowError> {
    if !(dt > 0.0) {
        return Err(FlowError::InvalidParameter(format!(
            "dt must be positive, got {dt}"
        )));
    }
    let mut out = Vec::with_capacity(steps + 1);
    let mut x = p;
    field.velocity_at(x)?;
    out.push(x);
    for _ in 0..steps {
        let k1 = field.velocity_at(x)?;
        let k2 = field.velocity_at(x + k1 * (0.5 * dt))?;
        let k3 = field.velocity_at(x + k2 * (0.5 * dt))?;
        let k4 = field.velocity_at(x + k3 * dt)?;
        x += (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (dt / 6.0);
        field.velocity_at(x)?;
        out.push(x);
    }
    Ok(out)
}

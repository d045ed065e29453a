use std::f64::consts::PI;

use super::{FlowError, FlowField};
use crate::geom::{Domain, Vec2};

/// Closed-form divergence-free test fields.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum AnalyticKind {
    /// `F = (u, v)`, `Psi = u*y - v*x`.
    Uniform { u: f64, v: f64 },
    /// `F = (k*x, -k*y)`, `Psi = k*x*y`. Saddle at the origin.
    LinearSaddle { k: f64 },
    /// Periodic cellular gyres,
    /// `Psi = (v_peak*s/pi) * sin(pi*x/s) * sin(pi*y/s)`.
    ///
    /// Gyre centers sit at odd multiples of `s/2`; lattice corners (integer
    /// multiples of `s`) are saddles. The peak speed is `v_peak`.
    GyreLattice {
        v_peak: f64,
        cell_size: f64,
        n_x: usize,
        n_y: usize,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct AnalyticField {
    kind: AnalyticKind,
    domain: Domain,
}

fn finite(name: &str, v: f64) -> Result<f64, FlowError> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(FlowError::InvalidParameter(format!(
            "{name} must be finite, got {v}"
        )))
    }
}

impl AnalyticField {
    pub fn uniform(u: f64, v: f64, domain: Domain) -> Result<Self, FlowError> {
        Ok(AnalyticField {
            kind: AnalyticKind::Uniform {
                u: finite("u", u)?,
                v: finite("v", v)?,
            },
            domain,
        })
    }

    pub fn linear_saddle(k: f64, domain: Domain) -> Result<Self, FlowError> {
        Ok(AnalyticField {
            kind: AnalyticKind::LinearSaddle { k: finite("k", k)? },
            domain,
        })
    }

    /// Gyre lattice covering `[0, n_x*s] x [0, n_y*s]`. The outer boundary is a
    /// streamline, so idle particles never leave it.
    pub fn gyre_lattice(
        v_peak: f64,
        cell_size: f64,
        n_x: usize,
        n_y: usize,
    ) -> Result<Self, FlowError> {
        finite("v_peak", v_peak)?;
        if !(cell_size > 0.0) || !cell_size.is_finite() {
            return Err(FlowError::InvalidParameter(format!(
                "gyre cell size must be positive, got {cell_size}"
            )));
        }
        if n_x == 0 || n_y == 0 {
            return Err(FlowError::InvalidParameter(
                "gyre lattice needs at least one cell".into(),
            ));
        }
        let domain = Domain::new(0.0, n_x as f64 * cell_size, 0.0, n_y as f64 * cell_size)
            .ok_or_else(|| FlowError::InvalidParameter("degenerate gyre domain".into()))?;
        Ok(AnalyticField {
            kind: AnalyticKind::GyreLattice {
                v_peak,
                cell_size,
                n_x,
                n_y,
            },
            domain,
        })
    }

    /// Same field evaluated over a different rectangle.
    pub fn with_domain(mut self, domain: Domain) -> Self {
        self.domain = domain;
        self
    }

    pub fn kind(&self) -> AnalyticKind {
        self.kind
    }

    /// Absolute stream function `Psi(p)`; no domain check.
    pub fn stream_function(&self, p: Vec2) -> f64 {
        match self.kind {
            AnalyticKind::Uniform { u, v } => u * p.y - v * p.x,
            AnalyticKind::LinearSaddle { k } => k * p.x * p.y,
            AnalyticKind::GyreLattice {
                v_peak, cell_size, ..
            } => {
                let a = PI / cell_size;
                v_peak / a * (a * p.x).sin() * (a * p.y).sin()
            }
        }
    }

    /// Velocity without domain check.
    pub fn velocity_unchecked(&self, p: Vec2) -> Vec2 {
        match self.kind {
            AnalyticKind::Uniform { u, v } => Vec2::new(u, v),
            AnalyticKind::LinearSaddle { k } => Vec2::new(k * p.x, -k * p.y),
            AnalyticKind::GyreLattice {
                v_peak, cell_size, ..
            } => {
                let a = PI / cell_size;
                let (sx, cx) = (a * p.x).sin_cos();
                let (sy, cy) = (a * p.y).sin_cos();
                Vec2::new(v_peak * sx * cy, -v_peak * cx * sy)
            }
        }
    }
}

impl FlowField for AnalyticField {
    fn domain(&self) -> Domain {
        self.domain
    }

    fn velocity_at(&self, p: Vec2) -> Result<Vec2, FlowError> {
        if !self.domain.contains(p) {
            return Err(FlowError::out_of_domain(p));
        }
        Ok(self.velocity_unchecked(p))
    }

    fn stream_value(&self, p: Vec2, q: Vec2) -> Result<f64, FlowError> {
        for x in [p, q] {
            if !self.domain.contains(x) {
                return Err(FlowError::out_of_domain(x));
            }
        }
        Ok(self.stream_function(q) - self.stream_function(p))
    }

    fn default_hessian_step(&self) -> f64 {
        match self.kind {
            AnalyticKind::GyreLattice { cell_size, .. } => cell_size / 100.0,
            _ => self.domain.width().min(self.domain.height()) / 1000.0,
        }
    }
}

//! Naive shooting baseline: integrate a fixed lattice of controls covering the
//! whole speed disc and keep the fastest arrival. No pruning.

use std::f64::consts::TAU;

use serde::Serialize;

use crate::flowfield::FlowField;
use crate::geom::Vec2;
use crate::search::{best_of_controls, EdgeSolveResult, EdgeSolver, IntegratorParams, SearchError};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DiscScheme {
    /// Origin plus `n_r` rings (radii `v_max*i/n_r`) of `n_theta` bearings each.
    PolarGrid { n_r: usize, n_theta: usize },
    /// `n x n` lattice over `[-v_max, v_max]^2`, keeping points inside the disc.
    SquareGridClipped { n: usize },
}

impl DiscScheme {
    /// Polar layout with about `c*c` samples, the equal per-axis resolution
    /// counterpart of a `c`-sample control line. For `c = 19` this is
    /// `PolarGrid(20, 18)`, 361 controls.
    pub fn equal_resolution(c: usize) -> Self {
        match c {
            19 => DiscScheme::PolarGrid {
                n_r: 20,
                n_theta: 18,
            },
            _ => {
                let target = (c * c).max(2);
                let n_theta = c.max(4);
                let n_r = ((target - 1) as f64 / n_theta as f64).round().max(1.0) as usize;
                DiscScheme::PolarGrid { n_r, n_theta }
            }
        }
    }

    /// Polar layout with exactly `c` samples when `c - 1` is even
    /// (origin plus two rings), used for equal-budget comparisons.
    pub fn equal_budget(c: usize) -> Self {
        if c >= 5 && (c - 1).is_multiple_of(2) {
            DiscScheme::PolarGrid {
                n_r: 2,
                n_theta: (c - 1) / 2,
            }
        } else {
            DiscScheme::PolarGrid {
                n_r: 1,
                n_theta: c.saturating_sub(1).max(1),
            }
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            DiscScheme::PolarGrid { n_r, n_theta } => format!("polar({n_r},{n_theta})"),
            DiscScheme::SquareGridClipped { n } => format!("square({n})"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DiscSampling {
    pub scheme: DiscScheme,
    pub v_max: f64,
}

/// Deterministic list of controls covering the speed disc.
pub fn sample_disc_controls(sampling: &DiscSampling) -> Vec<Vec2> {
    let v_max = sampling.v_max;
    match sampling.scheme {
        DiscScheme::PolarGrid { n_r, n_theta } => {
            let mut out = Vec::with_capacity(1 + n_r * n_theta);
            out.push(Vec2::ZERO);
            for i in 1..=n_r {
                let r = if i == n_r {
                    v_max
                } else {
                    v_max * i as f64 / n_r as f64
                };
                for j in 0..n_theta {
                    out.push(Vec2::from_polar(r, TAU * j as f64 / n_theta as f64));
                }
            }
            out
        }
        DiscScheme::SquareGridClipped { n } => {
            if n <= 1 {
                return vec![Vec2::ZERO; n];
            }
            let coord = |i: usize| -v_max + 2.0 * v_max * i as f64 / (n - 1) as f64;
            let mut out = Vec::with_capacity(n * n);
            for j in 0..n {
                for i in 0..n {
                    let v = Vec2::new(coord(i), coord(j));
                    if v.norm() <= v_max * (1.0 + 1e-12) {
                        out.push(v);
                    }
                }
            }
            out
        }
    }
}

/// Integrates every disc sample and returns the fastest arrival.
pub fn solve_edge_shooting<F: FlowField + ?Sized>(
    field: &F,
    p: Vec2,
    q: Vec2,
    sampling: &DiscSampling,
    params: &IntegratorParams,
) -> Result<EdgeSolveResult, SearchError> {
    params.validate()?;
    let dist = p.distance(q);
    if !(dist >= params.arrival_eps) {
        return Err(SearchError::DegeneratePair {
            distance: dist,
            min: params.arrival_eps,
        });
    }
    let controls = sample_disc_controls(sampling);
    Ok(best_of_controls(field, &controls, p, q, params))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ShootingSolver {
    pub scheme: DiscScheme,
}

impl EdgeSolver for ShootingSolver {
    fn solve(
        &self,
        field: &dyn FlowField,
        p: Vec2,
        q: Vec2,
        params: &IntegratorParams,
    ) -> Result<EdgeSolveResult, SearchError> {
        let sampling = DiscSampling {
            scheme: self.scheme,
            v_max: params.v_max,
        };
        solve_edge_shooting(field, p, q, &sampling, params)
    }

    fn budget(&self) -> usize {
        match self.scheme {
            DiscScheme::PolarGrid { n_r, n_theta } => 1 + n_r * n_theta,
            DiscScheme::SquareGridClipped { .. } => sample_disc_controls(&DiscSampling {
                scheme: self.scheme,
                v_max: 1.0,
            })
            .len(),
        }
    }

    fn name(&self) -> &'static str {
        "shooting"
    }
}

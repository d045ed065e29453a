//! Streamline-based edge search.
//!
//! For a directed pair `(P, Q)` every constant control `v_g = (u_g, v_g)` that
//! puts both points on the same level set of the superimposed stream function
//! satisfies the linear condition
//!
//! ```text
//! psi_v(P, Q) + u_g*dy - v_g*dx = 0
//! ```
//!
//! i.e. a line in control space. Intersected with the speed disc
//! `|v_g| <= V_max` it leaves a chord (possibly a single point, possibly
//! nothing), which is all that needs searching. Controls on the chord are
//! forward integrated with explicit Euler and the fastest one that arrives wins.

use std::f64::consts::FRAC_PI_2;

use serde::Serialize;
use thiserror::Error;

use crate::flowfield::{hessian_det_psi, FlowError, FlowField};
use crate::geom::Vec2;

/// `|kappa|` within this of 1 counts as a tangent line.
pub const TANGENT_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SearchError {
    #[error("sample pair is degenerate: separation {distance} m is below {min} m")]
    DegeneratePair { distance: f64, min: f64 },
    #[error("control line has no feasible controls")]
    EmptyLine,
    #[error("cannot draw {c} samples from a {class:?} control line")]
    InvalidSampleCount { c: usize, class: LineClass },
    #[error("invalid integrator parameters: {0}")]
    InvalidParams(String),
    #[error(transparent)]
    Flow(#[from] FlowError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LineClass {
    /// `|kappa| > 1`: the line misses the speed disc.
    Empty,
    /// `|kappa| = 1`: the line touches the disc at one control.
    Tangent,
    /// `|kappa| < 1`: a chord of feasible controls.
    Segment,
}

/// Feasible-control locus for a directed pair.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ControlLine {
    pub p: Vec2,
    pub q: Vec2,
    /// Bearing of `q - p`.
    pub delta: f64,
    /// Ambient stream value normalised by `V_max * |q - p|`.
    pub kappa: f64,
    pub v_max: f64,
    /// Ambient stream value `psi_v(p, q)`.
    pub psi_v: f64,
    pub class: LineClass,
    /// `(v_a, v_b)` on the speed circle; `None` for [`LineClass::Empty`].
    pub endpoints: Option<(Vec2, Vec2)>,
}

impl ControlLine {
    pub fn v_a(&self) -> Option<Vec2> {
        self.endpoints.map(|e| e.0)
    }

    pub fn v_b(&self) -> Option<Vec2> {
        self.endpoints.map(|e| e.1)
    }

    /// How far `v_g` is from making `p` and `q` share a stream value (m^2/s).
    pub fn residual(&self, v_g: Vec2) -> f64 {
        self.psi_v + psi_g(v_g, self.p, self.q)
    }
}

/// Stream value of the uniform "flow due to control" between two points.
pub fn psi_g(v_g: Vec2, p: Vec2, q: Vec2) -> f64 {
    let d = q - p;
    v_g.x * d.y - v_g.y * d.x
}

/// Builds the control line for the directed pair `(p, q)`.
///
/// Fails with [`SearchError::DegeneratePair`] when the points are closer than
/// `min_separation` (normally the arrival radius).
pub fn control_line<F: FlowField + ?Sized>(
    field: &F,
    p: Vec2,
    q: Vec2,
    v_max: f64,
    min_separation: f64,
) -> Result<ControlLine, SearchError> {
    if !(v_max > 0.0) || !v_max.is_finite() {
        return Err(SearchError::InvalidParams(format!(
            "v_max must be positive, got {v_max}"
        )));
    }
    let d = q - p;
    let dist = d.norm();
    if !(dist >= min_separation) || dist == 0.0 {
        return Err(SearchError::DegeneratePair {
            distance: dist,
            min: min_separation,
        });
    }
    let psi_v = field.stream_value(p, q)?;
    let delta = d.y.atan2(d.x);
    let kappa = psi_v / (v_max * dist);

    let (class, endpoints) = if (kappa.abs() - 1.0).abs() <= TANGENT_TOL {
        let theta = delta + FRAC_PI_2 + kappa.signum().clamp(-1.0, 1.0).acos();
        let v = Vec2::from_polar(v_max, theta);
        (LineClass::Tangent, Some((v, v)))
    } else if kappa.abs() > 1.0 {
        (LineClass::Empty, None)
    } else {
        let spread = kappa.acos();
        let theta_a = delta + FRAC_PI_2 + spread;
        let theta_b = delta + FRAC_PI_2 - spread;
        (
            LineClass::Segment,
            Some((
                Vec2::from_polar(v_max, theta_a),
                Vec2::from_polar(v_max, theta_b),
            )),
        )
    };

    Ok(ControlLine {
        p,
        q,
        delta,
        kappa,
        v_max,
        psi_v,
        class,
        endpoints,
    })
}

/// `c` controls evenly spaced along the chord from `v_a` to `v_b`, inclusive.
///
/// Samples are affine combinations of two solutions of a linear equation, so
/// they stay on the line, and they lie inside the disc because the chord does.
pub fn sample_controls(line: &ControlLine, c: usize) -> Result<Vec<Vec2>, SearchError> {
    let (v_a, v_b) = line.endpoints.ok_or(SearchError::EmptyLine)?;
    match (line.class, c) {
        (_, 0) | (LineClass::Segment, 1) => Err(SearchError::InvalidSampleCount {
            c,
            class: line.class,
        }),
        (LineClass::Tangent, _) => Ok(vec![v_a; c]),
        _ => {
            let last = (c - 1) as f64;
            Ok((0..c)
                .map(|i| {
                    if i == c - 1 {
                        v_b
                    } else {
                        v_a.lerp(v_b, i as f64 / last)
                    }
                })
                .collect())
        }
    }
}

/// Time stepping and stopping thresholds shared by every edge solver.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct IntegratorParams {
    /// Vehicle speed limit relative to the water (m/s).
    pub v_max: f64,
    /// Euler step (s).
    pub dt: f64,
    /// Maximum number of steps.
    pub horizon: usize,
    /// Arrival radius around the target (m).
    pub arrival_eps: f64,
    /// Stall when net speed drops below this fraction of `v_max` at a saddle.
    pub stall_speed_frac: f64,
    /// Finite-difference step for the stream-function Hessian (m).
    pub hessian_h: f64,
}

impl IntegratorParams {
    pub const DEFAULT_DT: f64 = 750.0;
    pub const DEFAULT_HORIZON: usize = 2000;
    pub const DEFAULT_STALL_SPEED_FRAC: f64 = 0.01;

    /// Defaults: 750 s steps, 2000-step horizon, arrival radius
    /// `1.5 * v_max * dt`, stall below 1% of `v_max`.
    pub fn new(v_max: f64, hessian_h: f64) -> Self {
        IntegratorParams {
            v_max,
            dt: Self::DEFAULT_DT,
            horizon: Self::DEFAULT_HORIZON,
            arrival_eps: 1.5 * Self::DEFAULT_DT * v_max,
            stall_speed_frac: Self::DEFAULT_STALL_SPEED_FRAC,
            hessian_h,
        }
    }

    /// [`IntegratorParams::new`] with the field's preferred Hessian step.
    pub fn for_field<F: FlowField + ?Sized>(field: &F, v_max: f64) -> Self {
        Self::new(v_max, field.default_hessian_step())
    }

    pub fn validate(&self) -> Result<(), SearchError> {
        let bad = |msg: String| Err(SearchError::InvalidParams(msg));
        if !(self.v_max > 0.0 && self.v_max.is_finite()) {
            return bad(format!("v_max must be positive, got {}", self.v_max));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return bad(format!("dt must be positive, got {}", self.dt));
        }
        if self.horizon < 1 {
            return bad("horizon must be at least one step".into());
        }
        if !(self.arrival_eps > 0.0 && self.arrival_eps.is_finite()) {
            return bad(format!(
                "arrival_eps must be positive, got {}",
                self.arrival_eps
            ));
        }
        if !(self.stall_speed_frac > 0.0 && self.stall_speed_frac < 1.0) {
            return bad(format!(
                "stall_speed_frac must lie in (0, 1), got {}",
                self.stall_speed_frac
            ));
        }
        if !(self.hessian_h > 0.0 && self.hessian_h.is_finite()) {
            return bad(format!(
                "hessian_h must be positive, got {}",
                self.hessian_h
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum IntegrationStatus {
    Reached,
    HorizonExceeded,
    Stalled,
    LeftDomain,
}

#[derive(Clone, Debug, PartialEq)]
pub struct IntegrationResult {
    pub status: IntegrationStatus,
    /// Every visited point, starting with `p`.
    pub trajectory: Vec<Vec2>,
    /// Number of Euler steps taken, `trajectory.len() - 1`.
    pub steps: usize,
    /// `steps * dt` (s).
    pub elapsed: f64,
    /// Smallest distance to the target over the trajectory (m).
    pub closest_approach: f64,
}

/// Net speed nearly zero at a saddle of the stream function. The control's own
/// stream function is linear, so only the ambient Hessian matters.
pub fn is_stalled<F: FlowField + ?Sized>(
    field: &F,
    x: Vec2,
    net_velocity: Vec2,
    params: &IntegratorParams,
) -> bool {
    net_velocity.norm() < params.stall_speed_frac * params.v_max
        && matches!(hessian_det_psi(field, x, params.hessian_h), Ok(det) if det < 0.0)
}

/// Forward integrates a constant control from `p` towards `q`:
/// `x_{k+1} = x_k + (F(x_k) + v_g) * dt`.
///
/// After each step the checks run in order: arrival within `arrival_eps`,
/// stall, leaving the domain (or entering a mask), horizon.
pub fn integrate<F: FlowField + ?Sized>(
    field: &F,
    v_g: Vec2,
    p: Vec2,
    q: Vec2,
    params: &IntegratorParams,
) -> IntegrationResult {
    debug_assert!(v_g.norm() <= params.v_max + 1e-9, "control exceeds v_max");
    let dt = params.dt;
    let mut x = p;
    let mut trajectory = Vec::with_capacity(64);
    trajectory.push(x);
    let mut closest = x.distance(q);

    let finish = |status, trajectory: Vec<Vec2>, closest| {
        let steps = trajectory.len() - 1;
        IntegrationResult {
            status,
            steps,
            elapsed: steps as f64 * dt,
            trajectory,
            closest_approach: closest,
        }
    };

    let mut f = match field.velocity_at(x) {
        Ok(f) => f,
        Err(_) => return finish(IntegrationStatus::LeftDomain, trajectory, closest),
    };
    for _ in 0..params.horizon {
        x += (f + v_g) * dt;
        trajectory.push(x);
        let dist = x.distance(q);
        closest = closest.min(dist);
        if dist <= params.arrival_eps {
            return finish(IntegrationStatus::Reached, trajectory, closest);
        }
        match field.velocity_at(x) {
            Ok(next) => {
                if is_stalled(field, x, next + v_g, params) {
                    return finish(IntegrationStatus::Stalled, trajectory, closest);
                }
                f = next;
            }
            Err(_) => return finish(IntegrationStatus::LeftDomain, trajectory, closest),
        }
    }
    finish(IntegrationStatus::HorizonExceeded, trajectory, closest)
}

/// The winning control of an edge search.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeBest {
    /// Position in the solver's sample list.
    pub index: usize,
    pub control: Vec2,
    /// Travel time (s).
    pub cost: f64,
    pub steps: usize,
    pub trajectory: Vec<Vec2>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum EdgeStatus {
    Solved,
    Unreachable,
}

#[derive(Clone, Debug, PartialEq)]
pub struct EdgeSolveResult {
    pub best: Option<EdgeBest>,
    pub integrations_performed: usize,
    /// Status of every integrated sample, in sample order.
    pub outcomes: Vec<IntegrationStatus>,
    /// Number of samples the solver drew (0 when pruned).
    pub samples: usize,
}

impl EdgeSolveResult {
    pub fn status(&self) -> EdgeStatus {
        if self.best.is_some() {
            EdgeStatus::Solved
        } else {
            EdgeStatus::Unreachable
        }
    }

    pub fn cost(&self) -> Option<f64> {
        self.best.as_ref().map(|b| b.cost)
    }

    pub(crate) fn unreachable_without_work() -> Self {
        EdgeSolveResult {
            best: None,
            integrations_performed: 0,
            outcomes: Vec::new(),
            samples: 0,
        }
    }
}

/// Integrates every control and keeps the earliest arrival. Ties go to the
/// lowest sample index.
pub fn best_of_controls<F: FlowField + ?Sized>(
    field: &F,
    controls: &[Vec2],
    p: Vec2,
    q: Vec2,
    params: &IntegratorParams,
) -> EdgeSolveResult {
    let mut best: Option<EdgeBest> = None;
    let mut outcomes = Vec::with_capacity(controls.len());
    for (index, &control) in controls.iter().enumerate() {
        let run = integrate(field, control, p, q, params);
        outcomes.push(run.status);
        if run.status == IntegrationStatus::Reached
            && best.as_ref().is_none_or(|b| run.steps < b.steps)
        {
            best = Some(EdgeBest {
                index,
                control,
                cost: run.elapsed,
                steps: run.steps,
                trajectory: run.trajectory,
            });
        }
    }
    EdgeSolveResult {
        best,
        integrations_performed: controls.len(),
        outcomes,
        samples: controls.len(),
    }
}

/// Streamline edge search: build the control line, sample `c` controls along
/// it and return the fastest arrival. Pairs whose line misses the speed disc
/// cannot share a stream value under any admissible control and are rejected
/// without integrating.
pub fn solve_edge<F: FlowField + ?Sized>(
    field: &F,
    p: Vec2,
    q: Vec2,
    c: usize,
    params: &IntegratorParams,
) -> Result<EdgeSolveResult, SearchError> {
    params.validate()?;
    let line = control_line(field, p, q, params.v_max, params.arrival_eps)?;
    if line.class == LineClass::Empty {
        return Ok(EdgeSolveResult::unreachable_without_work());
    }
    let controls = sample_controls(&line, c)?;
    Ok(best_of_controls(field, &controls, p, q, params))
}

/// A pluggable directed-edge solver for roadmap construction.
pub trait EdgeSolver: Sync {
    fn solve(
        &self,
        field: &dyn FlowField,
        p: Vec2,
        q: Vec2,
        params: &IntegratorParams,
    ) -> Result<EdgeSolveResult, SearchError>;

    /// Upper bound on integrations per edge.
    fn budget(&self) -> usize;

    fn name(&self) -> &'static str;
}

/// [`solve_edge`] with a fixed number of control samples.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct StreamlineSolver {
    pub c: usize,
}

impl EdgeSolver for StreamlineSolver {
    fn solve(
        &self,
        field: &dyn FlowField,
        p: Vec2,
        q: Vec2,
        params: &IntegratorParams,
    ) -> Result<EdgeSolveResult, SearchError> {
        solve_edge(field, p, q, self.c, params)
    }

    fn budget(&self) -> usize {
        self.c
    }

    fn name(&self) -> &'static str {
        "streamline"
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowfield::AnalyticField;
    use crate::geom::Domain;
    use std::f64::consts::PI;

    fn big() -> Domain {
        Domain::new(-20_000.0, 20_000.0, -20_000.0, 20_000.0).unwrap()
    }

    fn uniform(u: f64, v: f64) -> AnalyticField {
        AnalyticField::uniform(u, v, big()).unwrap()
    }

    #[test]
    fn zero_flow_line() {
        let line = control_line(
            &uniform(0.0, 0.0),
            Vec2::ZERO,
            Vec2::new(1000.0, 0.0),
            0.3,
            1.0,
        )
        .unwrap();
        assert_eq!(line.kappa, 0.0);
        assert_eq!(line.delta, 0.0);
        assert_eq!(line.class, LineClass::Segment);
        let (a, b) = line.endpoints.unwrap();
        assert!((b - Vec2::new(0.3, 0.0)).norm() < 1e-15);
        assert!((a - Vec2::new(-0.3, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn crossflow_line() {
        // psi_v = -0.15 * 10000 = -1500, kappa = -0.5, theta_b = -pi/6.
        let line = control_line(
            &uniform(0.0, 0.15),
            Vec2::ZERO,
            Vec2::new(10_000.0, 0.0),
            0.3,
            1.0,
        )
        .unwrap();
        assert!((line.psi_v + 1500.0).abs() < 1e-9);
        assert!((line.kappa + 0.5).abs() < 1e-15);
        let b = line.v_b().unwrap();
        assert!((b.y.atan2(b.x) + PI / 6.0).abs() < 1e-14);
        assert!((b.x - 0.259_807_621_135_331_6).abs() < 1e-12);
        assert!((b.y + 0.15).abs() < 1e-12);
        assert!(line.residual(b).abs() < 1e-9);
        assert!(line.residual(line.v_a().unwrap()).abs() < 1e-9);
    }

    #[test]
    fn strong_crossflow_line_is_empty() {
        let line = control_line(
            &uniform(0.0, 0.6),
            Vec2::ZERO,
            Vec2::new(10_000.0, 0.0),
            0.3,
            1.0,
        )
        .unwrap();
        assert!((line.kappa + 2.0).abs() < 1e-12);
        assert_eq!(line.class, LineClass::Empty);
        assert!(line.endpoints.is_none());
        assert_eq!(sample_controls(&line, 19), Err(SearchError::EmptyLine));
    }

    #[test]
    fn tangent_line_single_control() {
        let line = control_line(
            &uniform(0.0, 0.3),
            Vec2::ZERO,
            Vec2::new(10_000.0, 0.0),
            0.3,
            1.0,
        )
        .unwrap();
        assert_eq!(line.class, LineClass::Tangent);
        let (a, b) = line.endpoints.unwrap();
        assert_eq!(a, b);
        // Must cancel the cross-current exactly: v = (0, -0.3).
        assert!((a - Vec2::new(0.0, -0.3)).norm() < 1e-15);
        assert_eq!(sample_controls(&line, 1).unwrap(), vec![a]);
    }

    #[test]
    fn degenerate_pair() {
        let err = control_line(
            &uniform(0.0, 0.0),
            Vec2::ZERO,
            Vec2::new(100.0, 0.0),
            0.3,
            337.5,
        )
        .unwrap_err();
        assert!(matches!(err, SearchError::DegeneratePair { .. }));
        assert!(control_line(&uniform(0.0, 0.0), Vec2::ZERO, Vec2::ZERO, 0.3, 0.0).is_err());
    }

    #[test]
    fn psi_g_examples() {
        assert_eq!(
            psi_g(Vec2::new(1.0, 0.0), Vec2::ZERO, Vec2::new(0.0, 1.0)),
            1.0
        );
        assert!(
            (psi_g(
                Vec2::new(0.2598, -0.15),
                Vec2::ZERO,
                Vec2::new(10_000.0, 0.0)
            ) - 1500.0)
                .abs()
                < 1e-9
        );
        assert_eq!(
            psi_g(Vec2::ZERO, Vec2::new(3.0, -7.0), Vec2::new(-11.0, 5.0)),
            0.0
        );
    }

    #[test]
    fn sample_counts() {
        let line = control_line(
            &uniform(0.0, 0.0),
            Vec2::ZERO,
            Vec2::new(1000.0, 0.0),
            0.3,
            1.0,
        )
        .unwrap();
        let s = sample_controls(&line, 3).unwrap();
        assert_eq!(s.len(), 3);
        assert!((s[0] - Vec2::new(-0.3, 0.0)).norm() < 1e-15);
        assert!(s[1].norm() < 1e-15);
        assert!((s[2] - Vec2::new(0.3, 0.0)).norm() < 1e-15);
        assert!(matches!(
            sample_controls(&line, 1),
            Err(SearchError::InvalidSampleCount { .. })
        ));
        assert!(sample_controls(&line, 0).is_err());
    }

    #[test]
    fn crossflow_samples_stay_on_line_and_in_disc() {
        let line = control_line(
            &uniform(0.0, 0.15),
            Vec2::ZERO,
            Vec2::new(10_000.0, 0.0),
            0.3,
            1.0,
        )
        .unwrap();
        let s = sample_controls(&line, 19).unwrap();
        assert_eq!(s.len(), 19);
        for v in s {
            assert!(
                line.residual(v).abs() < 1e-12,
                "residual {}",
                line.residual(v)
            );
            assert!(v.norm() <= 0.3 * (1.0 + 1e-12));
        }
    }

    fn params(dt: f64, eps: f64) -> IntegratorParams {
        IntegratorParams {
            dt,
            arrival_eps: eps,
            ..IntegratorParams::new(0.3, 1.0)
        }
    }

    #[test]
    fn euler_step_table_zero_flow() {
        // x_k = 225 k; distances to 1000: 775, 550, 325, 100 -> arrival at k = 4.
        let f = uniform(0.0, 0.0);
        let r = integrate(
            &f,
            Vec2::new(0.3, 0.0),
            Vec2::ZERO,
            Vec2::new(1000.0, 0.0),
            &params(750.0, 300.0),
        );
        assert_eq!(r.status, IntegrationStatus::Reached);
        assert_eq!(r.steps, 4);
        assert_eq!(r.elapsed, 3000.0);
        assert_eq!(r.trajectory.len(), 5);
        assert!((r.trajectory[4].x - 900.0).abs() < 1e-9);
        assert!((r.closest_approach - 100.0).abs() < 1e-9);
    }

    #[test]
    fn moving_away_hits_horizon() {
        let f = uniform(0.0, 0.0);
        let p = IntegratorParams {
            horizon: 50,
            ..params(750.0, 300.0)
        };
        let r = integrate(
            &f,
            Vec2::new(-0.3, 0.0),
            Vec2::ZERO,
            Vec2::new(1000.0, 0.0),
            &p,
        );
        assert_eq!(r.status, IntegrationStatus::HorizonExceeded);
        assert_eq!(r.steps, 50);
        assert_eq!(r.elapsed, 50.0 * 750.0);
        assert_eq!(r.closest_approach, 1000.0);
    }

    #[test]
    fn leaving_domain() {
        let f = AnalyticField::uniform(0.0, 0.0, Domain::new(-500.0, 2000.0, -10.0, 10.0).unwrap())
            .unwrap();
        let r = integrate(
            &f,
            Vec2::new(-0.3, 0.0),
            Vec2::ZERO,
            Vec2::new(1000.0, 0.0),
            &params(750.0, 300.0),
        );
        assert_eq!(r.status, IntegrationStatus::LeftDomain);
        assert_eq!(r.steps, 3);
    }

    #[test]
    fn stalls_on_stable_axis_of_saddle() {
        // F = (k x, -k y): the y axis flows into the origin.
        let k = 1e-4;
        let f =
            AnalyticField::linear_saddle(k, Domain::new(-2000.0, 2000.0, -2000.0, 2000.0).unwrap())
                .unwrap();
        let p = IntegratorParams {
            hessian_h: 1.0,
            ..params(750.0, 100.0)
        };
        let r = integrate(
            &f,
            Vec2::ZERO,
            Vec2::new(0.0, -1000.0),
            Vec2::new(1500.0, 1500.0),
            &p,
        );
        assert_eq!(r.status, IntegrationStatus::Stalled);
        let end = *r.trajectory.last().unwrap();
        // |y| shrinks by (1 - k dt) each step until k|y| < 0.01 * 0.3.
        assert!(end.norm() < 30.0 && end.norm() >= 30.0 * (1.0 - k * 750.0));
    }

    #[test]
    fn arrival_beats_stall() {
        let k = 1e-4;
        let f =
            AnalyticField::linear_saddle(k, Domain::new(-2000.0, 2000.0, -2000.0, 2000.0).unwrap())
                .unwrap();
        let r = integrate(
            &f,
            Vec2::ZERO,
            Vec2::new(0.0, -1000.0),
            Vec2::ZERO,
            &params(750.0, 40.0),
        );
        assert_eq!(r.status, IntegrationStatus::Reached);
    }

    #[test]
    fn start_outside_domain_is_left_domain() {
        let f = AnalyticField::uniform(0.0, 0.0, Domain::new(0.0, 1.0, 0.0, 1.0).unwrap()).unwrap();
        let r = integrate(
            &f,
            Vec2::ZERO,
            Vec2::new(5.0, 5.0),
            Vec2::ZERO,
            &params(1.0, 0.1),
        );
        assert_eq!(r.status, IntegrationStatus::LeftDomain);
        assert_eq!(r.steps, 0);
        assert_eq!(r.elapsed, 0.0);
    }

    #[test]
    fn solve_edge_crossflow() {
        let f = uniform(0.0, 0.15);
        let p = IntegratorParams::new(0.3, 1.0);
        let r = solve_edge(&f, Vec2::ZERO, Vec2::new(10_000.0, 0.0), 19, &p).unwrap();
        assert_eq!(r.status(), EdgeStatus::Solved);
        assert_eq!(r.integrations_performed, 19);
        let best = r.best.unwrap();
        assert_eq!(best.index, 18);
        assert!((best.control - Vec2::new(0.259_807_621, -0.15)).norm() < 1e-6);
        // Net speed 0.2598 m/s => 194.86 m per step; first within 337.5 m is step 50.
        assert_eq!(best.steps, 50);
        assert_eq!(best.cost, 37_500.0);
    }

    #[test]
    fn solve_edge_prunes_empty_line() {
        let f = uniform(0.0, 0.6);
        let p = IntegratorParams::new(0.3, 1.0);
        let r = solve_edge(&f, Vec2::ZERO, Vec2::new(10_000.0, 0.0), 19, &p).unwrap();
        assert_eq!(r.status(), EdgeStatus::Unreachable);
        assert_eq!(r.integrations_performed, 0);
        assert!(r.outcomes.is_empty());
    }

    #[test]
    fn solve_edge_zero_flow_goes_straight() {
        let f = uniform(0.0, 0.0);
        let p = IntegratorParams::new(0.3, 1.0);
        let q = Vec2::new(3000.0, 4000.0);
        let r = solve_edge(&f, Vec2::ZERO, q, 19, &p).unwrap();
        let best = r.best.unwrap();
        assert!((best.control - Vec2::new(0.18, 0.24)).norm() < 1e-12);
        // Straight-line time is 5000/0.3 = 16667 s, arrival counted at the eps-ball.
        let ideal = 5000.0 / 0.3;
        assert!(best.cost <= ideal && best.cost >= ideal - p.arrival_eps / 0.3 - p.dt);
    }

    #[test]
    fn ties_go_to_lowest_index() {
        let f = uniform(0.0, 0.0);
        let p = IntegratorParams::new(0.3, 1.0);
        let controls = [
            Vec2::new(0.0, 0.3),
            Vec2::new(0.3, 0.0),
            Vec2::new(0.3, 0.0),
        ];
        let r = best_of_controls(&f, &controls, Vec2::ZERO, Vec2::new(5000.0, 0.0), &p);
        assert_eq!(r.best.unwrap().index, 1);
        assert_eq!(r.outcomes[0], IntegrationStatus::LeftDomain);
    }

    #[test]
    fn params_validation() {
        let ok = IntegratorParams::new(0.3, 1.0);
        assert!(ok.validate().is_ok());
        assert_eq!(ok.arrival_eps, 337.5);
        for bad in [
            IntegratorParams { dt: 0.0, ..ok },
            IntegratorParams { horizon: 0, ..ok },
            IntegratorParams {
                arrival_eps: -1.0,
                ..ok
            },
            IntegratorParams {
                stall_speed_frac: 1.0,
                ..ok
            },
            IntegratorParams { v_max: 0.0, ..ok },
        ] {
            assert!(bad.validate().is_err());
        }
    }
}

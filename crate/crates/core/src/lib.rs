//! Time-optimal waypoint planning for slow vehicles in steady 2D currents.
//!
//! Edges of a PRM*-style roadmap are found by searching only the controls that
//! put both endpoints on one streamline of the combined current-plus-vehicle
//! flow, instead of shooting over the whole control disc.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod flowfield;
pub mod geom;
pub mod planner;
pub mod search;
pub mod shooting;

pub use flowfield::{
    advect_rk4, divergence_at, hessian_det_psi, load_grid, stream_value_along, AnalyticField,
    AnalyticKind, FlowError, FlowField, GriddedField, PathOrder,
};
pub use geom::{Domain, Vec2};
pub use planner::{
    build_roadmap, connection_radius, extract_plan, replay_plan, sample_nodes, shortest_path,
    PersistentControl, Plan, PlanError, Roadmap, GOAL, START,
};
pub use search::{
    control_line, integrate, psi_g, sample_controls, solve_edge, ControlLine, EdgeSolveResult,
    EdgeSolver, EdgeStatus, IntegrationResult, IntegrationStatus, IntegratorParams, LineClass,
    SearchError, StreamlineSolver,
};
pub use shooting::{
    sample_disc_controls, solve_edge_shooting, DiscSampling, DiscScheme, ShootingSolver,
};

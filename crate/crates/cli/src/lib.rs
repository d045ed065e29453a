//! Scenario files, plan and benchmark pipelines, and CSV export for the
//! `streamplan` command-line tool.

pub mod config;
pub mod export;
pub mod run;

pub use config::{
    build_field, load_config, parse_config, BaselineSpec, ConfigError, FieldSpec, Scenario,
    ScenarioConfig,
};
pub use export::{
    export_trajectory, export_waypoints, read_trajectory, read_waypoints, write_trajectory,
    ExportError, TrajectoryRow, WaypointRow,
};
pub use run::{
    run_advect, run_bench, run_edge, run_plan, run_plan_with, write_plan_outputs, AdvectReport,
    BenchReport, BenchRun, EdgeReport, Method, MethodAggregate, MethodReport, PlanRun, PlanSummary,
    RunError, RunStatus,
};

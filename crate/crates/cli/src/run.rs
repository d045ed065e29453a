//! Scenario pipelines behind the CLI subcommands.

use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use streamplan::{
    advect_rk4, build_roadmap, connection_radius, control_line, extract_plan, sample_nodes,
    shortest_path, EdgeSolveResult, EdgeSolver, FlowError, LineClass, Plan, PlanError, Roadmap,
    SearchError, ShootingSolver, StreamlineSolver, Vec2,
};
use thiserror::Error;

use crate::config::{ConfigError, Scenario};
use crate::export::{export_trajectory, export_waypoints, ExportError};

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Plan(#[from] PlanError),
    #[error(transparent)]
    Search(#[from] SearchError),
    #[error(transparent)]
    Flow(#[from] FlowError),
    #[error(transparent)]
    Export(#[from] ExportError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Streamline,
    Shooting,
}

impl FromStr for Method {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "streamline" => Ok(Method::Streamline),
            "shooting" => Ok(Method::Shooting),
            other => Err(format!(
                "unknown method {other:?}, expected streamline or shooting"
            )),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Streamline => "streamline",
            Method::Shooting => "shooting",
        })
    }
}

fn solver_for(scenario: &Scenario, method: Method) -> Box<dyn EdgeSolver> {
    match method {
        Method::Streamline => Box::new(StreamlineSolver {
            c: scenario.config.c,
        }),
        Method::Shooting => Box::new(ShootingSolver {
            scheme: scenario.config.baseline_scheme(),
        }),
    }
}

fn scheme_label(scenario: &Scenario, method: Method) -> String {
    match method {
        Method::Streamline => format!("line({})", scenario.config.c),
        Method::Shooting => scenario.config.baseline_scheme().describe(),
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Solved,
    NoPath,
}

/// Machine-readable result of one `plan` run.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PlanSummary {
    pub status: RunStatus,
    pub total_time_s: Option<f64>,
    pub control_changes: Option<usize>,
    pub integrations: usize,
    pub nodes: usize,
    pub edges_solved: usize,
    pub endpoint_fraction: Option<f64>,
}

impl PlanSummary {
    pub fn to_json(&self) -> Result<String, serde_json::Error> {
        let mut s = serde_json::to_string_pretty(self)?;
        s.push('\n');
        Ok(s)
    }
}

pub struct PlanRun {
    pub summary: PlanSummary,
    pub roadmap: Roadmap,
    pub plan: Option<Plan>,
}

/// Sample, build the roadmap, search it and extract the plan for one seed.
pub fn run_plan_with(
    scenario: &Scenario,
    method: Method,
    seed: u64,
    threads: usize,
) -> Result<PlanRun, RunError> {
    let cfg = &scenario.config;
    let field = scenario.field.as_ref();
    let nodes = sample_nodes(field, cfg.n, seed, scenario.start, scenario.goal)?;
    let radius = connection_radius(nodes.len(), &field.domain(), cfg.gamma, cfg.arrival_eps);
    log::info!(
        "{method}: {} nodes, connection radius {radius:.1} m",
        nodes.len()
    );
    let solver = solver_for(scenario, method);
    let roadmap = build_roadmap(
        field,
        nodes,
        radius,
        solver.as_ref(),
        &scenario.params,
        threads,
    )?;
    let plan = match shortest_path(&roadmap) {
        Ok(path) => Some(extract_plan(&roadmap, &path)?),
        Err(PlanError::NoPath) => None,
        Err(e) => return Err(e.into()),
    };
    let summary = PlanSummary {
        status: if plan.is_some() {
            RunStatus::Solved
        } else {
            RunStatus::NoPath
        },
        total_time_s: plan.as_ref().map(|p| p.total_time),
        control_changes: plan.as_ref().map(Plan::control_changes),
        integrations: roadmap.total_integrations,
        nodes: roadmap.nodes.len(),
        edges_solved: roadmap.edges.len(),
        endpoint_fraction: match method {
            Method::Streamline => roadmap.endpoint_fraction(),
            Method::Shooting => None,
        },
    };
    Ok(PlanRun {
        summary,
        roadmap,
        plan,
    })
}

/// Streamline planner with the configured seed.
pub fn run_plan(scenario: &Scenario, threads: usize) -> Result<PlanRun, RunError> {
    run_plan_with(scenario, Method::Streamline, scenario.config.seed, threads)
}

/// Writes `summary.json`, and for solved runs `trajectory.csv` and `waypoints.csv`.
pub fn write_plan_outputs(run: &PlanRun, dir: &Path) -> Result<(), RunError> {
    fs::create_dir_all(dir)?;
    fs::write(dir.join("summary.json"), run.summary.to_json()?)?;
    if let Some(plan) = &run.plan {
        export_trajectory(&dir.join("trajectory.csv"), &plan.trajectory, plan.dt)?;
        export_waypoints(&dir.join("waypoints.csv"), &plan.waypoints)?;
    }
    Ok(())
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodReport {
    pub method: Method,
    pub scheme: String,
    pub budget_per_edge: usize,
    pub status: RunStatus,
    pub cost_s: Option<f64>,
    pub control_changes: Option<usize>,
    pub integrations: usize,
    pub pairs_in_range: usize,
    pub pairs_integrated: usize,
    /// Integrations divided by pairs that were integrated at all.
    pub integrations_per_attempted_edge: Option<f64>,
    pub edges_solved: usize,
    /// Solved edges won by the first or last control-line sample.
    pub endpoint_edges: usize,
    pub endpoint_fraction: Option<f64>,
    pub wall_time_s: f64,
}

fn method_report(
    scenario: &Scenario,
    method: Method,
    seed: u64,
    threads: usize,
) -> Result<MethodReport, RunError> {
    let t0 = Instant::now();
    let run = run_plan_with(scenario, method, seed, threads)?;
    let wall_time_s = t0.elapsed().as_secs_f64();
    let r = &run.roadmap;
    let endpoint_edges = match method {
        Method::Streamline => r
            .edges
            .values()
            .filter_map(|e| e.best.as_ref().map(|b| (b.index, e.samples)))
            .filter(|&(i, n)| i == 0 || i + 1 == n)
            .count(),
        Method::Shooting => 0,
    };
    Ok(MethodReport {
        method,
        scheme: scheme_label(scenario, method),
        budget_per_edge: solver_for(scenario, method).budget(),
        status: run.summary.status,
        cost_s: run.summary.total_time_s,
        control_changes: run.summary.control_changes,
        integrations: r.total_integrations,
        pairs_in_range: r.pairs_in_range,
        pairs_integrated: r.pairs_integrated,
        integrations_per_attempted_edge: (r.pairs_integrated > 0)
            .then(|| r.total_integrations as f64 / r.pairs_integrated as f64),
        edges_solved: r.edges.len(),
        endpoint_edges,
        endpoint_fraction: run.summary.endpoint_fraction,
        wall_time_s,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRun {
    pub seed: u64,
    pub streamline: MethodReport,
    pub shooting: MethodReport,
}

impl BenchRun {
    /// Either planner found a path.
    pub fn comparable(&self) -> bool {
        self.streamline.cost_s.is_some() || self.shooting.cost_s.is_some()
    }

    /// Streamline solved and was at least as fast as the baseline (or the
    /// baseline failed).
    pub fn streamline_no_worse(&self) -> bool {
        match (self.streamline.cost_s, self.shooting.cost_s) {
            (Some(a), Some(b)) => a <= b,
            (Some(_), None) => true,
            _ => false,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MethodAggregate {
    pub solved: usize,
    pub median_cost_s: Option<f64>,
    pub total_integrations: usize,
    pub wall_time_s: f64,
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 {
        v[m]
    } else {
        0.5 * (v[m - 1] + v[m])
    })
}

fn aggregate<'a>(reports: impl Iterator<Item = &'a MethodReport>) -> MethodAggregate {
    let reports: Vec<&MethodReport> = reports.collect();
    MethodAggregate {
        solved: reports.iter().filter(|r| r.cost_s.is_some()).count(),
        median_cost_s: median(reports.iter().filter_map(|r| r.cost_s).collect()),
        total_integrations: reports.iter().map(|r| r.integrations).sum(),
        wall_time_s: reports.iter().map(|r| r.wall_time_s).sum(),
    }
}

/// Streamline planner against the shooting baseline on identical nodes.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub runs: Vec<BenchRun>,
    pub streamline: MethodAggregate,
    pub shooting: MethodAggregate,
    /// Seeds where at least one planner found a path.
    pub comparable: usize,
    pub streamline_no_worse: usize,
    /// Baseline integrations over streamline integrations.
    pub integration_ratio: Option<f64>,
    /// Pooled over all seeds.
    pub endpoint_fraction: Option<f64>,
}

impl BenchReport {
    pub fn win_fraction(&self) -> Option<f64> {
        (self.comparable > 0).then(|| self.streamline_no_worse as f64 / self.comparable as f64)
    }
}

pub fn run_bench(
    scenario: &Scenario,
    seeds: &[u64],
    threads: usize,
) -> Result<BenchReport, RunError> {
    let mut runs = Vec::with_capacity(seeds.len());
    for &seed in seeds {
        let streamline = method_report(scenario, Method::Streamline, seed, threads)?;
        let shooting = method_report(scenario, Method::Shooting, seed, threads)?;
        log::info!(
            "seed {seed}: streamline {:?} s, shooting {:?} s",
            streamline.cost_s,
            shooting.cost_s
        );
        runs.push(BenchRun {
            seed,
            streamline,
            shooting,
        });
    }
    let streamline = aggregate(runs.iter().map(|r| &r.streamline));
    let shooting = aggregate(runs.iter().map(|r| &r.shooting));
    let solved_edges: usize = runs.iter().map(|r| r.streamline.edges_solved).sum();
    let endpoint_edges: usize = runs.iter().map(|r| r.streamline.endpoint_edges).sum();
    Ok(BenchReport {
        comparable: runs.iter().filter(|r| r.comparable()).count(),
        streamline_no_worse: runs.iter().filter(|r| r.streamline_no_worse()).count(),
        integration_ratio: (streamline.total_integrations > 0)
            .then(|| shooting.total_integrations as f64 / streamline.total_integrations as f64),
        endpoint_fraction: (solved_edges > 0).then(|| endpoint_edges as f64 / solved_edges as f64),
        runs,
        streamline,
        shooting,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeReport {
    pub method: Method,
    pub scheme: String,
    pub status: RunStatus,
    pub cost_s: Option<f64>,
    pub steps: Option<usize>,
    pub best_index: Option<usize>,
    pub control: Option<Vec2>,
    pub integrations: usize,
    pub samples: usize,
    pub kappa: Option<f64>,
    pub line: Option<LineClass>,
}

/// Solves a single directed edge.
pub fn run_edge(
    scenario: &Scenario,
    p: Vec2,
    q: Vec2,
    method: Method,
) -> Result<EdgeReport, RunError> {
    let field = scenario.field.as_ref();
    let result: EdgeSolveResult =
        solver_for(scenario, method).solve(field, p, q, &scenario.params)?;
    let line = match method {
        Method::Streamline => Some(control_line(
            field,
            p,
            q,
            scenario.params.v_max,
            scenario.params.arrival_eps,
        )?),
        Method::Shooting => None,
    };
    Ok(EdgeReport {
        method,
        scheme: scheme_label(scenario, method),
        status: if result.best.is_some() {
            RunStatus::Solved
        } else {
            RunStatus::NoPath
        },
        cost_s: result.cost(),
        steps: result.best.as_ref().map(|b| b.steps),
        best_index: result.best.as_ref().map(|b| b.index),
        control: result.best.as_ref().map(|b| b.control),
        integrations: result.integrations_performed,
        samples: result.samples,
        kappa: line.as_ref().map(|l| l.kappa),
        line: line.map(|l| l.class),
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AdvectReport {
    pub start: Vec2,
    pub end: Vec2,
    pub steps: usize,
    pub dt: f64,
    /// Stream value between start and end; zero for exact advection.
    pub psi_drift: f64,
}

/// Idle RK4 advection from `p`.
pub fn run_advect(
    scenario: &Scenario,
    p: Vec2,
    steps: usize,
    dt: f64,
) -> Result<AdvectReport, RunError> {
    let field = scenario.field.as_ref();
    let traj = advect_rk4(field, p, dt, steps)?;
    let end = *traj.last().expect("advection returns the start point");
    Ok(AdvectReport {
        start: p,
        end,
        steps,
        dt,
        psi_drift: field.stream_value(p, end)?,
    })
}

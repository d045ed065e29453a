//! PRM*-style roadmap over free space with directed, flow-aware edges.
//!
//! Node 0 is the start and node 1 the goal. Every ordered pair within the
//! connection radius is handed to an [`EdgeSolver`]; pairs it cannot connect
//! are left out of the graph. Dijkstra then picks the fastest chain, and the
//! chain becomes a sequence of persistent controls.

use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeMap, BinaryHeap};
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::flowfield::FlowField;
use crate::geom::{Domain, Vec2};
use crate::search::{EdgeSolveResult, EdgeSolver, IntegratorParams, SearchError};

pub const START: usize = 0;
pub const GOAL: usize = 1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PlanError {
    #[error("{which} ({x}, {y}) is not in free space")]
    EndpointNotFree { which: &'static str, x: f64, y: f64 },
    #[error(
        "rejection sampling gave up after {attempts} attempts with {accepted} of {wanted} samples"
    )]
    MaskRejectionExhausted {
        attempts: usize,
        accepted: usize,
        wanted: usize,
    },
    #[error("goal is not reachable through the roadmap")]
    NoPath,
    #[error("path is not valid in this roadmap: {0}")]
    InvalidPath(String),
    #[error(transparent)]
    Search(#[from] SearchError),
}

/// Start, goal, then `n` uniform samples from the unmasked domain.
///
/// Deterministic for a given seed. Rejection sampling gives up after
/// `max(1000, 100 * n)` draws.
pub fn sample_nodes<F: FlowField + ?Sized>(
    field: &F,
    n: usize,
    seed: u64,
    start: Vec2,
    goal: Vec2,
) -> Result<Vec<Vec2>, PlanError> {
    for (which, p) in [("start", start), ("goal", goal)] {
        if !field.is_free(p) {
            return Err(PlanError::EndpointNotFree {
                which,
                x: p.x,
                y: p.y,
            });
        }
    }
    let domain = field.domain();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut nodes = Vec::with_capacity(n + 2);
    nodes.push(start);
    nodes.push(goal);
    let max_attempts = (100 * n).max(1000);
    let mut attempts = 0;
    while nodes.len() < n + 2 {
        if attempts == max_attempts {
            return Err(PlanError::MaskRejectionExhausted {
                attempts,
                accepted: nodes.len() - 2,
                wanted: n,
            });
        }
        attempts += 1;
        let p = Vec2::new(
            domain.x_min + rng.gen::<f64>() * domain.width(),
            domain.y_min + rng.gen::<f64>() * domain.height(),
        );
        if field.is_free(p) {
            nodes.push(p);
        }
    }
    Ok(nodes)
}

/// `gamma * sqrt(area/pi) * sqrt(ln n / n)`, never below `3 * arrival_eps`.
pub fn connection_radius(n_total: usize, domain: &Domain, gamma: f64, arrival_eps: f64) -> f64 {
    let n = n_total.max(2) as f64;
    let r = gamma * (domain.area() / PI).sqrt() * (n.ln() / n).sqrt();
    r.max(3.0 * arrival_eps)
}

/// Why a pair in range produced no edge.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EdgeFailure {
    pub from: usize,
    pub to: usize,
    pub reason: String,
}

#[derive(Clone, Debug)]
pub struct Roadmap {
    pub nodes: Vec<Vec2>,
    /// Solved directed edges only.
    pub edges: BTreeMap<(usize, usize), EdgeSolveResult>,
    pub connection_radius: f64,
    pub params: IntegratorParams,
    /// Ordered pairs within the radius.
    pub pairs_in_range: usize,
    /// Pairs for which the solver ran at least one integration.
    pub pairs_integrated: usize,
    /// Sum of `integrations_performed` over every pair in range.
    pub total_integrations: usize,
    /// Pairs whose solver returned an error (degenerate pairs and the like).
    pub failures: Vec<EdgeFailure>,
}

impl Roadmap {
    /// Empty roadmap over `nodes`, for assembling graphs by hand.
    pub fn new(nodes: Vec<Vec2>, connection_radius: f64, params: IntegratorParams) -> Self {
        Roadmap {
            nodes,
            edges: BTreeMap::new(),
            connection_radius,
            params,
            pairs_in_range: 0,
            pairs_integrated: 0,
            total_integrations: 0,
            failures: Vec::new(),
        }
    }

    /// Records a solved edge. Unreachable results are ignored.
    pub fn insert_edge(&mut self, from: usize, to: usize, result: EdgeSolveResult) {
        if result.best.is_some() {
            self.edges.insert((from, to), result);
        }
    }

    pub fn edge_steps(&self, from: usize, to: usize) -> Option<usize> {
        self.edges
            .get(&(from, to))
            .and_then(|e| e.best.as_ref())
            .map(|b| b.steps)
    }

    /// Total travel time along `path` in seconds, if every hop is an edge.
    pub fn path_cost(&self, path: &[usize]) -> Option<f64> {
        path.windows(2)
            .map(|w| self.edges.get(&(w[0], w[1])).and_then(|e| e.cost()))
            .sum()
    }

    /// Share of solved edges whose winning sample is the first or last of `samples`.
    pub fn endpoint_fraction(&self) -> Option<f64> {
        let mut solved = 0usize;
        let mut at_end = 0usize;
        for e in self.edges.values() {
            if let Some(b) = &e.best {
                solved += 1;
                if b.index == 0 || b.index + 1 == e.samples {
                    at_end += 1;
                }
            }
        }
        (solved > 0).then(|| at_end as f64 / solved as f64)
    }
}

/// Evaluates every ordered pair within `radius` with `solver`.
///
/// With `threads > 1` pairs are solved on a dedicated pool; results are merged
/// by pair index so the roadmap does not depend on scheduling.
pub fn build_roadmap(
    field: &dyn FlowField,
    nodes: Vec<Vec2>,
    radius: f64,
    solver: &dyn EdgeSolver,
    params: &IntegratorParams,
    threads: usize,
) -> Result<Roadmap, PlanError> {
    params.validate()?;
    let mut pairs = Vec::new();
    for (i, &a) in nodes.iter().enumerate() {
        for (j, &b) in nodes.iter().enumerate() {
            if i != j && a.distance(b) <= radius {
                pairs.push((i, j));
            }
        }
    }

    let solve = |&(i, j): &(usize, usize)| solver.solve(field, nodes[i], nodes[j], params);
    let results: Vec<Result<EdgeSolveResult, SearchError>> = if threads > 1 {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .map_err(|e| PlanError::Search(SearchError::InvalidParams(e.to_string())))?;
        pool.install(|| pairs.par_iter().map(solve).collect())
    } else {
        pairs.iter().map(solve).collect()
    };

    let mut roadmap = Roadmap::new(nodes, radius, *params);
    roadmap.pairs_in_range = pairs.len();
    for (&(i, j), result) in pairs.iter().zip(results) {
        match result {
            Ok(r) => {
                roadmap.total_integrations += r.integrations_performed;
                if r.integrations_performed > 0 {
                    roadmap.pairs_integrated += 1;
                }
                roadmap.insert_edge(i, j, r);
            }
            Err(e) => {
                log::debug!("edge {i}->{j} skipped: {e}");
                roadmap.failures.push(EdgeFailure {
                    from: i,
                    to: j,
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(roadmap)
}

/// Dijkstra label: total steps, hop count, then the node sequence itself.
#[derive(Clone, Debug, PartialEq, Eq)]
struct Label {
    steps: u64,
    path: Vec<usize>,
}

impl Ord for Label {
    fn cmp(&self, other: &Self) -> Ordering {
        self.steps
            .cmp(&other.steps)
            .then(self.path.len().cmp(&other.path.len()))
            .then_with(|| self.path.cmp(&other.path))
    }
}

impl PartialOrd for Label {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Fastest start-to-goal node sequence.
///
/// Edge weights are integer step counts, so equal-time paths compare exactly;
/// ties go to fewer edges, then to the lexicographically smallest sequence.
pub fn shortest_path(roadmap: &Roadmap) -> Result<Vec<usize>, PlanError> {
    let n = roadmap.nodes.len();
    if n <= GOAL {
        return Err(PlanError::NoPath);
    }
    let mut adjacency: Vec<Vec<(usize, u64)>> = vec![Vec::new(); n];
    for (&(i, j), e) in &roadmap.edges {
        if let Some(b) = &e.best {
            adjacency[i].push((j, b.steps as u64));
        }
    }

    let mut best: Vec<Option<Label>> = vec![None; n];
    let mut settled = vec![false; n];
    let mut heap = BinaryHeap::new();
    let origin = Label {
        steps: 0,
        path: vec![START],
    };
    best[START] = Some(origin.clone());
    heap.push(Reverse(origin));

    while let Some(Reverse(label)) = heap.pop() {
        let v = *label.path.last().expect("labels are never empty");
        if settled[v] {
            continue;
        }
        settled[v] = true;
        if v == GOAL {
            return Ok(label.path);
        }
        for &(w, steps) in &adjacency[v] {
            if settled[w] {
                continue;
            }
            let mut path = label.path.clone();
            path.push(w);
            let cand = Label {
                steps: label.steps + steps,
                path,
            };
            if best[w].as_ref().is_none_or(|b| cand < *b) {
                best[w] = Some(cand.clone());
                heap.push(Reverse(cand));
            }
        }
    }
    Err(PlanError::NoPath)
}

/// One constant control held for `duration` seconds.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PersistentControl {
    pub control: Vec2,
    pub duration: f64,
    pub steps: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Plan {
    pub path: Vec<usize>,
    pub waypoints: Vec<Vec2>,
    pub controls: Vec<PersistentControl>,
    pub total_time: f64,
    pub dt: f64,
    /// Stitched trajectory sampled every `dt`. Each leg starts at its waypoint,
    /// so the point at a leg boundary is the waypoint rather than the previous
    /// leg's arrival point (they differ by at most the arrival radius).
    pub trajectory: Vec<Vec2>,
}

impl Plan {
    /// Number of persistent controls; one per leg.
    pub fn control_changes(&self) -> usize {
        self.controls.len()
    }
}

/// Turns a node sequence into persistent controls and a stitched trajectory.
pub fn extract_plan(roadmap: &Roadmap, path: &[usize]) -> Result<Plan, PlanError> {
    if path.is_empty() {
        return Err(PlanError::InvalidPath("empty path".into()));
    }
    let dt = roadmap.params.dt;
    let mut controls = Vec::with_capacity(path.len().saturating_sub(1));
    let mut trajectory = vec![roadmap.nodes[path[0]]];
    for w in path.windows(2) {
        let best = roadmap
            .edges
            .get(&(w[0], w[1]))
            .and_then(|e| e.best.as_ref())
            .ok_or_else(|| PlanError::InvalidPath(format!("no edge {} -> {}", w[0], w[1])))?;
        controls.push(PersistentControl {
            control: best.control,
            duration: best.steps as f64 * dt,
            steps: best.steps,
        });
        // Each leg's trajectory starts exactly at its waypoint; it replaces the
        // previous leg's arrival point.
        trajectory.pop();
        trajectory.extend_from_slice(&best.trajectory);
    }
    Ok(Plan {
        path: path.to_vec(),
        waypoints: path.iter().map(|&i| roadmap.nodes[i]).collect(),
        total_time: controls.iter().map(|c| c.duration).sum(),
        controls,
        dt,
        trajectory,
    })
}

/// Result of re-integrating one leg of a plan from its waypoint.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReplayLeg {
    pub end: Vec2,
    /// Distance from `end` to the next waypoint.
    pub miss: f64,
    pub elapsed: f64,
}

/// Re-integrates each persistent control from its waypoint for exactly its
/// duration, with no stopping rules besides the step count.
pub fn replay_plan<F: FlowField + ?Sized>(
    field: &F,
    plan: &Plan,
    params: &IntegratorParams,
) -> Result<Vec<ReplayLeg>, PlanError> {
    let mut legs = Vec::with_capacity(plan.controls.len());
    for (leg, pc) in plan.controls.iter().enumerate() {
        let mut x = plan.waypoints[leg];
        for _ in 0..pc.steps {
            let f = field.velocity_at(x).map_err(SearchError::from)?;
            x += (f + pc.control) * params.dt;
        }
        legs.push(ReplayLeg {
            end: x,
            miss: x.distance(plan.waypoints[leg + 1]),
            elapsed: pc.steps as f64 * params.dt,
        });
    }
    Ok(legs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::flowfield::{AnalyticField, GriddedField};
    use crate::search::{EdgeBest, StreamlineSolver};

    fn synthetic_edge(steps: usize) -> EdgeSolveResult {
        EdgeSolveResult {
            best: Some(EdgeBest {
                index: 0,
                control: Vec2::ZERO,
                cost: steps as f64,
                steps,
                trajectory: vec![Vec2::ZERO; steps + 1],
            }),
            integrations_performed: 1,
            outcomes: Vec::new(),
            samples: 1,
        }
    }

    fn graph(n: usize, edges: &[(usize, usize, usize)]) -> Roadmap {
        let params = IntegratorParams {
            dt: 1.0,
            ..IntegratorParams::new(0.3, 1.0)
        };
        let mut r = Roadmap::new(vec![Vec2::ZERO; n], 1.0, params);
        for &(a, b, s) in edges {
            r.insert_edge(a, b, synthetic_edge(s));
        }
        r
    }

    #[test]
    fn prefers_cheaper_chain() {
        let r = graph(3, &[(0, 2, 5), (2, 1, 5), (0, 1, 12)]);
        assert_eq!(shortest_path(&r).unwrap(), vec![0, 2, 1]);
        assert_eq!(r.path_cost(&[0, 2, 1]), Some(10.0));
    }

    #[test]
    fn disconnected_goal() {
        let r = graph(3, &[(0, 2, 5), (1, 2, 5)]);
        assert_eq!(shortest_path(&r), Err(PlanError::NoPath));
    }

    #[test]
    fn tie_prefers_fewer_hops_then_lexicographic() {
        let r = graph(5, &[(0, 2, 4), (2, 1, 6), (0, 3, 3), (3, 4, 3), (4, 1, 4)]);
        assert_eq!(shortest_path(&r).unwrap(), vec![0, 2, 1]);
        let r = graph(4, &[(0, 3, 5), (3, 1, 5), (0, 2, 5), (2, 1, 5)]);
        assert_eq!(shortest_path(&r).unwrap(), vec![0, 2, 1]);
    }

    #[test]
    fn radius_formula_and_clamp() {
        let unit = Domain::new(0.0, 1.0, 0.0, 1.0).unwrap();
        let r = connection_radius(2, &unit, 2.0, 1e-6);
        let expected = 2.0 * (1.0 / PI).sqrt() * (2f64.ln() / 2.0).sqrt();
        assert!((r - expected).abs() < 1e-15);
        let mut prev = f64::INFINITY;
        for n in 3..500 {
            let r = connection_radius(n, &unit, 2.0, 1e-6);
            assert!(r < prev);
            prev = r;
        }
        assert_eq!(connection_radius(100, &unit, 2.0, 10.0), 30.0);
    }

    #[test]
    fn sampling_is_deterministic_and_avoids_mask() {
        let f =
            AnalyticField::uniform(0.0, 0.0, Domain::new(0.0, 100.0, 0.0, 100.0).unwrap()).unwrap();
        let s = Vec2::new(1.0, 1.0);
        let g = Vec2::new(99.0, 99.0);
        assert_eq!(sample_nodes(&f, 0, 7, s, g).unwrap(), vec![s, g]);
        let a = sample_nodes(&f, 49, 7, s, g).unwrap();
        let b = sample_nodes(&f, 49, 7, s, g).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 51);
        assert_ne!(a, sample_nodes(&f, 49, 8, s, g).unwrap());

        // Left half of a 11x11 grid is land.
        let n = 11;
        let mask: Vec<bool> = (0..n * n).map(|k| k % n < 5).collect();
        let grid = GriddedField::new(
            Vec2::ZERO,
            10.0,
            10.0,
            n,
            n,
            vec![0.0; n * n],
            vec![0.0; n * n],
            mask,
        )
        .unwrap();
        let nodes =
            sample_nodes(&grid, 100, 3, Vec2::new(80.0, 10.0), Vec2::new(90.0, 90.0)).unwrap();
        assert_eq!(nodes.len(), 102);
        assert!(nodes.iter().all(|&p| grid.is_free(p) && p.x >= 50.0));
        assert!(matches!(
            sample_nodes(&grid, 1, 3, Vec2::new(10.0, 10.0), Vec2::new(90.0, 90.0)),
            Err(PlanError::EndpointNotFree { which: "start", .. })
        ));
    }

    #[test]
    fn rejection_gives_up() {
        // Only the cell [50, 51]^2 of a 100 m square is water.
        let n = 101;
        let mut mask = vec![true; n * n];
        for (i, j) in [(50, 50), (51, 50), (50, 51), (51, 51)] {
            mask[j * n + i] = false;
        }
        let grid = GriddedField::new(
            Vec2::ZERO,
            1.0,
            1.0,
            n,
            n,
            vec![0.0; n * n],
            vec![0.0; n * n],
            mask,
        )
        .unwrap();
        let (s, g) = (Vec2::new(50.2, 50.2), Vec2::new(50.8, 50.8));
        assert_eq!(sample_nodes(&grid, 0, 1, s, g).unwrap().len(), 2);
        assert!(matches!(
            sample_nodes(&grid, 5, 1, s, g),
            Err(PlanError::MaskRejectionExhausted {
                attempts: 1000,
                wanted: 5,
                ..
            })
        ));
    }

    fn zero_flow() -> AnalyticField {
        AnalyticField::uniform(0.0, 0.0, Domain::new(0.0, 20_000.0, 0.0, 20_000.0).unwrap())
            .unwrap()
    }

    #[test]
    fn two_nodes_zero_flow() {
        let f = zero_flow();
        let params = IntegratorParams::for_field(&f, 0.3);
        let nodes = vec![Vec2::new(1000.0, 1000.0), Vec2::new(6000.0, 1000.0)];
        let r =
            build_roadmap(&f, nodes, 10_000.0, &StreamlineSolver { c: 19 }, &params, 1).unwrap();
        assert_eq!(r.edges.len(), 2);
        assert_eq!(r.edge_steps(0, 1), r.edge_steps(1, 0));
        assert_eq!(r.total_integrations, 38);
        let path = shortest_path(&r).unwrap();
        let plan = extract_plan(&r, &path).unwrap();
        assert_eq!(plan.controls.len(), 1);
        assert_eq!(plan.total_time, r.path_cost(&path).unwrap());
        assert_eq!(plan.trajectory.len(), plan.controls[0].steps + 1);
    }

    #[test]
    fn strong_crossflow_has_no_edges() {
        let f =
            AnalyticField::uniform(0.0, 0.6, Domain::new(0.0, 20_000.0, 0.0, 20_000.0).unwrap())
                .unwrap();
        let params = IntegratorParams::for_field(&f, 0.3);
        let nodes = vec![Vec2::new(1000.0, 1000.0), Vec2::new(11_000.0, 1000.0)];
        let r =
            build_roadmap(&f, nodes, 20_000.0, &StreamlineSolver { c: 19 }, &params, 1).unwrap();
        assert!(r.edges.is_empty());
        assert_eq!(r.total_integrations, 0);
        assert_eq!(shortest_path(&r), Err(PlanError::NoPath));
    }

    #[test]
    fn radius_filters_outer_pair() {
        let f = zero_flow();
        let params = IntegratorParams::for_field(&f, 0.3);
        let nodes = vec![
            Vec2::new(1000.0, 1000.0),
            Vec2::new(9000.0, 1000.0),
            Vec2::new(5000.0, 1000.0),
        ];
        let r = build_roadmap(&f, nodes, 5000.0, &StreamlineSolver { c: 5 }, &params, 1).unwrap();
        assert!(!r.edges.contains_key(&(0, 1)));
        assert!(!r.edges.contains_key(&(1, 0)));
        assert_eq!(r.pairs_in_range, 4);
        assert_eq!(shortest_path(&r).unwrap(), vec![0, 2, 1]);
        let plan = extract_plan(&r, &[0, 2, 1]).unwrap();
        assert_eq!(plan.control_changes(), 2);
        for leg in replay_plan(&f, &plan, &params).unwrap() {
            assert!(leg.miss <= params.arrival_eps);
        }
        let steps: usize = plan.controls.iter().map(|c| c.steps).sum();
        assert_eq!(plan.trajectory.len(), steps + 1);
        assert_eq!(
            plan.trajectory[plan.controls[0].steps],
            Vec2::new(5000.0, 1000.0)
        );
    }

    #[test]
    fn degenerate_pairs_are_logged_failures() {
        let f = zero_flow();
        let params = IntegratorParams::for_field(&f, 0.3);
        let nodes = vec![Vec2::new(1000.0, 1000.0), Vec2::new(1100.0, 1000.0)];
        let r = build_roadmap(&f, nodes, 5000.0, &StreamlineSolver { c: 5 }, &params, 1).unwrap();
        assert!(r.edges.is_empty());
        assert_eq!(r.failures.len(), 2);
    }

    #[test]
    fn extract_rejects_missing_edge() {
        let r = graph(3, &[(0, 2, 5)]);
        assert!(matches!(
            extract_plan(&r, &[0, 2, 1]),
            Err(PlanError::InvalidPath(_))
        ));
    }
}

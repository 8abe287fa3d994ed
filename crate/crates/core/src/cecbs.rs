//! High-level constraint-tree search.
//!
//! The root plans every agent without constraints. Nodes are expanded
//! best-first on (sum of costs, depth, insertion order); the earliest
//! conflict of a node yields two children, each adding one constraint and
//! re-planning only the constrained agent.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::conflicts::{constraints_from_conflict, first_conflict, simulation_times, Trajectory};
use crate::error::{Error, Result};
use crate::geometry::Point;
use crate::planner::{plan_smooth, AgentId, PlanResult, PlannerParams, SpaceTimeConstraint};
use crate::scenario::Scenario;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverParams {
    #[serde(flatten)]
    pub planner: PlannerParams,
    /// Cap on expanded constraint-tree nodes.
    pub max_ct_nodes: usize,
}

impl Default for SolverParams {
    fn default() -> Self {
        SolverParams {
            planner: PlannerParams::default(),
            max_ct_nodes: 500,
        }
    }
}

impl SolverParams {
    pub fn check(&self) -> Result<()> {
        if self.max_ct_nodes == 0 {
            return Err(Error::InvalidInput("max_ct_nodes must be positive".into()));
        }
        self.planner.check()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CtNode {
    pub id: u64,
    pub constraints: Vec<SpaceTimeConstraint>,
    pub paths: BTreeMap<AgentId, PlanResult>,
    pub soc: f64,
    pub depth: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Solution {
    pub paths: BTreeMap<AgentId, PlanResult>,
    pub soc: f64,
    /// Constraint-tree nodes expanded.
    pub iterations: usize,
    pub seed: u64,
    /// Seconds.
    pub wall_time: f64,
    pub params: SolverParams,
}

pub fn sum_of_costs<'a>(paths: impl IntoIterator<Item = &'a PlanResult>) -> f64 {
    paths.into_iter().map(|p| p.smooth_path.length()).sum()
}

/// Independent stream seed for one agent's plan in one tree node.
pub fn derive_seed(base: u64, node: u64, agent: AgentId) -> u64 {
    let mut z = base
        ^ node.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (u64::from(agent.0) + 1).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Open {
    node: CtNode,
    order: u64,
}

impl Open {
    fn key(&self) -> (f64, usize, u64) {
        (self.node.soc, self.node.depth, self.order)
    }
}

impl PartialEq for Open {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Open {}

impl PartialOrd for Open {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Open {
    // reversed: BinaryHeap pops the smallest key
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (self.key(), other.key());
        b.0.total_cmp(&a.0)
            .then(b.1.cmp(&a.1))
            .then(b.2.cmp(&a.2))
    }
}

struct Search<'a> {
    scenario: &'a Scenario,
    params: &'a SolverParams,
    env: crate::planner::Environment,
    spacing: f64,
}

impl Search<'_> {
    fn plan(&self, node: u64, agent: AgentId, constraints: &[SpaceTimeConstraint]) -> Result<PlanResult> {
        let spec = self.scenario.agent(agent).expect("agent from scenario");
        let own: Vec<_> = constraints.iter().filter(|c| c.agent == agent).copied().collect();
        let planner = PlannerParams {
            seed: derive_seed(self.params.planner.seed, node, agent),
            max_spacing: self.spacing,
            ..self.params.planner.clone()
        };
        plan_smooth(spec.start, spec.goal, spec.radius, spec.speed, &self.env, &own, &planner)
    }

    fn conflict(&self, node: &CtNode) -> Result<Option<crate::conflicts::Conflict>> {
        let mut trs = BTreeMap::new();
        let mut radii = BTreeMap::new();
        for a in &self.scenario.agents {
            trs.insert(a.id, Trajectory::new(node.paths[&a.id].smooth_path.clone(), a.speed)?);
            radii.insert(a.id, a.radius);
        }
        Ok(first_conflict(&trs, &radii))
    }
}

/// Runs the constraint-tree search until a conflict-free node is expanded or
/// `max_ct_nodes` nodes have been expanded.
///
/// Path spacing is capped at the smallest agent radius so that conflict
/// detection between any pair is exact.
pub fn solve(scenario: &Scenario, params: &SolverParams) -> Result<Solution> {
    let clock = Instant::now();
    scenario.validate()?;
    params.check()?;
    let r_min = scenario.agents.iter().map(|a| a.radius).fold(f64::INFINITY, f64::min);
    let search = Search {
        scenario,
        params,
        env: scenario.environment(),
        spacing: params.planner.max_spacing.min(r_min),
    };
    let radii: BTreeMap<_, _> = scenario.agents.iter().map(|a| (a.id, a.radius)).collect();
    let speeds: BTreeMap<_, _> = scenario.agents.iter().map(|a| (a.id, a.speed)).collect();

    let root_paths: BTreeMap<AgentId, PlanResult> = scenario
        .agents
        .par_iter()
        .map(|a| search.plan(0, a.id, &[]).map(|p| (a.id, p)))
        .collect::<Result<_>>()
        .map_err(|e| Error::Unsolved(format!("root planning: {e}")))?;
    let root = CtNode {
        id: 0,
        constraints: Vec::new(),
        soc: sum_of_costs(root_paths.values()),
        paths: root_paths,
        depth: 0,
    };

    let mut open = BinaryHeap::new();
    open.push(Open { node: root, order: 0 });
    let mut next_id = 1u64;
    let mut expanded = 0usize;

    while let Some(Open { node, .. }) = open.pop() {
        expanded += 1;
        let Some(conflict) = search.conflict(&node)? else {
            return Ok(Solution {
                soc: node.soc,
                paths: node.paths,
                iterations: expanded,
                seed: params.planner.seed,
                wall_time: clock.elapsed().as_secs_f64(),
                params: params.clone(),
            });
        };
        if expanded >= params.max_ct_nodes {
            break;
        }
        let (ci, cj) = constraints_from_conflict(&conflict, &radii, &speeds);
        let ids = (next_id, next_id + 1);
        next_id += 2;
        let child = |id: u64, c: SpaceTimeConstraint| -> Option<CtNode> {
            let mut constraints = node.constraints.clone();
            constraints.push(c);
            let plan = search.plan(id, c.agent, &constraints).ok()?;
            let mut paths = node.paths.clone();
            paths.insert(c.agent, plan);
            Some(CtNode {
                id,
                soc: sum_of_costs(paths.values()),
                paths,
                constraints,
                depth: node.depth + 1,
            })
        };
        let (a, b) = rayon::join(|| child(ids.0, ci), || child(ids.1, cj));
        for n in [a, b].into_iter().flatten() {
            let order = n.id;
            open.push(Open { node: n, order });
        }
    }
    Err(Error::Unsolved(format!(
        "no conflict-free node after expanding {expanded} constraint-tree nodes"
    )))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub min_pair_distance: f64,
    /// Smallest `distance − (r_i + r_j)` over agent pairs and samples.
    pub min_pair_slack: f64,
    pub min_clearance: f64,
    /// Smallest `clearance − radius` over agents and samples.
    pub min_clearance_slack: f64,
    /// Smallest interior angle of any raw path, degrees.
    pub min_raw_angle: f64,
    pub pairs_ok: bool,
    pub clearance_ok: bool,
    pub angles_ok: bool,
    /// First sampled time at which a check fails.
    pub violation_time: Option<f64>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.pairs_ok && self.clearance_ok && self.angles_ok
    }
}

const TOLERANCE: f64 = 1e-6;

/// Simulates all agents at `dt = dt_factor · r_min / v_max`, plus every
/// waypoint arrival, and checks pairwise separation, obstacle clearance and
/// raw-path angles.
pub fn validate_solution(scenario: &Scenario, solution: &Solution, dt_factor: f64) -> ValidationReport {
    let env = scenario.environment();
    let alpha = solution.params.planner.alpha_deg;
    let agents: Vec<_> = scenario
        .agents
        .iter()
        .filter_map(|a| {
            let plan = solution.paths.get(&a.id)?;
            let tr = Trajectory::new(plan.smooth_path.clone(), a.speed).ok()?;
            Some((a, tr, plan))
        })
        .collect();

    let r_min = scenario.agents.iter().map(|a| a.radius).fold(f64::INFINITY, f64::min);
    let v_max = scenario.agents.iter().map(|a| a.speed).fold(0.0, f64::max);
    let dt = (dt_factor * r_min / v_max).max(1e-9);
    let end = agents.iter().map(|(_, tr, _)| tr.arrival_time()).fold(0.0, f64::max);
    let times = simulation_times(agents.iter().map(|(_, tr, _)| tr), dt, 0.0, end);

    let mut report = ValidationReport {
        min_pair_distance: f64::INFINITY,
        min_pair_slack: f64::INFINITY,
        min_clearance: f64::INFINITY,
        min_clearance_slack: f64::INFINITY,
        min_raw_angle: 180.0,
        pairs_ok: true,
        clearance_ok: true,
        angles_ok: true,
        violation_time: None,
    };

    let mut pos: Vec<Point> = Vec::with_capacity(agents.len());
    for t in times {
        pos.clear();
        pos.extend(agents.iter().map(|(_, tr, _)| tr.position_at(t).unwrap_or(tr.path().first())));
        let mut bad = false;
        for (x, (a, _, _)) in agents.iter().enumerate() {
            let c = env.clearance(pos[x]);
            report.min_clearance = report.min_clearance.min(c);
            report.min_clearance_slack = report.min_clearance_slack.min(c - a.radius);
            if c < a.radius - TOLERANCE {
                report.clearance_ok = false;
                bad = true;
            }
            for (y, (b, _, _)) in agents.iter().enumerate().skip(x + 1) {
                let d = pos[x].dist(pos[y]);
                report.min_pair_distance = report.min_pair_distance.min(d);
                report.min_pair_slack = report.min_pair_slack.min(d - a.radius - b.radius);
                if d < a.radius + b.radius - TOLERANCE {
                    report.pairs_ok = false;
                    bad = true;
                }
            }
        }
        if bad && report.violation_time.is_none() {
            report.violation_time = Some(t);
        }
    }

    for (_, _, plan) in &agents {
        if let Some(a) = plan.raw_path.min_angle() {
            report.min_raw_angle = report.min_raw_angle.min(a);
        }
    }
    report.angles_ok = report.min_raw_angle >= alpha - 1e-9;
    report
}

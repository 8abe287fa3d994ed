//! Scenario and solution files, SVG rendering.

mod svg;

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::cecbs::{Solution, SolverParams};
use crate::conflicts::Trajectory;
use crate::error::{Error, Result};
use crate::geometry::{Point, Polyline, Rect};
use crate::planner::{AgentId, Environment, PlanResult};

pub use svg::{render_svg, write_svg};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct World {
    pub width: f64,
    pub height: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AgentSpec {
    pub id: AgentId,
    pub start: Point,
    pub goal: Point,
    pub radius: f64,
    pub speed: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scenario {
    pub world: World,
    #[serde(default)]
    pub obstacles: Vec<Rect>,
    pub agents: Vec<AgentSpec>,
    #[serde(default)]
    pub params: SolverParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
}

impl Scenario {
    pub fn environment(&self) -> Environment {
        Environment::new(self.world.width, self.world.height, self.obstacles.clone())
    }

    pub fn agent(&self, id: AgentId) -> Option<&AgentSpec> {
        self.agents.iter().find(|a| a.id == id)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    /// Checks every invariant, naming the offending field on failure.
    pub fn validate(&self) -> Result<()> {
        let positive = |v: f64| v.is_finite() && v > 0.0;
        if !positive(self.world.width) {
            return Err(Error::scenario("world.width", "must be positive"));
        }
        if !positive(self.world.height) {
            return Err(Error::scenario("world.height", "must be positive"));
        }
        for (i, r) in self.obstacles.iter().enumerate() {
            for (name, v) in [("x", r.x), ("y", r.y)] {
                if !v.is_finite() {
                    return Err(Error::scenario(format!("obstacles[{i}].{name}"), "must be finite"));
                }
            }
            for (name, v) in [("w", r.w), ("h", r.h)] {
                if !positive(v) {
                    return Err(Error::scenario(
                        format!("obstacles[{i}].{name}"),
                        format!("must be positive, got {v}"),
                    ));
                }
            }
        }
        if self.agents.is_empty() {
            return Err(Error::scenario("agents", "at least one agent is required"));
        }
        let env = self.environment();
        for (i, a) in self.agents.iter().enumerate() {
            let field = |f: &str| format!("agents[{i}].{f}");
            if !positive(a.radius) {
                return Err(Error::scenario(field("radius"), "must be positive"));
            }
            if !positive(a.speed) {
                return Err(Error::scenario(field("speed"), "must be positive"));
            }
            for (name, p) in [("start", a.start), ("goal", a.goal)] {
                if !p.is_finite() {
                    return Err(Error::scenario(field(name), "must be finite"));
                }
                let c = env.clearance(p);
                if c < a.radius {
                    return Err(Error::scenario(
                        field(name),
                        format!(
                            "agent {} at {:?} has clearance {c} < radius {}",
                            a.id, p, a.radius
                        ),
                    ));
                }
            }
            for (j, b) in self.agents[..i].iter().enumerate() {
                if a.id == b.id {
                    return Err(Error::scenario(
                        field("id"),
                        format!("agent id {} already used by agents[{j}]", a.id),
                    ));
                }
                let r_sum = a.radius + b.radius;
                for (name, pa, pb) in [("start", a.start, b.start), ("goal", a.goal, b.goal)] {
                    if pa.dist(pb) < r_sum {
                        return Err(Error::scenario(
                            field(name),
                            format!("agents {} and {} overlap at their {name}s", b.id, a.id),
                        ));
                    }
                }
            }
        }
        self.params.check()
    }
}

pub fn load_scenario(path: impl AsRef<Path>) -> Result<Scenario> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Scenario::from_json(&text)
}

pub fn save_scenario(scenario: &Scenario, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &scenario.to_json()?)
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One agent's timed smooth path in a solution file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentRecord {
    pub id: AgentId,
    pub points: Vec<Point>,
    /// Arrival time at each point.
    pub times: Vec<f64>,
    pub cost: f64,
    /// Angle-repaired path before smoothing.
    pub raw_points: Vec<Point>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolutionRecord {
    pub agents: Vec<AgentRecord>,
    pub soc: f64,
    pub ct_iterations: usize,
    /// Seconds; omitted when a run is recorded without timing.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
    pub seed: u64,
    pub params: SolverParams,
}

impl SolutionRecord {
    pub fn from_solution(scenario: &Scenario, solution: &Solution, with_timing: bool) -> Result<Self> {
        let mut agents = Vec::with_capacity(solution.paths.len());
        for (id, plan) in &solution.paths {
            let spec = scenario
                .agent(*id)
                .ok_or_else(|| Error::InvalidInput(format!("agent {id} not in scenario")))?;
            let tr = Trajectory::new(plan.smooth_path.clone(), spec.speed)?;
            agents.push(AgentRecord {
                id: *id,
                points: plan.smooth_path.points().to_vec(),
                times: tr.point_times(),
                cost: plan.cost,
                raw_points: plan.raw_path.points().to_vec(),
            });
        }
        Ok(SolutionRecord {
            agents,
            soc: solution.soc,
            ct_iterations: solution.iterations,
            wall_time: with_timing.then_some(solution.wall_time),
            seed: solution.seed,
            params: solution.params.clone(),
        })
    }

    /// Rebuilds the plans; tree statistics are not stored and come back empty.
    pub fn to_solution(&self) -> Result<Solution> {
        let mut paths = std::collections::BTreeMap::new();
        for a in &self.agents {
            let smooth = Polyline::new(a.points.iter().copied())?;
            let raw = Polyline::new(a.raw_points.iter().copied())?;
            paths.insert(
                a.id,
                PlanResult {
                    raw_path: raw,
                    smooth_path: smooth,
                    cost: a.cost,
                    nodes_used: 0,
                    replans: 0,
                    budgets: Vec::new(),
                },
            );
        }
        Ok(Solution {
            paths,
            soc: self.soc,
            iterations: self.ct_iterations,
            seed: self.seed,
            wall_time: self.wall_time.unwrap_or(0.0),
            params: self.params.clone(),
        })
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

pub fn write_solution(record: &SolutionRecord, path: impl AsRef<Path>) -> Result<()> {
    write_text(path.as_ref(), &record.to_json()?)
}

pub fn read_solution(path: impl AsRef<Path>) -> Result<SolutionRecord> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    SolutionRecord::from_json(&text)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"{
        "world": {"width": 100, "height": 50},
        "obstacles": [],
        "agents": [{"id": 0, "start": [10, 10], "goal": [90, 40], "radius": 2, "speed": 1}]
    }"#;

    fn field_of(e: Error) -> (String, String) {
        match e {
            Error::InvalidScenario { field, message } => (field, message),
            other => panic!("expected scenario error, got {other}"),
        }
    }

    #[test]
    fn minimal_file_loads() {
        let s = Scenario::from_json(MINIMAL).unwrap();
        assert_eq!(s.agents.len(), 1);
        assert_eq!(s.params, SolverParams::default());
        assert_eq!(Scenario::from_json(&s.to_json().unwrap()).unwrap(), s);
    }

    #[test]
    fn shared_start_names_both_agents() {
        let text = r#"{
            "world": {"width": 100, "height": 100},
            "agents": [
                {"id": 3, "start": [10, 10], "goal": [90, 90], "radius": 2, "speed": 1},
                {"id": 7, "start": [10, 10], "goal": [90, 10], "radius": 2, "speed": 1}
            ]
        }"#;
        let (field, message) = field_of(Scenario::from_json(text).unwrap_err());
        assert_eq!(field, "agents[1].start");
        assert!(message.contains('3') && message.contains('7'), "{message}");
    }

    #[test]
    fn negative_obstacle_width_rejected() {
        let text = r#"{
            "world": {"width": 100, "height": 100},
            "obstacles": [{"x": 40, "y": 40, "w": 10, "h": 10}, {"x": 0, "y": 0, "w": -5, "h": 3}],
            "agents": [{"id": 0, "start": [10, 90], "goal": [90, 90], "radius": 2, "speed": 1}]
        }"#;
        let (field, _) = field_of(Scenario::from_json(text).unwrap_err());
        assert_eq!(field, "obstacles[1].w");
    }

    #[test]
    fn start_inside_obstacle_rejected() {
        let text = r#"{
            "world": {"width": 100, "height": 100},
            "obstacles": [{"x": 0, "y": 0, "w": 20, "h": 20}],
            "agents": [{"id": 0, "start": [10, 10], "goal": [90, 90], "radius": 2, "speed": 1}]
        }"#;
        let (field, _) = field_of(Scenario::from_json(text).unwrap_err());
        assert_eq!(field, "agents[0].start");
    }

    #[test]
    fn malformed_json_is_a_parse_error() {
        assert!(matches!(Scenario::from_json("{ not json"), Err(Error::Json(_))));
    }

    #[test]
    fn missing_file_is_io_error() {
        assert!(matches!(load_scenario("/nonexistent/x.json"), Err(Error::Io { .. })));
    }
}

//! Constraint-aware RRT* low-level planner.
//!
//! [`plan`] grows a tree whose every edge is obstacle-free and constraint-free
//! for the timed traversal it represents. [`repair_angles`] then enforces the
//! minimum turning angle on the raw polyline, and [`plan_smooth`] wraps both
//! with B-spline smoothing and the decaying node-budget replanning loop.

mod repair;
mod rrt;
mod smooth;

use serde::{Deserialize, Serialize};

use crate::geometry::{segment_rect_distance, Point, Polyline, Rect, Segment, EPS};

pub use repair::repair_angles;
pub use rrt::{plan, plan_with_tree, RrtTree};
pub use smooth::{plan_smooth, PlanResult};

/// Identifier of an agent within a scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct AgentId(pub u32);

impl std::fmt::Display for AgentId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Static part of the planning problem: world bounds and rectangular obstacles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Environment {
    pub width: f64,
    pub height: f64,
    pub obstacles: Vec<Rect>,
}

impl Environment {
    pub fn new(width: f64, height: f64, obstacles: Vec<Rect>) -> Self {
        Environment {
            width,
            height,
            obstacles,
        }
    }

    pub fn empty(width: f64, height: f64) -> Self {
        Environment::new(width, height, Vec::new())
    }

    pub fn area(&self) -> f64 {
        self.width * self.height
    }

    /// Distance from `p` to the nearest obstacle or world boundary.
    pub fn clearance(&self, p: Point) -> f64 {
        let wall = p.x.min(p.y).min(self.width - p.x).min(self.height - p.y);
        self.obstacles
            .iter()
            .map(|r| r.dist_to_point(p))
            .fold(wall, f64::min)
    }

    /// True when a disc of `radius` swept along `seg` touches nothing static.
    pub fn segment_free(&self, seg: Segment, radius: f64) -> bool {
        let inside = |p: Point| {
            p.x >= radius - EPS
                && p.y >= radius - EPS
                && p.x <= self.width - radius + EPS
                && p.y <= self.height - radius + EPS
        };
        inside(seg.a)
            && inside(seg.b)
            && self
                .obstacles
                .iter()
                .all(|r| segment_rect_distance(seg, r) >= radius)
    }
}

/// Forbids an agent from coming within `radius` of `p` during the unsafe interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpaceTimeConstraint {
    pub agent: AgentId,
    pub p: Point,
    pub unsafe_from: f64,
    pub unsafe_to: f64,
    pub radius: f64,
}

impl SpaceTimeConstraint {
    /// Whether moving along `seg` at `speed`, starting at time `t_start`,
    /// violates this constraint.
    pub fn violated_by_segment(&self, seg: Segment, t_start: f64, speed: f64) -> bool {
        let len = seg.length();
        let w = seg.a - self.p;
        if len <= EPS {
            return w.norm() < self.radius
                && t_start >= self.unsafe_from
                && t_start <= self.unsafe_to;
        }
        let dir = (seg.b - seg.a) * (1.0 / len);
        // |w + s·dir|² < R²  ⇔  s² + 2(w·dir)s + |w|² − R² < 0
        let half_b = w.dot(dir);
        let disc = half_b * half_b - (w.dot(w) - self.radius * self.radius);
        if disc <= 0.0 {
            return false;
        }
        let root = disc.sqrt();
        let s_lo = (-half_b - root).max(0.0);
        let s_hi = (-half_b + root).min(len);
        if s_lo >= s_hi {
            return false;
        }
        let t_lo = t_start + s_lo / speed;
        let t_hi = t_start + s_hi / speed;
        t_lo <= self.unsafe_to && t_hi >= self.unsafe_from
    }

    /// Whether an agent parked at `goal` from `t_arrive` onward violates this constraint.
    pub fn violated_by_parking(&self, goal: Point, t_arrive: f64) -> bool {
        goal.dist(self.p) < self.radius && self.unsafe_to >= t_arrive
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PlannerParams {
    /// Sampling budget of the first RRT* run.
    pub eta_max: usize,
    /// Floor of the decaying budget.
    pub eta_min: usize,
    /// Minimum angle between consecutive raw-path segments, degrees.
    pub alpha_deg: f64,
    pub step_size: f64,
    pub goal_bias: f64,
    pub rewire_radius_factor: f64,
    pub goal_tolerance: f64,
    pub s_initial: f64,
    pub s_growth: f64,
    pub smoothing_attempts: usize,
    pub budget_decay: f64,
    pub max_attempts: usize,
    /// Resampling spacing of the smoothed path.
    pub max_spacing: f64,
    pub degree: usize,
    pub seed: u64,
}

impl Default for PlannerParams {
    fn default() -> Self {
        PlannerParams {
            eta_max: 3000,
            eta_min: 500,
            alpha_deg: 90.0,
            step_size: 10.0,
            goal_bias: 0.05,
            rewire_radius_factor: 3.0,
            goal_tolerance: 5.0,
            s_initial: 0.0,
            s_growth: 2.0,
            smoothing_attempts: 5,
            budget_decay: 0.8,
            max_attempts: 200,
            max_spacing: 1.0,
            degree: 3,
            seed: 0,
        }
    }
}

impl PlannerParams {
    pub fn check(&self) -> crate::Result<()> {
        let bad = |m: &str| Err(crate::Error::InvalidInput(format!("planner params: {m}")));
        if self.eta_max == 0 || self.eta_min == 0 || self.eta_min > self.eta_max {
            return bad("need 0 < eta_min <= eta_max");
        }
        if !(self.alpha_deg > 0.0 && self.alpha_deg <= 180.0) {
            return bad("alpha_deg must lie in (0, 180]");
        }
        if !(self.step_size > 0.0 && self.goal_tolerance > 0.0 && self.rewire_radius_factor > 0.0) {
            return bad("step_size, goal_tolerance and rewire_radius_factor must be positive");
        }
        if !(0.0..=1.0).contains(&self.goal_bias) {
            return bad("goal_bias must lie in [0, 1]");
        }
        if !(self.s_initial >= 0.0 && self.s_growth > 1.0) {
            return bad("need s_initial >= 0 and s_growth > 1");
        }
        if !(self.budget_decay > 0.0 && self.budget_decay < 1.0) {
            return bad("budget_decay must lie in (0, 1)");
        }
        if !(self.max_spacing > 0.0) || self.degree == 0 || self.max_attempts == 0 {
            return bad("max_spacing, degree and max_attempts must be positive");
        }
        Ok(())
    }
}

/// Checks obstacle clearance and timed constraint freedom of `path`, walking it
/// segment by segment with the accumulated length giving each segment's start time.
pub fn validate(
    path: &Polyline,
    speed: f64,
    agent_radius: f64,
    env: &Environment,
    constraints: &[SpaceTimeConstraint],
) -> bool {
    if path.len() == 1 && !env.segment_free(Segment::new(path.first(), path.first()), agent_radius)
    {
        return false;
    }
    let mut cost = 0.0;
    for seg in path.segments() {
        if !env.segment_free(seg, agent_radius) {
            return false;
        }
        let t_start = cost / speed;
        if constraints
            .iter()
            .any(|c| c.violated_by_segment(seg, t_start, speed))
        {
            return false;
        }
        cost += seg.length();
    }
    let t_arrive = cost / speed;
    !constraints
        .iter()
        .any(|c| c.violated_by_parking(path.last(), t_arrive))
}

/// Whether every interior angle of `path` is at least `alpha_deg`.
pub fn angles_ok(path: &Polyline, alpha_deg: f64) -> bool {
    path.min_angle().is_none_or(|a| a >= alpha_deg - 1e-9)
}

use rand::Rng;

use super::{validate, Environment, PlannerParams, SpaceTimeConstraint};
use crate::error::{Error, Result};
use crate::geometry::{Point, Polyline, Segment, EPS};

#[derive(Debug, Clone)]
struct Node {
    p: Point,
    parent: Option<usize>,
    /// Path length from the root.
    cost: f64,
    children: Vec<usize>,
}

/// RRT* tree rooted at the start point.
#[derive(Debug, Clone)]
pub struct RrtTree {
    nodes: Vec<Node>,
}

impl RrtTree {
    fn new(root: Point) -> Self {
        RrtTree {
            nodes: vec![Node {
                p: root,
                parent: None,
                cost: 0.0,
                children: Vec::new(),
            }],
        }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn point(&self, i: usize) -> Point {
        self.nodes[i].p
    }

    pub fn parent(&self, i: usize) -> Option<usize> {
        self.nodes[i].parent
    }

    pub fn cost(&self, i: usize) -> f64 {
        self.nodes[i].cost
    }

    /// Parent→child edges, for rendering.
    pub fn edges(&self) -> Vec<(Point, Point)> {
        self.nodes
            .iter()
            .filter_map(|n| n.parent.map(|q| (self.nodes[q].p, n.p)))
            .collect()
    }

    fn path_to(&self, mut i: usize) -> Vec<Point> {
        let mut out = vec![self.nodes[i].p];
        while let Some(q) = self.nodes[i].parent {
            out.push(self.nodes[q].p);
            i = q;
        }
        out.reverse();
        out
    }

    fn subtree(&self, root: usize) -> Vec<usize> {
        let mut out = Vec::new();
        let mut stack = vec![root];
        while let Some(i) = stack.pop() {
            out.push(i);
            stack.extend(self.nodes[i].children.iter().copied());
        }
        out
    }

    fn reparent(&mut self, child: usize, new_parent: usize, new_cost: f64) {
        if let Some(old) = self.nodes[child].parent {
            self.nodes[old].children.retain(|&c| c != child);
        }
        self.nodes[child].parent = Some(new_parent);
        self.nodes[new_parent].children.push(child);
        let delta = new_cost - self.nodes[child].cost;
        for i in self.subtree(child) {
            self.nodes[i].cost += delta;
        }
    }
}

/// Uniform bucket grid over the world for nearest and radius queries.
struct SpatialGrid {
    cell: f64,
    cols: usize,
    rows: usize,
    buckets: Vec<Vec<usize>>,
}

impl SpatialGrid {
    fn new(width: f64, height: f64, cell: f64) -> Self {
        let cols = ((width / cell).ceil() as usize).max(1);
        let rows = ((height / cell).ceil() as usize).max(1);
        SpatialGrid {
            cell,
            cols,
            rows,
            buckets: vec![Vec::new(); cols * rows],
        }
    }

    fn coords(&self, p: Point) -> (usize, usize) {
        let c = ((p.x / self.cell).floor().max(0.0) as usize).min(self.cols - 1);
        let r = ((p.y / self.cell).floor().max(0.0) as usize).min(self.rows - 1);
        (c, r)
    }

    fn insert(&mut self, p: Point, id: usize) {
        let (c, r) = self.coords(p);
        self.buckets[r * self.cols + c].push(id);
    }

    fn nearest(&self, q: Point, tree: &RrtTree) -> usize {
        let (c0, r0) = (self.coords(q).0 as isize, self.coords(q).1 as isize);
        let mut best = (f64::INFINITY, 0usize);
        let max_ring = self.cols.max(self.rows) as isize;
        for ring in 0..=max_ring {
            for r in (r0 - ring)..=(r0 + ring) {
                for c in (c0 - ring)..=(c0 + ring) {
                    let on_ring = (r - r0).abs() == ring || (c - c0).abs() == ring;
                    if !on_ring || r < 0 || c < 0 || r >= self.rows as isize || c >= self.cols as isize
                    {
                        continue;
                    }
                    for &id in &self.buckets[r as usize * self.cols + c as usize] {
                        let d = tree.point(id).dist(q);
                        // ties resolved by insertion order
                        if d < best.0 || (d == best.0 && id < best.1) {
                            best = (d, id);
                        }
                    }
                }
            }
            if best.0 <= ring as f64 * self.cell {
                break;
            }
        }
        best.1
    }

    fn within(&self, q: Point, radius: f64, tree: &RrtTree) -> Vec<usize> {
        let span = (radius / self.cell).ceil() as isize;
        let (c0, r0) = (self.coords(q).0 as isize, self.coords(q).1 as isize);
        let mut out = Vec::new();
        for r in (r0 - span).max(0)..=(r0 + span).min(self.rows as isize - 1) {
            for c in (c0 - span).max(0)..=(c0 + span).min(self.cols as isize - 1) {
                for &id in &self.buckets[r as usize * self.cols + c as usize] {
                    if tree.point(id).dist(q) <= radius {
                        out.push(id);
                    }
                }
            }
        }
        out.sort_unstable();
        out
    }
}

struct EdgeChecker<'a> {
    env: &'a Environment,
    constraints: &'a [SpaceTimeConstraint],
    radius: f64,
    speed: f64,
}

impl EdgeChecker<'_> {
    fn constraint_free(&self, seg: Segment, cost_at_start: f64) -> bool {
        let t = cost_at_start / self.speed;
        !self
            .constraints
            .iter()
            .any(|c| c.violated_by_segment(seg, t, self.speed))
    }

    fn valid(&self, seg: Segment, cost_at_start: f64) -> bool {
        self.env.segment_free(seg, self.radius) && self.constraint_free(seg, cost_at_start)
    }
}

/// Rewiring radius `min(γ·sqrt(ln n / n), factor·step)` with γ from the world area.
fn rewire_radius(n: usize, env: &Environment, params: &PlannerParams) -> f64 {
    let n = n.max(2) as f64;
    let gamma = 2.0 * 1.5f64.sqrt() * (env.area() / std::f64::consts::PI).sqrt();
    (gamma * (n.ln() / n).sqrt()).min(params.rewire_radius_factor * params.step_size)
}

/// Plans a raw polyline from `start` to `goal` with a budget of `eta` samples.
#[allow(clippy::too_many_arguments)]
pub fn plan<R: Rng>(
    start: Point,
    goal: Point,
    agent_radius: f64,
    speed: f64,
    env: &Environment,
    constraints: &[SpaceTimeConstraint],
    params: &PlannerParams,
    eta: usize,
    rng: &mut R,
) -> Result<Polyline> {
    plan_with_tree(start, goal, agent_radius, speed, env, constraints, params, eta, rng)
        .map(|(path, _)| path)
}

/// As [`plan`], also returning the grown tree.
#[allow(clippy::too_many_arguments)]
pub fn plan_with_tree<R: Rng>(
    start: Point,
    goal: Point,
    agent_radius: f64,
    speed: f64,
    env: &Environment,
    constraints: &[SpaceTimeConstraint],
    params: &PlannerParams,
    eta: usize,
    rng: &mut R,
) -> Result<(Polyline, RrtTree)> {
    if !(speed > 0.0 && agent_radius > 0.0) {
        return Err(Error::InvalidInput("speed and radius must be positive".into()));
    }
    let checker = EdgeChecker {
        env,
        constraints,
        radius: agent_radius,
        speed,
    };
    let mut tree = RrtTree::new(start);
    if env.clearance(start) < agent_radius - EPS {
        return Err(Error::PlanningFailure(format!("start {start:?} lacks clearance")));
    }
    if env.clearance(goal) < agent_radius - EPS {
        return Err(Error::PlanningFailure(format!("goal {goal:?} lacks clearance")));
    }
    if start == goal {
        let path = Polyline::new([start])?;
        return if validate(&path, speed, agent_radius, env, constraints) {
            Ok((path, tree))
        } else {
            Err(Error::PlanningFailure("start equals goal but is constrained".into()))
        };
    }

    let mut grid = SpatialGrid::new(env.width, env.height, params.step_size);
    grid.insert(start, 0);
    let (lo_x, hi_x) = (agent_radius, env.width - agent_radius);
    let (lo_y, hi_y) = (agent_radius, env.height - agent_radius);

    for _ in 0..eta {
        let sample = if rng.gen::<f64>() < params.goal_bias {
            goal
        } else {
            Point::new(rng.gen_range(lo_x..=hi_x), rng.gen_range(lo_y..=hi_y))
        };
        let nearest = grid.nearest(sample, &tree);
        let from = tree.point(nearest);
        let d = from.dist(sample);
        if d <= EPS {
            continue;
        }
        let new = if d > params.step_size {
            from + (sample - from) * (params.step_size / d)
        } else {
            sample
        };

        let radius = rewire_radius(tree.len() + 1, env, params);
        let mut near = grid.within(new, radius, &tree);
        if !near.contains(&nearest) {
            near.push(nearest);
        }

        // choose the cheapest valid parent
        let mut options: Vec<(f64, usize)> = near
            .iter()
            .map(|&i| (tree.cost(i) + tree.point(i).dist(new), i))
            .collect();
        options.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        let Some(&(new_cost, parent)) = options
            .iter()
            .find(|&&(_, i)| checker.valid(Segment::new(tree.point(i), new), tree.cost(i)))
        else {
            continue;
        };

        let id = tree.nodes.len();
        tree.nodes.push(Node {
            p: new,
            parent: Some(parent),
            cost: new_cost,
            children: Vec::new(),
        });
        tree.nodes[parent].children.push(id);
        grid.insert(new, id);

        // rewire neighbours through the new node
        for &x in &near {
            if x == parent || x == 0 {
                continue;
            }
            let via = new_cost + new.dist(tree.point(x));
            if via >= tree.cost(x) - EPS {
                continue;
            }
            let seg = Segment::new(new, tree.point(x));
            if !checker.valid(seg, new_cost) {
                continue;
            }
            if !constraints.is_empty() && !subtree_stays_valid(&tree, x, via, &checker) {
                continue;
            }
            tree.reparent(x, id, via);
        }
    }

    let mut candidates: Vec<(f64, usize)> = (0..tree.len())
        .filter(|&i| tree.point(i).dist(goal) <= params.goal_tolerance)
        .map(|i| (tree.cost(i) + tree.point(i).dist(goal), i))
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (_, i) in candidates {
        let mut pts = tree.path_to(i);
        if tree.point(i) != goal {
            if !checker.valid(Segment::new(tree.point(i), goal), tree.cost(i)) {
                continue;
            }
            pts.push(goal);
        }
        let path = Polyline::new(pts)?;
        if validate(&path, speed, agent_radius, env, constraints) {
            return Ok((path, tree));
        }
    }
    Err(Error::PlanningFailure(format!(
        "no valid path to goal within {eta} samples"
    )))
}

/// Whether moving `root` to cost `new_cost` keeps every descendant edge constraint-free.
fn subtree_stays_valid(tree: &RrtTree, root: usize, new_cost: f64, checker: &EdgeChecker) -> bool {
    let delta = new_cost - tree.cost(root);
    tree.subtree(root).into_iter().all(|i| {
        tree.nodes[i].children.iter().all(|&c| {
            let seg = Segment::new(tree.point(i), tree.point(c));
            checker.constraint_free(seg, tree.cost(i) + delta)
        })
    })
}

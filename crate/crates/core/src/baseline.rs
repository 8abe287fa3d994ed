//! Discrete CBS over a unit grid, for comparison runs.
//!
//! Agents move 4-connected or wait, one step per timestep, each step costing
//! 1 until the agent comes to rest at its goal. Body sizes are ignored.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BinaryHeap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, EPS};
use crate::planner::AgentId;
use crate::scenario::Scenario;

pub type Cell = (i32, i32);

#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    pub width: usize,
    pub height: usize,
    /// Side of one cell in world units.
    pub cell_size: f64,
    blocked: Vec<bool>,
}

impl Grid {
    pub fn new(width: usize, height: usize, cell_size: f64) -> Self {
        Grid {
            width,
            height,
            cell_size,
            blocked: vec![false; width * height],
        }
    }

    /// Builds a grid from rows of text, `#` blocked, anything else free; the
    /// first row is `y = 0`.
    pub fn from_rows(rows: &[&str]) -> Self {
        let height = rows.len();
        let width = rows.first().map_or(0, |r| r.len());
        let mut g = Grid::new(width, height, 1.0);
        for (y, row) in rows.iter().enumerate() {
            for (x, ch) in row.chars().enumerate() {
                if ch == '#' {
                    g.block((x as i32, y as i32));
                }
            }
        }
        g
    }

    pub fn in_bounds(&self, c: Cell) -> bool {
        c.0 >= 0 && c.1 >= 0 && (c.0 as usize) < self.width && (c.1 as usize) < self.height
    }

    fn index(&self, c: Cell) -> usize {
        c.1 as usize * self.width + c.0 as usize
    }

    pub fn block(&mut self, c: Cell) {
        assert!(self.in_bounds(c), "cell {c:?} out of bounds");
        let i = self.index(c);
        self.blocked[i] = true;
    }

    pub fn is_free(&self, c: Cell) -> bool {
        self.in_bounds(c) && !self.blocked[self.index(c)]
    }

    pub fn blocked_count(&self) -> usize {
        self.blocked.iter().filter(|b| **b).count()
    }

    pub fn blocked_cells(&self) -> impl Iterator<Item = Cell> + '_ {
        (0..self.height as i32)
            .flat_map(move |y| (0..self.width as i32).map(move |x| (x, y)))
            .filter(|c| !self.is_free(*c))
    }

    /// Cell containing `p`; points on the far boundary belong to the last cell.
    pub fn cell_of(&self, p: Point) -> Cell {
        let clamp = |v: f64, n: usize| ((v / self.cell_size).floor() as i32).clamp(0, n as i32 - 1);
        (clamp(p.x, self.width), clamp(p.y, self.height))
    }

    fn neighbours(&self, c: Cell) -> impl Iterator<Item = Cell> + '_ {
        [(0, 0), (1, 0), (-1, 0), (0, 1), (0, -1)]
            .into_iter()
            .map(move |(dx, dy)| (c.0 + dx, c.1 + dy))
            .filter(|n| self.is_free(*n))
    }
}

/// Cell occupied at every timestep, from 0 until the agent rests at its goal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridPath {
    pub cells: Vec<Cell>,
}

impl GridPath {
    pub fn at(&self, t: usize) -> Cell {
        self.cells[t.min(self.cells.len() - 1)]
    }

    /// Timesteps until the agent comes to rest at its final cell.
    pub fn cost(&self) -> usize {
        self.cells.len() - 1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GridConstraint {
    /// Not at `cell` at time `t`.
    Vertex { cell: Cell, t: usize },
    /// Not moving `from → to` between `t` and `t + 1`.
    Edge { from: Cell, to: Cell, t: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridAgent {
    pub id: AgentId,
    pub start: Cell,
    pub goal: Cell,
}

/// Rasterizes the world: a cell is blocked when it overlaps an obstacle with
/// positive area.
pub fn rasterize(scenario: &Scenario, cell_size: f64) -> Result<Grid> {
    if !(cell_size > 0.0) {
        return Err(Error::InvalidInput(format!("cell size must be positive, got {cell_size}")));
    }
    let cells = |extent: f64| ((extent / cell_size) - EPS).ceil().max(1.0) as usize;
    let mut grid = Grid::new(cells(scenario.world.width), cells(scenario.world.height), cell_size);
    for r in &scenario.obstacles {
        // cells i with (i·c, (i+1)·c) meeting (lo, hi) in an open interval
        let span = |lo: f64, hi: f64, n: usize| {
            let first = ((lo / cell_size + EPS).floor() as i64).max(0);
            let last = ((hi / cell_size - EPS).ceil() as i64 - 1).min(n as i64 - 1);
            first..=last
        };
        for y in span(r.y, r.y + r.h, grid.height) {
            for x in span(r.x, r.x + r.w, grid.width) {
                grid.block((x as i32, y as i32));
            }
        }
    }
    Ok(grid)
}

/// Snaps every agent's start and goal to its cell, which must be free.
pub fn grid_agents(scenario: &Scenario, grid: &Grid) -> Result<Vec<GridAgent>> {
    let mut out = Vec::new();
    for (i, a) in scenario.agents.iter().enumerate() {
        let (start, goal) = (grid.cell_of(a.start), grid.cell_of(a.goal));
        for (name, c) in [("start", start), ("goal", goal)] {
            if !grid.is_free(c) {
                return Err(Error::scenario(
                    format!("agents[{i}].{name}"),
                    format!("cell {c:?} is blocked"),
                ));
            }
        }
        out.push(GridAgent { id: a.id, start, goal });
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy)]
struct Queued {
    f: f64,
    h: f64,
    order: u64,
    state: (Cell, usize),
    t: usize,
}

struct QueuedKey(Queued);

impl PartialEq for QueuedKey {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for QueuedKey {}

impl Ord for QueuedKey {
    fn cmp(&self, other: &Self) -> Ordering {
        let (a, b) = (&self.0, &other.0);
        b.f.total_cmp(&a.f)
            .then(b.h.total_cmp(&a.h))
            .then(b.order.cmp(&a.order))
    }
}

impl PartialOrd for QueuedKey {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Constrained timesteps per cell, split into maximal safe intervals.
struct SafeIntervals {
    vertex: HashMap<Cell, Vec<usize>>,
    edge: HashSet<(Cell, Cell, usize)>,
}

impl SafeIntervals {
    fn new(constraints: &[GridConstraint]) -> Self {
        let mut vertex: HashMap<Cell, Vec<usize>> = HashMap::new();
        let mut edge = HashSet::new();
        for c in constraints {
            match *c {
                GridConstraint::Vertex { cell, t } => vertex.entry(cell).or_default().push(t),
                GridConstraint::Edge { from, to, t } => {
                    edge.insert((from, to, t));
                }
            }
        }
        for ts in vertex.values_mut() {
            ts.sort_unstable();
            ts.dedup();
        }
        SafeIntervals { vertex, edge }
    }

    /// Inclusive safe intervals of `cell`; the last one is unbounded.
    fn of(&self, cell: Cell) -> Vec<(usize, usize)> {
        let Some(ts) = self.vertex.get(&cell) else {
            return vec![(0, usize::MAX)];
        };
        let mut out = Vec::with_capacity(ts.len() + 1);
        let mut from = 0;
        for &t in ts {
            if t > from {
                out.push((from, t - 1));
            }
            from = t + 1;
        }
        out.push((from, usize::MAX));
        out
    }
}

/// Optimal single-agent path under unit-cost moves and waits, avoiding the
/// given constraints.
///
/// Searches over (cell, safe interval) states with the earliest arrival time
/// as cost, which yields the same optimum as a search over every timestep.
/// Euclidean heuristic; ties go to the smaller heuristic, then to the
/// earlier-queued state.
pub fn astar(grid: &Grid, start: Cell, goal: Cell, constraints: &[GridConstraint]) -> Result<GridPath> {
    if !grid.is_free(start) || !grid.is_free(goal) {
        return Err(Error::InvalidInput("start or goal cell is not free".into()));
    }
    let safe = SafeIntervals::new(constraints);
    let start_iv = safe.of(start);
    if start_iv[0].0 > 0 {
        return Err(Error::PlanningFailure(format!("start {start:?} constrained at t = 0")));
    }
    let h = |c: Cell| (((c.0 - goal.0).pow(2) + (c.1 - goal.1).pow(2)) as f64).sqrt();

    let mut best: Predecessors = HashMap::new();
    let mut closed: HashSet<(Cell, usize)> = HashSet::new();
    let mut open = BinaryHeap::new();
    let mut order = 0u64;
    best.insert((start, 0), (0, None));
    open.push(QueuedKey(Queued {
        f: h(start),
        h: h(start),
        order,
        state: (start, 0),
        t: 0,
    }));

    while let Some(QueuedKey(q)) = open.pop() {
        if !closed.insert(q.state) {
            continue;
        }
        let (cell, iv) = q.state;
        let intervals = safe.of(cell);
        let end = intervals[iv].1;
        if cell == goal && end == usize::MAX {
            return Ok(GridPath {
                cells: unwind(&best, q.state, q.t),
            });
        }
        for n in grid.neighbours(cell).filter(|n| *n != cell) {
            for (j, &(lo, hi)) in safe.of(n).iter().enumerate() {
                // arrive at n no earlier than one step after reaching `cell`,
                // leaving `cell` while its interval lasts
                let mut arrive = (q.t + 1).max(lo);
                while arrive <= hi
                    && arrive - 1 <= end
                    && safe.edge.contains(&(cell, n, arrive - 1))
                {
                    arrive += 1;
                }
                if arrive > hi || arrive - 1 > end {
                    continue;
                }
                let key = (n, j);
                if closed.contains(&key) || best.get(&key).is_some_and(|b| b.0 <= arrive) {
                    continue;
                }
                best.insert(key, (arrive, Some((q.state, q.t))));
                order += 1;
                open.push(QueuedKey(Queued {
                    f: arrive as f64 + h(n),
                    h: h(n),
                    order,
                    state: key,
                    t: arrive,
                }));
            }
        }
    }
    Err(Error::PlanningFailure(format!("goal {goal:?} unreachable from {start:?}")))
}

/// Best arrival and predecessor `(state, arrival)` per `(cell, interval)` state.
type Predecessors = HashMap<(Cell, usize), (usize, Option<((Cell, usize), usize)>)>;

/// Expands the chain of (state, arrival) predecessors into one cell per
/// timestep, waiting in place between arrivals.
fn unwind(
    best: &Predecessors,
    state: (Cell, usize),
    t: usize,
) -> Vec<Cell> {
    let mut cells = vec![state.0];
    let (mut cur, mut cur_t) = (state, t);
    while let Some((prev, prev_t)) = best[&cur].1 {
        // waits at prev.0 from prev_t until cur_t - 1, then the move
        for _ in prev_t..cur_t {
            cells.push(prev.0);
        }
        cur = prev;
        cur_t = prev_t;
    }
    cells.reverse();
    cells
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridSolution {
    pub paths: BTreeMap<AgentId, GridPath>,
    /// Sum of per-agent costs in timesteps.
    pub soc: usize,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GridConflict {
    Vertex { a: AgentId, b: AgentId, cell: Cell, t: usize },
    Edge { a: AgentId, b: AgentId, u: Cell, v: Cell, t: usize },
}

fn first_grid_conflict(paths: &BTreeMap<AgentId, GridPath>) -> Option<GridConflict> {
    let horizon = paths.values().map(|p| p.cells.len()).max().unwrap_or(0);
    let agents: Vec<_> = paths.iter().collect();
    for t in 0..horizon {
        for (x, (a, pa)) in agents.iter().enumerate() {
            for (b, pb) in &agents[x + 1..] {
                if pa.at(t) == pb.at(t) {
                    return Some(GridConflict::Vertex {
                        a: **a,
                        b: **b,
                        cell: pa.at(t),
                        t,
                    });
                }
                let (u, v) = (pa.at(t), pa.at(t + 1));
                if u != v && pb.at(t) == v && pb.at(t + 1) == u {
                    return Some(GridConflict::Edge {
                        a: **a,
                        b: **b,
                        u,
                        v,
                        t,
                    });
                }
            }
        }
    }
    None
}

/// Conflict-based search over vertex and swap conflicts, best-first on sum
/// of costs with insertion-order ties.
pub fn cbs_solve(grid: &Grid, agents: &[GridAgent], max_nodes: usize) -> Result<GridSolution> {
    struct Node {
        soc: usize,
        order: u64,
        constraints: BTreeMap<AgentId, Vec<GridConstraint>>,
        paths: BTreeMap<AgentId, GridPath>,
    }
    impl PartialEq for Node {
        fn eq(&self, o: &Self) -> bool {
            (self.soc, self.order) == (o.soc, o.order)
        }
    }
    impl Eq for Node {}
    impl Ord for Node {
        fn cmp(&self, o: &Self) -> Ordering {
            (o.soc, o.order).cmp(&(self.soc, self.order))
        }
    }
    impl PartialOrd for Node {
        fn partial_cmp(&self, o: &Self) -> Option<Ordering> {
            Some(self.cmp(o))
        }
    }

    for (i, a) in agents.iter().enumerate() {
        for b in &agents[..i] {
            if a.start == b.start || a.goal == b.goal {
                return Err(Error::InvalidInput(format!(
                    "agents {} and {} share a start or goal cell",
                    b.id, a.id
                )));
            }
        }
    }
    let spec: BTreeMap<AgentId, GridAgent> = agents.iter().map(|a| (a.id, *a)).collect();
    let mut paths = BTreeMap::new();
    for a in agents {
        let p = astar(grid, a.start, a.goal, &[]).map_err(|e| Error::Unsolved(e.to_string()))?;
        paths.insert(a.id, p);
    }
    let soc = |paths: &BTreeMap<AgentId, GridPath>| paths.values().map(GridPath::cost).sum();
    let mut open = BinaryHeap::new();
    open.push(Node {
        soc: soc(&paths),
        order: 0,
        constraints: BTreeMap::new(),
        paths,
    });
    let mut order = 0u64;
    let mut expanded = 0;
    while let Some(node) = open.pop() {
        expanded += 1;
        let Some(conflict) = first_grid_conflict(&node.paths) else {
            return Ok(GridSolution {
                soc: node.soc,
                paths: node.paths,
                iterations: expanded,
            });
        };
        if expanded >= max_nodes {
            break;
        }
        let branches = match conflict {
            GridConflict::Vertex { a, b, cell, t } => [
                (a, GridConstraint::Vertex { cell, t }),
                (b, GridConstraint::Vertex { cell, t }),
            ],
            GridConflict::Edge { a, b, u, v, t } => [
                (a, GridConstraint::Edge { from: u, to: v, t }),
                (b, GridConstraint::Edge { from: v, to: u, t }),
            ],
        };
        for (agent, c) in branches {
            let mut constraints = node.constraints.clone();
            let own = constraints.entry(agent).or_default();
            own.push(c);
            let a = spec[&agent];
            let Ok(p) = astar(grid, a.start, a.goal, own) else {
                continue;
            };
            let mut paths = node.paths.clone();
            paths.insert(agent, p);
            order += 1;
            open.push(Node {
                soc: soc(&paths),
                order,
                constraints,
                paths,
            });
        }
    }
    Err(Error::Unsolved(format!("no conflict-free grid solution within {max_nodes} nodes")))
}

/// Rasterizes `scenario` and solves it with grid CBS.
pub fn solve_scenario(scenario: &Scenario, cell_size: f64, max_nodes: usize) -> Result<GridSolution> {
    let grid = rasterize(scenario, cell_size)?;
    let agents = grid_agents(scenario, &grid)?;
    cbs_solve(&grid, &agents, max_nodes)
}

/// Optimal sum of costs by exhaustive search over joint states, for small
/// grids and few agents. Serves as a reference for [`cbs_solve`].
pub fn brute_force_soc(grid: &Grid, agents: &[GridAgent]) -> Option<usize> {
    // state: positions plus per-agent "resting at goal for good" flags
    type State = (Vec<Cell>, Vec<bool>);
    let n = agents.len();
    let start: State = (agents.iter().map(|a| a.start).collect(), vec![false; n]);
    let mut dist: HashMap<State, usize> = HashMap::new();
    let mut heap = BinaryHeap::new();
    dist.insert(start.clone(), 0);
    heap.push(std::cmp::Reverse((0usize, start)));
    while let Some(std::cmp::Reverse((d, (pos, done)))) = heap.pop() {
        if dist.get(&(pos.clone(), done.clone())).is_some_and(|&b| b < d) {
            continue;
        }
        if done.iter().all(|f| *f) {
            return Some(d);
        }
        let step_cost = done.iter().filter(|f| !**f).count();
        // per agent options: (next cell, finished)
        let options: Vec<Vec<(Cell, bool)>> = (0..n)
            .map(|i| {
                if done[i] {
                    return vec![(pos[i], true)];
                }
                let mut v: Vec<(Cell, bool)> = grid.neighbours(pos[i]).map(|c| (c, false)).collect();
                if pos[i] == agents[i].goal {
                    v.push((pos[i], true));
                }
                v
            })
            .collect();
        let mut idx = vec![0usize; n];
        'combos: loop {
            let next: Vec<(Cell, bool)> = (0..n).map(|i| options[i][idx[i]]).collect();
            let cells: Vec<Cell> = next.iter().map(|x| x.0).collect();
            let ok = (0..n).all(|i| {
                (i + 1..n).all(|j| {
                    cells[i] != cells[j] && !(cells[i] == pos[j] && cells[j] == pos[i] && cells[i] != pos[i])
                })
            });
            if ok {
                let flags: Vec<bool> = next.iter().map(|x| x.1).collect();
                // finishing costs nothing: the agent is already at its goal
                let cost = d + step_cost - flags.iter().zip(&done).filter(|(f, d)| **f && !**d).count();
                let s = (cells, flags);
                if dist.get(&s).is_none_or(|&b| cost < b) {
                    dist.insert(s.clone(), cost);
                    heap.push(std::cmp::Reverse((cost, s)));
                }
            }
            for i in 0..n {
                idx[i] += 1;
                if idx[i] < options[i].len() {
                    continue 'combos;
                }
                idx[i] = 0;
            }
            break;
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Rect;
    use crate::scenario::{AgentSpec, World};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn world(w: f64, h: f64, obstacles: Vec<Rect>) -> Scenario {
        Scenario {
            world: World { width: w, height: h },
            obstacles,
            agents: vec![AgentSpec {
                id: AgentId(0),
                start: Point::new(0.5, 0.5),
                goal: Point::new(w - 0.5, h - 0.5),
                radius: 0.1,
                speed: 1.0,
            }],
            params: Default::default(),
            description: None,
        }
    }

    fn agent(id: u32, start: Cell, goal: Cell) -> GridAgent {
        GridAgent {
            id: AgentId(id),
            start,
            goal,
        }
    }

    #[test]
    fn rasterize_examples() {
        let g = rasterize(&world(540., 540., vec![]), 1.0).unwrap();
        assert_eq!((g.width, g.height, g.blocked_count()), (540, 540, 0));

        let g = rasterize(&world(540., 540., vec![Rect::new(10., 10., 3., 3.)]), 1.0).unwrap();
        assert_eq!(g.blocked_count(), 9);
        assert!(g.blocked_cells().all(|(x, y)| (10..=12).contains(&x) && (10..=12).contains(&y)));

        let g = rasterize(&world(20., 20., vec![Rect::new(4.9, 7.0, 0.2, 0.01)]), 1.0).unwrap();
        let cells: Vec<_> = g.blocked_cells().collect();
        assert_eq!(cells, vec![(4, 7), (5, 7)]);

        assert!(rasterize(&world(10., 10., vec![]), 0.0).is_err());
    }

    #[test]
    fn blocked_start_cell_is_scenario_error() {
        let mut s = world(10., 10., vec![Rect::new(0.8, 0.0, 0.5, 1.0)]);
        s.agents[0].start = Point::new(0.5, 0.5);
        let g = rasterize(&s, 1.0).unwrap();
        assert!(matches!(grid_agents(&s, &g), Err(Error::InvalidScenario { .. })));
    }

    #[test]
    fn astar_examples() {
        let g = Grid::from_rows(&["..........", "##########"]);
        assert_eq!(astar(&g, (0, 0), (9, 0), &[]).unwrap().cost(), 9);
        assert_eq!(astar(&g, (3, 0), (3, 0), &[]).unwrap().cost(), 0);
        let walled = Grid::from_rows(&["..#..", "..#..", "..#.."]);
        assert!(matches!(astar(&walled, (0, 0), (4, 0), &[]), Err(Error::PlanningFailure(_))));
    }

    #[test]
    fn astar_respects_goal_constraint_after_arrival() {
        let g = Grid::from_rows(&["....."]);
        let c = [GridConstraint::Vertex { cell: (4, 0), t: 6 }];
        let p = astar(&g, (0, 0), (4, 0), &c).unwrap();
        assert_eq!(p.cost(), 7);
        assert_ne!(p.at(6), (4, 0));
    }

    /// Earliest arrival by breadth-first search over (cell, time).
    fn bfs_time(g: &Grid, s: Cell, goal: Cell, cons: &[GridConstraint], horizon: usize) -> Option<usize> {
        let forbidden_at_goal = |t: usize| {
            cons.iter()
                .any(|c| matches!(c, GridConstraint::Vertex { cell, t: tc } if *cell == goal && *tc >= t))
        };
        let mut frontier: HashSet<Cell> = [s].into();
        if cons.contains(&GridConstraint::Vertex { cell: s, t: 0 }) {
            return None;
        }
        for t in 0..=horizon {
            if frontier.contains(&goal) && !forbidden_at_goal(t) {
                return Some(t);
            }
            let mut next = HashSet::new();
            for &c in &frontier {
                for n in g.neighbours(c) {
                    let blocked = cons.contains(&GridConstraint::Vertex { cell: n, t: t + 1 })
                        || cons.contains(&GridConstraint::Edge { from: c, to: n, t });
                    if !blocked {
                        next.insert(n);
                    }
                }
            }
            frontier = next;
        }
        None
    }

    fn random_grid(rng: &mut ChaCha8Rng, w: usize, h: usize, density: f64) -> Grid {
        let mut g = Grid::new(w, h, 1.0);
        for y in 0..h as i32 {
            for x in 0..w as i32 {
                if rng.gen_bool(density) {
                    g.block((x, y));
                }
            }
        }
        g
    }

    fn random_free(rng: &mut ChaCha8Rng, g: &Grid) -> Option<Cell> {
        let free: Vec<Cell> = (0..g.height as i32)
            .flat_map(|y| (0..g.width as i32).map(move |x| (x, y)))
            .filter(|c| g.is_free(*c))
            .collect();
        (!free.is_empty()).then(|| free[rng.gen_range(0..free.len())])
    }

    #[test]
    fn astar_matches_time_bfs() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..300 {
            let (w, h) = (rng.gen_range(2..=8), rng.gen_range(2..=8));
            let g = random_grid(&mut rng, w, h, 0.25);
            let (Some(s), Some(goal)) = (random_free(&mut rng, &g), random_free(&mut rng, &g)) else {
                continue;
            };
            let cons: Vec<GridConstraint> = (0..rng.gen_range(0..=3))
                .filter_map(|_| {
                    let cell = random_free(&mut rng, &g)?;
                    let t = rng.gen_range(0..10);
                    Some(if rng.gen_bool(0.7) {
                        GridConstraint::Vertex { cell, t }
                    } else {
                        let to = g.neighbours(cell).last()?;
                        GridConstraint::Edge { from: cell, to, t }
                    })
                })
                .collect();
            let expected = bfs_time(&g, s, goal, &cons, 100);
            let path = astar(&g, s, goal, &cons).ok();
            assert_eq!(path.as_ref().map(|p| p.cost()), expected, "grid {g:?} {s:?}->{goal:?} {cons:?}");
            if let Some(p) = path {
                assert_eq!((p.at(0), p.at(p.cost())), (s, goal));
                for t in 0..p.cost() + 12 {
                    let (u, v) = (p.at(t), p.at(t + 1));
                    assert!(g.neighbours(u).any(|n| n == v));
                    assert!(!cons.contains(&GridConstraint::Vertex { cell: v, t: t + 1 }));
                    assert!(!cons.contains(&GridConstraint::Edge { from: u, to: v, t }));
                }
            }
        }
    }

    fn assert_conflict_free(sol: &GridSolution) {
        assert_eq!(first_grid_conflict(&sol.paths), None);
    }

    #[test]
    fn disjoint_corridors_solved_at_root() {
        let g = Grid::from_rows(&[".....", "#####", "....."]);
        let sol = cbs_solve(&g, &[agent(0, (0, 0), (4, 0)), agent(1, (4, 2), (0, 2))], 100).unwrap();
        assert_eq!(sol.iterations, 1);
        assert_eq!(sol.soc, 8);
    }

    #[test]
    fn crossing_at_same_step_costs_one_extra() {
        let g = Grid::new(5, 5, 1.0);
        let agents = [agent(0, (0, 2), (4, 2)), agent(1, (2, 0), (2, 4))];
        let sol = cbs_solve(&g, &agents, 1000).unwrap();
        assert_conflict_free(&sol);
        assert_eq!(sol.soc, 9);
        assert_eq!(brute_force_soc(&g, &agents), Some(9));
    }

    #[test]
    fn corridor_swap_with_pocket_matches_brute_force() {
        let g = Grid::from_rows(&[".....", "##.##"]);
        let agents = [agent(0, (0, 0), (4, 0)), agent(1, (4, 0), (0, 0))];
        let sol = cbs_solve(&g, &agents, 10_000).unwrap();
        assert_conflict_free(&sol);
        assert_eq!(Some(sol.soc), brute_force_soc(&g, &agents));
    }

    #[test]
    fn cbs_matches_brute_force_on_random_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let mut checked = 0;
        while checked < 40 {
            let (w, h) = (rng.gen_range(2..=5), rng.gen_range(1..=5));
            let g = random_grid(&mut rng, w, h, 0.2);
            let cells: Vec<Cell> = (0..4).filter_map(|_| random_free(&mut rng, &g)).collect();
            if cells.len() < 4 || cells[0] == cells[1] || cells[2] == cells[3] {
                continue;
            }
            let agents = [agent(0, cells[0], cells[2]), agent(1, cells[1], cells[3])];
            let oracle = brute_force_soc(&g, &agents);
            let got = cbs_solve(&g, &agents, 5_000);
            match oracle {
                Some(opt) => {
                    let sol = got.unwrap();
                    assert_conflict_free(&sol);
                    assert_eq!(sol.soc, opt, "{g:?} {agents:?}");
                }
                None => assert!(got.is_err()),
            }
            checked += 1;
        }
    }
}

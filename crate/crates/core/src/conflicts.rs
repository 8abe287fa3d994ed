//! Conflict detection between timed trajectories.
//!
//! Candidate conflict positions come from crossing or close segment pairs of
//! two paths. Each agent's time at its candidate position follows from
//! `t = s / v`, and a candidate becomes a conflict when one agent's time
//! falls in the other's unsafe interval and the two discs really overlap
//! while both traverse those segments. Agents park at their goal after
//! arrival and stay collision-relevant.
//!
//! Detection is exact as long as no path segment is longer than half the
//! radius sum of the pair; planners resample their output accordingly.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{closest_points, segment_intersection, Point, Polyline, Segment};
use crate::planner::{AgentId, SpaceTimeConstraint};

/// Constant-speed motion along a polyline, departing at `t0`.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    path: Polyline,
    speed: f64,
    t0: f64,
    cumlen: Vec<f64>,
}

impl Trajectory {
    pub fn new(path: Polyline, speed: f64) -> Result<Self> {
        if !(speed > 0.0) {
            return Err(Error::InvalidInput(format!("speed must be positive, got {speed}")));
        }
        let mut cumlen = Vec::with_capacity(path.len());
        let mut acc = 0.0;
        cumlen.push(0.0);
        for s in path.segments() {
            acc += s.length();
            cumlen.push(acc);
        }
        Ok(Trajectory {
            path,
            speed,
            t0: 0.0,
            cumlen,
        })
    }

    pub fn path(&self) -> &Polyline {
        &self.path
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn departure(&self) -> f64 {
        self.t0
    }

    pub fn length(&self) -> f64 {
        self.cumlen[self.cumlen.len() - 1]
    }

    pub fn arrival_time(&self) -> f64 {
        self.t0 + self.length() / self.speed
    }

    /// Arrival time at every path point.
    pub fn point_times(&self) -> Vec<f64> {
        self.cumlen.iter().map(|s| self.t0 + s / self.speed).collect()
    }

    /// Position at time `t`; the agent stays at its last point after arrival.
    pub fn position_at(&self, t: f64) -> Result<Point> {
        if t < self.t0 {
            return Err(Error::Domain(format!("time {t} precedes departure {}", self.t0)));
        }
        let s = self.speed * (t - self.t0);
        if s >= self.length() {
            return Ok(self.path.last());
        }
        let k = self.cumlen.partition_point(|&c| c <= s) - 1;
        let pts = self.path.points();
        let seg_len = self.cumlen[k + 1] - self.cumlen[k];
        Ok(pts[k].lerp(pts[k + 1], (s - self.cumlen[k]) / seg_len))
    }

    /// Time to reach the point `offset` along segment `point_index`.
    pub fn time_to_reach(&self, point_index: usize, offset: f64) -> f64 {
        self.t0 + (self.cumlen[point_index] + offset) / self.speed
    }

    fn segment(&self, k: usize) -> Segment {
        let pts = self.path.points();
        Segment::new(pts[k], pts[k + 1])
    }

    fn segment_window(&self, k: usize) -> (f64, f64) {
        (self.time_to_reach(k, 0.0), self.time_to_reach(k + 1, 0.0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Conflict {
    pub agent_i: AgentId,
    pub t_i: f64,
    pub agent_j: AgentId,
    pub t_j: f64,
    pub p_i: Point,
    pub p_j: Point,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UnsafeInterval {
    pub from: f64,
    pub to: f64,
}

impl UnsafeInterval {
    pub fn contains(&self, t: f64) -> bool {
        t >= self.from && t <= self.to
    }
}

/// `[t − r_sum/v, t + r_sum/v]`, clamped below at zero.
pub fn unsafe_interval(t: f64, r_sum: f64, v: f64) -> UnsafeInterval {
    let half = r_sum / v;
    UnsafeInterval {
        from: (t - half).max(0.0),
        to: t + half,
    }
}

#[derive(Debug, Clone, Copy)]
struct ClosePair {
    seg_i: usize,
    seg_j: usize,
    p_i: Point,
    p_j: Point,
}

fn close_pairs(path_i: &Polyline, path_j: &Polyline, r_sum: f64) -> Vec<ClosePair> {
    let mut out = Vec::new();
    for (ki, si) in path_i.segments().enumerate() {
        for (kj, sj) in path_j.segments().enumerate() {
            if let Some(x) = segment_intersection(si, sj) {
                out.push(ClosePair {
                    seg_i: ki,
                    seg_j: kj,
                    p_i: x,
                    p_j: x,
                });
                continue;
            }
            let (a, b, d) = closest_points(si, sj);
            if d < r_sum {
                out.push(ClosePair {
                    seg_i: ki,
                    seg_j: kj,
                    p_i: a,
                    p_j: b,
                });
            }
        }
    }
    out
}

/// Crossing points and closest-point pairs closer than `r_sum`, ordered by
/// (segment of `path_i`, segment of `path_j`).
pub fn crossing_close_traj(
    path_i: &Polyline,
    path_j: &Polyline,
    r_sum: f64,
) -> (bool, Vec<(Point, Point)>) {
    let pairs: Vec<(Point, Point)> = close_pairs(path_i, path_j, r_sum)
        .into_iter()
        .map(|c| (c.p_i, c.p_j))
        .collect();
    (!pairs.is_empty(), pairs)
}

/// A piece of timed motion: linear from `a` at `t_lo` with velocity `vel`,
/// valid until `t_hi` (possibly infinite for a parked agent).
#[derive(Debug, Clone, Copy)]
struct Motion {
    a: Point,
    t_lo: f64,
    t_hi: f64,
    vel: Point,
}

impl Motion {
    fn along(tr: &Trajectory, k: usize) -> Self {
        let seg = tr.segment(k);
        let (t_lo, t_hi) = tr.segment_window(k);
        let len = seg.length();
        Motion {
            a: seg.a,
            t_lo,
            t_hi,
            vel: (seg.b - seg.a) * (tr.speed / len),
        }
    }

    fn parked(tr: &Trajectory) -> Self {
        Motion {
            a: tr.path.last(),
            t_lo: tr.arrival_time(),
            t_hi: f64::INFINITY,
            vel: Point::default(),
        }
    }
}

/// Whether the two discs overlap at some instant within `window` while both
/// motions are active.
fn motions_overlap(m_i: &Motion, m_j: &Motion, r_sum: f64, window: (f64, f64)) -> bool {
    let lo = m_i.t_lo.max(m_j.t_lo).max(window.0);
    let hi = m_i.t_hi.min(m_j.t_hi).min(window.1);
    if lo > hi {
        return false;
    }
    // relative position c + w·t
    let c = (m_i.a - m_i.vel * m_i.t_lo) - (m_j.a - m_j.vel * m_j.t_lo);
    let w = m_i.vel - m_j.vel;
    let ww = w.dot(w);
    let t = if ww == 0.0 {
        lo
    } else {
        (-c.dot(w) / ww).clamp(lo, hi)
    };
    let t = if t.is_finite() { t } else { lo };
    (c + w * t).norm() < r_sum
}

/// When either time lies in the other agent's unsafe interval, the hull of
/// both intervals (they share that time, so the hull is their union).
fn times_too_close(t_i: f64, v_i: f64, t_j: f64, v_j: f64, r_sum: f64) -> Option<(f64, f64)> {
    let (ui, uj) = (unsafe_interval(t_i, r_sum, v_i), unsafe_interval(t_j, r_sum, v_j));
    (uj.contains(t_i) || ui.contains(t_j)).then(|| (ui.from.min(uj.from), ui.to.max(uj.to)))
}

fn pair_conflicts(
    (ai, tr_i): (AgentId, &Trajectory),
    (aj, tr_j): (AgentId, &Trajectory),
    r_sum: f64,
) -> Vec<Conflict> {
    let mut out = Vec::new();
    let (vi, vj) = (tr_i.speed, tr_j.speed);
    let mut push = |t_i: f64, t_j: f64, p_i: Point, p_j: Point| {
        out.push(Conflict {
            agent_i: ai,
            t_i,
            agent_j: aj,
            t_j,
            p_i,
            p_j,
        })
    };

    for c in close_pairs(&tr_i.path, &tr_j.path, r_sum) {
        let off_i = c.p_i.dist(tr_i.path.points()[c.seg_i]);
        let off_j = c.p_j.dist(tr_j.path.points()[c.seg_j]);
        let t_i = tr_i.time_to_reach(c.seg_i, off_i);
        let t_j = tr_j.time_to_reach(c.seg_j, off_j);
        let overlap = times_too_close(t_i, vi, t_j, vj, r_sum).is_some_and(|w| {
            motions_overlap(
                &Motion::along(tr_i, c.seg_i),
                &Motion::along(tr_j, c.seg_j),
                r_sum,
                w,
            )
        });
        if overlap {
            push(t_i, t_j, c.p_i, c.p_j);
        }
    }

    // parked agent against the other's moving segments
    let parked = |tr_park: &Trajectory, tr_move: &Trajectory| {
        let goal = tr_park.path.last();
        let arrive = tr_park.arrival_time();
        let mut hits = Vec::new();
        for k in 0..tr_move.path.len().saturating_sub(1) {
            let seg = tr_move.segment(k);
            let q = seg.closest_to(goal);
            if q.dist(goal) >= r_sum {
                continue;
            }
            let t_move = tr_move.time_to_reach(k, q.dist(seg.a));
            let t_park = arrive.max(t_move);
            let overlap = times_too_close(t_park, tr_park.speed, t_move, tr_move.speed, r_sum)
                .is_some_and(|w| {
                    motions_overlap(&Motion::parked(tr_park), &Motion::along(tr_move, k), r_sum, w)
                });
            if overlap {
                hits.push((t_park, t_move, goal, q));
            }
        }
        hits
    };
    for (t_i, t_j, p_i, p_j) in parked(tr_i, tr_j) {
        push(t_i, t_j, p_i, p_j);
    }
    for (t_j, t_i, p_j, p_i) in parked(tr_j, tr_i) {
        push(t_i, t_j, p_i, p_j);
    }
    let (gi, gj) = (tr_i.path.last(), tr_j.path.last());
    if gi.dist(gj) < r_sum {
        let t = tr_i.arrival_time().max(tr_j.arrival_time());
        push(t, t, gi, gj);
    }
    out
}

/// The conflict with the earliest agent time over all agent pairs, ties
/// broken by agent ids and then `t_i`.
pub fn first_conflict(
    trajectories: &BTreeMap<AgentId, Trajectory>,
    radii: &BTreeMap<AgentId, f64>,
) -> Option<Conflict> {
    let agents: Vec<(AgentId, &Trajectory)> = trajectories.iter().map(|(a, t)| (*a, t)).collect();
    let mut best: Option<Conflict> = None;
    for (x, &(ai, tr_i)) in agents.iter().enumerate() {
        for &(aj, tr_j) in &agents[x + 1..] {
            let r_sum = radii[&ai] + radii[&aj];
            for c in pair_conflicts((ai, tr_i), (aj, tr_j), r_sum) {
                let key = |c: &Conflict| (c.t_i.min(c.t_j), c.agent_i, c.agent_j, c.t_i);
                let better = match &best {
                    None => true,
                    Some(b) => {
                        let (kc, kb) = (key(&c), key(b));
                        kc.0.total_cmp(&kb.0)
                            .then(kc.1.cmp(&kb.1))
                            .then(kc.2.cmp(&kb.2))
                            .then(kc.3.total_cmp(&kb.3))
                            .is_lt()
                    }
                };
                if better {
                    best = Some(c);
                }
            }
        }
    }
    best
}

/// One constraint per conflicting agent: stay `r_i + r_j` away from its
/// conflict position during its own unsafe interval.
pub fn constraints_from_conflict(
    c: &Conflict,
    radii: &BTreeMap<AgentId, f64>,
    speeds: &BTreeMap<AgentId, f64>,
) -> (SpaceTimeConstraint, SpaceTimeConstraint) {
    let r_sum = radii[&c.agent_i] + radii[&c.agent_j];
    let make = |agent: AgentId, p: Point, t: f64| {
        let iv = unsafe_interval(t, r_sum, speeds[&agent]);
        SpaceTimeConstraint {
            agent,
            p,
            unsafe_from: iv.from,
            unsafe_to: iv.to,
            radius: r_sum,
        }
    };
    (
        make(c.agent_i, c.p_i, c.t_i),
        make(c.agent_j, c.p_j, c.t_j),
    )
}

/// Simulation instants in `[lo, hi]`: every multiple of `dt` plus each
/// waypoint arrival of the given trajectories, where velocities change.
pub fn simulation_times<'a>(
    trajectories: impl IntoIterator<Item = &'a Trajectory>,
    dt: f64,
    lo: f64,
    hi: f64,
) -> Vec<f64> {
    let steps = ((hi - lo) / dt).ceil() as usize;
    let mut ts: Vec<f64> = (0..=steps).map(|k| (lo + k as f64 * dt).min(hi)).collect();
    for tr in trajectories {
        ts.extend(tr.point_times().into_iter().filter(|t| (lo..=hi).contains(t)));
    }
    ts.sort_by(f64::total_cmp);
    ts.dedup();
    ts
}

/// Smallest center distance of two trajectories over the simulation
/// instants from 0 until both have arrived, with the time it occurs.
pub fn sampled_min_distance(a: &Trajectory, b: &Trajectory, dt: f64) -> (f64, f64) {
    let end = a.arrival_time().max(b.arrival_time());
    let mut best = (f64::INFINITY, 0.0);
    for t in simulation_times([a, b], dt, 0.0, end) {
        let d = a.position_at(t).unwrap_or(a.path.first())
            .dist(b.position_at(t).unwrap_or(b.path.first()));
        if d < best.0 {
            best = (d, t);
        }
    }
    best
}

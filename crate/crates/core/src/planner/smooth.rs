use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{angles_ok, plan, repair_angles, validate, Environment, PlannerParams, SpaceTimeConstraint};
use crate::bspline::{fit_smoothing, resample_arclength, SmoothingParams};
use crate::error::{Error, Result};
use crate::geometry::{Point, Polyline};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanResult {
    /// Angle-feasible path before smoothing.
    pub raw_path: Polyline,
    /// Smoothed and resampled path the agent follows.
    pub smooth_path: Polyline,
    pub cost: f64,
    pub nodes_used: usize,
    pub replans: usize,
    /// Sampling budget of every attempt, in order.
    pub budgets: Vec<usize>,
}

/// First nonzero smoothing budget when escalating from `s = 0`: a small
/// fraction of the squared segment lengths of the raw path.
fn smoothing_floor(raw: &Polyline) -> f64 {
    let sq: f64 = raw.segments().map(|s| s.length().powi(2)).sum();
    (0.01 * sq).max(1e-12)
}

/// Plans, repairs and smooths a path, replanning with a decaying node budget
/// until a smooth path passes validation or `max_attempts` is exhausted.
pub fn plan_smooth(
    start: Point,
    goal: Point,
    agent_radius: f64,
    speed: f64,
    env: &Environment,
    constraints: &[SpaceTimeConstraint],
    params: &PlannerParams,
) -> Result<PlanResult> {
    params.check()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let mut eta = params.eta_max;
    let mut budgets = Vec::new();

    // Being at the start at t = 0 or parked at the goal forever cannot be planned around.
    let at_start = Polyline::new([start])?;
    if !validate(&at_start, speed, agent_radius, env, &constraints_at_time_zero(constraints)) {
        return Err(Error::PlanningFailure(format!(
            "start {start:?} is constrained at time 0"
        )));
    }

    for attempt in 0..params.max_attempts {
        budgets.push(eta);
        let raw = plan(start, goal, agent_radius, speed, env, constraints, params, eta, &mut rng)
            .and_then(|p| repair_angles(&p, params.alpha_deg, agent_radius, env, constraints, speed));
        if let Ok(raw) = raw {
            let mut s = params.s_initial;
            for _ in 0..params.smoothing_attempts {
                let sp = SmoothingParams {
                    degree: params.degree,
                    s,
                    max_spacing: params.max_spacing,
                };
                let smooth = if raw.len() >= 2 {
                    fit_smoothing(&raw, &sp).map(|c| resample_arclength(&c, params.max_spacing))?
                } else {
                    raw.clone()
                };
                if validate(&smooth, speed, agent_radius, env, constraints)
                    && angles_ok(&smooth, params.alpha_deg)
                {
                    return Ok(PlanResult {
                        cost: smooth.length(),
                        raw_path: raw,
                        smooth_path: smooth,
                        nodes_used: eta,
                        replans: attempt,
                        budgets,
                    });
                }
                s = if s == 0.0 {
                    smoothing_floor(&raw)
                } else {
                    s * params.s_growth
                };
            }
        }
        eta = next_budget(eta, params);
    }
    Err(Error::PlanningFailure(format!(
        "no valid smooth path after {} attempts",
        params.max_attempts
    )))
}

/// `max(eta_min, ⌈decay·eta⌉)`.
pub(crate) fn next_budget(eta: usize, params: &PlannerParams) -> usize {
    ((eta as f64 * params.budget_decay).ceil() as usize)
        .min(eta)
        .max(params.eta_min)
}

fn constraints_at_time_zero(constraints: &[SpaceTimeConstraint]) -> Vec<SpaceTimeConstraint> {
    constraints
        .iter()
        .filter(|c| c.unsafe_from <= 0.0)
        .map(|c| SpaceTimeConstraint {
            unsafe_from: 0.0,
            unsafe_to: 0.0,
            ..*c
        })
        .collect()
}

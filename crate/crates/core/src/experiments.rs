//! Seeded benchmark sweeps producing CSV tables.
//!
//! Every row is reproducible from (scenario, parameter value, seed). Runs
//! execute in parallel; rows come back in input order. Failed runs are kept
//! as rows with empty metrics and a reason code.

use rayon::prelude::*;
use serde::Serialize;

use crate::baseline;
use crate::cecbs::{solve, Solution, SolverParams};
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// Outcome of one seeded solve.
#[derive(Debug, Clone, PartialEq)]
pub struct Run {
    /// Swept parameter value.
    pub value: f64,
    pub seed: u64,
    pub outcome: std::result::Result<RunMetrics, String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunMetrics {
    pub soc: f64,
    pub mean_cost: f64,
    pub ct_iterations: usize,
    pub ms: f64,
    pub solution: Solution,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    /// Name of the swept column.
    pub param: String,
    pub runs: Vec<Run>,
}

#[derive(Serialize)]
struct CsvRow<'a> {
    value: f64,
    seed: u64,
    soc: Option<f64>,
    mean_cost: Option<f64>,
    ct_iterations: Option<usize>,
    ms: Option<f64>,
    failed: bool,
    reason: &'a str,
}

impl Table {
    /// Values in first-seen order.
    pub fn values(&self) -> Vec<f64> {
        let mut out: Vec<f64> = Vec::new();
        for r in &self.runs {
            if !out.contains(&r.value) {
                out.push(r.value);
            }
        }
        out
    }

    fn successes(&self, value: f64) -> impl Iterator<Item = &RunMetrics> {
        self.runs
            .iter()
            .filter(move |r| r.value == value)
            .filter_map(|r| r.outcome.as_ref().ok())
    }

    pub fn mean_soc(&self, value: f64) -> Option<f64> {
        mean(self.successes(value).map(|m| m.soc))
    }

    pub fn mean_ct_iterations(&self, value: f64) -> Option<f64> {
        mean(self.successes(value).map(|m| m.ct_iterations as f64))
    }

    pub fn failures(&self, value: f64) -> usize {
        self.runs
            .iter()
            .filter(|r| r.value == value && r.outcome.is_err())
            .count()
    }

    /// CSV with columns `<param>, seed, soc, mean_cost, ct_iterations, ms,
    /// failed, reason`. Without timing the `ms` cells stay empty, making the
    /// output a pure function of the inputs.
    pub fn to_csv(&self, with_timing: bool) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            self.param.as_str(),
            "seed",
            "soc",
            "mean_cost",
            "ct_iterations",
            "ms",
            "failed",
            "reason",
        ])
        .map_err(csv_error)?;
        let mut body = csv::WriterBuilder::new()
            .has_headers(false)
            .from_writer(Vec::new());
        for r in &self.runs {
            let row = match &r.outcome {
                Ok(m) => CsvRow {
                    value: r.value,
                    seed: r.seed,
                    soc: Some(m.soc),
                    mean_cost: Some(m.mean_cost),
                    ct_iterations: Some(m.ct_iterations),
                    ms: with_timing.then_some(m.ms),
                    failed: false,
                    reason: "",
                },
                Err(reason) => CsvRow {
                    value: r.value,
                    seed: r.seed,
                    soc: None,
                    mean_cost: None,
                    ct_iterations: None,
                    ms: None,
                    failed: true,
                    reason,
                },
            };
            body.serialize(row).map_err(csv_error)?;
        }
        let mut out = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        out.extend(body.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?);
        String::from_utf8(out).map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

fn csv_error(e: csv::Error) -> Error {
    Error::InvalidInput(format!("csv: {e}"))
}

fn mean(xs: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    (n > 0).then(|| sum / n as f64)
}

/// Short machine-readable reason for a failed run.
pub fn reason_code(e: &Error) -> &'static str {
    match e {
        Error::Unsolved(_) | Error::PlanningFailure(_) => "unsolved",
        Error::InvalidScenario { .. } => "invalid_scenario",
        Error::InvalidInput(_) | Error::InvalidGeometry(_) | Error::Domain(_) => "invalid_input",
        Error::Io { .. } | Error::Json(_) => "io",
    }
}

/// Seeds `base_seed, base_seed + 1, …` for `iterations` runs.
fn seeds(base_seed: u64, iterations: usize) -> impl Iterator<Item = u64> + Clone {
    (0..iterations as u64).map(move |k| base_seed.wrapping_add(k))
}

fn run_one(scenario: &Scenario, params: &SolverParams, value: f64, seed: u64) -> Run {
    let params = SolverParams {
        planner: crate::planner::PlannerParams {
            seed,
            ..params.planner.clone()
        },
        ..params.clone()
    };
    let outcome = solve(scenario, &params)
        .map(|s| RunMetrics {
            soc: s.soc,
            mean_cost: s.soc / scenario.agents.len() as f64,
            ct_iterations: s.iterations,
            ms: s.wall_time * 1e3,
            solution: s,
        })
        .map_err(|e| reason_code(&e).to_string());
    Run { value, seed, outcome }
}

fn sweep<V: Copy + Sync>(
    param: &str,
    values: &[V],
    iterations: usize,
    base_seed: u64,
    setup: impl Fn(V) -> (std::result::Result<Scenario, String>, SolverParams, f64) + Sync,
) -> Table {
    let jobs: Vec<(V, u64)> = values
        .iter()
        .flat_map(|v| seeds(base_seed, iterations).map(move |s| (*v, s)))
        .collect();
    let runs = jobs
        .par_iter()
        .map(|&(v, seed)| {
            let (scenario, params, value) = setup(v);
            match scenario {
                Ok(s) => run_one(&s, &params, value, seed),
                Err(reason) => Run {
                    value,
                    seed,
                    outcome: Err(reason),
                },
            }
        })
        .collect();
    Table {
        param: param.to_string(),
        runs,
    }
}

/// Solves `scenario` `iterations` times per node budget `eta_max`.
pub fn sweep_eta_max(scenario: &Scenario, values: &[usize], iterations: usize, base_seed: u64) -> Table {
    sweep("eta_max", values, iterations, base_seed, |eta| {
        let mut params = scenario.params.clone();
        params.planner.eta_max = eta;
        params.planner.eta_min = params.planner.eta_min.min(eta);
        (Ok(scenario.clone()), params, eta as f64)
    })
}

/// Solves `scenario` `iterations` times per agent radius, applied to every agent.
pub fn sweep_radius(scenario: &Scenario, values: &[f64], iterations: usize, base_seed: u64) -> Table {
    sweep("r", values, iterations, base_seed, |r| {
        let mut s = scenario.clone();
        for a in &mut s.agents {
            a.radius = r;
        }
        let checked = s.validate().map(|_| s).map_err(|e| reason_code(&e).to_string());
        (checked, scenario.params.clone(), r)
    })
}

/// Solves `scenario` `iterations` times with its own parameters.
pub fn repeat(scenario: &Scenario, iterations: usize, base_seed: u64) -> Table {
    sweep("run", &[0usize], iterations, base_seed, |_| {
        (Ok(scenario.clone()), scenario.params.clone(), 0.0)
    })
}

/// Default node cap for the discrete solver.
pub const GRID_MAX_NODES: usize = 20_000;

#[derive(Debug, Clone, PartialEq)]
pub struct Comparison {
    /// Discrete sum of costs converted to world units.
    pub discrete_soc: std::result::Result<f64, String>,
    pub continuous: Table,
}

impl Comparison {
    pub fn mean_continuous_soc(&self) -> Option<f64> {
        self.continuous.mean_soc(0.0)
    }

    /// Continuous mean over discrete soc.
    pub fn ratio(&self) -> Option<f64> {
        Some(self.mean_continuous_soc()? / *self.discrete_soc.as_ref().ok()?)
    }

    /// CSV with a leading `discrete` row followed by one `cecbs` row per seed.
    pub fn to_csv(&self, with_timing: bool) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let rec = |w: &mut csv::Writer<Vec<u8>>, fields: [String; 8]| {
            w.write_record(&fields).map_err(csv_error)
        };
        rec(
            &mut w,
            ["method", "seed", "soc", "mean_cost", "ct_iterations", "ms", "failed", "reason"]
                .map(String::from),
        )?;
        let s = String::new;
        match &self.discrete_soc {
            Ok(soc) => rec(
                &mut w,
                ["discrete".into(), s(), soc.to_string(), s(), s(), s(), "false".into(), s()],
            )?,
            Err(reason) => rec(
                &mut w,
                ["discrete".into(), s(), s(), s(), s(), s(), "true".into(), reason.clone()],
            )?,
        }
        for r in &self.continuous.runs {
            let fields = match &r.outcome {
                Ok(m) => [
                    "cecbs".into(),
                    r.seed.to_string(),
                    m.soc.to_string(),
                    m.mean_cost.to_string(),
                    m.ct_iterations.to_string(),
                    if with_timing { m.ms.to_string() } else { s() },
                    "false".into(),
                    s(),
                ],
                Err(reason) => [
                    "cecbs".into(),
                    r.seed.to_string(),
                    s(),
                    s(),
                    s(),
                    s(),
                    "true".into(),
                    reason.clone(),
                ],
            };
            rec(&mut w, fields)?;
        }
        let out = w.into_inner().map_err(|e| Error::InvalidInput(e.to_string()))?;
        String::from_utf8(out).map_err(|e| Error::InvalidInput(e.to_string()))
    }
}

/// Runs the grid baseline once on the rasterized map and CE-CBS
/// `iterations` times.
pub fn compare_discrete(scenario: &Scenario, cell_size: f64, iterations: usize, base_seed: u64) -> Comparison {
    let discrete_soc = baseline::solve_scenario(scenario, cell_size, GRID_MAX_NODES)
        .map(|g| g.soc as f64 * cell_size)
        .map_err(|e| reason_code(&e).to_string());
    Comparison {
        discrete_soc,
        continuous: repeat(scenario, iterations, base_seed),
    }
}

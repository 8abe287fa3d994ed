use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use cecbs::baseline;
use cecbs::cecbs::{solve, validate_solution};
use cecbs::experiments::{compare_discrete, sweep_eta_max, sweep_radius, GRID_MAX_NODES};
use cecbs::scenario::{load_scenario, read_solution, write_solution, write_svg, SolutionRecord};
use cecbs::Error;

/// Multi-agent path finding for disc agents in continuous 2D worlds.
#[derive(Parser)]
#[command(name = "cecbs", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve a scenario and optionally write the solution and an SVG.
    Solve(SolveArgs),
    /// Check a solution file by dense-time simulation.
    Validate {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        solution: PathBuf,
        #[arg(long, default_value_t = 0.05)]
        dt_factor: f64,
    },
    /// Solve the rasterized scenario with grid CBS.
    Baseline {
        #[arg(long)]
        scenario: PathBuf,
        #[arg(long)]
        cell_size: f64,
    },
    /// Run a seeded sweep and write a CSV table.
    Bench(BenchArgs),
}

#[derive(Args)]
struct SolveArgs {
    #[arg(long)]
    scenario: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    eta_max: Option<usize>,
    #[arg(long)]
    eta_min: Option<usize>,
    /// Minimum raw-path angle in degrees.
    #[arg(long)]
    alpha: Option<f64>,
    /// Initial smoothing budget.
    #[arg(long)]
    smoothing_s: Option<f64>,
    #[arg(long)]
    max_ct_nodes: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    svg: Option<PathBuf>,
    /// Leave wall-clock time out of the solution file.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum BenchKind {
    EtaMax,
    Radius,
    Compare,
}

#[derive(Args)]
struct BenchArgs {
    kind: BenchKind,
    #[arg(long)]
    scenario: PathBuf,
    /// Comma-separated sweep values (unused by `compare`).
    #[arg(long, value_delimiter = ',')]
    values: Vec<f64>,
    #[arg(long, default_value_t = 10)]
    iters: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Grid cell size for `compare`.
    #[arg(long, default_value_t = 1.0)]
    cell_size: f64,
    #[arg(long)]
    out: Option<PathBuf>,
    /// Leave the `ms` column empty.
    #[arg(long)]
    no_timing: bool,
}

const EXIT_INPUT: u8 = 1;
const EXIT_UNSOLVED: u8 = 2;

fn fail(e: &Error) -> ExitCode {
    eprintln!("error: {e}");
    ExitCode::from(if e.is_unsolved() { EXIT_UNSOLVED } else { EXIT_INPUT })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(code) => code,
        Err(e) => fail(&e),
    }
}

fn run(command: Command) -> cecbs::Result<ExitCode> {
    match command {
        Command::Solve(a) => cmd_solve(a),
        Command::Validate {
            scenario,
            solution,
            dt_factor,
        } => {
            let scenario = load_scenario(scenario)?;
            let solution = read_solution(solution)?.to_solution()?;
            let report = validate_solution(&scenario, &solution, dt_factor);
            println!("{}", serde_json::to_string_pretty(&report)?);
            Ok(if report.passed() {
                ExitCode::SUCCESS
            } else {
                eprintln!("validation failed");
                ExitCode::from(EXIT_UNSOLVED)
            })
        }
        Command::Baseline {
            scenario,
            cell_size,
        } => {
            let scenario = load_scenario(scenario)?;
            let sol = baseline::solve_scenario(&scenario, cell_size, GRID_MAX_NODES)?;
            println!(
                "soc_steps={} soc={} ct_iterations={}",
                sol.soc,
                sol.soc as f64 * cell_size,
                sol.iterations
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Bench(a) => cmd_bench(a),
    }
}

fn cmd_solve(a: SolveArgs) -> cecbs::Result<ExitCode> {
    let scenario = load_scenario(&a.scenario)?;
    let mut params = scenario.params.clone();
    params.planner.seed = a.seed;
    if let Some(v) = a.eta_max {
        params.planner.eta_max = v;
    }
    if let Some(v) = a.eta_min {
        params.planner.eta_min = v;
    }
    if let Some(v) = a.alpha {
        params.planner.alpha_deg = v;
    }
    if let Some(v) = a.smoothing_s {
        params.planner.s_initial = v;
    }
    if let Some(v) = a.max_ct_nodes {
        params.max_ct_nodes = v;
    }
    let solution = solve(&scenario, &params)?;
    println!(
        "soc={} ct_iterations={} wall_time={:.3}s",
        solution.soc, solution.iterations, solution.wall_time
    );
    if let Some(out) = &a.out {
        let record = SolutionRecord::from_solution(&scenario, &solution, !a.no_timing)?;
        write_solution(&record, out)?;
    }
    if let Some(svg) = &a.svg {
        write_svg(svg, &scenario, Some(&solution), None)?;
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_bench(a: BenchArgs) -> cecbs::Result<ExitCode> {
    let scenario = load_scenario(&a.scenario)?;
    let timing = !a.no_timing;
    let csv = match a.kind {
        BenchKind::EtaMax => {
            let values = a
                .values
                .iter()
                .map(|v| {
                    (v.fract() == 0.0 && *v >= 1.0)
                        .then_some(*v as usize)
                        .ok_or_else(|| Error::InvalidInput(format!("eta_max value {v} is not a positive integer")))
                })
                .collect::<cecbs::Result<Vec<_>>>()?;
            sweep_eta_max(&scenario, &values, a.iters, a.seed).to_csv(timing)?
        }
        BenchKind::Radius => sweep_radius(&scenario, &a.values, a.iters, a.seed).to_csv(timing)?,
        BenchKind::Compare => {
            let c = compare_discrete(&scenario, a.cell_size, a.iters, a.seed);
            match (&c.discrete_soc, c.mean_continuous_soc()) {
                (Ok(d), Some(m)) => eprintln!("discrete soc {d}, CE-CBS mean soc {m}, ratio {}", m / d),
                (d, m) => eprintln!("discrete {d:?}, CE-CBS mean {m:?}"),
            }
            c.to_csv(timing)?
        }
    };
    match &a.out {
        Some(path) => std::fs::write(path, csv).map_err(|e| Error::Io {
            path: path.clone(),
            source: e,
        })?,
        None => print!("{csv}"),
    }
    Ok(ExitCode::SUCCESS)
}

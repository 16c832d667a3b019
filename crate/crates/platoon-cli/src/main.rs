//! `platoon` command-line front end.

mod compare;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use platoon::baselines::{sample_instances, solve_p_platooning, solve_s_platooning, solve_single_truck};
use platoon::feasibility::{check_feasible, FastestTables};
use platoon::fptas::fptas_solve_with_stats;
use platoon::inner::{decompose_fractional, FractionalSolution};
use platoon::network::generate_grid;
use platoon::pipeline::{run_pipeline, InstanceDocument, Method};
use platoon::{Error, RoadNetwork, TaskPair};
use serde_json::json;

use crate::config::CliConfig;
use crate::output::{load_instance, load_network, read_json, Emitter};

/// Exit code for malformed or invalid input files and parameters.
const EXIT_INPUT: u8 = 3;
/// Exit code for solver failures that are not infeasibility.
const EXIT_SOLVER: u8 = 4;
/// Exit code for anything else, such as failing to write output.
const EXIT_OTHER: u8 = 1;

#[derive(Parser)]
#[command(name = "platoon", version, about = "Fuel-minimal routing, speed planning and platooning for two trucks with deadlines")]
struct Cli {
    /// JSON configuration file overriding the built-in defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the result document here instead of standard output.
    #[arg(long, short, global = true)]
    output: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct InstanceArgs {
    /// Network document.
    #[arg(long, short)]
    network: PathBuf,
    /// Instance document.
    #[arg(long, short)]
    instance: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Dual,
    Fptas,
}

#[derive(Clone, Copy, ValueEnum)]
enum Baseline {
    /// Path planning with platooning at top speed.
    P,
    /// Speed planning with platooning on fastest paths.
    S,
    /// Each truck alone with optimal path and speeds.
    Single,
}

#[derive(Subcommand)]
enum Command {
    /// Run the full pipeline: separate optimum, feasibility check, platoon solve.
    Solve {
        #[command(flatten)]
        io: InstanceArgs,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        /// Dual iteration budget.
        #[arg(long)]
        max_iterations: Option<usize>,
        /// Approximation parameter when the rounding scheme is used.
        #[arg(long)]
        eps: Option<f64>,
        /// Write the dual iteration trace as a tab-separated table.
        #[arg(long)]
        trace: Option<PathBuf>,
    },
    /// Decide whether a single platoon can meet both deadlines.
    Feascheck {
        #[command(flatten)]
        io: InstanceArgs,
    },
    /// Run the cost-rounding approximation scheme alone.
    Fptas {
        #[command(flatten)]
        io: InstanceArgs,
        #[arg(long)]
        eps: Option<f64>,
    },
    /// Run a reference solver.
    Baseline {
        #[command(flatten)]
        io: InstanceArgs,
        #[arg(long, value_enum)]
        which: Baseline,
    },
    /// Generate a bidirected grid network.
    Generate {
        /// Rows and columns.
        #[arg(long, num_args = 2, value_names = ["ROWS", "COLS"], required = true)]
        grid: Vec<usize>,
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Sample task pairs on a network.
    Sample {
        #[arg(long, short)]
        network: PathBuf,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        gamma_l: Option<f64>,
        #[arg(long)]
        gamma_u: Option<f64>,
        /// Fixed delay factor; drawn from the configured choices when absent.
        #[arg(long)]
        delay_factor: Option<f64>,
        /// Platoon saving ratio written into every instance.
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
    },
    /// Solve a batch with the pipeline and both baselines and tabulate metrics.
    Compare {
        #[arg(long, short)]
        network: PathBuf,
        /// Instance list from `sample`; sampled with the configured sampler when absent.
        #[arg(long)]
        instances: Option<PathBuf>,
        /// Write the metric table here as tab-separated text.
        #[arg(long)]
        table: Option<PathBuf>,
        /// Write one dual iteration trace per instance into this directory.
        #[arg(long)]
        traces: Option<PathBuf>,
        /// Worker threads.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        #[arg(long, default_value_t = 0.1)]
        eta: f64,
    },
    /// Decompose a fractional platoon solution into integral ones.
    Decompose {
        #[command(flatten)]
        io: InstanceArgs,
        /// Fractional solution document with `x` (five per-edge vectors), `y` and `z`.
        #[arg(long)]
        fractional: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let Some(e) = err.chain().find_map(|c| c.downcast_ref::<Error>()) else {
        return if err.chain().any(|c| c.is::<std::io::Error>() || c.is::<serde_json::Error>()) {
            EXIT_INPUT
        } else {
            EXIT_OTHER
        };
    };
    match e {
        Error::Infeasible | Error::NoPlatoonPair | Error::DecompositionStalled { .. } | Error::RetryCapExhausted(_) => {
            EXIT_SOLVER
        }
        _ => EXIT_INPUT,
    }
}

fn run(cli: Cli) -> Result<()> {
    let config = match &cli.config {
        Some(path) => CliConfig::load(path)?,
        None => CliConfig::default(),
    };
    let out = Emitter::new(cli.output);
    match cli.command {
        Command::Solve { io, method, max_iterations, eps, trace } => {
            let (net, tasks, eta) = load_pair(&io)?;
            let mut pipeline = config.pipeline.clone();
            if let Some(m) = method {
                pipeline.method = match m {
                    MethodArg::Dual => Method::Dual,
                    MethodArg::Fptas => Method::Fptas,
                };
            }
            if let Some(k) = max_iterations {
                pipeline.dual.max_iterations = k;
            }
            if let Some(e) = eps {
                pipeline.eps = e;
            }
            let report = run_pipeline(&net, &tasks, eta, &pipeline)?;
            if let Some(path) = trace {
                let rows = report.solver.as_ref().map(|r| r.trace.as_slice()).unwrap_or_default();
                output::write_text(&path, &platoon::dual::trace_table(rows))?;
            }
            out.emit(&report)
        }
        Command::Feascheck { io } => {
            let (net, tasks, _) = load_pair(&io)?;
            let report = check_feasible(&net, &tasks)?;
            let witness = report.witness.map(|(m, s)| {
                let tau = FastestTables::new(&net, &tasks).map(|t| t.durations(m, s)).ok();
                json!({
                    "merge": net.node_name(m),
                    "split": net.node_name(s),
                    "fastest_durations": tau,
                })
            });
            out.emit(&json!({
                "schema": output::FEASIBILITY_SCHEMA,
                "feasible": report.feasible,
                "witness": witness,
            }))
        }
        Command::Fptas { io, eps } => {
            let (net, tasks, eta) = load_pair(&io)?;
            let eps = eps.unwrap_or(config.pipeline.eps);
            let (report, stats) = match fptas_solve_with_stats(&net, &tasks, eta, eps) {
                Err(Error::Infeasible) => (platoon::dual::SolveReport::infeasible(), Default::default()),
                other => other?,
            };
            out.emit(&json!({
                "schema": output::SOLVE_SCHEMA,
                "solver": "fptas",
                "eps": eps,
                "report": report,
                "stats": stats,
            }))
        }
        Command::Baseline { io, which } => {
            let (net, tasks, eta) = load_pair(&io)?;
            let doc = match which {
                Baseline::P | Baseline::S => {
                    let result = match which {
                        Baseline::P => solve_p_platooning(&net, &tasks, eta),
                        _ => solve_s_platooning(&net, &tasks, eta),
                    };
                    let report = match result {
                        Err(Error::Infeasible) => platoon::dual::SolveReport::infeasible(),
                        other => other?,
                    };
                    let name = if matches!(which, Baseline::P) { "p_platooning" } else { "s_platooning" };
                    json!({ "schema": output::SOLVE_SCHEMA, "solver": name, "report": report })
                }
                Baseline::Single => {
                    let solo = |s, d, ts, td| match solve_single_truck(&net, s, d, ts, td) {
                        Ok(sol) => Ok(Some(sol)),
                        Err(Error::Infeasible) => Ok(None),
                        Err(e) => Err(e),
                    };
                    let a = solo(tasks.s1, tasks.d1, tasks.ts1, tasks.td1)?;
                    let b = solo(tasks.s2, tasks.d2, tasks.ts2, tasks.td2)?;
                    let total = match (&a, &b) {
                        (Some(a), Some(b)) => Some(a.fuel + b.fuel),
                        _ => None,
                    };
                    json!({
                        "schema": output::SOLVE_SCHEMA,
                        "solver": "single_truck",
                        "total_fuel": total,
                        "truck1": a,
                        "truck2": b,
                    })
                }
            };
            out.emit(&doc)
        }
        Command::Generate { grid, seed } => {
            let seed = seed.unwrap_or(config.sampler.seed);
            let net = generate_grid(grid[0], grid[1], seed, &config.grid)?;
            out.emit(&net.to_document())
        }
        Command::Sample { network, count, seed, gamma_l, gamma_u, delay_factor, eta } => {
            let net = load_network(&network)?;
            let mut sampler = config.sampler.clone();
            sampler.count = count.unwrap_or(sampler.count);
            sampler.seed = seed.unwrap_or(sampler.seed);
            sampler.gamma_l = gamma_l.unwrap_or(sampler.gamma_l);
            sampler.gamma_u = gamma_u.unwrap_or(sampler.gamma_u);
            sampler.delay_factor = delay_factor.or(sampler.delay_factor);
            let instances: Vec<InstanceDocument> = sample_instances(&net, &sampler)?
                .iter()
                .map(|t| InstanceDocument::from_tasks(&net, t, eta))
                .collect();
            out.emit(&json!({ "schema": output::INSTANCES_SCHEMA, "instances": instances }))
        }
        Command::Compare { network, instances, table, traces, jobs, eta } => {
            let net = load_network(&network)?;
            let docs = match instances {
                Some(path) => output::load_instance_list(&path)?,
                None => sample_instances(&net, &config.sampler)?
                    .iter()
                    .map(|t| InstanceDocument::from_tasks(&net, t, eta))
                    .collect(),
            };
            let result = compare::run(&net, &docs, &config.pipeline, jobs)?;
            if let Some(path) = table {
                output::write_text(&path, &result.table())?;
            }
            if let Some(dir) = traces {
                result.write_traces(&dir)?;
            }
            out.emit(&result.document())
        }
        Command::Decompose { io, fractional } => {
            let (net, tasks, _) = load_pair(&io)?;
            let frac: FractionalSolution = read_json(&fractional)?;
            frac.validate(&net, &tasks).with_context(|| format!("{}", fractional.display()))?;
            let components = decompose_fractional(&net, &tasks, &frac)?;
            let theta_sum: f64 = components.iter().map(|c| c.theta).sum();
            out.emit(&json!({
                "schema": output::DECOMPOSITION_SCHEMA,
                "theta_sum": theta_sum,
                "components": components,
            }))
        }
    }
}

fn load_pair(io: &InstanceArgs) -> Result<(RoadNetwork, TaskPair, f64)> {
    let net = load_network(&io.network)?;
    let (tasks, eta) = load_instance(&io.instance, &net)?;
    Ok((net, tasks, eta))
}

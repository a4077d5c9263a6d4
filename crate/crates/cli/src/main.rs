//! `regen`: behavior-conditioned scenario synthesis pipeline.

mod commands;
mod manifest;
mod plot;
mod trace;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "regen",
    about = "Synthesize, ground, solve, simulate, and score driving scenarios from a behavior description",
    version
)]
struct Cli {
    /// Asset database file.
    #[arg(long, global = true, default_value = "assets/driving.assetdb")]
    assets: PathBuf,
    /// Directory of map files.
    #[arg(long, global = true, default_value = "maps")]
    maps: PathBuf,
    /// Oracle backend: "scripted:<transcript path>" or "remote" (env-configured).
    #[arg(long, global = true, default_value = "remote")]
    oracle: String,
    /// Seed for rollouts, noise, and sampling.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for per-scenario stages.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Expand a behavior description into a causal scenario graph.
    Expand {
        /// Natural-language behavior description.
        #[arg(long)]
        behavior: String,
        /// Predefined ego route, "map_id/route_id".
        #[arg(long, default_value = "straight_2lane/stop_abrupt")]
        route: String,
        /// Optional natural-language prior steering cause proposals.
        #[arg(long)]
        prior: Option<String>,
        #[arg(long, default_value_t = 1)]
        max_depth: u32,
        #[arg(long, default_value_t = 8)]
        max_events: usize,
        #[arg(long, default_value_t = 64)]
        max_nodes: usize,
        /// Output graph file.
        #[arg(long, default_value = "graph.json")]
        out: PathBuf,
    },
    /// Ground every enumerated scenario of a graph into a config file.
    Ground {
        #[arg(long)]
        graph: PathBuf,
        /// Output directory for config files.
        #[arg(long, default_value = "configs")]
        out_dir: PathBuf,
    },
    /// Solve actor placements for a config; exit 4 when infeasible.
    Solve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, default_value_t = 5.0)]
        grid_step: f64,
        #[arg(long, default_value_t = 2.0)]
        speed_step: f64,
        #[arg(long, default_value_t = 2000)]
        max_candidates: usize,
        #[arg(long, default_value_t = 8.0)]
        gap_min: f64,
        /// Output concrete-scenario file.
        #[arg(long, default_value = "concrete.json")]
        out: PathBuf,
    },
    /// Solve, roll out, and export the trace and verdict for a config.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Pin a property before solving: "entity.key=value".
        #[arg(long)]
        counterfactual: Option<String>,
        #[arg(long, default_value_t = 5.0)]
        grid_step: f64,
        #[arg(long, default_value_t = 2.0)]
        speed_step: f64,
        #[arg(long, default_value_t = 2000)]
        max_candidates: usize,
        #[arg(long, default_value_t = 8.0)]
        gap_min: f64,
        /// Output directory for concrete.json, trace.json, verdict.json.
        #[arg(long, default_value = "run_out")]
        out_dir: PathBuf,
    },
    /// Score corpus diversity.
    Eval {
        /// Corpus file, one description per line.
        corpus: PathBuf,
        #[arg(long, value_parser = ["self-bleu", "embedding"], default_value = "self-bleu")]
        metric: String,
        #[arg(long)]
        sample_size: Option<usize>,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long, default_value_t = 4)]
        max_n: usize,
        /// Embedding provider: "hash" (offline) or "remote" (REGEN_EMBED_URL).
        #[arg(long, value_parser = ["hash", "remote"], default_value = "hash")]
        embedder: String,
        /// Optional report file (stdout otherwise).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Render a trace file to a deterministic SVG plot.
    Plot {
        #[arg(long)]
        trace: PathBuf,
        #[arg(long, default_value = "trace.svg")]
        out: PathBuf,
    },
    /// All stages: expand, ground, solve, run, eval, manifest.
    Pipeline {
        #[arg(long)]
        behavior: String,
        #[arg(long, default_value = "straight_2lane/stop_abrupt")]
        route: String,
        #[arg(long)]
        prior: Option<String>,
        #[arg(long, default_value_t = 1)]
        max_depth: u32,
        #[arg(long, default_value_t = 8)]
        max_events: usize,
        #[arg(long, default_value_t = 64)]
        max_nodes: usize,
        #[arg(long, default_value_t = 5.0)]
        grid_step: f64,
        #[arg(long, default_value_t = 2.0)]
        speed_step: f64,
        #[arg(long, default_value_t = 2000)]
        max_candidates: usize,
        #[arg(long, default_value_t = 8.0)]
        gap_min: f64,
        #[arg(long, default_value_t = 10)]
        repeats: usize,
        #[arg(long, default_value = "pipeline_out")]
        out_dir: PathBuf,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let ctx = commands::Context {
        assets: cli.assets,
        maps: cli.maps,
        oracle: cli.oracle,
        seed: cli.seed,
        jobs: cli.jobs.max(1),
    };
    let outcome = match cli.command {
        Command::Expand {
            behavior,
            route,
            prior,
            max_depth,
            max_events,
            max_nodes,
            out,
        } => commands::cmd_expand(
            &ctx, &behavior, &route, prior.as_deref(), max_depth, max_events, max_nodes, &out,
        ),
        Command::Ground { graph, out_dir } => commands::cmd_ground(&ctx, &graph, &out_dir),
        Command::Solve {
            config,
            grid_step,
            speed_step,
            max_candidates,
            gap_min,
            out,
        } => commands::cmd_solve(
            &ctx,
            &config,
            commands::solve_params(&ctx, grid_step, speed_step, max_candidates, gap_min),
            &out,
        ),
        Command::Run {
            config,
            counterfactual,
            grid_step,
            speed_step,
            max_candidates,
            gap_min,
            out_dir,
        } => commands::cmd_run(
            &ctx,
            &config,
            counterfactual.as_deref(),
            commands::solve_params(&ctx, grid_step, speed_step, max_candidates, gap_min),
            &out_dir,
        ),
        Command::Eval {
            corpus,
            metric,
            sample_size,
            repeats,
            max_n,
            embedder,
            out,
        } => commands::cmd_eval(
            &ctx,
            &corpus,
            &metric,
            sample_size,
            repeats,
            max_n,
            &embedder,
            out.as_deref(),
        ),
        Command::Plot { trace, out } => commands::cmd_plot(&trace, &out),
        Command::Pipeline {
            behavior,
            route,
            prior,
            max_depth,
            max_events,
            max_nodes,
            grid_step,
            speed_step,
            max_candidates,
            gap_min,
            repeats,
            out_dir,
        } => commands::cmd_pipeline(
            &ctx,
            &behavior,
            &route,
            prior.as_deref(),
            max_depth,
            max_events,
            max_nodes,
            commands::solve_params(&ctx, grid_step, speed_step, max_candidates, gap_min),
            repeats,
            &out_dir,
        ),
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code())
        }
    }
}

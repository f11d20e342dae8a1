use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use frsd::cli::{self, CliError};
use frsd::digraph::{
    build_uniform_row_stochastic, generate_strongly_connected, DiGraph,
};
use frsd::protocols::HyperParams;
use frsd::theory;

/// Workbench for decentralized consensus optimization over digraphs.
#[derive(Parser)]
#[command(name = "frsd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// worker threads for node updates (default: all cores)
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (algorithm, seed) pair of a suite and write traces + summary
    Run(RunArgs),
    /// Grid-search hyperparameters for one algorithm of a suite
    Tune(TuneArgs),
    /// Spectral / rate report for a graph file (JSON on stdout)
    Analyze(AnalyzeArgs),
    /// Generate a strongly connected random digraph file
    GenGraph(GenGraphArgs),
}

#[derive(Args)]
struct RunArgs {
    config: PathBuf,
    /// overrides the suite's output_dir
    #[arg(long)]
    out_dir: Option<PathBuf>,
    /// overrides the suite's metric cadence
    #[arg(long)]
    cadence: Option<usize>,
}

#[derive(Args)]
struct TuneArgs {
    config: PathBuf,
    #[arg(long)]
    algorithm: String,
}

#[derive(Args)]
struct AnalyzeArgs {
    graph: PathBuf,
    #[arg(long)]
    alpha: f64,
    #[arg(long)]
    beta: f64,
    /// aggregate smoothness constant L used for the eta prediction
    #[arg(long, default_value_t = 1.0)]
    smoothness: f64,
    /// aggregate strong convexity mu used for the eta prediction
    #[arg(long, default_value_t = 0.1)]
    strong_convexity: f64,
}

#[derive(Args)]
struct GenGraphArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    phi: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: cannot configure {t} threads: {e}");
            return ExitCode::from(3);
        }
    }
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            let mut cause = std::error::Error::source(&e);
            while let Some(c) = cause {
                eprintln!("  caused by: {c}");
                cause = c.source();
            }
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cmd: Command) -> Result<(), CliError> {
    match cmd {
        Command::Run(args) => {
            let mut suite = cli::parse_config(&args.config)?;
            if let Some(c) = args.cadence {
                suite.cadence = c;
            }
            let out_dir = args.out_dir.unwrap_or_else(|| suite.output_dir.clone());
            let summary = cli::run_suite(&suite, &out_dir)?;
            println!(
                "{} runs written to {}",
                summary.runs.len(),
                out_dir.display()
            );
            for agg in &summary.aggregates {
                let reached = agg.seeds_reaching[1];
                match agg.iterations_to[1] {
                    Some(r) => println!(
                        "  {:<12} to 1e-6: min {} / mean {:.1} / max {} rounds ({} of {} seeds)",
                        agg.name, r.min, r.mean, r.max, reached, suite.seeds.len()
                    ),
                    None => println!(
                        "  {:<12} never reached 1e-6 within {} rounds",
                        agg.name, suite.iterations
                    ),
                }
            }
            Ok(())
        }
        Command::Tune(args) => {
            let suite = cli::parse_config(&args.config)?;
            let (best, points) = cli::tune_from_suite(&suite, &args.algorithm)?;
            println!("best: alpha = {}, beta = {}", best.alpha, best.beta);
            for p in points {
                let tgt = p
                    .iterations_to_target
                    .map(|k| k.to_string())
                    .unwrap_or_else(|| "-".into());
                println!(
                    "  alpha {:<8} beta {:<8} to-1e-6 {:<8} final {:.3e}{}",
                    p.alpha,
                    p.beta,
                    tgt,
                    p.final_residual,
                    if p.diverged { "  (diverged)" } else { "" }
                );
            }
            Ok(())
        }
        Command::Analyze(args) => {
            let text = std::fs::read_to_string(&args.graph).map_err(|source| CliError::Io {
                path: args.graph.clone(),
                source,
            })?;
            let g = DiGraph::from_text(&text)?;
            let r = build_uniform_row_stochastic(&g);
            let report = theory::analyze(
                &r,
                HyperParams {
                    alpha: args.alpha,
                    beta: args.beta,
                },
                args.smoothness,
                args.strong_convexity,
            )?;
            println!(
                "{}",
                serde_json::to_string_pretty(&report).expect("report is serializable")
            );
            Ok(())
        }
        Command::GenGraph(args) => {
            let g = generate_strongly_connected(args.n, args.phi, args.seed)?;
            std::fs::write(&args.out, g.to_text()).map_err(|source| CliError::Io {
                path: args.out.clone(),
                source,
            })?;
            println!(
                "wrote {} ({} nodes, {} edges)",
                args.out.display(),
                g.n(),
                g.edge_count()
            );
            Ok(())
        }
    }
}

use std::path::PathBuf;

use anyhow::Result;
use clap::{Parser, Subcommand};

use polsim_cli::config::ConfigFile;
use polsim_cli::runner;

/// Simulator for the polarization-maximization opinion model: vector-valued
/// agents each follow one greedily chosen friend per epoch, with exact or
/// subsampled friend search over the convex hull.
#[derive(Parser)]
#[command(name = "polsim", version, about)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,

    /// Output directory (overrides [output].dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Master seed override.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Suppress progress output.
    #[arg(long, global = true)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one simulation and write positions/loss/attractor/meta files.
    Simulate { config: PathBuf },
    /// Accuracy sweep: subsampled runs against the S=N ground truth.
    Sweep { config: PathBuf },
    /// Wall-time benchmark over (S, N) grids.
    Bench { config: PathBuf },
    /// Export input/label pairs produced by the deterministic solver.
    Dataset { config: PathBuf },
    /// Print the convex hull vertex indices of a positions CSV.
    Hull { positions: PathBuf },
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .ok();
    }
    let out_dir = cli.out.clone().unwrap_or_else(|| PathBuf::from("out"));

    match &cli.cmd {
        Cmd::Simulate { config } => {
            let cfg = ConfigFile::load(config)?;
            let dir = resolve_out_dir(&cli, &cfg, out_dir);
            runner::simulate(&cfg, &dir, cli.seed, cli.quiet)?;
        }
        Cmd::Sweep { config } => {
            let cfg = ConfigFile::load(config)?;
            let dir = resolve_out_dir(&cli, &cfg, out_dir);
            runner::sweep_accuracy(&cfg, &dir, cli.seed, cli.quiet)?;
        }
        Cmd::Bench { config } => {
            let cfg = ConfigFile::load(config)?;
            let dir = resolve_out_dir(&cli, &cfg, out_dir);
            runner::bench(&cfg, &dir, cli.seed, cli.quiet)?;
        }
        Cmd::Dataset { config } => {
            let cfg = ConfigFile::load(config)?;
            let dir = resolve_out_dir(&cli, &cfg, out_dir);
            runner::make_dataset(&cfg, &dir, cli.seed, cli.quiet)?;
        }
        Cmd::Hull { positions } => {
            for idx in runner::hull_indices(positions)? {
                println!("{idx}");
            }
        }
    }
    Ok(())
}

fn resolve_out_dir(cli: &Cli, cfg: &ConfigFile, default: PathBuf) -> PathBuf {
    match (&cli.out, &cfg.output.dir) {
        (Some(dir), _) => dir.clone(),
        (None, Some(dir)) => PathBuf::from(dir),
        (None, None) => default,
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use lrplab::{ExperimentConfig, Kind, Overrides};

/// Experiments on critical long-range percolation.
///
/// Settings are taken from built-in defaults, then LRPLAB_SEED, LRPLAB_OUT,
/// LRPLAB_JOBS and LRPLAB_REPLICATES, then the --config file, then flags.
#[derive(Parser)]
#[command(name = "lrplab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample graphs and per-class edge counts.
    Sample(Common),
    /// Median distance d(0, n·1) along a ladder of scales.
    Scaling(Common),
    /// Box-counting dimension of sampled geodesics.
    Dim(Common),
    /// Good-cube rates and renormalized connected-set counts.
    Goodcubes(Common),
    /// Exact Sperner-family checks.
    Sperner(Common),
    /// Reach tail of the firework process.
    Firework(Common),
    /// Annulus crossings and the ξ/firework coupling.
    XiCoupling(Common),
    /// Verify a run directory and write summary and plot data.
    Report {
        /// Run directory containing manifest.json.
        dir: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (must not exist or be empty).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
}

impl Common {
    fn overrides(self) -> Overrides {
        Overrides {
            config: self.config,
            seed: self.seed,
            out: self.out,
            jobs: self.jobs,
            replicates: self.replicates,
        }
    }
}

fn experiment(kind: Kind, common: Common) -> anyhow::Result<()> {
    let cfg = ExperimentConfig::resolve(kind, &common.overrides())?;
    let manifest = lrplab::run(&cfg)?;
    println!("{} run written to {}", manifest.kind, cfg.out.display());
    for f in &manifest.files {
        println!("  {}  {}", f.sha256, f.name);
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Sample(c) => experiment(Kind::Sample, c),
        Command::Scaling(c) => experiment(Kind::Scaling, c),
        Command::Dim(c) => experiment(Kind::Dim, c),
        Command::Goodcubes(c) => experiment(Kind::Goodcubes, c),
        Command::Sperner(c) => experiment(Kind::Sperner, c),
        Command::Firework(c) => experiment(Kind::Firework, c),
        Command::XiCoupling(c) => experiment(Kind::XiCoupling, c),
        Command::Report { dir } => lrplab::report(&dir).map(|r| {
            print!("{}", r.summary);
            for f in &r.figures {
                println!("  report/{}", f.display());
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

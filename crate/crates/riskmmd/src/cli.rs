//! Command-line surface.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::commands::{self, RunOptions};
use crate::config::Config;
use crate::error::{Error, Result};
use crate::output::{ensure_dir, write_file};
use crate::pool::resolve_threads;

#[derive(Debug, Parser)]
#[command(
    name = "riskmmd",
    version,
    about = "Risk-aware trajectory optimization with MMD risk"
)]
pub struct Cli {
    /// Worker threads for benchmark and mpc cells [default: all cores].
    #[arg(long, global = true, env = "RISKMMD_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Optimize once and print the plan record.
    Plan(Common),
    /// Sweep random scenes and write per-run CSV rows.
    Benchmark {
        #[command(flatten)]
        common: Common,
        /// Keep rows of an earlier run and only compute missing ones.
        #[arg(long)]
        resume: bool,
    },
    /// Run receding-horizon episodes and write the metrics grid.
    Mpc {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        resume: bool,
    },
    /// Distill a rollout matrix file to a weighted reduced set.
    Distill {
        #[command(flatten)]
        common: Common,
        /// Rollout file; overrides `[distill] rollouts`.
        #[arg(long)]
        rollouts: Option<PathBuf>,
        /// Reduced-set size; overrides `[distill] n`.
        #[arg(long)]
        n: Option<usize>,
    },
}

#[derive(Debug, Args)]
pub struct Common {
    #[arg(long)]
    pub config: PathBuf,
    /// Overrides the config's `seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Output directory. `plan` and `distill` print to stdout without it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<Config> {
        let mut cfg = Config::load(&self.config)?;
        if let Some(seed) = self.seed {
            cfg.seed = seed;
        }
        Ok(cfg)
    }

    fn options(&self, resume: bool, threads: Option<usize>) -> RunOptions {
        RunOptions {
            out: self.out.clone().unwrap_or_else(|| PathBuf::from("results")),
            resume,
            threads: resolve_threads(threads),
        }
    }
}

fn emit(out: Option<&Path>, file: &str, text: &str) -> Result<()> {
    match out {
        Some(dir) => {
            ensure_dir(dir)?;
            write_file(&dir.join(file), text)
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(Error::io("<stdout>")),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Plan(common) => {
            let cfg = common.load()?;
            let text = commands::plan::render(&commands::plan::plan(&cfg)?)?;
            emit(common.out.as_deref(), "plan.json", &text)
        }
        Command::Benchmark { common, resume } => {
            let cfg = common.load()?;
            let s = commands::benchmark::run(&cfg, &common.options(resume, cli.threads))?;
            eprintln!(
                "{}: {} rows written, {} kept",
                s.path.display(),
                s.written,
                s.skipped
            );
            Ok(())
        }
        Command::Mpc { common, resume } => {
            let cfg = common.load()?;
            let s = commands::mpc::run(&cfg, &common.options(resume, cli.threads))?;
            for g in &s.grid {
                let r = &g.report;
                eprintln!(
                    "{:>4} {:<14} collision {:6.2}%  lane {:6.3}%  avg {:.2} m/s  max {:.2} m/s  ({} episodes)",
                    g.method.name(),
                    g.noise_preset,
                    r.collision_pct,
                    r.lane_violation_pct,
                    r.avg_speed,
                    r.max_speed,
                    r.episodes
                );
            }
            eprintln!("{}", s.metrics_path.display());
            Ok(())
        }
        Command::Distill {
            common,
            rollouts,
            n,
        } => {
            let cfg = common.load()?;
            let rec = commands::distill::run(&cfg, rollouts.as_deref(), n)?;
            emit(
                common.out.as_deref(),
                "distill.json",
                &commands::distill::render(&rec)?,
            )
        }
    }
}

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use santafe_cli::{
    cmd_compare, cmd_gap_chain, cmd_simulate, cmd_solve_boltzmann, cmd_sweep, cmd_theory,
    read_input, ExperimentConfig, Preset, Verdict,
};
use std::path::PathBuf;

#[derive(Parser)]
#[command(name = "santafe", version, about = "Zero-intelligence limit-order-book experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PresetArg {
    Desk,
    Full,
}

#[derive(Args)]
struct Common {
    /// Starting parameter set; the config file and flags override it.
    #[arg(long, value_enum, default_value = "desk")]
    preset: PresetArg,
    /// Flat `key = value` file with dotted keys.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Single market-order rate; clears any sweep grid.
    #[arg(long)]
    mu: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Extra `key=value` overrides, applied after the config file.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

impl Common {
    fn resolve(&self) -> Result<ExperimentConfig> {
        let preset = match self.preset {
            PresetArg::Desk => Preset::Desk,
            PresetArg::Full => Preset::Full,
        };
        let mut config = ExperimentConfig::preset(preset);
        if let Some(path) = &self.config {
            config.apply_text(&read_input(path)?)?;
        }
        for kv in &self.set {
            let (k, v) = kv
                .split_once('=')
                .with_context(|| format!("--set expects KEY=VALUE, got `{kv}`"))?;
            config.set(k.trim(), v)?;
        }
        if let Some(seed) = self.seed {
            config.seed.master_seed = seed;
        }
        if let Some(mu) = self.mu {
            config.params.market_rate = mu;
            config.sweep = None;
        }
        if let Some(out) = &self.out {
            config.out_dir = out.clone();
        }
        config.validate()?;
        Ok(config)
    }
}

#[derive(Subcommand)]
enum Command {
    /// One warm-up and measurement run at `sim.mu`.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Also write every measured event to events.csv.
        #[arg(long)]
        event_log: bool,
    },
    /// Parallel runs over the geometric μ grid.
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Worker threads (default: all cores).
        #[arg(long)]
        threads: Option<usize>,
    },
    /// Closed-form metrics, profiles and gap thresholds.
    Theory {
        #[command(flatten)]
        common: Common,
    },
    /// Numerical steady state of the kinetic equation at `sim.mu`.
    SolveBoltzmann {
        #[command(flatten)]
        common: Common,
        /// Re-solve with half the grid step and report the change.
        #[arg(long)]
        grid_check: bool,
    },
    /// Gap recursion: shoot for the threshold, or iterate from --g0.
    GapChain {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        g0: Option<f64>,
    },
    /// Grade a sweep table against a mean-field table.
    Compare {
        #[command(flatten)]
        common: Common,
        /// sweep.csv written by `sweep`.
        #[arg(long)]
        sim: PathBuf,
        /// theory_metrics.csv written by `theory` or `sweep`.
        #[arg(long)]
        theory: PathBuf,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Simulate { common, event_log } => {
            let config = common.resolve()?;
            let (report, files) = cmd_simulate(&config, event_log)?;
            let show = |e: Option<santafe_core::Estimate>| {
                e.map(|e| format!("{:.6e} ± {:.1e}", e.value, e.se)).unwrap_or_else(|| "-".into())
            };
            println!("spread    {}", show(report.spread));
            println!("impact    {}", show(report.impact));
            match report.diffusion {
                Some(d) => println!("diffusion {:.6e} ± {:.1e} (R² {:.4})", d.d, d.se, d.r2),
                None => println!("diffusion -"),
            }
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Sweep { common, threads } => {
            let config = common.resolve()?;
            let (rows, files) = cmd_sweep(&config, threads)?;
            let failed = rows.iter().filter(|r| r.status.starts_with("failed")).count();
            for f in files {
                println!("wrote {}", f.display());
            }
            if failed > 0 {
                log::warn!("{failed} sweep rows failed; see the status column");
            }
        }
        Command::Theory { common } => {
            for f in cmd_theory(&common.resolve()?)? {
                println!("wrote {}", f.display());
            }
        }
        Command::SolveBoltzmann { common, grid_check } => {
            let (report, files) = cmd_solve_boltzmann(&common.resolve()?, grid_check)?;
            println!(
                "{} iterations, residual {:.3e}, closed-form residual {:.3e}, max relative difference on [3ε, 10ε] {:.3e}",
                report.iterations, report.residual, report.closed_form_residual, report.max_rel_diff
            );
            if let Some(c) = report.grid_change {
                println!("grid halving changes the profile by {c:.3e}");
            }
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::GapChain { common, g0 } => {
            let (chain, files) = cmd_gap_chain(&common.resolve()?, g0)?;
            println!(
                "g0 = {} ticks, {} after {} steps",
                chain.g[0],
                chain.classification.name(),
                chain.g.len() - 1
            );
            for f in files {
                println!("wrote {}", f.display());
            }
        }
        Command::Compare { common, sim, theory } => {
            let (rows, path) = cmd_compare(&common.resolve()?, &sim, &theory)?;
            for r in &rows {
                println!(
                    "{:<10.4e} {:<13} {:<17} {:>12} {:<20} {}",
                    r.mu,
                    r.regime.name(),
                    r.metric.name(),
                    r.ratio().map(|q| format!("{q:.4}")).unwrap_or_else(|| "-".into()),
                    r.band,
                    r.verdict.name()
                );
            }
            println!("wrote {}", path.display());
            let failed = rows.iter().filter(|r| r.verdict == Verdict::Fail).count();
            if failed > 0 {
                bail!("{failed} rows outside their tolerance band");
            }
        }
    }
    Ok(())
}

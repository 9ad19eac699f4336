use std::path::PathBuf;

use anyhow::Context;
use cautious_harness::{bounds_check, run, Algorithm, Backend, Environment, ExperimentConfig, RunResult};
use clap::{Args, Parser, Subcommand};

#[derive(Parser)]
#[command(name = "cautious", about = "Cautious policy programming experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Tabular danger gridworld learning curves.
    Gridworld(Common),
    /// Pendulum swing-up with RBF features.
    Pendulum(Common),
    /// Exact tabular check of the TV bound and of monotone improvement.
    BoundsCheck(Common),
    /// Write the gridworld model as a TOML fixture.
    ExportGridworld {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value = "gridworld.toml")]
        out: PathBuf,
    },
}

#[derive(Args)]
struct Common {
    /// Comma-separated list: cvi, cpp, cpi, espi, aspi, dcpi, dcpp, fixed:<z>.
    #[arg(long)]
    algo: Option<String>,
    #[arg(long)]
    trials: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
}

impl Common {
    fn resolve(&self, env: Environment) -> anyhow::Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(path) => ExperimentConfig::load_for(path, env).with_context(|| format!("reading {}", path.display()))?,
            None => ExperimentConfig::for_environment(env),
        };
        cfg.experiment.environment = env;
        if let Some(a) = &self.algo {
            cfg.experiment.algorithms = Algorithm::parse_list(a)?;
        }
        if let Some(n) = self.trials {
            cfg.experiment.trials = n;
        }
        if let Some(s) = self.seed {
            cfg.experiment.seed = s;
        }
        if let Some(k) = self.iters {
            cfg.experiment.iterations = k;
        }
        if let Some(o) = &self.out {
            cfg.experiment.out = Some(o.clone());
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn print_run(result: &RunResult) {
    println!("{:<12} {:>12} {:>12} {:>12} {:>12} {:>10}", "algorithm", "first R", "final R", "osc_inf", "osc_l2", "tv viol.");
    for r in &result.results {
        let s = &r.summary;
        println!(
            "{:<12} {:>12.4} {:>12.4} {:>12.4} {:>12.4} {:>10}",
            r.algorithm.to_string(),
            s.mean_return_curve.first().copied().unwrap_or(f64::NAN),
            s.mean_return_curve.last().copied().unwrap_or(f64::NAN),
            s.osc_inf_mean,
            s.osc_l2_mean,
            r.violations
        );
    }
}

fn main() -> anyhow::Result<()> {
    let cli = Cli::parse();
    match cli.command {
        Command::Gridworld(c) => print_run(&run(&c.resolve(Environment::Gridworld)?)?),
        Command::Pendulum(c) => print_run(&run(&c.resolve(Environment::Pendulum)?)?),
        Command::BoundsCheck(c) => {
            let cfg = c.resolve(Environment::Gridworld)?;
            for &algo in &cfg.experiment.algorithms {
                let report = bounds_check(&cfg, algo, Backend::default())?;
                println!(
                    "{algo}: {} steps, {} TV-bound violations, {} negative improvements with non-negative advantage",
                    report.rows.len(),
                    report.tv_violations,
                    report.improvement_violations
                );
                if let Some(dir) = &cfg.experiment.out {
                    std::fs::create_dir_all(dir)?;
                    let path = dir.join(format!("bounds_{}.csv", algo.to_string().replace(':', "_")));
                    let mut w = csv::Writer::from_path(path)?;
                    for row in &report.rows {
                        w.serialize(row)?;
                    }
                    w.flush()?;
                }
            }
        }
        Command::ExportGridworld { config, out } => {
            let cfg = match config {
                Some(path) => ExperimentConfig::load(&path)?,
                None => ExperimentConfig::for_environment(Environment::Gridworld),
            };
            let mdp = cfg.gridworld.to_tabular(cfg.regularization.gamma)?;
            mdp.save(&out)?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

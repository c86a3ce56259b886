use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use vegtox::commands::{cmd_continue, cmd_dispersion, cmd_equilibria, cmd_simulate, cmd_turing_scan};
use vegtox::config::{parse_config_with, ExperimentConfig, Overrides, Scenario};
use vegtox::Error;

#[derive(Parser)]
#[command(name = "vegtox", version, about = "Vegetation-autotoxicity pattern experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Homogeneous steady states and their stability.
    Equilibria(Common),
    /// Growth rates of the Laplacian modes at the coexistence state.
    Dispersion(Common),
    /// The threshold sigma_L over a (gamma, s) grid.
    TuringScan(Common),
    /// Integrate the limit or fast-reaction system.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Run the fast-reaction convergence study instead.
        #[arg(long)]
        convergence: bool,
    },
    /// Bifurcation diagram of steady states in sigma or s.
    Continue(Common),
}

#[derive(Args)]
struct Common {
    /// TOML experiment file; all keys are optional.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    scenario: Option<Scenario>,
    #[arg(long)]
    sigma: Option<f64>,
    #[arg(long)]
    s: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    dim: Option<usize>,
    #[arg(long)]
    t_fin: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

impl Common {
    fn load(&self) -> Result<ExperimentConfig, Error> {
        let text = match &self.config {
            Some(path) => std::fs::read_to_string(path).map_err(|e| Error::Config {
                line: None,
                msg: format!("cannot read {}: {e}", path.display()),
            })?,
            None => String::new(),
        };
        let overrides = Overrides {
            scenario: self.scenario,
            sigma: self.sigma,
            s: self.s,
            gamma: self.gamma,
            seed: self.seed,
            dim: self.dim,
            t_fin: self.t_fin,
            out: self.out.clone(),
        };
        parse_config_with(&text, &overrides)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Equilibria(c) => c.load().and_then(|cfg| cmd_equilibria(&cfg)),
        Command::Dispersion(c) => c.load().and_then(|cfg| cmd_dispersion(&cfg)),
        Command::TuringScan(c) => c.load().and_then(|cfg| cmd_turing_scan(&cfg)),
        Command::Simulate { common, convergence } => common.load().and_then(|mut cfg| {
            cfg.simulation.convergence |= *convergence;
            cmd_simulate(&cfg)
        }),
        Command::Continue(c) => c.load().and_then(|cfg| cmd_continue(&cfg)),
    };
    match result {
        Ok(report) => {
            print!("{}", report.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

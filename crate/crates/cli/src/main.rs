//! `qroute`: command-line driver for the quantum routing simulator.
//!
//! Settings are layered: built-in defaults, then `--config <file>`, then
//! individual flags. Without `--network` the canonical four-node Braess
//! network (with the zero-latency central pair) is used.
//!
//! `QROUTE_THREADS` sets the worker count (as does `RAYON_NUM_THREADS`);
//! results are identical for any value.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use quantum_routing::dynamics::{run_repeated_game, ObjectiveMode, StepSign};
use quantum_routing::experiments::{
    classical_report, emit, ensemble, gamma_grid, gamma_sweep, latency_family, parse_config,
    parse_network, variant_comparison, OutputFormat, TraceOutput, DEFAULT_SWEEP_POINTS,
};
use quantum_routing::network::{make_braess, BraessLatencies};
use quantum_routing::{GameConfig, RoutingNetwork};

#[derive(Parser, Debug)]
#[command(
    name = "qroute",
    version,
    about = "Quantum-game routing on small networks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run one repeated game and print its per-round trace.
    Run(Common),
    /// Sweep the entangling parameter over [0, pi/2].
    Sweep {
        #[command(flatten)]
        common: Common,
        /// Number of evenly spaced grid points.
        #[arg(long, default_value_t = DEFAULT_SWEEP_POINTS)]
        points: usize,
    },
    /// Run a seed ensemble at a fixed entangling parameter.
    Ensemble(Common),
    /// Classical equilibrium, optimum and price of anarchy of a network.
    Classical(Common),
    /// Compare classical and quantum price of anarchy across networks.
    ///
    /// Repeat `--network` to pick networks; otherwise the 81-member family of
    /// {1, f, f^2} latencies on the outer Braess edges is used.
    Compare(Common),
}

#[derive(Args, Debug)]
struct Common {
    /// Entangling parameter in radians.
    #[arg(long)]
    gamma: Option<f64>,
    /// Learning gain M.
    #[arg(long)]
    gain: Option<f64>,
    /// Finite-difference step d.
    #[arg(long = "fd-step")]
    fd_step: Option<f64>,
    /// Rounds per run.
    #[arg(long)]
    iters: Option<usize>,
    /// Number of seeds (ensemble, sweep and compare).
    #[arg(long, default_value_t = 10)]
    seeds: usize,
    /// First seed.
    #[arg(long)]
    seed0: Option<u64>,
    /// Local objective: edge-diff, path-diff or own-latency.
    #[arg(long)]
    mode: Option<ObjectiveMode>,
    /// Update sign: paper or descent.
    #[arg(long)]
    sign: Option<StepSign>,
    /// Network file; may be repeated for `compare`.
    #[arg(long)]
    network: Vec<PathBuf>,
    /// Config file with game settings.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout when omitted).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, default_value = "csv")]
    format: OutputFormat,
}

fn read(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

impl Common {
    fn config(&self) -> Result<GameConfig> {
        let mut cfg = match &self.config {
            Some(p) => parse_config(&read(p)?).with_context(|| format!("in {}", p.display()))?,
            None => GameConfig::default(),
        };
        if let Some(v) = self.gamma {
            cfg.gamma = v;
        }
        if let Some(v) = self.gain {
            cfg.gain = v;
        }
        if let Some(v) = self.fd_step {
            cfg.fd_step = v;
        }
        if let Some(v) = self.iters {
            cfg.iterations = v;
        }
        if let Some(v) = self.seed0 {
            cfg.seed = v;
        }
        if let Some(v) = self.mode {
            cfg.objective = v;
        }
        if let Some(v) = self.sign {
            cfg.step_sign = v;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn load_network(path: &Path) -> Result<RoutingNetwork> {
        parse_network(&read(path)?).with_context(|| format!("in {}", path.display()))
    }

    fn network(&self) -> Result<RoutingNetwork> {
        match self.network.as_slice() {
            [] => Ok(make_braess(true, &BraessLatencies::default())?),
            [one] => Self::load_network(one),
            _ => bail!("this command takes at most one --network"),
        }
    }

    fn write<E: quantum_routing::experiments::Emit + ?Sized>(&self, result: &E) -> Result<()> {
        emit(result, self.format, self.out.as_deref())?;
        Ok(())
    }
}

fn configure_threads() {
    if let Ok(n) = std::env::var("QROUTE_THREADS") {
        std::env::set_var("RAYON_NUM_THREADS", n);
    }
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run(c) => {
            let (cfg, net) = (c.config()?, c.network()?);
            let trace = run_repeated_game(&cfg, &net)?;
            c.write(&TraceOutput {
                trace: &trace,
                network: &net,
            })
        }
        Command::Sweep { common: c, points } => {
            let (cfg, net) = (c.config()?, c.network()?);
            let result = gamma_sweep(&cfg, &net, &gamma_grid(points), c.seeds)?;
            c.write(&result)
        }
        Command::Ensemble(c) => {
            let (cfg, net) = (c.config()?, c.network()?);
            c.write(&ensemble(&cfg, &net, c.seeds)?)
        }
        Command::Classical(c) => c.write(&classical_report(&c.network()?)?),
        Command::Compare(c) => {
            let cfg = c.config()?;
            let variants = if c.network.is_empty() {
                latency_family()?
            } else {
                c.network
                    .iter()
                    .map(|p| Ok((p.display().to_string(), Common::load_network(p)?)))
                    .collect::<Result<Vec<_>>>()?
            };
            c.write(&variant_comparison(&variants, &cfg, c.seeds)?)
        }
    }
}

fn main() -> ExitCode {
    configure_threads();
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qroute: error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

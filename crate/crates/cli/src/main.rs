use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;
mod error;
mod output;

use config::{BackendChoice, RunConfig};
use error::CliError;

#[derive(Parser)]
#[command(name = "spin1-entangle", version, about = "Probe-qubit entanglement through spin-1 chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// J_eff against chain length, with a saturation fit.
    JeffScaling(Common),
    /// J_eff over a (T, θ) grid.
    JeffSurface(Common),
    /// Concurrence of the probe pair under local thermal noise.
    Decoherence(Common),
    /// Average teleportation fidelity along the noisy evolution.
    Teleport(Common),
    /// Runs the acceptance criteria and prints a pass/fail table.
    Selftest(SelftestArgs),
}

#[derive(Args, Debug, Default)]
struct Common {
    /// TOML file with a serialized run configuration; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (stdout if absent).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Print the resolved configuration as TOML and exit.
    #[arg(long)]
    dump_config: bool,

    #[arg(long, value_enum)]
    backend: Option<BackendChoice>,
    /// Worker threads (0 = all cores).
    #[arg(long)]
    threads: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Directory for cached chain spectra.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Record the wall-clock time in the header.
    #[arg(long)]
    timestamp: bool,

    /// Chain coupling J.
    #[arg(long)]
    j: Option<f64>,
    /// Probe-chain coupling J_p.
    #[arg(long, allow_hyphen_values = true)]
    j_p: Option<f64>,
    /// Biquadratic angle θ (radians).
    #[arg(long, allow_hyphen_values = true)]
    theta: Option<f64>,
    /// Probe level splitting ω.
    #[arg(long, allow_hyphen_values = true)]
    omega: Option<f64>,

    /// Chain lengths for jeff-scaling.
    #[arg(long, value_delimiter = ',')]
    chain_lens: Option<Vec<usize>>,
    /// Chain length for jeff-surface, decoherence and teleport.
    #[arg(long)]
    chain_len: Option<usize>,
    /// Temperature of jeff-scaling, decoherence and teleport.
    #[arg(long, allow_hyphen_values = true)]
    temperature: Option<f64>,
    /// Temperature grid for jeff-surface.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    temperatures: Option<Vec<f64>>,
    /// θ grid for jeff-surface.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    thetas: Option<Vec<f64>>,

    /// Mean reservoir occupation n̄.
    #[arg(long, allow_hyphen_values = true)]
    n_bar: Option<f64>,
    /// Reservoir coupling Γ.
    #[arg(long, allow_hyphen_values = true)]
    gamma: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    t_end: Option<f64>,
    /// Number of output times in [0, t_end].
    #[arg(long)]
    t_steps: Option<usize>,
    /// Master-equation integrator tolerance.
    #[arg(long)]
    tol: Option<f64>,
    /// Use this J_eff instead of computing it from the chain.
    #[arg(long, allow_hyphen_values = true)]
    j_eff: Option<f64>,
}

#[derive(Args, Debug)]
struct SelftestArgs {
    #[arg(long)]
    seed: Option<u64>,
    /// Run only these criteria.
    #[arg(long, value_delimiter = ',')]
    only: Vec<u8>,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Scaling,
    Surface,
    Dynamics,
}

impl Common {
    fn resolve(&self, section: Section) -> Result<RunConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($flag:ident => $($field:tt)+) => {
                if let Some(v) = self.$flag.clone() {
                    c.$($field)+ = v;
                }
            };
        }
        set!(backend => backend);
        set!(threads => threads);
        set!(seed => seed);
        if self.cache_dir.is_some() {
            c.cache_dir = self.cache_dir.clone();
        }
        c.timestamp |= self.timestamp;
        set!(j => chain.j);
        set!(j_p => chain.j_p);
        set!(theta => chain.theta);
        set!(omega => chain.omega);
        set!(chain_lens => scaling.chain_lens);
        set!(temperatures => surface.temperatures);
        set!(thetas => surface.thetas);
        set!(n_bar => dynamics.n_bar);
        set!(gamma => dynamics.gamma);
        set!(t_end => dynamics.t_end);
        set!(t_steps => dynamics.t_steps);
        set!(tol => dynamics.tol);
        if self.j_eff.is_some() {
            c.dynamics.j_eff = self.j_eff;
        }
        match section {
            Section::Scaling => set!(temperature => scaling.temperature),
            Section::Surface => set!(chain_len => surface.chain_len),
            Section::Dynamics => {
                set!(temperature => dynamics.temperature);
                set!(chain_len => dynamics.chain_len);
            }
        }
        if section == Section::Surface && self.temperature.is_some() {
            return Err(CliError::Usage("jeff-surface takes --temperatures, not --temperature".into()));
        }
        if section == Section::Scaling && self.chain_len.is_some() {
            return Err(CliError::Usage("jeff-scaling takes --chain-lens, not --chain-len".into()));
        }
        Ok(c)
    }
}

type CommandFn = fn(&RunConfig) -> Result<output::Document, CliError>;

fn run(cli: Cli) -> Result<(), CliError> {
    let (common, section, command): (&Common, Section, CommandFn) = match &cli.command {
        Command::JeffScaling(a) => (a, Section::Scaling, commands::jeff_scaling),
        Command::JeffSurface(a) => (a, Section::Surface, commands::jeff_surface),
        Command::Decoherence(a) => (a, Section::Dynamics, commands::decoherence),
        Command::Teleport(a) => (a, Section::Dynamics, commands::teleport),
        Command::Selftest(a) => {
            let mut config = RunConfig::default();
            if let Some(s) = a.seed {
                config.seed = s;
            }
            let (table, failed) = commands::selftest(&config, &a.only)?;
            match &a.output {
                Some(p) => std::fs::write(p, &table)?,
                None => print!("{table}"),
            }
            return if failed == 0 {
                Ok(())
            } else {
                Err(CliError::Failed(format!("{failed} acceptance criteria failed")))
            };
        }
    };
    let config = common.resolve(section)?;
    if common.dump_config {
        print!("{}", config.to_toml());
        return Ok(());
    }
    command(&config)?.emit(common.output.as_deref())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use balance_nets::io::GroupSource;
use balance_nets::smooth::Parity;
use balance_nets_cli::commands;
use balance_nets_cli::config::RunConfig;
use balance_nets_cli::report::run_full_analysis;
use balance_nets_cli::spec::{CurveSpec, EmbeddingFile, FieldSpec};
use balance_nets_cli::CliError;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "balance-nets", version, about = "Analyze product-potential networks of automata")]
struct Cli {
    /// JSON run configuration (bounds, tolerances, seed, output).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the JSON result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Potential verdict with cycle, A1 and A2 witnesses.
    CheckPotential {
        #[arg(long)]
        net: PathBuf,
    },
    /// Enumerate potential markings of the complete graph.
    GenFields {
        #[arg(long)]
        nodes: usize,
        /// Builtin name (sign, cyclic:N, symmetric:N) or group file.
        #[arg(long, default_value = "sign")]
        group: String,
        #[arg(long)]
        limit: Option<usize>,
    },
    /// Relation signs and the two-camp partition, if any.
    Balance {
        #[arg(long)]
        net: PathBuf,
    },
    /// Transition chain under uniform choice.
    Markov {
        #[arg(long)]
        net: PathBuf,
        /// Rational arithmetic.
        #[arg(long)]
        exact: bool,
    },
    /// Minimal left ideals of the control semigroup.
    Ideals {
        #[arg(long)]
        net: PathBuf,
    },
    /// Monte-Carlo absorption of random control products.
    Absorb {
        #[arg(long)]
        net: PathBuf,
        #[arg(long, default_value_t = 64)]
        steps: usize,
        #[arg(long, default_value_t = 1000)]
        runs: usize,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Smooth involution fields.
    Smooth {
        #[command(subcommand)]
        command: SmoothCommand,
    },
    /// Every check on one network file.
    Analyze {
        #[arg(long)]
        net: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Include wall-clock timing.
        #[arg(long)]
        timing: bool,
    },
}

#[derive(Subcommand)]
enum SmoothCommand {
    /// Infinitesimal residual over cell centres.
    CheckResidual {
        /// Field spec: path or inline JSON.
        #[arg(long)]
        field: String,
        #[arg(long, default_value_t = 5)]
        grid: usize,
        #[arg(long, default_value_t = 1e-3)]
        h: f64,
    },
    /// Midpoint product integral along a curve.
    PIntegral {
        #[arg(long)]
        field: String,
        /// Curve spec: path or inline JSON.
        #[arg(long)]
        curve: String,
        #[arg(long, default_value_t = 1024)]
        n: usize,
        #[arg(long, value_enum, default_value_t = ParityArg::Even)]
        parity: ParityArg,
    },
    /// Matrix marking of an embedded network.
    Discretize {
        #[arg(long)]
        field: String,
        #[arg(long)]
        net: PathBuf,
        /// Embedding spec: path or inline JSON.
        #[arg(long)]
        embedding: String,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ParityArg {
    Even,
    Odd,
}

impl From<ParityArg> for Parity {
    fn from(p: ParityArg) -> Self {
        match p {
            ParityArg::Even => Parity::Even,
            ParityArg::Odd => Parity::Odd,
        }
    }
}

fn threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("BALANCE_NETS_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("BALANCE_NETS_THREADS must be a positive integer, got `{value}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Spec(e.to_string()))
}

fn run(cli: Cli) -> Result<String, CliError> {
    threads()?;
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if cli.out.is_some() {
        config.output = cli.out.clone();
    }
    let text = match cli.command {
        Command::CheckPotential { net } => json(&commands::check_potential(&commands::load(&net, &config)?))?,
        Command::GenFields { nodes, group, limit } => {
            let group = GroupSource::Named(group).resolve(None)?;
            if group.order() > config.bounds.bound_grp {
                return Err(CliError::Bound {
                    what: "group order",
                    value: group.order() as u128,
                    bound: config.bounds.bound_grp,
                });
            }
            json(&commands::gen_fields(group, nodes, limit)?)?
        }
        Command::Balance { net } => json(&commands::balance(&commands::load(&net, &config)?))?,
        Command::Markov { net, exact } => json(&commands::markov(&commands::load(&net, &config)?, exact, &config)?)?,
        Command::Ideals { net } => json(&commands::ideals(&commands::load(&net, &config)?, &config)?)?,
        Command::Absorb { net, steps, runs, seed } => {
            let marking = commands::load(&net, &config)?;
            json(&commands::absorb(&marking, steps, runs, seed.unwrap_or(config.seed), &config)?)?
        }
        Command::Smooth { command } => match command {
            SmoothCommand::CheckResidual { field, grid, h } => {
                json(&commands::check_residual(&commands::read_spec::<FieldSpec>(&field)?, grid, h)?)?
            }
            SmoothCommand::PIntegral { field, curve, n, parity } => json(&commands::smooth_p_integral(
                &commands::read_spec::<FieldSpec>(&field)?,
                &commands::read_spec::<CurveSpec>(&curve)?,
                n,
                parity.into(),
                &config,
            )?)?,
            SmoothCommand::Discretize { field, net, embedding } => json(&commands::smooth_discretize(
                &commands::read_spec::<FieldSpec>(&field)?,
                &commands::load(&net, &config)?,
                &commands::read_spec::<EmbeddingFile>(&embedding)?,
                &config,
            )?)?,
        },
        Command::Analyze { net, seed, timing } => {
            if let Some(seed) = seed {
                config.seed = seed;
            }
            config.timing |= timing;
            json(&run_full_analysis(&net, &config)?)?
        }
    };
    match &config.output {
        Some(path) => std::fs::write(path, format!("{text}\n"))
            .map(|_| String::new())
            .map_err(|e| CliError::Write { path: path.display().to_string(), message: e.to_string() }),
        None => Ok(text),
    }
}

fn fail(err: &CliError) -> ExitCode {
    let body = serde_json::to_string(&err.to_json()).unwrap_or_else(|_| String::from("{\"error\":{}}"));
    println!("{body}");
    ExitCode::from(err.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            return fail(&CliError::Usage(e.render().to_string().trim().to_owned()));
        }
    };
    match run(cli) {
        Ok(text) => {
            if !text.is_empty() {
                let mut out = std::io::stdout().lock();
                let _ = writeln!(out, "{text}");
            }
            ExitCode::SUCCESS
        }
        Err(e) => fail(&e),
    }
}

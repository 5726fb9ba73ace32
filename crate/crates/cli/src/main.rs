use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

mod commands;
mod grid;
mod table;

/// Gibbs measures of finite-memory potentials on subshifts of finite type.
#[derive(Debug, Parser)]
#[command(name = "gibbslab", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
pub struct ModelArgs {
    /// JSON model file.
    #[arg(long, conflicts_with = "builtin")]
    pub model: Option<PathBuf>,
    /// One of bernoulli, ising, golden-mean.
    #[arg(long)]
    pub builtin: Option<String>,
    /// Bernoulli weight of symbol 1.
    #[arg(long, default_value_t = 0.7, allow_hyphen_values = true)]
    pub p: f64,
    /// Ising coupling.
    #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
    pub beta: f64,
    /// Ising external field.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub field: f64,
    /// Golden-mean reward for symbol 1.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub a: f64,
    /// JSON table `{"memory": m, "values": {...}}` replacing the model's observable.
    #[arg(long)]
    pub observable: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct OutArgs {
    /// Directory for output files; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Eigendata, pressure, gap, explicit constants, entropy and Gibbs scan.
    Analyze {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Longest word length in the Gibbs scan.
        #[arg(long, default_value_t = 12)]
        nmax: usize,
        /// Eigen residual tolerance relative to λ.
        #[arg(long)]
        tol: Option<f64>,
    },
    /// Checks the five characterisations of the equilibrium state.
    Verify {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, default_value_t = 12)]
        nmax: usize,
        /// Overrides the Jacobian, eigen-residual and variational tolerances.
        #[arg(long)]
        tol: Option<f64>,
        /// none | uniform-measure | perturbed-nu
        #[arg(long, default_value = "none")]
        inject: String,
    },
    /// `P(φ + sψ)` and its derivatives over an s-grid.
    PressureCurve {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        /// `start:stop:step` or a comma list.
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Rate function of the observable over a t-grid.
    RateCurve {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, allow_hyphen_values = true)]
        grid: String,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Exact Birkhoff-sum laws against the normal approximation.
    Clt {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        /// Comma-separated lengths.
        #[arg(long, default_value = "64,256,1024")]
        n: String,
        /// Also write each exact law (needs --out).
        #[arg(long)]
        dump: bool,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Exact `−(1/n) log P(S_n/n ∈ [lower, upper])` against the rate function.
    Ldp {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, default_value = "100,200,400")]
        n: String,
        #[arg(long, allow_hyphen_values = true)]
        lower: f64,
        #[arg(long, allow_hyphen_values = true)]
        upper: f64,
        #[arg(long, value_enum, default_value_t = Format::Csv)]
        format: Format,
    },
    /// Seeded sample paths with Birkhoff and 2-cylinder summaries.
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        out: OutArgs,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Path length.
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        trials: usize,
    },
    /// Lists the built-in models; with --out writes each as a model file.
    Examples {
        #[command(flatten)]
        out: OutArgs,
    },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Analyze { model, out, nmax, tol } => commands::analyze(&model, &out, nmax, tol),
        Command::Verify { model, out, nmax, tol, inject } => commands::verify(&model, &out, nmax, tol, &inject),
        Command::PressureCurve { model, out, grid, format } => commands::pressure_curve(&model, &out, &grid, format),
        Command::RateCurve { model, out, grid, format } => commands::rate_curve(&model, &out, &grid, format),
        Command::Clt { model, out, n, dump, format } => commands::clt(&model, &out, &n, dump, format),
        Command::Ldp { model, out, n, lower, upper, format } => {
            if !(lower <= upper) {
                bail!("--lower must not exceed --upper");
            }
            commands::ldp(&model, &out, &n, lower, upper, format)
        }
        Command::Sample { model, out, seed, n, trials } => commands::sample(&model, &out, seed, n, trials),
        Command::Examples { out } => commands::examples(&out),
    }
}

/// 2 for numerical failures of the library, 1 for everything else.
fn exit_code(e: &anyhow::Error) -> u8 {
    let numerical = e
        .chain()
        .filter_map(|c| c.downcast_ref::<gibbslab::Error>())
        .any(gibbslab::Error::is_numerical);
    if numerical {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {:#}", e);
            ExitCode::from(exit_code(&e))
        }
    }
}

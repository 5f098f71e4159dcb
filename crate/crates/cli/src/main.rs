mod commands;
mod output;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser, Debug)]
#[command(name = "lve", version, about = "Loop vertex representation checks for quartic and higher matrix models")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Directory for `<command>.json` and `<command>.csv`; nothing is written when unset.
    #[arg(long, global = true, env = "LVE_OUTPUT_DIR")]
    output_dir: Option<PathBuf>,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct CouplingArgs {
    /// Interaction degree: the potential is Tr H^(2p).
    #[arg(long, default_value_t = 2)]
    pub p: u32,
    #[arg(long, default_value_t = 0.1)]
    pub lambda_modulus: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub lambda_arg: f64,
    /// Pacman opening: requires |arg lambda| <= pi - epsilon.
    #[arg(long, default_value_t = 0.2)]
    pub epsilon: f64,
}

#[derive(ValueEnum, Debug, Clone, Copy, Serialize, PartialEq)]
#[serde(rename_all = "snake_case")]
pub enum MethodArg {
    Quadrature,
    MonteCarlo,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EnsembleArgs {
    #[serde(rename = "N")]
    #[arg(long = "N", default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..))]
    pub n: u64,
    #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u8).range(1..=2))]
    pub beta: u8,
    #[arg(long, value_enum, default_value_t = MethodArg::Quadrature)]
    pub method: MethodArg,
    #[arg(long, default_value_t = 64, value_parser = clap::value_parser!(u64).range(4..))]
    pub quad_nodes: u64,
    #[arg(long, default_value_t = 20_000, value_parser = clap::value_parser!(u64).range(2..))]
    pub mc_samples: u64,
    #[arg(long, default_value_t = 7)]
    pub seed: u64,
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    pub workers: u64,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Evaluate T_p(z), E_p(z) and the equation residual.
    FcEval {
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long, allow_negative_numbers = true)]
        z_re: f64,
        #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
        z_im: f64,
    },
    /// Inverse-pair identities of h and k on grids.
    MapsCheck {
        #[command(flatten)]
        coupling: CouplingArgs,
    },
    /// Keyhole contour geometry, Cauchy identity and sigma against the direct formula.
    ContourCheck {
        #[command(flatten)]
        coupling: CouplingArgs,
        #[command(flatten)]
        ensemble: EnsembleArgs,
    },
    /// Partition function by the direct and the transformed integral.
    ZIdentity {
        #[command(flatten)]
        coupling: CouplingArgs,
        #[command(flatten)]
        ensemble: EnsembleArgs,
    },
    /// Free energy F = N^-2 log Z.
    FreeEnergy {
        #[command(flatten)]
        coupling: CouplingArgs,
        #[command(flatten)]
        ensemble: EnsembleArgs,
    },
    /// Truncated tree sum compared with the free energy.
    LveSum {
        #[command(flatten)]
        coupling: CouplingArgs,
        #[command(flatten)]
        ensemble: EnsembleArgs,
        #[arg(long, default_value_t = 2, value_parser = clap::value_parser!(u64).range(1..=3))]
        n_max: u64,
    },
    /// One-vertex amplitude and its split into the two action parts.
    SingleVertex {
        #[command(flatten)]
        coupling: CouplingArgs,
        #[command(flatten)]
        ensemble: EnsembleArgs,
    },
    /// Positivity of the Jacobian factors at positive coupling.
    JacobianCheck {
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long, default_value_t = 0.1)]
        lambda_modulus: f64,
        /// Eigenvalues to check; random pairs in [-5, 5] when empty.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        eigs: Vec<f64>,
        #[arg(long, default_value_t = 1000, value_parser = clap::value_parser!(u64).range(1..))]
        pairs: u64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
    },
    /// Bound suites with fitted constants and scaling exponents.
    VerifyBounds {
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        workers: u64,
    },
    /// |F(lambda, N)| over N and arg lambda with the trend test.
    PacmanScan {
        #[arg(long, default_value_t = 2)]
        p: u32,
        #[arg(long, default_value_t = 0.05)]
        lambda_modulus: f64,
        /// One or more args, comma separated; defaults to the pacman sample rays.
        #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
        lambda_arg: Vec<f64>,
        #[arg(long, default_value_t = 0.2)]
        epsilon: f64,
        /// `a..b` (inclusive) or a comma list.
        #[arg(long = "N-list", default_value = "1..6")]
        n_list: String,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        workers: u64,
    },
    /// Run acceptance criteria (all when no id is given).
    Acceptance {
        #[arg(long, value_parser = clap::value_parser!(u64).range(1..=12))]
        criterion: Option<u64>,
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
        workers: u64,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (name, inputs, result) = commands::run(&cli.command);
    match result {
        Ok(outcome) => match output::emit(name, inputs, outcome, cli.output_dir.as_deref()) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(1),
            Err(e) => {
                eprintln!("error: writing results: {e}");
                ExitCode::from(2)
            }
        },
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(commands::exit_code(&e))
        }
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use shor::commands::{self, BackendChoice, CliError, InvariantLimits};
use shor_core::analysis::SweepLimits;

/// Shor's algorithm: circuit generation, order finding, factoring and
/// verification.
#[derive(Parser)]
#[command(name = "shor", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the order-finding circuit for (a, N) as OpenQASM 2.0.
    Gen {
        a: u64,
        #[arg(value_name = "N")]
        modulus: u64,
        /// Output file [default: shor_<a>_<N>.qasm]
        #[arg(short, long)]
        out: Option<PathBuf>,
        /// Define c3x and c4x in the file for targets whose qelib1 lacks them.
        #[arg(long)]
        preamble: bool,
    },
    /// Sample the estimate register and recover the order from each outcome.
    OrderFind {
        a: u64,
        #[arg(value_name = "N")]
        modulus: u64,
        #[arg(long, default_value_t = 100_000)]
        shots: u64,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Factor N: pre-processing, then up to --niter random trials.
    Factor {
        #[arg(value_name = "N")]
        modulus: u64,
        #[arg(long, default_value_t = 30)]
        niter: u32,
        #[command(flatten)]
        run: RunArgs,
    },
    /// Run the number-theory sweeps and circuit invariant suites.
    Verify {
        #[arg(long, default_value_t = SweepLimits::default().prime_power_limit)]
        prime_power_limit: u64,
        #[arg(long, default_value_t = SweepLimits::default().cfe_limit)]
        cfe_limit: u64,
        #[arg(long, default_value_t = SweepLimits::default().totient_limit)]
        totient_limit: u64,
        #[arg(long, default_value_t = SweepLimits::default().reduction_limit)]
        reduction_limit: u64,
        /// Largest N for the multiplier truth-table check.
        #[arg(long, default_value_t = InvariantLimits::default().imm_limit)]
        imm_limit: u64,
        /// Largest N for the eigenpair check.
        #[arg(long, default_value_t = InvariantLimits::default().eigen_limit)]
        eigen_limit: u64,
        /// Largest register for the QFT and phase-estimation checks.
        #[arg(long, default_value_t = InvariantLimits::default().qft_qubits)]
        qft_qubits: usize,
        /// Use an off-by-one continued-fraction expansion; verification must fail.
        #[arg(long)]
        inject_fault: bool,
    },
    /// Per-size success and gate-count statistics.
    Stats {
        #[arg(long, default_value_t = 2)]
        min_bits: u32,
        #[arg(long, default_value_t = 10)]
        max_bits: u32,
        /// Also write the table as CSV.
        #[arg(short, long)]
        out: Option<PathBuf>,
    },
}

#[derive(clap::Args)]
struct RunArgs {
    #[arg(long, env = commands::SEED_ENV, default_value_t = 1)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = BackendChoice::Auto)]
    backend: BackendChoice,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut stdout = std::io::stdout().lock();
    let out = &mut stdout;
    match cli.command {
        Command::Gen { a, modulus, out: path, preamble } => {
            let path = path.unwrap_or_else(|| PathBuf::from(format!("shor_{a}_{modulus}.qasm")));
            commands::gen(a, modulus, &path, preamble, out).map(drop)
        }
        Command::OrderFind { a, modulus, shots, run } => {
            commands::order_find(a, modulus, shots, run.seed, run.backend, out).map(drop)
        }
        Command::Factor { modulus, niter, run } => {
            commands::factor(modulus, niter, run.seed, run.backend, out).map(drop)
        }
        Command::Verify {
            prime_power_limit,
            cfe_limit,
            totient_limit,
            reduction_limit,
            imm_limit,
            eigen_limit,
            qft_qubits,
            inject_fault,
        } => {
            let limits = SweepLimits { prime_power_limit, cfe_limit, totient_limit, reduction_limit, inject_fault };
            let inv = InvariantLimits { imm_limit, eigen_limit, qft_qubits };
            commands::verify(&limits, &inv, out)
        }
        Command::Stats { min_bits, max_bits, out: path } => {
            commands::stats_cmd(min_bits..=max_bits, path.as_deref(), out).map(drop)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

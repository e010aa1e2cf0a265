use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hyperdynamo::cli::{
    cmd_deviation, cmd_errata, cmd_evolve, cmd_geometry_check, cmd_reversal, cmd_sweep_eta,
    exit_code_for_error, DeviationArgs, ENV_OUT_DIR, ENV_THREADS,
};

/// Kinematic dynamo laboratory on the hyperbolic half-plane.
#[derive(Parser)]
#[command(name = "hyperdynamo", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Verify the exact geometry against finite-difference oracles.
    GeometryCheck {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evolve the induction equation and write the norm series, snapshots
    /// and a run manifest.
    Evolve {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Per-diffusivity verification runs across an eta list.
    SweepEta {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated eta values; overrides the config's sweep list.
        #[arg(long, value_delimiter = ',')]
        etas: Option<Vec<f64>>,
    },
    /// Locate magnetic reversal lines of the configured closed-form family.
    Reversal {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Integrate the geodesic-deviation equation and compare with the
    /// closed form.
    Deviation {
        #[arg(long)]
        s_end: f64,
        #[arg(long)]
        n_steps: usize,
        #[arg(long, default_value_t = 0.0)]
        j0: f64,
        #[arg(long, default_value_t = 1.0)]
        dj0: f64,
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long)]
        out: PathBuf,
    },
    /// Run the formulation-discrepancy experiments and emit the ledger.
    Errata {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var(ENV_THREADS) {
        match threads.parse::<usize>() {
            Ok(n) if n >= 1 => {
                // thread count affects speed only; results are identical
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("{ENV_THREADS} must be a positive integer, got {threads:?}");
                return ExitCode::from(2);
            }
        }
    }

    let cli = Cli::parse();
    let out_override = std::env::var(ENV_OUT_DIR).ok().map(PathBuf::from);
    let resolve_out = |out: PathBuf| out_override.clone().unwrap_or(out);

    let result = match cli.command {
        Cmd::GeometryCheck { config, out } => cmd_geometry_check(&config, &resolve_out(out)),
        Cmd::Evolve { config, out } => cmd_evolve(&config, &resolve_out(out)),
        Cmd::SweepEta { config, out, etas } => cmd_sweep_eta(&config, &resolve_out(out), etas),
        Cmd::Reversal { config, out } => cmd_reversal(&config, &resolve_out(out)),
        Cmd::Deviation { s_end, n_steps, j0, dj0, tol, out } => {
            let args = DeviationArgs { s_end, n_steps, j0, dj0, tol };
            cmd_deviation(&args, &resolve_out(out))
        }
        Cmd::Errata { config, out } => cmd_errata(&config, &resolve_out(out)),
    };

    match result {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            ExitCode::from(outcome.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code_for_error(&e) as u8)
        }
    }
}

//! Configuration-driven command front end: strict TOML configs, run
//! manifests with artifact hashes, and the command implementations behind
//! the `hyperdynamo` binary.
//!
//! Exit-code contract, stable for scripting:
//! 0 success, 1 check failure, 2 config/usage error, 3 numerical
//! instability.

pub mod commands;
pub mod config;
pub mod manifest;

pub use commands::{
    cmd_deviation, cmd_errata, cmd_evolve, cmd_geometry_check, cmd_reversal, cmd_sweep_eta,
    exit_code_for_error, CmdOutcome, DeviationArgs,
};
pub use config::RunConfigFile;
pub use manifest::{verify_manifest, RunManifest};

/// Environment variable that overrides the output directory.
pub const ENV_OUT_DIR: &str = "HYPERDYNAMO_OUT_DIR";
/// Environment variable that sets the worker-thread count. Affects speed
/// only; results are bit-identical for any value.
pub const ENV_THREADS: &str = "HYPERDYNAMO_THREADS";

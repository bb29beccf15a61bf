//! File formats and command implementations behind the `bnscore` binary.

pub mod commands;
pub mod csv_io;
pub mod docs;
pub mod error;

pub use commands::{execute, run_command, Command, Model, Report, RunConfig};
pub use csv_io::{load_continuous_csv, load_discrete_csv, CsvTable, DeclaredScheme};
pub use error::{CliError, Result};

/// Environment variable overriding the joint state-space cap.
pub const MAX_STATES_ENV: &str = "BNSCORE_MAX_STATES";

/// The state cap from `BNSCORE_MAX_STATES`, or the library default when unset.
pub fn max_states_from_env() -> Result<usize> {
    match std::env::var(MAX_STATES_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(format!("{MAX_STATES_ENV} must be a positive integer, got `{v}`"))),
        Err(std::env::VarError::NotPresent) => Ok(bnscore_core::DEFAULT_MAX_STATES),
        Err(e) => Err(CliError::Config(format!("{MAX_STATES_ENV}: {e}"))),
    }
}

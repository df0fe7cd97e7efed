//! Experiment runner for `caloric-core`: TOML configs, the calibration
//! corpus and CSV output.

pub mod config;
pub mod corpus;
pub mod experiments;
pub mod output;

use caloric_core::Error;

/// Every assertion of the run held.
pub const EXIT_PASS: i32 = 0;
/// At least one assertion failed.
pub const EXIT_FAIL: i32 = 1;
/// Bad configuration or input.
pub const EXIT_CONFIG: i32 = 2;
/// Coverage, resource or I/O trouble.
pub const EXIT_RESOURCE: i32 = 3;

/// Process exit status for an error that aborted a run.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Coverage(_) | Error::Resource(_) | Error::Integration(_) => EXIT_RESOURCE,
                _ => EXIT_CONFIG,
            };
        }
        if cause.downcast_ref::<std::io::Error>().is_some() {
            return EXIT_RESOURCE;
        }
        if cause.downcast_ref::<clap::Error>().is_some() {
            return EXIT_CONFIG;
        }
    }
    EXIT_RESOURCE
}

//! Command-line front end for `cvclone`: scenario reports, parameter sweeps
//! and the built-in verification run.

pub mod error;
pub mod report;
pub mod scenario;
pub mod sweep;
pub mod verify;

pub use error::CliError;

/// Environment variable capping worker threads.
pub const THREADS_ENV: &str = "CVCLONE_THREADS";

/// Shortest round-trip decimal, in exponent form for tiny magnitudes.
pub fn number(v: f64) -> String {
    if v != 0.0 && v.abs() < 1e-4 {
        format!("{v:e}")
    } else {
        v.to_string()
    }
}

//! Command-line and HTTP front ends over certified value tables.

pub mod api;
pub mod cli;
pub mod tables;

/// Installs the JSON log subscriber (one line per event) on stderr.
pub fn init_logging() {
    let filter = tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into());
    let _ = tracing_subscriber::fmt().json().with_env_filter(filter).with_writer(std::io::stderr).try_init();
}

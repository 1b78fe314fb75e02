//! Library surface of the geomreg command-line tool: file formats, SVG
//! plotting, and the subcommand implementations (exposed so integration
//! tests can drive them directly).

pub mod commands;
pub mod error;
pub mod formats;
pub mod plot;

pub use error::CliError;

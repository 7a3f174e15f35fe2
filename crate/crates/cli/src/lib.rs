//! Command-line front end: configuration, file formats and the commands behind `bnr`.

pub mod commands;
pub mod config;
pub mod error;
pub mod io;
pub mod report;

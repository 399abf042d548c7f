//! Command-line front end for the dispersive-readout toolkit: configuration
//! parsing and the `report`, `simulate`, `sweep`, `optimize` and `verify`
//! subcommand implementations.

pub mod config;
pub mod fmt;
pub mod plot;
pub mod report;
pub mod simulate;
pub mod sweep;
pub mod verify;

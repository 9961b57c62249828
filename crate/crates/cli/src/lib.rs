//! Library surface of the command-line driver, exposed so integration
//! tests can call commands directly.

pub mod commands;
pub mod config;

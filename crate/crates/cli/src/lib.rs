//! Library surface of the CLI crate: file formats and command bodies,
//! exposed so integration tests can drive them directly.

pub mod commands;
pub mod error;
pub mod formats;

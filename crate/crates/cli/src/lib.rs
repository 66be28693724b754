//! Library surface of the command-line front end: argument-independent
//! pieces (file formats, config schemas, manifests, report rendering,
//! command implementations) live here so integration tests can drive and
//! inspect them directly; `main.rs` only parses flags and maps errors to
//! exit codes.

pub mod commands;
pub mod config;
pub mod error;
pub mod formats;
pub mod manifest;
pub mod report;

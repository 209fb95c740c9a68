//! Command-line front end for `cobra-core`: TOML run configs, a rayon
//! executor for replica parallelism, and CSV/JSON artifacts.

pub mod commands;
pub mod config;
pub mod exec;
pub mod output;

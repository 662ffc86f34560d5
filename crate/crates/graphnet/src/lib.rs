//! File formats, dataset directories, reports and the command-line front
//! end for [`graphnet_core`].

pub mod cli;
pub mod config;
pub mod manifest;
pub mod meshio;
pub mod report;

pub use graphnet_core as core;

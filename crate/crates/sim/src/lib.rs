//! Coded link-level Monte-Carlo harness for the `cgmimo` detectors and
//! precoders, and the `cgsim` command line built on it.

pub mod cli;
pub mod config;
pub mod report;
pub mod stats;
pub mod sweep;

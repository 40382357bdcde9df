//! Experiment harness: generators, the inequality registry, sweeps, reports
//! and verification suites.

pub mod config;
pub mod error;
pub mod generate;
pub mod registry;
pub mod report;
pub mod sweep;
pub mod suites;
pub mod tools;

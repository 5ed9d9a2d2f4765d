//! Verification suites and single computations behind the `scov` binary.

pub mod commands;
pub mod coverage;
pub mod json;
pub mod suite;

pub use suite::{run_suite, SuiteConfig, SuiteOutcome, SuiteReport, SUITES};

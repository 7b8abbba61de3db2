//! Library surface behind the `polsim` binary: config parsing, run
//! orchestration and file outputs. Kept as a library so experiment harnesses
//! and the acceptance suite can drive the same code paths as the CLI.

pub mod config;
pub mod output;
pub mod runner;

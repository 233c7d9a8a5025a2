//! Command-line harness: config-driven runs, self-tests, perturbation
//! generation and conjugacy verification.

mod commands;
mod config;
mod selftest;

pub use commands::{
    certificate_cutoff, cmd_gen, cmd_run, cmd_verify, parse_eigen, parse_matrix, verification_grid, CliError,
    CliResult, GenArgs, GenManifest, RunReport, RunSummary, VerifyReport,
};
pub use config::{OutputPaths, RunConfig, ScheduleOverrides, OUT_DIR_ENV};
pub use selftest::{format_table, lattice_zeta, reference_matrices, run_selftest, smoothing_ratios, SuiteResult};

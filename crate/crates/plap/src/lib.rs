//! Command-line experiments on top of [`plap_core`]: JSON configuration,
//! seeded sampling, CSV/JSON output, and the verification suites behind
//! `plap verify` and the acceptance target.

// `!(a < b)` rejects NaN along with the out-of-range values
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod commands;
pub mod config;
pub mod sampling;
pub mod suites;
pub mod table;

/// JSON schema of `plap verify` reports.
pub const VERIFY_REPORT_SCHEMA: &str = include_str!("../schema/verify-report.schema.json");
/// JSON schema of the `plap compare` summary.
pub const COMPARE_SUMMARY_SCHEMA: &str = include_str!("../schema/compare-summary.schema.json");

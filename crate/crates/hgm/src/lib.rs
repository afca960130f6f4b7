//! Problem files, reference oracles, CSV tables and the command
//! implementations behind the `hgm` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod commands;
pub mod onset;
pub mod oracle;
pub mod perturb;
pub mod problem;
pub mod table;

pub use commands::{run, Command, CommandError, FitMethod, Report, RunOptions};
pub use problem::{Problem, ProblemError, ProblemFile};

//! S-distribution toolkit built on the closed-form quantile solution.

// Negated comparisons are used on purpose so that NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod designer;
pub mod dist;
pub mod error;
pub mod fitter;
pub mod io;
pub mod lerch;
pub mod optim;
pub mod oracle;
pub mod params;
pub mod sampler;
pub mod solution;

pub use dist::SDistribution;
pub use error::{Error, Result};
pub use params::{classify, Case, CaseClass, SParams};

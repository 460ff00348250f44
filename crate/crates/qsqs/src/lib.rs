//! File formats, configuration, benchmarks and the command-line front end for
//! [`qsqs_core`].

pub mod bench;
pub mod cli;
pub mod compare;
pub mod config;
mod error;
pub mod evaluate;
pub mod io;
pub mod pipeline;
pub mod qubo_json;
pub mod synth;

pub use error::{Error, Result};

//! File formats, the simulation runner and the `mlspec` command line.

pub mod cli;
pub mod experiment;
pub mod io;

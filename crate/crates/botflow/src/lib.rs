//! File formats, report rendering and the command-line front end of botflow.

pub mod cli;
pub mod io;
pub mod report;

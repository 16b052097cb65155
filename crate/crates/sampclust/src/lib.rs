//! File formats, experiment protocols, lemma checks, reports and the
//! command-line front end for `sampclust-core`.

pub mod cli;
mod error;
pub mod experiment;
pub mod io;
pub mod lemmas;
pub mod report;
pub mod synthetic;

pub use error::{Error, Result};
pub use sampclust_core as core;

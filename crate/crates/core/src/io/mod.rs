//! Network files, load/weather profiles, result exports and the synthetic
//! fixture generator.
//!
//! The network file is JSON with an explicit schema version and the mixed
//! field units common to distribution data sets (bar, km, mm, degC, kW);
//! everything converts to SI on load. Profiles are delimiter-separated
//! tables with ISO-8601 timestamps. All writers are byte-deterministic.

mod document;
mod fixture;
mod profiles;
mod results;

pub use document::{
    load_network, load_network_str, save_network, CouplingKindDoc, LoadedNetwork,
    NetworkDocument, SCHEMA_VERSION,
};
pub use fixture::{generate_fixture, generate_profiles, FixtureScale};
pub use profiles::{load_profiles, save_profiles, ProfileSet};
pub use results::{
    summarize_series, write_series, write_snapshot, OutputFormat, SeriesRow, SeriesSummary,
};

use crate::validate::ValidationReport;

#[derive(Debug, thiserror::Error)]
pub enum IoError {
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("parse error at line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("document invalid:\n{}", .0.join("\n"))]
    Document(Vec<String>),
    #[error("network failed validation:\n{0}")]
    Invalid(ValidationReport),
    #[error("profile error: {0}")]
    Profile(String),
}

pub type IoResult<T> = std::result::Result<T, IoError>;

//! Experiment runner library: configuration, reports, plots, and the
//! experiment registry behind the `flowlab` binary.

pub mod acceptance;
pub mod config;
pub mod experiments;
pub mod report;
pub mod svg;

/// Anything that prevents a run from producing a report. A report whose
/// checks fail is not an error; it is a successful run with a negative
/// outcome.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("invalid configuration: {reason}")]
    Config { reason: String },
    #[error("unknown experiment '{name}'; `flowlab list` names the available ones")]
    UnknownExperiment { name: String },
    #[error("{path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Space(#[from] flowlab_core::space::SpaceError),
    #[error(transparent)]
    Picard(#[from] flowlab_core::picard::PicardError),
    #[error(transparent)]
    Maps(#[from] flowlab_core::maps::MapsError),
    #[error(transparent)]
    Ergodic(#[from] flowlab_core::ergodic::ErgodicError),
    #[error(transparent)]
    Infogeo(#[from] flowlab_core::infogeo::InfogeoError),
    #[error(transparent)]
    Spread(#[from] flowlab_core::spread::SpreadError),
    #[error(transparent)]
    Logic(#[from] flowlab_core::logic::LogicError),
    #[error(transparent)]
    Provability(#[from] flowlab_core::provability::ProvabilityError),
}

impl CliError {
    /// Usage-class process exit code. Check failures exit 1 through the
    /// report path instead.
    pub fn exit_code(&self) -> i32 {
        2
    }
}

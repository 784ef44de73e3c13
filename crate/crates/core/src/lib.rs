//! Perishable inventory simulation with lost sales, random yield and lead
//! times, together with analytic cost bounds and policy search.

pub mod bounds;
pub mod bridge;
pub mod cli;
pub mod config;
pub mod demand;
pub mod env;
pub mod evaluator;
pub mod experiment;
pub mod policies;
pub mod report;
pub mod rng;

use std::path::PathBuf;
use thiserror::Error;

/// Top-level error. Input problems map to exit code 2, everything else to 1.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Demand(#[from] demand::DemandError),
    #[error(transparent)]
    Env(#[from] env::EnvError),
    #[error(transparent)]
    Bounds(#[from] bounds::BoundsError),
    #[error(transparent)]
    Policy(#[from] policies::PolicyError),
    #[error(transparent)]
    Eval(#[from] evaluator::EvalError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("{0}")]
    Input(String),
    #[error("{0}")]
    Runtime(String),
}

impl Error {
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Config(_)
            | Error::Io { .. }
            | Error::Demand(_)
            | Error::Env(_)
            | Error::Bounds(_)
            | Error::Input(_) => 2,
            Error::Policy(policies::PolicyError::InvalidParameter(_)) => 2,
            _ => 1,
        }
    }
}

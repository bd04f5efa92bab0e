use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid instance: {entity} `{id}`: {reason}")]
    Instance {
        entity: &'static str,
        id: String,
        reason: String,
    },
    #[error("invalid parameter `{name}`: {reason}")]
    Parameter { name: &'static str, reason: String },
    #[error("missing deadhead entry from `{from}` to `{to}`")]
    MissingDeadhead { from: String, to: String },
    #[error("LP solver failed: {0}")]
    Lp(#[from] crate::lp::LpError),
    #[error("no column can be fixed: all fractional columns are initial or dummy")]
    NoFixableColumn,
    #[error("capacity of station {station} exceeded in block {block} by fixed columns")]
    CapacityViolated { station: usize, block: usize },
    #[error("no integral solution found (best bound {bound})")]
    NoIntegralSolution { bound: f64 },
    #[error("trips cannot be covered by any feasible duty: {}", .trips.join(", "))]
    Uncoverable { trips: Vec<String> },
    #[error("oracle refused: {0}")]
    OracleRefused(String),
    #[error("lower bound undefined for non-positive value {0}")]
    NonPositiveBound(f64),
    #[error("invalid duty: {0}")]
    Duty(String),
}

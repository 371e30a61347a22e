//! Ground truth for small instances.
//!
//! [`oracle_pe`] computes the best window scheduler exactly, with rational
//! arithmetic and no fixed-point or floating-point shortcuts; [`simulate`]
//! estimates what a given window scheduler is worth by sampling runs.

mod simulate;
mod window;

pub use simulate::{simulate, simulate_tails, SimulationEstimate};
pub use window::{oracle_pe, oracle_pe_exhaustive, oracle_pe_restricted, Allowed, OracleResult};

use mdp_preprocess::{FinitenessReason, PreprocessError};

#[derive(Debug, thiserror::Error)]
pub enum OracleError {
    #[error("the maximal partial expectation is infinite ({0})")]
    Infinite(FinitenessReason),
    #[error("negative window {0}")]
    Window(i64),
    #[error("no allowed action at {0} with weight {1}")]
    NoAction(String, i64),
    #[error("{schedulers} schedulers exceed the limit of {limit}")]
    TooMany { schedulers: u64, limit: u64 },
    #[error("a policy keeps runs inside the window forever")]
    Improper,
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

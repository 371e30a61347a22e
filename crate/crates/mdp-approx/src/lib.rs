//! ε-approximation of maximal partial and conditional expectations.
//!
//! The partial expectation is solved on the model unfolded over a finite
//! window of accumulated weights; outside the window the Max (above) or
//! Min (below) memoryless scheduler takes over. The unfolded problem is
//! solved by policy iteration in fixed point and the result comes with a
//! rigorous interval. Conditional expectations are found by binary search
//! over the sign of PE[-θ].

mod band;
mod ce;
mod eval;
mod pe;
mod solve;
mod unfold;
mod window;

use mdp_bounds::BoundsError;
use mdp_preprocess::{FinitenessReason, PreprocessError};

pub use ce::{approx_ce, approx_ce_with, BinarySearchTrace, CeResult, Decision, SearchStep};
pub use eval::{evaluate_window_scheduler, evaluate_window_scheduler_certified, policy_values, WindowValue};
pub use pe::{approx_pe, approx_pe_with, ApproxResult, ApproxTrace};
pub use window::{Phase, SchedulerError, WindowScheduler};

pub const DEFAULT_CELL_LIMIT: u64 = 10_000_000;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproxOptions {
    /// largest number of unfolded cells a single window may have
    pub cell_limit: u64,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        ApproxOptions { cell_limit: DEFAULT_CELL_LIMIT }
    }
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ApproxError {
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("the maximal partial expectation is infinite ({0})")]
    InfinitePe(FinitenessReason),
    #[error("the maximal conditional expectation is not finite ({0})")]
    InfiniteCe(FinitenessReason),
    #[error("resource limit: the window needs {cells} cells, the limit is {limit}")]
    ResourceLimit { cells: u128, limit: u64 },
    #[error("values exceed the fixed-point range")]
    Overflow,
    #[error("certification failed: {0}")]
    Precision(String),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
}

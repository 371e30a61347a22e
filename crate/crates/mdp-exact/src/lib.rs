//! Exact solvers: Markov chains, the extreme memoryless schedulers, and
//! optimal partial expectations when no weight is negative.

mod chain;
mod extreme;
mod nonneg;
mod ssp;

pub use chain::{chain_values, solve_markov_chain};
pub use extreme::{extreme_schedulers, ExtremeSchedulers, MemorylessScheduler};
pub use nonneg::{nonneg_saturation_point, nonneg_solve_exact, nonneg_solve_with_top, ExactPeTable};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum ExactError {
    #[error("the exact solver needs non-negative weights")]
    NegativeWeight,
    #[error("end component {{{}}} can reach goal; apply the spider transformation first", .0.join(", "))]
    EndComponent(Vec<String>),
    #[error("saturation point exceeds the 64-bit range")]
    Overflow,
}

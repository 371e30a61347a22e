//! Graph-level analysis of weighted MDPs: maximal end components, the MEC
//! quotient, extreme reachability probabilities and maximal mean payoff.

mod meanpayoff;
mod mec;
mod reach;
pub mod scc;

pub use meanpayoff::{max_mean_payoff, MeanPayoffResult};
pub use mec::{mec_decompose, mec_decompose_restricted, mec_quotient, EndComponent, MecDecomposition, QuotientMap};
pub use reach::{can_avoid_goal, can_reach_goal, max_reach, min_reach, reach_probabilities, ReachabilityProfile};

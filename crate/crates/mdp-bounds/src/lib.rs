//! Quantitative bounds for MDPs whose end components all drift downwards:
//! super-potentials, tail constants, upper bounds on the partial and
//! conditional expectation and the weight window used by the approximation.

mod potential;
mod report;

pub use potential::{ec_tail_constants, super_potential, super_potential_lp, EcTailConstants, SuperPotential};
pub use report::{compute_bounds, least_tail_exponent, BoundsReport, MecBound};

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum BoundsError {
    #[error("end component {{{}}} has non-negative maximal mean payoff", .0.join(", "))]
    NonNegativeGain(Vec<String>),
    #[error("epsilon must be positive")]
    NonPositiveEpsilon,
    #[error("window bound does not fit into 64 bits")]
    Overflow,
}

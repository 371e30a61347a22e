//! Weighted Markov decision processes with exact rational probabilities.
//!
//! States and actions are identified by position; labels are kept only for I/O.
//! Every downstream crate works on [`Mdp`] values and never mutates them in place.

pub mod linalg;
mod model;
mod rational;
pub mod simplex;
mod validate;

pub use model::{Action, MarkovChain, Mdp, MdpBuilder, ModelConstants, NotAChain, StateId, Weight, FAIL_STATE};
pub use rational::{ceil_to_i64, floor_to_i64, fmt_exact, parse_rational, rat, rint, to_decimal, to_f64, Rational};
pub use validate::{model_constants, validate, ValidationReport, Violation};

//! Model transformations that bring a weighted MDP into the shape the
//! solvers expect, and the finiteness classification built on them.
//!
//! The usual order is [`collapse_to_fail`], [`restrict_reachable`],
//! [`spider_transform`]; [`prepare`] runs all three.

mod collapse;
mod critical;
mod divergence;
mod spider;

use mdp_model::{Mdp, StateId};

pub use collapse::{collapse_to_fail, restrict_reachable};
pub use critical::{check_critical_scheduler, min_reachable_states, posmin_transform};
pub use divergence::check_weight_divergence;
pub use spider::spider_transform;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformKind {
    Collapse,
    Prune,
    Spider,
    Posmin,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TransformTrace {
    pub kind: TransformKind,
    /// name in the transformed model of every original state; `None` if pruned
    pub mapping: Vec<Option<String>>,
    /// set by the collapse when the initial state itself cannot reach goal
    pub goal_unreachable: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum PreprocessError {
    #[error("positively weight-divergent end component {{{}}}", .0.join(", "))]
    WeightDivergent(Vec<String>),
    #[error("critical scheduler: a positive cycle can be pumped while avoiding goal")]
    CriticalScheduler,
    #[error("goal is unreachable from the initial state")]
    GoalUnreachable,
    #[error("path weight exceeds the 64-bit weight range")]
    Overflow,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FinitenessReason {
    Ok,
    WeightDivergentEc,
    CriticalScheduler,
    GoalUnreachable,
}

impl FinitenessReason {
    /// Name used in reports.
    pub fn name(self) -> &'static str {
        match self {
            FinitenessReason::Ok => "ok",
            FinitenessReason::WeightDivergentEc => "weightDivergentEC",
            FinitenessReason::CriticalScheduler => "criticalScheduler",
            FinitenessReason::GoalUnreachable => "goalUnreachable",
        }
    }
}

impl std::fmt::Display for FinitenessReason {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Witness {
    /// states of a positively weight-divergent MEC
    EndComponent(Vec<String>),
    /// (state, action) steps of a positive cycle avoiding goal
    Cycle(Vec<(String, String)>),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FinitenessVerdict {
    pub pe_finite: bool,
    pub ce_finite: bool,
    pub reason: FinitenessReason,
    pub witness: Option<Witness>,
}

/// Decides whether the maximal partial and conditional expectations are finite.
///
/// When goal cannot be reached at all the partial expectation is 0 and the
/// conditional one is undefined, reported as not finite.
pub fn classify_finiteness(model: &Mdp) -> FinitenessVerdict {
    let (collapsed, trace) = collapse_to_fail(model);
    if trace.goal_unreachable {
        return FinitenessVerdict { pe_finite: true, ce_finite: false, reason: FinitenessReason::GoalUnreachable, witness: None };
    }
    if let Some(ec) = check_weight_divergence(&collapsed) {
        let names = ec.states.iter().map(|&s| collapsed.states[s].clone()).collect();
        return FinitenessVerdict {
            pe_finite: false,
            ce_finite: false,
            reason: FinitenessReason::WeightDivergentEc,
            witness: Some(Witness::EndComponent(names)),
        };
    }
    if let Some(cycle) = check_critical_scheduler(&collapsed) {
        let steps = cycle_names(&collapsed, &cycle);
        return FinitenessVerdict {
            pe_finite: true,
            ce_finite: false,
            reason: FinitenessReason::CriticalScheduler,
            witness: Some(Witness::Cycle(steps)),
        };
    }
    FinitenessVerdict { pe_finite: true, ce_finite: true, reason: FinitenessReason::Ok, witness: None }
}

pub fn cycle_names(model: &Mdp, cycle: &[(StateId, usize)]) -> Vec<(String, String)> {
    cycle.iter().map(|&(s, a)| (model.states[s].clone(), model.actions[s][a].label.clone())).collect()
}

/// A model ready for the solvers plus the transformations applied to it.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub model: Mdp,
    pub traces: Vec<TransformTrace>,
}

/// Collapse, prune and flatten. Fails on weight-divergent end components and
/// when goal is unreachable.
pub fn prepare(model: &Mdp) -> Result<Prepared, PreprocessError> {
    let (collapsed, t1) = collapse_to_fail(model);
    if t1.goal_unreachable {
        return Err(PreprocessError::GoalUnreachable);
    }
    let (pruned, t2) = restrict_reachable(&collapsed);
    let (flat, t3) = spider_transform(&pruned)?;
    Ok(Prepared { model: flat, traces: vec![t1, t2, t3] })
}

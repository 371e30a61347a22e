use std::collections::BTreeMap;

use mdp_graph::scc::forward_reach;
use mdp_graph::{can_reach_goal, max_mean_payoff, mec_decompose, mec_decompose_restricted, EndComponent};
use mdp_model::{rint, Mdp, Rational, StateId};
use num_traits::{Signed, Zero};

/// How an end component behaves with respect to accumulated weight.
#[derive(Clone, Debug, PartialEq, Eq)]
pub(crate) enum EcShape {
    /// maximal mean payoff below zero
    Negative,
    /// mean payoff zero and every zero-drift part only has weight-0 cycles;
    /// the parts are returned for flattening
    ZeroCycles(Vec<EndComponent>),
    /// weight can be pumped above any bound almost surely
    Divergent,
}

/// Classifies a (maximal) end component.
///
/// Positive gain pumps weight. With gain zero, take a bias `h` solving the
/// optimality equation: under actions with zero drift `wgt + P h - h`, weight
/// plus `h` is a martingale, so a strongly connected zero-drift part with a
/// non-zero cycle oscillates without bound and pumps weight too.
pub(crate) fn ec_shape(model: &Mdp, ec: &EndComponent) -> EcShape {
    let mp = max_mean_payoff(model, ec);
    if mp.gain.is_positive() {
        return EcShape::Divergent;
    }
    if mp.gain.is_negative() {
        return EcShape::Negative;
    }
    let h: BTreeMap<StateId, Rational> = ec.states.iter().copied().zip(mp.bias).collect();
    let drift = |s: StateId, a: usize| -> Rational {
        let act = &model.actions[s][a];
        act.dist.iter().fold(rint(act.weight) - &h[&s], |acc, (t, p)| acc + p * &h[t])
    };
    let parts = mec_decompose_restricted(model, |s, a| ec.allows(s, a) && drift(s, a).is_zero()).mecs;
    let flat = parts.iter().all(|f| {
        f.actions.iter().all(|(&s, acts)| {
            acts.iter().all(|&a| {
                let act = &model.actions[s][a];
                act.targets().all(|t| (rint(act.weight) + &h[&t] - &h[&s]).is_zero())
            })
        })
    });
    if flat {
        EcShape::ZeroCycles(parts)
    } else {
        EcShape::Divergent
    }
}

/// MECs worth analysing: reachable from the initial state, able to reach goal,
/// and not the terminal goal or fail loops.
pub(crate) fn relevant_mecs(model: &Mdp) -> Vec<EndComponent> {
    let reach_goal = can_reach_goal(model);
    let from_init = forward_reach(model.num_states(), &[model.initial], |s, out| {
        out.extend(model.actions[s].iter().flat_map(|a| a.targets()))
    });
    let terminal = model.terminal_states();
    mec_decompose(model)
        .mecs
        .into_iter()
        .filter(|e| {
            let s = e.states[0];
            reach_goal[s] && from_init[s] && !(e.states.len() == 1 && terminal[s] && model.actions[s][0].weight == 0)
        })
        .collect()
}

/// A positively weight-divergent MEC reachable from the initial state, if any.
pub fn check_weight_divergence(model: &Mdp) -> Option<EndComponent> {
    relevant_mecs(model).into_iter().find(|e| ec_shape(model, e) == EcShape::Divergent)
}

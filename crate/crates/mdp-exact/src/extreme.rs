use std::collections::VecDeque;

use mdp_graph::{reach_probabilities, ReachabilityProfile};
use mdp_model::{rint, Mdp, Rational, StateId};
use num_traits::Zero;

use crate::ssp::{expect, maximize};

/// A memoryless deterministic scheduler with its partial expectations and
/// goal probabilities per state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MemorylessScheduler {
    pub choice: Vec<usize>,
    pub pe: Vec<Rational>,
    pub reach: Vec<Rational>,
    /// one-step values: weight times the successor goal probability plus the
    /// expected partial expectation of the successor, for every action
    pub pe_by_action: Vec<Vec<Rational>>,
}

/// The schedulers maximizing the partial expectation among those reaching
/// goal with maximal (resp. minimal) probability.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExtremeSchedulers {
    pub max: MemorylessScheduler,
    pub min: MemorylessScheduler,
    pub profile: ReachabilityProfile,
}

/// Attaches each state to the target set through an allowed action with a
/// successor attached earlier; the result reaches the targets almost surely.
fn attractor_policy(model: &Mdp, allowed: &[Vec<usize>], target: &[bool]) -> Vec<usize> {
    let n = model.num_states();
    let mut preds: Vec<Vec<(StateId, usize)>> = vec![Vec::new(); n];
    for s in 0..n {
        for &a in &allowed[s] {
            for t in model.actions[s][a].targets() {
                preds[t].push((s, a));
            }
        }
    }
    let mut policy: Vec<Option<usize>> = vec![None; n];
    let mut queue: VecDeque<StateId> = (0..n).filter(|&s| target[s]).collect();
    let mut done = target.to_vec();
    while let Some(t) = queue.pop_front() {
        for &(s, a) in &preds[t] {
            if !done[s] {
                done[s] = true;
                policy[s] = Some(a);
                queue.push_back(s);
            }
        }
    }
    (0..n).map(|s| policy[s].or_else(|| allowed[s].first().copied()).unwrap_or(0)).collect()
}

fn pe_by_action(model: &Mdp, pe: &[Rational], reach_by_action: &[Vec<Rational>]) -> Vec<Vec<Rational>> {
    (0..model.num_states())
        .map(|s| {
            (0..model.actions[s].len())
                .map(|a| &reach_by_action[s][a] * rint(model.actions[s][a].weight) + expect(model, s, a, pe))
                .collect()
        })
        .collect()
}

/// Computes both extreme schedulers exactly.
///
/// Expects a model whose end components (other than goal and fail) have
/// negative maximal mean payoff, as produced by the spider transformation.
pub fn extreme_schedulers(model: &Mdp) -> ExtremeSchedulers {
    let profile = reach_probabilities(model);
    let n = model.num_states();

    // Max: only Act^max, reward weight times p^max of the action
    let fixed: Vec<Option<Rational>> =
        (0..n).map(|s| (s == model.goal || profile.p_max[s].is_zero()).then(Rational::zero)).collect();
    let start = attractor_policy(model, &profile.act_max, &(0..n).map(|s| s == model.goal).collect::<Vec<_>>());
    let reward = |s: StateId, a: usize| rint(model.actions[s][a].weight) * &profile.p_max_by_action[s][a];
    let (choice, pe) = maximize(model, &profile.act_max, &fixed, reward, start);
    let max = MemorylessScheduler {
        pe_by_action: pe_by_action(model, &pe, &profile.p_max_by_action),
        choice,
        pe,
        reach: profile.p_max.clone(),
    };

    // Min: states with p^min = 0 never see goal again under Act^min, so they count 0
    let fixed: Vec<Option<Rational>> =
        (0..n).map(|s| (s == model.goal || profile.p_min[s].is_zero()).then(Rational::zero)).collect();
    let start: Vec<usize> = (0..n).map(|s| profile.act_min[s][0]).collect();
    let reward = |s: StateId, a: usize| rint(model.actions[s][a].weight) * &profile.p_min_by_action[s][a];
    let (choice, pe) = maximize(model, &profile.act_min, &fixed, reward, start);
    let min = MemorylessScheduler {
        pe_by_action: pe_by_action(model, &pe, &profile.p_min_by_action),
        choice,
        pe,
        reach: profile.p_min.clone(),
    };
    ExtremeSchedulers { max, min, profile }
}

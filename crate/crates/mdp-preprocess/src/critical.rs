use mdp_graph::scc::forward_reach;
use mdp_graph::{reach_probabilities, ReachabilityProfile};
use mdp_model::{Action, Mdp, StateId, Weight};
use num_traits::Zero;

use crate::{PreprocessError, TransformKind, TransformTrace};

/// States reachable from the initial state using only actions in Act^min.
pub fn min_reachable_states(model: &Mdp, profile: &ReachabilityProfile) -> Vec<bool> {
    forward_reach(model.num_states(), &[model.initial], |s, out| {
        out.extend(profile.act_min[s].iter().flat_map(|&a| model.actions[s][a].targets()))
    })
}

/// Outcome of the longest-path computation on (S_0, Act^min).
enum LongestPaths {
    Finite(Vec<Option<i128>>),
    /// a cycle of positive weight, as (state, action) steps
    PositiveCycle(Vec<(StateId, usize)>),
}

/// Bellman-Ford for maximal path weights from the initial state within `in_s0`.
/// If an improvement still happens after |S_0| rounds there is a positive cycle.
fn longest_paths(model: &Mdp, profile: &ReachabilityProfile, in_s0: &[bool]) -> LongestPaths {
    let n = model.num_states();
    let mut dist: Vec<Option<i128>> = vec![None; n];
    let mut pred: Vec<Option<(StateId, usize)>> = vec![None; n];
    dist[model.initial] = Some(0);
    let rounds = in_s0.iter().filter(|&&b| b).count();
    for round in 0..=rounds {
        let mut improved = None;
        for s in (0..n).filter(|&s| in_s0[s]) {
            let Some(ds) = dist[s] else { continue };
            for &a in &profile.act_min[s] {
                let cand = ds + i128::from(model.actions[s][a].weight);
                for t in model.actions[s][a].targets() {
                    if dist[t].is_none_or(|dt| cand > dt) {
                        dist[t] = Some(cand);
                        pred[t] = Some((s, a));
                        improved = Some(t);
                    }
                }
            }
        }
        match improved {
            None => return LongestPaths::Finite(dist),
            Some(mut t) if round == rounds => {
                // walk back far enough to be on the cycle, then collect it
                for _ in 0..n {
                    t = pred[t].expect("improved states have predecessors").0;
                }
                let mut cycle = Vec::new();
                let mut u = t;
                loop {
                    let (p, a) = pred[u].unwrap();
                    cycle.push((p, a));
                    u = p;
                    if u == t {
                        break;
                    }
                }
                cycle.reverse();
                return LongestPaths::PositiveCycle(cycle);
            }
            Some(_) => {}
        }
    }
    unreachable!("the last round returns")
}

/// A positive-weight cycle inside (S_0, Act^min) when p^min(s_init) = 0.
///
/// Returns `None` when p^min(s_init) > 0, as then no scheduler avoids goal surely.
pub fn check_critical_scheduler(model: &Mdp) -> Option<Vec<(StateId, usize)>> {
    let profile = reach_probabilities(model);
    if !profile.p_min[model.initial].is_zero() {
        return None;
    }
    let in_s0 = min_reachable_states(model, &profile);
    match longest_paths(model, &profile, &in_s0) {
        LongestPaths::PositiveCycle(c) => Some(c),
        LongestPaths::Finite(_) => None,
    }
}

fn unique_name(model: &Mdp, base: &str) -> String {
    let taken = |n: &str| model.states.iter().any(|s| s == n);
    if !taken(base) {
        return base.to_string();
    }
    (1..).map(|i| format!("{base}_{i}")).find(|n| !taken(n)).expect("unbounded")
}

/// Adds a new initial state `t_init` from which the scheduler commits to the
/// state in S_0 and the non-minimizing action with which to leave S_0, paying
/// the maximal weight w_s with which that state is reachable inside S_0.
///
/// Identity when p^min(s_init) > 0 already.
pub fn posmin_transform(model: &Mdp) -> Result<(Mdp, TransformTrace), PreprocessError> {
    let profile = reach_probabilities(model);
    let identity: Vec<Option<String>> = model.states.iter().cloned().map(Some).collect();
    if !profile.p_min[model.initial].is_zero() {
        return Ok((model.clone(), TransformTrace { kind: TransformKind::Posmin, mapping: identity, goal_unreachable: false }));
    }
    if profile.p_max[model.initial].is_zero() {
        return Err(PreprocessError::GoalUnreachable);
    }
    let in_s0 = min_reachable_states(model, &profile);
    let dist = match longest_paths(model, &profile, &in_s0) {
        LongestPaths::Finite(d) => d,
        LongestPaths::PositiveCycle(_) => return Err(PreprocessError::CriticalScheduler),
    };
    let mut out = model.clone();
    let t_init = out.states.len();
    out.states.push(unique_name(model, "t_init"));
    out.actions.push(Vec::new());
    for s in (0..model.num_states()).filter(|&s| in_s0[s]) {
        let ws = Weight::try_from(dist[s].expect("S_0 states are reached")).map_err(|_| PreprocessError::Overflow)?;
        for (a, act) in model.actions[s].iter().enumerate() {
            if profile.in_act_min(s, a) {
                continue;
            }
            let t = out.states.len();
            out.states.push(unique_name(&out, &format!("t_{}_{}", model.states[s], act.label)));
            out.actions.push(vec![act.clone()]);
            let label = out.fresh_label(t_init, &format!("beta_{}_{}", model.states[s], act.label));
            out.actions[t_init].push(Action::new(label, ws, vec![(t, mdp_model::rint(1))]));
        }
    }
    out.initial = t_init;
    Ok((out, TransformTrace { kind: TransformKind::Posmin, mapping: identity, goal_unreachable: false }))
}

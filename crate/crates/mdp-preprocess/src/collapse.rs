use mdp_graph::can_reach_goal;
use mdp_graph::scc::forward_reach;
use mdp_model::{Action, Mdp, Rational, StateId, FAIL_STATE};

use crate::{TransformKind, TransformTrace};

/// Builds the model on the states with `new_of_old[s] = Some(_)`, renumbered,
/// with `extra` appended. Distributions are pushed through the renumbering and
/// merged; targets mapped to `None` are not allowed.
pub(crate) fn rebuild(model: &Mdp, new_of_old: &[Option<StateId>], extra: Vec<(String, Vec<Action>)>) -> Mdp {
    let kept = new_of_old.iter().filter(|x| x.is_some()).count();
    let mut states = vec![String::new(); kept];
    let mut actions = vec![Vec::new(); kept];
    for (s, x) in new_of_old.iter().enumerate() {
        let Some(x) = *x else { continue };
        states[x] = model.states[s].clone();
        actions[x] = model.actions[s]
            .iter()
            .map(|a| {
                let dist = merge(a.dist.iter().map(|(t, p)| (new_of_old[*t].expect("target kept"), p.clone())));
                Action::new(a.label.clone(), a.weight, dist)
            })
            .collect();
    }
    for (name, acts) in extra {
        states.push(name);
        actions.push(acts);
    }
    Mdp {
        states,
        initial: new_of_old[model.initial].expect("initial kept"),
        goal: new_of_old[model.goal].expect("goal kept"),
        actions,
    }
}

/// Sums probabilities of equal targets, keeping first-appearance order.
pub(crate) fn merge(items: impl IntoIterator<Item = (StateId, Rational)>) -> Vec<(StateId, Rational)> {
    let mut out: Vec<(StateId, Rational)> = Vec::new();
    for (t, p) in items {
        match out.iter_mut().find(|(u, _)| *u == t) {
            Some((_, q)) => *q += p,
            None => out.push((t, p)),
        }
    }
    out
}

pub(crate) fn mapping_of(model: &Mdp, new_of_old: &[Option<StateId>], names: &[String]) -> Vec<Option<String>> {
    (0..model.num_states()).map(|s| new_of_old[s].map(|x| names[x].clone())).collect()
}

/// Merges every state that cannot reach goal into one absorbing `__fail` state.
///
/// The model is returned unchanged when every state reaches goal. The trace
/// flags `goal_unreachable` when the initial state itself was merged.
pub fn collapse_to_fail(model: &Mdp) -> (Mdp, TransformTrace) {
    let reach = can_reach_goal(model);
    let identity = || (0..model.num_states()).map(|s| Some(model.states[s].clone())).collect();
    if reach.iter().all(|&r| r) {
        return (model.clone(), TransformTrace { kind: TransformKind::Collapse, mapping: identity(), goal_unreachable: false });
    }
    let mut next = 0;
    let mut new_of_old: Vec<Option<StateId>> = reach
        .iter()
        .map(|&r| {
            r.then(|| {
                next += 1;
                next - 1
            })
        })
        .collect();
    let fail = next;
    for x in new_of_old.iter_mut().filter(|x| x.is_none()) {
        *x = Some(fail);
    }
    let mut out = Mdp {
        states: vec![String::new(); fail],
        initial: new_of_old[model.initial].unwrap(),
        goal: new_of_old[model.goal].unwrap(),
        actions: vec![Vec::new(); fail],
    };
    for s in (0..model.num_states()).filter(|&s| reach[s]) {
        let x = new_of_old[s].unwrap();
        out.states[x] = model.states[s].clone();
        out.actions[x] = model.actions[s]
            .iter()
            .map(|a| Action::new(a.label.clone(), a.weight, merge(a.dist.iter().map(|(t, p)| (new_of_old[*t].unwrap(), p.clone())))))
            .collect();
    }
    out.add_absorbing_state(FAIL_STATE);
    let mapping = mapping_of(model, &new_of_old, &out.states);
    let trace = TransformTrace { kind: TransformKind::Collapse, mapping, goal_unreachable: !reach[model.initial] };
    (out, trace)
}

/// Drops the states that cannot be reached from the initial state (goal is always kept).
pub fn restrict_reachable(model: &Mdp) -> (Mdp, TransformTrace) {
    let mut seen = forward_reach(model.num_states(), &[model.initial], |s, out| {
        out.extend(model.actions[s].iter().flat_map(|a| a.targets()))
    });
    seen[model.goal] = true;
    let mut next = 0;
    let new_of_old: Vec<Option<StateId>> = seen
        .iter()
        .map(|&r| {
            r.then(|| {
                next += 1;
                next - 1
            })
        })
        .collect();
    let out = rebuild(model, &new_of_old, Vec::new());
    let mapping = mapping_of(model, &new_of_old, &out.states);
    (out, TransformTrace { kind: TransformKind::Prune, mapping, goal_unreachable: false })
}

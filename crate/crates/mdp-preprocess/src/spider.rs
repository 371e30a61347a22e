use std::collections::BTreeMap;

use mdp_graph::scc::sccs;
use mdp_graph::EndComponent;
use mdp_model::{rint, Action, Mdp, StateId, Weight, FAIL_STATE};

use crate::divergence::{ec_shape, relevant_mecs, EcShape};
use crate::{PreprocessError, TransformKind, TransformTrace};

/// A sub-end component with one action per state inside `part`:
/// a bottom strongly connected component of the first-action policy.
fn single_action_ec(model: &Mdp, part: &EndComponent) -> BTreeMap<StateId, usize> {
    let local: BTreeMap<StateId, usize> = part.states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let choice: Vec<usize> = part.states.iter().map(|s| part.actions[s][0]).collect();
    let edges: Vec<(usize, usize)> = part
        .states
        .iter()
        .enumerate()
        .flat_map(|(i, &s)| model.actions[s][choice[i]].targets().map(|t| (i, local[&t])).collect::<Vec<_>>())
        .collect();
    // the first component in reverse topological order has no outgoing edges
    let bottom = &sccs(part.states.len(), edges)[0];
    bottom.iter().map(|&i| (part.states[i], choice[i])).collect()
}

/// Flattens one single-action end component whose cycles all have weight 0.
fn flatten(model: &mut Mdp, sub: &BTreeMap<StateId, usize>) {
    let fail = model.fail_state().unwrap_or_else(|| model.add_absorbing_state(FAIL_STATE));
    let s0 = *sub.keys().next().expect("non-empty");
    // weight of the (unique-weight) paths from each state to s0
    let mut w: BTreeMap<StateId, Weight> = BTreeMap::from([(s0, 0)]);
    while w.len() < sub.len() {
        for (&s, &a) in sub {
            if w.contains_key(&s) {
                continue;
            }
            let act = &model.actions[s][a];
            if let Some(t) = act.targets().find(|t| w.contains_key(t)) {
                w.insert(s, act.weight + w[&t]);
            }
        }
    }
    let mut moved: Vec<Action> = Vec::new();
    for (&s, &a) in sub {
        if s == s0 {
            continue;
        }
        let name = model.states[s].clone();
        for (b, act) in model.actions[s].iter().enumerate() {
            if b != a {
                moved.push(Action::new(format!("{}_{}", act.label, name), act.weight - w[&s], act.dist.clone()));
            }
        }
        model.actions[s] = vec![Action::new("tau", w[&s], vec![(s0, rint(1))])];
    }
    model.actions[s0].remove(sub[&s0]);
    for mut act in moved {
        act.label = model.fresh_label(s0, &act.label);
        model.actions[s0].push(act);
    }
    let label = model.fresh_label(s0, "tau");
    model.actions[s0].push(Action::new(label, 0, vec![(fail, rint(1))]));
}

/// Removes every end component with non-negative maximal mean payoff (other
/// than the terminal goal and fail loops) by repeated flattening.
///
/// Expects a model in which every state reaches goal; end components that
/// cannot reach goal are left alone.
pub fn spider_transform(model: &Mdp) -> Result<(Mdp, TransformTrace), PreprocessError> {
    let mut out = model.clone();
    loop {
        let mut flattened = false;
        for ec in relevant_mecs(&out) {
            match ec_shape(&out, &ec) {
                EcShape::Negative => {}
                EcShape::Divergent => {
                    return Err(PreprocessError::WeightDivergent(ec.states.iter().map(|&s| out.states[s].clone()).collect()))
                }
                EcShape::ZeroCycles(parts) => {
                    let sub = single_action_ec(&out, &parts[0]);
                    flatten(&mut out, &sub);
                    flattened = true;
                    break;
                }
            }
        }
        if !flattened {
            let mapping = (0..model.num_states()).map(|s| Some(model.states[s].clone())).collect();
            return Ok((out, TransformTrace { kind: TransformKind::Spider, mapping, goal_unreachable: false }));
        }
    }
}

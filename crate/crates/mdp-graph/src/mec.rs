use std::collections::BTreeMap;

use mdp_model::{Action, Mdp, Rational, StateId};
use num_traits::Zero;

use crate::scc::sccs;

/// A set of states together with, per state, the enabled actions that never leave it.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EndComponent {
    pub states: Vec<StateId>,
    /// action indices per member state, sorted
    pub actions: BTreeMap<StateId, Vec<usize>>,
}

impl EndComponent {
    pub fn contains(&self, s: StateId) -> bool {
        self.states.binary_search(&s).is_ok()
    }

    pub fn allows(&self, s: StateId, a: usize) -> bool {
        self.actions.get(&s).is_some_and(|v| v.binary_search(&a).is_ok())
    }

    /// Checks closure and strong connectivity against `model`.
    pub fn is_end_component(&self, model: &Mdp) -> bool {
        if self.states.is_empty() {
            return false;
        }
        for &s in &self.states {
            let Some(acts) = self.actions.get(&s) else { return false };
            if acts.is_empty() {
                return false;
            }
            for &a in acts {
                if !model.actions[s][a].targets().all(|t| self.contains(t)) {
                    return false;
                }
            }
        }
        let local: BTreeMap<StateId, usize> = self.states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let edges = self.actions.iter().flat_map(|(&s, acts)| {
            let local = &local;
            acts.iter().flat_map(move |&a| model.actions[s][a].targets().map(move |t| (local[&s], local[&t])))
        });
        sccs(self.states.len(), edges).len() == 1
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MecDecomposition {
    pub mecs: Vec<EndComponent>,
    pub membership: Vec<Option<usize>>,
}

/// Maximal end components restricted to the actions accepted by `allowed`.
pub fn mec_decompose_restricted(model: &Mdp, allowed: impl Fn(StateId, usize) -> bool) -> MecDecomposition {
    let n = model.num_states();
    let mut enabled: Vec<Vec<usize>> =
        (0..n).map(|s| (0..model.actions[s].len()).filter(|&a| allowed(s, a)).collect()).collect();
    loop {
        let edges: Vec<(usize, usize)> = (0..n)
            .flat_map(|s| enabled[s].iter().flat_map(move |&a| model.actions[s][a].targets().map(move |t| (s, t))))
            .collect();
        let mut comp = vec![usize::MAX; n];
        for (i, c) in sccs(n, edges).into_iter().enumerate() {
            for s in c {
                comp[s] = i;
            }
        }
        let mut changed = false;
        for s in 0..n {
            let before = enabled[s].len();
            enabled[s].retain(|&a| model.actions[s][a].targets().all(|t| comp[t] == comp[s]));
            changed |= enabled[s].len() != before;
        }
        if !changed {
            let mut groups: BTreeMap<usize, Vec<StateId>> = BTreeMap::new();
            for s in (0..n).filter(|&s| !enabled[s].is_empty()) {
                groups.entry(comp[s]).or_default().push(s);
            }
            let mut mecs: Vec<EndComponent> = groups
                .into_values()
                .map(|states| {
                    let actions = states.iter().map(|&s| (s, enabled[s].clone())).collect();
                    EndComponent { states, actions }
                })
                .collect();
            mecs.sort_by_key(|e| e.states[0]);
            let mut membership = vec![None; n];
            for (i, e) in mecs.iter().enumerate() {
                for &s in &e.states {
                    membership[s] = Some(i);
                }
            }
            return MecDecomposition { mecs, membership };
        }
    }
}

pub fn mec_decompose(model: &Mdp) -> MecDecomposition {
    mec_decompose_restricted(model, |_, _| true)
}

/// Relates original states to quotient states.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct QuotientMap {
    pub of_state: Vec<StateId>,
    /// quotient states left without any enabled action (a MEC nothing leaves)
    pub actionless: Vec<StateId>,
    /// for every quotient action, the original (state, action) it stems from
    pub origin: Vec<Vec<(StateId, usize)>>,
}

/// Collapses every MEC into one state that keeps exactly the actions leaving it.
/// The goal keeps its self-loop so that it stays absorbing.
pub fn mec_quotient(model: &Mdp, dec: &MecDecomposition) -> (Mdp, QuotientMap) {
    let n = model.num_states();
    let mut of_state = vec![usize::MAX; n];
    let mut names = Vec::new();
    let mut rep_of_mec = vec![usize::MAX; dec.mecs.len()];
    for s in 0..n {
        match dec.membership[s] {
            Some(m) if rep_of_mec[m] != usize::MAX => of_state[s] = rep_of_mec[m],
            Some(m) => {
                rep_of_mec[m] = names.len();
                of_state[s] = names.len();
                let e = &dec.mecs[m];
                names.push(if e.states.len() == 1 {
                    model.states[s].clone()
                } else {
                    format!("mec_{}", model.states[e.states[0]])
                });
            }
            None => {
                of_state[s] = names.len();
                names.push(model.states[s].clone());
            }
        }
    }
    let q = names.len();
    let mut actions: Vec<Vec<Action>> = vec![Vec::new(); q];
    let mut origin: Vec<Vec<(StateId, usize)>> = vec![Vec::new(); q];
    for s in 0..n {
        let inside = dec.membership[s].map(|m| &dec.mecs[m]);
        for (ai, a) in model.actions[s].iter().enumerate() {
            if inside.is_some_and(|e| e.allows(s, ai)) && s != model.goal {
                continue;
            }
            let mut merged: BTreeMap<StateId, Rational> = BTreeMap::new();
            for (t, p) in &a.dist {
                *merged.entry(of_state[*t]).or_insert_with(Rational::zero) += p;
            }
            let qs = of_state[s];
            let label = if inside.is_some_and(|e| e.states.len() > 1) {
                format!("{}__{}", model.states[s], a.label)
            } else {
                a.label.clone()
            };
            actions[qs].push(Action::new(label, a.weight, merged.into_iter().collect()));
            origin[qs].push((s, ai));
        }
    }
    let actionless = (0..q).filter(|&x| actions[x].is_empty()).collect();
    let quotient = Mdp { states: names, initial: of_state[model.initial], goal: of_state[model.goal], actions };
    (quotient, QuotientMap { of_state, actionless, origin })
}

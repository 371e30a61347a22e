use std::collections::HashMap;

use num_traits::{One, Zero};

use crate::rational::Rational;

pub type StateId = usize;
pub type Weight = i64;

/// Name of the absorbing sink introduced by preprocessing.
pub const FAIL_STATE: &str = "__fail";

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Action {
    pub label: String,
    pub weight: Weight,
    pub dist: Vec<(StateId, Rational)>,
}

impl Action {
    pub fn new(label: impl Into<String>, weight: Weight, dist: Vec<(StateId, Rational)>) -> Self {
        Action { label: label.into(), weight, dist }
    }

    pub fn self_loop(label: impl Into<String>, state: StateId) -> Self {
        Action::new(label, 0, vec![(state, Rational::one())])
    }

    pub fn targets(&self) -> impl Iterator<Item = StateId> + '_ {
        self.dist.iter().map(|(t, _)| *t)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mdp {
    pub states: Vec<String>,
    pub initial: StateId,
    pub goal: StateId,
    pub actions: Vec<Vec<Action>>,
}

impl Mdp {
    pub fn builder() -> MdpBuilder {
        MdpBuilder::default()
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn state_index(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    pub fn fail_state(&self) -> Option<StateId> {
        self.state_index(FAIL_STATE)
    }

    pub fn action_index(&self, s: StateId, label: &str) -> Option<usize> {
        self.actions[s].iter().position(|a| a.label == label)
    }

    /// True when the only enabled action loops back with probability one.
    pub fn is_absorbing(&self, s: StateId) -> bool {
        match self.actions[s].as_slice() {
            [a] => a.dist.len() == 1 && a.dist[0].0 == s,
            _ => false,
        }
    }

    /// Goal and every other absorbing state.
    pub fn terminal_states(&self) -> Vec<bool> {
        (0..self.num_states()).map(|s| s == self.goal || self.is_absorbing(s)).collect()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.iter().map(Vec::len).sum()
    }

    pub fn max_abs_weight(&self) -> Weight {
        self.actions.iter().flatten().map(|a| a.weight.abs()).max().unwrap_or(0)
    }

    pub fn has_negative_weight(&self) -> bool {
        self.actions.iter().flatten().any(|a| a.weight < 0)
    }

    /// Appends a fresh absorbing state and returns its index.
    pub fn add_absorbing_state(&mut self, name: impl Into<String>) -> StateId {
        let id = self.states.len();
        self.states.push(name.into());
        self.actions.push(vec![Action::self_loop("stay", id)]);
        id
    }

    /// A label not yet used in state `s`, derived from `base`.
    pub fn fresh_label(&self, s: StateId, base: &str) -> String {
        let taken = |l: &str| self.actions[s].iter().any(|a| a.label == l);
        if !taken(base) {
            return base.to_string();
        }
        (1..).map(|i| format!("{base}_{i}")).find(|l| !taken(l)).expect("unbounded")
    }

    /// Same model with states listed in the order `order` (a permutation of indices).
    pub fn reorder_states(&self, order: &[StateId]) -> Mdp {
        let mut new_index = vec![0; order.len()];
        for (new, &old) in order.iter().enumerate() {
            new_index[old] = new;
        }
        let actions = order
            .iter()
            .map(|&old| {
                self.actions[old]
                    .iter()
                    .map(|a| Action {
                        label: a.label.clone(),
                        weight: a.weight,
                        dist: a.dist.iter().map(|(t, p)| (new_index[*t], p.clone())).collect(),
                    })
                    .collect()
            })
            .collect();
        Mdp {
            states: order.iter().map(|&old| self.states[old].clone()).collect(),
            initial: new_index[self.initial],
            goal: new_index[self.goal],
            actions,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelConstants {
    pub w: Weight,
    pub delta: Rational,
    pub state_count: usize,
}

/// An MDP in which every state enables exactly one action.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MarkovChain(Mdp);

#[derive(Debug, thiserror::Error)]
#[error("state {state} enables {count} actions; a Markov chain needs exactly one")]
pub struct NotAChain {
    pub state: String,
    pub count: usize,
}

impl MarkovChain {
    pub fn mdp(&self) -> &Mdp {
        &self.0
    }

    pub fn into_mdp(self) -> Mdp {
        self.0
    }
}

impl TryFrom<Mdp> for MarkovChain {
    type Error = NotAChain;

    fn try_from(m: Mdp) -> Result<Self, NotAChain> {
        if let Some(s) = (0..m.num_states()).find(|&s| m.actions[s].len() != 1) {
            return Err(NotAChain { state: m.states[s].clone(), count: m.actions[s].len() });
        }
        Ok(MarkovChain(m))
    }
}

/// Incremental construction by state name; states are created on first mention.
#[derive(Default, Debug, Clone)]
pub struct MdpBuilder {
    states: Vec<String>,
    index: HashMap<String, StateId>,
    actions: Vec<Vec<Action>>,
    initial: Option<StateId>,
    goal: Option<StateId>,
}

impl MdpBuilder {
    pub fn state(&mut self, name: &str) -> StateId {
        if let Some(&id) = self.index.get(name) {
            return id;
        }
        let id = self.states.len();
        self.states.push(name.to_string());
        self.index.insert(name.to_string(), id);
        self.actions.push(Vec::new());
        id
    }

    pub fn initial(mut self, name: &str) -> Self {
        self.initial = Some(self.state(name));
        self
    }

    pub fn goal(mut self, name: &str) -> Self {
        self.goal = Some(self.state(name));
        self
    }

    pub fn set_initial(&mut self, name: &str) {
        self.initial = Some(self.state(name));
    }

    pub fn set_goal(&mut self, name: &str) {
        self.goal = Some(self.state(name));
    }

    pub fn action(mut self, state: &str, label: &str, weight: Weight, dist: &[(&str, Rational)]) -> Self {
        self.push_action(state, label, weight, dist.iter().map(|(t, p)| (*t, p.clone())));
        self
    }

    pub fn push_action<'a>(
        &mut self,
        state: &str,
        label: &str,
        weight: Weight,
        dist: impl IntoIterator<Item = (&'a str, Rational)>,
    ) {
        let s = self.state(state);
        let dist = dist.into_iter().map(|(t, p)| (self.state(t), p)).collect();
        self.actions[s].push(Action::new(label, weight, dist));
    }

    pub fn has_actions(&self, name: &str) -> bool {
        self.index.get(name).is_some_and(|&s| !self.actions[s].is_empty())
    }

    pub fn initial_id(&self) -> Option<StateId> {
        self.initial
    }

    pub fn goal_id(&self) -> Option<StateId> {
        self.goal
    }

    /// Finishes the model. A goal without actions receives its weight-0 self-loop.
    /// Panics if initial or goal is missing; parsers check that first.
    pub fn build(mut self) -> Mdp {
        let goal = self.goal.expect("goal state not set");
        let initial = self.initial.expect("initial state not set");
        if self.actions[goal].is_empty() {
            self.actions[goal].push(Action::self_loop("stay", goal));
        }
        Mdp { states: self.states, initial, goal, actions: self.actions }
    }
}

/// Sum of a distribution's probabilities.
pub(crate) fn dist_sum(dist: &[(StateId, Rational)]) -> Rational {
    dist.iter().fold(Rational::zero(), |acc, (_, p)| acc + p)
}

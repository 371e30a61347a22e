use mdp_model::linalg::SparseSystem;
use mdp_model::{Mdp, Rational, StateId};
use num_traits::{One, Zero};

use crate::mec::{mec_decompose, mec_quotient};
use crate::scc::forward_reach;

/// Extreme goal-reachability probabilities and the actions attaining them.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ReachabilityProfile {
    pub p_max: Vec<Rational>,
    pub p_min: Vec<Rational>,
    pub p_max_by_action: Vec<Vec<Rational>>,
    pub p_min_by_action: Vec<Vec<Rational>>,
    pub act_max: Vec<Vec<usize>>,
    pub act_min: Vec<Vec<usize>>,
}

impl ReachabilityProfile {
    pub fn in_act_max(&self, s: StateId, a: usize) -> bool {
        self.act_max[s].binary_search(&a).is_ok()
    }

    pub fn in_act_min(&self, s: StateId, a: usize) -> bool {
        self.act_min[s].binary_search(&a).is_ok()
    }
}

pub(crate) fn expect(model: &Mdp, s: StateId, a: usize, x: &[Rational]) -> Rational {
    model.actions[s][a].dist.iter().fold(Rational::zero(), |acc, (t, p)| acc + p * &x[*t])
}

/// States from which the goal is reachable in the underlying graph.
pub fn can_reach_goal(model: &Mdp) -> Vec<bool> {
    let n = model.num_states();
    let mut preds: Vec<Vec<StateId>> = vec![Vec::new(); n];
    for s in 0..n {
        for a in &model.actions[s] {
            for t in a.targets() {
                preds[t].push(s);
            }
        }
    }
    forward_reach(n, &[model.goal], |s, out| out.extend_from_slice(&preds[s]))
}

/// States that can avoid the goal forever with probability one.
pub fn can_avoid_goal(model: &Mdp) -> Vec<bool> {
    let n = model.num_states();
    let mut z: Vec<bool> = (0..n).map(|s| s != model.goal).collect();
    loop {
        let mut changed = false;
        for s in 0..n {
            if z[s] && !model.actions[s].iter().any(|a| a.targets().all(|t| z[t])) {
                z[s] = false;
                changed = true;
            }
        }
        if !changed {
            return z;
        }
    }
}

/// Evaluates a memoryless policy for reaching goal; `fixed` holds known values.
fn evaluate(model: &Mdp, policy: &[usize], fixed: &[Option<Rational>]) -> Vec<Rational> {
    let n = model.num_states();
    let unknown: Vec<StateId> = (0..n).filter(|&s| fixed[s].is_none()).collect();
    let mut pos = vec![usize::MAX; n];
    for (i, &s) in unknown.iter().enumerate() {
        pos[s] = i;
    }
    let mut sys = SparseSystem::new(unknown.len());
    for (i, &s) in unknown.iter().enumerate() {
        sys.add(i, i, &Rational::one());
        for (t, p) in &model.actions[s][policy[s]].dist {
            match &fixed[*t] {
                Some(v) => sys.add_rhs(i, &(p * v)),
                None => sys.add(i, pos[*t], &-p),
            }
        }
    }
    let sol = sys.solve().expect("policy evaluation on a transient system");
    (0..n).map(|s| fixed[s].clone().unwrap_or_else(|| sol[pos[s]].clone())).collect()
}

/// Policy iteration for extreme reachability on a model where every policy is
/// absorbed in the `fixed` states. Keeps the current action unless another is strictly better.
fn policy_iteration(model: &Mdp, fixed: &[Option<Rational>], maximize: bool) -> Vec<Rational> {
    let n = model.num_states();
    let mut policy = vec![0usize; n];
    loop {
        let x = evaluate(model, &policy, fixed);
        let mut changed = false;
        for s in (0..n).filter(|&s| fixed[s].is_none()) {
            let mut best = expect(model, s, policy[s], &x);
            for a in 0..model.actions[s].len() {
                let v = expect(model, s, a, &x);
                if (maximize && v > best) || (!maximize && v < best) {
                    best = v;
                    policy[s] = a;
                    changed = true;
                }
            }
        }
        if !changed {
            return x;
        }
    }
}

pub fn max_reach(model: &Mdp) -> Vec<Rational> {
    let reach = can_reach_goal(model);
    let dec = mec_decompose(model);
    let (q, map) = mec_quotient(model, &dec);
    let nq = q.num_states();
    let mut fixed: Vec<Option<Rational>> = vec![None; nq];
    fixed[q.goal] = Some(Rational::one());
    for &x in &map.actionless {
        fixed[x] = Some(Rational::zero());
    }
    for s in 0..model.num_states() {
        if !reach[s] {
            fixed[map.of_state[s]] = Some(Rational::zero());
        }
    }
    let xq = policy_iteration(&q, &fixed, true);
    (0..model.num_states()).map(|s| xq[map.of_state[s]].clone()).collect()
}

pub fn min_reach(model: &Mdp) -> Vec<Rational> {
    let avoid = can_avoid_goal(model);
    let fixed: Vec<Option<Rational>> = (0..model.num_states())
        .map(|s| {
            if s == model.goal {
                Some(Rational::one())
            } else if avoid[s] {
                Some(Rational::zero())
            } else {
                None
            }
        })
        .collect();
    policy_iteration(model, &fixed, false)
}

pub fn reach_probabilities(model: &Mdp) -> ReachabilityProfile {
    let p_max = max_reach(model);
    let p_min = min_reach(model);
    let n = model.num_states();
    let by_action = |x: &[Rational]| -> Vec<Vec<Rational>> {
        (0..n).map(|s| (0..model.actions[s].len()).map(|a| expect(model, s, a, x)).collect()).collect()
    };
    let p_max_by_action = by_action(&p_max);
    let p_min_by_action = by_action(&p_min);
    let act_max = (0..n)
        .map(|s| (0..model.actions[s].len()).filter(|&a| p_max_by_action[s][a] == p_max[s]).collect())
        .collect();
    let act_min = (0..n)
        .map(|s| (0..model.actions[s].len()).filter(|&a| p_min_by_action[s][a] == p_min[s]).collect())
        .collect();
    ReachabilityProfile { p_max, p_min, p_max_by_action, p_min_by_action, act_max, act_min }
}

use std::collections::BTreeMap;

use mdp_model::linalg::SparseSystem;
use mdp_model::{Mdp, Rational, StateId};
use num_traits::{One, Zero};

use crate::mec::EndComponent;
use crate::scc::sccs;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MeanPayoffResult {
    pub gain: Rational,
    /// bias of the optimal policy, one entry per EC state (same order as `EndComponent::states`)
    pub bias: Vec<Rational>,
    pub policy: BTreeMap<StateId, usize>,
}

struct Local<'a> {
    model: &'a Mdp,
    states: &'a [StateId],
    index: BTreeMap<StateId, usize>,
    actions: Vec<Vec<usize>>,
}

impl Local<'_> {
    fn row(&self, i: usize, a: usize) -> impl Iterator<Item = (usize, &Rational)> + '_ {
        self.model.actions[self.states[i]][a].dist.iter().map(|(t, p)| (self.index[t], p))
    }

    fn reward(&self, i: usize, a: usize) -> Rational {
        Rational::from_integer(self.model.actions[self.states[i]][a].weight.into())
    }

    fn expect(&self, i: usize, a: usize, x: &[Rational]) -> Rational {
        self.row(i, a).fold(Rational::zero(), |acc, (j, p)| acc + p * &x[j])
    }
}

/// Gain and bias of a fixed policy with the bias pinned to zero at the lowest
/// state of every recurrent class.
fn evaluate(l: &Local<'_>, policy: &[usize]) -> (Vec<Rational>, Vec<Rational>) {
    let n = l.states.len();
    let comps = sccs(n, (0..n).flat_map(|i| l.row(i, policy[i]).map(move |(j, _)| (i, j))).collect::<Vec<_>>());
    let mut comp_of = vec![0; n];
    for (c, members) in comps.iter().enumerate() {
        for &i in members {
            comp_of[i] = c;
        }
    }
    let recurrent: Vec<bool> = comps
        .iter()
        .enumerate()
        .map(|(c, members)| members.iter().all(|&i| l.row(i, policy[i]).all(|(j, _)| comp_of[j] == c)))
        .collect();
    solve_evaluation(l, policy, &comps, &comp_of, &recurrent)
}

fn solve_evaluation(
    l: &Local<'_>,
    policy: &[usize],
    comps: &[Vec<usize>],
    comp_of: &[usize],
    recurrent: &[bool],
) -> (Vec<Rational>, Vec<Rational>) {
    let n = l.states.len();
    let one = Rational::one();
    let mut sys = SparseSystem::new(2 * n);
    let mut row = 0;
    for i in 0..n {
        let c = comp_of[i];
        let pinned = recurrent[c] && comps[c][0] == i;
        // gain rows: recurrent states share one gain, transient ones average their successors
        if recurrent[c] && !pinned {
            sys.add(row, i, &one);
            sys.add(row, comps[c][0], &-&one);
        } else if !recurrent[c] {
            sys.add(row, i, &one);
            for (j, p) in l.row(i, policy[i]) {
                sys.add(row, j, &-p);
            }
        } else {
            // pinned: h_i = 0
            sys.add(row, n + i, &one);
        }
        row += 1;
    }
    for i in 0..n {
        // g_i + h_i - sum P h = r
        sys.add(row, i, &one);
        sys.add(row, n + i, &one);
        for (j, p) in l.row(i, policy[i]) {
            sys.add(row, n + j, &-p);
        }
        sys.add_rhs(row, &l.reward(i, policy[i]));
        row += 1;
    }
    let x = sys.solve().expect("gain/bias system of a fixed policy is regular");
    (x[..n].to_vec(), x[n..].to_vec())
}

/// Maximal mean payoff inside an end component by multichain policy iteration.
pub fn max_mean_payoff(model: &Mdp, ec: &EndComponent) -> MeanPayoffResult {
    let index: BTreeMap<StateId, usize> = ec.states.iter().enumerate().map(|(i, &s)| (s, i)).collect();
    let actions: Vec<Vec<usize>> = ec.states.iter().map(|s| ec.actions[s].clone()).collect();
    let l = Local { model, states: &ec.states, index, actions };
    let n = ec.states.len();
    let mut policy: Vec<usize> = l.actions.iter().map(|a| a[0]).collect();
    loop {
        let (g, h) = evaluate(&l, &policy);
        let mut changed = false;
        // First improve the gain, then (only if the gain is stable) the bias.
        for i in 0..n {
            let mut best = l.expect(i, policy[i], &g);
            for &a in &l.actions[i] {
                let v = l.expect(i, a, &g);
                if v > best {
                    best = v;
                    policy[i] = a;
                    changed = true;
                }
            }
        }
        if !changed {
            for i in 0..n {
                let cur = policy[i];
                let mut best = l.reward(i, cur) + l.expect(i, cur, &h);
                for &a in &l.actions[i] {
                    if l.expect(i, a, &g) != g[i] {
                        continue;
                    }
                    let v = l.reward(i, a) + l.expect(i, a, &h);
                    if v > best {
                        best = v;
                        policy[i] = a;
                        changed = true;
                    }
                }
            }
        }
        if !changed {
            let gain = g.iter().max().cloned().unwrap_or_else(Rational::zero);
            let policy = ec.states.iter().zip(&policy).map(|(&s, &a)| (s, a)).collect();
            return MeanPayoffResult { gain, bias: h, policy };
        }
    }
}

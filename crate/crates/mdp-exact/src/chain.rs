use mdp_graph::can_reach_goal;
use mdp_model::{rint, MarkovChain, Rational, StateId};
use num_traits::{One, Zero};

use crate::ssp::evaluate;

/// Goal probabilities and partial expectations (bias 0) of every state.
pub fn chain_values(chain: &MarkovChain) -> (Vec<Rational>, Vec<Rational>) {
    let m = chain.mdp();
    let live = can_reach_goal(m);
    let policy = vec![0; m.num_states()];
    let fixed: Vec<Option<Rational>> = (0..m.num_states())
        .map(|s| {
            if s == m.goal {
                Some(Rational::one())
            } else {
                (!live[s]).then(Rational::zero)
            }
        })
        .collect();
    let p = evaluate(m, &policy, &fixed, &|_: StateId, _| Rational::zero()).expect("transient part is regular");
    let fixed: Vec<Option<Rational>> = fixed.into_iter().map(|f| f.map(|_| Rational::zero())).collect();
    let reward = |s: StateId, a: usize| {
        let act = &m.actions[s][a];
        act.dist.iter().fold(Rational::zero(), |acc, (t, q)| acc + q * &p[*t]) * rint(act.weight)
    };
    let pe = evaluate(m, &policy, &fixed, &reward).expect("transient part is regular");
    (p, pe)
}

/// Partial expectation with the given bias and, when goal is reachable,
/// the conditional expectation (bias 0) of the initial state.
pub fn solve_markov_chain(chain: &MarkovChain, bias: &Rational) -> (Rational, Option<Rational>) {
    let (p, pe) = chain_values(chain);
    let s = chain.mdp().initial;
    let ce = (!p[s].is_zero()).then(|| &pe[s] / &p[s]);
    (&pe[s] + bias * &p[s], ce)
}

//! Random small models and brute-force reference computations for tests.
//!
//! Everything here favours obviousness over speed: dense elimination,
//! explicit enumeration of memoryless policies, reachability by DFS.

use std::collections::BTreeMap;
use std::path::PathBuf;

use mdp_format::{load_mdp, ParseOptions};
use mdp_model::{Action, Mdp, Rational, StateId};
use num_traits::{One, Zero};
use proptest::prelude::*;

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../fixtures").join(format!("{name}.mdpw"))
}

pub fn fixture(name: &str) -> Mdp {
    load_mdp(fixture_path(name), ParseOptions::default()).unwrap_or_else(|e| panic!("fixture {name}: {e}"))
}

#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    pub max_states: usize,
    pub max_actions: usize,
    pub min_weight: i64,
    pub max_weight: i64,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig { max_states: 4, max_actions: 2, min_weight: -3, max_weight: 3 }
    }
}

/// Models with states `s0..`, an absorbing `goal` listed last, initial `s0`.
/// Distributions have at most three targets with masses 1..=3 before normalizing.
pub fn arb_mdp(cfg: GenConfig) -> impl Strategy<Value = Mdp> {
    (1..=cfg.max_states).prop_flat_map(move |n| {
        let action = (cfg.min_weight..=cfg.max_weight, prop::collection::vec((0..=n, 1i64..=3), 1..=3));
        prop::collection::vec(prop::collection::vec(action, 1..=cfg.max_actions), n).prop_map(move |spec| {
            let mut states: Vec<String> = (0..n).map(|i| format!("s{i}")).collect();
            states.push("goal".into());
            let mut actions: Vec<Vec<Action>> = spec
                .into_iter()
                .map(|acts| {
                    acts.into_iter()
                        .enumerate()
                        .map(|(k, (w, targets))| {
                            let mut mass: BTreeMap<StateId, i64> = BTreeMap::new();
                            for (t, m) in targets {
                                *mass.entry(t).or_default() += m;
                            }
                            let total: i64 = mass.values().sum();
                            let dist = mass.into_iter().map(|(t, m)| (t, Rational::new(m.into(), total.into()))).collect();
                            Action::new(format!("a{k}"), w, dist)
                        })
                        .collect()
                })
                .collect();
            actions.push(vec![Action::self_loop("stay", n)]);
            Mdp { states, initial: 0, goal: n, actions }
        })
    })
}

/// `count` models drawn from [`arb_mdp`] with a fixed seed, the same on
/// every run.
pub fn sample_mdps(cfg: GenConfig, seed: u64, count: usize) -> Vec<Mdp> {
    use proptest::strategy::ValueTree;
    use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};
    let mut bytes = [0u8; 32];
    bytes[..8].copy_from_slice(&seed.to_le_bytes());
    let mut runner = TestRunner::new_with_rng(Config::default(), TestRng::from_seed(RngAlgorithm::ChaCha, &bytes));
    let strategy = arb_mdp(cfg);
    (0..count).map(|_| strategy.new_tree(&mut runner).expect("generator never rejects").current()).collect()
}

/// All memoryless deterministic policies choosing from `allowed[s]`
/// (states with an empty list get action 0).
pub fn policies(allowed: &[Vec<usize>]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for opts in allowed {
        let opts: &[usize] = if opts.is_empty() { &[0] } else { opts };
        out = out.into_iter().flat_map(|p| opts.iter().map(move |&a| [p.clone(), vec![a]].concat())).collect();
    }
    out
}

pub fn all_actions(model: &Mdp) -> Vec<Vec<usize>> {
    model.actions.iter().map(|a| (0..a.len()).collect()).collect()
}

/// Gauss-Jordan elimination with full rational arithmetic.
pub fn dense_solve(mut a: Vec<Vec<Rational>>, mut b: Vec<Rational>) -> Option<Vec<Rational>> {
    let n = b.len();
    for c in 0..n {
        let p = (c..n).find(|&r| !a[r][c].is_zero())?;
        a.swap(c, p);
        b.swap(c, p);
        let inv = Rational::one() / &a[c][c];
        for r in 0..n {
            if r != c && !a[r][c].is_zero() {
                let f = &a[r][c] * &inv;
                for k in c..n {
                    let d = &f * &a[c][k];
                    a[r][k] -= d;
                }
                let d = &f * &b[c];
                b[r] -= d;
            }
        }
    }
    Some((0..n).map(|i| &b[i] / &a[i][i]).collect())
}

fn chain_successors(model: &Mdp, policy: &[usize], s: StateId) -> Vec<StateId> {
    model.actions[s][policy[s]].dist.iter().map(|(t, _)| *t).collect()
}

pub fn chain_reachable(model: &Mdp, policy: &[usize], from: StateId) -> Vec<bool> {
    let mut seen = vec![false; model.num_states()];
    let mut stack = vec![from];
    seen[from] = true;
    while let Some(s) = stack.pop() {
        for t in chain_successors(model, policy, s) {
            if !seen[t] {
                seen[t] = true;
                stack.push(t);
            }
        }
    }
    seen
}

/// Probability to reach goal in the Markov chain induced by `policy`.
pub fn chain_reach(model: &Mdp, policy: &[usize]) -> Vec<Rational> {
    let n = model.num_states();
    let live: Vec<bool> = (0..n).map(|s| chain_reachable(model, policy, s)[model.goal]).collect();
    let mut a = vec![vec![Rational::zero(); n]; n];
    let mut b = vec![Rational::zero(); n];
    for s in 0..n {
        a[s][s] = Rational::one();
        if s == model.goal {
            b[s] = Rational::one();
        } else if live[s] {
            for (t, p) in &model.actions[s][policy[s]].dist {
                a[s][*t] -= p;
            }
        }
    }
    dense_solve(a, b).expect("reachability system is regular once dead states are fixed")
}

/// Long-run average weight of each recurrent class of the chain induced by `policy`.
pub fn recurrent_gains(model: &Mdp, policy: &[usize]) -> Vec<(Vec<StateId>, Rational)> {
    let n = model.num_states();
    let reach: Vec<Vec<bool>> = (0..n).map(|s| chain_reachable(model, policy, s)).collect();
    let mut seen = vec![false; n];
    let mut out = Vec::new();
    for s in 0..n {
        if seen[s] || !(0..n).all(|t| !reach[s][t] || reach[t][s]) {
            continue;
        }
        let class: Vec<StateId> = (0..n).filter(|&t| reach[s][t]).collect();
        for &t in &class {
            seen[t] = true;
        }
        // stationary distribution: pi = pi P on the class, sum pi = 1
        let k = class.len();
        let pos: BTreeMap<StateId, usize> = class.iter().enumerate().map(|(i, &t)| (t, i)).collect();
        let mut a = vec![vec![Rational::zero(); k]; k];
        let mut b = vec![Rational::zero(); k];
        for (i, &t) in class.iter().enumerate() {
            for (u, p) in &model.actions[t][policy[t]].dist {
                a[pos[u]][i] -= p;
            }
            a[i][i] += Rational::one();
        }
        a[0] = vec![Rational::one(); k];
        b[0] = Rational::one();
        let pi = dense_solve(a, b).expect("irreducible class has a unique stationary law");
        let gain = class
            .iter()
            .zip(&pi)
            .fold(Rational::zero(), |acc, (&t, q)| acc + q * Rational::from_integer(model.actions[t][policy[t]].weight.into()));
        out.push((class, gain));
    }
    out
}

/// Partial expectation (bias 0) in the chain induced by `policy`.
pub fn chain_pe(model: &Mdp, policy: &[usize]) -> Vec<Rational> {
    let n = model.num_states();
    let p = chain_reach(model, policy);
    let mut a = vec![vec![Rational::zero(); n]; n];
    let mut b = vec![Rational::zero(); n];
    for s in 0..n {
        a[s][s] = Rational::one();
        if s == model.goal || p[s].is_zero() {
            continue;
        }
        let act = &model.actions[s][policy[s]];
        let step = act.dist.iter().fold(Rational::zero(), |acc, (t, q)| acc + q * &p[*t]);
        b[s] = step * Rational::from_integer(act.weight.into());
        for (t, q) in &act.dist {
            a[s][*t] -= q;
        }
    }
    dense_solve(a, b).expect("partial expectation system is regular on live states")
}

/// Exact comparison of `q` with `a + b·√5`.
pub fn cmp_sqrt5(q: &Rational, a: &Rational, b: &Rational) -> std::cmp::Ordering {
    use std::cmp::Ordering;
    let d = q - a;
    let five = Rational::from_integer(5.into());
    let (dn, bn) = (d < Rational::zero(), b < &Rational::zero());
    match (dn, bn) {
        (false, true) => Ordering::Greater,
        (true, false) => Ordering::Less,
        (false, false) => (&d * &d).cmp(&(&five * b * b)),
        (true, true) => (&five * b * b).cmp(&(&d * &d)),
    }
}

/// Whether `[lo, hi]` contains `a + b·√5`.
pub fn brackets_sqrt5(lo: &Rational, hi: &Rational, a: &Rational, b: &Rational) -> bool {
    cmp_sqrt5(lo, a, b).is_le() && cmp_sqrt5(hi, a, b).is_ge()
}

#[cfg(test)]
mod tests {
    use super::*;
    use mdp_model::{rat, rint};

    #[test]
    fn sqrt5_comparisons() {
        // 3 - √5 ≈ 0.7639
        let (a, b) = (rint(3), rint(-1));
        assert!(cmp_sqrt5(&rat(763, 1000), &a, &b).is_lt());
        assert!(cmp_sqrt5(&rat(764, 1000), &a, &b).is_gt());
        assert!(brackets_sqrt5(&rat(7639, 10000), &rat(7640, 10000), &a, &b));
        assert!(cmp_sqrt5(&rint(3), &rint(1), &rint(1)).is_lt());
    }
}

use mdp_graph::{
    can_avoid_goal, max_mean_payoff, max_reach, mec_decompose, mec_quotient, min_reach, reach_probabilities, EndComponent,
};
use mdp_model::{rat, rint, Action, Mdp, Rational};
use mdp_testkit::{all_actions, arb_mdp, chain_reach, fixture, policies, recurrent_gains, GenConfig};
use num_traits::Zero;
use proptest::prelude::*;
use std::collections::BTreeMap;

fn names(m: &Mdp, states: &[usize]) -> Vec<String> {
    let mut v: Vec<String> = states.iter().map(|&s| m.states[s].clone()).collect();
    v.sort();
    v
}

fn two_cycles() -> Mdp {
    Mdp::builder()
        .initial("x")
        .goal("goal")
        .action("x", "up", 2, &[("y", rint(1))])
        .action("x", "down", -2, &[("z", rint(1))])
        .action("y", "back", 0, &[("x", rint(1))])
        .action("z", "back", 0, &[("x", rint(1))])
        .build()
}

/// The quotient with a `stay` loop added to every collapsed (non-goal) MEC state.
fn quotient_with_stay(m: &Mdp) -> (Mdp, Vec<usize>) {
    let dec = mec_decompose(m);
    let (mut q, map) = mec_quotient(m, &dec);
    for s in 0..m.num_states() {
        let x = map.of_state[s];
        if dec.membership[s].is_some() && x != q.goal && !q.actions[x].iter().any(|a| a.label == "stay") {
            q.actions[x].push(Action::self_loop("stay", x));
        }
    }
    (q, map.of_state)
}

#[test]
fn gold_mecs() {
    let m = fixture("m_gold");
    let dec = mec_decompose(&m);
    let mut found: Vec<Vec<String>> = dec.mecs.iter().map(|e| names(&m, &e.states)).collect();
    found.sort();
    assert_eq!(found, vec![vec!["goal".to_string()], vec!["s".into(), "s_init".into(), "t".into()]]);
    let big = dec.mecs.iter().find(|e| e.states.len() == 3).unwrap();
    let init = m.state_index("s_init").unwrap();
    assert_eq!(big.actions[&init], vec![m.action_index(init, "sigma").unwrap()]);
    assert!(big.is_end_component(&m));
}

#[test]
fn acyclic_model_has_only_absorbing_mecs() {
    let m = fixture("mc_coin");
    let dec = mec_decompose(&m);
    let mut found: Vec<Vec<String>> = dec.mecs.iter().map(|e| names(&m, &e.states)).collect();
    found.sort();
    assert_eq!(found, vec![vec!["fail".to_string()], vec!["goal".to_string()]]);
}

#[test]
fn self_loop_state_is_its_own_mec() {
    let m = Mdp::builder().initial("a").goal("goal").action("a", "loop", 1, &[("a", rint(1))]).build();
    let dec = mec_decompose(&m);
    assert_eq!(dec.mecs.len(), 2);
    assert_eq!(dec.membership[m.state_index("a").unwrap()], Some(0));
}

#[test]
fn gold_quotient_keeps_only_tau() {
    let m = fixture("m_gold");
    let (q, map) = mec_quotient(&m, &mec_decompose(&m));
    assert_eq!(q.num_states(), 2);
    let x = map.of_state[m.initial];
    assert_ne!(x, q.goal);
    assert_eq!(q.actions[x].len(), 1);
    assert!(q.actions[x][0].label.ends_with("tau"));
    assert_eq!(q.actions[x][0].dist, vec![(q.goal, rint(1))]);
    assert!(map.actionless.is_empty());
}

#[test]
fn mec_free_quotient_is_isomorphic() {
    let m = Mdp::builder()
        .initial("a")
        .goal("goal")
        .action("a", "x", 1, &[("b", rat(1, 2)), ("goal", rat(1, 2))])
        .action("b", "y", -1, &[("goal", rint(1))])
        .build();
    let (q, map) = mec_quotient(&m, &mec_decompose(&m));
    let sorted = |m: &Mdp| -> Vec<Vec<Action>> {
        m.actions
            .iter()
            .map(|acts| {
                acts.iter()
                    .map(|a| {
                        let mut a = a.clone();
                        a.dist.sort();
                        a
                    })
                    .collect()
            })
            .collect()
    };
    assert_eq!(q.states, m.states);
    assert_eq!(sorted(&q), sorted(&m));
    assert_eq!(map.of_state, vec![0, 1, 2]);
}

#[test]
fn closed_mec_becomes_actionless() {
    let m = Mdp::builder()
        .initial("a")
        .goal("goal")
        .action("a", "x", 1, &[("b", rint(1))])
        .action("b", "y", -1, &[("a", rint(1))])
        .build();
    let (q, map) = mec_quotient(&m, &mec_decompose(&m));
    let (a, b) = (m.state_index("a").unwrap(), m.state_index("b").unwrap());
    assert_eq!(map.actionless, vec![map.of_state[a]]);
    assert_eq!(map.of_state[a], map.of_state[b]);
    assert_eq!(q.num_states(), 2);
}

#[test]
fn gold_reachability() {
    let m = fixture("m_gold");
    let r = reach_probabilities(&m);
    let init = m.initial;
    assert!(r.p_max.iter().all(|p| *p == rint(1)));
    assert_eq!(r.p_min[init], rint(0));
    let mut amax: Vec<&str> = r.act_max[init].iter().map(|&a| m.actions[init][a].label.as_str()).collect();
    amax.sort();
    assert_eq!(amax, vec!["sigma", "tau"]);
    let amin: Vec<&str> = r.act_min[init].iter().map(|&a| m.actions[init][a].label.as_str()).collect();
    assert_eq!(amin, vec!["sigma"]);
    assert!(can_avoid_goal(&m)[init]);
}

#[test]
fn small_reachability_values() {
    let coin = fixture("mc_coin");
    assert_eq!(max_reach(&coin)[coin.initial], rat(1, 2));
    assert_eq!(min_reach(&coin)[coin.initial], rat(1, 2));
    let n = fixture("n_gold");
    assert_eq!(min_reach(&n)[n.initial], rat(1, 2));
    assert_eq!(max_reach(&n)[n.initial], rint(1));
}

#[test]
fn gold_mean_payoff() {
    let m = fixture("m_gold");
    let dec = mec_decompose(&m);
    let big = dec.mecs.iter().find(|e| e.states.len() == 3).unwrap();
    assert_eq!(max_mean_payoff(&m, big).gain, rat(-1, 4));
}

#[test]
fn single_loop_mean_payoff() {
    let m = Mdp::builder().initial("a").goal("goal").action("a", "loop", 3, &[("a", rint(1))]).build();
    let ec = EndComponent { states: vec![0], actions: BTreeMap::from([(0, vec![0])]) };
    let r = max_mean_payoff(&m, &ec);
    assert_eq!(r.gain, rint(3));
    assert_eq!(r.bias, vec![rint(0)]);
}

#[test]
fn better_of_two_cycles() {
    let m = two_cycles();
    let dec = mec_decompose(&m);
    let ec = dec.mecs.iter().find(|e| e.states.len() == 3).unwrap();
    let r = max_mean_payoff(&m, ec);
    assert_eq!(r.gain, rint(1));
    let x = m.state_index("x").unwrap();
    assert_eq!(m.actions[x][r.policy[&x]].label, "up");
}

fn expect(m: &Mdp, s: usize, a: usize, x: &[Rational]) -> Rational {
    m.actions[s][a].dist.iter().fold(Rational::zero(), |acc, (t, p)| acc + p * &x[*t])
}

fn small() -> GenConfig {
    GenConfig { max_states: 4, max_actions: 2, min_weight: -3, max_weight: 3 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(150))]

    #[test]
    fn mecs_are_maximal_end_components(m in arb_mdp(small())) {
        let dec = mec_decompose(&m);
        for (i, e) in dec.mecs.iter().enumerate() {
            prop_assert!(e.is_end_component(&m));
            for &s in &e.states {
                prop_assert_eq!(dec.membership[s], Some(i));
            }
        }
        // every end component, found by brute force, sits inside one reported MEC
        let pairs: Vec<(usize, usize)> =
            (0..m.num_states()).flat_map(|s| (0..m.actions[s].len()).map(move |a| (s, a))).collect();
        for mask in 1u32..(1 << pairs.len()) {
            let mut actions: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
            for (k, &(s, a)) in pairs.iter().enumerate() {
                if mask & (1 << k) != 0 {
                    actions.entry(s).or_default().push(a);
                }
            }
            let cand = EndComponent { states: actions.keys().copied().collect(), actions };
            if !cand.is_end_component(&m) {
                continue;
            }
            let host = dec.membership[cand.states[0]].map(|i| &dec.mecs[i]);
            prop_assert!(host.is_some_and(|h| cand.actions.iter().all(|(&s, acts)| acts.iter().all(|&a| h.allows(s, a)))));
        }
    }

    #[test]
    fn reachability_matches_policy_enumeration(m in arb_mdp(small())) {
        let r = reach_probabilities(&m);
        let values: Vec<Vec<Rational>> = policies(&all_actions(&m)).iter().map(|p| chain_reach(&m, p)).collect();
        for s in 0..m.num_states() {
            let best = values.iter().map(|v| v[s].clone()).max().unwrap();
            let worst = values.iter().map(|v| v[s].clone()).min().unwrap();
            prop_assert_eq!(&r.p_max[s], &best);
            prop_assert_eq!(&r.p_min[s], &worst);
            prop_assert!(r.p_min[s] <= r.p_max[s]);
            // Bellman fixed points
            let hi = (0..m.actions[s].len()).map(|a| expect(&m, s, a, &r.p_max)).max().unwrap();
            let lo = (0..m.actions[s].len()).map(|a| expect(&m, s, a, &r.p_min)).min().unwrap();
            prop_assert_eq!(&hi, &r.p_max[s]);
            prop_assert_eq!(&lo, &r.p_min[s]);
            prop_assert!(!r.act_max[s].is_empty() && !r.act_min[s].is_empty());
        }
    }

    #[test]
    fn quotient_preserves_reachability(m in arb_mdp(small())) {
        let (q, of_state) = quotient_with_stay(&m);
        let (pmax, pmin) = (max_reach(&m), min_reach(&m));
        let (qmax, qmin) = (max_reach(&q), min_reach(&q));
        for s in 0..m.num_states() {
            prop_assert_eq!(&pmax[s], &qmax[of_state[s]]);
            prop_assert_eq!(&pmin[s], &qmin[of_state[s]]);
        }
    }

    #[test]
    fn mean_payoff_matches_policy_enumeration(m in arb_mdp(small())) {
        for ec in mec_decompose(&m).mecs {
            let r = max_mean_payoff(&m, &ec);
            let allowed: Vec<Vec<usize>> =
                (0..m.num_states()).map(|s| ec.actions.get(&s).cloned().unwrap_or_default()).collect();
            let best = policies(&allowed)
                .iter()
                .flat_map(|p| recurrent_gains(&m, p))
                .filter(|(class, _)| class.iter().all(|&s| ec.contains(s)))
                .map(|(_, g)| g)
                .max()
                .unwrap();
            prop_assert_eq!(&r.gain, &best);
            // gain + bias satisfy the optimality equation inside the EC
            let mut h = vec![Rational::zero(); m.num_states()];
            for (i, &s) in ec.states.iter().enumerate() {
                h[s] = r.bias[i].clone();
            }
            for &s in &ec.states {
                let value = |a: usize| rint(m.actions[s][a].weight) + expect(&m, s, a, &h);
                let top = ec.actions[&s].iter().map(|&a| value(a)).max().unwrap();
                prop_assert_eq!(&top, &(&r.gain + &h[s]));
                prop_assert_eq!(value(r.policy[&s]), top);
            }
        }
    }
}

use mdp_exact::{
    chain_values, extreme_schedulers, nonneg_saturation_point, nonneg_solve_exact, nonneg_solve_with_top, solve_markov_chain,
    ExactError, ExactPeTable,
};
use mdp_graph::reach_probabilities;
use mdp_model::simplex::{LinearProgram, LpOutcome, Relation};
use mdp_model::{rat, rint, MarkovChain, Mdp, Rational};
use mdp_preprocess::prepare;
use mdp_testkit::{all_actions, arb_mdp, chain_pe, chain_reach, fixture, policies, GenConfig};
use num_traits::{One, Zero};
use proptest::prelude::*;

fn chain(m: Mdp) -> MarkovChain {
    MarkovChain::try_from(m).unwrap()
}

fn race() -> Mdp {
    Mdp::builder()
        .initial("s")
        .goal("goal")
        .action("s", "alpha", 0, &[("goal", rint(1))])
        .action("s", "beta", 1, &[("goal", rat(1, 2)), ("fail", rat(1, 2))])
        .action("fail", "stay", 0, &[("fail", rint(1))])
        .build()
}

/// Like `race`, with the risky action worth 2.
fn gap_model() -> Mdp {
    Mdp::builder()
        .initial("s")
        .goal("goal")
        .action("s", "alpha", 0, &[("goal", rint(1))])
        .action("s", "beta", 2, &[("goal", rat(1, 2)), ("fail", rat(1, 2))])
        .action("fail", "stay", 0, &[("fail", rint(1))])
        .build()
}

#[test]
fn coin_chain() {
    let c = chain(fixture("mc_coin"));
    assert_eq!(solve_markov_chain(&c, &rint(0)), (rint(1), Some(rint(2))));
    assert_eq!(solve_markov_chain(&c, &rint(3)).0, rat(5, 2));
}

#[test]
fn two_step_chain() {
    let m = Mdp::builder()
        .initial("a")
        .goal("goal")
        .action("a", "x", 1, &[("b", rint(1))])
        .action("b", "x", 1, &[("goal", rint(1))])
        .build();
    assert_eq!(solve_markov_chain(&chain(m), &rint(0)), (rint(2), Some(rint(2))));
}

#[test]
fn chain_without_goal_has_no_ce() {
    let m = Mdp::builder()
        .initial("a")
        .goal("goal")
        .action("a", "x", 5, &[("a", rint(1))])
        .build();
    let c = chain(m);
    assert_eq!(solve_markov_chain(&c, &rint(7)), (rint(0), None));
    assert_eq!(chain_values(&c).0[0], rint(0));
}

#[test]
fn gold_extreme_schedulers() {
    let m = fixture("m_gold");
    let ext = extreme_schedulers(&m);
    let init = m.initial;
    assert_eq!(m.actions[init][ext.max.choice[init]].label, "tau");
    assert_eq!(ext.max.pe[init], rint(0));
    assert_eq!(m.actions[init][ext.min.choice[init]].label, "sigma");
    assert_eq!(ext.min.pe[init], rint(0));
    assert_eq!(ext.min.reach[init], rint(0));
}

#[test]
fn coin_extreme_schedulers_coincide() {
    let ext = extreme_schedulers(&fixture("mc_coin"));
    assert_eq!(ext.max.pe, ext.min.pe);
    assert_eq!(ext.max.pe[0], rint(1));
}

#[test]
fn max_prefers_higher_probability() {
    let m = Mdp::builder()
        .initial("s")
        .goal("goal")
        .action("s", "risky", 5, &[("goal", rat(1, 2)), ("fail", rat(1, 2))])
        .action("s", "safe", 1, &[("goal", rint(1))])
        .action("fail", "stay", 0, &[("fail", rint(1))])
        .build();
    let ext = extreme_schedulers(&m);
    assert_eq!(m.actions[0][ext.max.choice[0]].label, "safe");
    assert_eq!(ext.max.pe[0], rint(1));
    assert_eq!(m.actions[0][ext.min.choice[0]].label, "risky");
    assert_eq!(ext.min.pe[0], rat(5, 2));
}

#[test]
fn saturation_examples() {
    assert_eq!(nonneg_saturation_point(&gap_model(), &rint(0)).unwrap(), rint(2));
    assert_eq!(nonneg_saturation_point(&gap_model(), &rint(3)).unwrap(), rint(-1));
    assert_eq!(nonneg_saturation_point(&fixture("mc_coin"), &rint(0)).unwrap(), rint(0));
    assert_eq!(nonneg_saturation_point(&fixture("m_gold"), &rint(0)), Err(ExactError::NegativeWeight));
}

#[test]
fn race_picks_beta() {
    let m = race();
    let t = nonneg_solve_exact(&m, &rint(0)).unwrap();
    assert_eq!(t.value(m.initial, 0), &rat(1, 2));
    assert_eq!(m.actions[m.initial][t.scheduler[m.initial][0]].label, "beta");
    assert_bellman(&m, &t);
}

#[test]
fn coin_table_matches_chain() {
    let m = fixture("mc_coin");
    let t = nonneg_solve_exact(&m, &rint(0)).unwrap();
    assert_eq!(t.value(m.initial, 0), &rint(1));
}

#[test]
fn zero_cycles_must_be_flattened_first() {
    let m = Mdp::builder()
        .initial("a")
        .goal("goal")
        .action("a", "x", 0, &[("b", rint(1))])
        .action("b", "y", 0, &[("a", rint(1))])
        .action("b", "z", 1, &[("goal", rint(1))])
        .build();
    assert!(matches!(nonneg_solve_exact(&m, &rint(0)), Err(ExactError::EndComponent(_))));
    let p = prepare(&m).unwrap();
    assert_eq!(nonneg_solve_exact(&p.model, &rint(0)).unwrap().value(p.model.initial, 0), &rint(1));
}

/// Every row satisfies its defining equation exactly, with equality at the chosen action.
fn assert_bellman(m: &Mdp, t: &ExactPeTable) {
    let ext = extreme_schedulers(m);
    for s in 0..m.num_states() {
        if s == m.goal || ext.profile.p_max[s].is_zero() {
            continue;
        }
        for r in 0..=t.window_top {
            let v = t.value(s, r);
            if rint(r) >= t.saturation {
                assert_eq!(*v, &ext.profile.p_max[s] * (rint(r) + &t.bias) + &ext.max.pe[s]);
                continue;
            }
            let step = |a: usize| -> Rational {
                let act = &m.actions[s][a];
                act.dist.iter().fold(Rational::zero(), |acc, (u, p)| acc + p * t.value(*u, r + act.weight))
            };
            let best = (0..m.actions[s].len()).map(step).max().unwrap();
            assert_eq!(*v, best);
            assert_eq!(step(t.scheduler[s][r as usize]), best);
        }
    }
}

/// The defining linear program, solved by the simplex method.
fn lp_values(m: &Mdp, t: &ExactPeTable) -> Vec<Vec<Option<Rational>>> {
    let ext = extreme_schedulers(m);
    let top = t.window_top;
    let inner: Vec<usize> = (0..m.num_states()).filter(|&s| s != m.goal && !ext.profile.p_max[s].is_zero()).collect();
    let var = |s: usize, r: i64| inner.iter().position(|&x| x == s).map(|i| i * (top as usize + 1) + r as usize);
    let mut lp = LinearProgram::new(inner.len() * (top as usize + 1));
    for v in lp.objective.iter_mut() {
        *v = -Rational::one();
    }
    lp.free = vec![true; lp.num_vars()];
    for &s in &inner {
        for r in 0..=top {
            let x = var(s, r).unwrap();
            if rint(r) >= t.saturation {
                lp.add(vec![(x, rint(1))], Relation::Eq, &ext.profile.p_max[s] * (rint(r) + &t.bias) + &ext.max.pe[s]);
                continue;
            }
            for act in &m.actions[s] {
                let mut coeffs = vec![(x, rint(1))];
                let mut rhs = Rational::zero();
                for (u, p) in &act.dist {
                    if *u == m.goal {
                        rhs += p * (rint(r + act.weight) + &t.bias);
                    } else if let Some(y) = var(*u, r + act.weight) {
                        coeffs.push((y, -p.clone()));
                    }
                }
                lp.add(coeffs, Relation::Ge, rhs);
            }
        }
    }
    let LpOutcome::Optimal { x, .. } = lp.solve() else { panic!("LP has an optimum") };
    (0..m.num_states()).map(|s| (0..=top).map(|r| var(s, r).map(|i| x[i].clone())).collect()).collect()
}

fn nonneg() -> GenConfig {
    GenConfig { max_states: 3, max_actions: 2, min_weight: 0, max_weight: 2 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(80))]

    #[test]
    fn extreme_schedulers_match_enumeration(m in arb_mdp(GenConfig { max_states: 4, max_actions: 2, min_weight: -3, max_weight: 3 })) {
        let Ok(p) = prepare(&m) else { return Ok(()) };
        let m = p.model;
        let ext = extreme_schedulers(&m);
        let profile = reach_probabilities(&m);
        prop_assert_eq!(&ext.max.reach, &profile.p_max);
        prop_assert_eq!(&ext.min.reach, &profile.p_min);
        let runs: Vec<(Vec<Rational>, Vec<Rational>)> =
            policies(&all_actions(&m)).iter().map(|pol| (chain_reach(&m, pol), chain_pe(&m, pol))).collect();
        for s in 0..m.num_states() {
            let best_max = runs.iter().filter(|(r, _)| r[s] == profile.p_max[s]).map(|(_, pe)| pe[s].clone()).max().unwrap();
            let best_min = runs.iter().filter(|(r, _)| r[s] == profile.p_min[s]).map(|(_, pe)| pe[s].clone()).max().unwrap();
            prop_assert_eq!(&ext.max.pe[s], &best_max);
            prop_assert_eq!(&ext.min.pe[s], &best_min);
            prop_assert!(profile.in_act_max(s, ext.max.choice[s]));
            prop_assert!(profile.in_act_min(s, ext.min.choice[s]));
        }
    }

    #[test]
    fn nonneg_table_solves_the_linear_program(m in arb_mdp(nonneg()), bias in -2i64..=2) {
        let Ok(p) = prepare(&m) else { return Ok(()) };
        let m = p.model;
        let bias = rat(bias, 2);
        let t = nonneg_solve_exact(&m, &bias).unwrap();
        prop_assume!(t.window_top <= 12);
        assert_bellman(&m, &t);
        let lp = lp_values(&m, &t);
        for s in 0..m.num_states() {
            for r in 0..=t.window_top {
                if let Some(v) = &lp[s][r as usize] {
                    prop_assert_eq!(v, t.value(s, r));
                }
            }
        }
        // a larger table agrees on the common part
        let bigger = nonneg_solve_with_top(&m, &bias, Some(t.window_top + 5)).unwrap();
        for s in 0..m.num_states() {
            prop_assert_eq!(&bigger.values[s][..t.values[s].len()], &t.values[s][..]);
        }
    }
}

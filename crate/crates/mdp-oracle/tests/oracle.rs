use mdp_approx::{approx_pe, WindowScheduler};
use mdp_bounds::compute_bounds;
use mdp_exact::{extreme_schedulers, nonneg_solve_exact};
use mdp_model::{floor_to_i64, rat, rint, to_f64, Mdp, Rational};
use mdp_oracle::{oracle_pe, oracle_pe_exhaustive, oracle_pe_restricted, simulate, OracleError};
use mdp_preprocess::{classify_finiteness, prepare, FinitenessReason};
use mdp_testkit::{arb_mdp, fixture, GenConfig};
use num_traits::{Signed, Zero};
use proptest::prelude::*;

#[test]
fn coin_is_worth_one_in_any_window() {
    for window in [0, 1, 5] {
        assert_eq!(oracle_pe(&fixture("mc_coin"), window, &Rational::zero()).unwrap().best, rint(1));
    }
}

#[test]
fn golden_gamble_windows() {
    // runs that fall below the window give up, so the window costs a little
    let gold = fixture("m_gold");
    assert_eq!(oracle_pe(&gold, 10, &Rational::zero()).unwrap().best, rat(16, 21));
    let r = oracle_pe(&gold, 20, &Rational::zero()).unwrap();
    let gap = 3.0 - 5f64.sqrt() - to_f64(&r.best);
    assert!(gap > 0.0 && gap < 1e-4, "{gap}");
}

#[test]
fn counting_model_in_window_twenty() {
    let r = oracle_pe(&fixture("n_count"), 20, &Rational::zero()).unwrap();
    assert!((&r.best - rat(13, 12)).abs() < rat(1, 10_000), "{}", to_f64(&r.best));
    // in t with weight r the optimum is 2^(2-r) + r - 2, whichever cutoff attains it
    let t = r.model.state_index("t").unwrap();
    for w in 2..=8 {
        let expected = Rational::new(1.into(), (1i64 << w).into()) * rint(4) + rint(w - 2);
        assert!((r.value(t, w) - &expected).abs() < rat(1, 10_000), "r = {w}: {}", r.value(t, w));
        assert!(!r.optimal[t][(w + 20) as usize].is_empty());
    }
}

#[test]
fn deterministic_chain_simulates_exactly() {
    let m = Mdp::builder()
        .initial("s")
        .goal("goal")
        .action("s", "go", 5, &[("goal", rint(1))])
        .action("goal", "stay", 0, &[("goal", rint(1))])
        .build();
    let sched = WindowScheduler::memoryless(&m, 0, 0, &[0, 0]);
    let est = simulate(&m, &sched, 1000, 10, 7);
    assert_eq!((est.mean, est.stderr, est.reached), (5.0, 0.0, 1.0));
}

#[test]
fn simulation_is_reproducible_and_consistent() {
    let gold = fixture("m_gold");
    let r = approx_pe(&gold, &rat(1, 1000), &Rational::zero()).unwrap();
    let a = simulate(&r.model, &r.scheduler, 100_000, 10_000, 42);
    let b = simulate(&r.model, &r.scheduler, 100_000, 10_000, 42);
    assert_eq!(a, b);
    assert!((a.mean - 0.7639320225).abs() <= 4.0 * a.stderr, "{} ± {}", a.mean, a.stderr);
    assert_ne!(simulate(&r.model, &r.scheduler, 1000, 10_000, 43), simulate(&r.model, &r.scheduler, 1000, 10_000, 42));
}

#[test]
fn infinite_models_are_rejected() {
    assert!(matches!(oracle_pe(&fixture("pump"), 3, &Rational::zero()), Err(OracleError::Infinite(FinitenessReason::WeightDivergentEc))));
    assert!(matches!(oracle_pe(&fixture("mc_coin"), -1, &Rational::zero()), Err(OracleError::Window(-1))));
}

#[test]
fn exhaustive_guard() {
    let r = oracle_pe_exhaustive(&fixture("m_gold"), 10, &Rational::zero(), 1000);
    assert!(matches!(r, Err(OracleError::TooMany { .. })));
}

fn finite(m: &Mdp) -> bool {
    let v = classify_finiteness(m);
    v.pe_finite && v.reason == FinitenessReason::Ok
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 64, ..ProptestConfig::default() })]

    #[test]
    fn policy_iteration_matches_enumeration(m in arb_mdp(GenConfig { max_states: 3, ..GenConfig::default() }), window in 0i64..=1, b in -2i64..=2) {
        prop_assume!(finite(&m));
        let full = match oracle_pe_exhaustive(&m, window, &rint(b), 50_000) {
            Err(OracleError::TooMany { .. }) => return Err(TestCaseError::reject("too many tables")),
            r => r.unwrap(),
        };
        let pi = oracle_pe(&m, window, &rint(b)).unwrap();
        prop_assert_eq!(pi.best, full.best);
    }

    #[test]
    fn larger_windows_dominate(m in arb_mdp(GenConfig::default()), window in 0i64..=4) {
        prop_assume!(finite(&m));
        let small = oracle_pe(&m, window, &Rational::zero()).unwrap();
        let large = oracle_pe(&m, window + 1, &Rational::zero()).unwrap();
        prop_assert!(large.best >= small.best);
    }

    #[test]
    fn non_negative_models_match_exact(m in arb_mdp(GenConfig { min_weight: 0, ..GenConfig::default() })) {
        prop_assume!(finite(&m));
        let prepared = prepare(&m).unwrap().model;
        let table = nonneg_solve_exact(&prepared, &Rational::zero());
        prop_assume!(table.is_ok());
        let table = table.unwrap();
        let r = oracle_pe(&m, table.window_top.max(0), &Rational::zero()).unwrap();
        prop_assert_eq!(&r.best, table.value(prepared.initial, 0));
    }

    #[test]
    fn minimizing_actions_suffice_below_q(m in arb_mdp(GenConfig::default()), window in 0i64..=4, b in -3i64..=3) {
        prop_assume!(finite(&m));
        let prepared = prepare(&m).unwrap().model;
        let bounds = compute_bounds(&prepared, &rat(1, 10)).unwrap();
        let ext = extreme_schedulers(&prepared);
        let bias = rint(b);
        let allowed = |s: usize, w: i64, a: usize| match &bounds.q_per_state[s] {
            Some(q) if rint(w) + &bias <= *q => ext.profile.in_act_min(s, a),
            _ => true,
        };
        let free = oracle_pe(&prepared, window, &bias).unwrap();
        let restricted = oracle_pe_restricted(&prepared, window, &bias, &allowed).unwrap();
        prop_assert_eq!(restricted.best, free.best);
    }
}

#[test]
fn q_threshold_on_the_gold_gamble() {
    // at or below 𝔮 some optimal choice at s_init is a minimizing one
    let gold = prepare(&fixture("m_gold")).unwrap().model;
    let bounds = compute_bounds(&gold, &rat(1, 1000)).unwrap();
    let ext = extreme_schedulers(&gold);
    let r = oracle_pe(&gold, 10, &Rational::zero()).unwrap();
    let s = gold.initial;
    let q = floor_to_i64(bounds.q_per_state[s].as_ref().unwrap()).unwrap();
    for w in -10..=q.min(10) {
        let opt = &r.optimal[s][(w + 10) as usize];
        assert!(opt.iter().any(|&a| ext.profile.in_act_min(s, a)), "w = {w}: {opt:?}");
    }
    assert!(r.best.is_positive());
}

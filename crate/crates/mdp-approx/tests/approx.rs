use mdp_approx::{
    approx_ce, approx_pe, approx_pe_with, evaluate_window_scheduler, evaluate_window_scheduler_certified, ApproxError,
    ApproxOptions, Decision, WindowScheduler,
};
use mdp_bounds::compute_bounds;
use mdp_format::SchedulerDoc;
use mdp_model::{rat, rint, Mdp, Rational};
use mdp_preprocess::{classify_finiteness, prepare, FinitenessReason};
use mdp_testkit::{all_actions, arb_mdp, brackets_sqrt5, chain_pe, fixture, policies, GenConfig};
use num_traits::{Signed, Zero};
use proptest::prelude::*;

/// Small cap for random models so a huge window is skipped, not solved.
fn small() -> ApproxOptions {
    ApproxOptions { cell_limit: 200_000 }
}

#[test]
fn golden_gamble_pe() {
    let eps = rat(1, 1_000_000);
    let r = approx_pe(&fixture("m_gold"), &eps, &Rational::zero()).unwrap();
    assert!(&r.upper - &r.lower <= eps);
    // 3 - √5
    assert!(brackets_sqrt5(&r.lower, &r.upper, &rint(3), &rint(-1)), "[{}, {}]", r.lower, r.upper);
}

#[test]
fn counting_model_pe() {
    let r = approx_pe(&fixture("n_count"), &rat(1, 1_000_000), &Rational::zero()).unwrap();
    assert!(r.lower <= rat(13, 12) && rat(13, 12) <= r.upper);
}

#[test]
fn coin_with_and_without_bias() {
    let coin = fixture("mc_coin");
    let r = approx_pe(&coin, &rat(1, 1000), &Rational::zero()).unwrap();
    assert!(r.lower <= rint(1) && rint(1) <= r.upper);
    let r = approx_pe(&coin, &rat(1, 1000), &rint(3)).unwrap();
    assert!(r.lower <= rat(5, 2) && rat(5, 2) <= r.upper);
}

#[test]
fn unreachable_goal_is_zero() {
    let m = Mdp::builder()
        .initial("s")
        .goal("goal")
        .action("s", "a", 1, &[("s", rint(1))])
        .action("goal", "stay", 0, &[("goal", rint(1))])
        .build();
    let r = approx_pe(&m, &rat(1, 10), &Rational::zero()).unwrap();
    assert_eq!((r.lower, r.upper), (Rational::zero(), Rational::zero()));
}

#[test]
fn infinite_values_are_rejected() {
    let eps = rat(1, 10);
    assert!(matches!(
        approx_pe(&fixture("pump"), &eps, &Rational::zero()),
        Err(ApproxError::InfinitePe(FinitenessReason::WeightDivergentEc))
    ));
    assert!(matches!(approx_ce(&fixture("m_gold"), &eps), Err(ApproxError::InfiniteCe(FinitenessReason::CriticalScheduler))));
    assert!(matches!(approx_pe(&fixture("mc_coin"), &Rational::zero(), &Rational::zero()), Err(ApproxError::NonPositiveEpsilon)));
}

#[test]
fn resource_limit_is_reported() {
    let r = approx_pe_with(&fixture("m_gold"), &rat(1, 1000), &Rational::zero(), &ApproxOptions { cell_limit: 1000 });
    assert!(matches!(r, Err(ApproxError::ResourceLimit { limit: 1000, .. })));
}

#[test]
fn coin_ce() {
    let eps = rat(1, 1000);
    let r = approx_ce(&fixture("mc_coin"), &eps).unwrap();
    assert!((&r.value - rint(2)).abs() <= rint(3) * &eps, "{}", r.value);
}

#[test]
fn golden_ce_search_invariants() {
    let eps = rat(1, 100);
    let r = approx_ce(&fixture("n_gold"), &eps).unwrap();
    // 3/(3+√5) = (9 - 3√5)/4
    let (a, b) = (rat(9, 4), rat(-3, 4));
    let t = &r.trace;
    assert!(t.steps.len() as u64 <= t.iteration_bound, "{} > {}", t.steps.len(), t.iteration_bound);
    for step in &t.steps {
        assert!(brackets_sqrt5(&step.a, &step.b, &a, &b), "[{}, {}]", step.a, step.b);
        assert!(&step.upper - &step.lower <= &t.p * &eps);
    }
    let lo = &r.value - rint(3) * &eps;
    let hi = &r.value + rint(3) * &eps;
    assert!(brackets_sqrt5(&lo, &hi, &a, &b), "{}", r.value);
    assert!(t.steps.iter().all(|s| s.decision != Decision::Stop) || t.steps.last().unwrap().decision == Decision::Stop);
}

#[test]
fn returned_scheduler_attains_the_interval() {
    let coin = fixture("mc_coin");
    let r = approx_pe(&coin, &rat(1, 100), &rint(3)).unwrap();
    let v = evaluate_window_scheduler(&r.model, &r.scheduler, &rint(3));
    assert!(r.lower <= v.pe && v.pe <= r.upper);

    let gold = fixture("m_gold");
    let eps = rat(1, 1000);
    let r = approx_pe(&gold, &eps, &Rational::zero()).unwrap();
    let (lo, hi) =
        evaluate_window_scheduler_certified(&r.model, &r.scheduler, &Rational::zero(), &eps, &ApproxOptions::default()).unwrap();
    assert!(hi >= r.lower && lo <= r.upper, "[{lo}, {hi}] vs [{}, {}]", r.lower, r.upper);
}

#[test]
fn scheduler_document_round_trip() {
    let r = approx_pe(&fixture("n_count"), &rat(1, 100), &Rational::zero()).unwrap();
    let doc = r.scheduler.to_doc(&r.model);
    let back = SchedulerDoc::from_json(&doc.to_json()).unwrap();
    assert_eq!(back, doc);
    assert_eq!(WindowScheduler::from_doc(&r.model, &back).unwrap(), r.scheduler);
}

#[test]
fn stop_at_once_scheduler() {
    let gold = fixture("m_gold");
    let tau = gold.action_index(gold.initial, "tau").unwrap();
    let choice: Vec<usize> = (0..gold.num_states()).map(|s| if s == gold.initial { tau } else { 0 }).collect();
    let sched = WindowScheduler::memoryless(&gold, -3, 3, &choice);
    let v = evaluate_window_scheduler(&gold, &sched, &Rational::zero());
    assert_eq!((v.pe, v.reach, v.ce), (Rational::zero(), rint(1), Some(Rational::zero())));
}

/// A window scheduler from raw numbers.
fn window_scheduler(model: &Mdp, lo: i64, hi: i64, raw: &[u32]) -> WindowScheduler {
    let mut it = raw.iter().cycle();
    let mut pick = |s: usize| (*it.next().unwrap() as usize) % model.actions[s].len();
    let mut sched = WindowScheduler::memoryless(model, lo, hi, &vec![0; model.num_states()]);
    for s in 0..model.num_states() {
        for a in sched.table[s].iter_mut() {
            *a = pick(s) as u32;
        }
        sched.above[s] = pick(s);
        sched.below[s] = pick(s);
    }
    sched
}

fn finite_prepared() -> impl Strategy<Value = Mdp> {
    arb_mdp(GenConfig::default()).prop_filter_map("finite", |m| {
        let v = classify_finiteness(&m);
        (v.pe_finite && v.reason == FinitenessReason::Ok).then(|| prepare(&m).ok().map(|p| p.model)).flatten()
    })
}

proptest! {
    #![proptest_config(ProptestConfig { cases: 48, ..ProptestConfig::default() })]

    #[test]
    fn interval_is_sound_on_random_models(m in arb_mdp(GenConfig::default())) {
        let v = classify_finiteness(&m);
        prop_assume!(v.pe_finite && v.reason == FinitenessReason::Ok);
        let eps = rat(1, 10);
        let r = match approx_pe_with(&m, &eps, &Rational::zero(), &small()) {
            Err(ApproxError::ResourceLimit { .. }) => return Err(TestCaseError::reject("window too large")),
            r => r.unwrap(),
        };
        prop_assert!(r.lower <= r.upper && &r.upper - &r.lower <= eps);
        // memoryless policies are weight-based schedulers too
        for p in policies(&all_actions(&m)) {
            prop_assert!(chain_pe(&m, &p)[m.initial] <= r.upper);
        }
        let bounds = compute_bounds(&r.model, &eps).unwrap();
        prop_assert!(r.upper <= bounds.pe_ub);
        if r.trace.cells <= 3000 {
            let v = evaluate_window_scheduler(&r.model, &r.scheduler, &Rational::zero());
            prop_assert!(r.lower <= v.pe && v.pe <= r.upper, "{} not in [{}, {}]", v.pe, r.lower, r.upper);
        }
    }

    #[test]
    fn non_negative_models_match_the_exact_solver(m in arb_mdp(GenConfig { min_weight: 0, ..GenConfig::default() })) {
        let v = classify_finiteness(&m);
        prop_assume!(v.pe_finite && v.reason == FinitenessReason::Ok);
        let prepared = prepare(&m).unwrap().model;
        let exact = mdp_exact::nonneg_solve_exact(&prepared, &Rational::zero());
        prop_assume!(exact.is_ok());
        let exact = exact.unwrap().value(prepared.initial, 0).clone();
        let r = match approx_pe_with(&m, &rat(1, 100), &Rational::zero(), &small()) {
            Err(ApproxError::ResourceLimit { .. }) => return Err(TestCaseError::reject("window too large")),
            r => r.unwrap(),
        };
        prop_assert!(r.lower <= exact && exact <= r.upper, "{} not in [{}, {}]", exact, r.lower, r.upper);
    }

    #[test]
    fn bias_enters_affinely(m in finite_prepared(), lo in -4i64..=0, hi in 0i64..=4, raw in prop::collection::vec(any::<u32>(), 1..40), b in -5i64..=5) {
        let sched = window_scheduler(&m, lo, hi, &raw);
        let plain = evaluate_window_scheduler(&m, &sched, &Rational::zero());
        let biased = evaluate_window_scheduler(&m, &sched, &rint(b));
        prop_assert_eq!(&biased.reach, &plain.reach);
        prop_assert_eq!(biased.pe, &plain.pe + rint(b) * &plain.reach);
    }

    #[test]
    fn sign_of_shifted_pe_orders_ce(m in finite_prepared(), lo in -4i64..=0, hi in 0i64..=4, raw in prop::collection::vec(any::<u32>(), 1..40)) {
        let sched = window_scheduler(&m, lo, hi, &raw);
        let v = evaluate_window_scheduler(&m, &sched, &Rational::zero());
        prop_assume!(v.reach.is_positive());
        let ce = v.ce.clone().unwrap();
        for theta in [&ce - rint(1), ce.clone(), &ce + rint(1)] {
            let pe = evaluate_window_scheduler(&m, &sched, &-theta.clone()).pe;
            prop_assert_eq!(pe.cmp(&Rational::zero()), ce.cmp(&theta));
        }
    }
}

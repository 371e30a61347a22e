use mdp_bounds::{
    compute_bounds, ec_tail_constants, least_tail_exponent, super_potential, super_potential_lp, BoundsError, SuperPotential,
};
use mdp_graph::{mec_decompose, EndComponent};
use mdp_model::{rat, rint, Mdp, Rational};
use mdp_preprocess::{posmin_transform, prepare};
use mdp_testkit::{all_actions, arb_mdp, chain_pe, fixture, policies, GenConfig};
use num_traits::{One, Signed, Zero};
use proptest::prelude::*;

fn only_mec(m: &Mdp) -> EndComponent {
    let mecs: Vec<EndComponent> =
        mec_decompose(m).mecs.into_iter().filter(|ec| !(ec.states.len() == 1 && m.is_absorbing(ec.states[0]))).collect();
    assert_eq!(mecs.len(), 1, "{mecs:?}");
    mecs.into_iter().next().unwrap()
}

fn sp(t: Rational, spread: Rational) -> SuperPotential {
    SuperPotential { states: vec![0], gain: -t, u: vec![Rational::zero()], spread }
}

#[test]
fn single_loop_potential() {
    let m = Mdp::builder()
        .initial("a")
        .goal("goal")
        .action("a", "loop", -1, &[("a", rint(1))])
        .action("a", "exit", 0, &[("goal", rint(1))])
        .build();
    let ec = only_mec(&m);
    let p = super_potential(&m, &ec).unwrap();
    assert_eq!(p.t(), rint(1));
    assert_eq!(p.u, vec![rint(0)]);
    assert!(p.is_superharmonic(&m, &ec));
}

#[test]
fn gold_potential() {
    let m = fixture("m_gold");
    let ec = only_mec(&m);
    let p = super_potential(&m, &ec).unwrap();
    assert_eq!(p.t(), rat(1, 4));
    assert!(p.is_superharmonic(&m, &ec));
    assert_eq!(p.u.iter().min().unwrap(), &rint(0));
    assert_eq!(p.spread, rint(3));
    assert_eq!(super_potential_lp(&m, &ec).unwrap().gain, p.gain);
}

#[test]
fn two_cycle_potential() {
    let m = Mdp::builder()
        .initial("a")
        .goal("goal")
        .action("a", "x", -1, &[("b", rint(1))])
        .action("b", "y", -3, &[("a", rint(1))])
        .action("a", "out", 0, &[("goal", rint(1))])
        .build();
    let ec = only_mec(&m);
    for p in [super_potential(&m, &ec).unwrap(), super_potential_lp(&m, &ec).unwrap()] {
        assert_eq!(p.t(), rint(2));
        assert!(p.is_superharmonic(&m, &ec));
        let a = p.states.iter().position(|&s| s == m.state_index("a").unwrap()).unwrap();
        let b = p.states.iter().position(|&s| s == m.state_index("b").unwrap()).unwrap();
        assert_eq!((p.u[a].clone(), p.u[b].clone()), (rint(1), rint(0)));
    }
}

#[test]
fn nonnegative_gain_is_rejected() {
    let pump = fixture("pump");
    let ec = only_mec(&pump);
    assert!(matches!(super_potential(&pump, &ec), Err(BoundsError::NonNegativeGain(_))));
    assert!(matches!(compute_bounds(&pump, &rat(1, 10)), Err(BoundsError::NonNegativeGain(_))));
}

#[test]
fn tail_constant_examples() {
    let e = ec_tail_constants(&sp(rint(1), rint(0)), 1);
    assert_eq!((e.c, e.lambda), (rint(1), rint(0)));
    let e = ec_tail_constants(&sp(rat(1, 4), rint(1)), 2);
    assert_eq!((e.c, e.lambda), (rint(3), rat(11, 13)));
}

#[test]
fn coin_bounds() {
    let r = compute_bounds(&fixture("mc_coin"), &rat(1, 100)).unwrap();
    assert!(r.per_mec.is_empty());
    assert_eq!((r.w, r.delta.clone(), r.state_count), (2, rat(1, 2), 3));
    assert_eq!(r.c_m, rint(6));
    assert_eq!(r.lambda_m, rat(7, 8));
    assert_eq!(r.pe_ub, rint(512));
    assert_eq!(r.ce_ub, Some(rint(1024)));
}

#[test]
fn gold_bounds() {
    let m = fixture("m_gold");
    let r = compute_bounds(&m, &rat(1, 100)).unwrap();
    assert_eq!(r.per_mec.len(), 1);
    assert_eq!(r.per_mec[0].tail.c, rint(5));
    assert_eq!(r.per_mec[0].tail.lambda, rat(19, 21));
    assert_eq!(r.c_m, rint(13));
    assert_eq!(r.lambda_m, rat(167, 168));
    assert_eq!(r.pe_ub, rint(423360));
    assert!(r.lambda_m.is_positive() && r.lambda_m < Rational::one());
    assert!(r.r_minus < 0 && 0 < r.r_plus);
    // s_init may leave with tau, whose minimal goal probability is 1
    let s = m.initial;
    assert_eq!(r.q_per_state[s], Some(-rint(423360)));
    assert_eq!(r.q, -rint(423360));
    assert_eq!(r.r_minus, -423360 - r.r_plus);
    // the exponent is the least one passing the exact test
    let two_d = rint(2) * &r.d;
    assert!(&two_d * pow(&r.lambda_m, r.k) <= r.epsilon);
    assert!(&two_d * pow(&r.lambda_m, r.k - 1) > r.epsilon);
    assert_eq!(r.r_plus, 15 * r.k as i64);
}

#[test]
fn ce_bound_needs_positive_min_probability() {
    let n = prepare(&fixture("n_gold")).unwrap().model;
    let (n, _) = posmin_transform(&n).unwrap();
    let r = compute_bounds(&n, &rat(1, 100)).unwrap();
    assert_eq!(r.ce_ub, Some(&r.pe_ub * rint(2)));
}

#[test]
fn exponent_edge_cases() {
    assert_eq!(least_tail_exponent(&rint(1), &rint(2), &rat(1, 2)).unwrap(), 0);
    assert_eq!(least_tail_exponent(&rint(8), &rint(1), &rat(1, 2)).unwrap(), 3);
    assert_eq!(least_tail_exponent(&rint(9), &rint(1), &rat(1, 2)).unwrap(), 4);
    assert_eq!(least_tail_exponent(&rint(9), &rint(1), &rint(0)).unwrap(), 1);
    assert_eq!(least_tail_exponent(&rint(9), &rint(0), &rat(1, 2)), Err(BoundsError::NonPositiveEpsilon));
}

#[test]
fn superharmonic_on_all_fixtures() {
    for name in ["m_gold", "n_gold", "n_count", "m_parity", "mc_coin"] {
        let m = prepare(&fixture(name)).unwrap().model;
        for ec in mec_decompose(&m).mecs {
            if ec.states.len() == 1 && m.is_absorbing(ec.states[0]) {
                continue;
            }
            assert!(super_potential(&m, &ec).unwrap().is_superharmonic(&m, &ec), "{name}");
        }
        compute_bounds(&m, &rat(1, 1000)).unwrap();
    }
}

fn pow(r: &Rational, k: u64) -> Rational {
    Rational::new(r.numer().pow(k as u32), r.denom().pow(k as u32))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn potentials_agree_with_the_program(m in arb_mdp(GenConfig { max_states: 4, max_actions: 2, min_weight: -3, max_weight: 2 })) {
        let Ok(p) = prepare(&m) else { return Ok(()) };
        let m = p.model;
        for ec in mec_decompose(&m).mecs {
            if ec.states.len() == 1 && m.is_absorbing(ec.states[0]) {
                continue;
            }
            let fast = super_potential(&m, &ec).unwrap();
            let lp = super_potential_lp(&m, &ec).unwrap();
            prop_assert_eq!(&fast.gain, &lp.gain);
            prop_assert!(fast.is_superharmonic(&m, &ec));
            prop_assert!(lp.is_superharmonic(&m, &ec));
            let tail = ec_tail_constants(&fast, m.max_abs_weight());
            prop_assert!(!tail.lambda.is_negative() && tail.lambda < Rational::one());
        }
    }

    #[test]
    fn upper_bound_dominates_memoryless_policies(m in arb_mdp(GenConfig { max_states: 3, max_actions: 2, min_weight: -3, max_weight: 3 })) {
        let Ok(p) = prepare(&m) else { return Ok(()) };
        let m = p.model;
        let r = compute_bounds(&m, &rat(1, 10)).unwrap();
        prop_assert!(!r.lambda_m.is_negative());
        prop_assert!(r.lambda_m < Rational::one());
        for pol in policies(&all_actions(&m)) {
            for v in chain_pe(&m, &pol) {
                prop_assert!(v <= r.pe_ub);
            }
        }
        prop_assert!(r.q <= Rational::zero());
        prop_assert!(r.r_minus < r.r_plus || r.r_plus == 0);
        let halved = r.with_epsilon(&rat(1, 20)).unwrap();
        prop_assert!(halved.r_plus >= r.r_plus);
    }
}

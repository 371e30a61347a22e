use mdp_graph::{mec_decompose, ReachabilityProfile};
use mdp_model::linalg::SparseSystem;
use mdp_model::{ceil_to_i64, rint, Mdp, Rational, StateId};
use num_traits::{One, Zero};

use crate::extreme::{extreme_schedulers, ExtremeSchedulers};
use crate::ExactError;

/// Optimal partial expectations PE^sup[r + bias] for 0 <= r <= window_top.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ExactPeTable {
    pub bias: Rational,
    pub saturation: Rational,
    pub window_top: i64,
    /// `values[s][r]`; goal rows hold `r + bias`, rows of states that cannot reach goal hold 0
    pub values: Vec<Vec<Rational>>,
    /// weight-based deterministic choices on the same domain
    pub scheduler: Vec<Vec<usize>>,
}

impl ExactPeTable {
    pub fn value(&self, s: StateId, r: i64) -> &Rational {
        &self.values[s][usize::try_from(r).expect("r within the table")]
    }
}

fn check_preconditions(model: &Mdp, profile: &ReachabilityProfile) -> Result<(), ExactError> {
    if model.has_negative_weight() {
        return Err(ExactError::NegativeWeight);
    }
    // any end component that can still reach goal has mean payoff >= 0 here
    for ec in mec_decompose(model).mecs {
        if ec.states.iter().any(|&s| s != model.goal && !profile.p_max[s].is_zero()) {
            return Err(ExactError::EndComponent(ec.states.iter().map(|&s| model.states[s].clone()).collect()));
        }
    }
    Ok(())
}

/// Saturation point: above it the Max scheduler beats every one-step deviation.
fn saturation(ext: &ExtremeSchedulers, model: &Mdp, bias: &Rational) -> Rational {
    let p = &ext.profile;
    let mut sup: Option<Rational> = None;
    for s in 0..model.num_states() {
        for a in 0..model.actions[s].len() {
            if p.in_act_max(s, a) {
                continue;
            }
            let ratio = (&ext.max.pe_by_action[s][a] - &ext.max.pe[s]) / (&p.p_max[s] - &p.p_max_by_action[s][a]);
            if sup.as_ref().is_none_or(|v| ratio > *v) {
                sup = Some(ratio);
            }
        }
    }
    match sup {
        Some(v) => v - bias,
        None => Rational::zero(),
    }
}

/// The saturation point 𝔭 for bias `bias` (0 when every action is in Act^max).
pub fn nonneg_saturation_point(model: &Mdp, bias: &Rational) -> Result<Rational, ExactError> {
    let ext = extreme_schedulers(model);
    check_preconditions(model, &ext.profile)?;
    Ok(saturation(&ext, model, bias))
}

/// Exact optimal partial expectations for non-negative weights.
pub fn nonneg_solve_exact(model: &Mdp, bias: &Rational) -> Result<ExactPeTable, ExactError> {
    nonneg_solve_with_top(model, bias, None)
}

/// As [`nonneg_solve_exact`], optionally with a larger table than B_R.
pub fn nonneg_solve_with_top(model: &Mdp, bias: &Rational, top: Option<i64>) -> Result<ExactPeTable, ExactError> {
    let ext = extreme_schedulers(model);
    let p = &ext.profile;
    check_preconditions(model, p)?;
    let sat = saturation(&ext, model, bias);
    let b_r = ceil_to_i64(&(&sat + rint(model.actions.iter().flatten().map(|a| a.weight).max().unwrap_or(0))))
        .ok_or(ExactError::Overflow)?;
    let window_top = top.unwrap_or(b_r).max(b_r).max(0);
    let layers = usize::try_from(window_top).map_err(|_| ExactError::Overflow)? + 1;
    let n = model.num_states();
    let terminal: Vec<bool> = (0..n).map(|s| s == model.goal || p.p_max[s].is_zero()).collect();
    let mut values = vec![vec![Rational::zero(); layers]; n];
    let mut scheduler = vec![vec![0usize; layers]; n];

    for r in (0..layers).rev() {
        let shifted = rint(r as i64) + bias;
        values[model.goal][r] = shifted.clone();
        if rint(r as i64) >= sat {
            for s in (0..n).filter(|&s| !terminal[s]) {
                values[s][r] = &p.p_max[s] * &shifted + &ext.max.pe[s];
                scheduler[s][r] = ext.max.choice[s];
            }
            continue;
        }
        // layer r depends on itself through weight-0 actions and on higher layers otherwise
        let q: Vec<usize> = (0..n).filter(|&s| !terminal[s]).collect();
        let mut pos = vec![usize::MAX; n];
        for (i, &s) in q.iter().enumerate() {
            pos[s] = i;
        }
        let one_step = |values: &[Vec<Rational>], s: StateId, a: usize| -> Rational {
            let act = &model.actions[s][a];
            let to = r + usize::try_from(act.weight).expect("non-negative weight");
            act.dist.iter().fold(Rational::zero(), |acc, (t, pr)| acc + pr * &values[*t][to])
        };
        // start from the best action against the layer above (weight-0 successors read as 0)
        let mut policy: Vec<usize> = (0..n).map(|s| ext.max.choice[s]).collect();
        loop {
            let mut sys = SparseSystem::new(q.len());
            for (i, &s) in q.iter().enumerate() {
                let act = &model.actions[s][policy[s]];
                sys.add(i, i, &Rational::one());
                for (t, pr) in &act.dist {
                    if act.weight == 0 && !terminal[*t] {
                        sys.add(i, pos[*t], &-pr);
                    } else {
                        let to = r + act.weight as usize;
                        sys.add_rhs(i, &(pr * &values[*t][to]));
                    }
                }
            }
            let x = sys.solve().expect("no end components inside a layer");
            for (i, &s) in q.iter().enumerate() {
                values[s][r] = x[i].clone();
            }
            let mut changed = false;
            for &s in &q {
                let mut best = values[s][r].clone();
                for a in 0..model.actions[s].len() {
                    let v = one_step(&values, s, a);
                    if v > best {
                        best = v;
                        policy[s] = a;
                        changed = true;
                    }
                }
            }
            if !changed {
                break;
            }
        }
        for &s in &q {
            scheduler[s][r] = policy[s];
        }
    }
    Ok(ExactPeTable { bias: bias.clone(), saturation: sat, window_top, values, scheduler })
}

use mdp_exact::chain_values;
use mdp_graph::can_reach_goal;
use mdp_model::linalg::SparseSystem;
use mdp_model::{rint, MarkovChain, Mdp, Rational, StateId};
use num_traits::{One, Zero};

use crate::solve::{solve, Guess};
use crate::unfold::{Boundary, Skeleton, Unfolded, Use};
use crate::window::WindowScheduler;
use crate::{ApproxError, ApproxOptions};

/// Values of a window scheduler from the initial state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowValue {
    /// partial expectation with the requested bias
    pub pe: Rational,
    pub reach: Rational,
    /// conditional expectation without bias, when goal is reached at all
    pub ce: Option<Rational>,
}

/// Goal probabilities and partial expectations of a memoryless policy.
pub fn policy_values(model: &Mdp, choice: &[usize]) -> (Vec<Rational>, Vec<Rational>) {
    let mut m = model.clone();
    for (s, acts) in m.actions.iter_mut().enumerate() {
        *acts = vec![acts[choice[s]].clone()];
    }
    chain_values(&MarkovChain::try_from(m).expect("one action per state"))
}

fn boundary_of(model: &Mdp, sched: &WindowScheduler) -> Boundary {
    let (above_reach, above_pe) = policy_values(model, &sched.above);
    let (below_reach, below_pe) = policy_values(model, &sched.below);
    Boundary { above_reach, above_pe, below_reach, below_pe }
}

/// Exact values of the Markov chain induced by `sched`: cells (state, weight)
/// inside the window, the affine values of the boundary policies outside.
///
/// Solves a rational system with one unknown per cell, so it is meant for
/// small windows; see [`evaluate_window_scheduler_certified`] otherwise.
pub fn evaluate_window_scheduler(model: &Mdp, sched: &WindowScheduler, bias: &Rational) -> WindowValue {
    let n = model.num_states();
    let b = boundary_of(model, sched);
    let live = can_reach_goal(model);
    let terminal: Vec<bool> = (0..n).map(|s| s == model.goal || !live[s]).collect();
    let width = sched.width();
    let index = |s: StateId, w: i64| (w - sched.lo) as usize * n + s;
    let inside = |w: i64| w >= sched.lo && w <= sched.hi;

    let s0 = model.initial;
    let (pe0, reach) = if s0 == model.goal {
        (Rational::zero(), Rational::one())
    } else if terminal[s0] {
        (Rational::zero(), Rational::zero())
    } else if !inside(0) {
        if 0 > sched.hi {
            (b.above_pe[s0].clone(), b.above_reach[s0].clone())
        } else {
            (b.below_pe[s0].clone(), b.below_reach[s0].clone())
        }
    } else {
        // successors inside the window; `exits` marks cells with a direct
        // chance to finish (goal, or a boundary policy that reaches goal)
        let cells = width * n;
        let mut succ: Vec<Vec<(usize, Rational)>> = vec![Vec::new(); cells];
        let mut pe_rhs = vec![Rational::zero(); cells];
        let mut reach_rhs = vec![Rational::zero(); cells];
        for wi in 0..width {
            let w = sched.lo + wi as i64;
            for s in (0..n).filter(|&s| !terminal[s]) {
                let i = index(s, w);
                let act = &model.actions[s][sched.act(crate::Phase::Window, s, w)];
                let w2 = w + act.weight;
                for (t, p) in &act.dist {
                    if *t == model.goal {
                        pe_rhs[i] += p * rint(w2);
                        reach_rhs[i] += p;
                    } else if terminal[*t] {
                        continue;
                    } else if !inside(w2) {
                        let (pr, pe) = if w2 > sched.hi { (&b.above_reach[*t], &b.above_pe[*t]) } else { (&b.below_reach[*t], &b.below_pe[*t]) };
                        pe_rhs[i] += p * (pe + pr * rint(w2));
                        reach_rhs[i] += p * pr;
                    } else {
                        succ[i].push((index(*t, w2), p.clone()));
                    }
                }
            }
        }
        // cells that never finish (a closed cycle inside the window) are worth 0
        let mut pred: Vec<Vec<usize>> = vec![Vec::new(); cells];
        for (i, out) in succ.iter().enumerate() {
            for (j, _) in out {
                pred[*j].push(i);
            }
        }
        let mut live: Vec<bool> = reach_rhs.iter().map(|r| !r.is_zero()).collect();
        let mut stack: Vec<usize> = (0..cells).filter(|&i| live[i]).collect();
        while let Some(j) = stack.pop() {
            for &i in &pred[j] {
                if !live[i] {
                    live[i] = true;
                    stack.push(i);
                }
            }
        }
        let mut pe_sys = SparseSystem::new(cells);
        let mut reach_sys = SparseSystem::new(cells);
        for i in 0..cells {
            pe_sys.add(i, i, &Rational::one());
            reach_sys.add(i, i, &Rational::one());
            if !live[i] {
                continue;
            }
            pe_sys.add_rhs(i, &pe_rhs[i]);
            reach_sys.add_rhs(i, &reach_rhs[i]);
            for (j, p) in &succ[i] {
                if live[*j] {
                    pe_sys.add(i, *j, &-p.clone());
                    reach_sys.add(i, *j, &-p.clone());
                }
            }
        }
        let pe = pe_sys.solve().expect("every live cell finishes with positive probability");
        let reach = reach_sys.solve().expect("every live cell finishes with positive probability");
        let i = index(s0, 0);
        (pe[i].clone(), reach[i].clone())
    };
    let ce = (!reach.is_zero()).then(|| &pe0 / &reach);
    WindowValue { pe: pe0 + bias * &reach, reach, ce }
}

/// Interval for the partial expectation (with bias) of `sched`, computed
/// with the certified fixed-point solver; the width is at most `tolerance`
/// unless the solver reports a precision failure.
pub fn evaluate_window_scheduler_certified(
    model: &Mdp,
    sched: &WindowScheduler,
    bias: &Rational,
    tolerance: &Rational,
    opts: &ApproxOptions,
) -> Result<(Rational, Rational), ApproxError> {
    let live = can_reach_goal(model);
    let terminal: Vec<bool> = (0..model.num_states()).map(|s| s == model.goal || !live[s]).collect();
    let boundary = boundary_of(model, sched);
    let s0 = model.initial;
    let affine = |reach: &Rational, pe: &Rational| pe + reach * bias;
    if s0 == model.goal {
        return Ok((bias.clone(), bias.clone()));
    }
    if terminal[s0] {
        return Ok((Rational::zero(), Rational::zero()));
    }
    if sched.hi < 0 {
        let v = affine(&boundary.above_reach[s0], &boundary.above_pe[s0]);
        return Ok((v.clone(), v));
    }
    if sched.lo > 0 {
        let v = affine(&boundary.below_reach[s0], &boundary.below_pe[s0]);
        return Ok((v.clone(), v));
    }
    let skeleton = Skeleton::new(model, terminal);
    let usage = |s: StateId, w: i64, a: usize| {
        if sched.act(crate::Phase::Window, s, w) == a {
            Use::Keep { pickable: true }
        } else {
            Use::Skip
        }
    };
    let u = Unfolded::build(model, &boundary, &skeleton, (sched.lo, sched.hi), bias, opts.cell_limit, &usage)?;
    let start = u.cell(s0, 0).expect("start inside the window");
    let policy: Vec<u32> = (0..u.cells()).map(|i| u.records(i).start as u32).collect();
    let guess = Guess { policy: policy.clone(), values: vec![0; u.cells()], steps_policy: policy, steps: vec![0; u.cells()] };
    let solved = solve(&u, start, guess, tolerance)?;
    Ok((solved.lower, solved.upper))
}

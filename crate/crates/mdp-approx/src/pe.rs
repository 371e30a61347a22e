use mdp_bounds::{compute_bounds, BoundsReport};
use mdp_exact::{extreme_schedulers, ExtremeSchedulers};
use mdp_model::{ceil_to_i64, floor_to_i64, rint, Mdp, Rational, StateId};
use mdp_preprocess::{classify_finiteness, collapse_to_fail, prepare, FinitenessReason};
use num_traits::{Signed, Zero};

use crate::solve::{record_for, record_of, solve, Guess};
use crate::unfold::{Boundary, Skeleton, Unfolded, Use};
use crate::window::WindowScheduler;
use crate::{ApproxError, ApproxOptions};

/// Diagnostics of one windowed solve.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ApproxTrace {
    /// inclusive window of path weights
    pub window: (i64, i64),
    pub kept_states: usize,
    pub cells: usize,
    pub iterations: u32,
    pub refinements: u32,
    /// bound on the expected number of steps inside the window
    pub steps_bound: Rational,
    /// upper minus lower bound of the window optimum
    pub certification_gap: Rational,
    /// error allowed for cutting the weights off at the window
    pub truncation: Rational,
    pub r_plus: i64,
    pub r_minus: i64,
}

#[derive(Clone, Debug)]
pub struct ApproxResult {
    pub lower: Rational,
    pub upper: Rational,
    pub epsilon: Rational,
    /// ε-optimal scheduler, in terms of `model`
    pub scheduler: WindowScheduler,
    /// the preprocessed model the scheduler refers to
    pub model: Mdp,
    pub trace: ApproxTrace,
}

pub(crate) struct Probe {
    pub lower: Rational,
    /// upper bound on the window optimum, truncation not included
    pub upper: Rational,
    pub scheduler: WindowScheduler,
    /// what a probe for a nearby bias can start from
    pub memory: Option<Memory>,
    pub trace: ApproxTrace,
}

/// Final policies and fixed-point values of a solved probe, per cell.
pub(crate) struct Memory {
    bias: Rational,
    lo: i64,
    hi: i64,
    actions: Vec<u16>,
    values: Vec<i128>,
    steps_actions: Vec<u16>,
    steps: Vec<i128>,
}

/// A prepared model with everything that does not depend on the bias.
pub(crate) struct Engine {
    pub model: Mdp,
    pub ext: ExtremeSchedulers,
    pub bounds: BoundsReport,
    skeleton: Skeleton,
    boundary: Boundary,
    cell_limit: u64,
}

impl Engine {
    /// `truncation` is the error the window may cause.
    pub fn new(model: Mdp, truncation: &Rational, opts: &ApproxOptions) -> Result<Engine, ApproxError> {
        let ext = extreme_schedulers(&model);
        let bounds = compute_bounds(&model, truncation)?;
        let terminal = (0..model.num_states()).map(|s| s == model.goal || ext.profile.p_max[s].is_zero()).collect();
        let skeleton = Skeleton::new(&model, terminal);
        let boundary = Boundary::extreme(&ext);
        Ok(Engine { model, ext, bounds, skeleton, boundary, cell_limit: opts.cell_limit })
    }

    /// Path-weight window for `bias`: with u = w + bias, cells cover
    /// `q - R+ <= u` and `w <= R+` or `u <= 0`.
    fn window(&self, bias: &Rational) -> Result<(i64, i64), ApproxError> {
        let r_plus = rint(self.bounds.r_plus);
        let lo = floor_to_i64(&(&self.bounds.q - &r_plus - bias)).ok_or(ApproxError::Overflow)?;
        let hi = self.bounds.r_plus.max(ceil_to_i64(&-bias).ok_or(ApproxError::Overflow)?);
        Ok((lo, hi))
    }

    /// Upper bound on PE[bias] of every scheduler: PE^ub plus the bias
    /// times the extreme goal probability on the side of its sign.
    pub fn ceiling(&self, bias: &Rational) -> Rational {
        let p = &self.ext.profile;
        let s0 = self.model.initial;
        let reach = if bias.is_negative() { &p.p_min[s0] } else { &p.p_max[s0] };
        &self.bounds.pe_ub + bias * reach
    }

    fn boundary_value(&self, s: StateId, w: i64, bias: &Rational, hi: i64) -> Rational {
        let u = rint(w) + bias;
        if w > hi {
            &self.ext.max.pe[s] + &self.ext.max.reach[s] * u
        } else {
            &self.ext.min.pe[s] + &self.ext.min.reach[s] * u
        }
    }

    /// Certified window optimum of PE[bias] with gap at most `budget`.
    ///
    /// Values depend on the weight only through weight plus bias, so a warm
    /// start is read off at the cell shifted by the difference of the biases.
    pub fn probe(&self, bias: &Rational, budget: &Rational, warm: Option<&Memory>) -> Result<Probe, ApproxError> {
        let m = &self.model;
        let (lo, hi) = self.window(bias)?;
        let mut trace = ApproxTrace {
            window: (lo, hi),
            kept_states: self.skeleton.kept.len(),
            cells: 0,
            iterations: 0,
            refinements: 0,
            steps_bound: Rational::zero(),
            certification_gap: Rational::zero(),
            truncation: self.bounds.epsilon.clone(),
            r_plus: self.bounds.r_plus,
            r_minus: self.bounds.r_minus,
        };
        let s0 = m.initial;
        if self.skeleton.terminal[s0] || lo > 0 || hi < 0 {
            let value = if s0 == m.goal {
                bias.clone()
            } else if self.skeleton.terminal[s0] {
                Rational::zero()
            } else {
                self.boundary_value(s0, 0, bias, hi)
            };
            // the run starts outside the window: one policy for the whole run
            let choice = if lo > 0 { &self.ext.min.choice } else { &self.ext.max.choice };
            let scheduler = WindowScheduler::memoryless(m, 0, 0, choice);
            return Ok(Probe { lower: value.clone(), upper: value, scheduler, memory: None, trace });
        }

        // below q_s only minimizing actions are worth considering
        let thresholds: Vec<i64> = self
            .bounds
            .q_per_state
            .iter()
            .map(|q| q.as_ref().map_or(i64::MIN, |q| floor_to_i64(&(q - bias)).unwrap_or(if q.is_negative() { i64::MIN } else { i64::MAX })))
            .collect();
        let profile = &self.ext.profile;
        let usage = |s: StateId, w: i64, a: usize| Use::Keep { pickable: w > thresholds[s] || profile.in_act_min(s, a) };
        let u = Unfolded::build(m, &self.boundary, &self.skeleton, (lo, hi), bias, self.cell_limit, &usage)?;
        trace.cells = u.cells();
        let start = u.cell(s0, 0).expect("start inside the window");

        // where the Max line overtakes the Min line, in path weight
        let crossings: Vec<i64> = (0..m.num_states())
            .map(|s| {
                let (max, min) = (&self.ext.max, &self.ext.min);
                let slope = &max.reach[s] - &min.reach[s];
                if slope.is_positive() {
                    ceil_to_i64(&((&min.pe[s] - &max.pe[s]) / slope - bias)).unwrap_or(i64::MAX)
                } else if max.pe[s] >= min.pe[s] {
                    i64::MIN
                } else {
                    i64::MAX
                }
            })
            .collect();
        let shift = warm.map(|mem| floor_to_i64(&(bias - &mem.bias)).unwrap_or(i64::MAX / 4));
        let k = u.kept.len();
        let n = u.cells();
        let mut guess = Guess { policy: Vec::with_capacity(n), values: vec![0; n], steps_policy: Vec::with_capacity(n), steps: vec![0; n] };
        for i in 0..n {
            let (s, w) = u.coords(i);
            let default = if w > thresholds[s] && w >= crossings[s] { self.ext.max.choice[s] } else { self.ext.min.choice[s] };
            let old = warm.zip(shift).and_then(|(mem, d)| {
                let wp = w.checked_add(d)?;
                (wp >= mem.lo && wp <= mem.hi).then(|| (mem, (wp - mem.lo) as usize * k + u.slot[s] as usize))
            });
            // step counts only need to be large, so cells outside the old
            // window borrow them from the nearest old cell
            let near = warm.zip(shift).map(|(mem, d)| {
                let wp = w.saturating_add(d).clamp(mem.lo, mem.hi);
                (mem, (wp - mem.lo) as usize * k + u.slot[s] as usize)
            });
            match near {
                Some((mem, j)) => {
                    guess.steps[i] = mem.steps[j];
                    let steps = record_of(&u, i, mem.steps_actions[j] as usize);
                    guess.steps_policy.push(steps.unwrap_or_else(|| record_for(&u, i, Some(default))));
                }
                None => guess.steps_policy.push(record_for(&u, i, Some(default))),
            }
            let policy = match old {
                Some((mem, j)) => {
                    guess.values[i] = mem.values[j];
                    record_for(&u, i, Some(mem.actions[j] as usize))
                }
                None => record_for(&u, i, Some(default)),
            };
            guess.policy.push(policy);
        }

        let solved = solve(&u, start, guess, budget)?;
        let mut scheduler = WindowScheduler::memoryless(m, lo, hi, &self.ext.max.choice);
        scheduler.below = self.ext.min.choice.clone();
        let last = solved.last;
        for i in 0..n {
            let (s, w) = u.coords(i);
            scheduler.table[s][(w - lo) as usize] = u.rec_action[last.policy[i] as usize] as u32;
        }
        let actions_of = |records: &[u32]| records.iter().map(|&r| u.rec_action[r as usize]).collect();
        let memory = Memory {
            bias: bias.clone(),
            lo,
            hi,
            actions: actions_of(&last.policy),
            values: last.values,
            steps_actions: actions_of(&last.steps_policy),
            steps: last.steps,
        };
        trace.iterations = solved.iterations;
        trace.refinements = solved.refinements;
        trace.certification_gap = &solved.upper - &solved.lower;
        trace.steps_bound = solved.steps;
        Ok(Probe { lower: solved.lower, upper: solved.upper, scheduler, memory: Some(memory), trace })
    }
}

/// [`approx_pe_with`] with default options.
pub fn approx_pe(model: &Mdp, epsilon: &Rational, bias: &Rational) -> Result<ApproxResult, ApproxError> {
    approx_pe_with(model, epsilon, bias, &ApproxOptions::default())
}

/// Interval of width at most ε around the maximal partial expectation with
/// the given bias, and a window scheduler attaining at least the lower end.
///
/// Half of ε goes to the window, half to the certified solve.
pub fn approx_pe_with(model: &Mdp, epsilon: &Rational, bias: &Rational, opts: &ApproxOptions) -> Result<ApproxResult, ApproxError> {
    if !epsilon.is_positive() {
        return Err(ApproxError::NonPositiveEpsilon);
    }
    let verdict = classify_finiteness(model);
    if !verdict.pe_finite {
        return Err(ApproxError::InfinitePe(verdict.reason));
    }
    if verdict.reason == FinitenessReason::GoalUnreachable {
        let (collapsed, _) = collapse_to_fail(model);
        let scheduler = WindowScheduler::memoryless(&collapsed, 0, 0, &vec![0; collapsed.num_states()]);
        let trace = ApproxTrace {
            window: (0, 0),
            kept_states: 0,
            cells: 0,
            iterations: 0,
            refinements: 0,
            steps_bound: Rational::zero(),
            certification_gap: Rational::zero(),
            truncation: Rational::zero(),
            r_plus: 0,
            r_minus: 0,
        };
        return Ok(ApproxResult {
            lower: Rational::zero(),
            upper: Rational::zero(),
            epsilon: epsilon.clone(),
            scheduler,
            model: collapsed,
            trace,
        });
    }
    let prepared = prepare(model)?.model;
    let half = epsilon / rint(2);
    let engine = Engine::new(prepared, &half, opts)?;
    let probe = engine.probe(bias, &half, None)?;
    let upper = (&probe.upper + &probe.trace.truncation).min(engine.ceiling(bias));
    if &upper - &probe.lower > *epsilon {
        return Err(ApproxError::Precision(format!(
            "certified gap {} exceeds the budget",
            mdp_model::to_f64(&probe.trace.certification_gap)
        )));
    }
    Ok(ApproxResult {
        lower: probe.lower,
        upper,
        epsilon: epsilon.clone(),
        scheduler: probe.scheduler,
        model: engine.model,
        trace: probe.trace,
    })
}

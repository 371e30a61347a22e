use mdp_approx::WindowScheduler;
use mdp_exact::{extreme_schedulers, ExtremeSchedulers};
use mdp_model::linalg::SparseSystem;
use mdp_model::{rint, Mdp, Rational, StateId};
use mdp_preprocess::{classify_finiteness, prepare, FinitenessReason};
use num_traits::{One, Zero};

use crate::OracleError;

/// Exact optimum over window schedulers.
#[derive(Clone, Debug)]
pub struct OracleResult {
    pub best: Rational,
    /// an optimal scheduler, in terms of `model`
    pub arg_best: WindowScheduler,
    /// policies evaluated
    pub enumerated: u64,
    /// every optimal action, `optimal[s][w - lo]` (empty rows for absorbing states)
    pub optimal: Vec<Vec<Vec<usize>>>,
    /// optimal values of the cells, same layout as `optimal`
    pub values: Vec<Vec<Rational>>,
    /// the preprocessed model
    pub model: Mdp,
}

impl OracleResult {
    pub fn value(&self, s: StateId, w: i64) -> &Rational {
        &self.values[s][(w - self.arg_best.lo) as usize]
    }
}

/// Which actions a scheduler may take at a cell.
pub type Allowed<'a> = &'a dyn Fn(StateId, i64, usize) -> bool;

/// Cells (state, weight) of `[-window, window]` with affine values outside:
/// Max above, Min below, w + bias at goal, 0 where goal is out of reach.
struct Layout<'a> {
    model: &'a Mdp,
    ext: ExtremeSchedulers,
    lo: i64,
    hi: i64,
    bias: Rational,
    dead: Vec<bool>,
}

impl Layout<'_> {
    fn width(&self) -> usize {
        (self.hi - self.lo + 1) as usize
    }

    fn index(&self, s: StateId, w: i64) -> usize {
        s * self.width() + (w - self.lo) as usize
    }

    fn open(&self, s: StateId) -> bool {
        s != self.model.goal && !self.dead[s]
    }

    /// Constant part and inside successors of taking `a` at (s, w).
    fn step(&self, s: StateId, w: i64, a: usize) -> (Rational, Vec<(usize, Rational)>) {
        let act = &self.model.actions[s][a];
        let w2 = w + act.weight;
        let u = rint(w2) + &self.bias;
        let mut c = Rational::zero();
        let mut inside = Vec::new();
        for (t, p) in &act.dist {
            if *t == self.model.goal {
                c += p * &u;
            } else if !self.open(*t) {
                continue;
            } else if w2 > self.hi {
                c += p * (&self.ext.max.pe[*t] + &self.ext.max.reach[*t] * &u);
            } else if w2 < self.lo {
                c += p * (&self.ext.min.pe[*t] + &self.ext.min.reach[*t] * &u);
            } else {
                inside.push((self.index(*t, w2), p.clone()));
            }
        }
        (c, inside)
    }

    fn q(&self, s: StateId, w: i64, a: usize, x: &[Rational]) -> Rational {
        let (c, inside) = self.step(s, w, a);
        inside.iter().fold(c, |acc, (j, p)| acc + p * &x[*j])
    }

    fn cells(&self) -> impl Iterator<Item = (StateId, i64)> + '_ {
        let (lo, hi) = (self.lo, self.hi);
        (0..self.model.num_states()).filter(|&s| self.open(s)).flat_map(move |s| (lo..=hi).map(move |w| (s, w)))
    }

    /// Exact values of a policy given per cell (absent cells are worth 0).
    fn evaluate(&self, policy: &[usize]) -> Result<Vec<Rational>, OracleError> {
        let n = self.model.num_states() * self.width();
        let mut sys = SparseSystem::new(n);
        for i in 0..n {
            sys.add(i, i, &Rational::one());
        }
        for (s, w) in self.cells() {
            let i = self.index(s, w);
            let (c, inside) = self.step(s, w, policy[i]);
            sys.add_rhs(i, &c);
            for (j, p) in inside {
                sys.add(i, j, &-p);
            }
        }
        sys.solve().ok_or(OracleError::Improper)
    }

    fn result(&self, policy: Vec<usize>, x: Vec<Rational>, enumerated: u64, allowed: Allowed) -> OracleResult {
        let m = self.model;
        let width = self.width();
        let mut arg_best = WindowScheduler::memoryless(m, self.lo, self.hi, &self.ext.max.choice);
        arg_best.below = self.ext.min.choice.clone();
        let mut optimal = vec![Vec::new(); m.num_states()];
        let mut values = vec![vec![Rational::zero(); width]; m.num_states()];
        for s in 0..m.num_states() {
            for w in self.lo..=self.hi {
                let k = (w - self.lo) as usize;
                values[s][k] = if s == m.goal { rint(w) + &self.bias } else { x[self.index(s, w)].clone() };
            }
            if m.is_absorbing(s) {
                continue;
            }
            optimal[s] = (self.lo..=self.hi)
                .map(|w| {
                    if !self.open(s) {
                        return Vec::new();
                    }
                    let v = &x[self.index(s, w)];
                    (0..m.actions[s].len()).filter(|&a| allowed(s, w, a) && self.q(s, w, a, &x) == *v).collect()
                })
                .collect();
            for w in self.lo..=self.hi {
                if self.open(s) {
                    arg_best.table[s][(w - self.lo) as usize] = policy[self.index(s, w)] as u32;
                }
            }
        }
        let best = values[m.initial][(-self.lo) as usize].clone();
        OracleResult { best, arg_best, enumerated, optimal, values, model: m.clone() }
    }
}

/// The model the oracle works on: preprocessed, or `None` when goal cannot
/// be reached (every scheduler is then worth 0).
fn prepared(model: &Mdp) -> Result<Option<Mdp>, OracleError> {
    let verdict = classify_finiteness(model);
    if !verdict.pe_finite {
        return Err(OracleError::Infinite(verdict.reason));
    }
    if verdict.reason == FinitenessReason::GoalUnreachable {
        return Ok(None);
    }
    Ok(Some(prepare(model)?.model))
}

fn trivial(model: &Mdp, window: i64) -> OracleResult {
    let n = model.num_states();
    let width = (2 * window + 1) as usize;
    let arg_best = WindowScheduler::memoryless(model, -window, window, &vec![0; n]);
    let optimal = (0..n).map(|s| if model.is_absorbing(s) { Vec::new() } else { vec![Vec::new(); width] }).collect();
    OracleResult { best: Rational::zero(), arg_best, enumerated: 0, optimal, values: vec![vec![Rational::zero(); width]; n], model: model.clone() }
}

fn layout<'a>(model: &'a Mdp, window: i64, bias: &Rational) -> Layout<'a> {
    let ext = extreme_schedulers(model);
    let dead = (0..model.num_states()).map(|s| ext.profile.p_max[s].is_zero()).collect();
    Layout { model, ext, lo: -window, hi: window, bias: bias.clone(), dead }
}

/// [`oracle_pe_restricted`] with every action allowed.
pub fn oracle_pe(model: &Mdp, window: i64, bias: &Rational) -> Result<OracleResult, OracleError> {
    oracle_pe_restricted(model, window, bias, &|_, _, _| true)
}

/// Best partial expectation with bias over window schedulers on
/// `[-window, window]` that only take `allowed` actions inside the window,
/// with Max above and Min below. Exact rational policy iteration: on the
/// preprocessed model every such scheduler leaves the window or stops, so
/// policy iteration ends in the optimum.
pub fn oracle_pe_restricted(model: &Mdp, window: i64, bias: &Rational, allowed: Allowed) -> Result<OracleResult, OracleError> {
    if window < 0 {
        return Err(OracleError::Window(window));
    }
    let Some(m) = prepared(model)? else {
        let (collapsed, _) = mdp_preprocess::collapse_to_fail(model);
        return Ok(trivial(&collapsed, window));
    };
    let lay = layout(&m, window, bias);
    let first = |s: StateId, w: i64| -> Result<usize, OracleError> {
        let pref = lay.ext.max.choice[s];
        if allowed(s, w, pref) {
            return Ok(pref);
        }
        (0..m.actions[s].len()).find(|&a| allowed(s, w, a)).ok_or(OracleError::NoAction(m.states[s].clone(), w))
    };
    let n = m.num_states() * lay.width();
    let mut policy = vec![0; n];
    for (s, w) in lay.cells() {
        policy[lay.index(s, w)] = first(s, w)?;
    }
    let mut enumerated = 0;
    loop {
        let x = lay.evaluate(&policy)?;
        enumerated += 1;
        let mut changed = false;
        for (s, w) in lay.cells() {
            let i = lay.index(s, w);
            let mut best = lay.q(s, w, policy[i], &x);
            for a in (0..m.actions[s].len()).filter(|&a| allowed(s, w, a)) {
                let q = lay.q(s, w, a, &x);
                if q > best {
                    best = q;
                    policy[i] = a;
                    changed = true;
                }
            }
        }
        if !changed {
            return Ok(lay.result(policy, x, enumerated, allowed));
        }
    }
}

/// The same optimum by evaluating every deterministic table, for at most
/// `limit` tables.
pub fn oracle_pe_exhaustive(model: &Mdp, window: i64, bias: &Rational, limit: u64) -> Result<OracleResult, OracleError> {
    if window < 0 {
        return Err(OracleError::Window(window));
    }
    let Some(m) = prepared(model)? else {
        let (collapsed, _) = mdp_preprocess::collapse_to_fail(model);
        return Ok(trivial(&collapsed, window));
    };
    let lay = layout(&m, window, bias);
    let cells: Vec<(StateId, i64)> = lay.cells().collect();
    let mut total: u64 = 1;
    for &(s, _) in &cells {
        total = total.saturating_mul(m.actions[s].len() as u64);
    }
    if total > limit {
        return Err(OracleError::TooMany { schedulers: total, limit });
    }
    let n = m.num_states() * lay.width();
    let mut policy = vec![0; n];
    let mut best: Option<(Rational, Vec<usize>, Vec<Rational>)> = None;
    let start = lay.index(m.initial, 0);
    let mut enumerated = 0;
    loop {
        let x = lay.evaluate(&policy)?;
        enumerated += 1;
        let v = if lay.open(m.initial) { x[start].clone() } else { Rational::zero() };
        if best.as_ref().is_none_or(|(b, _, _)| v > *b) {
            best = Some((v, policy.clone(), x));
        }
        // next table, odometer style
        let mut k = 0;
        loop {
            if k == cells.len() {
                let (_, policy, x) = best.expect("at least one table");
                // values of a table that is best from the start need not be
                // optimal elsewhere; recompute them with policy iteration
                let mut out = lay.result(policy, x, enumerated, &|_, _, _| true);
                let pi = oracle_pe(model, window, bias)?;
                out.values = pi.values;
                out.optimal = pi.optimal;
                return Ok(out);
            }
            let (s, w) = cells[k];
            let i = lay.index(s, w);
            policy[i] += 1;
            if policy[i] < m.actions[s].len() {
                break;
            }
            policy[i] = 0;
            k += 1;
        }
    }
}

//! Policy iteration on an unfolded window with a rigorous a-posteriori bound.
//!
//! Values live in fixed point (`Unfolded::scale` fractional bits) so that
//! residuals `c + P x - x` are computed exactly; the floating-point band LU
//! only proposes corrections. The bound uses a vector G with
//! `G - P_a G >= 1` for every action: if every action's residual at x is at
//! most η then `x + η G` dominates the optimum, and if the policy's own
//! residual is at least -η' then `x - η' G` lies below the policy's value.

use mdp_model::Rational;
use num_bigint::BigInt;
use num_traits::One;

use crate::band::BandLu;
use crate::unfold::Unfolded;
use crate::ApproxError;

/// Fractional bits of the step-count vector.
const STEP_BITS: u32 = 20;
const MAX_ITERATIONS: u32 = 400;

#[derive(Clone, Copy)]
enum Consts {
    Values,
    Steps,
}

fn q_num(u: &Unfolded, r: usize, x: &[i128], consts: Consts) -> Result<i128, ApproxError> {
    let mut acc = match consts {
        Consts::Values => u.rec_const[r],
        Consts::Steps => (u.rec_den[r] as i128) << STEP_BITS,
    };
    for e in u.entries(r) {
        let term = (u.ent_num[e] as i128).checked_mul(x[u.ent_col[e] as usize]);
        acc = term.and_then(|t| acc.checked_add(t)).ok_or(ApproxError::Overflow)?;
    }
    Ok(acc)
}

/// `q_num(r) - den·x_i`, the residual of record r at cell i times its denominator.
fn defect(u: &Unfolded, i: usize, r: usize, x: &[i128], consts: Consts) -> Result<i128, ApproxError> {
    let own = (u.rec_den[r] as i128).checked_mul(x[i]).ok_or(ApproxError::Overflow)?;
    q_num(u, r, x, consts)?.checked_sub(own).ok_or(ApproxError::Overflow)
}

fn ceil_div(a: i128, b: i128) -> i128 {
    -((-a).div_euclid(b))
}

/// Solves `x = c + P x` for the policy by refinement around the LU.
fn evaluate(u: &Unfolded, lu: &mut BandLu, policy: &[u32], x: &mut [i128], consts: Consts) -> Result<u32, ApproxError> {
    let n = u.cells();
    lu.clear();
    for (i, &r) in policy.iter().enumerate() {
        let r = r as usize;
        lu.add(i, i, 1.0);
        let den = u.rec_den[r] as f64;
        for e in u.entries(r) {
            lu.add(i, u.ent_col[e] as usize, -(u.ent_num[e] as f64) / den);
        }
    }
    if !lu.factor() {
        return Err(ApproxError::Precision("singular policy matrix".into()));
    }
    let mut res = vec![0.0; n];
    let mut prev = f64::INFINITY;
    let mut rounds = 0;
    loop {
        let mut worst: f64 = 0.0;
        for i in 0..n {
            let r = policy[i] as usize;
            res[i] = defect(u, i, r, x, consts)? as f64 / u.rec_den[r] as f64;
            worst = worst.max(res[i].abs());
        }
        if worst <= 2.0 || rounds >= 30 || (rounds >= 4 && worst > 0.5 * prev) {
            return Ok(rounds);
        }
        prev = worst;
        rounds += 1;
        lu.solve(&mut res);
        for i in 0..n {
            x[i] = x[i].checked_add(res[i].round() as i128).ok_or(ApproxError::Overflow)?;
        }
    }
}

/// Outcome of one improvement sweep.
struct Sweep {
    switches: usize,
    /// largest residual of any record, rounded up, in ulps
    up: i128,
    /// largest negated residual of the policy before the sweep, in ulps
    down: i128,
}

/// Greedy switch to the best record where it beats the current one by more
/// than `tau`; `any` also admits records that are not pickable.
fn improve(u: &Unfolded, policy: &mut [u32], x: &[i128], consts: Consts, tau: i128, any: bool) -> Result<Sweep, ApproxError> {
    let mut sweep = Sweep { switches: 0, up: 0, down: 0 };
    for i in 0..u.cells() {
        let cur = policy[i] as usize;
        let mut q_cur = 0;
        let mut best: Option<(i128, usize)> = None;
        for r in u.records(i) {
            let den = u.rec_den[r] as i128;
            let d = defect(u, i, r, x, consts)?;
            sweep.up = sweep.up.max(ceil_div(d, den));
            // value of the record relative to x_i
            let q = d.div_euclid(den);
            if r == cur {
                sweep.down = sweep.down.max(ceil_div(-d, den));
                q_cur = q;
            } else if (any || u.rec_pick[r]) && best.is_none_or(|(bq, _)| q > bq) {
                best = Some((q, r));
            }
        }
        if let Some((q, r)) = best {
            if q > q_cur.saturating_add(tau) {
                policy[i] = r as u32;
                sweep.switches += 1;
            }
        }
    }
    Ok(sweep)
}

/// Least `(G_i - P_a G)` over all cells and records, as `(num, den)`.
fn least_margin(u: &Unfolded, g: &[i128]) -> Result<(i128, i128), ApproxError> {
    let mut best: Option<(i128, i128)> = None;
    for i in 0..u.cells() {
        for r in u.records(i) {
            let den = u.rec_den[r] as i128;
            let num = (den << STEP_BITS) - defect(u, i, r, g, Consts::Steps)?;
            let smaller = match best {
                None => true,
                Some((bn, bd)) => num.checked_mul(bd).zip(bn.checked_mul(den)).map(|(a, b)| a < b).ok_or(ApproxError::Overflow)?,
            };
            if smaller {
                best = Some((num, den));
            }
        }
    }
    Ok(best.unwrap_or((1 << STEP_BITS, 1)))
}

/// Starting point of [`solve`]; any policies and values will do.
pub(crate) struct Guess {
    pub policy: Vec<u32>,
    pub values: Vec<i128>,
    /// policy and values of the step count
    pub steps_policy: Vec<u32>,
    pub steps: Vec<i128>,
}

pub(crate) struct Solved {
    /// final policy and values, a starting point for nearby problems
    pub last: Guess,
    /// the policy's value at the start cell is at least this
    pub lower: Rational,
    /// the window optimum at the start cell is at most this
    pub upper: Rational,
    /// bound on the expected number of macro steps from the start cell
    pub steps: Rational,
    pub iterations: u32,
    pub refinements: u32,
}

fn to_rational(v: i128) -> Rational {
    Rational::from_integer(BigInt::from(v))
}

/// Optimizes over the pickable records from `guess`, until the certified
/// gap at `start` is at most `budget` or no further progress is possible.
pub(crate) fn solve(u: &Unfolded, start: usize, guess: Guess, budget: &Rational) -> Result<Solved, ApproxError> {
    let Guess { mut policy, values: mut x, steps_policy: mut gp, steps: mut g } = guess;
    let n = u.cells();
    let mut lu = BandLu::new(n, u.kl, u.ku);
    let mut iterations = 0;
    let mut refinements = 0;

    // G: expected number of macro steps, pushed up until no record
    // shortens it by less than half a step
    let half_step = 1i128 << (STEP_BITS - 1);
    let (m_num, m_den) = loop {
        let (num, den) = least_margin(u, &g)?;
        if num >= half_step * den || iterations >= MAX_ITERATIONS {
            break (num, den);
        }
        if iterations > 0 && improve(u, &mut gp, &g, Consts::Steps, 1 << (STEP_BITS - 8), true)?.switches == 0 {
            break (num, den);
        }
        refinements += evaluate(u, &mut lu, &gp, &mut g, Consts::Steps)?;
        iterations += 1;
    };
    if m_num <= 0 {
        return Err(ApproxError::Precision("no step bound found for the window".into()));
    }
    // G_start / margin, in steps
    let steps = to_rational(g[start]) * to_rational(m_den) / to_rational(m_num);
    let steps_f = (g[start] as f64 * m_den as f64 / m_num as f64).max(1.0);
    let ulp = Rational::new(BigInt::one(), BigInt::one() << u.scale);
    let budget_ulps = mdp_model::to_f64(budget) * (u.scale as f64).exp2();
    let mut tau = ((budget_ulps / (4.0 * steps_f)).min(1e30) as i128).max(16);

    loop {
        let mut rounds = 0;
        let sweep = loop {
            refinements += evaluate(u, &mut lu, &policy, &mut x, Consts::Values)?;
            iterations += 1;
            rounds += 1;
            let cap = rounds >= MAX_ITERATIONS;
            let sweep = improve(u, &mut policy, &x, Consts::Values, if cap { i128::MAX } else { tau }, false)?;
            if sweep.switches == 0 {
                break sweep;
            }
        };
        // one more ulp on each side for the rounding of the constants
        let upper = (to_rational(x[start]) + to_rational(sweep.up + 1) * &steps) * &ulp;
        let lower = (to_rational(x[start]) - to_rational(sweep.down + 1) * &steps) * &ulp;
        if &(&upper - &lower) <= budget || tau <= 16 {
            let last = Guess { policy, values: x, steps_policy: gp, steps: g };
            return Ok(Solved { last, lower, upper, steps, iterations, refinements });
        }
        tau = (tau / 16).max(16);
    }
}

/// Record of cell i with the given action, pickable or not.
pub(crate) fn record_of(u: &Unfolded, i: usize, action: usize) -> Option<u32> {
    u.records(i).find(|&r| u.rec_action[r] as usize == action).map(|r| r as u32)
}

/// Record of cell i with the given action, falling back to the first pickable one.
pub(crate) fn record_for(u: &Unfolded, i: usize, action: Option<usize>) -> u32 {
    let recs = u.records(i);
    let found = action.and_then(|a| recs.clone().find(|&r| u.rec_action[r] as usize == a && u.rec_pick[r]));
    found.or_else(|| recs.clone().find(|&r| u.rec_pick[r])).unwrap_or(recs.start) as u32
}


use mdp_exact::extreme_schedulers;
use mdp_graph::mec_decompose;
use mdp_model::{ceil_to_i64, floor_to_i64, model_constants, rint, to_f64, Mdp, Rational, StateId, Weight};
use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};

use crate::potential::{ec_tail_constants, super_potential, EcTailConstants, SuperPotential};
use crate::BoundsError;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MecBound {
    /// position in `mec_decompose(model).mecs`
    pub index: usize,
    pub potential: SuperPotential,
    pub tail: EcTailConstants,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BoundsReport {
    pub w: Weight,
    pub delta: Rational,
    pub state_count: usize,
    /// MECs other than absorbing states
    pub per_mec: Vec<MecBound>,
    pub c_m: Rational,
    pub lambda_m: Rational,
    pub pe_ub: Rational,
    /// only when goal is reached with positive probability under every scheduler
    pub ce_ub: Option<Rational>,
    /// `None` where every action is a minimizing one
    pub q_per_state: Vec<Option<Rational>>,
    pub q: Rational,
    pub d: Rational,
    pub epsilon: Rational,
    /// the exponent k in R⁺ = (c_M + W)·k
    pub k: u64,
    pub r_plus: i64,
    pub r_minus: i64,
}

impl BoundsReport {
    /// The same report with the window recomputed for another ε.
    pub fn with_epsilon(&self, epsilon: &Rational) -> Result<BoundsReport, BoundsError> {
        let mut out = self.clone();
        let k = least_tail_exponent(&(rint(2) * &self.d), epsilon, &self.lambda_m)?;
        let (r_plus, r_minus) = window(&self.c_m, self.w, k, &self.q)?;
        out.epsilon = epsilon.clone();
        out.k = k;
        out.r_plus = r_plus;
        out.r_minus = r_minus;
        Ok(out)
    }
}

fn pow(r: &Rational, k: u64) -> Rational {
    let k = u32::try_from(k).expect("exponent checked by caller");
    Rational::new(r.numer().pow(k), r.denom().pow(k))
}

/// Natural logarithm of a positive rational, accurate to a few ulps.
fn ln(r: &Rational) -> f64 {
    let ln_int = |n: &BigInt| {
        let shift = n.bits().saturating_sub(60);
        to_f64(&Rational::from_integer(n >> shift)).ln() + shift as f64 * std::f64::consts::LN_2
    };
    ln_int(r.numer()) - ln_int(r.denom())
}

/// Least k >= 0 with `two_d · λ^k <= ε`, decided by exact comparison.
///
/// When the exact powers would get too long, k comes from the logarithms
/// with a relative safety margin of 1e-6; that k still satisfies the
/// inequality but may exceed the least one.
pub fn least_tail_exponent(two_d: &Rational, epsilon: &Rational, lambda: &Rational) -> Result<u64, BoundsError> {
    if !epsilon.is_positive() {
        return Err(BoundsError::NonPositiveEpsilon);
    }
    if two_d <= epsilon {
        return Ok(0);
    }
    if lambda.is_zero() {
        return Ok(1);
    }
    let gap = to_f64(&(Rational::one() - lambda));
    let estimate = ln(&(two_d / epsilon)) / -(-gap).ln_1p();
    if !estimate.is_finite() || estimate > 1e15 {
        return Err(BoundsError::Overflow);
    }
    let bits = lambda.numer().bits().max(lambda.denom().bits());
    let k = estimate.ceil().max(1.0) as u64;
    if bits.saturating_mul(k) > 1 << 20 {
        return Ok((estimate * (1.0 + 1e-6)).ceil() as u64 + 1);
    }
    // cross-multiplied so no gcd of the long powers is ever taken
    let holds = |k: u64| {
        let k = u32::try_from(k).expect("bounded by the bit budget");
        two_d.numer() * epsilon.denom() * lambda.numer().pow(k) <= epsilon.numer() * two_d.denom() * lambda.denom().pow(k)
    };
    let mut k = k;
    while !holds(k) {
        k += 1;
    }
    while k > 0 && holds(k - 1) {
        k -= 1;
    }
    Ok(k)
}

fn window(c_m: &Rational, w: Weight, k: u64, q: &Rational) -> Result<(i64, i64), BoundsError> {
    let k = i64::try_from(k).map_err(|_| BoundsError::Overflow)?;
    let r_plus_exact = (c_m + rint(w)) * rint(k);
    let r_plus = ceil_to_i64(&r_plus_exact).ok_or(BoundsError::Overflow)?;
    let r_minus = floor_to_i64(&(q - rint(r_plus))).ok_or(BoundsError::Overflow)?;
    Ok((r_plus, r_minus))
}

/// All bounds for a model whose non-absorbing end components have negative
/// maximal mean payoff.
pub fn compute_bounds(model: &Mdp, epsilon: &Rational) -> Result<BoundsReport, BoundsError> {
    if !epsilon.is_positive() {
        return Err(BoundsError::NonPositiveEpsilon);
    }
    let consts = model_constants(model);
    let w = consts.w;
    let one = Rational::one();

    let mut per_mec = Vec::new();
    for (index, ec) in mec_decompose(model).mecs.iter().enumerate() {
        if ec.states.len() == 1 && model.is_absorbing(ec.states[0]) {
            continue;
        }
        let potential = super_potential(model, ec)?;
        let tail = ec_tail_constants(&potential, w);
        per_mec.push(MecBound { index, potential, tail });
    }

    let n = i64::try_from(consts.state_count).map_err(|_| BoundsError::Overflow)?;
    let c_m = rint(n) * rint(w) + per_mec.iter().fold(Rational::zero(), |acc, m| acc + &m.tail.c);
    let escape = per_mec.iter().fold(pow(&consts.delta, consts.state_count as u64), |acc, m| acc * (&one - &m.tail.lambda));
    let lambda_m = &one - escape;
    let cw = &c_m + rint(w);
    let pe_ub = &cw / ((&one - &lambda_m) * (&one - &lambda_m));

    let ext = extreme_schedulers(model);
    let profile = &ext.profile;
    let p_init = &profile.p_min[model.initial];
    let ce_ub = p_init.is_positive().then(|| &pe_ub / p_init);

    let q_per_state: Vec<Option<Rational>> = (0..model.num_states())
        .map(|s: StateId| {
            let others = (0..model.actions[s].len()).filter(|&a| !profile.in_act_min(s, a));
            let least = others.map(|a| profile.p_min_by_action[s][a].clone()).min()?;
            Some((&pe_ub - &ext.min.pe[s]) / (&profile.p_min[s] - least))
        })
        .collect();
    let q = q_per_state.iter().flatten().min().cloned().unwrap_or_else(Rational::zero);
    let lowest = ext.max.pe.iter().chain(&ext.min.pe).min().cloned().unwrap_or_else(Rational::zero);
    let d = &pe_ub - lowest;

    let k = least_tail_exponent(&(rint(2) * &d), epsilon, &lambda_m)?;
    let (r_plus, r_minus) = window(&c_m, w, k, &q)?;
    Ok(BoundsReport {
        w,
        delta: consts.delta,
        state_count: consts.state_count,
        per_mec,
        c_m,
        lambda_m,
        pe_ub,
        ce_ub,
        q_per_state,
        q,
        d,
        epsilon: epsilon.clone(),
        k,
        r_plus,
        r_minus,
    })
}

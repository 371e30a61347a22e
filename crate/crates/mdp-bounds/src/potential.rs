use mdp_graph::{max_mean_payoff, EndComponent};
use mdp_model::simplex::{LinearProgram, LpOutcome, Relation};
use mdp_model::{rint, Mdp, Rational, StateId, Weight};
use num_traits::{One, Signed, Zero};

use crate::BoundsError;

/// Negative drift certificate of an end component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SuperPotential {
    /// states of the end component, in the component's order
    pub states: Vec<StateId>,
    /// maximal mean payoff −t
    pub gain: Rational,
    /// one entry per state in `states`, normalized to `min u = 0`
    pub u: Vec<Rational>,
    /// max u − min u
    pub spread: Rational,
}

impl SuperPotential {
    pub fn t(&self) -> Rational {
        -&self.gain
    }

    /// Checks `gain + u_s >= wgt(s, a) + sum P(s, a, s') u_s'` for every action of `ec`.
    pub fn is_superharmonic(&self, model: &Mdp, ec: &EndComponent) -> bool {
        let pos = |s: StateId| self.states.iter().position(|&x| x == s);
        ec.states.iter().all(|&s| {
            let Some(i) = pos(s) else { return false };
            ec.actions[&s].iter().all(|&a| {
                let act = &model.actions[s][a];
                let mut rhs = rint(act.weight);
                for (t, p) in &act.dist {
                    match pos(*t) {
                        Some(j) => rhs += p * &self.u[j],
                        None => return false,
                    }
                }
                &self.gain + &self.u[i] >= rhs
            })
        })
    }
}

fn normalized(states: Vec<StateId>, gain: Rational, raw: Vec<Rational>) -> SuperPotential {
    let min = raw.iter().min().cloned().unwrap_or_else(Rational::zero);
    let max = raw.iter().max().cloned().unwrap_or_else(Rational::zero);
    let u = raw.into_iter().map(|x| x - &min).collect();
    SuperPotential { states, gain, u, spread: max - min }
}

/// Super-potential from the bias of a gain-optimal policy; falls back to
/// [`super_potential_lp`] if the bias misses one of the inequalities.
pub fn super_potential(model: &Mdp, ec: &EndComponent) -> Result<SuperPotential, BoundsError> {
    let mp = max_mean_payoff(model, ec);
    if !mp.gain.is_negative() {
        return Err(BoundsError::NonNegativeGain(ec.states.iter().map(|&s| model.states[s].clone()).collect()));
    }
    let sp = normalized(ec.states.clone(), mp.gain, mp.bias);
    if sp.is_superharmonic(model, ec) {
        return Ok(sp);
    }
    super_potential_lp(model, ec)
}

/// Minimizes g subject to `g + u_s - sum P u >= wgt` over all actions of `ec`.
pub fn super_potential_lp(model: &Mdp, ec: &EndComponent) -> Result<SuperPotential, BoundsError> {
    let n = ec.states.len();
    let mut lp = LinearProgram::new(n + 1);
    lp.free = vec![true; n + 1];
    lp.objective[n] = -Rational::one();
    for (i, &s) in ec.states.iter().enumerate() {
        for &a in &ec.actions[&s] {
            let act = &model.actions[s][a];
            let mut coeffs = vec![(n, Rational::one()), (i, Rational::one())];
            for (t, p) in &act.dist {
                let j = ec.states.iter().position(|x| x == t).expect("end component is closed");
                coeffs.push((j, -p.clone()));
            }
            lp.add(coeffs, Relation::Ge, rint(act.weight));
        }
    }
    // pin one coordinate so the program is bounded in the direction of u
    lp.add(vec![(0, Rational::one())], Relation::Eq, Rational::zero());
    let LpOutcome::Optimal { mut x, .. } = lp.solve() else {
        unreachable!("the mean payoff program of an end component has an optimum")
    };
    let gain = x.pop().expect("gain variable");
    if !gain.is_negative() {
        return Err(BoundsError::NonNegativeGain(ec.states.iter().map(|&s| model.states[s].clone()).collect()));
    }
    Ok(normalized(ec.states.clone(), gain, x))
}

/// Tail constants of one end component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EcTailConstants {
    /// c_E = ‖u‖ + W
    pub c: Rational,
    /// λ_E = (1 − t/c_E) / (1 + t/c_E)
    pub lambda: Rational,
}

pub fn ec_tail_constants(sp: &SuperPotential, w: Weight) -> EcTailConstants {
    let c = &sp.spread + rint(w);
    let ratio = sp.t() / &c;
    let one = Rational::one();
    let lambda = (&one - &ratio) / (&one + &ratio);
    EcTailConstants { c, lambda }
}

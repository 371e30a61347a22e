use mdp_model::linalg::SparseSystem;
use mdp_model::{Mdp, Rational, StateId};
use num_traits::{One, Zero};

/// Expected value of `x` after taking action `a` in `s`.
pub(crate) fn expect(model: &Mdp, s: StateId, a: usize, x: &[Rational]) -> Rational {
    model.actions[s][a].dist.iter().fold(Rational::zero(), |acc, (t, p)| acc + p * &x[*t])
}

/// Total reward of a memoryless policy that is absorbed in the `fixed` states.
pub(crate) fn evaluate(
    model: &Mdp,
    policy: &[usize],
    fixed: &[Option<Rational>],
    reward: &impl Fn(StateId, usize) -> Rational,
) -> Option<Vec<Rational>> {
    let n = model.num_states();
    let mut pos = vec![usize::MAX; n];
    let unknown: Vec<StateId> = (0..n).filter(|&s| fixed[s].is_none()).collect();
    for (i, &s) in unknown.iter().enumerate() {
        pos[s] = i;
    }
    let mut sys = SparseSystem::new(unknown.len());
    for (i, &s) in unknown.iter().enumerate() {
        sys.add(i, i, &Rational::one());
        sys.add_rhs(i, &reward(s, policy[s]));
        for (t, p) in &model.actions[s][policy[s]].dist {
            match &fixed[*t] {
                Some(v) => sys.add_rhs(i, &(p * v)),
                None => sys.add(i, pos[*t], &-p),
            }
        }
    }
    let sol = sys.solve()?;
    Some((0..n).map(|s| fixed[s].clone().unwrap_or_else(|| sol[pos[s]].clone())).collect())
}

/// Policy iteration maximizing total reward over the `allowed` actions.
///
/// `policy` must be proper (absorbed in the fixed states with probability one);
/// switching only on strict improvement keeps it proper as long as every
/// improper policy collects unbounded negative reward.
pub(crate) fn maximize(
    model: &Mdp,
    allowed: &[Vec<usize>],
    fixed: &[Option<Rational>],
    reward: impl Fn(StateId, usize) -> Rational,
    mut policy: Vec<usize>,
) -> (Vec<usize>, Vec<Rational>) {
    loop {
        let x = evaluate(model, &policy, fixed, &reward).expect("policy iteration keeps the policy proper");
        let mut changed = false;
        for s in (0..model.num_states()).filter(|&s| fixed[s].is_none()) {
            let mut best = reward(s, policy[s]) + expect(model, s, policy[s], &x);
            for &a in &allowed[s] {
                let v = reward(s, a) + expect(model, s, a, &x);
                if v > best {
                    best = v;
                    policy[s] = a;
                    changed = true;
                }
            }
        }
        if !changed {
            return (policy, x);
        }
    }
}

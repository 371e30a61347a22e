use std::collections::HashSet;
use std::fmt;

use num_traits::{One, Signed, Zero};

use crate::model::{dist_sum, Mdp, ModelConstants, StateId};
use crate::rational::{fmt_exact, Rational};

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Violation {
    EmptyModel,
    InitialOutOfRange(StateId),
    GoalOutOfRange(StateId),
    DuplicateStateName(String),
    NoActions { state: String },
    DuplicateLabel { state: String, label: String },
    TargetOutOfRange { state: String, action: String, target: StateId },
    DuplicateTarget { state: String, action: String, target: String },
    NonPositiveProbability { state: String, action: String, target: String, prob: Rational },
    BadSum { state: String, action: String, sum: Rational },
    GoalNotAbsorbing,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyModel => write!(f, "model has no states"),
            Violation::InitialOutOfRange(s) => write!(f, "initial state index {s} out of range"),
            Violation::GoalOutOfRange(s) => write!(f, "goal state index {s} out of range"),
            Violation::DuplicateStateName(n) => write!(f, "state name {n} used twice"),
            Violation::NoActions { state } => write!(f, "state {state} has no enabled action"),
            Violation::DuplicateLabel { state, label } => {
                write!(f, "state {state}: duplicate action label {label}")
            }
            Violation::TargetOutOfRange { state, action, target } => {
                write!(f, "{state}/{action}: target index {target} out of range")
            }
            Violation::DuplicateTarget { state, action, target } => {
                write!(f, "{state}/{action}: target {target} listed twice")
            }
            Violation::NonPositiveProbability { state, action, target, prob } => {
                write!(f, "{state}/{action}: probability {} to {target} is not positive", fmt_exact(prob))
            }
            Violation::BadSum { state, action, sum } => {
                write!(f, "{state}/{action}: distribution sums to {} ≠ 1", display_plain(sum))
            }
            Violation::GoalNotAbsorbing => write!(f, "goal not absorbing"),
        }
    }
}

fn display_plain(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        fmt_exact(r)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, v) in self.violations.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

pub fn validate(model: &Mdp) -> ValidationReport {
    let mut out = Vec::new();
    let n = model.num_states();
    if n == 0 {
        out.push(Violation::EmptyModel);
        return ValidationReport { violations: out };
    }
    if model.initial >= n {
        out.push(Violation::InitialOutOfRange(model.initial));
    }
    if model.goal >= n {
        out.push(Violation::GoalOutOfRange(model.goal));
    }
    let mut names = HashSet::new();
    for name in &model.states {
        if !names.insert(name) {
            out.push(Violation::DuplicateStateName(name.clone()));
        }
    }
    let name_of = |t: StateId| model.states.get(t).cloned().unwrap_or_else(|| format!("#{t}"));
    for s in 0..n {
        let state = &model.states[s];
        if model.actions.get(s).is_none_or(|a| a.is_empty()) {
            out.push(Violation::NoActions { state: state.clone() });
            continue;
        }
        let mut labels = HashSet::new();
        for a in &model.actions[s] {
            if !labels.insert(&a.label) {
                out.push(Violation::DuplicateLabel { state: state.clone(), label: a.label.clone() });
            }
            let mut seen = HashSet::new();
            for (t, p) in &a.dist {
                if *t >= n {
                    out.push(Violation::TargetOutOfRange {
                        state: state.clone(),
                        action: a.label.clone(),
                        target: *t,
                    });
                    continue;
                }
                if !seen.insert(*t) {
                    out.push(Violation::DuplicateTarget {
                        state: state.clone(),
                        action: a.label.clone(),
                        target: name_of(*t),
                    });
                }
                if !p.is_positive() {
                    out.push(Violation::NonPositiveProbability {
                        state: state.clone(),
                        action: a.label.clone(),
                        target: name_of(*t),
                        prob: p.clone(),
                    });
                }
            }
            let sum = dist_sum(&a.dist);
            if !sum.is_one() {
                out.push(Violation::BadSum { state: state.clone(), action: a.label.clone(), sum });
            }
        }
    }
    if model.goal < n {
        let ok = match model.actions[model.goal].as_slice() {
            [a] => a.weight == 0 && a.dist.len() == 1 && a.dist[0].0 == model.goal,
            _ => false,
        };
        if !ok {
            out.push(Violation::GoalNotAbsorbing);
        }
    }
    ValidationReport { violations: out }
}

pub fn model_constants(model: &Mdp) -> ModelConstants {
    let delta = model
        .actions
        .iter()
        .flatten()
        .flat_map(|a| a.dist.iter().map(|(_, p)| p))
        .filter(|p| !p.is_zero())
        .min()
        .cloned()
        .unwrap_or_else(Rational::one);
    ModelConstants { w: model.max_abs_weight(), delta, state_count: model.num_states() }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rint};

    fn gold() -> Mdp {
        Mdp::builder()
            .initial("s_init")
            .goal("goal")
            .action("s_init", "sigma", 0, &[("s", rat(1, 2)), ("t", rat(1, 2))])
            .action("s_init", "tau", 0, &[("goal", rint(1))])
            .action("s", "alpha", -2, &[("s_init", rint(1))])
            .action("t", "alpha", 1, &[("s_init", rint(1))])
            .build()
    }

    #[test]
    fn gold_is_valid_with_expected_constants() {
        let m = gold();
        assert!(validate(&m).is_valid(), "{}", validate(&m));
        let c = model_constants(&m);
        assert_eq!(c.w, 2);
        assert_eq!(c.delta, rat(1, 2));
        assert_eq!(c.state_count, 4);
    }

    #[test]
    fn short_distribution_reported() {
        let m = Mdp::builder()
            .initial("s")
            .goal("g")
            .action("s", "a", 0, &[("g", rat(1, 2)), ("s", rat(1, 3))])
            .build();
        let report = validate(&m);
        assert_eq!(report.violations.len(), 1);
        assert_eq!(report.violations[0].to_string(), "s/a: distribution sums to 5/6 ≠ 1");
    }

    #[test]
    fn weighted_goal_loop_is_not_absorbing() {
        let m = Mdp::builder()
            .initial("s")
            .goal("g")
            .action("s", "a", 0, &[("g", rint(1))])
            .action("g", "loop", 1, &[("g", rint(1))])
            .build();
        assert_eq!(validate(&m).violations, vec![Violation::GoalNotAbsorbing]);
    }

    #[test]
    fn duplicate_labels_and_missing_actions() {
        let m = Mdp::builder()
            .initial("s")
            .goal("g")
            .action("s", "a", 0, &[("g", rint(1))])
            .action("s", "a", 0, &[("x", rint(1))])
            .build();
        let text = validate(&m).to_string();
        assert!(text.contains("duplicate action label a"));
        assert!(text.contains("state x has no enabled action"));
    }

    #[test]
    fn trivial_constants() {
        let m = Mdp::builder().initial("s").goal("g").action("s", "a", 0, &[("g", rint(1))]).build();
        let c = model_constants(&m);
        assert_eq!((c.w, c.delta), (0, rint(1)));
    }
}

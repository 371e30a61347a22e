use std::collections::BTreeMap;
use std::fmt::Write;

use mdp_model::{Mdp, Rational, Weight};

fn fmt_prob(p: &Rational) -> String {
    if p.is_integer() {
        p.numer().to_string()
    } else {
        format!("{}/{}", p.numer(), p.denom())
    }
}

/// Writes the model in `.mdpw` syntax: directives first, then every action in state order.
pub fn serialize_mdp(model: &Mdp) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "@initial {}", model.states[model.initial]);
    let _ = writeln!(out, "@goal {}", model.states[model.goal]);
    for (s, acts) in model.actions.iter().enumerate() {
        if acts.is_empty() {
            continue;
        }
        out.push('\n');
        for a in acts {
            let _ = writeln!(out, "action {} {} {}", model.states[s], a.label, a.weight);
            for (t, p) in &a.dist {
                let _ = writeln!(out, "-> {} {}", model.states[*t], fmt_prob(p));
            }
        }
    }
    out
}

type Shape = (String, String, BTreeMap<String, Vec<(String, Weight, BTreeMap<String, Rational>)>>);

fn shape(m: &Mdp) -> Shape {
    let mut states = BTreeMap::new();
    for (s, acts) in m.actions.iter().enumerate() {
        let acts = acts
            .iter()
            .map(|a| {
                let dist = a.dist.iter().map(|(t, p)| (m.states[*t].clone(), p.clone())).collect();
                (a.label.clone(), a.weight, dist)
            })
            .collect();
        states.insert(m.states[s].clone(), acts);
    }
    (m.states[m.initial].clone(), m.states[m.goal].clone(), states)
}

/// Equality up to the numbering of states: same names, directives, labels,
/// weights and distributions (action order per state included).
pub fn structurally_equal(a: &Mdp, b: &Mdp) -> bool {
    a.num_states() == b.num_states() && shape(a) == shape(b)
}

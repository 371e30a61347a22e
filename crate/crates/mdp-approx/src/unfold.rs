//! The model unfolded over a window of accumulated weights.
//!
//! Cells are pairs (state, weight) for the states that keep a choice; states
//! with a single action (outside any cycle of such states) are folded into
//! the macro transitions of their predecessors. Everything that leaves the
//! window, reaches goal or can no longer reach goal becomes a constant, kept
//! in binary fixed point with `scale` fractional bits.

use std::ops::Range;

use mdp_exact::ExtremeSchedulers;
use mdp_graph::scc::sccs;
use mdp_model::{Mdp, Rational, StateId};
use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive};

use crate::ApproxError;

pub(crate) const NO_CELL: u32 = u32::MAX;
const EXPANSION_CAP: usize = 4096;

struct Node {
    state: StateId,
    /// weight accumulated since the cell on arrival at `state`
    dw: i64,
    /// probability times the expansion's `den`
    num: i64,
    children: Range<u32>,
}

struct Expansion {
    den: i64,
    nodes: Vec<Node>,
    roots: Range<u32>,
}

/// Per-model data shared by all windows.
pub(crate) struct Skeleton {
    pub kept: Vec<StateId>,
    pub slot: Vec<u32>,
    pub terminal: Vec<bool>,
    expansions: Vec<Vec<Expansion>>,
    max_den: i64,
    max_dw: i64,
}

fn expand(model: &Mdp, elim: &[bool], s: StateId, a: usize) -> Option<Expansion> {
    let mut raw: Vec<(StateId, i64, Rational, Range<u32>)> = Vec::new();
    let act = &model.actions[s][a];
    for (t, p) in &act.dist {
        raw.push((*t, act.weight, p.clone(), 0..0));
    }
    let roots = 0..raw.len() as u32;
    let mut i = 0;
    while i < raw.len() {
        let (t, dw, p) = (raw[i].0, raw[i].1, raw[i].2.clone());
        if elim[t] {
            let start = raw.len() as u32;
            let only = &model.actions[t][0];
            for (t2, q) in &only.dist {
                raw.push((*t2, dw.checked_add(only.weight)?, &p * q, 0..0));
            }
            raw[i].3 = start..raw.len() as u32;
            if raw.len() > EXPANSION_CAP {
                return None;
            }
        }
        i += 1;
    }
    let mut den = BigInt::one();
    for (_, _, p, _) in &raw {
        den = num_integer::Integer::lcm(&den, p.denom());
    }
    let den_i = den.to_i64()?;
    let nodes = raw
        .into_iter()
        .map(|(state, dw, p, children)| {
            let num = (p * Rational::from_integer(den.clone())).to_integer().to_i64()?;
            Some(Node { state, dw, num, children })
        })
        .collect::<Option<Vec<_>>>()?;
    Some(Expansion { den: den_i, nodes, roots })
}

impl Skeleton {
    /// `terminal`: goal and the states that cannot reach it.
    pub fn new(model: &Mdp, terminal: Vec<bool>) -> Skeleton {
        let n = model.num_states();
        let candidate: Vec<bool> =
            (0..n).map(|s| !terminal[s] && s != model.initial && model.actions[s].len() == 1).collect();
        let edges = (0..n)
            .filter(|&s| candidate[s])
            .flat_map(|s| model.actions[s][0].targets().filter(|&t| candidate[t]).map(move |t| (s, t)));
        let mut elim = candidate.clone();
        for comp in sccs(n, edges) {
            let cyclic = comp.len() > 1 || model.actions[comp[0]][0].targets().any(|t| t == comp[0]);
            if cyclic {
                for s in comp {
                    elim[s] = false;
                }
            }
        }
        Self::with_elimination(model, &terminal, &elim).unwrap_or_else(|| {
            Self::with_elimination(model, &terminal, &vec![false; n]).expect("single steps always expand")
        })
    }

    fn with_elimination(model: &Mdp, terminal: &[bool], elim: &[bool]) -> Option<Skeleton> {
        let n = model.num_states();
        let kept: Vec<StateId> = (0..n).filter(|&s| !terminal[s] && !elim[s]).collect();
        let mut slot = vec![NO_CELL; n];
        for (i, &s) in kept.iter().enumerate() {
            slot[s] = i as u32;
        }
        let mut expansions: Vec<Vec<Expansion>> = (0..n).map(|_| Vec::new()).collect();
        let (mut max_den, mut max_dw) = (1, model.max_abs_weight());
        for &s in &kept {
            for a in 0..model.actions[s].len() {
                let e = expand(model, elim, s, a)?;
                max_den = max_den.max(e.den);
                max_dw = max_dw.max(e.nodes.iter().map(|x| x.dw.abs()).max().unwrap_or(0));
                expansions[s].push(e);
            }
        }
        Some(Skeleton { kept, slot, terminal: terminal.to_vec(), expansions, max_den, max_dw })
    }
}

/// Exact values of the memoryless schedulers played after leaving the window.
pub(crate) struct Boundary {
    pub above_reach: Vec<Rational>,
    pub above_pe: Vec<Rational>,
    pub below_reach: Vec<Rational>,
    pub below_pe: Vec<Rational>,
}

impl Boundary {
    pub fn extreme(ext: &ExtremeSchedulers) -> Boundary {
        Boundary {
            above_reach: ext.max.reach.clone(),
            above_pe: ext.max.pe.clone(),
            below_reach: ext.min.reach.clone(),
            below_pe: ext.min.pe.clone(),
        }
    }
}

/// Whether a cell may use an action, and whether optimization may pick it.
#[derive(Clone, Copy, PartialEq, Eq)]
pub(crate) enum Use {
    Skip,
    Keep { pickable: bool },
}

fn bits_of(x: f64) -> u32 {
    (x.max(1.0).log2().ceil() as u32) + 1
}

fn floor_scaled(r: &Rational, shift: u32) -> Result<i128, ApproxError> {
    let scaled = r * Rational::from_integer(BigInt::one() << shift);
    scaled.floor().to_integer().to_i128().ok_or(ApproxError::Overflow)
}

/// Fixed-point values of everything that ends a macro step.
struct Terminals {
    scale: u32,
    extra: u32,
    goal: StateId,
    terminal: Vec<bool>,
    bias_fixed: i128,
    /// p and PE + p·bias of Max and Min, with `scale + extra` fractional bits
    above: Vec<(i128, i128)>,
    below: Vec<(i128, i128)>,
    hi: i64,
}

impl Terminals {
    fn value(&self, t: StateId, w: i64) -> Option<i128> {
        let wi = w as i128;
        if t == self.goal {
            return (wi << self.scale).checked_add(self.bias_fixed);
        }
        if self.terminal[t] {
            return Some(0);
        }
        let (a, b) = if w > self.hi { self.above[t] } else { self.below[t] };
        let x = a.checked_mul(wi)?.checked_add(b)?;
        Some((x + (1i128 << (self.extra - 1))) >> self.extra)
    }
}

pub(crate) struct Unfolded {
    pub lo: i64,
    pub hi: i64,
    pub scale: u32,
    pub kept: Vec<StateId>,
    pub slot: Vec<u32>,
    pub rec_start: Vec<u32>,
    pub rec_action: Vec<u16>,
    pub rec_pick: Vec<bool>,
    pub rec_den: Vec<i64>,
    pub rec_const: Vec<i128>,
    pub ent_start: Vec<u32>,
    pub ent_col: Vec<u32>,
    pub ent_num: Vec<i64>,
    pub kl: usize,
    pub ku: usize,
}

impl Unfolded {
    pub fn cells(&self) -> usize {
        self.rec_start.len() - 1
    }

    pub fn cell(&self, s: StateId, w: i64) -> Option<usize> {
        let slot = *self.slot.get(s)?;
        if slot == NO_CELL || w < self.lo || w > self.hi {
            return None;
        }
        Some((w - self.lo) as usize * self.kept.len() + slot as usize)
    }

    /// (state, weight) of a cell.
    pub fn coords(&self, i: usize) -> (StateId, i64) {
        let k = self.kept.len();
        (self.kept[i % k], self.lo + (i / k) as i64)
    }

    pub fn records(&self, i: usize) -> Range<usize> {
        self.rec_start[i] as usize..self.rec_start[i + 1] as usize
    }

    pub fn entries(&self, r: usize) -> Range<usize> {
        self.ent_start[r] as usize..self.ent_start[r + 1] as usize
    }

    /// Builds the cells of `[lo, hi]` for bias `bias`.
    pub fn build(
        model: &Mdp,
        boundary: &Boundary,
        sk: &Skeleton,
        (lo, hi): (i64, i64),
        bias: &Rational,
        cell_limit: u64,
        usage: &dyn Fn(StateId, i64, usize) -> Use,
    ) -> Result<Unfolded, ApproxError> {
        let k = sk.kept.len();
        let width = (hi as i128 - lo as i128 + 1).max(0) as u128;
        let cells = width * k as u128;
        if cells > cell_limit as u128 {
            return Err(ApproxError::ResourceLimit { cells, limit: cell_limit });
        }
        let width = width as usize;

        let umax = lo.unsigned_abs().max(hi.unsigned_abs()) as f64 + sk.max_dw as f64 + bias.abs().ceil().to_integer().to_f64().unwrap_or(f64::INFINITY) + 1.0;
        let pemax = boundary.above_pe.iter().chain(&boundary.below_pe).map(|v| v.abs().ceil().to_integer().to_f64().unwrap_or(f64::INFINITY)).fold(0.0, f64::max) + 1.0;
        let vmax = umax + pemax;
        let extra = bits_of(umax) + 2;
        let by_value = 124i64 - bits_of(sk.max_den as f64) as i64 - bits_of(vmax) as i64 - 2;
        let by_product = 126i64 - 2 * extra as i64 - 2;
        let by_offset = 125i64 - bits_of(vmax) as i64 - extra as i64;
        let scale = by_value.min(by_product).min(by_offset).min(64);
        if scale < 20 {
            return Err(ApproxError::Overflow);
        }
        let scale = scale as u32;

        let fixed_pair = |p: &Rational, pe: &Rational| -> Result<(i128, i128), ApproxError> {
            Ok((floor_scaled(p, scale + extra)?, floor_scaled(&(pe + p * bias), scale + extra)?))
        };
        let n = model.num_states();
        let mut above = vec![(0, 0); n];
        let mut below = vec![(0, 0); n];
        for s in 0..n {
            above[s] = fixed_pair(&boundary.above_reach[s], &boundary.above_pe[s])?;
            below[s] = fixed_pair(&boundary.below_reach[s], &boundary.below_pe[s])?;
        }
        let terms = Terminals {
            scale,
            extra,
            goal: model.goal,
            terminal: sk.terminal.clone(),
            bias_fixed: floor_scaled(bias, scale)?,
            above,
            below,
            hi,
        };

        let mut u = Unfolded {
            lo,
            hi,
            scale,
            kept: sk.kept.clone(),
            slot: sk.slot.clone(),
            rec_start: Vec::with_capacity(width * k + 1),
            rec_action: Vec::new(),
            rec_pick: Vec::new(),
            rec_den: Vec::new(),
            rec_const: Vec::new(),
            ent_start: vec![0],
            ent_col: Vec::new(),
            ent_num: Vec::new(),
            kl: 0,
            ku: 0,
        };
        u.rec_start.push(0);
        let mut scratch: Vec<(u32, i64)> = Vec::new();
        for wi in 0..width {
            let w = lo + wi as i64;
            for (slot, &s) in sk.kept.iter().enumerate() {
                let row = wi * k + slot;
                for (a, exp) in sk.expansions[s].iter().enumerate() {
                    let Use::Keep { pickable } = usage(s, w, a) else { continue };
                    scratch.clear();
                    let mut cst: i128 = 0;
                    u.walk(exp, exp.roots.clone(), w, &terms, &mut scratch, &mut cst)?;
                    scratch.sort_unstable();
                    let start = u.ent_col.len();
                    for &(col, num) in &scratch {
                        if u.ent_col.len() > start && *u.ent_col.last().unwrap() == col {
                            *u.ent_num.last_mut().unwrap() += num;
                        } else {
                            u.ent_col.push(col);
                            u.ent_num.push(num);
                            let col = col as usize;
                            if col < row {
                                u.kl = u.kl.max(row - col);
                            } else {
                                u.ku = u.ku.max(col - row);
                            }
                        }
                    }
                    u.ent_start.push(u.ent_col.len() as u32);
                    u.rec_action.push(a as u16);
                    u.rec_pick.push(pickable);
                    u.rec_den.push(exp.den);
                    u.rec_const.push(cst);
                }
                u.rec_start.push(u.rec_action.len() as u32);
            }
        }
        Ok(u)
    }

    fn walk(
        &self,
        exp: &Expansion,
        range: Range<u32>,
        w: i64,
        terms: &Terminals,
        out: &mut Vec<(u32, i64)>,
        cst: &mut i128,
    ) -> Result<(), ApproxError> {
        for node in &exp.nodes[range.start as usize..range.end as usize] {
            let w2 = w.checked_add(node.dw).ok_or(ApproxError::Overflow)?;
            let t = node.state;
            let inside = w2 >= self.lo && w2 <= self.hi;
            if terms.terminal[t] || !inside {
                let v = terms.value(t, w2).ok_or(ApproxError::Overflow)?;
                *cst = v.checked_mul(node.num as i128).and_then(|x| x.checked_add(*cst)).ok_or(ApproxError::Overflow)?;
            } else if self.slot[t] != NO_CELL {
                let col = (w2 - self.lo) as usize * self.kept.len() + self.slot[t] as usize;
                out.push((col as u32, node.num));
            } else {
                self.walk(exp, node.children.clone(), w, terms, out, cst)?;
            }
        }
        Ok(())
    }
}

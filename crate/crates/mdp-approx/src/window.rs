use std::collections::BTreeMap;

use mdp_format::SchedulerDoc;
use mdp_model::{Mdp, StateId};

/// Where a run of a window scheduler currently is.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Phase {
    Window,
    /// left the window upwards; plays `above` from now on
    Above,
    /// left the window downwards; plays `below` from now on
    Below,
}

/// Weight-based deterministic scheduler on a window of path weights.
///
/// Follows `table` while every prefix weight lies in `[lo, hi]`; the first
/// prefix outside switches for good to the memoryless `above` or `below`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct WindowScheduler {
    pub lo: i64,
    pub hi: i64,
    /// `table[s][w - lo]`, empty for absorbing states
    pub table: Vec<Vec<u32>>,
    pub above: Vec<usize>,
    pub below: Vec<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum SchedulerError {
    #[error("unknown state {0}")]
    UnknownState(String),
    #[error("state {state} has no action {action}")]
    UnknownAction { state: String, action: String },
    #[error("malformed table key {0}")]
    BadKey(String),
    #[error("weight {weight} of {state} lies outside the window")]
    OutsideWindow { state: String, weight: i64 },
    #[error("no choice for {state} at weight {weight}")]
    Missing { state: String, weight: i64 },
    #[error("empty window [{0}, {1}]")]
    EmptyWindow(i64, i64),
}

impl WindowScheduler {
    /// Plays the memoryless `choice` everywhere.
    pub fn memoryless(model: &Mdp, lo: i64, hi: i64, choice: &[usize]) -> WindowScheduler {
        let width = (hi - lo + 1).max(0) as usize;
        let table = (0..model.num_states())
            .map(|s| if model.is_absorbing(s) { Vec::new() } else { vec![choice[s] as u32; width] })
            .collect();
        WindowScheduler { lo, hi, table, above: choice.to_vec(), below: choice.to_vec() }
    }

    pub fn width(&self) -> usize {
        (self.hi - self.lo + 1).max(0) as usize
    }

    /// Phase after a prefix of weight `w`.
    pub fn next_phase(&self, phase: Phase, w: i64) -> Phase {
        match phase {
            Phase::Window if w > self.hi => Phase::Above,
            Phase::Window if w < self.lo => Phase::Below,
            p => p,
        }
    }

    /// Action in state `s` with path weight `w` in phase `phase`.
    pub fn act(&self, phase: Phase, s: StateId, w: i64) -> usize {
        match phase {
            Phase::Above => self.above[s],
            Phase::Below => self.below[s],
            Phase::Window => self.table[s].get((w - self.lo) as usize).map_or(0, |&a| a as usize),
        }
    }

    pub fn to_doc(&self, model: &Mdp) -> SchedulerDoc {
        let label = |s: StateId, a: usize| model.actions[s][a].label.clone();
        let mut table = BTreeMap::new();
        for (s, row) in self.table.iter().enumerate() {
            for (i, &a) in row.iter().enumerate() {
                table.insert(SchedulerDoc::key(&model.states[s], self.lo + i as i64), label(s, a as usize));
            }
        }
        let boundary = |choice: &[usize]| {
            (0..model.num_states())
                .filter(|&s| !model.is_absorbing(s))
                .map(|s| (model.states[s].clone(), label(s, choice[s])))
                .collect()
        };
        SchedulerDoc { window: [self.lo, self.hi], table, above: boundary(&self.above), below: boundary(&self.below) }
    }

    /// Reads a scheduler for `model`; the table must cover every
    /// non-absorbing state at every weight of the window.
    pub fn from_doc(model: &Mdp, doc: &SchedulerDoc) -> Result<WindowScheduler, SchedulerError> {
        let [lo, hi] = doc.window;
        if lo > hi {
            return Err(SchedulerError::EmptyWindow(lo, hi));
        }
        let width = (hi - lo + 1) as usize;
        let n = model.num_states();
        let state = |name: &str| model.state_index(name).ok_or_else(|| SchedulerError::UnknownState(name.to_string()));
        let action = |s: StateId, label: &str| {
            model.action_index(s, label).ok_or_else(|| SchedulerError::UnknownAction {
                state: model.states[s].clone(),
                action: label.to_string(),
            })
        };
        let mut table: Vec<Vec<Option<u32>>> =
            (0..n).map(|s| if model.is_absorbing(s) { Vec::new() } else { vec![None; width] }).collect();
        for (key, label) in &doc.table {
            let (name, w) = key.rsplit_once('@').ok_or_else(|| SchedulerError::BadKey(key.clone()))?;
            let w: i64 = w.parse().map_err(|_| SchedulerError::BadKey(key.clone()))?;
            let s = state(name)?;
            if model.is_absorbing(s) {
                continue;
            }
            if w < lo || w > hi {
                return Err(SchedulerError::OutsideWindow { state: name.to_string(), weight: w });
            }
            table[s][(w - lo) as usize] = Some(action(s, label)? as u32);
        }
        let table = table
            .into_iter()
            .enumerate()
            .map(|(s, row)| {
                row.into_iter()
                    .enumerate()
                    .map(|(i, a)| {
                        a.ok_or_else(|| SchedulerError::Missing { state: model.states[s].clone(), weight: lo + i as i64 })
                    })
                    .collect::<Result<Vec<_>, _>>()
            })
            .collect::<Result<Vec<_>, _>>()?;
        let boundary = |map: &BTreeMap<String, String>| -> Result<Vec<usize>, SchedulerError> {
            let mut choice = vec![0; n];
            for (name, label) in map {
                let s = state(name)?;
                choice[s] = action(s, label)?;
            }
            Ok(choice)
        };
        Ok(WindowScheduler { lo, hi, table, above: boundary(&doc.above)?, below: boundary(&doc.below)? })
    }
}

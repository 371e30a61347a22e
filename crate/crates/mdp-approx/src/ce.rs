use mdp_model::{rint, Mdp, Rational};
use mdp_preprocess::{classify_finiteness, posmin_transform, prepare};
use num_traits::Signed;

use crate::pe::{Engine, Memory};
use crate::window::WindowScheduler;
use crate::{ApproxError, ApproxOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Decision {
    /// E < -2pε: the optimum lies below θ
    Lower,
    /// E > 2pε: the optimum lies above θ
    Raise,
    /// |E| <= 2pε
    Stop,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SearchStep {
    pub a: Rational,
    pub b: Rational,
    pub theta: Rational,
    /// midpoint of the certified interval for PE[-θ]
    pub e: Rational,
    pub lower: Rational,
    pub upper: Rational,
    pub decision: Decision,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BinarySearchTrace {
    /// minimal goal probability from the initial state
    pub p: Rational,
    pub a0: Rational,
    pub b0: Rational,
    pub epsilon: Rational,
    /// ⌈log2((B0 - A0) / (pε))⌉
    pub iteration_bound: u64,
    pub steps: Vec<SearchStep>,
}

#[derive(Clone, Debug)]
pub struct CeResult {
    /// within 3ε of the maximal conditional expectation
    pub value: Rational,
    pub trace: BinarySearchTrace,
    /// the transformed model the probes ran on
    pub model: Mdp,
    /// scheduler of the last probe, if any
    pub scheduler: Option<WindowScheduler>,
}

/// Least k with `span <= 2^k · unit`.
fn log2_ceil(span: &Rational, unit: &Rational) -> u64 {
    let mut k = 0;
    let mut reach = unit.clone();
    while &reach < span {
        reach = reach * rint(2);
        k += 1;
    }
    k
}

/// [`approx_ce_with`] with default options.
pub fn approx_ce(model: &Mdp, epsilon: &Rational) -> Result<CeResult, ApproxError> {
    approx_ce_with(model, epsilon, &ApproxOptions::default())
}

/// Binary search for the maximal conditional expectation: θ is compared
/// with the optimum through the sign of PE[-θ], each probe certified to
/// width pε.
pub fn approx_ce_with(model: &Mdp, epsilon: &Rational, opts: &ApproxOptions) -> Result<CeResult, ApproxError> {
    if !epsilon.is_positive() {
        return Err(ApproxError::NonPositiveEpsilon);
    }
    let verdict = classify_finiteness(model);
    if !verdict.ce_finite {
        return Err(ApproxError::InfiniteCe(verdict.reason));
    }
    let prepared = prepare(model)?.model;
    let (transformed, _) = posmin_transform(&prepared)?;
    let probe_ext = mdp_exact::extreme_schedulers(&transformed);
    let s0 = transformed.initial;
    let p = probe_ext.profile.p_min[s0].clone();
    if !p.is_positive() {
        return Err(ApproxError::Precision("minimal goal probability is 0 after the transformation".into()));
    }
    let width = &p * epsilon;
    let half = &width / rint(2);
    let engine = Engine::new(transformed, &half, opts)?;
    let a0 = &engine.ext.max.pe[s0] / &engine.ext.max.reach[s0];
    let b0 = engine.bounds.ce_ub.clone().expect("p^min is positive");
    let iteration_bound = log2_ceil(&(&b0 - &a0), &width);

    let two = rint(2);
    let mut trace = BinarySearchTrace { p, a0: a0.clone(), b0: b0.clone(), epsilon: epsilon.clone(), iteration_bound, steps: Vec::new() };
    let (mut a, mut b) = (a0, b0);
    let mut scheduler: Option<WindowScheduler> = None;
    let mut memory: Option<Memory> = None;
    let value = loop {
        if &b - &a <= width {
            break (&a + &b) / &two;
        }
        let theta = (&a + &b) / &two;
        let bias = -theta.clone();
        let probe = engine.probe(&bias, &half, memory.as_ref())?;
        let lower = probe.lower;
        let upper = (&probe.upper + &probe.trace.truncation).min(engine.ceiling(&bias));
        if &upper - &lower > width {
            return Err(ApproxError::Precision(format!("probe at θ = {} is wider than pε", mdp_model::to_f64(&theta))));
        }
        let e = (&lower + &upper) / &two;
        let limit = &two * &width;
        let decision = if e < -limit.clone() {
            Decision::Lower
        } else if e > limit {
            Decision::Raise
        } else {
            Decision::Stop
        };
        trace.steps.push(SearchStep {
            a: a.clone(),
            b: b.clone(),
            theta: theta.clone(),
            e,
            lower,
            upper,
            decision,
        });
        scheduler = Some(probe.scheduler);
        if probe.memory.is_some() {
            memory = probe.memory;
        }
        match decision {
            Decision::Lower => b = theta,
            Decision::Raise => a = theta,
            Decision::Stop => break theta,
        }
    };
    Ok(CeResult { value, trace, model: engine.model, scheduler })
}


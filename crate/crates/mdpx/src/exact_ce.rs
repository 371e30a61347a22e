use mdp_approx::{evaluate_window_scheduler, WindowScheduler};
use mdp_exact::{extreme_schedulers, nonneg_solve_exact, ExactError, ExactPeTable, ExtremeSchedulers};
use mdp_model::{Mdp, Rational};
use mdp_preprocess::{posmin_transform, prepare, PreprocessError};
use num_traits::{Signed, Zero};

/// Maximal conditional expectation of a model without negative weights.
#[derive(Clone, Debug)]
pub struct ExactCe {
    pub value: Rational,
    /// tables solved before the optimum was confirmed
    pub iterations: u32,
    /// an optimal scheduler, in terms of `model`
    pub scheduler: WindowScheduler,
    /// the prepared model with positive minimal goal probability
    pub model: Mdp,
}

#[derive(Debug, thiserror::Error)]
pub enum ExactCeError {
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Exact(#[from] ExactError),
    #[error("the exact table needs {cells} cells, the limit is {limit}")]
    TooLarge { cells: u128, limit: u64 },
    /// exact arithmetic rules this out; reported rather than looping
    #[error("the conditional expectation iteration stalled")]
    Stalled,
}

/// Weight-based table of `table`, Max above its top.
pub fn table_scheduler(model: &Mdp, table: &ExactPeTable, ext: &ExtremeSchedulers) -> WindowScheduler {
    let mut sched = WindowScheduler::memoryless(model, 0, table.window_top, &ext.max.choice);
    for (s, row) in sched.table.iter_mut().enumerate() {
        for (r, a) in row.iter_mut().enumerate() {
            *a = table.scheduler[s][r] as u32;
        }
    }
    sched
}

/// Cells of the table [`nonneg_solve_exact`] would build for `bias`.
pub fn table_cells(model: &Mdp, bias: &Rational) -> Result<u128, ExactError> {
    let sat = mdp_exact::nonneg_saturation_point(model, bias)?;
    let top = mdp_model::ceil_to_i64(&sat).ok_or(ExactError::Overflow)?.max(0);
    Ok((top as u128 + 1) * model.num_states() as u128)
}

/// Dinkelbach iteration: start from the conditional expectation θ of the
/// Max scheduler, solve PE[-θ] exactly and move θ to the conditional
/// expectation of the optimal table until PE[-θ] = 0. Every step strictly
/// increases θ and there are finitely many tables that can be optimal, so
/// the loop ends in the exact optimum.
pub fn exact_ce(model: &Mdp, cell_limit: u64) -> Result<ExactCe, ExactCeError> {
    let prepared = prepare(model)?.model;
    let (t, _) = posmin_transform(&prepared)?;
    let ext = extreme_schedulers(&t);
    let s0 = t.initial;
    let mut theta = &ext.max.pe[s0] / &ext.max.reach[s0];
    let mut iterations = 0;
    loop {
        let bias = -theta.clone();
        let cells = table_cells(&t, &bias)?;
        if cells > cell_limit as u128 {
            return Err(ExactCeError::TooLarge { cells, limit: cell_limit });
        }
        let table = nonneg_solve_exact(&t, &bias)?;
        iterations += 1;
        let scheduler = table_scheduler(&t, &table, &ext);
        if table.value(s0, 0).is_zero() {
            return Ok(ExactCe { value: theta, iterations, scheduler, model: t });
        }
        let v = evaluate_window_scheduler(&t, &scheduler, &Rational::zero());
        let next = v.ce.ok_or(ExactCeError::Stalled)?;
        if !(&next - &theta).is_positive() {
            return Err(ExactCeError::Stalled);
        }
        theta = next;
    }
}

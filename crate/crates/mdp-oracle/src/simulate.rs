use mdp_approx::{Phase, WindowScheduler};
use mdp_model::{to_f64, Mdp, Rational};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Monte-Carlo estimate of a partial expectation.
#[derive(Clone, Debug, PartialEq)]
pub struct SimulationEstimate {
    pub mean: f64,
    /// sample standard deviation over √samples
    pub stderr: f64,
    pub samples: u64,
    pub horizon: u64,
    pub seed: u64,
    /// fraction of runs that reached goal within the horizon
    pub reached: f64,
    /// fraction of runs whose prefix weight ever got to (k+1)·unit, k = 1, 2, 3
    pub tail: Option<[f64; 3]>,
}

/// Cumulative distributions of all actions as floats.
fn cumulative(model: &Mdp) -> Vec<Vec<Vec<(usize, f64)>>> {
    model
        .actions
        .iter()
        .map(|acts| {
            acts.iter()
                .map(|a| {
                    let mut acc = 0.0;
                    a.dist.iter().map(|(t, p)| {
                        acc += to_f64(p);
                        (*t, acc)
                    }).collect()
                })
                .collect()
        })
        .collect()
}

/// [`simulate_tails`] without tail frequencies.
pub fn simulate(model: &Mdp, scheduler: &WindowScheduler, samples: u64, horizon: u64, seed: u64) -> SimulationEstimate {
    run(model, scheduler, samples, horizon, seed, None)
}

/// Runs `samples` paths of at most `horizon` steps from the initial state
/// under `scheduler`. A run scores its accumulated weight if it reached goal
/// and 0 otherwise. Randomness is ChaCha8 seeded with `seed` through
/// `seed_from_u64`, one uniform float in [0, 1) per step, successors picked
/// by inverting the cumulative distribution in declaration order.
pub fn simulate_tails(
    model: &Mdp,
    scheduler: &WindowScheduler,
    samples: u64,
    horizon: u64,
    seed: u64,
    unit: &Rational,
) -> SimulationEstimate {
    run(model, scheduler, samples, horizon, seed, Some(to_f64(unit)))
}

fn run(model: &Mdp, scheduler: &WindowScheduler, samples: u64, horizon: u64, seed: u64, unit: Option<f64>) -> SimulationEstimate {
    let cdf = cumulative(model);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq, mut reached) = (0.0f64, 0.0f64, 0u64);
    let mut tail_hits = [0u64; 3];
    for _ in 0..samples {
        let mut s = model.initial;
        let mut w: i64 = 0;
        let mut top: i64 = 0;
        let mut phase = scheduler.next_phase(Phase::Window, 0);
        for _ in 0..horizon {
            if model.is_absorbing(s) {
                break;
            }
            let a = scheduler.act(phase, s, w);
            w += model.actions[s][a].weight;
            top = top.max(w);
            let u: f64 = rng.random();
            let dist = &cdf[s][a];
            s = dist.iter().find(|(_, c)| u < *c).unwrap_or(&dist[dist.len() - 1]).0;
            phase = scheduler.next_phase(phase, w);
        }
        if s == model.goal {
            let score = w as f64;
            sum += score;
            sum_sq += score * score;
            reached += 1;
        }
        if let Some(unit) = unit {
            for (k, hit) in tail_hits.iter_mut().enumerate() {
                if top as f64 >= (k as f64 + 2.0) * unit {
                    *hit += 1;
                }
            }
        }
    }
    let n = samples.max(1) as f64;
    let mean = sum / n;
    let var = if samples > 1 { ((sum_sq - n * mean * mean) / (n - 1.0)).max(0.0) } else { 0.0 };
    SimulationEstimate {
        mean,
        stderr: (var / n).sqrt(),
        samples,
        horizon,
        seed,
        reached: reached as f64 / n,
        tail: unit.map(|_| tail_hits.map(|h| h as f64 / n)),
    }
}

//! Per-user error probability with a Wilson score interval.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::sim::trial::TrialOutcome;

/// Two-sided 95% normal quantile.
pub const Z95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `k` successes out of `n`.
pub fn wilson(k: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let n = n as f64;
    let p = k as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let centre = (p + z2 / (2.0 * n)) / denom;
    let half = z * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt() / denom;
    let lo = if k == 0 { 0.0 } else { (centre - half).max(0.0) };
    let hi = if k as f64 == n { 1.0 } else { (centre + half).min(1.0) };
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PupeEstimate {
    pub pe: f64,
    pub ci_lo: f64,
    pub ci_hi: f64,
    pub trials: usize,
    pub users: u64,
    pub misses: u64,
    pub collisions: u64,
    pub missed_detections: u64,
    pub false_alarms: u64,
    pub mean_iterations: f64,
    /// True when the run stopped early because the target was out of reach.
    pub aborted: bool,
}

impl PupeEstimate {
    pub fn from_outcomes(outcomes: &[TrialOutcome], aborted: bool) -> Self {
        let users: u64 = outcomes.iter().map(|o| o.transmitted.len() as u64).sum();
        let sum = |f: fn(&TrialOutcome) -> usize| outcomes.iter().map(|o| f(o) as u64).sum::<u64>();
        let misses = sum(|o| o.misses);
        let (ci_lo, ci_hi) = wilson(misses, users, Z95);
        let iters = sum(|o| o.iterations);
        Self {
            pe: if users == 0 { 0.0 } else { misses as f64 / users as f64 },
            ci_lo,
            ci_hi: if users == 0 { 0.0 } else { ci_hi },
            trials: outcomes.len(),
            users,
            misses,
            collisions: sum(|o| o.collisions),
            missed_detections: sum(|o| o.missed_detections),
            false_alarms: sum(|o| o.false_alarms),
            mean_iterations: if outcomes.is_empty() {
                0.0
            } else {
                iters as f64 / outcomes.len() as f64
            },
            aborted,
        }
    }

    pub fn meets(&self, epsilon: f64) -> bool {
        !self.aborted && self.ci_hi <= epsilon
    }
}

/// Runs `trials` trials through `run` in batches and pools them.
///
/// With `abort_above = Some(eps)` the run stops once the misses seen so far
/// exceed `eps` times the users of the full run: the final point estimate, and
/// with it the upper confidence bound, is then certain to exceed `eps`.
pub fn estimate_pupe<F>(trials: usize, k_a: usize, abort_above: Option<f64>, run: F) -> Result<PupeEstimate>
where
    F: Fn(u64) -> Result<TrialOutcome> + Sync,
{
    if trials == 0 {
        return Err(invalid("at least one trial is needed"));
    }
    let batch = rayon::current_num_threads().max(1) * 2;
    let budget = abort_above.map(|eps| eps * (k_a * trials) as f64);
    let mut outcomes: Vec<TrialOutcome> = Vec::with_capacity(trials);
    let mut misses = 0usize;
    let mut start = 0usize;
    while start < trials {
        let end = (start + batch).min(trials);
        let chunk: Vec<TrialOutcome> = (start..end)
            .into_par_iter()
            .map(|i| run(i as u64))
            .collect::<Result<_>>()?;
        misses += chunk.iter().map(|o| o.misses).sum::<usize>();
        outcomes.extend(chunk);
        start = end;
        if budget.is_some_and(|b| misses as f64 > b) && start < trials {
            return Ok(PupeEstimate::from_outcomes(&outcomes, true));
        }
    }
    Ok(PupeEstimate::from_outcomes(&outcomes, false))
}

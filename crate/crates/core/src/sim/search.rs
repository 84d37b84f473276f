//! Minimum Eb/N0 meeting the PUPE target.

use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::sim::config::{GridSpec, SimConfig};
use crate::sim::pupe::{estimate_pupe, PupeEstimate};
use crate::sim::trial::{run_trial, Scheme};
use crate::tx::layout::FrameLayout;

/// Anything that can estimate PUPE at an operating point.
pub trait PointEvaluator: Sync {
    fn evaluate(&self, ebn0_db: f64, split_ratio: f64) -> Result<PupeEstimate>;
}

impl<F> PointEvaluator for F
where
    F: Fn(f64, f64) -> Result<PupeEstimate> + Sync,
{
    fn evaluate(&self, ebn0_db: f64, split_ratio: f64) -> Result<PupeEstimate> {
        self(ebn0_db, split_ratio)
    }
}

/// Full Monte Carlo evaluation of a configured scheme.
pub struct MonteCarlo<'a> {
    pub config: &'a SimConfig,
    pub scheme: &'a Scheme,
}

impl PointEvaluator for MonteCarlo<'_> {
    fn evaluate(&self, ebn0_db: f64, split_ratio: f64) -> Result<PupeEstimate> {
        let cfg = self.config;
        let enc = self.scheme.encoder_at(ebn0_db, split_ratio)?;
        let abort = cfg.early_abort.then(|| cfg.epsilon());
        estimate_pupe(cfg.trials, cfg.k_a, abort, |i| {
            run_trial(&enc, cfg.k_a, cfg.k_b(), &cfg.decoder, cfg.seed, i)
        })
    }
}

/// One evaluated grid point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointResult {
    pub ebn0_db: f64,
    pub split_ratio: f64,
    pub p1: f64,
    pub p2: f64,
    pub estimate: PupeEstimate,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutcome {
    pub feasible: bool,
    /// Smallest feasible Eb/N0, or `+inf`.
    pub min_ebn0_db: f64,
    /// Point achieving it, or the lowest-Pe point when infeasible.
    pub best: Option<PointResult>,
    /// Every evaluation in the order run.
    pub points: Vec<PointResult>,
}

/// `P1 / P2` ratios searched: the configured ones, or every ratio of a
/// 0.5 dB grid in `(P1, P2)` between 1/4 and 16 when `full_2d` is set.
pub fn split_ratios(grid: &GridSpec) -> Vec<f64> {
    if grid.full_2d {
        (-12..=24).map(|k| 10f64.powf(f64::from(k) * 0.05)).collect()
    } else {
        grid.splits.clone()
    }
}

/// Coarse-to-fine search assuming Pe decreases with Eb/N0.
///
/// For each split the coarse grid is scanned upwards to the first feasible
/// point (stopping at the best found so far), then the fine grid between the
/// last infeasible coarse point and that point. Ties keep the earlier split.
pub fn find_min_ebn0(
    eval: &dyn PointEvaluator,
    grid: &GridSpec,
    epsilon: f64,
    layout: &FrameLayout,
) -> Result<SweepOutcome> {
    grid.validate()?;
    let mut points: Vec<PointResult> = Vec::new();
    let mut best_db = f64::INFINITY;
    let mut best_idx: Option<usize> = None;

    let run = |db: f64, split: f64, points: &mut Vec<PointResult>| -> Result<(bool, usize)> {
        let start = Instant::now();
        let estimate = eval.evaluate(db, split)?;
        let (p1, p2) = layout.powers_for_ebn0(db, split)?;
        points.push(PointResult {
            ebn0_db: db,
            split_ratio: split,
            p1,
            p2,
            estimate,
            wall_time_s: start.elapsed().as_secs_f64(),
        });
        Ok((estimate.meets(epsilon), points.len() - 1))
    };

    let coarse = grid.coarse_points();
    for split in split_ratios(grid) {
        let mut last_fail: Option<f64> = None;
        let mut found: Option<(f64, usize)> = None;
        for &db in coarse.iter().filter(|&&d| d < best_db - 1e-9) {
            let (ok, idx) = run(db, split, &mut points)?;
            if ok {
                found = Some((db, idx));
                break;
            }
            last_fail = Some(db);
        }
        let upper = found.map_or(best_db, |f| f.0);
        if let Some(lf) = last_fail.filter(|_| upper.is_finite()) {
            let mut q = lf + grid.fine_db;
            while q < upper - 1e-9 {
                let (ok, idx) = run(q, split, &mut points)?;
                if ok {
                    found = Some((q, idx));
                    break;
                }
                q += grid.fine_db;
            }
        }
        if let Some((db, idx)) = found {
            if db < best_db - 1e-9 {
                best_db = db;
                best_idx = Some(idx);
            }
        }
    }

    let best = match best_idx {
        Some(i) => Some(points[i]),
        None => points
            .iter()
            .min_by(|a, b| a.estimate.pe.total_cmp(&b.estimate.pe))
            .copied(),
    };
    Ok(SweepOutcome {
        feasible: best_idx.is_some(),
        min_ebn0_db: best_db,
        best,
        points,
    })
}

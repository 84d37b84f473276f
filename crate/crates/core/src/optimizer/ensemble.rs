//! Joint search over a protograph base matrix and the repetition distribution
//! with the density-evolution threshold as cost.

use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::de::{de_threshold, LoadModel, MacDegreeProfile, NoiseMap, ThresholdConfig};
use crate::error::{invalid, Error, Result};
use crate::ldpc::Protograph;
use crate::optimizer::evolution::{Checkpoint, Evolution, EvolutionParams, GeneLayout, Segment, IDLE_LIMIT};
use crate::tx::layout::FrameLayout;
use crate::tx::repetition::RepetitionDD;

/// Channel model the thresholds are computed for.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EnsembleTarget {
    /// `k_users` Poisson-loaded users in `layout` with `P1 = split_ratio P2`.
    System {
        layout: FrameLayout,
        k_users: usize,
        split_ratio: f64,
    },
    /// One user on a BPSK-AWGN channel.
    SingleUser,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleSearch {
    pub rows: usize,
    pub cols: usize,
    /// Lifting factor; sets `N = z * cols`.
    pub z: usize,
    pub max_edge: i64,
    /// Repetition factors searched; a single entry fixes nu.
    pub nu_support: Vec<usize>,
    /// Overrides the search over nu with a given distribution.
    pub fixed_nu: Option<Vec<f64>>,
    /// Candidates with a lighter variable proto cost `+inf`.
    pub min_var_degree: usize,
    pub target: EnsembleTarget,
    /// DE iterations per threshold evaluation.
    pub de_iters: usize,
    pub resolution_db: f64,
    /// Top of the threshold bracket.
    pub hi_db: f64,
    /// Probability that an initial matrix entry is nonzero; uniform
    /// sampling over `[0, max_edge]` when `None`.
    pub init_density: Option<f64>,
    /// Population size, ten times the gene count when `None`.
    pub pop_size: Option<usize>,
}

impl EnsembleSearch {
    pub fn new(rows: usize, cols: usize, z: usize, target: EnsembleTarget) -> Self {
        Self {
            rows,
            cols,
            z,
            max_edge: 3,
            nu_support: vec![1, 2],
            fixed_nu: None,
            min_var_degree: 2,
            target,
            de_iters: 500,
            resolution_db: 0.05,
            hi_db: 20.0,
            init_density: None,
            pop_size: None,
        }
    }

    /// Picks the shape from a target rate `(cols - rows) / cols`.
    pub fn for_rate(rate: f64, cols: usize, z: usize, target: EnsembleTarget) -> Result<Self> {
        let rows = ((1.0 - rate) * cols as f64).round() as usize;
        if rows == 0 || rows >= cols || ((cols - rows) as f64 / cols as f64 - rate).abs() > 1e-9 {
            return Err(invalid(format!("rate {rate} not realisable with {cols} columns")));
        }
        Ok(Self::new(rows, cols, z, target))
    }

    fn searches_nu(&self) -> bool {
        self.fixed_nu.is_none() && self.nu_support.len() > 1
    }

    pub fn layout(&self) -> GeneLayout {
        let mut segs = vec![Segment::Integer {
            len: self.rows * self.cols,
            lo: 0,
            hi: self.max_edge,
        }];
        if self.searches_nu() {
            segs.push(Segment::Simplex {
                len: self.nu_support.len(),
            });
        }
        GeneLayout::new(segs)
    }

    /// Splits a genome into base matrix and repetition distribution.
    pub fn decode(&self, genes: &[f64]) -> Result<(Protograph, RepetitionDD)> {
        let cells = self.rows * self.cols;
        let matrix: Vec<Vec<i64>> = genes[..cells]
            .chunks(self.cols)
            .map(|r| r.iter().map(|&g| g.round() as i64).collect())
            .collect();
        let proto = Protograph::new(&matrix)?;
        if let Some(nu) = &self.fixed_nu {
            return Ok((proto, RepetitionDD::new(nu.clone())?));
        }
        let max_l = self.nu_support.iter().copied().max().unwrap_or(1);
        let mut nu = vec![0.0; max_l];
        if self.searches_nu() {
            for (&l, &w) in self.nu_support.iter().zip(&genes[cells..]) {
                nu[l - 1] += w;
            }
        } else {
            nu[max_l - 1] = 1.0;
        }
        Ok((proto, RepetitionDD::new(nu)?))
    }

    /// Encodes a known candidate as a genome.
    pub fn encode(&self, matrix: &[Vec<i64>], nu: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = matrix.iter().flatten().map(|&v| v as f64).collect();
        if self.searches_nu() {
            g.extend(self.nu_support.iter().map(|&l| nu.get(l - 1).copied().unwrap_or(0.0)));
        }
        g
    }

    /// Genome whose matrix entries are nonzero with probability `density`,
    /// drawn uniformly from `1..=max_edge` when so.
    fn sample_sparse(&self, density: f64, layout: &GeneLayout, rng: &mut impl Rng) -> Vec<f64> {
        let mut g = layout.sample(rng);
        for v in g.iter_mut().take(self.rows * self.cols) {
            *v = if rng.random::<f64>() < density {
                rng.random_range(1..=self.max_edge) as f64
            } else {
                0.0
            };
        }
        g
    }

    pub fn threshold_config(&self, dd: &RepetitionDD) -> Result<ThresholdConfig> {
        let n = self.z * self.cols;
        let mut cfg = match self.target {
            EnsembleTarget::System {
                layout,
                k_users,
                split_ratio,
            } => ThresholdConfig::system(layout, split_ratio, k_users, n, dd, LoadModel::Poisson)?,
            EnsembleTarget::SingleUser => ThresholdConfig::new(
                NoiseMap::SingleUser {
                    rate: (self.cols - self.rows) as f64 / self.cols as f64,
                },
                MacDegreeProfile::single_user(),
            ),
        };
        cfg.max_iters = self.de_iters;
        cfg.resolution_db = self.resolution_db;
        cfg.hi_db = self.hi_db;
        Ok(cfg)
    }

    /// Threshold in dB; invalid candidates cost `+inf`.
    ///
    /// A valid candidate that does not converge even at the top of the
    /// bracket costs `hi_db + 1 + 10 (1 - min I_APP)` so that the search can
    /// still rank it. Such costs exceed `hi_db` and never count as thresholds.
    pub fn cost(&self, genes: &[f64]) -> f64 {
        let Ok((proto, dd)) = self.decode(genes) else {
            return f64::INFINITY;
        };
        if (0..proto.num_vars()).any(|v| proto.var_degree(v) < self.min_var_degree) {
            return f64::INFINITY;
        }
        if let EnsembleTarget::System { layout, .. } = self.target {
            if dd.check_fits(self.z * self.cols, layout.n_c()).is_err() {
                return f64::INFINITY;
            }
        }
        let Ok(cfg) = self.threshold_config(&dd) else {
            return f64::INFINITY;
        };
        match de_threshold(&proto, &dd, &cfg) {
            Ok(t) if t.ebn0_db.is_finite() => t.ebn0_db,
            Ok(t) => cfg.hi_db + 1.0 + 10.0 * t.residual_at_hi,
            Err(_) => f64::INFINITY,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Candidate {
    pub base_matrix: Vec<Vec<i64>>,
    pub nu: Vec<f64>,
    pub threshold_db: f64,
}

#[derive(Debug, Clone)]
pub struct EnsembleResult {
    pub best: Candidate,
    pub evaluations: usize,
    pub generations: usize,
    /// Best threshold after each generation.
    pub history: Vec<f64>,
}

/// Runs differential evolution on `search` for at most `budget` threshold
/// evaluations, optionally seeding the population with known candidates.
pub fn optimize_ensemble(
    search: &EnsembleSearch,
    budget: usize,
    seed: u64,
    seeds: &[(Vec<Vec<i64>>, Vec<f64>)],
) -> Result<EnsembleResult> {
    optimize_ensemble_resumable(search, budget, seed, seeds, None)
}

/// As [`optimize_ensemble`], saving a checkpoint after every generation and
/// resuming from `checkpoint` when that file exists.
pub fn optimize_ensemble_resumable(
    search: &EnsembleSearch,
    budget: usize,
    seed: u64,
    seeds: &[(Vec<Vec<i64>>, Vec<f64>)],
    checkpoint: Option<&Path>,
) -> Result<EnsembleResult> {
    let layout = search.layout();
    let cost = |g: &[f64]| search.cost(g);
    let mut evo = match checkpoint.filter(|p| p.exists()) {
        Some(path) => {
            let cp = Checkpoint::load(path)?;
            if cp.layout != layout {
                return Err(Error::Optimizer("checkpoint belongs to a different search".into()));
            }
            Evolution::resume(cp)?
        }
        None => {
            let params = EvolutionParams {
                budget: Some(budget),
                max_generations: usize::MAX,
                pop_size: search.pop_size,
                seed,
                ..Default::default()
            };
            let mut evo = Evolution::new(layout.clone(), params)?;
            match search.init_density {
                Some(density) => {
                    let np = evo.pop_size();
                    let xs = (0..np)
                        .map(|_| search.sample_sparse(density, &layout, evo.rng_mut()))
                        .collect();
                    evo.initialise_from(xs, &cost)?;
                }
                None => evo.initialise(&cost)?,
            }
            for (m, nu) in seeds {
                evo.inject(search.encode(m, nu), &cost);
            }
            evo
        }
    };
    loop {
        if let Some(path) = checkpoint {
            evo.checkpoint().save(path)?;
        }
        if evo.idle() >= IDLE_LIMIT || !evo.step(&cost)? {
            break;
        }
    }
    if let Some(path) = checkpoint {
        evo.checkpoint().save(path)?;
    }
    let best = evo
        .best()
        .cloned()
        .ok_or_else(|| Error::Optimizer("empty population".into()))?;
    if best.fitness > search.hi_db {
        return Err(Error::Optimizer(format!(
            "no candidate with a finite threshold after {} evaluations",
            evo.evaluations()
        )));
    }
    let (proto, dd) = search.decode(&best.genes)?;
    Ok(EnsembleResult {
        best: Candidate {
            base_matrix: proto.to_matrix(),
            nu: dd.coefficients().to_vec(),
            threshold_db: best.fitness,
        },
        evaluations: evo.evaluations(),
        generations: evo.generation(),
        history: evo.history.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn genome_round_trip() {
        let mut s = EnsembleSearch::new(2, 4, 10, EnsembleTarget::SingleUser);
        s.nu_support = vec![1];
        let g = vec![1.0, 2.0, 0.0, 1.0, 1.0, 1.0, 3.0, 1.0];
        let (p, dd) = s.decode(&g).unwrap();
        assert_eq!(p.to_matrix(), vec![vec![1, 2, 0, 1], vec![1, 1, 3, 1]]);
        assert_eq!(dd.coefficients(), &[1.0]);
        let mut s2 = s.clone();
        s2.nu_support = vec![1, 2];
        let mut g2 = g.clone();
        g2.extend([0.25, 0.75]);
        let (_, dd2) = s2.decode(&g2).unwrap();
        assert_eq!(dd2.coefficients(), &[0.25, 0.75]);
        assert_eq!(s2.encode(&p.to_matrix(), &[0.25, 0.75]), g2);
    }

    #[test]
    fn invalid_matrix_costs_infinity() {
        let s = EnsembleSearch::new(2, 4, 10, EnsembleTarget::SingleUser);
        assert!(s.cost(&[0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0]).is_infinite());
    }

    #[test]
    fn single_generation_budget_returns_initial_best() {
        let mut s = EnsembleSearch::new(2, 4, 16, EnsembleTarget::SingleUser);
        s.nu_support = vec![1];
        s.de_iters = 200;
        let res = optimize_ensemble(&s, 80, 3, &[]).unwrap();
        assert_eq!(res.evaluations, 80);
        assert_eq!(res.generations, 0);
        assert_eq!(res.history, vec![res.best.threshold_db]);
    }
}

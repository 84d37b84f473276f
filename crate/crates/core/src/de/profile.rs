//! MAC-node degree distributions.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::tx::repetition::RepetitionDD;

/// How the MAC load of the ensemble is modelled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LoadModel {
    /// Poisson with mean `K N E[l] / N_c`.
    #[default]
    Poisson,
    /// `Binomial(N_c, q)` with `q = N E[l] / N_c`, no user count.
    PrintedBinomial,
}

/// Node-perspective `G` and edge-perspective `gamma`, both indexed by degree.
#[derive(Debug, Clone, PartialEq)]
pub struct MacDegreeProfile {
    pub g: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Nominal mean load.
    pub mu: f64,
}

const TAIL: f64 = 1e-12;

impl MacDegreeProfile {
    /// From node-perspective probabilities `g[0..]`.
    pub fn from_node_probs(g: Vec<f64>, mu: f64) -> Result<Self> {
        if g.iter().any(|&x| !(x >= 0.0)) {
            return Err(invalid("degree probabilities must be non-negative"));
        }
        let total: f64 = g.iter().sum();
        let g: Vec<f64> = g.iter().map(|x| x / total).collect();
        let mean: f64 = g.iter().enumerate().map(|(i, x)| i as f64 * x).sum();
        if !(mean > 0.0) {
            return Err(invalid("MAC load must be positive"));
        }
        let gamma = g.iter().enumerate().map(|(i, x)| i as f64 * x / mean).collect();
        Ok(Self { g, gamma, mu })
    }

    /// Poisson(`mu`) truncated where the upper tail drops below `1e-12`.
    pub fn poisson(mu: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(invalid(format!("Poisson mean must be positive, got {mu}")));
        }
        let mut g = Vec::new();
        let mut pmf = (-mu).exp();
        let mut cdf = 0.0;
        let mut k = 0usize;
        loop {
            g.push(pmf);
            cdf += pmf;
            // stop once past the mode and the remaining mass is negligible
            if k as f64 > mu && 1.0 - cdf < TAIL {
                break;
            }
            k += 1;
            pmf *= mu / k as f64;
            if k > 100_000 {
                break;
            }
        }
        Self::from_node_probs(g, mu)
    }

    /// `Binomial(trials, q)`, truncated like [`Self::poisson`].
    pub fn binomial(trials: usize, q: f64) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) || trials == 0 {
            return Err(invalid("binomial load needs q in (0, 1] and trials > 0"));
        }
        let mean = trials as f64 * q;
        let lq = (1.0 - q).ln();
        let mut g = Vec::new();
        let mut log_pmf = trials as f64 * lq;
        let mut cdf = 0.0;
        for k in 0..=trials {
            let pmf = log_pmf.exp();
            g.push(pmf);
            cdf += pmf;
            if k as f64 > mean && 1.0 - cdf < TAIL {
                break;
            }
            log_pmf += ((trials - k) as f64 / (k + 1) as f64).ln() + q.ln() - lq;
        }
        Self::from_node_probs(g, mean)
    }

    /// Every MAC node carries exactly one user.
    pub fn single_user() -> Self {
        Self {
            g: vec![0.0, 1.0],
            gamma: vec![0.0, 1.0],
            mu: 1.0,
        }
    }

    pub fn max_degree(&self) -> usize {
        self.g.len().saturating_sub(1)
    }

    /// `sum_i i G_i` of the truncated distribution.
    pub fn mean_degree(&self) -> f64 {
        self.g.iter().enumerate().map(|(i, x)| i as f64 * x).sum()
    }
}

/// Degree profile of `k_users` users with length-`n` codes spread over `n_c`
/// channel uses.
pub fn mac_degree_profile(
    k_users: usize,
    n: usize,
    dd: &RepetitionDD,
    n_c: usize,
    model: LoadModel,
) -> Result<MacDegreeProfile> {
    if n_c == 0 || n == 0 {
        return Err(invalid("code length and N_c must be positive"));
    }
    let load = n as f64 * dd.mean_repetition() / n_c as f64;
    match model {
        LoadModel::Poisson => {
            let mu = k_users as f64 * load;
            if mu == 0.0 {
                return Err(invalid("MAC load is zero"));
            }
            MacDegreeProfile::poisson(mu)
        }
        LoadModel::PrintedBinomial => MacDegreeProfile::binomial(n_c, load.min(1.0)),
    }
}

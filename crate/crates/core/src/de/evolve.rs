//! Gaussian-approximation density evolution of the joint ensemble and its
//! threshold.
//!
//! Per iteration, with `s_+ = J^-1(I_{+->v})`:
//!
//! ```text
//! I_{+->v}      = sum_k gamma_k J(2 / sqrt(sigma_n^2 + (k-1) phi(J^-1(I_{v->+}))))
//! I_{v->c}(e,l) = J(sqrt(sum_{e' at v, e' != e} J^-1(I_{c->v}(e',l))^2 + l s_+^2))
//! I_{c->v}(e,l) = 1 - J(sqrt(sum_{e' at c, e' != e} J^-1(1 - I_{v->c}(e',l))^2))
//! I_{v->+}(v,l) = J(sqrt(sum_{e at v} J^-1(I_{c->v}(e,l))^2 + (l-1) s_+^2))
//! I_{v->+}      = sum_l nu_l mean_v I_{v->+}(v,l)
//! I_APP(v,l)    = J(sqrt(sum_{e at v} J^-1(I_{c->v}(e,l))^2 + l s_+^2))
//! ```

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::de::functions::tables;
use crate::de::profile::{mac_degree_profile, LoadModel, MacDegreeProfile};
use crate::error::{invalid, Result};
use crate::ldpc::Protograph;
use crate::tx::layout::FrameLayout;
use crate::tx::repetition::RepetitionDD;

/// Default convergence target for `min I_APP`.
pub const DEFAULT_TARGET: f64 = 1.0 - 1e-4;

#[derive(Debug, Clone, PartialEq)]
pub struct DeOutcome {
    pub converged: bool,
    pub iterations: usize,
    /// `i_app[v][k]` for the `k`-th repetition factor in the support of nu.
    pub i_app: Vec<Vec<f64>>,
    /// `min I_APP` after each iteration.
    pub trajectory: Vec<f64>,
}

impl DeOutcome {
    pub fn min_app(&self) -> f64 {
        self.i_app.iter().flatten().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Runs the recursion from zero information at normalised noise `sigma_n`.
pub fn de_evolve(
    proto: &Protograph,
    dd: &RepetitionDD,
    profile: &MacDegreeProfile,
    sigma_n: f64,
    max_iters: usize,
    target: f64,
) -> DeOutcome {
    let t = tables();
    let edges = proto.edges();
    let ne = edges.len();
    let nv = proto.num_vars();
    let var_edges: Vec<Vec<usize>> = (0..nv).map(|v| proto.edges_of_var(v)).collect();
    let check_edges: Vec<Vec<usize>> = (0..proto.num_checks()).map(|c| proto.edges_of_check(c)).collect();
    let support: Vec<(usize, f64)> = dd.support().map(|l| (l, dd.fraction(l))).collect();
    let nl = support.len();

    let mut icv = vec![vec![0.0; ne]; nl];
    let mut ivc = vec![vec![0.0; ne]; nl];
    let mut s_cv = vec![0.0; ne];
    let mut s_vc = vec![0.0; ne];
    let mut i_app = vec![vec![0.0; nl]; nv];
    let mut i_vplus = 0.0;
    let mut trajectory = Vec::new();
    let sn2 = sigma_n * sigma_n;
    let mut converged = false;
    let mut iterations = 0;

    for it in 1..=max_iters {
        iterations = it;
        let mmse = t.phi(t.j_inv(i_vplus));
        let mut i_plus = 0.0;
        for (k, &gk) in profile.gamma.iter().enumerate().skip(1) {
            if gk > 0.0 {
                i_plus += gk * t.j(2.0 / (sn2 + (k - 1) as f64 * mmse).sqrt());
            }
        }
        let sp2 = t.j_inv(i_plus).powi(2);

        let mut next_vplus = 0.0;
        let mut max_delta: f64 = 0.0;
        for (li, &(l, w)) in support.iter().enumerate() {
            let lf = l as f64;
            for e in 0..ne {
                s_cv[e] = t.j_inv(icv[li][e]).powi(2);
            }
            for v in 0..nv {
                let total: f64 = var_edges[v].iter().map(|&e| s_cv[e]).sum::<f64>();
                for &e in &var_edges[v] {
                    ivc[li][e] = t.j((total - s_cv[e] + lf * sp2).max(0.0).sqrt());
                }
            }
            for e in 0..ne {
                s_vc[e] = t.j_inv(1.0 - ivc[li][e]).powi(2);
            }
            for ce in &check_edges {
                let total: f64 = ce.iter().map(|&e| s_vc[e]).sum();
                for &e in ce {
                    icv[li][e] = 1.0 - t.j((total - s_vc[e]).max(0.0).sqrt());
                }
            }
            let mut mean_v = 0.0;
            for v in 0..nv {
                let sum_cv: f64 = var_edges[v].iter().map(|&e| t.j_inv(icv[li][e]).powi(2)).sum();
                mean_v += t.j((sum_cv + (lf - 1.0) * sp2).sqrt());
                let app = t.j((sum_cv + lf * sp2).sqrt());
                max_delta = max_delta.max((app - i_app[v][li]).abs());
                i_app[v][li] = app;
            }
            next_vplus += w * mean_v / nv as f64;
        }
        i_vplus = next_vplus;
        let min_app = i_app.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        trajectory.push(min_app);
        if min_app >= target {
            converged = true;
            break;
        }
        if max_delta < 1e-11 {
            break;
        }
    }
    DeOutcome {
        converged,
        iterations,
        i_app,
        trajectory,
    }
}

/// Eb/N0 to normalised noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum NoiseMap {
    /// Symbol amplitude `a = sqrt(N_c P2 / (N E[l]))` under unit noise, so
    /// `sigma_n^2 = N E[l] / (N_c P2)` with `P1 = split_ratio * P2`.
    System {
        layout: FrameLayout,
        split_ratio: f64,
        n: usize,
    },
    /// BPSK at code rate `rate`: `sigma^2 = 1 / (2 rate Eb/N0)`.
    SingleUser { rate: f64 },
}

impl NoiseMap {
    pub fn sigma_n(&self, ebn0_db: f64, dd: &RepetitionDD) -> Result<f64> {
        let lin = 10f64.powf(ebn0_db / 10.0);
        match *self {
            NoiseMap::System { layout, split_ratio, n } => {
                let (_, p2) = layout.powers_for_ebn0(ebn0_db, split_ratio)?;
                Ok((n as f64 * dd.mean_repetition() / (layout.n_c() as f64 * p2)).sqrt())
            }
            NoiseMap::SingleUser { rate } => {
                if !(rate > 0.0) {
                    return Err(invalid("rate must be positive"));
                }
                Ok((1.0 / (2.0 * rate * lin)).sqrt())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdConfig {
    pub map: NoiseMap,
    pub profile: MacDegreeProfile,
    pub max_iters: usize,
    pub target: f64,
    pub resolution_db: f64,
    pub lo_db: f64,
    pub hi_db: f64,
}

impl ThresholdConfig {
    pub fn new(map: NoiseMap, profile: MacDegreeProfile) -> Self {
        Self {
            map,
            profile,
            max_iters: 1000,
            target: DEFAULT_TARGET,
            resolution_db: 0.05,
            lo_db: -10.0,
            hi_db: 20.0,
        }
    }

    /// Poisson-loaded ensemble of `k_users` length-`n` codes in `layout`.
    pub fn system(
        layout: FrameLayout,
        split_ratio: f64,
        k_users: usize,
        n: usize,
        dd: &RepetitionDD,
        model: LoadModel,
    ) -> Result<Self> {
        let profile = mac_degree_profile(k_users, n, dd, layout.n_c(), model)?;
        Ok(Self::new(NoiseMap::System { layout, split_ratio, n }, profile))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Threshold {
    /// Smallest converging Eb/N0 found, `+inf` if none up to the bracket.
    pub ebn0_db: f64,
    /// Iterations used at that point.
    pub iterations: usize,
    /// Recursions run.
    pub evaluations: usize,
    /// `1 - min I_APP` at the top of the bracket; zero when it converged.
    pub residual_at_hi: f64,
}

/// Bisection on Eb/N0 for the convergence boundary.
pub fn de_threshold(proto: &Protograph, dd: &RepetitionDD, cfg: &ThresholdConfig) -> Result<Threshold> {
    let mut evaluations = 0;
    let mut run = |db: f64| -> Result<DeOutcome> {
        evaluations += 1;
        let sigma = cfg.map.sigma_n(db, dd)?;
        Ok(de_evolve(proto, dd, &cfg.profile, sigma, cfg.max_iters, cfg.target))
    };
    let top = run(cfg.hi_db)?;
    if !top.converged {
        return Ok(Threshold {
            ebn0_db: f64::INFINITY,
            iterations: top.iterations,
            evaluations,
            residual_at_hi: 1.0 - top.min_app(),
        });
    }
    let bottom = run(cfg.lo_db)?;
    if bottom.converged {
        return Ok(Threshold {
            ebn0_db: cfg.lo_db,
            iterations: bottom.iterations,
            evaluations,
            residual_at_hi: 0.0,
        });
    }
    let (mut lo, mut hi, mut hi_iters) = (cfg.lo_db, cfg.hi_db, top.iterations);
    while hi - lo > cfg.resolution_db {
        let mid = 0.5 * (lo + hi);
        let out = run(mid)?;
        if out.converged {
            hi = mid;
            hi_iters = out.iterations;
        } else {
            lo = mid;
        }
    }
    Ok(Threshold {
        ebn0_db: hi,
        iterations: hi_iters,
        evaluations,
        residual_at_hi: 0.0,
    })
}

/// One line of a threshold report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdRow {
    pub proto_hash: String,
    pub nu: String,
    pub k_a: usize,
    pub rate: f64,
    pub threshold_db: f64,
    pub iterations: usize,
}

pub fn write_threshold_csv<W: Write>(rows: &[ThresholdRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["proto_hash", "nu", "k_a", "rate", "threshold_db", "iterations"])?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

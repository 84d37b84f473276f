//! Flooding belief propagation on the joint graph.

use std::io::Write;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::decoder::graph::JointGraph;
use crate::decoder::kernels::{
    check_node_update, mac_equal_dp, mac_sic_complex, mac_sic_real, MacScratch, DEFAULT_DP_MAX_DEGREE,
};
use crate::error::Result;
use crate::tx::channel::Samples;
use crate::tx::layout::Message;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DecodeParams {
    pub max_iters: usize,
    pub clip: f64,
    /// Weight of the previous MAC output in the new one.
    pub damping: f64,
    /// Send each MAC edge the full posterior instead of the extrinsic sum.
    pub intrinsic: bool,
    /// Degree above which equal-amplitude MAC nodes switch to SIC.
    pub dp_max_degree: usize,
    /// Stop once no branch has converged for this many iterations.
    pub stall_iters: Option<usize>,
}

impl Default for DecodeParams {
    fn default() -> Self {
        Self {
            max_iters: 100,
            clip: 30.0,
            damping: 0.0,
            intrinsic: false,
            dp_max_degree: DEFAULT_DP_MAX_DEGREE,
            stall_iters: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BranchOutcome {
    pub w_p: u64,
    pub parity_ok: bool,
    /// Payload when parity holds and every shortened bit is zero.
    pub payload: Option<u128>,
    /// Iteration at which parity first held, or the total run.
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub iteration: usize,
    pub satisfied_fraction: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodeResult {
    pub branches: Vec<BranchOutcome>,
    /// Distinct messages of the parity-satisfying branches.
    pub decoded: Vec<Message>,
    pub iterations: usize,
    pub trace: Vec<TraceRow>,
}

/// Writes the convergence trace as `iteration,satisfied_fraction`.
pub fn write_trace_csv<W: Write>(trace: &[TraceRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for row in trace {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

struct State {
    m2v: Vec<f64>,
    v2m: Vec<f64>,
    c2v: Vec<f64>,
    v2c: Vec<f64>,
    prior: Vec<f64>,
    bits: Vec<Vec<u8>>,
    done: Vec<Option<usize>>,
}

pub fn decode_joint(graph: &JointGraph, params: &DecodeParams) -> DecodeResult {
    let code = graph.code().code();
    let n = code.n();
    let e_code = code.num_edges();
    let nb = graph.branches().len();
    let clip = params.clip;
    let mut prior = vec![0.0; n];
    for &p in graph.code().shortened_positions() {
        prior[p] = clip;
    }
    let mus: Vec<Complex64> = graph.branches().iter().map(|b| b.mu()).collect();
    let mut st = State {
        m2v: vec![0.0; graph.num_mac_edges()],
        v2m: vec![0.0; graph.num_mac_edges()],
        c2v: vec![0.0; nb * e_code],
        v2c: vec![0.0; nb * e_code],
        prior,
        bits: vec![vec![0u8; n]; nb],
        done: vec![None; nb],
    };
    for b in 0..nb {
        for pos in 0..n {
            for &f in graph.var_mac_edges(b, pos) {
                st.v2m[f as usize] = st.prior[pos];
            }
        }
    }
    let mut trace = Vec::new();
    let mut iterations = 0;

    if params.max_iters == 0 {
        channel_only_decisions(graph, &mus, &mut st);
        for b in 0..nb {
            if code.check_parity(&st.bits[b]).unwrap_or(false) {
                st.done[b] = Some(0);
            }
        }
    } else {
        let mut scratch = MacScratch::default();
        let mut last_event = 0;
        for it in 1..=params.max_iters {
            iterations = it;
            mac_pass(graph, &mus, params, &mut st, &mut scratch);
            for b in 0..nb {
                if st.done[b].is_none() {
                    variable_pass(graph, b, params, &mut st);
                    let base = b * e_code;
                    for c in 0..code.num_checks() {
                        let r = code.check_edges(c);
                        let (from, to) = (
                            &st.v2c[base + r.start..base + r.end],
                            &mut st.c2v[base + r.start..base + r.end],
                        );
                        check_node_update(from, to, clip);
                    }
                }
            }
            for b in 0..nb {
                if st.done[b].is_some() {
                    continue;
                }
                hard_decision(graph, b, &mut st);
                if code.check_parity(&st.bits[b]).unwrap_or(false) {
                    st.done[b] = Some(it);
                    last_event = it;
                    for pos in 0..n {
                        let v = if st.bits[b][pos] == 0 { clip } else { -clip };
                        for &f in graph.var_mac_edges(b, pos) {
                            st.v2m[f as usize] = v;
                        }
                    }
                }
            }
            let ok = st.done.iter().filter(|d| d.is_some()).count();
            trace.push(TraceRow {
                iteration: it,
                satisfied_fraction: if nb == 0 { 1.0 } else { ok as f64 / nb as f64 },
            });
            if ok == nb {
                break;
            }
            if let Some(s) = params.stall_iters {
                if it - last_event >= s {
                    break;
                }
            }
        }
    }

    let mut decoded = Vec::new();
    let branches = graph
        .branches()
        .iter()
        .enumerate()
        .map(|(b, br)| {
            let parity_ok = st.done[b].is_some();
            let payload = if parity_ok {
                graph.code().decode(&st.bits[b])
            } else {
                None
            };
            if let Some(w_c) = payload {
                decoded.push(Message { w_p: br.w_p, w_c });
            }
            BranchOutcome {
                w_p: br.w_p,
                parity_ok,
                payload,
                iterations: st.done[b].unwrap_or(iterations),
            }
        })
        .collect();
    decoded.sort_unstable();
    decoded.dedup();
    DecodeResult {
        branches,
        decoded,
        iterations,
        trace,
    }
}

fn channel_only_decisions(graph: &JointGraph, mus: &[Complex64], st: &mut State) {
    let n = graph.code().n();
    let y = graph.observation();
    let nv = graph.noise_var();
    let mut app = vec![0.0; graph.branches().len() * n];
    for j in 0..graph.num_mac_nodes() {
        for e in graph.mac_edges(j) {
            let (b, pos) = graph.mac_edge_endpoint(e);
            app[b * n + pos] += 2.0 * (mus[b].conj() * y.get(j)).re / nv;
        }
    }
    for b in 0..graph.branches().len() {
        for pos in 0..n {
            let l = app[b * n + pos] + st.prior[pos];
            st.bits[b][pos] = u8::from(l < 0.0);
        }
    }
}

fn mac_pass(graph: &JointGraph, mus: &[Complex64], params: &DecodeParams, st: &mut State, scratch: &mut MacScratch) {
    let nv = graph.noise_var();
    let clip = params.clip;
    let mut out = Vec::new();
    let mut mu_re = Vec::new();
    let mut mu_c = Vec::new();
    let y = graph.observation();
    for j in 0..graph.num_mac_nodes() {
        let r = graph.mac_edges(j);
        let d = r.len();
        if d == 0 {
            continue;
        }
        let llrs = &st.v2m[r.clone()];
        out.clear();
        out.resize(d, 0.0);
        match y {
            Samples::Real(yv) => {
                let mu0 = mus[graph.mac_edge_branch(r.start)].re;
                let equal = r.clone().all(|e| mus[graph.mac_edge_branch(e)].re == mu0);
                if equal && d <= params.dp_max_degree {
                    mac_equal_dp(llrs, yv[j], mu0, nv, &mut out, scratch);
                } else {
                    mu_re.clear();
                    mu_re.extend(r.clone().map(|e| mus[graph.mac_edge_branch(e)].re));
                    mac_sic_real(llrs, &mu_re, yv[j], nv, &mut out);
                }
            }
            Samples::Complex(yv) => {
                mu_c.clear();
                mu_c.extend(r.clone().map(|e| mus[graph.mac_edge_branch(e)]));
                mac_sic_complex(llrs, &mu_c, yv[j], nv, &mut out);
            }
        }
        let keep = params.damping;
        for (k, e) in r.enumerate() {
            let new = out[k].clamp(-clip, clip);
            st.m2v[e] = if keep > 0.0 {
                (1.0 - keep) * new + keep * st.m2v[e]
            } else {
                new
            };
        }
    }
}

fn variable_pass(graph: &JointGraph, b: usize, params: &DecodeParams, st: &mut State) {
    let code = graph.code().code();
    let base = b * code.num_edges();
    let clip = params.clip;
    for pos in 0..code.n() {
        let ce = code.var_edges(pos);
        let me = graph.var_mac_edges(b, pos);
        let mut total = st.prior[pos];
        for &e in ce {
            total += st.c2v[base + e as usize];
        }
        for &f in me {
            total += st.m2v[f as usize];
        }
        for &e in ce {
            let e = base + e as usize;
            st.v2c[e] = (total - st.c2v[e]).clamp(-clip, clip);
        }
        for &f in me {
            let f = f as usize;
            let v = if params.intrinsic { total } else { total - st.m2v[f] };
            st.v2m[f] = v.clamp(-clip, clip);
        }
    }
}

fn hard_decision(graph: &JointGraph, b: usize, st: &mut State) {
    let code = graph.code().code();
    let base = b * code.num_edges();
    for pos in 0..code.n() {
        let mut total = st.prior[pos];
        for &e in code.var_edges(pos) {
            total += st.c2v[base + e as usize];
        }
        for &f in graph.var_mac_edges(b, pos) {
            total += st.m2v[f as usize];
        }
        st.bits[b][pos] = u8::from(total < 0.0);
    }
}

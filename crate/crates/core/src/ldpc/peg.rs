//! Progressive edge growth under copy-and-permute constraints.
//!
//! Every protograph edge type `t = (c, v)` becomes a permutation between the
//! `Z` copies of `v` and the `Z` copies of `c`. Lifted variable nodes are
//! visited proto by proto in order of increasing degree, copies within a proto
//! in a seeded order. Each edge goes to the free check copy (one without an
//! edge of the same type yet) that is farthest from the variable in the current
//! graph; unreachable checks count as infinitely far and ties take the lowest
//! check index.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::ldpc::protograph::Protograph;
use crate::rng::PhiloxStream;

/// Stream tag separating PEG orderings from interleaver streams.
const PEG_STREAM: u64 = 0x5045_4700_0000_0000;

/// A copy-and-permute lift: `assignment[t][i]` is the check copy joined to
/// variable copy `i` by an edge of type `t`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Lift {
    pub proto: Protograph,
    pub z: usize,
    pub seed: u64,
    pub assignment: Vec<Vec<u32>>,
}

impl Lift {
    pub fn num_vars(&self) -> usize {
        self.z * self.proto.num_vars()
    }

    pub fn num_checks(&self) -> usize {
        self.z * self.proto.num_checks()
    }

    /// Lifted `(check, var)` pairs grouped by edge type.
    pub fn lifted_edges(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.proto.edges().iter().enumerate().flat_map(move |(t, et)| {
            self.assignment[t]
                .iter()
                .enumerate()
                .map(move |(i, &j)| (et.check * self.z + j as usize, et.var * self.z + i, t))
        })
    }
}

struct Graph {
    var_adj: Vec<Vec<usize>>,
    check_adj: Vec<Vec<usize>>,
}

impl Graph {
    fn connect(&mut self, v: usize, c: usize) {
        self.var_adj[v].push(c);
        self.check_adj[c].push(v);
    }

    fn disconnect(&mut self, v: usize, c: usize) {
        let pos = self.var_adj[v].iter().position(|&x| x == c).expect("edge present");
        self.var_adj[v].swap_remove(pos);
        let pos = self.check_adj[c].iter().position(|&x| x == v).expect("edge present");
        self.check_adj[c].swap_remove(pos);
    }

    /// Breadth-first check depths from variable `root`; `u32::MAX` marks
    /// unreachable checks.
    fn check_depths(&self, root: usize, depth: &mut [u32], seen_var: &mut [bool]) {
        depth.fill(u32::MAX);
        seen_var.fill(false);
        let mut queue = VecDeque::new();
        seen_var[root] = true;
        queue.push_back((root, 0u32));
        while let Some((v, d)) = queue.pop_front() {
            for &c in &self.var_adj[v] {
                if depth[c] != u32::MAX {
                    continue;
                }
                depth[c] = d;
                for &u in &self.check_adj[c] {
                    if !seen_var[u] {
                        seen_var[u] = true;
                        queue.push_back((u, d + 1));
                    }
                }
            }
        }
    }
}

/// Lifts `proto` by `z` with progressive edge growth.
pub fn lift_peg(proto: &Protograph, z: usize, seed: u64) -> Result<Lift> {
    if z < 2 {
        return Err(Error::Lifting(format!("lifting factor {z} must be at least 2")));
    }
    let max_entry = proto.max_entry() as usize;
    if max_entry >= 2 && z < 2 * max_entry {
        return Err(Error::Lifting(format!(
            "lifting factor {z} too small for {max_entry} parallel edges (needs {})",
            2 * max_entry
        )));
    }
    let nv = proto.num_vars();
    let nc = proto.num_checks();
    let edge_types = proto.edges();
    let mut assignment = vec![vec![u32::MAX; z]; edge_types.len()];
    // free[t][j]: check copy j has no edge of type t yet
    let mut free = vec![vec![true; z]; edge_types.len()];
    let mut graph = Graph {
        var_adj: vec![Vec::new(); nv * z],
        check_adj: vec![Vec::new(); nc * z],
    };

    let mut proto_order: Vec<usize> = (0..nv).collect();
    proto_order.sort_by_key(|&v| proto.var_degree(v));
    let mut rng = PhiloxStream::new(seed, PEG_STREAM);

    let mut depth = vec![0u32; nc * z];
    let mut depth_u = vec![0u32; nc * z];
    let mut seen_var = vec![false; nv * z];

    for &pv in &proto_order {
        let types = proto.edges_of_var(pv);
        let mut copies: Vec<usize> = (0..z).collect();
        for i in 0..z.saturating_sub(1) {
            let j = i + rng.below((z - i) as u64) as usize;
            copies.swap(i, j);
        }
        for &i in &copies {
            let v = pv * z + i;
            for &t in &types {
                let pc = edge_types[t].check;
                graph.check_depths(v, &mut depth, &mut seen_var);
                let mut best: Option<(u32, usize)> = None;
                for j in 0..z {
                    if !free[t][j] {
                        continue;
                    }
                    let c = pc * z + j;
                    let d = depth[c];
                    if graph.var_adj[v].contains(&c) {
                        continue;
                    }
                    if best.is_none_or(|(bd, _)| d > bd) {
                        best = Some((d, j));
                    }
                }
                let j = match best {
                    Some((d, j)) if d <= SWAP_AT_DEPTH => {
                        let mut ctx = SwapScratch {
                            depth_v: &depth,
                            depth_u: &mut depth_u,
                            seen: &mut seen_var,
                        };
                        improve_by_swap(&mut graph, &mut assignment, &mut free, proto, t, z, i, d, &mut ctx)
                            .unwrap_or(j)
                    }
                    Some((_, j)) => j,
                    None => repair(&mut graph, &mut assignment, &mut free, proto, t, z, i)?,
                };
                free[t][j] = false;
                assignment[t][i] = j as u32;
                graph.connect(v, pc * z + j);
            }
        }
    }
    Ok(Lift {
        proto: proto.clone(),
        z,
        seed,
        assignment,
    })
}

/// Free-slot depth at or below which a swap is attempted: depth 1 closes a
/// 4-cycle, depth 2 a 6-cycle.
const SWAP_AT_DEPTH: u32 = 2;

struct SwapScratch<'a> {
    depth_v: &'a [u32],
    depth_u: &'a mut [u32],
    seen: &'a mut [bool],
}

/// The permutation constraint can leave only close free slots for the last
/// copies. Looks for a copy `u` holding a type-`t` check farther from `v`
/// than `current` that can move to a free slot also farther than `current`
/// from itself; the swap maximising the smaller of the two depths is applied.
/// Returns the check copy vacated for `i`.
#[allow(clippy::too_many_arguments)]
fn improve_by_swap(
    graph: &mut Graph,
    assignment: &mut [Vec<u32>],
    free: &mut [Vec<bool>],
    proto: &Protograph,
    t: usize,
    z: usize,
    i: usize,
    current: u32,
    s: &mut SwapScratch<'_>,
) -> Option<usize> {
    let et = proto.edges()[t];
    let v = et.var * z + i;
    let free_slots: Vec<usize> = (0..z).filter(|&j| free[t][j]).collect();
    // (score, u_copy, j_new)
    let mut best: Option<(u32, usize, usize)> = None;
    for u_copy in 0..z {
        let j_old = assignment[t][u_copy];
        if u_copy == i || j_old == u32::MAX {
            continue;
        }
        let c_old = et.check * z + j_old as usize;
        let dv = s.depth_v[c_old];
        if dv <= current || graph.var_adj[v].contains(&c_old) {
            continue;
        }
        let u = et.var * z + u_copy;
        graph.disconnect(u, c_old);
        graph.check_depths(u, s.depth_u, s.seen);
        for &j in &free_slots {
            let c = et.check * z + j;
            if graph.var_adj[u].contains(&c) {
                continue;
            }
            let score = dv.min(s.depth_u[c]);
            if score > current && best.is_none_or(|(b, _, _)| score > b) {
                best = Some((score, u_copy, j));
            }
        }
        graph.connect(u, c_old);
    }
    let (_, u_copy, j_new) = best?;
    let j_old = assignment[t][u_copy] as usize;
    let u = et.var * z + u_copy;
    graph.disconnect(u, et.check * z + j_old);
    graph.connect(u, et.check * z + j_new);
    assignment[t][u_copy] = j_new as u32;
    free[t][j_new] = false;
    free[t][j_old] = true;
    Some(j_old)
}

/// Every free slot of type `t` is already adjacent to variable copy `i`.
/// Swap with another copy `u` whose type-`t` check is not adjacent to `i`:
/// `u` moves to a free slot it is not adjacent to and `i` takes its old check.
/// Returns the check copy vacated for `i`.
fn repair(
    graph: &mut Graph,
    assignment: &mut [Vec<u32>],
    free: &mut [Vec<bool>],
    proto: &Protograph,
    t: usize,
    z: usize,
    i: usize,
) -> Result<usize> {
    let et = proto.edges()[t];
    let v = et.var * z + i;
    let free_slots: Vec<usize> = (0..z).filter(|&j| free[t][j]).collect();
    for u_copy in 0..z {
        let j_old = assignment[t][u_copy];
        if u_copy == i || j_old == u32::MAX {
            continue;
        }
        let j_old = j_old as usize;
        let c_old = et.check * z + j_old;
        if graph.var_adj[v].contains(&c_old) {
            continue;
        }
        let u = et.var * z + u_copy;
        let Some(&j_new) = free_slots
            .iter()
            .find(|&&j| !graph.var_adj[u].contains(&(et.check * z + j)))
        else {
            continue;
        };
        graph.disconnect(u, c_old);
        graph.connect(u, et.check * z + j_new);
        assignment[t][u_copy] = j_new as u32;
        free[t][j_new] = false;
        free[t][j_old] = true;
        return Ok(j_old);
    }
    Err(Error::Lifting(format!(
        "no permutation slot for edge type {t} avoids a parallel lifted edge"
    )))
}

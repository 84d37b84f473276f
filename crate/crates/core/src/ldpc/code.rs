//! Lifted LDPC codes: sparse parity checks plus a dense systematic encoder.

use crate::error::{Error, Result};
use crate::ldpc::gf2::{reduce, BitVec};
use crate::ldpc::peg::{lift_peg, Lift};
use crate::ldpc::protograph::Protograph;

/// Parity-check structure of a lifted code with edges numbered check-major.
///
/// Immutable once built; shared read-only between concurrent trials.
#[derive(Debug, Clone)]
pub struct LiftedCode {
    lift: Lift,
    n: usize,
    m: usize,
    /// `check_ptr[c]..check_ptr[c + 1]` indexes the edges of check `c`.
    check_ptr: Vec<usize>,
    edge_var: Vec<u32>,
    edge_type: Vec<u32>,
    /// Edge ids incident to each variable.
    var_edges: Vec<Vec<u32>>,
    rank: usize,
    /// Free (information) columns in ascending order.
    info_positions: Vec<usize>,
    /// One codeword per information bit.
    generator: Vec<BitVec>,
}

impl LiftedCode {
    pub fn from_lift(lift: Lift) -> Self {
        let n = lift.num_vars();
        let m = lift.num_checks();
        let mut by_check: Vec<Vec<(u32, u32)>> = vec![Vec::new(); m];
        for (c, v, t) in lift.lifted_edges() {
            by_check[c].push((v as u32, t as u32));
        }
        let mut check_ptr = Vec::with_capacity(m + 1);
        let mut edge_var = Vec::new();
        let mut edge_type = Vec::new();
        let mut var_edges = vec![Vec::new(); n];
        check_ptr.push(0);
        for mut list in by_check {
            list.sort_unstable();
            for (v, t) in list {
                var_edges[v as usize].push(edge_var.len() as u32);
                edge_var.push(v);
                edge_type.push(t);
            }
            check_ptr.push(edge_var.len());
        }

        let rows: Vec<BitVec> = (0..m)
            .map(|c| {
                let mut row = BitVec::zeros(n);
                for e in check_ptr[c]..check_ptr[c + 1] {
                    let v = edge_var[e] as usize;
                    row.set(v, !row.get(v));
                }
                row
            })
            .collect();
        let ech = reduce(rows, n);
        let generator = ech
            .free
            .iter()
            .map(|&f| {
                let mut g = BitVec::zeros(n);
                g.set(f, true);
                for (row, &p) in ech.rows.iter().zip(&ech.pivots) {
                    if row.get(f) {
                        g.set(p, true);
                    }
                }
                g
            })
            .collect();
        Self {
            lift,
            n,
            m,
            check_ptr,
            edge_var,
            edge_type,
            var_edges,
            rank: ech.pivots.len(),
            info_positions: ech.free,
            generator,
        }
    }

    /// Code length `N`.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of lifted parity checks.
    pub fn num_checks(&self) -> usize {
        self.m
    }

    pub fn z(&self) -> usize {
        self.lift.z
    }

    pub fn seed(&self) -> u64 {
        self.lift.seed
    }

    pub fn protograph(&self) -> &Protograph {
        &self.lift.proto
    }

    pub fn lift(&self) -> &Lift {
        &self.lift
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Code dimension `N - rank(H)`.
    pub fn dimension(&self) -> usize {
        self.n - self.rank
    }

    /// Excess dimension over the design value `N - M`.
    pub fn rank_deficiency(&self) -> usize {
        self.m - self.rank
    }

    pub fn rate(&self) -> f64 {
        self.dimension() as f64 / self.n as f64
    }

    pub fn info_positions(&self) -> &[usize] {
        &self.info_positions
    }

    pub fn num_edges(&self) -> usize {
        self.edge_var.len()
    }

    pub fn check_edges(&self, check: usize) -> std::ops::Range<usize> {
        self.check_ptr[check]..self.check_ptr[check + 1]
    }

    pub fn edge_var(&self, edge: usize) -> usize {
        self.edge_var[edge] as usize
    }

    /// Protograph edge type of a lifted edge.
    pub fn edge_type(&self, edge: usize) -> usize {
        self.edge_type[edge] as usize
    }

    pub fn var_edges(&self, var: usize) -> &[u32] {
        &self.var_edges[var]
    }

    /// Systematic encoding: message bit `k` lands on `info_positions()[k]`.
    pub fn encode(&self, message: &[u8]) -> Result<Vec<u8>> {
        if message.len() != self.dimension() {
            return Err(Error::LengthMismatch {
                expected: self.dimension(),
                actual: message.len(),
            });
        }
        let mut word = BitVec::zeros(self.n);
        for (bit, g) in message.iter().zip(&self.generator) {
            if bit & 1 == 1 {
                word.xor_assign(g);
            }
        }
        Ok(word.to_bits())
    }

    /// Reads the message back from the information positions of a codeword.
    pub fn extract_message(&self, word: &[u8]) -> Vec<u8> {
        self.info_positions.iter().map(|&p| word[p]).collect()
    }

    pub fn syndrome_weight(&self, word: &[u8]) -> usize {
        (0..self.m)
            .filter(|&c| {
                self.check_edges(c)
                    .fold(0u8, |acc, e| acc ^ (word[self.edge_var[e] as usize] & 1))
                    == 1
            })
            .count()
    }

    /// True iff every parity check is satisfied.
    pub fn check_parity(&self, word: &[u8]) -> Result<bool> {
        if word.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                actual: word.len(),
            });
        }
        Ok((0..self.m).all(|c| {
            self.check_edges(c)
                .fold(0u8, |acc, e| acc ^ (word[self.edge_var[e] as usize] & 1))
                == 0
        }))
    }
}

/// Lifts `proto` and prepares its encoder.
pub fn lift_code(proto: &Protograph, z: usize, seed: u64) -> Result<LiftedCode> {
    if z * (proto.num_vars() - proto.num_checks()) < 1 {
        return Err(Error::Lifting("lifted code has no information bits".into()));
    }
    Ok(LiftedCode::from_lift(lift_peg(proto, z, seed)?))
}

/// Maximum number of re-lifts (seed, seed + 1, ...) searched for a full-rank
/// parity-check matrix.
pub const MAX_LIFT_ATTEMPTS: u64 = 16;

/// Lifts with seeds `seed..seed + 16` and returns the first full-rank code.
///
/// Some protographs are rank deficient for every lift (for instance when every
/// variable proto meets each check proto an odd number of times, the row
/// blocks of all check protos sum to the same vector). In that case the lift
/// of highest rank is returned provided its dimension still holds
/// `message_bits`; the deficiency stays visible via
/// [`LiftedCode::rank_deficiency`].
pub fn build_code(proto: &Protograph, z: usize, seed: u64, message_bits: usize) -> Result<LiftedCode> {
    let mut best: Option<LiftedCode> = None;
    for attempt in 0..MAX_LIFT_ATTEMPTS {
        let code = lift_code(proto, z, seed.wrapping_add(attempt))?;
        if code.rank_deficiency() == 0 {
            best = Some(code);
            break;
        }
        if best.as_ref().is_none_or(|b| code.rank() > b.rank()) {
            best = Some(code);
        }
    }
    let code = best.expect("at least one attempt");
    if code.dimension() < message_bits {
        return Err(Error::RankDeficient {
            available: code.dimension(),
            required: message_bits,
        });
    }
    Ok(code)
}

//! Protograph base matrices.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// One edge of the protograph. Parallel edges between the same pair of nodes
/// are distinct edge types and carry distinct `copy` indices.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct EdgeType {
    pub check: usize,
    pub var: usize,
    pub copy: usize,
}

/// A validated protograph: `base[c][v]` parallel edges between check proto `c`
/// and variable proto `v`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<i64>>", into = "Vec<Vec<i64>>")]
pub struct Protograph {
    base: Vec<Vec<u32>>,
    edges: Vec<EdgeType>,
}

impl Protograph {
    /// Validates a base matrix.
    ///
    /// Rejects negative entries, ragged rows, all-zero rows or columns and
    /// shapes whose design rate falls outside `(0, 1)`.
    pub fn new(base_matrix: &[Vec<i64>]) -> Result<Self> {
        let rows = base_matrix.len();
        if rows == 0 {
            return Err(Error::InvalidProtograph("empty matrix".into()));
        }
        let cols = base_matrix[0].len();
        if cols == 0 || base_matrix.iter().any(|r| r.len() != cols) {
            return Err(Error::InvalidProtograph("matrix is not rectangular".into()));
        }
        let mut base = Vec::with_capacity(rows);
        for (c, row) in base_matrix.iter().enumerate() {
            let mut out = Vec::with_capacity(cols);
            for (v, &b) in row.iter().enumerate() {
                if b < 0 {
                    return Err(Error::InvalidProtograph(format!("negative entry {b} at ({c}, {v})")));
                }
                out.push(
                    u32::try_from(b)
                        .map_err(|_| Error::InvalidProtograph(format!("entry {b} at ({c}, {v}) too large")))?,
                );
            }
            if out.iter().all(|&b| b == 0) {
                return Err(Error::InvalidProtograph(format!("check row {c} is all zero")));
            }
            base.push(out);
        }
        for v in 0..cols {
            if base.iter().all(|r| r[v] == 0) {
                return Err(Error::InvalidProtograph(format!("variable column {v} is all zero")));
            }
        }
        if cols <= rows {
            return Err(Error::InvalidProtograph(format!(
                "design rate ({cols} - {rows}) / {cols} is not in (0, 1)"
            )));
        }
        let mut edges = Vec::new();
        for (c, row) in base.iter().enumerate() {
            for (v, &b) in row.iter().enumerate() {
                for copy in 0..b as usize {
                    edges.push(EdgeType { check: c, var: v, copy });
                }
            }
        }
        Ok(Self { base, edges })
    }

    /// An all-ones `rows x cols` protograph, i.e. a regular ensemble.
    pub fn all_ones(rows: usize, cols: usize) -> Result<Self> {
        Self::new(&vec![vec![1; cols]; rows])
    }

    pub fn num_checks(&self) -> usize {
        self.base.len()
    }

    pub fn num_vars(&self) -> usize {
        self.base[0].len()
    }

    pub fn entry(&self, check: usize, var: usize) -> u32 {
        self.base[check][var]
    }

    pub fn rows(&self) -> &[Vec<u32>] {
        &self.base
    }

    pub fn edges(&self) -> &[EdgeType] {
        &self.edges
    }

    pub fn design_rate(&self) -> f64 {
        (self.num_vars() - self.num_checks()) as f64 / self.num_vars() as f64
    }

    pub fn var_degree(&self, var: usize) -> usize {
        self.base.iter().map(|r| r[var] as usize).sum()
    }

    pub fn check_degree(&self, check: usize) -> usize {
        self.base[check].iter().map(|&b| b as usize).sum()
    }

    pub fn max_entry(&self) -> u32 {
        self.base.iter().flatten().copied().max().unwrap_or(0)
    }

    /// Edge-type indices incident to variable proto `var`.
    pub fn edges_of_var(&self, var: usize) -> Vec<usize> {
        (0..self.edges.len()).filter(|&e| self.edges[e].var == var).collect()
    }

    /// Edge-type indices incident to check proto `check`.
    pub fn edges_of_check(&self, check: usize) -> Vec<usize> {
        (0..self.edges.len())
            .filter(|&e| self.edges[e].check == check)
            .collect()
    }

    /// SHA-256 of the canonical text form, hex encoded.
    pub fn content_hash(&self) -> String {
        hex::encode(Sha256::digest(self.to_string().as_bytes()))
    }

    pub fn to_matrix(&self) -> Vec<Vec<i64>> {
        self.base
            .iter()
            .map(|r| r.iter().map(|&b| i64::from(b)).collect())
            .collect()
    }
}

impl TryFrom<Vec<Vec<i64>>> for Protograph {
    type Error = Error;

    fn try_from(m: Vec<Vec<i64>>) -> Result<Self> {
        Protograph::new(&m)
    }
}

impl From<Protograph> for Vec<Vec<i64>> {
    fn from(p: Protograph) -> Self {
        p.to_matrix()
    }
}

/// Text form: a `rows cols` header line followed by one line per check row.
impl fmt::Display for Protograph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}", self.num_checks(), self.num_vars())?;
        for row in &self.base {
            let line: Vec<String> = row.iter().map(|b| b.to_string()).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

impl FromStr for Protograph {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut lines = s
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines
            .next()
            .ok_or_else(|| Error::Parse("missing 'rows cols' header".into()))?;
        let dims: Vec<usize> = header
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| Error::Parse(format!("bad header '{header}': {e}")))?;
        if dims.len() != 2 {
            return Err(Error::Parse(format!("bad header '{header}'")));
        }
        let (rows, cols) = (dims[0], dims[1]);
        let mut matrix = Vec::with_capacity(rows);
        for line in lines.by_ref().take(rows) {
            let row: Vec<i64> = line
                .split_whitespace()
                .map(|t| t.parse::<i64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse(format!("bad row '{line}': {e}")))?;
            if row.len() != cols {
                return Err(Error::Parse(format!(
                    "row '{line}' has {} entries, expected {cols}",
                    row.len()
                )));
            }
            matrix.push(row);
        }
        if matrix.len() != rows {
            return Err(Error::Parse(format!("expected {rows} rows, found {}", matrix.len())));
        }
        if lines.next().is_some() {
            return Err(Error::Parse("trailing rows after matrix".into()));
        }
        Protograph::new(&matrix)
    }
}

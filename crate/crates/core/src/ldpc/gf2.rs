//! Dense GF(2) rows packed into 64-bit words.

/// A binary vector packed into `u64` words, bit `i` at word `i / 64`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct BitVec {
    words: Vec<u64>,
    len: usize,
}

impl BitVec {
    pub fn zeros(len: usize) -> Self {
        Self {
            words: vec![0; len.div_ceil(64)],
            len,
        }
    }

    pub fn from_bits(bits: &[u8]) -> Self {
        let mut v = Self::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            if b & 1 == 1 {
                v.set(i, true);
            }
        }
        v
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn xor_assign(&mut self, other: &BitVec) {
        for (a, b) in self.words.iter_mut().zip(&other.words) {
            *a ^= b;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn to_bits(&self) -> Vec<u8> {
        (0..self.len).map(|i| u8::from(self.get(i))).collect()
    }
}

/// Result of reducing a matrix to reduced row echelon form.
#[derive(Debug, Clone)]
pub struct Echelon {
    /// Non-zero rows of the reduced matrix; row `i` has its leading one in
    /// column `pivots[i]`.
    pub rows: Vec<BitVec>,
    pub pivots: Vec<usize>,
    /// Columns without a pivot, ascending.
    pub free: Vec<usize>,
}

impl Echelon {
    pub fn rank(&self) -> usize {
        self.pivots.len()
    }
}

/// Gauss-Jordan elimination scanning columns left to right; each column takes
/// the first available row with a one as its pivot.
pub fn reduce(mut rows: Vec<BitVec>, ncols: usize) -> Echelon {
    let mut pivots = Vec::new();
    let mut free = Vec::new();
    let mut r = 0;
    for col in 0..ncols {
        let Some(found) = (r..rows.len()).find(|&i| rows[i].get(col)) else {
            free.push(col);
            continue;
        };
        rows.swap(r, found);
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i != r && row.get(col) {
                row.xor_assign(&pivot_row);
            }
        }
        pivots.push(col);
        r += 1;
    }
    rows.truncate(r);
    Echelon { rows, pivots, free }
}

//! Repetition degree distribution `nu(x) = sum_l nu_l x^l` and the map from
//! preamble index to repetition factor.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Fractions `nu_1..nu_L` of preambles (hence users) repeating `l` times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub struct RepetitionDD {
    nu: Vec<f64>,
}

impl RepetitionDD {
    /// `nu[l - 1]` is the fraction repeating `l` times.
    pub fn new(nu: Vec<f64>) -> Result<Self> {
        if nu.is_empty() {
            return Err(invalid("empty repetition distribution"));
        }
        if nu.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return Err(invalid("repetition fractions must be finite and non-negative"));
        }
        let total: f64 = nu.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(invalid(format!("repetition fractions sum to {total}, not 1")));
        }
        let mut nu = nu;
        while nu.len() > 1 && nu[nu.len() - 1] == 0.0 {
            nu.pop();
        }
        Ok(Self { nu })
    }

    /// `nu(x) = x^l`.
    pub fn regular(l: usize) -> Self {
        assert!(l >= 1);
        let mut nu = vec![0.0; l];
        nu[l - 1] = 1.0;
        Self { nu }
    }

    pub fn max_repetition(&self) -> usize {
        self.nu.len()
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.nu
    }

    pub fn fraction(&self, l: usize) -> f64 {
        if l == 0 || l > self.nu.len() {
            0.0
        } else {
            self.nu[l - 1]
        }
    }

    /// `sum_l nu_l * l`.
    pub fn mean_repetition(&self) -> f64 {
        self.nu.iter().enumerate().map(|(i, &v)| v * (i + 1) as f64).sum()
    }

    /// Repetition factors with non-zero weight.
    pub fn support(&self) -> impl Iterator<Item = usize> + '_ {
        (1..=self.nu.len()).filter(|&l| self.nu[l - 1] > 0.0)
    }

    /// Repetition factor of preamble `w_p` out of `m_p`.
    ///
    /// Indices `[0, floor(nu_1 m_p))` repeat once, the next
    /// `floor(nu_2 m_p)` twice and so on; the remainder goes to `L`.
    pub fn rep_factor(&self, w_p: u64, m_p: u64) -> usize {
        let mut start = 0u64;
        let last = self.nu.len();
        for (i, &v) in self.nu[..last - 1].iter().enumerate() {
            start += (v * m_p as f64).floor() as u64;
            if w_p < start {
                return i + 1;
            }
        }
        last
    }

    /// Fails if a codeword of length `n` repeated `L` times overflows `n_c`.
    pub fn check_fits(&self, n: usize, n_c: usize) -> Result<()> {
        let l = self.max_repetition();
        if n * l > n_c {
            return Err(Error::RepetitionOverflow { n, l, slots: n_c });
        }
        Ok(())
    }
}

impl fmt::Display for RepetitionDD {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let terms: Vec<String> = self
            .support()
            .map(|l| {
                let c = self.nu[l - 1];
                let power = if l == 1 { "x".to_string() } else { format!("x^{l}") };
                if c == 1.0 {
                    power
                } else {
                    format!("{c}{power}")
                }
            })
            .collect();
        write!(f, "{}", terms.join("+"))
    }
}

/// Parses polynomials such as `x^2`, `0.12x+0.88x^2` or `0.5*x + 0.5*x^3`.
impl FromStr for RepetitionDD {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let compact: String = s.chars().filter(|c| !c.is_whitespace()).collect();
        if compact.is_empty() {
            return Err(Error::Parse("empty repetition polynomial".into()));
        }
        let mut nu: Vec<f64> = Vec::new();
        for term in compact.split('+') {
            let (coef, power) = term
                .split_once('x')
                .ok_or_else(|| Error::Parse(format!("term '{term}' has no x")))?;
            let coef = coef.trim_end_matches('*');
            let c = if coef.is_empty() {
                1.0
            } else {
                coef.parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad coefficient '{coef}': {e}")))?
            };
            let l = if power.is_empty() {
                1
            } else {
                power
                    .strip_prefix('^')
                    .ok_or_else(|| Error::Parse(format!("bad exponent in '{term}'")))?
                    .parse::<usize>()
                    .map_err(|e| Error::Parse(format!("bad exponent in '{term}': {e}")))?
            };
            if l == 0 {
                return Err(Error::Parse("repetition factor must be at least 1".into()));
            }
            if nu.len() < l {
                nu.resize(l, 0.0);
            }
            nu[l - 1] += c;
        }
        RepetitionDD::new(nu)
    }
}

impl TryFrom<String> for RepetitionDD {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<RepetitionDD> for String {
    fn from(dd: RepetitionDD) -> Self {
        dd.to_string()
    }
}

//! Spin alphabets and the η-block space.
//!
//! A block of `n` consecutive spins is identified with its lexicographic
//! index in `0..θ^n`, the first spin being the most significant digit.
//! Every downstream matrix is indexed by these integers.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Ordered, finite set of real spin values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpinAlphabet {
    values: Vec<f64>,
}

impl SpinAlphabet {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::InvalidAlphabet(format!(
                "need at least two spin values, got {}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidAlphabet("spin values must be finite".into()));
        }
        for (i, a) in values.iter().enumerate() {
            if values[i + 1..].contains(a) {
                return Err(Error::InvalidAlphabet(format!("duplicate spin value {a}")));
            }
        }
        Ok(Self { values })
    }

    /// `↓ = −1` at index 0, `↑ = +1` at index 1.
    pub fn binary() -> Self {
        Self {
            values: vec![-1.0, 1.0],
        }
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn value(&self, index: usize) -> f64 {
        self.values[index]
    }

    /// Single-character rendering of a symbol index (`0-9`, then `a-z`).
    pub fn symbol_char(&self, index: usize) -> char {
        std::char::from_digit(index as u32, 36).unwrap_or('?')
    }

    pub fn symbol_index(&self, c: char) -> Option<usize> {
        c.to_digit(36)
            .map(|d| d as usize)
            .filter(|&d| d < self.len())
    }
}

/// The set Υ of all blocks of `range` spins, `θ^range` elements.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockSpace {
    alphabet: SpinAlphabet,
    range: usize,
    count: usize,
}

impl BlockSpace {
    pub fn new(alphabet: SpinAlphabet, range: usize) -> Result<Self> {
        if range == 0 {
            return Err(Error::InvalidBlock(
                "interaction range must be at least 1".into(),
            ));
        }
        let count = (alphabet.len() as u64)
            .checked_pow(range as u32)
            .filter(|&c| c <= u32::MAX as u64)
            .ok_or_else(|| {
                Error::InvalidBlock(format!(
                    "block space θ^n = {}^{} is too large",
                    alphabet.len(),
                    range
                ))
            })? as usize;
        Ok(Self {
            alphabet,
            range,
            count,
        })
    }

    pub fn alphabet(&self) -> &SpinAlphabet {
        &self.alphabet
    }

    pub fn theta(&self) -> usize {
        self.alphabet.len()
    }

    /// Interaction range `n`, i.e. spins per block.
    pub fn range(&self) -> usize {
        self.range
    }

    /// Number of blocks υ.
    pub fn count(&self) -> usize {
        self.count
    }

    pub fn encode(&self, spins: &[usize]) -> Result<usize> {
        if spins.len() != self.range {
            return Err(Error::InvalidBlock(format!(
                "expected {} symbols, got {}",
                self.range,
                spins.len()
            )));
        }
        let theta = self.theta();
        spins.iter().try_fold(0usize, |acc, &s| {
            if s >= theta {
                Err(Error::InvalidBlock(format!(
                    "symbol {s} outside alphabet of size {theta}"
                )))
            } else {
                Ok(acc * theta + s)
            }
        })
    }

    pub fn decode(&self, index: usize) -> Result<Vec<usize>> {
        self.check(index)?;
        Ok(self.decode_unchecked(index))
    }

    pub(crate) fn decode_unchecked(&self, mut index: usize) -> Vec<usize> {
        let theta = self.theta();
        let mut out = vec![0; self.range];
        for slot in out.iter_mut().rev() {
            *slot = index % theta;
            index /= theta;
        }
        out
    }

    /// Spin values (not indices) of a block.
    pub fn spin_values(&self, index: usize) -> Result<Vec<f64>> {
        Ok(self
            .decode(index)?
            .into_iter()
            .map(|s| self.alphabet.value(s))
            .collect())
    }

    /// The operator `η ↦ πη·s`: drop the leading spin, append `s`.
    pub fn shift_append(&self, block: usize, symbol: usize) -> Result<usize> {
        self.check(block)?;
        if symbol >= self.theta() {
            return Err(Error::InvalidBlock(format!(
                "symbol {symbol} outside alphabet of size {}",
                self.theta()
            )));
        }
        Ok(self.shift_append_unchecked(block, symbol))
    }

    pub(crate) fn shift_append_unchecked(&self, block: usize, symbol: usize) -> usize {
        (block * self.theta()) % self.count + symbol
    }

    /// Leading (oldest) spin of a block.
    pub fn first_symbol(&self, block: usize) -> usize {
        block / (self.count / self.theta())
    }

    pub fn last_symbol(&self, block: usize) -> usize {
        block % self.theta()
    }

    pub fn render(&self, block: usize) -> String {
        self.decode_unchecked(block)
            .into_iter()
            .map(|s| self.alphabet.symbol_char(s))
            .collect()
    }

    fn check(&self, index: usize) -> Result<()> {
        if index >= self.count {
            Err(Error::InvalidBlock(format!(
                "index {index} out of range 0..{}",
                self.count
            )))
        } else {
            Ok(())
        }
    }
}

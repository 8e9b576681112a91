//! Finite-range pair Hamiltonians and their block decomposition.
//!
//! The energy of a chain is `−B Σ s_i + Σ_{d=1..n} Σ_i Λ_d(s_i, s_{i+d})`.
//! Splitting the chain into blocks of `n` spins gives the intra-block
//! energies `x_η` and the cross-block energies `y_{ηη′}` used by the transfer
//! matrix.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lattice::{BlockSpace, SpinAlphabet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Boundary {
    Open,
    Periodic,
}

/// Pairwise interaction of range `n` in an external field.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hamiltonian {
    blocks: BlockSpace,
    field: f64,
    /// Λ_d(a, b) at `(d − 1)·θ² + a·θ + b`, alphabet indices `a`, `b`.
    couplings: Vec<f64>,
}

impl Hamiltonian {
    /// `table[d − 1][a][b] = Λ_d(a, b)` over alphabet indices; the interaction
    /// range is `table.len()`.
    pub fn new(alphabet: SpinAlphabet, field: f64, table: Vec<Vec<Vec<f64>>>) -> Result<Self> {
        let theta = alphabet.len();
        let blocks = BlockSpace::new(alphabet, table.len())?;
        if !field.is_finite() {
            return Err(Error::NumericDomain(format!("field {field} is not finite")));
        }
        let mut couplings = Vec::with_capacity(table.len() * theta * theta);
        for (d, layer) in table.iter().enumerate() {
            if layer.len() != theta || layer.iter().any(|row| row.len() != theta) {
                return Err(Error::InvalidCouplings(format!(
                    "distance {} must be a {theta}x{theta} table",
                    d + 1
                )));
            }
            for a in 0..theta {
                for b in 0..theta {
                    let v = layer[a][b];
                    if !v.is_finite() {
                        return Err(Error::InvalidCouplings(format!(
                            "Λ_{}({a},{b}) is not finite",
                            d + 1
                        )));
                    }
                    if v != layer[b][a] {
                        return Err(Error::InvalidCouplings(format!(
                            "Λ_{} is not symmetric at ({a},{b})",
                            d + 1
                        )));
                    }
                    couplings.push(v);
                }
            }
        }
        Ok(Self {
            blocks,
            field,
            couplings,
        })
    }

    /// Product form `Λ_d(s, s′) = −J_d·s·s′`; range is `j.len()`.
    pub fn product_form(alphabet: SpinAlphabet, field: f64, j: &[f64]) -> Result<Self> {
        let values = alphabet.values().to_vec();
        let table = j
            .iter()
            .map(|&jd| {
                values
                    .iter()
                    .map(|&a| values.iter().map(|&b| -jd * a * b).collect())
                    .collect()
            })
            .collect();
        Self::new(alphabet, field, table)
    }

    pub fn blocks(&self) -> &BlockSpace {
        &self.blocks
    }

    pub fn range(&self) -> usize {
        self.blocks.range()
    }

    pub fn field(&self) -> f64 {
        self.field
    }

    /// Λ_d over alphabet indices; zero beyond the range.
    pub fn coupling(&self, distance: usize, a: usize, b: usize) -> f64 {
        if distance == 0 || distance > self.range() {
            return 0.0;
        }
        let theta = self.blocks.theta();
        self.couplings[(distance - 1) * theta * theta + a * theta + b]
    }

    /// `x_η`: field energy of the block plus all pairs inside it.
    pub fn intra_block_energy(&self, block: usize) -> Result<f64> {
        let spins = self.blocks.decode(block)?;
        let alphabet = self.blocks.alphabet();
        let n = spins.len();
        let mut e = -self.field * spins.iter().map(|&s| alphabet.value(s)).sum::<f64>();
        for i in 0..n {
            for k in i + 1..n {
                e += self.coupling(k - i, spins[i], spins[k]);
            }
        }
        Ok(e)
    }

    /// `y_{ηη′}`: pairs with one spin in `left` and the other in the
    /// following block `right`. Not symmetric in its arguments.
    pub fn cross_block_energy(&self, left: usize, right: usize) -> Result<f64> {
        let a = self.blocks.decode(left)?;
        let b = self.blocks.decode(right)?;
        let n = a.len();
        let mut e = 0.0;
        for i in 0..n {
            for k in 0..=i {
                e += self.coupling(n - i + k, a[i], b[k]);
            }
        }
        Ok(e)
    }

    /// Energy as `x_0 + y_01 + x_1 + … + x_{N−1}` (plus `y_{N−1,0}` when
    /// periodic). `spins` are alphabet indices.
    pub fn chain_energy_blockwise(&self, spins: &[usize], boundary: Boundary) -> Result<f64> {
        let n = self.range();
        if spins.is_empty() || !spins.len().is_multiple_of(n) {
            return Err(Error::InvalidLength {
                len: spins.len(),
                range: n,
            });
        }
        let blocks = spins
            .chunks(n)
            .map(|c| self.blocks.encode(c))
            .collect::<Result<Vec<_>>>()?;
        let mut e = 0.0;
        for (p, &b) in blocks.iter().enumerate() {
            e += self.intra_block_energy(b)?;
            if p + 1 < blocks.len() {
                e += self.cross_block_energy(b, blocks[p + 1])?;
            }
        }
        if boundary == Boundary::Periodic {
            e += self.cross_block_energy(blocks[blocks.len() - 1], blocks[0])?;
        }
        Ok(e)
    }

    /// Energy summed directly over sites and distances. Periodic chains wrap
    /// the partner index modulo `L`, one bond per (site, distance).
    pub fn chain_energy_direct(&self, spins: &[usize], boundary: Boundary) -> Result<f64> {
        let theta = self.blocks.theta();
        if let Some(&bad) = spins.iter().find(|&&s| s >= theta) {
            return Err(Error::InvalidBlock(format!(
                "symbol {bad} outside alphabet of size {theta}"
            )));
        }
        let alphabet = self.blocks.alphabet();
        let len = spins.len();
        let mut e = -self.field * spins.iter().map(|&s| alphabet.value(s)).sum::<f64>();
        for i in 0..len {
            for d in 1..=self.range() {
                let k = match boundary {
                    Boundary::Open if i + d < len => i + d,
                    Boundary::Open => continue,
                    Boundary::Periodic => (i + d) % len,
                };
                e += self.coupling(d, spins[i], spins[k]);
            }
        }
        Ok(e)
    }
}

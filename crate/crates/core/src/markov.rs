//! From the Gibbs field to a Markov chain over blocks.
//!
//! The local characteristics `Pr(η_i | η_{i−1}, η_{i+1})` follow from the
//! transfer matrix directly. Inverting them gives the block stochastic matrix
//! `P`; the inversion used here is the spectral form
//! `P_ij = V_ij r_j / (V r)_i`, which equals `V_ij r_j / (λ₀ r_i)` for the
//! Perron vector `r` and is row-stochastic by construction. Every returned
//! matrix is certified against the consistency relation
//! `Pr(η_i|η_j,η_m) · Σ_l P_jl P_lm = P_ji P_im`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::lattice::BlockSpace;
use crate::logspace::log_sum_exp;
use crate::transfer::TransferSystem;

/// Largest absolute consistency residual accepted from the inversion.
pub const CONSISTENCY_TOLERANCE: f64 = 1e-10;

/// Entries of `P` above this are edges of the support graph.
pub const SUPPORT_EDGE_TOLERANCE: f64 = 1e-12;

/// Tolerance on row sums and on `πP = π`.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-12;

/// `Pr(η_i | η_{i−1}=j, η_{i+1}=m)` for interior blocks and
/// `Pr(η_0 | η_1=m)` for the first block of an open chain.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalCharacteristics {
    size: usize,
    interior: Vec<f64>,
    log_interior: Vec<f64>,
    first_block: Vec<f64>,
}

impl LocalCharacteristics {
    pub fn size(&self) -> usize {
        self.size
    }

    /// `Pr(η_i = mid | prev, next)`.
    pub fn interior(&self, prev: usize, mid: usize, next: usize) -> f64 {
        self.interior[(prev * self.size + mid) * self.size + next]
    }

    /// `log Pr(η_i = mid | prev, next)`, finite even where the probability
    /// underflows.
    pub fn log_interior(&self, prev: usize, mid: usize, next: usize) -> f64 {
        self.log_interior[(prev * self.size + mid) * self.size + next]
    }

    /// `Pr(η_0 = first | η_1 = next)`.
    pub fn first_block(&self, first: usize, next: usize) -> f64 {
        self.first_block[first * self.size + next]
    }

    /// Builds a table from explicit interior values, `values[prev][mid][next]`.
    pub fn from_interior(values: Vec<Vec<Vec<f64>>>) -> Self {
        let size = values.len();
        let interior = values.into_iter().flatten().flatten().collect::<Vec<_>>();
        assert_eq!(
            interior.len(),
            size * size * size,
            "interior table must be υ×υ×υ"
        );
        Self {
            size,
            log_interior: interior.iter().map(|x| x.ln()).collect(),
            interior,
            first_block: vec![1.0 / size as f64; size * size],
        }
    }
}

pub fn local_characteristics(ts: &TransferSystem) -> LocalCharacteristics {
    let log_v = ts.log_v();
    let log_u = ts.log_u();
    let size = log_v.nrows();
    let mut interior = vec![0.0; size * size * size];
    let mut log_interior = vec![0.0; size * size * size];
    let mut terms = vec![0.0; size];
    for j in 0..size {
        for m in 0..size {
            for (k, t) in terms.iter_mut().enumerate() {
                *t = log_v[(j, k)] + log_v[(k, m)];
            }
            let norm = log_sum_exp(terms.iter().copied());
            for (i, t) in terms.iter().enumerate() {
                let cell = (j * size + i) * size + m;
                log_interior[cell] = t - norm;
                interior[cell] = (t - norm).exp();
            }
        }
    }
    let mut first_block = vec![0.0; size * size];
    for m in 0..size {
        for (k, t) in terms.iter_mut().enumerate() {
            *t = log_u[k] + log_v[(k, m)];
        }
        let norm = log_sum_exp(terms.iter().copied());
        for (i, t) in terms.iter().enumerate() {
            first_block[i * size + m] = (t - norm).exp();
        }
    }
    LocalCharacteristics {
        size,
        interior,
        log_interior,
        first_block,
    }
}

/// Worst triple of the consistency relation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub max_residual: f64,
    pub prev: usize,
    pub mid: usize,
    pub next: usize,
}

/// Max over `(j, i, m)` of `|LC[j][i][m] · (P²)_jm − P_ji P_im|`.
pub fn consistency_residual(lc: &LocalCharacteristics, p: &DMatrix<f64>) -> ConsistencyReport {
    let size = lc.size();
    let p2 = p * p;
    let mut report = ConsistencyReport {
        max_residual: 0.0,
        prev: 0,
        mid: 0,
        next: 0,
    };
    for j in 0..size {
        for i in 0..size {
            for m in 0..size {
                let r = (lc.interior(j, i, m) * p2[(j, m)] - p[(j, i)] * p[(i, m)]).abs();
                if !(r <= report.max_residual) {
                    report = ConsistencyReport {
                        max_residual: r,
                        prev: j,
                        mid: i,
                        next: m,
                    };
                }
            }
        }
    }
    report
}

/// Local characteristics implied by a stochastic matrix,
/// `P_ji P_im / Σ_l P_jl P_lm`.
pub fn implied_local_characteristics(p: &DMatrix<f64>) -> LocalCharacteristics {
    let size = p.nrows();
    let p2 = p * p;
    let mut interior = vec![0.0; size * size * size];
    for j in 0..size {
        for i in 0..size {
            for m in 0..size {
                interior[(j * size + i) * size + m] = p[(j, i)] * p[(i, m)] / p2[(j, m)];
            }
        }
    }
    LocalCharacteristics {
        size,
        log_interior: interior.iter().map(|x| x.ln()).collect(),
        interior,
        first_block: vec![f64::NAN; size * size],
    }
}

/// Row-stochastic block transition matrix with its stationary distribution.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BlockChain {
    blocks: BlockSpace,
    p: DMatrix<f64>,
    pi: DVector<f64>,
    consistency: Option<ConsistencyReport>,
}

impl BlockChain {
    /// Wraps an arbitrary stochastic matrix. The stationary vector is the
    /// unique one for irreducible `p`, otherwise the equal-weight mixture of
    /// the per-class stationary vectors.
    pub fn from_matrix(blocks: BlockSpace, p: DMatrix<f64>) -> Result<Self> {
        check_stochastic(&blocks, &p)?;
        let pi = match stationary_of(&p)? {
            Stationary::Irreducible(pi) => pi,
            Stationary::Reducible { classes, .. } => {
                let w = 1.0 / classes.len() as f64;
                let mut pi = DVector::zeros(p.nrows());
                for c in &classes {
                    for (&b, &x) in c.members.iter().zip(c.pi.iter()) {
                        pi[b] += w * x;
                    }
                }
                pi
            }
        };
        Ok(Self {
            blocks,
            p,
            pi,
            consistency: None,
        })
    }

    /// Wraps a matrix together with a known stationary vector.
    pub fn with_stationary(blocks: BlockSpace, p: DMatrix<f64>, pi: DVector<f64>) -> Result<Self> {
        check_stochastic(&blocks, &p)?;
        if pi.len() != p.nrows() || pi.iter().any(|&x| !(x >= 0.0)) {
            return Err(Error::NumericDomain(
                "stationary vector must be a probability vector".into(),
            ));
        }
        let total = pi.sum();
        Ok(Self {
            blocks,
            p,
            pi: pi / total,
            consistency: None,
        })
    }

    pub fn blocks(&self) -> &BlockSpace {
        &self.blocks
    }

    pub fn p(&self) -> &DMatrix<f64> {
        &self.p
    }

    pub fn pi(&self) -> &DVector<f64> {
        &self.pi
    }

    pub fn size(&self) -> usize {
        self.p.nrows()
    }

    /// Consistency certificate, present for chains produced by inversion.
    pub fn consistency(&self) -> Option<&ConsistencyReport> {
        self.consistency.as_ref()
    }

    /// Replaces `P` without re-certifying. Validation uses this to check that
    /// a corrupted matrix is caught.
    pub fn with_matrix_unchecked(mut self, p: DMatrix<f64>) -> Self {
        self.p = p;
        self.consistency = None;
        self
    }
}

fn check_stochastic(blocks: &BlockSpace, p: &DMatrix<f64>) -> Result<()> {
    if p.nrows() != blocks.count() || p.ncols() != blocks.count() {
        return Err(Error::NumericDomain(format!(
            "stochastic matrix must be {0}x{0}",
            blocks.count()
        )));
    }
    for (i, row) in p.row_iter().enumerate() {
        if row
            .iter()
            .any(|&x| !(0.0..=1.0 + STOCHASTIC_TOLERANCE).contains(&x))
        {
            return Err(Error::NumericDomain(format!(
                "row {i} has entries outside [0, 1]"
            )));
        }
        let s: f64 = row.sum();
        if (s - 1.0).abs() > STOCHASTIC_TOLERANCE {
            return Err(Error::NumericDomain(format!("row {i} sums to {s}")));
        }
    }
    Ok(())
}

/// Inverts the local characteristics of `ts` into the block stochastic
/// matrix and certifies the result.
pub fn solve_stochastic(ts: &TransferSystem) -> Result<BlockChain> {
    let log_v = ts.log_v();
    let perron = ts.perron();
    let size = log_v.nrows();
    let log_r = &perron.log_right;
    let mut p = DMatrix::zeros(size, size);
    for i in 0..size {
        let row: Vec<f64> = (0..size).map(|j| log_v[(i, j)] + log_r[j]).collect();
        let norm = log_sum_exp(row.iter().copied());
        for (j, x) in row.iter().enumerate() {
            p[(i, j)] = (x - norm).exp();
        }
    }
    let log_pi: Vec<f64> = perron
        .log_left
        .iter()
        .zip(log_r.iter())
        .map(|(l, r)| l + r)
        .collect();
    let norm = log_sum_exp(log_pi.iter().copied());
    let pi = DVector::from_iterator(size, log_pi.iter().map(|x| (x - norm).exp()));

    let lc = local_characteristics(ts);
    let report = consistency_residual(&lc, &p);
    if !(report.max_residual <= CONSISTENCY_TOLERANCE) {
        return Err(Error::InversionFailure {
            residual: report.max_residual,
            prev: report.prev,
            mid: report.mid,
            next: report.next,
        });
    }
    Ok(BlockChain {
        blocks: ts.blocks().clone(),
        p,
        pi,
        consistency: Some(report),
    })
}

/// A closed communicating class of the support graph.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecurrentClass {
    /// Block indices, ascending.
    pub members: Vec<usize>,
    /// Stationary distribution of the class-restricted chain, aligned with
    /// `members`.
    pub pi: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Stationary {
    Irreducible(DVector<f64>),
    Reducible {
        classes: Vec<RecurrentClass>,
        /// Blocks outside every recurrent class.
        transient: Vec<usize>,
    },
}

impl Stationary {
    pub fn classes(&self) -> Vec<RecurrentClass> {
        match self {
            Stationary::Irreducible(pi) => vec![RecurrentClass {
                members: (0..pi.len()).collect(),
                pi: pi.clone(),
            }],
            Stationary::Reducible { classes, .. } => classes.clone(),
        }
    }
}

/// Stationary distribution(s) of `chain.p()`, from `P` alone.
pub fn stationary(chain: &BlockChain) -> Result<Stationary> {
    stationary_of(chain.p())
}

pub(crate) fn stationary_of(p: &DMatrix<f64>) -> Result<Stationary> {
    let (classes, transient) = recurrent_classes(p, SUPPORT_EDGE_TOLERANCE);
    let mut solved = Vec::with_capacity(classes.len());
    for members in classes {
        let pi = class_stationary(p, &members)?;
        solved.push(RecurrentClass { members, pi });
    }
    if solved.len() == 1 && transient.is_empty() {
        Ok(Stationary::Irreducible(solved.pop().unwrap().pi))
    } else {
        Ok(Stationary::Reducible {
            classes: solved,
            transient,
        })
    }
}

/// Recurrent classes (closed strongly connected components) of the graph
/// with an edge `i → j` whenever `P_ij > threshold`, and the transient rest.
pub fn recurrent_classes(p: &DMatrix<f64>, threshold: f64) -> (Vec<Vec<usize>>, Vec<usize>) {
    let n = p.nrows();
    let adjacency: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| p[(i, j)] > threshold).collect())
        .collect();
    let reach: Vec<Vec<bool>> = (0..n)
        .map(|start| {
            let mut seen = vec![false; n];
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(v) = stack.pop() {
                for &w in &adjacency[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            seen
        })
        .collect();
    let mut assigned = vec![false; n];
    let mut classes = Vec::new();
    let mut transient = Vec::new();
    for i in 0..n {
        if assigned[i] {
            continue;
        }
        // i is recurrent iff everything it reaches reaches it back.
        let recurrent = (0..n).all(|j| !reach[i][j] || reach[j][i]);
        if recurrent {
            let members: Vec<usize> = (0..n).filter(|&j| reach[i][j]).collect();
            for &m in &members {
                assigned[m] = true;
            }
            classes.push(members);
        } else {
            assigned[i] = true;
            transient.push(i);
        }
    }
    (classes, transient)
}

/// Row-renormalized restriction of `P` to `members`.
pub fn restrict(p: &DMatrix<f64>, members: &[usize]) -> DMatrix<f64> {
    let k = members.len();
    let mut q = DMatrix::from_fn(k, k, |a, b| p[(members[a], members[b])]);
    for mut row in q.row_iter_mut() {
        let s: f64 = row.sum();
        if s > 0.0 {
            row /= s;
        }
    }
    q
}

fn class_stationary(p: &DMatrix<f64>, members: &[usize]) -> Result<DVector<f64>> {
    let q = restrict(p, members);
    let k = members.len();
    if k == 1 {
        return Ok(DVector::from_element(1, 1.0));
    }
    // (Qᵀ − I) π = 0 with the last equation replaced by Σπ = 1.
    let mut a = q.transpose() - DMatrix::identity(k, k);
    for c in 0..k {
        a[(k - 1, c)] = 1.0;
    }
    let mut rhs = DVector::zeros(k);
    rhs[k - 1] = 1.0;
    let pi = a
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NumericDomain("singular stationary system".into()))?;
    let pi = pi.map(|x| x.max(0.0));
    let total = pi.sum();
    Ok(pi / total)
}

/// Chain over sliding windows of the last `n` spins: from window `w` the
/// next spin `s` is emitted with `Pr(s | w) = Σ_{η : η_0 = s} P[w][η]` and
/// the chain moves to `πw·s`.
pub fn window_chain(chain: &BlockChain) -> BlockChain {
    let blocks = chain.blocks().clone();
    let size = blocks.count();
    let mut q = DMatrix::zeros(size, size);
    for w in 0..size {
        for eta in 0..size {
            let s = blocks.first_symbol(eta);
            let next = blocks.shift_append_unchecked(w, s);
            q[(w, next)] += chain.p[(w, eta)];
        }
    }
    BlockChain {
        blocks,
        p: q,
        pi: chain.pi.clone(),
        consistency: None,
    }
}

/// Sliding-window chain for `h` at inverse temperature `beta`.
pub fn spin_window_chain(h: &Hamiltonian, beta: f64) -> Result<BlockChain> {
    let ts = TransferSystem::build(h, beta)?;
    Ok(window_chain(&solve_stochastic(&ts)?))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::SpinAlphabet;
    use approx::assert_relative_eq;

    const DN: usize = 0;
    const UP: usize = 1;

    fn nn(j: f64, b: f64) -> Hamiltonian {
        Hamiltonian::product_form(SpinAlphabet::binary(), b, &[j]).unwrap()
    }

    fn nnn(j1: f64, j2: f64, b: f64) -> Hamiltonian {
        Hamiltonian::product_form(SpinAlphabet::binary(), b, &[j1, j2]).unwrap()
    }

    /// βJ with e^{2βJ} = 3.
    fn beta_j_ln3() -> f64 {
        0.5 * 3f64.ln()
    }

    #[test]
    fn nn_local_characteristics_examples() {
        let ts = TransferSystem::build(&nn(beta_j_ln3(), 0.0), 1.0).unwrap();
        let lc = local_characteristics(&ts);
        assert_relative_eq!(lc.interior(DN, DN, DN), 0.9, epsilon = 1e-14);
        assert_relative_eq!(lc.interior(DN, DN, UP), 0.5, epsilon = 1e-14);

        let beta = 0.0;
        let lc = local_characteristics(&TransferSystem::build(&nnn(1.0, -0.5, 0.3), beta).unwrap());
        for j in 0..4 {
            for i in 0..4 {
                for m in 0..4 {
                    assert_relative_eq!(lc.interior(j, i, m), 0.25, epsilon = 1e-15);
                }
            }
        }
    }

    #[test]
    fn interior_rows_normalize() {
        let ts = TransferSystem::build(&nnn(0.8, -1.2, 0.7), 1.7).unwrap();
        let lc = local_characteristics(&ts);
        for j in 0..4 {
            for m in 0..4 {
                let s: f64 = (0..4).map(|i| lc.interior(j, i, m)).sum();
                assert!((s - 1.0).abs() <= 1e-12);
                let f: f64 = (0..4).map(|i| lc.first_block(i, m)).sum();
                assert!((f - 1.0).abs() <= 1e-12);
            }
        }
    }

    #[test]
    fn nn_stochastic_matrix_example() {
        let ts = TransferSystem::build(&nn(beta_j_ln3(), 0.0), 1.0).unwrap();
        let chain = solve_stochastic(&ts).unwrap();
        let expected = [[0.75, 0.25], [0.25, 0.75]];
        for i in 0..2 {
            for j in 0..2 {
                assert_relative_eq!(chain.p()[(i, j)], expected[i][j], epsilon = 1e-14);
            }
        }
        assert_relative_eq!(chain.pi()[0], 0.5, epsilon = 1e-14);
    }

    #[test]
    fn infinite_temperature_is_uniform() {
        let ts = TransferSystem::build(&nnn(0.4, 2.0, -1.0), 0.0).unwrap();
        let chain = solve_stochastic(&ts).unwrap();
        assert!(chain.p().iter().all(|&x| (x - 0.25).abs() < 1e-15));
    }

    #[test]
    fn closure_and_certificate() {
        for (h, beta) in [
            (nn(0.9, -0.4), 1.3),
            (nnn(0.8, -1.2, 0.7), 1.7),
            (nnn(-1.5, 0.4, 2.9), 3.0),
            (nnn(1.0, -1.0, 0.0), 40.0),
        ] {
            let ts = TransferSystem::build(&h, beta).unwrap();
            let chain = solve_stochastic(&ts).unwrap();
            let lc = local_characteristics(&ts);
            let implied = implied_local_characteristics(chain.p());
            let n = chain.size();
            for j in 0..n {
                for i in 0..n {
                    for m in 0..n {
                        assert!((implied.interior(j, i, m) - lc.interior(j, i, m)).abs() <= 1e-10);
                    }
                }
            }
            assert!(chain.consistency().unwrap().max_residual <= CONSISTENCY_TOLERANCE);
            check_stationary(&chain);
        }
    }

    fn check_stationary(chain: &BlockChain) {
        let pi = chain.pi();
        let moved = chain.p().transpose() * pi;
        assert!((pi.sum() - 1.0).abs() < 1e-12);
        for (a, b) in moved.iter().zip(pi.iter()) {
            assert!((a - b).abs() <= STOCHASTIC_TOLERANCE, "{a} vs {b}");
        }
        for row in chain.p().row_iter() {
            assert!((row.sum() - 1.0).abs() <= STOCHASTIC_TOLERANCE);
        }
    }

    #[test]
    fn stationary_examples() {
        let blocks = BlockSpace::new(SpinAlphabet::binary(), 1).unwrap();
        let p = DMatrix::from_row_slice(2, 2, &[0.75, 0.25, 0.25, 0.75]);
        let chain = BlockChain::from_matrix(blocks.clone(), p).unwrap();
        match stationary(&chain).unwrap() {
            Stationary::Irreducible(pi) => {
                assert_relative_eq!(pi[0], 0.5, epsilon = 1e-14);
                assert_relative_eq!(pi[1], 0.5, epsilon = 1e-14);
            }
            other => panic!("expected irreducible, got {other:?}"),
        }

        let id = BlockChain::from_matrix(blocks, DMatrix::identity(2, 2)).unwrap();
        match stationary(&id).unwrap() {
            Stationary::Reducible { classes, transient } => {
                assert_eq!(classes.len(), 2);
                assert!(transient.is_empty());
                assert_eq!(classes[0].members, vec![0]);
                assert_eq!(classes[1].members, vec![1]);
            }
            other => panic!("expected reducible, got {other:?}"),
        }
    }

    #[test]
    fn field_only_stationary_matches_spectral() {
        let (beta, b) = (0.9, 0.6);
        let chain = solve_stochastic(&TransferSystem::build(&nn(0.0, b), beta).unwrap()).unwrap();
        let r = (2.0 * beta * b).exp() / (1.0 + (2.0 * beta * b).exp());
        assert_relative_eq!(chain.pi()[UP], r, epsilon = 1e-14);
        match stationary(&chain).unwrap() {
            Stationary::Irreducible(pi) => assert_relative_eq!(pi[UP], r, epsilon = 1e-12),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn transient_blocks_are_reported() {
        let blocks = BlockSpace::new(SpinAlphabet::new(vec![0.0, 1.0, 2.0]).unwrap(), 1).unwrap();
        let p = DMatrix::from_row_slice(3, 3, &[0.5, 0.5, 0.0, 0.0, 1.0, 0.0, 0.2, 0.3, 0.5]);
        let chain = BlockChain::from_matrix(blocks, p).unwrap();
        match stationary(&chain).unwrap() {
            Stationary::Reducible { classes, transient } => {
                assert_eq!(classes.len(), 1);
                assert_eq!(classes[0].members, vec![1]);
                assert_eq!(transient, vec![0, 2]);
            }
            other => panic!("{other:?}"),
        }
        assert_relative_eq!(chain.pi()[1], 1.0);
    }

    #[test]
    fn window_chain_for_range_one_is_identity_map() {
        let chain = solve_stochastic(&TransferSystem::build(&nn(0.3, 0.2), 1.0).unwrap()).unwrap();
        let windows = window_chain(&chain);
        assert_eq!(windows.p(), chain.p());
    }

    #[test]
    fn window_chain_aggregates_to_block_chain() {
        for (j1, j2, b, beta) in [
            (0.8, -1.2, 0.7, 1.7),
            (-0.4, 0.9, -0.2, 0.6),
            (1.1, 0.3, 1.5, 2.2),
        ] {
            let chain =
                solve_stochastic(&TransferSystem::build(&nnn(j1, j2, b), beta).unwrap()).unwrap();
            let windows = window_chain(&chain);
            let q2 = windows.p() * windows.p();
            for (a, c) in q2.iter().zip(chain.p().iter()) {
                assert!((a - c).abs() <= 1e-9, "{a} vs {c}");
            }
            check_stationary(&windows);
        }
    }

    #[test]
    fn window_chain_agrees_with_single_spin_transfer_matrix() {
        // Independent route: a transfer matrix over windows that appends one
        // spin at a time, built straight from the pair couplings.
        let h = nnn(0.6, -0.9, 0.4);
        let beta = 1.3;
        let blocks = h.blocks().clone();
        let size = blocks.count();
        let log_w = DMatrix::from_fn(size, size, |w, next| {
            let spins = blocks.decode(w).unwrap();
            let s = blocks.last_symbol(next);
            if blocks.shift_append(w, s).unwrap() != next {
                return f64::NEG_INFINITY;
            }
            let val = |k: usize| blocks.alphabet().value(k);
            let mut e = -h.field() * val(s);
            for (d, &prior) in spins.iter().rev().enumerate() {
                e += h.coupling(d + 1, prior, s);
            }
            -beta * e
        });
        // Dominant right eigenvector of the sparse window matrix by power
        // iteration (it is primitive after n steps).
        let w = log_w.map(f64::exp);
        let mut r = DVector::from_element(size, 1.0);
        for _ in 0..5000 {
            r = &w * &r;
            let m = r.max();
            r /= m;
        }
        let lambda = (&w * &r)[0] / r[0];
        let expected = DMatrix::from_fn(size, size, |a, c| w[(a, c)] * r[c] / (lambda * r[a]));
        let windows = spin_window_chain(&h, beta).unwrap();
        for (a, c) in windows.p().iter().zip(expected.iter()) {
            assert!((a - c).abs() <= 1e-10, "{a} vs {c}");
        }
    }

    #[test]
    fn from_matrix_rejects_non_stochastic() {
        let blocks = BlockSpace::new(SpinAlphabet::binary(), 1).unwrap();
        let p = DMatrix::from_row_slice(2, 2, &[0.7, 0.2, 0.5, 0.5]);
        assert!(BlockChain::from_matrix(blocks, p).is_err());
    }
}

//! Causal states, unifilar transition matrices and information measures.
//!
//! Block level: a block chain is Markov of order one, so two blocks are
//! causally equivalent exactly when their rows of `P` coincide. Spin level:
//! states are sliding windows of `n` spins emitting one spin at a time; two
//! windows are equivalent when their emission rows coincide and every
//! emitted spin leads to equivalent windows, found by partition refinement.
//!
//! Chains that split into several recurrent classes (ground states) are
//! analysed per class and as an ensemble weighting each class by its
//! stationary mass. Rows from different classes have disjoint supports, so
//! ensemble causal states never straddle classes.
//!
//! All entropies are in bits.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::Hamiltonian;
use crate::lattice::BlockSpace;
use crate::logspace::entropy_bits;
use crate::markov::{self, BlockChain, Stationary, SUPPORT_EDGE_TOLERANCE};
use crate::transfer::TransferSystem;

/// Max-norm distance below which two emission rows are the same state.
pub const DEFAULT_MERGE_TOLERANCE: f64 = 1e-9;

/// `|E_μ − E_paper|` above this marks the two excess entropies as divergent.
pub const DIVERGENCE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Level {
    Block,
    Spin,
}

/// Partition of recurrent blocks (or windows) into causal states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CausalPartition {
    /// Causal state of each block; `None` for transient blocks.
    pub state_of: Vec<Option<usize>>,
    /// Member blocks of each state, ascending, states ordered by first member.
    pub states: Vec<Vec<usize>>,
    /// `Pr(C_p) = Σ_{η ∈ C_p} π_η`.
    pub probs: Vec<f64>,
    /// Recurrent class of each state.
    pub class_of_state: Vec<usize>,
}

impl CausalPartition {
    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }
}

/// Unifilar presentation over causal states.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Machine {
    pub level: Level,
    pub partition: CausalPartition,
    /// Rendering of each emitted symbol (a block or a single spin).
    pub symbols: Vec<String>,
    /// Rendering of each underlying block or window, by global id.
    pub member_names: Vec<String>,
    /// `Pr(symbol | C)`, one row per state.
    pub emissions: Vec<Vec<f64>>,
    /// Successor state after emitting a symbol, where that symbol can occur.
    pub successors: Vec<Vec<Option<usize>>>,
    /// Stationary weight of each recurrent class.
    pub class_weights: Vec<f64>,
}

/// Labeled matrices `T^{(x)}[r][q] = Pr(C_r →x C_q)` and their sum `T`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransitionMatrices {
    pub labeled: Vec<DMatrix<f64>>,
    pub connectivity: DMatrix<f64>,
}

impl Machine {
    pub fn n_states(&self) -> usize {
        self.partition.len()
    }

    pub fn transition_matrices(&self) -> TransitionMatrices {
        let k = self.n_states();
        let mut labeled = vec![DMatrix::zeros(k, k); self.symbols.len()];
        for r in 0..k {
            for (x, m) in labeled.iter_mut().enumerate() {
                if let Some(q) = self.successors[r][x] {
                    m[(r, q)] = self.emissions[r][x];
                }
            }
        }
        let connectivity = labeled.iter().fold(DMatrix::zeros(k, k), |acc, m| acc + m);
        TransitionMatrices {
            labeled,
            connectivity,
        }
    }

    /// States belonging to one recurrent class.
    pub fn states_of_class(&self, class: usize) -> Vec<usize> {
        (0..self.n_states())
            .filter(|&s| self.partition.class_of_state[s] == class)
            .collect()
    }
}

/// Measures for one recurrent class (or the ensemble) at one level.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub members: Vec<usize>,
    pub weight: f64,
    pub n_states: usize,
    pub c_mu: f64,
    /// Per emitted symbol (block or spin).
    pub h_mu: f64,
    /// Mutual information between past and future.
    pub e_mu: f64,
    /// `C_μ − h_μ` (block) or `C′_μ − n h′_μ` (spin).
    pub e_paper: f64,
}

/// Headline measures. Block-level entropies are per block, spin-level per
/// spin; everything in bits.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MachineMetrics {
    pub c_mu: f64,
    pub h_mu: f64,
    pub e_mu: f64,
    pub e_paper: f64,
    pub h_block: f64,
    pub n_states: usize,
    pub c_mu_spin: f64,
    pub h_mu_spin: f64,
    pub e_spin: f64,
    pub n_spin_states: usize,
    /// `E_μ` and `E_paper` disagree beyond [`DIVERGENCE_TOLERANCE`].
    pub e_divergent: bool,
}

impl MachineMetrics {
    /// Entropic fields rescaled by `factor` (e.g. `ln 2` for nats).
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            c_mu: self.c_mu * factor,
            h_mu: self.h_mu * factor,
            e_mu: self.e_mu * factor,
            e_paper: self.e_paper * factor,
            h_block: self.h_block * factor,
            c_mu_spin: self.c_mu_spin * factor,
            h_mu_spin: self.h_mu_spin * factor,
            e_spin: self.e_spin * factor,
            ..*self
        }
    }
}

/// Full result for one chain.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MachineAnalysis {
    pub metrics: MachineMetrics,
    pub block_machine: Machine,
    pub spin_machine: Machine,
    pub block_classes: Vec<ClassMetrics>,
    pub spin_classes: Vec<ClassMetrics>,
}

impl MachineAnalysis {
    pub fn n_classes(&self) -> usize {
        self.block_classes.len()
    }

    pub fn is_reducible(&self) -> bool {
        self.block_classes.len() > 1
            || self
                .block_classes
                .iter()
                .map(|c| c.members.len())
                .sum::<usize>()
                < self.block_machine.partition.state_of.len()
    }
}

/// Recurrent classes with their in-class stationary vectors and ensemble
/// weights taken from `chain.pi()`.
struct ClassView {
    members: Vec<usize>,
    pi: DVector<f64>,
    weight: f64,
}

fn class_views(p: &DMatrix<f64>, pi: &DVector<f64>) -> Result<Vec<ClassView>> {
    let classes = match markov::stationary_of(p)? {
        Stationary::Irreducible(_) => {
            return Ok(vec![ClassView {
                members: (0..p.nrows()).collect(),
                pi: pi.clone(),
                weight: 1.0,
            }])
        }
        Stationary::Reducible { classes, .. } => classes,
    };
    let masses: Vec<f64> = classes
        .iter()
        .map(|c| c.members.iter().map(|&b| pi[b]).sum::<f64>())
        .collect();
    let total: f64 = masses.iter().sum();
    let uniform = 1.0 / classes.len() as f64;
    Ok(classes
        .into_iter()
        .zip(masses)
        .map(|(c, m)| ClassView {
            members: c.members,
            pi: c.pi,
            weight: if total > 0.0 { m / total } else { uniform },
        })
        .collect())
}

/// Emission-based presentation of a chain, restricted to recurrent states.
struct Presentation {
    level: Level,
    /// Global state ids, grouped by class.
    members: Vec<usize>,
    class_of_member: Vec<usize>,
    /// Ensemble stationary weight of each member.
    weights: Vec<f64>,
    /// Stationary weight of each member within its own class.
    class_pi: Vec<f64>,
    /// `emit[k][x]` for member `k`, symbol `x`.
    emit: Vec<Vec<f64>>,
    /// Global successor state of member `k` after symbol `x`.
    next: Vec<Vec<usize>>,
    symbols: Vec<String>,
    member_names: Vec<String>,
    n_global: usize,
    class_weights: Vec<f64>,
}

impl Presentation {
    fn blocks(chain: &BlockChain) -> Result<(Self, Vec<ClassView>)> {
        let p = chain.p();
        let views = class_views(p, chain.pi())?;
        let size = chain.size();
        let mut pres = Presentation {
            level: Level::Block,
            members: Vec::new(),
            class_of_member: Vec::new(),
            weights: Vec::new(),
            class_pi: Vec::new(),
            emit: Vec::new(),
            next: Vec::new(),
            symbols: (0..size).map(|b| chain.blocks().render(b)).collect(),
            member_names: (0..size).map(|b| chain.blocks().render(b)).collect(),
            n_global: size,
            class_weights: views.iter().map(|v| v.weight).collect(),
        };
        for (c, view) in views.iter().enumerate() {
            let restricted = markov::restrict(p, &view.members);
            for (a, &b) in view.members.iter().enumerate() {
                let mut row = vec![0.0; size];
                for (k, &m) in view.members.iter().enumerate() {
                    row[m] = restricted[(a, k)];
                }
                pres.members.push(b);
                pres.class_of_member.push(c);
                pres.weights.push(view.weight * view.pi[a]);
                pres.class_pi.push(view.pi[a]);
                pres.emit.push(row);
                pres.next.push((0..size).collect());
            }
        }
        Ok((pres, views))
    }

    fn spins(windows: &BlockChain) -> Result<(Self, Vec<ClassView>)> {
        let q = windows.p();
        let blocks: &BlockSpace = windows.blocks();
        let theta = blocks.theta();
        let views = class_views(q, windows.pi())?;
        let mut pres = Presentation {
            level: Level::Spin,
            members: Vec::new(),
            class_of_member: Vec::new(),
            weights: Vec::new(),
            class_pi: Vec::new(),
            emit: Vec::new(),
            next: Vec::new(),
            symbols: (0..theta)
                .map(|s| blocks.alphabet().symbol_char(s).to_string())
                .collect(),
            member_names: (0..windows.size()).map(|w| blocks.render(w)).collect(),
            n_global: windows.size(),
            class_weights: views.iter().map(|v| v.weight).collect(),
        };
        for (c, view) in views.iter().enumerate() {
            let restricted = markov::restrict(q, &view.members);
            let local: BTreeMap<usize, usize> = view
                .members
                .iter()
                .enumerate()
                .map(|(a, &w)| (w, a))
                .collect();
            for (a, &w) in view.members.iter().enumerate() {
                let next: Vec<usize> = (0..theta)
                    .map(|s| blocks.shift_append_unchecked(w, s))
                    .collect();
                let emit = next
                    .iter()
                    .map(|n| local.get(n).map_or(0.0, |&k| restricted[(a, k)]))
                    .collect();
                pres.members.push(w);
                pres.class_of_member.push(c);
                pres.weights.push(view.weight * view.pi[a]);
                pres.class_pi.push(view.pi[a]);
                pres.emit.push(emit);
                pres.next.push(next);
            }
        }
        Ok((pres, views))
    }

    /// Groups members by emission rows, then refines by successor states.
    fn partition(&self, tol: f64) -> Result<Machine> {
        let k = self.members.len();
        let mut label = cluster_rows(&self.emit, &self.class_of_member, tol)?;
        let mut local_of = vec![usize::MAX; self.n_global];
        for (a, &g) in self.members.iter().enumerate() {
            local_of[g] = a;
        }
        loop {
            let mut keys: BTreeMap<(usize, Vec<Option<usize>>), usize> = BTreeMap::new();
            let mut relabel = vec![0; k];
            for a in 0..k {
                let signature = (0..self.symbols.len())
                    .map(|x| {
                        if self.emit[a][x] > SUPPORT_EDGE_TOLERANCE {
                            let l = local_of[self.next[a][x]];
                            (l != usize::MAX).then(|| label[l])
                        } else {
                            None
                        }
                    })
                    .collect();
                let fresh = keys.len();
                relabel[a] = *keys.entry((label[a], signature)).or_insert(fresh);
            }
            let before = label
                .iter()
                .copied()
                .collect::<std::collections::BTreeSet<_>>()
                .len();
            label = relabel;
            if keys.len() == before {
                break;
            }
        }
        self.assemble(&label, &local_of)
    }

    fn assemble(&self, label: &[usize], local_of: &[usize]) -> Result<Machine> {
        // Canonical order: by smallest member global id.
        let mut groups: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
        for (a, &l) in label.iter().enumerate() {
            groups.entry(l).or_default().push(a);
        }
        let mut groups: Vec<Vec<usize>> = groups.into_values().collect();
        for g in &mut groups {
            g.sort_by_key(|&a| self.members[a]);
        }
        groups.sort_by_key(|g| self.members[g[0]]);

        let mut state_of_local = vec![0; label.len()];
        for (s, g) in groups.iter().enumerate() {
            for &a in g {
                state_of_local[a] = s;
            }
        }
        let mut state_of = vec![None; self.n_global];
        for (a, &g) in self.members.iter().enumerate() {
            state_of[g] = Some(state_of_local[a]);
        }
        let n_symbols = self.symbols.len();
        let mut probs = Vec::with_capacity(groups.len());
        let mut emissions = Vec::with_capacity(groups.len());
        let mut successors = Vec::with_capacity(groups.len());
        for (s, g) in groups.iter().enumerate() {
            let mass: f64 = g.iter().map(|&a| self.weights[a]).sum();
            probs.push(mass);
            let row: Vec<f64> = (0..n_symbols)
                .map(|x| {
                    if mass > 0.0 {
                        g.iter()
                            .map(|&a| self.weights[a] * self.emit[a][x])
                            .sum::<f64>()
                            / mass
                    } else {
                        let local: f64 = g.iter().map(|&a| self.class_pi[a]).sum();
                        g.iter()
                            .map(|&a| self.class_pi[a] * self.emit[a][x])
                            .sum::<f64>()
                            / local
                    }
                })
                .collect();
            let mut succ = vec![None; n_symbols];
            for x in 0..n_symbols {
                for &a in g {
                    if self.emit[a][x] <= SUPPORT_EDGE_TOLERANCE {
                        continue;
                    }
                    let l = local_of[self.next[a][x]];
                    if l == usize::MAX {
                        continue;
                    }
                    let target = state_of_local[l];
                    match succ[x] {
                        None => succ[x] = Some(target),
                        Some(t) if t == target => {}
                        Some(_) => {
                            return Err(Error::Unifilarity {
                                state: s,
                                symbol: x,
                            })
                        }
                    }
                }
            }
            emissions.push(row);
            successors.push(succ);
        }
        let total: f64 = probs.iter().sum();
        if total > 0.0 {
            for p in &mut probs {
                *p /= total;
            }
        }
        let class_of_state = groups.iter().map(|g| self.class_of_member[g[0]]).collect();
        let states = groups
            .iter()
            .map(|g| g.iter().map(|&a| self.members[a]).collect())
            .collect();
        Ok(Machine {
            level: self.level,
            partition: CausalPartition {
                state_of,
                states,
                probs,
                class_of_state,
            },
            symbols: self.symbols.clone(),
            member_names: self.member_names.clone(),
            emissions,
            successors,
            class_weights: self.class_weights.clone(),
        })
    }

    /// `Σ_k w_k H(emit_k)`: entropy per emitted symbol.
    fn entropy_rate(&self, members: impl Iterator<Item = usize>) -> f64 {
        members
            .map(|a| self.weights[a] * entropy_bits(self.emit[a].iter().copied()))
            .sum()
    }
}

/// Union-find over rows within `tol` (max-norm, same class only), followed
/// by a check that every resulting cluster is a clique.
fn cluster_rows(rows: &[Vec<f64>], class: &[usize], tol: f64) -> Result<Vec<usize>> {
    let k = rows.len();
    let close = |a: usize, b: usize| {
        class[a] == class[b]
            && rows[a]
                .iter()
                .zip(&rows[b])
                .all(|(x, y)| (x - y).abs() <= tol)
    };
    let mut parent: Vec<usize> = (0..k).collect();
    fn find(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    let mut adjacency = vec![Vec::new(); k];
    for a in 0..k {
        for b in a + 1..k {
            if close(a, b) {
                adjacency[a].push(b);
                adjacency[b].push(a);
                let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
                if ra != rb {
                    parent[ra.max(rb)] = ra.min(rb);
                }
            }
        }
    }
    let label: Vec<usize> = (0..k).map(|a| find(&mut parent, a)).collect();
    for a in 0..k {
        for c in a + 1..k {
            if label[a] == label[c] && !close(a, c) {
                let (x, y) = break_point(&adjacency, &close, a, c);
                return Err(Error::PartitionAmbiguity { tol, a, b: x, c: y });
            }
        }
    }
    Ok(label)
}

/// On a path `a → … → c` of close pairs, the first `(v_t, v_{t+1})` with
/// `v_t ~ a` but `v_{t+1} !~ a`.
fn break_point(
    adjacency: &[Vec<usize>],
    close: &dyn Fn(usize, usize) -> bool,
    a: usize,
    c: usize,
) -> (usize, usize) {
    let mut prev = vec![usize::MAX; adjacency.len()];
    let mut queue = std::collections::VecDeque::from([a]);
    prev[a] = a;
    while let Some(v) = queue.pop_front() {
        if v == c {
            break;
        }
        for &w in &adjacency[v] {
            if prev[w] == usize::MAX {
                prev[w] = v;
                queue.push_back(w);
            }
        }
    }
    let mut path = vec![c];
    while *path.last().unwrap() != a {
        path.push(prev[*path.last().unwrap()]);
    }
    path.reverse();
    for t in 1..path.len() {
        if !close(a, path[t]) {
            return (path[t - 1], path[t]);
        }
    }
    (a, c)
}

/// Block-level causal partition; reducible chains are partitioned per
/// recurrent class.
pub fn build_partition(chain: &BlockChain, tol: f64) -> Result<CausalPartition> {
    let (pres, _) = Presentation::blocks(chain)?;
    Ok(pres.partition(tol)?.partition)
}

/// `C_μ = −Σ Pr(C) log₂ Pr(C)`.
pub fn statistical_complexity(partition: &CausalPartition) -> f64 {
    entropy_bits(partition.probs.iter().copied())
}

/// `h_μ = −Σ_j π_j Σ_i P_ji log₂ P_ji`, per block.
pub fn entropy_density(chain: &BlockChain) -> Result<f64> {
    let (pres, _) = Presentation::blocks(chain)?;
    Ok(pres.entropy_rate(0..pres.members.len()))
}

/// `(E_μ, E_paper)` with `E_μ = H[η] − h_μ` and `E_paper = C_μ − h_μ`.
pub fn excess_entropy(chain: &BlockChain, partition: &CausalPartition) -> Result<(f64, f64)> {
    let (pres, _) = Presentation::blocks(chain)?;
    let all: Vec<usize> = (0..pres.members.len()).collect();
    let h = pres.entropy_rate(all.iter().copied());
    Ok((
        block_mutual_information(&pres, &all, &pres.weights),
        statistical_complexity(partition) - h,
    ))
}

/// Labeled block-emission matrices over the causal states of `partition`.
pub fn transition_matrices(
    chain: &BlockChain,
    partition: &CausalPartition,
) -> Result<TransitionMatrices> {
    let (pres, _) = Presentation::blocks(chain)?;
    let mut local_of = vec![usize::MAX; pres.n_global];
    for (a, &g) in pres.members.iter().enumerate() {
        local_of[g] = a;
    }
    let label: Vec<usize> = pres
        .members
        .iter()
        .map(|&g| {
            partition.state_of[g].ok_or_else(|| {
                Error::NumericDomain(format!("block {g} is recurrent but has no causal state"))
            })
        })
        .collect::<Result<_>>()?;
    Ok(pres.assemble(&label, &local_of)?.transition_matrices())
}

fn level_metrics(
    pres: &Presentation,
    machine: &Machine,
    views: &[ClassView],
    range: usize,
) -> (ClassMetrics, Vec<ClassMetrics>) {
    let scale = match pres.level {
        Level::Block => 1.0,
        Level::Spin => range as f64,
    };
    // `w[a]` is the stationary weight of member `idx[a]`, summing to one.
    let summarize = |members: Vec<usize>, idx: &[usize], w: &[f64], weight: f64| {
        let mut state_mass = BTreeMap::new();
        for (&a, &wa) in idx.iter().zip(w) {
            let s =
                machine.partition.state_of[pres.members[a]].expect("recurrent member has a state");
            *state_mass.entry(s).or_insert(0.0) += wa;
        }
        let h: f64 = idx
            .iter()
            .zip(w)
            .map(|(&a, &wa)| wa * entropy_bits(pres.emit[a].iter().copied()))
            .sum();
        let h_block = entropy_bits(w.iter().copied());
        let c = entropy_bits(state_mass.values().copied());
        let e_mu = match pres.level {
            Level::Block => block_mutual_information(pres, idx, w),
            Level::Spin => h_block - scale * h,
        };
        ClassMetrics {
            members,
            weight,
            n_states: state_mass.len(),
            c_mu: c,
            h_mu: h,
            e_mu,
            e_paper: c - scale * h,
        }
    };
    let classes = views
        .iter()
        .enumerate()
        .map(|(c, view)| {
            let idx: Vec<usize> = (0..pres.members.len())
                .filter(|&a| pres.class_of_member[a] == c)
                .collect();
            let w: Vec<f64> = idx.iter().map(|&a| pres.class_pi[a]).collect();
            summarize(view.members.clone(), &idx, &w, view.weight)
        })
        .collect();
    let all: Vec<usize> = (0..pres.members.len()).collect();
    let ensemble = summarize(pres.members.clone(), &all, &pres.weights, 1.0);
    (ensemble, classes)
}

/// `H[η] − h_μ` of a block presentation, evaluated as the mutual
/// information `Σ_ab π_a π_b φ(P_ab/π_b)` with `φ(x) = x ln x − x + 1 ≥ 0`,
/// so that nearly independent blocks give a small nonnegative value instead
/// of a difference of two nearly equal entropies.
fn block_mutual_information(pres: &Presentation, idx: &[usize], w: &[f64]) -> f64 {
    let mut weight_of = vec![0.0; pres.n_global];
    for (&a, &wa) in idx.iter().zip(w) {
        weight_of[pres.members[a]] = wa;
    }
    let mut nats = 0.0;
    for (&a, &wa) in idx.iter().zip(w) {
        if wa <= 0.0 {
            continue;
        }
        for (b, &pab) in pres.emit[a].iter().enumerate() {
            let wb = weight_of[pres.next[a][b]];
            if wb > 0.0 {
                nats += wa * wb * phi(pab / wb);
            }
        }
    }
    nats / std::f64::consts::LN_2
}

fn phi(x: f64) -> f64 {
    let d = x - 1.0;
    if d.abs() < 1e-2 {
        // Σ_{k≥2} (−d)^k / (k(k−1)); twelve terms reach machine precision.
        let mut term = d * d;
        let mut sum = 0.0;
        for k in 2..14 {
            sum += term / (k * (k - 1)) as f64;
            term *= -d;
        }
        sum
    } else if x == 0.0 {
        1.0
    } else {
        x * x.ln() - x + 1.0
    }
}

/// Causal states and measures at both levels for a block chain.
pub fn analyze_block_chain(chain: &BlockChain, tol: f64) -> Result<MachineAnalysis> {
    let range = chain.blocks().range();
    let (block_pres, block_views) = Presentation::blocks(chain)?;
    let block_machine = block_pres.partition(tol)?;
    let (block, block_classes) = level_metrics(&block_pres, &block_machine, &block_views, range);

    let windows = markov::window_chain(chain);
    let (spin_pres, spin_views) = Presentation::spins(&windows)?;
    let spin_machine = spin_pres.partition(tol)?;
    let (spin, spin_classes) = level_metrics(&spin_pres, &spin_machine, &spin_views, range);

    let h_block = block.e_mu + block.h_mu;
    let metrics = MachineMetrics {
        c_mu: block.c_mu,
        h_mu: block.h_mu,
        e_mu: block.e_mu,
        e_paper: block.e_paper,
        h_block,
        n_states: block.n_states,
        c_mu_spin: spin.c_mu,
        h_mu_spin: spin.h_mu,
        e_spin: spin.e_paper,
        n_spin_states: spin.n_states,
        e_divergent: (block.e_mu - block.e_paper).abs() > DIVERGENCE_TOLERANCE,
    };
    Ok(MachineAnalysis {
        metrics,
        block_machine,
        spin_machine,
        block_classes,
        spin_classes,
    })
}

/// Spin-level measures `(C′_μ, h′_μ, E′)` and the single-spin machine.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpinMachine {
    pub c_mu: f64,
    pub h_mu: f64,
    pub e: f64,
    pub machine: Machine,
}

pub fn spin_machine(h: &Hamiltonian, beta: f64) -> Result<SpinMachine> {
    let ts = TransferSystem::build(h, beta)?;
    let chain = markov::solve_stochastic(&ts)?;
    spin_machine_of(&chain, DEFAULT_MERGE_TOLERANCE)
}

pub fn spin_machine_of(chain: &BlockChain, tol: f64) -> Result<SpinMachine> {
    let windows = markov::window_chain(chain);
    let (pres, views) = Presentation::spins(&windows)?;
    let machine = pres.partition(tol)?;
    let (spin, _) = level_metrics(&pres, &machine, &views, chain.blocks().range());
    Ok(SpinMachine {
        c_mu: spin.c_mu,
        h_mu: spin.h_mu,
        e: spin.e_paper,
        machine,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::SpinAlphabet;
    use approx::assert_relative_eq;

    fn binary(n: usize) -> BlockSpace {
        BlockSpace::new(SpinAlphabet::binary(), n).unwrap()
    }

    fn chain(p: &[f64]) -> BlockChain {
        let size = (p.len() as f64).sqrt() as usize;
        let n = size.trailing_zeros() as usize;
        BlockChain::from_matrix(binary(n), DMatrix::from_row_slice(size, size, p)).unwrap()
    }

    fn h2(p: f64) -> f64 {
        entropy_bits([p, 1.0 - p])
    }

    fn nnn(j1: f64, j2: f64, b: f64) -> Hamiltonian {
        Hamiltonian::product_form(SpinAlphabet::binary(), b, &[j1, j2]).unwrap()
    }

    #[test]
    fn phi_series_matches_direct_form() {
        for x in [0.98, 0.995, 1.0 - 1e-6, 1.0, 1.0 + 1e-6, 1.005, 1.02] {
            let direct = x * f64::ln(x) - x + 1.0;
            assert!((phi(x) - direct).abs() < 1e-15, "{x}");
            assert!(phi(x) >= 0.0);
        }
        assert_eq!(phi(0.0), 1.0);
    }

    #[test]
    fn nearly_independent_blocks_have_nonnegative_excess_entropy() {
        for d in [1e-6, 1e-9, 1e-12] {
            let c = chain(&[0.5 + d, 0.5 - d, 0.5 - d, 0.5 + d]);
            let a = analyze_block_chain(&c, 0.0).unwrap();
            let expected = 2.0 * d * d / std::f64::consts::LN_2;
            assert!(a.metrics.e_mu >= 0.0);
            assert_relative_eq!(a.metrics.e_mu, expected, max_relative = 1e-6);
        }
    }

    #[test]
    fn unweighted_class_keeps_its_own_metrics() {
        // Degenerate period-4 ground state: the spectral solution gives all
        // stationary mass to one phase, the other is still a closed class.
        let ts = TransferSystem::ground_state(&nnn(-2.0, -1.8, 0.0)).unwrap();
        let chain = markov::solve_stochastic(&ts).unwrap();
        let a = analyze_block_chain(&chain, DEFAULT_MERGE_TOLERANCE).unwrap();
        for class in &a.block_classes {
            assert_eq!(class.n_states, 2);
            assert!((class.c_mu - 1.0).abs() < 1e-9);
            assert!((class.e_mu - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn two_state_nn_machine() {
        let c = chain(&[0.75, 0.25, 0.25, 0.75]);
        let part = build_partition(&c, DEFAULT_MERGE_TOLERANCE).unwrap();
        assert_eq!(part.len(), 2);
        assert_relative_eq!(part.probs[0], 0.5, epsilon = 1e-14);
        assert_relative_eq!(statistical_complexity(&part), 1.0, epsilon = 1e-14);
        let h = entropy_density(&c).unwrap();
        assert_relative_eq!(h, 0.811_278_124_459_132_8, epsilon = 1e-14);
        let (e, e_paper) = excess_entropy(&c, &part).unwrap();
        assert_relative_eq!(e, 1.0 - h2(0.75), epsilon = 1e-14);
        assert_relative_eq!(e_paper, e, epsilon = 1e-14);
        assert_relative_eq!(e, 0.18872, epsilon = 1e-5);
    }

    #[test]
    fn identical_rows_merge() {
        let c = chain(&[0.5, 0.5, 0.5, 0.5]);
        let part = build_partition(&c, DEFAULT_MERGE_TOLERANCE).unwrap();
        assert_eq!(part.len(), 1);
        assert_eq!(part.probs, vec![1.0]);
        assert_eq!(statistical_complexity(&part), 0.0);
        assert_relative_eq!(entropy_density(&c).unwrap(), 1.0);
        let (e, e_paper) = excess_entropy(&c, &part).unwrap();
        assert_relative_eq!(e, 0.0, epsilon = 1e-15);
        assert_relative_eq!(e_paper, -1.0, epsilon = 1e-15);
        let a = analyze_block_chain(&c, DEFAULT_MERGE_TOLERANCE).unwrap();
        assert!(a.metrics.e_divergent);
    }

    #[test]
    fn uniform_three_state_complexity() {
        let part = CausalPartition {
            state_of: vec![Some(0), Some(1), Some(2)],
            states: vec![vec![0], vec![1], vec![2]],
            probs: vec![1.0 / 3.0; 3],
            class_of_state: vec![0; 3],
        };
        assert_relative_eq!(statistical_complexity(&part), 3f64.log2(), epsilon = 1e-14);
    }

    #[test]
    fn deterministic_cycle_has_zero_rate() {
        let blocks = BlockSpace::new(SpinAlphabet::new(vec![0.0, 1.0, 2.0]).unwrap(), 1).unwrap();
        let p = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0]);
        let c = BlockChain::from_matrix(blocks, p).unwrap();
        assert_eq!(entropy_density(&c).unwrap(), 0.0);
        let a = analyze_block_chain(&c, DEFAULT_MERGE_TOLERANCE).unwrap();
        assert_eq!(a.metrics.n_states, 3);
        assert_relative_eq!(a.metrics.e_mu, 3f64.log2(), epsilon = 1e-12);
    }

    #[test]
    fn transition_matrices_are_unifilar_and_stochastic() {
        let c = chain(&[0.75, 0.25, 0.25, 0.75]);
        let part = build_partition(&c, DEFAULT_MERGE_TOLERANCE).unwrap();
        let t = transition_matrices(&c, &part).unwrap();
        for m in &t.labeled {
            for row in m.row_iter() {
                assert_eq!(row.iter().filter(|&&x| x > 0.0).count(), 1);
            }
        }
        for row in t.connectivity.row_iter() {
            assert!((row.sum() - 1.0).abs() <= 1e-12);
        }

        let free = chain(&[0.5, 0.5, 0.5, 0.5]);
        let part = build_partition(&free, DEFAULT_MERGE_TOLERANCE).unwrap();
        let t = transition_matrices(&free, &part).unwrap();
        assert_eq!(t.connectivity, DMatrix::from_element(1, 1, 1.0));
        assert!(t.labeled.iter().all(|m| m[(0, 0)] == 0.5));
    }

    #[test]
    fn ambiguous_tolerance_is_an_error() {
        let blocks = BlockSpace::new(SpinAlphabet::new(vec![0.0, 1.0, 2.0]).unwrap(), 1).unwrap();
        let d = 0.6e-9;
        let p = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.4,
                0.4,
                0.2,
                0.4 - d,
                0.4 + d,
                0.2,
                0.4 - 2.0 * d,
                0.4 + 2.0 * d,
                0.2,
            ],
        );
        let c = BlockChain::with_stationary(blocks, p, DVector::from_element(3, 1.0)).unwrap();
        match build_partition(&c, DEFAULT_MERGE_TOLERANCE) {
            Err(Error::PartitionAmbiguity { a, b, c, .. }) => {
                assert_eq!((a, b, c), (0, 1, 2));
            }
            other => panic!("expected ambiguity, got {other:?}"),
        }
    }

    #[test]
    fn ferromagnetic_limit_is_two_single_state_classes() {
        let blocks = binary(1);
        let c = BlockChain::with_stationary(
            blocks,
            DMatrix::identity(2, 2),
            DVector::from_vec(vec![0.5, 0.5]),
        )
        .unwrap();
        let a = analyze_block_chain(&c, DEFAULT_MERGE_TOLERANCE).unwrap();
        assert_eq!(a.n_classes(), 2);
        for class in &a.block_classes {
            assert_eq!(class.n_states, 1);
            assert_eq!(class.c_mu, 0.0);
            assert_eq!(class.e_mu, 0.0);
        }
        // The ensemble keeps the class weights: one bit of memory.
        assert_relative_eq!(a.metrics.c_mu, 1.0);
        assert_relative_eq!(a.metrics.e_mu, 1.0);
    }

    #[test]
    fn range_one_spin_machine_matches_block_machine() {
        let c = chain(&[0.9, 0.1, 0.35, 0.65]);
        let a = analyze_block_chain(&c, DEFAULT_MERGE_TOLERANCE).unwrap();
        let m = a.metrics;
        assert_relative_eq!(m.h_mu_spin, m.h_mu, epsilon = 1e-14);
        assert_relative_eq!(m.c_mu_spin, m.c_mu, epsilon = 1e-14);
        assert_relative_eq!(m.e_spin, m.e_paper, epsilon = 1e-14);
    }

    #[test]
    fn fair_coin_spin_machine() {
        let c = chain(&[0.5, 0.5, 0.5, 0.5]);
        let s = spin_machine_of(&c, DEFAULT_MERGE_TOLERANCE).unwrap();
        assert_relative_eq!(s.h_mu, 1.0);
        assert_eq!(s.c_mu, 0.0);
        assert_relative_eq!(s.e, -1.0);
        let a = analyze_block_chain(&c, DEFAULT_MERGE_TOLERANCE).unwrap();
        assert_eq!(a.spin_classes[0].e_mu, 0.0);
    }

    #[test]
    fn nnn_block_rate_is_twice_spin_rate() {
        for (j1, j2, b, beta) in [
            (0.8, -1.2, 0.7, 1.7),
            (-0.4, 0.9, -0.2, 0.6),
            (0.3, 0.3, 0.0, 0.2),
        ] {
            let h = nnn(j1, j2, b);
            let chain =
                markov::solve_stochastic(&TransferSystem::build(&h, beta).unwrap()).unwrap();
            let a = analyze_block_chain(&chain, DEFAULT_MERGE_TOLERANCE).unwrap();
            assert!((a.metrics.h_mu - 2.0 * a.metrics.h_mu_spin).abs() <= 1e-9);
            let s = spin_machine(&h, beta).unwrap();
            assert_relative_eq!(s.h_mu, a.metrics.h_mu_spin, epsilon = 1e-15);
        }
    }

    #[test]
    fn spin_machine_is_unifilar_by_construction() {
        let h = nnn(0.8, -1.2, 0.7);
        let s = spin_machine(&h, 1.7).unwrap();
        let t = s.machine.transition_matrices();
        for m in &t.labeled {
            for row in m.row_iter() {
                assert!(row.iter().filter(|&&x| x > 0.0).count() <= 1);
            }
        }
        for row in t.connectivity.row_iter() {
            assert!((row.sum() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn period_three_ground_state_has_three_states() {
        let ts = TransferSystem::ground_state(&nnn(-1.0, -1.0, 2.0)).unwrap();
        let chain = markov::solve_stochastic(&ts).unwrap();
        let a = analyze_block_chain(&chain, DEFAULT_MERGE_TOLERANCE).unwrap();
        assert_eq!(a.n_classes(), 1);
        let class = &a.block_classes[0];
        assert_eq!(class.n_states, 3);
        assert!((class.e_mu - 3f64.log2()).abs() < 1e-9);
        assert!(class.h_mu.abs() < 1e-9);
    }
}

//! Brute-force cross-checks: exhaustive Gibbs enumeration, a direct solve of
//! the quadratic consistency system, and Monte Carlo sampling.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::hamiltonian::{Boundary, Hamiltonian};
use crate::lattice::BlockSpace;
use crate::logspace::log_sum_exp;
use crate::markov::{self, BlockChain, LocalCharacteristics, Stationary};

/// Largest number of configurations `enumerate_gibbs` will visit.
pub const ENUMERATION_LIMIT: u64 = 10_000_000;

/// Generator used by [`sample_sequence`], recorded in run metadata.
pub const RNG_NAME: &str = "ChaCha8Rng (rand_chacha 0.9), seed_from_u64";

/// Exact Gibbs distribution over all block sequences of a finite chain.
#[derive(Debug, Clone)]
pub struct GibbsEnsemble {
    pub h: Hamiltonian,
    pub beta: f64,
    pub n_blocks: usize,
    pub boundary: Boundary,
    /// Indexed by the sequence read as a base-υ number, first block most
    /// significant.
    pub log_probs: Vec<f64>,
}

impl GibbsEnsemble {
    pub fn size(&self) -> usize {
        self.h.blocks().count()
    }

    pub fn probs(&self) -> Vec<f64> {
        self.log_probs.iter().map(|x| x.exp()).collect()
    }

    pub fn decode(&self, config: usize) -> Vec<usize> {
        let size = self.size();
        let mut out = vec![0; self.n_blocks];
        let mut c = config;
        for slot in out.iter_mut().rev() {
            *slot = c % size;
            c /= size;
        }
        out
    }

    /// `log Pr` of the blocks at `positions` taking the given values,
    /// marginalizing everything else.
    fn log_marginal(&self, positions: &[usize]) -> Vec<f64> {
        let size = self.size();
        let cells = size.pow(positions.len() as u32);
        let mut buckets: Vec<Vec<f64>> = vec![Vec::new(); cells];
        for (config, &lp) in self.log_probs.iter().enumerate() {
            let seq = self.decode(config);
            let key = positions.iter().fold(0, |acc, &p| acc * size + seq[p]);
            buckets[key].push(lp);
        }
        buckets.into_iter().map(log_sum_exp).collect()
    }
}

pub fn enumerate_gibbs(
    h: &Hamiltonian,
    beta: f64,
    n_blocks: usize,
    boundary: Boundary,
) -> Result<GibbsEnsemble> {
    if !beta.is_finite() || beta < 0.0 {
        return Err(Error::NumericDomain(format!(
            "beta = {beta} must be finite and >= 0"
        )));
    }
    if n_blocks == 0 {
        return Err(Error::InvalidLength {
            len: 0,
            range: h.range(),
        });
    }
    let size = h.blocks().count();
    let configs = (size as u128)
        .checked_pow(n_blocks as u32)
        .unwrap_or(u128::MAX);
    if configs > ENUMERATION_LIMIT as u128 {
        return Err(Error::EnumerationTooLarge {
            configs,
            limit: ENUMERATION_LIMIT,
        });
    }
    let x: Vec<f64> = (0..size)
        .map(|b| h.intra_block_energy(b))
        .collect::<Result<_>>()?;
    let mut y = vec![0.0; size * size];
    for a in 0..size {
        for b in 0..size {
            y[a * size + b] = h.cross_block_energy(a, b)?;
        }
    }
    let mut log_w = Vec::with_capacity(configs as usize);
    let mut seq = vec![0; n_blocks];
    for _ in 0..configs {
        let mut e: f64 = seq.iter().map(|&b| x[b]).sum();
        for w in seq.windows(2) {
            e += y[w[0] * size + w[1]];
        }
        if boundary == Boundary::Periodic {
            e += y[seq[n_blocks - 1] * size + seq[0]];
        }
        log_w.push(-beta * e);
        for slot in seq.iter_mut().rev() {
            *slot += 1;
            if *slot < size {
                break;
            }
            *slot = 0;
        }
    }
    let log_z = log_sum_exp(log_w.iter().copied());
    Ok(GibbsEnsemble {
        h: h.clone(),
        beta,
        n_blocks,
        boundary,
        log_probs: log_w.into_iter().map(|w| w - log_z).collect(),
    })
}

/// Conditionals at one position of an enumerated chain, all obtained by
/// summing the exhaustive table. Flat layouts are row-major in the listed
/// index order.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditionals {
    pub position: usize,
    pub size: usize,
    /// `Pr(η_i | η_{i−1}, η_{i+1})` as `[prev][mid][next]`, interior only.
    pub triple: Option<Vec<f64>>,
    /// `Pr(η_i | η_{i+1})` as `[mid][next]`, when `i + 1 < N`.
    pub given_next: Option<Vec<f64>>,
    /// `Pr(η_{i+1} | η_i)` as `[cur][next]`, when `i + 1 < N`.
    pub forward: Option<Vec<f64>>,
}

impl Conditionals {
    pub fn triple(&self, prev: usize, mid: usize, next: usize) -> Option<f64> {
        let s = self.size;
        self.triple.as_ref().map(|t| t[(prev * s + mid) * s + next])
    }

    pub fn given_next(&self, mid: usize, next: usize) -> Option<f64> {
        self.given_next.as_ref().map(|t| t[mid * self.size + next])
    }

    pub fn forward(&self, cur: usize, next: usize) -> Option<f64> {
        self.forward.as_ref().map(|t| t[cur * self.size + next])
    }
}

pub fn conditional_from_enumeration(ens: &GibbsEnsemble, position: usize) -> Result<Conditionals> {
    let n = ens.n_blocks;
    if position >= n {
        return Err(Error::PositionOutOfRange {
            position,
            blocks: n,
        });
    }
    let s = ens.size();
    let triple = (position >= 1 && position + 1 < n).then(|| {
        let joint = ens.log_marginal(&[position - 1, position, position + 1]);
        let mut out = vec![0.0; s * s * s];
        for j in 0..s {
            for m in 0..s {
                let norm = log_sum_exp((0..s).map(|i| joint[(j * s + i) * s + m]));
                for i in 0..s {
                    out[(j * s + i) * s + m] = (joint[(j * s + i) * s + m] - norm).exp();
                }
            }
        }
        out
    });
    let (given_next, forward) = if position + 1 < n {
        let joint = ens.log_marginal(&[position, position + 1]);
        let mut given_next = vec![0.0; s * s];
        let mut forward = vec![0.0; s * s];
        for m in 0..s {
            let norm = log_sum_exp((0..s).map(|i| joint[i * s + m]));
            for i in 0..s {
                given_next[i * s + m] = (joint[i * s + m] - norm).exp();
            }
        }
        for i in 0..s {
            let norm = log_sum_exp((0..s).map(|m| joint[i * s + m]));
            for m in 0..s {
                forward[i * s + m] = (joint[i * s + m] - norm).exp();
            }
        }
        (Some(given_next), Some(forward))
    } else {
        (None, None)
    };
    Ok(Conditionals {
        position,
        size: s,
        triple,
        given_next,
        forward,
    })
}

/// The shortcut that treats a two-block sub-chain as an isolated system:
/// `Pr_2(a, b) / Pr_1(a)`, each from its own open-boundary Gibbs measure.
/// It is not a conditional of the infinite chain (rows need not even sum
/// to one) and exists to show the disagreement.
pub fn naive_substitution(h: &Hamiltonian, beta: f64) -> Result<DMatrix<f64>> {
    let one = enumerate_gibbs(h, beta, 1, Boundary::Open)?;
    let two = enumerate_gibbs(h, beta, 2, Boundary::Open)?;
    let s = one.size();
    Ok(DMatrix::from_fn(s, s, |a, b| {
        (two.log_probs[a * s + b] - one.log_probs[a]).exp()
    }))
}

/// Maximum quadratic-system residual accepted from [`quadratic_system_solve`].
pub const QUADRATIC_TOLERANCE: f64 = 1e-8;

/// Recovers `P` from local characteristics alone.
///
/// Eliminating `Y_l(j, m) ∝ Pr(η_l | η_j, η_m)` leaves, for every triple,
/// `P_ji P_im = LC(j, i, m) Σ_l P_jl P_lm`, solved together with the row
/// sums by Levenberg-Marquardt on `log P`. The start is the uniform matrix
/// with a homotopy `LC^t` (renormalized) from `t = 0` to `t = 1`.
pub fn quadratic_system_solve(
    blocks: &BlockSpace,
    lc: &LocalCharacteristics,
) -> Result<BlockChain> {
    let s = lc.size();
    if s != blocks.count() {
        return Err(Error::NumericDomain(format!(
            "{s} local characteristics for {} blocks",
            blocks.count()
        )));
    }
    if s > 4 {
        return Err(Error::NumericDomain(format!(
            "quadratic reference solver supports at most 4 blocks, got {s}"
        )));
    }
    let mut log_lc = vec![0.0; s * s * s];
    for j in 0..s {
        for i in 0..s {
            for m in 0..s {
                let v = lc.log_interior(j, i, m);
                if !v.is_finite() {
                    return Err(Error::NumericDomain(format!(
                        "local characteristic ({j},{i},{m}) is not positive"
                    )));
                }
                log_lc[(j * s + i) * s + m] = v;
            }
        }
    }
    let target = |t: f64| {
        let mut out = vec![0.0; s * s * s];
        for j in 0..s {
            for m in 0..s {
                let norm = log_sum_exp((0..s).map(|i| t * log_lc[(j * s + i) * s + m]));
                for i in 0..s {
                    out[(j * s + i) * s + m] = t * log_lc[(j * s + i) * s + m] - norm;
                }
            }
        }
        out
    };

    let mut u = DVector::from_element(s * s, -(s as f64).ln());
    let mut t: f64 = 0.0;
    let mut step: f64 = 0.125;
    while t < 1.0 {
        let next = (t + step).min(1.0);
        match levenberg_marquardt(s, &target(next), u.clone(), 200) {
            (solved, r) if r < HOMOTOPY_ACCEPT => {
                u = solved;
                t = next;
                step = (step * 2.0).min(0.5);
            }
            _ => {
                step /= 2.0;
                if step < 1e-6 {
                    break;
                }
            }
        }
    }
    let mut p = DMatrix::from_fn(s, s, |j, i| u[j * s + i].exp());
    if t >= 1.0 {
        let log_lc = target(1.0);
        u = gauss_newton_polish(s, &log_lc, u, 100);
        p = fix_gauge(&DMatrix::from_fn(s, s, |j, i| u[j * s + i].exp())).unwrap_or(p);
    }
    for mut row in p.row_iter_mut() {
        let total = row.sum();
        row /= total;
    }
    let report = markov::consistency_residual(lc, &p);
    let norm = (0..s)
        .map(|j| (p.row(j).sum() - 1.0).abs())
        .fold(0.0, f64::max);
    let residual = report.max_residual.max(norm);
    if t < 1.0 || !(residual <= QUADRATIC_TOLERANCE) {
        return Err(Error::QuadraticSolve { residual });
    }
    BlockChain::from_matrix(blocks.clone(), p)
}

/// Residuals of the log-form system and row sums, with the Jacobian.
fn residuals(s: usize, log_lc: &[f64], u: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
    residuals_with(s, log_lc, u, true)
}

fn residuals_with(
    s: usize,
    log_lc: &[f64],
    u: &DVector<f64>,
    row_sums: bool,
) -> (DVector<f64>, DMatrix<f64>) {
    let n = s * s;
    let rows = s * s * s + if row_sums { s } else { 0 };
    let mut r = DVector::zeros(rows);
    let mut jac = DMatrix::zeros(rows, n);
    let idx = |a: usize, b: usize| a * s + b;
    for j in 0..s {
        for m in 0..s {
            let terms: Vec<f64> = (0..s).map(|l| u[idx(j, l)] + u[idx(l, m)]).collect();
            let log_sum = log_sum_exp(terms.iter().copied());
            let weights: Vec<f64> = terms.iter().map(|t| (t - log_sum).exp()).collect();
            for i in 0..s {
                let row = (j * s + i) * s + m;
                r[row] = u[idx(j, i)] + u[idx(i, m)] - log_lc[row] - log_sum;
                jac[(row, idx(j, i))] += 1.0;
                jac[(row, idx(i, m))] += 1.0;
                for (l, w) in weights.iter().enumerate() {
                    jac[(row, idx(j, l))] -= w;
                    jac[(row, idx(l, m))] -= w;
                }
            }
        }
    }
    for j in (0..s).filter(|_| row_sums) {
        let row = s * s * s + j;
        r[row] = (0..s).map(|i| u[idx(j, i)].exp()).sum::<f64>() - 1.0;
        for i in 0..s {
            jac[(row, idx(j, i))] = u[idx(j, i)].exp();
        }
    }
    (r, jac)
}

/// Residual bound for accepting an intermediate homotopy step; the final
/// solution is polished further and certified against the linear system.
const HOMOTOPY_ACCEPT: f64 = 1e-6;

/// Levenberg-Marquardt on the log-form system. Steps come from the SVD of
/// the Jacobian rather than the normal equations, whose squared condition
/// number would swamp nearly reducible chains. Returns the best iterate and
/// its max residual.
fn levenberg_marquardt(
    s: usize,
    log_lc: &[f64],
    mut u: DVector<f64>,
    iterations: usize,
) -> (DVector<f64>, f64) {
    let (mut r, mut jac) = residuals(s, log_lc, &u);
    let mut cost = r.norm_squared();
    let mut mu = 1e-3;
    'outer: for _ in 0..iterations {
        if r.amax() < 1e-15 {
            break;
        }
        let svd = jac.clone().svd(true, true);
        let (Some(left), Some(right_t)) = (svd.u.as_ref(), svd.v_t.as_ref()) else {
            break;
        };
        let projected = left.transpose() * &r;
        let scale = svd.singular_values.max().max(f64::MIN_POSITIVE);
        loop {
            let damping = mu * scale * scale;
            let coeffs = DVector::from_fn(svd.singular_values.len(), |k, _| {
                let sv = svd.singular_values[k];
                -sv * projected[k] / (sv * sv + damping)
            });
            let delta = right_t.transpose() * coeffs;
            let trial = &u + &delta;
            let (tr, tj) = residuals(s, log_lc, &trial);
            let trial_cost = tr.norm_squared();
            if trial_cost.is_finite() && trial_cost < cost {
                u = trial;
                r = tr;
                jac = tj;
                cost = trial_cost;
                mu = (mu / 10.0).max(1e-20);
                if delta.amax() < 1e-16 {
                    break 'outer;
                }
                break;
            }
            mu *= 10.0;
            if mu > 1e10 || delta.amax() < 1e-16 {
                break 'outer;
            }
        }
    }
    let worst = r.amax();
    (
        u,
        if worst.is_finite() {
            worst
        } else {
            f64::INFINITY
        },
    )
}

/// Gauss-Newton on the triple equations alone, without row sums. These are
/// invariant under `P_ab → c g_b P_ab / g_a`, and that exact null space is
/// dropped by the pseudo-inverse; every other direction is well determined.
fn gauss_newton_polish(
    s: usize,
    log_lc: &[f64],
    mut u: DVector<f64>,
    iterations: usize,
) -> DVector<f64> {
    let (mut r, mut jac) = residuals_with(s, log_lc, &u, false);
    let mut cost = r.norm_squared();
    for _ in 0..iterations {
        if r.amax() < 1e-15 {
            break;
        }
        let svd = jac.clone().svd(true, true);
        let cutoff = 1e-10 * svd.singular_values.max();
        let Ok(delta) = svd.solve(&(-&r), cutoff) else {
            break;
        };
        let mut alpha = 1.0;
        let mut improved = false;
        while alpha > 1e-6 {
            let trial = &u + &delta * alpha;
            let (tr, tj) = residuals_with(s, log_lc, &trial, false);
            let trial_cost = tr.norm_squared();
            if trial_cost.is_finite() && trial_cost < cost {
                u = trial;
                r = tr;
                jac = tj;
                cost = trial_cost;
                improved = true;
                break;
            }
            alpha *= 0.5;
        }
        if !improved {
            break;
        }
    }
    u
}

/// The stochastic member `W_ab g_b / (λ g_a)` of the gauge family of `w`,
/// with `g` the Perron vector of `w` by shifted inverse iteration.
fn fix_gauge(w: &DMatrix<f64>) -> Option<DMatrix<f64>> {
    let s = w.nrows();
    let lambda = w
        .clone()
        .schur()
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if !(lambda > 0.0) {
        return None;
    }
    let shift = lambda * (1.0 + 1e-12);
    let lu = (w - DMatrix::identity(s, s) * shift).lu();
    let mut g = DVector::from_element(s, 1.0);
    for _ in 0..4 {
        g = lu.solve(&g)?;
        let norm = g.amax();
        if !(norm > 0.0) {
            return None;
        }
        g /= norm;
    }
    if g.iter().any(|&x| !(x > 0.0)) {
        g = -g;
    }
    if g.iter().any(|&x| !(x > 0.0)) {
        return None;
    }
    Some(DMatrix::from_fn(s, s, |a, b| {
        w[(a, b)] * g[b] / (lambda * g[a])
    }))
}

fn cumulative_rows(p: &DMatrix<f64>) -> Vec<Vec<f64>> {
    p.row_iter()
        .map(|row| {
            let mut acc = 0.0;
            row.iter()
                .map(|&x| {
                    acc += x;
                    acc
                })
                .collect()
        })
        .collect()
}

fn draw(rng: &mut ChaCha8Rng, cumulative: &[f64]) -> usize {
    let u = rng.random::<f64>() * cumulative[cumulative.len() - 1];
    cumulative
        .iter()
        .position(|&c| u < c)
        .unwrap_or(cumulative.len() - 1)
}

/// `length_blocks` blocks of an irreducible chain, flattened to spin
/// indices. The first block is drawn from `π`.
pub fn sample_sequence(chain: &BlockChain, length_blocks: usize, seed: u64) -> Result<Vec<usize>> {
    match markov::stationary(chain)? {
        Stationary::Irreducible(_) => {}
        Stationary::Reducible { classes, .. } => {
            return Err(Error::Reducible {
                classes: classes.len(),
            })
        }
    }
    Ok(sample_from(
        chain.blocks(),
        chain.p(),
        chain.pi(),
        length_blocks,
        seed,
    ))
}

/// Samples inside one recurrent class of a reducible chain.
pub fn sample_sequence_in_class(
    chain: &BlockChain,
    class: usize,
    length_blocks: usize,
    seed: u64,
) -> Result<Vec<usize>> {
    let classes = markov::stationary(chain)?.classes();
    let c = classes.get(class).ok_or(Error::Reducible {
        classes: classes.len(),
    })?;
    let size = chain.size();
    let restricted = markov::restrict(chain.p(), &c.members);
    let mut p = DMatrix::zeros(size, size);
    let mut pi = DVector::zeros(size);
    for (a, &i) in c.members.iter().enumerate() {
        pi[i] = c.pi[a];
        for (b, &k) in c.members.iter().enumerate() {
            p[(i, k)] = restricted[(a, b)];
        }
    }
    Ok(sample_from(chain.blocks(), &p, &pi, length_blocks, seed))
}

fn sample_from(
    blocks: &BlockSpace,
    p: &DMatrix<f64>,
    pi: &DVector<f64>,
    length_blocks: usize,
    seed: u64,
) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let rows = cumulative_rows(p);
    let start = {
        let mut acc = 0.0;
        pi.iter()
            .map(|&x| {
                acc += x;
                acc
            })
            .collect::<Vec<_>>()
    };
    let mut out = Vec::with_capacity(length_blocks * blocks.range());
    if length_blocks == 0 {
        return out;
    }
    let mut block = draw(&mut rng, &start);
    out.extend(blocks.decode_unchecked(block));
    for _ in 1..length_blocks {
        block = draw(&mut rng, &rows[block]);
        out.extend(blocks.decode_unchecked(block));
    }
    out
}

/// Plug-in entropy rate with its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EntropyEstimate {
    pub bits: f64,
    pub std_error: f64,
}

/// Minimum sequence length per context.
pub const SAMPLES_PER_CONTEXT: usize = 100_000;

const BATCHES: usize = 20;

/// Plug-in `H[s_t | s_{t−n} … s_{t−1}]` in bits per spin. The standard
/// error comes from batch means of the per-position surprisal.
pub fn empirical_entropy_rate(seq: &[usize], n: usize, theta: usize) -> Result<EntropyEstimate> {
    if theta < 2 {
        return Err(Error::InvalidAlphabet(format!("theta = {theta}")));
    }
    let contexts = theta.pow(n as u32);
    let needed = SAMPLES_PER_CONTEXT * contexts;
    if seq.len() < needed {
        return Err(Error::Undersampled {
            len: seq.len(),
            needed,
        });
    }
    if let Some(&bad) = seq.iter().find(|&&x| x >= theta) {
        return Err(Error::InvalidAlphabet(format!(
            "symbol {bad} outside 0..{theta}"
        )));
    }
    let mut counts = vec![0u64; contexts * theta];
    let mut ctx_of = Vec::with_capacity(seq.len() - n);
    let mut ctx = seq[..n].iter().fold(0, |acc, &x| acc * theta + x);
    for &x in &seq[n..] {
        counts[ctx * theta + x] += 1;
        ctx_of.push(ctx * theta + x);
        ctx = (ctx * theta + x) % contexts;
    }
    let totals: Vec<u64> = (0..contexts)
        .map(|c| counts[c * theta..(c + 1) * theta].iter().sum())
        .collect();
    let surprisal = |cell: usize| {
        let c = cell / theta;
        -(counts[cell] as f64 / totals[c] as f64).log2()
    };
    let len = ctx_of.len();
    let bits = ctx_of.iter().map(|&cell| surprisal(cell)).sum::<f64>() / len as f64;
    let batch = len / BATCHES;
    let means: Vec<f64> = (0..BATCHES)
        .map(|k| {
            ctx_of[k * batch..(k + 1) * batch]
                .iter()
                .map(|&cell| surprisal(cell))
                .sum::<f64>()
                / batch as f64
        })
        .collect();
    let grand = means.iter().sum::<f64>() / BATCHES as f64;
    let var = means.iter().map(|m| (m - grand).powi(2)).sum::<f64>() / (BATCHES - 1) as f64;
    Ok(EntropyEstimate {
        bits,
        std_error: (var / BATCHES as f64).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::SpinAlphabet;
    use crate::models::{nn_ising, nnn_ising, NnParams, NnnParams};
    use crate::transfer::TransferSystem;
    use approx::assert_relative_eq;

    fn nnn(j1: f64, j2: f64, b: f64) -> Hamiltonian {
        nnn_ising(&NnnParams {
            j1,
            j2,
            b,
            beta: 1.0,
        })
        .unwrap()
    }

    #[test]
    fn quadratic_solve_nearly_reducible_chain() {
        // Two blocks are almost absorbing (P_ii ≈ 1 − 2e-7); the triple
        // equations barely pin the gauge and the result must still match.
        let beta = 4.032057574147102;
        let h = nnn_ising(&NnnParams {
            j1: -1.2598020359624944,
            j2: 1.016943233493342,
            b: -2.4457115274265804,
            beta,
        })
        .unwrap();
        let ts = TransferSystem::build(&h, beta).unwrap();
        let chain = markov::solve_stochastic(&ts).unwrap();
        assert!(chain.p()[(1, 1)] > 1.0 - 1e-6);
        let lc = markov::local_characteristics(&ts);
        let q = quadratic_system_solve(h.blocks(), &lc).unwrap();
        assert!((q.p() - chain.p()).amax() < 1e-8);
    }

    fn nn(j: f64, b: f64) -> Hamiltonian {
        nn_ising(&NnParams { j, b, beta: 1.0 }).unwrap()
    }

    fn binary_chain(p: &[f64]) -> BlockChain {
        let blocks = BlockSpace::new(SpinAlphabet::binary(), 1).unwrap();
        BlockChain::from_matrix(blocks, DMatrix::from_row_slice(2, 2, p)).unwrap()
    }

    #[test]
    fn infinite_temperature_is_uniform() {
        let ens = enumerate_gibbs(&nnn(0.7, -0.3, 0.5), 0.0, 3, Boundary::Open).unwrap();
        for p in ens.probs() {
            assert_relative_eq!(p, 1.0 / 64.0, epsilon = 1e-15);
        }
    }

    #[test]
    fn pair_ratio_is_boltzmann_factor() {
        let (j, beta) = (0.8, 0.6);
        let ens = enumerate_gibbs(&nn(j, 0.0), beta, 2, Boundary::Open).unwrap();
        let p = ens.probs();
        assert_relative_eq!(p[3] / p[2], (2.0 * beta * j).exp(), epsilon = 1e-12);
    }

    #[test]
    fn enumeration_is_normalized() {
        for boundary in [Boundary::Open, Boundary::Periodic] {
            let ens = enumerate_gibbs(&nnn(0.4, -1.1, 0.3), 1.3, 4, boundary).unwrap();
            assert!((ens.probs().iter().sum::<f64>() - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn enumeration_guard() {
        let err = enumerate_gibbs(&nnn(1.0, 1.0, 0.0), 1.0, 12, Boundary::Open).unwrap_err();
        assert_eq!(
            err,
            Error::EnumerationTooLarge {
                configs: 16_777_216,
                limit: ENUMERATION_LIMIT
            }
        );
    }

    #[test]
    fn enumerated_conditionals_match_local_characteristics() {
        for (h, beta) in [
            (nn(1.2, -0.4), 0.9),
            (nnn(0.6, -0.9, 0.35), 1.4),
            (nnn(-1.0, 0.3, 2.0), 2.5),
        ] {
            let ts = TransferSystem::build(&h, beta).unwrap();
            let lc = markov::local_characteristics(&ts);
            let ens = enumerate_gibbs(&h, beta, 6, Boundary::Open).unwrap();
            let s = ens.size();
            for position in 1..5 {
                let c = conditional_from_enumeration(&ens, position).unwrap();
                for j in 0..s {
                    for i in 0..s {
                        for m in 0..s {
                            let d = (c.triple(j, i, m).unwrap() - lc.interior(j, i, m)).abs();
                            assert!(d <= 1e-12, "position {position}: {d}");
                        }
                    }
                }
            }
            let first = conditional_from_enumeration(&ens, 0).unwrap();
            assert!(first.triple.is_none());
            for i in 0..s {
                for m in 0..s {
                    assert!(
                        (first.given_next(i, m).unwrap() - lc.first_block(i, m)).abs() <= 1e-12
                    );
                }
            }
        }
    }

    #[test]
    fn interior_forward_conditional_approaches_p() {
        let forward_gap = |h: &Hamiltonian, beta: f64, n_blocks: usize| {
            let ts = TransferSystem::build(h, beta).unwrap();
            let chain = markov::solve_stochastic(&ts).unwrap();
            let ens = enumerate_gibbs(h, beta, n_blocks, Boundary::Open).unwrap();
            let c = conditional_from_enumeration(&ens, 3).unwrap();
            let mut gap: f64 = 0.0;
            for i in 0..4 {
                for m in 0..4 {
                    gap = gap.max((c.forward(i, m).unwrap() - chain.p()[(i, m)]).abs());
                }
            }
            gap
        };
        let h = nnn(0.5, -0.2, 0.1);
        assert!(forward_gap(&h, 0.2, 8) <= 1e-6);
        // Boundary corrections shrink as the right edge moves away.
        assert!(forward_gap(&h, 0.5, 8) < forward_gap(&h, 0.5, 6) / 10.0);
    }

    #[test]
    fn position_out_of_range() {
        let ens = enumerate_gibbs(&nn(1.0, 0.0), 1.0, 3, Boundary::Open).unwrap();
        assert_eq!(
            conditional_from_enumeration(&ens, 3).unwrap_err(),
            Error::PositionOutOfRange {
                position: 3,
                blocks: 3
            }
        );
        let last = conditional_from_enumeration(&ens, 2).unwrap();
        assert!(last.triple.is_none() && last.forward.is_none());
    }

    #[test]
    fn naive_substitution_disagrees() {
        let (h, beta) = (nn(1.0, 0.5), 1.0);
        let naive = naive_substitution(&h, beta).unwrap();
        let chain = markov::solve_stochastic(&TransferSystem::build(&h, beta).unwrap()).unwrap();
        assert!((naive - chain.p()).amax() > 1e-3);
    }

    #[test]
    fn quadratic_solve_examples() {
        let h = nn(0.5 * 3f64.ln(), 0.0);
        let ts = TransferSystem::build(&h, 1.0).unwrap();
        let chain =
            quadratic_system_solve(h.blocks(), &markov::local_characteristics(&ts)).unwrap();
        let expected = DMatrix::from_row_slice(2, 2, &[0.75, 0.25, 0.25, 0.75]);
        assert!((chain.p() - expected).amax() <= 1e-10);

        let h = nnn(0.3, 0.7, -0.2);
        let ts = TransferSystem::build(&h, 0.0).unwrap();
        let chain =
            quadratic_system_solve(h.blocks(), &markov::local_characteristics(&ts)).unwrap();
        assert!(chain.p().iter().all(|&x| (x - 0.25).abs() <= 1e-12));
    }

    #[test]
    fn quadratic_solve_matches_spectral_route() {
        for (j1, j2, b, beta) in [
            (0.9, -0.6, 0.4, 1.2),
            (-1.4, 0.2, -2.5, 0.7),
            (0.1, 1.3, 2.9, 3.0),
        ] {
            let h = nnn(j1, j2, b);
            let ts = TransferSystem::build(&h, beta).unwrap();
            let spectral = markov::solve_stochastic(&ts).unwrap();
            let quadratic =
                quadratic_system_solve(h.blocks(), &markov::local_characteristics(&ts)).unwrap();
            assert!((spectral.p() - quadratic.p()).amax() <= 1e-8);
        }
    }

    #[test]
    fn sampling_is_deterministic() {
        let chain = binary_chain(&[0.75, 0.25, 0.25, 0.75]);
        let a = sample_sequence(&chain, 10_000, 42).unwrap();
        let b = sample_sequence(&chain, 10_000, 42).unwrap();
        let c = sample_sequence(&chain, 10_000, 43).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn fair_coin_statistics() {
        let chain = binary_chain(&[0.5, 0.5, 0.5, 0.5]);
        let seq = sample_sequence(&chain, 1_000_000, 7).unwrap();
        let up = seq.iter().filter(|&&s| s == 1).count() as f64 / seq.len() as f64;
        assert!((up - 0.5).abs() <= 0.002);
        let est = empirical_entropy_rate(&seq, 1, 2).unwrap();
        assert!((est.bits - 1.0).abs() <= 0.003);
    }

    #[test]
    fn persistent_chain_statistics() {
        let chain = binary_chain(&[0.75, 0.25, 0.25, 0.75]);
        let seq = sample_sequence(&chain, 1_000_000, 11).unwrap();
        let repeats =
            seq.windows(2).filter(|w| w[0] == w[1]).count() as f64 / (seq.len() - 1) as f64;
        assert!((repeats - 0.75).abs() <= 0.002);
        let est = empirical_entropy_rate(&seq, 1, 2).unwrap();
        assert!((est.bits - 0.811_278).abs() <= 0.01);
        assert!(est.std_error > 0.0 && est.std_error < 0.005);
    }

    #[test]
    fn alternating_sequence_has_zero_rate() {
        let seq: Vec<usize> = (0..200_000).map(|i| i % 2).collect();
        let est = empirical_entropy_rate(&seq, 1, 2).unwrap();
        assert_eq!(est.bits, 0.0);
        assert_eq!(est.std_error, 0.0);
    }

    #[test]
    fn short_sequences_are_rejected() {
        assert_eq!(
            empirical_entropy_rate(&[0; 1000], 2, 2).unwrap_err(),
            Error::Undersampled {
                len: 1000,
                needed: 400_000
            }
        );
    }

    #[test]
    fn reducible_chains_need_a_class() {
        let chain = binary_chain(&[1.0, 0.0, 0.0, 1.0]);
        assert_eq!(
            sample_sequence(&chain, 10, 1).unwrap_err(),
            Error::Reducible { classes: 2 }
        );
        let seq = sample_sequence_in_class(&chain, 1, 10, 1).unwrap();
        assert!(seq.iter().all(|&s| s == 1));
    }
}

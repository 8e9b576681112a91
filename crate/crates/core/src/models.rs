//! Preset Hamiltonians: nearest-neighbour Ising, next-nearest-neighbour
//! Ising and the persistent biased random walk.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hamiltonian::{Boundary, Hamiltonian};
use crate::lattice::SpinAlphabet;
use crate::markov::{self, BlockChain, Stationary};
use crate::transfer::{TransferSystem, GROUND_STATE_BETA};

const DOWN: usize = 0;
const UP: usize = 1;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NnParams {
    pub j: f64,
    pub b: f64,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NnnParams {
    pub j1: f64,
    pub j2: f64,
    pub b: f64,
    pub beta: f64,
}

/// Persistence `p` and rightward bias `r`, both in `(0, 1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PbrwParams {
    pub p: f64,
    pub r: f64,
}

fn finite(values: &[(&str, f64)]) -> Result<()> {
    for (name, v) in values {
        if !v.is_finite() {
            return Err(Error::InvalidCouplings(format!(
                "{name} = {v} is not finite"
            )));
        }
    }
    Ok(())
}

/// `E = −B Σ s_i − J Σ s_i s_{i+1}` with `s = ±1`.
pub fn nn_ising(params: &NnParams) -> Result<Hamiltonian> {
    finite(&[("J", params.j), ("B", params.b), ("beta", params.beta)])?;
    Hamiltonian::product_form(SpinAlphabet::binary(), params.b, &[params.j])
}

/// `E = −B Σ s_i − J₁ Σ s_i s_{i+1} − J₂ Σ s_i s_{i+2}`.
pub fn nnn_ising(params: &NnnParams) -> Result<Hamiltonian> {
    finite(&[
        ("J1", params.j1),
        ("J2", params.j2),
        ("B", params.b),
        ("beta", params.beta),
    ])?;
    Hamiltonian::product_form(SpinAlphabet::binary(), params.b, &[params.j1, params.j2])
}

/// Closed-form local characteristics of the NN chain, indexed
/// `local[left][mid][right]` with `0 = ↓`, `1 = ↑`, and the repeat
/// probabilities.
///
/// The surd expression solving the quadratic system evaluates to
/// `Pr(↓|↓)`; `Pr(↑|↑)` is the same expression with `B → −B`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NnReference {
    pub local: [[[f64; 2]; 2]; 2],
    /// Overflow-safe evaluation of the surd expression.
    pub surd: f64,
    /// The surd expression evaluated term by term.
    pub surd_naive: f64,
    pub up_given_up: f64,
    pub down_given_down: f64,
}

impl NnReference {
    pub fn local(&self, left: usize, mid: usize, right: usize) -> f64 {
        self.local[left][mid][right]
    }
}

pub fn nn_reference_values(params: &NnParams) -> NnReference {
    let NnParams { j, b, beta } = *params;
    let e = f64::exp;
    let mut local = [[[0.0; 2]; 2]; 2];
    local[DOWN][DOWN][DOWN] = e(4.0 * beta * j) / (e(2.0 * beta * b) + e(4.0 * beta * j));
    local[DOWN][DOWN][UP] = 1.0 / (e(2.0 * beta * b) + 1.0);
    local[DOWN][UP][DOWN] = 1.0 / (e(4.0 * beta * j - 2.0 * beta * b) + 1.0);
    local[DOWN][UP][UP] = e(2.0 * beta * b) / (e(2.0 * beta * b) + 1.0);
    local[UP][DOWN][DOWN] = 1.0 / (e(2.0 * beta * b) + 1.0);
    local[UP][DOWN][UP] = 1.0 / (e(2.0 * beta * (b + 2.0 * j)) + 1.0);
    local[UP][UP][DOWN] = e(2.0 * beta * b) / (e(2.0 * beta * b) + 1.0);
    local[UP][UP][UP] = e(2.0 * beta * (b + 2.0 * j)) / (e(2.0 * beta * (b + 2.0 * j)) + 1.0);

    NnReference {
        local,
        surd: surd(j, b, beta),
        surd_naive: surd_naive(j, b, beta),
        up_given_up: surd(j, -b, beta),
        down_given_down: surd(j, b, beta),
    }
}

fn surd_naive(j: f64, b: f64, beta: f64) -> f64 {
    let e = f64::exp;
    2.0 * e(2.0 * beta * j)
        / ((4.0 * e(2.0 * beta * b) + e(4.0 * beta * (b + j))
            - 2.0 * e(2.0 * beta * (b + 2.0 * j))
            + e(4.0 * beta * j))
        .sqrt()
            + e(2.0 * beta * (b + j))
            + e(2.0 * beta * j))
}

/// Surd divided through by `e^{2βJ}`: the radicand becomes
/// `4e^{2βB−4βJ} + (e^{2βB} − 1)²`, free of cancellation.
fn surd(j: f64, b: f64, beta: f64) -> f64 {
    let radical = (2.0 * (beta * b - 2.0 * beta * j).exp()).hypot((2.0 * beta * b).exp_m1());
    2.0 / (radical + (2.0 * beta * b).exp() + 1.0)
}

/// Candidate NNN ground-state phases, named by spatial period.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    /// `↑↑↑↑…` (or `↓↓↓↓…`).
    P1,
    /// `↑↓↑↓…`.
    P2,
    /// `↑↑↓↑↑↓…` (or its flip, whichever the field favours).
    P3,
    /// `↑↑↓↓↑↑↓↓…`.
    P4,
}

impl Phase {
    pub const ALL: [Phase; 4] = [Phase::P1, Phase::P2, Phase::P3, Phase::P4];

    pub fn period(self) -> usize {
        match self {
            Phase::P1 => 1,
            Phase::P2 => 2,
            Phase::P3 => 3,
            Phase::P4 => 4,
        }
    }

    pub fn from_period(period: usize) -> Option<Self> {
        Self::ALL.into_iter().find(|p| p.period() == period)
    }

    /// Spin patterns (one period) representing this phase; field-related
    /// variants are all listed.
    fn patterns(self) -> Vec<Vec<usize>> {
        match self {
            Phase::P1 => vec![vec![UP], vec![DOWN]],
            Phase::P2 => vec![vec![UP, DOWN]],
            Phase::P3 => vec![vec![UP, UP, DOWN], vec![DOWN, DOWN, UP]],
            Phase::P4 => vec![vec![UP, UP, DOWN, DOWN]],
        }
    }
}

impl std::fmt::Display for Phase {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Energy per spin of the best variant of each phase, on a ring of 12 spins
/// (a common multiple of every period).
pub fn nnn_phase_energies(params: &NnnParams) -> Result<[(Phase, f64); 4]> {
    let h = nnn_ising(params)?;
    let mut out = [(Phase::P1, 0.0); 4];
    for (slot, phase) in out.iter_mut().zip(Phase::ALL) {
        let mut best = f64::INFINITY;
        for pattern in phase.patterns() {
            let ring: Vec<usize> = pattern.iter().copied().cycle().take(12).collect();
            best = best.min(h.chain_energy_direct(&ring, Boundary::Periodic)? / 12.0);
        }
        *slot = (phase, best);
    }
    Ok(out)
}

/// Lowest-energy phase; ties within `1e-9` (relative to the coupling
/// scale) are reported as a boundary.
pub fn nnn_ground_state_phase(params: &NnnParams) -> Result<Phase> {
    let energies = nnn_phase_energies(params)?;
    let scale = 1.0 + params.j1.abs() + params.j2.abs() + params.b.abs();
    let min = energies.iter().map(|e| e.1).fold(f64::INFINITY, f64::min);
    let tied: Vec<Phase> = energies
        .iter()
        .filter(|e| e.1 - min <= 1e-9 * scale)
        .map(|e| e.0)
        .collect();
    if tied.len() > 1 {
        return Err(Error::PhaseBoundary(
            tied.iter().map(Phase::to_string).collect(),
        ));
    }
    Ok(tied[0])
}

/// Phase read off a ground-state chain: follow the most probable block
/// from the first recurrent class and take the minimal spin period.
pub fn infer_phase(chain: &BlockChain) -> Result<Phase> {
    let classes = match markov::stationary(chain)? {
        Stationary::Irreducible(pi) => vec![(0..pi.len()).collect::<Vec<_>>()],
        Stationary::Reducible { classes, .. } => classes.into_iter().map(|c| c.members).collect(),
    };
    let blocks = chain.blocks();
    let p = chain.p();
    let mut block = classes[0][0];
    let mut spins = Vec::new();
    for _ in 0..24 {
        spins.extend(blocks.decode_unchecked(block));
        block = (0..chain.size())
            .max_by(|&a, &b| p[(block, a)].total_cmp(&p[(block, b)]))
            .expect("non-empty chain");
    }
    let period = (1..=spins.len() / 2)
        .find(|&t| (t..spins.len()).all(|i| spins[i] == spins[i - t]))
        .unwrap_or(spins.len());
    Phase::from_period(period).ok_or_else(|| {
        Error::NumericDomain(format!(
            "ground-state cycle has period {period}, not a known phase"
        ))
    })
}

fn check_probability(name: &str, x: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::InvalidCouplings(format!(
            "{name} = {x} is not a probability"
        )));
    }
    Ok(())
}

fn half_logit(x: f64) -> f64 {
    0.5 * (x / (1.0 - x)).ln()
}

/// NN couplings at `β = 1` with `βJ = ½ ln(p/(1−p))`, `βB = ½ ln(r/(1−r))`.
pub fn pbrw_couplings(params: &PbrwParams) -> Result<NnParams> {
    check_probability("p", params.p)?;
    check_probability("r", params.r)?;
    for (name, x) in [("p", params.p), ("r", params.r)] {
        if x == 0.0 || x == 1.0 {
            return Err(Error::LimitParameter(format!(
                "{name} = {x} is a limit; use the ground-state pathway"
            )));
        }
    }
    Ok(NnParams {
        j: half_logit(params.p),
        b: half_logit(params.r),
        beta: 1.0,
    })
}

/// Walk as a two-state chain over steps, `0 = L`, `1 = R`.
pub fn pbrw(params: &PbrwParams) -> Result<BlockChain> {
    let nn = pbrw_couplings(params)?;
    let ts = TransferSystem::build(&nn_ising(&nn)?, nn.beta)?;
    markov::solve_stochastic(&ts)
}

/// Ground-state pathway accepting `p, r ∈ [0, 1]`: an endpoint becomes a
/// unit coupling at `β = GROUND_STATE_BETA`, interior values keep `βJ`, `βB`.
pub fn pbrw_ground_couplings(params: &PbrwParams) -> Result<NnParams> {
    check_probability("p", params.p)?;
    check_probability("r", params.r)?;
    let coupling = |x: f64| match x {
        0.0 => -1.0,
        1.0 => 1.0,
        _ => half_logit(x) / GROUND_STATE_BETA,
    };
    Ok(NnParams {
        j: coupling(params.p),
        b: coupling(params.r),
        beta: GROUND_STATE_BETA,
    })
}

pub fn pbrw_ground_state(params: &PbrwParams) -> Result<BlockChain> {
    let nn = pbrw_ground_couplings(params)?;
    let ts = TransferSystem::build(&nn_ising(&nn)?, nn.beta)?;
    markov::solve_stochastic(&ts)
}

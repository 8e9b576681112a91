//! Transfer matrix, Perron eigensystem and partition functions.
//!
//! Everything is held as natural logarithms: `log_u[η] = −β x_η / 2` and
//! `log_v[η][η′] = −β (x_η/2 + y_{ηη′} + x_{η′}/2)`. At β of order 10³ the
//! linear-domain weights overflow, the logs do not.
//!
//! The Perron data comes from repeated squaring of `V` in log domain. A first
//! pass estimates `log λ₀` from the growth of `V^{2^k}`; a second pass squares
//! the shifted matrix `V + λ₀ I`, which suppresses every non-Perron eigenvalue
//! on the spectral circle (periodic ground states put eigenvalues at `λ₀·ω`
//! for roots of unity ω), and reads both eigenvectors off the limiting
//! projector.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::hamiltonian::{Boundary, Hamiltonian};
use crate::lattice::BlockSpace;
use crate::logspace::{log_add_exp, log_matmul, log_matvec, log_sum_exp, log_vecmat};

/// Finite β standing in for the zero-temperature limit.
pub const GROUND_STATE_BETA: f64 = 1e3;

/// Relative residual accepted for the Perron pair.
pub const PERRON_TOLERANCE: f64 = 1e-12;

/// Each squaring doubles the power, so 64 squarings reach `V^{2^64}`.
const MAX_SQUARINGS: usize = 64;

/// Dominant eigenvalue and eigenvectors of a positive matrix, in log domain.
///
/// `log_right` is scaled so its largest entry is 0; `log_left` so that
/// `⟨l|r⟩ = 1`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Perron {
    pub log_lambda: f64,
    pub log_left: DVector<f64>,
    pub log_right: DVector<f64>,
    /// `max(|V r − λ r|∞ / (λ |r|∞), |l V − λ l|∞ / (λ |l|∞))`.
    pub residual: f64,
    pub squarings: usize,
}

impl Perron {
    pub fn right(&self) -> DVector<f64> {
        self.log_right.map(f64::exp)
    }

    pub fn left(&self) -> DVector<f64> {
        self.log_left.map(f64::exp)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TransferSystem {
    blocks: BlockSpace,
    beta: f64,
    log_u: DVector<f64>,
    log_v: DMatrix<f64>,
    perron: Perron,
}

impl TransferSystem {
    pub fn build(h: &Hamiltonian, beta: f64) -> Result<Self> {
        if !beta.is_finite() || beta < 0.0 {
            return Err(Error::NumericDomain(format!(
                "β must be finite and non-negative, got {beta}"
            )));
        }
        let blocks = h.blocks().clone();
        let count = blocks.count();
        let x = (0..count)
            .map(|b| h.intra_block_energy(b))
            .collect::<Result<Vec<_>>>()?;
        let mut y = DMatrix::zeros(count, count);
        for a in 0..count {
            for b in 0..count {
                y[(a, b)] = h.cross_block_energy(a, b)?;
            }
        }
        let log_u = DVector::from_fn(count, |i, _| -beta * x[i] / 2.0);
        let log_v = DMatrix::from_fn(count, count, |i, j| {
            -beta * (x[i] / 2.0 + y[(i, j)] + x[j] / 2.0)
        });
        if log_u.iter().chain(log_v.iter()).any(|v| !v.is_finite()) {
            return Err(Error::NumericDomain(
                "non-finite transfer weights".to_string(),
            ));
        }
        let perron = perron(&log_v)?;
        Ok(Self {
            blocks,
            beta,
            log_u,
            log_v,
            perron,
        })
    }

    /// The zero-temperature stand-in at [`GROUND_STATE_BETA`].
    pub fn ground_state(h: &Hamiltonian) -> Result<Self> {
        Self::build(h, GROUND_STATE_BETA)
    }

    pub fn blocks(&self) -> &BlockSpace {
        &self.blocks
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn log_u(&self) -> &DVector<f64> {
        &self.log_u
    }

    pub fn log_v(&self) -> &DMatrix<f64> {
        &self.log_v
    }

    /// Linear-domain `V`; entries may overflow for large β.
    pub fn v(&self) -> DMatrix<f64> {
        self.log_v.map(f64::exp)
    }

    pub fn perron(&self) -> &Perron {
        &self.perron
    }

    pub fn log_lambda0(&self) -> f64 {
        self.perron.log_lambda
    }

    /// `log M` with `M = ⟨U|r⟩⟨l|U⟩`.
    pub fn log_m(&self) -> f64 {
        let ur = log_sum_exp(
            self.log_u
                .iter()
                .zip(self.perron.log_right.iter())
                .map(|(a, b)| a + b),
        );
        let lu = log_sum_exp(
            self.log_u
                .iter()
                .zip(self.perron.log_left.iter())
                .map(|(a, b)| a + b),
        );
        ur + lu
    }

    /// Exact `log Z` for `blocks` blocks: `⟨U|V^{N−1}|U⟩` (open) or
    /// `Tr V^N` (periodic).
    pub fn log_partition(&self, blocks: usize, boundary: Boundary) -> f64 {
        assert!(blocks >= 1, "partition function needs at least one block");
        match boundary {
            Boundary::Open => {
                let mut acc = self.log_u.clone();
                for _ in 1..blocks {
                    acc = log_vecmat(&acc, &self.log_v);
                }
                log_sum_exp(acc.iter().zip(self.log_u.iter()).map(|(a, b)| a + b))
            }
            Boundary::Periodic => {
                let power = log_matrix_power(&self.log_v, blocks);
                log_sum_exp(power.diagonal().iter().copied())
            }
        }
    }

    /// Large-N form: `N log λ₀` (periodic) or `log M + (N−1) log λ₀` (open).
    pub fn asymptotic_log_partition(&self, blocks: usize, boundary: Boundary) -> f64 {
        let n = blocks as f64;
        match boundary {
            Boundary::Periodic => n * self.log_lambda0(),
            Boundary::Open => self.log_m() + (n - 1.0) * self.log_lambda0(),
        }
    }
}

/// `log V^power` by binary exponentiation.
pub fn log_matrix_power(log_v: &DMatrix<f64>, mut power: usize) -> DMatrix<f64> {
    let size = log_v.nrows();
    let mut result = DMatrix::from_fn(
        size,
        size,
        |i, j| if i == j { 0.0 } else { f64::NEG_INFINITY },
    );
    let mut base = log_v.clone();
    while power > 0 {
        if power & 1 == 1 {
            result = log_matmul(&result, &base);
        }
        power >>= 1;
        if power > 0 {
            base = log_matmul(&base, &base);
        }
    }
    result
}

/// Perron eigensystem of the entrywise-positive matrix `exp(log_v)`.
pub fn perron(log_v: &DMatrix<f64>) -> Result<Perron> {
    let size = log_v.nrows();
    assert_eq!(size, log_v.ncols(), "transfer matrix must be square");
    if log_v.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericDomain(
            "transfer matrix must be entrywise positive".into(),
        ));
    }

    let lambda_estimate = growth_rate(log_v);
    let shifted = DMatrix::from_fn(size, size, |i, j| {
        if i == j {
            log_add_exp(log_v[(i, j)], lambda_estimate)
        } else {
            log_v[(i, j)]
        }
    });

    let mut power = shifted;
    let mut prev: Option<(DVector<f64>, DVector<f64>)> = None;
    let mut squarings = 0;
    let (mut log_right, mut log_left) = projector_vectors(&power);
    while squarings < MAX_SQUARINGS {
        power = log_matmul(&power, &power);
        let max = power.max();
        power.add_scalar_mut(-max);
        squarings += 1;
        let (r, l) = projector_vectors(&power);
        log_right = r;
        log_left = l;
        if let Some((pr, pl)) = &prev {
            let dr = max_abs_diff(pr, &log_right);
            let dl = max_abs_diff(pl, &log_left);
            if dr < 1e-15 && dl < 1e-15 && squarings >= 4 {
                break;
            }
        }
        prev = Some((log_right.clone(), log_left.clone()));
    }

    // Rayleigh quotient, then normalize ⟨l|r⟩ = 1.
    let vr = log_matvec(log_v, &log_right);
    let lvr = log_sum_exp(log_left.iter().zip(vr.iter()).map(|(a, b)| a + b));
    let lr = log_sum_exp(log_left.iter().zip(log_right.iter()).map(|(a, b)| a + b));
    let log_lambda = lvr - lr;
    log_left.add_scalar_mut(-lr);

    let lv = log_vecmat(&log_left, log_v);
    let residual = relative_residual(&vr, &log_right, log_lambda)
        .max(relative_residual(&lv, &log_left, log_lambda));
    if !(residual <= PERRON_TOLERANCE) {
        return Err(Error::Convergence {
            iterations: squarings,
            residual,
        });
    }
    Ok(Perron {
        log_lambda,
        log_left,
        log_right,
        residual,
        squarings,
    })
}

/// `lim (1/N) log max (V^N)` via squaring, i.e. `log λ₀`.
fn growth_rate(log_v: &DMatrix<f64>) -> f64 {
    let mut power = log_v.clone();
    let mut estimate = 0.0;
    let mut weight = 1.0;
    for _ in 0..MAX_SQUARINGS {
        let d = power.max();
        power.add_scalar_mut(-d);
        let step = d * weight;
        estimate += step;
        if step.abs() <= 1e-17 * estimate.abs().max(1.0) && weight < 1e-6 {
            break;
        }
        power = log_matmul(&power, &power);
        weight *= 0.5;
    }
    // The max entry of V^N is λ₀^N times a bounded factor; what remains of
    // the last normalized power contributes nothing at this weight.
    estimate
}

/// Row sums (right vector) and column sums (left vector) of a log matrix,
/// each shifted to a maximum of 0.
fn projector_vectors(m: &DMatrix<f64>) -> (DVector<f64>, DVector<f64>) {
    let n = m.nrows();
    let mut r = DVector::from_fn(n, |i, _| log_sum_exp(m.row(i).iter().copied()));
    let mut l = DVector::from_fn(n, |j, _| log_sum_exp(m.column(j).iter().copied()));
    let rmax = r.max();
    let lmax = l.max();
    r.add_scalar_mut(-rmax);
    l.add_scalar_mut(-lmax);
    (r, l)
}

fn max_abs_diff(a: &DVector<f64>, b: &DVector<f64>) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

/// `|A x − λ x|∞ / (λ |x|∞)` given `log(A x)`, `log x`, `log λ`.
fn relative_residual(log_ax: &DVector<f64>, log_x: &DVector<f64>, log_lambda: f64) -> f64 {
    let scale = log_x.max();
    log_ax
        .iter()
        .zip(log_x.iter())
        .map(|(&ax, &x)| ((ax - log_lambda - scale).exp() - (x - scale).exp()).abs())
        .fold(0.0, f64::max)
}

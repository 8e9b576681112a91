//! Oracle-backed self-check behind the `validate` subcommand.

use ising_emachine::emachine::{analyze_block_chain, DEFAULT_MERGE_TOLERANCE};
use ising_emachine::markov::{self, BlockChain, CONSISTENCY_TOLERANCE};
use ising_emachine::models::{self, NnParams, NnnParams};
use ising_emachine::oracle;
use ising_emachine::{Boundary, Hamiltonian, TransferSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub value: f64,
    pub tolerance: f64,
}

impl Check {
    pub fn passed(&self) -> bool {
        self.value <= self.tolerance
    }

    pub fn line(&self) -> String {
        format!(
            "{} {:<40} {:.3e} (tolerance {:.1e})",
            if self.passed() { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.tolerance
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Options {
    pub instances: usize,
    pub seed: u64,
    /// Perturbs every certified `P` before re-checking it.
    pub corrupt: bool,
}

struct Instance {
    h: Hamiltonian,
    ts: TransferSystem,
    chain: BlockChain,
}

fn random_instances(opts: &Options) -> Result<Vec<Instance>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut out = Vec::with_capacity(opts.instances);
    for k in 0..opts.instances {
        let beta = (rng.random_range(0.05f64.ln()..2f64.ln())).exp();
        let h = if k % 2 == 0 {
            models::nn_ising(&NnParams {
                j: rng.random_range(-1.5..1.5),
                b: rng.random_range(-3.0..3.0),
                beta,
            })?
        } else {
            models::nnn_ising(&NnnParams {
                j1: rng.random_range(-1.5..1.5),
                j2: rng.random_range(-1.5..1.5),
                b: rng.random_range(-3.0..3.0),
                beta,
            })?
        };
        let ts = TransferSystem::build(&h, beta)?;
        let chain = markov::solve_stochastic(&ts)?;
        out.push(Instance { h, ts, chain });
    }
    Ok(out)
}

fn corrupted(p: &ising_emachine::nalgebra::DMatrix<f64>) -> ising_emachine::nalgebra::DMatrix<f64> {
    let mut q = p.clone();
    let shift = 1e-4 * q[(0, 1)].min(q[(0, 0)]).max(1e-3);
    q[(0, 0)] += shift;
    q[(0, 1)] -= shift;
    q
}

pub fn run(opts: &Options) -> Result<Vec<Check>, CliError> {
    let instances = random_instances(opts)?;
    let mut checks = Vec::new();

    let mut local = 0.0f64;
    let mut repeat = 0.0f64;
    for beta in [0.1, 1.0, 10.0] {
        for j in [-1.5, 0.0, 1.5] {
            for b in [-3.0, 0.0, 3.0] {
                let params = NnParams { j, b, beta };
                let ts = TransferSystem::build(&models::nn_ising(&params)?, beta)?;
                let lc = markov::local_characteristics(&ts);
                let reference = models::nn_reference_values(&params);
                for l in 0..2 {
                    for m in 0..2 {
                        for n in 0..2 {
                            local =
                                local.max((lc.interior(l, m, n) - reference.local(l, m, n)).abs());
                        }
                    }
                }
                let p = markov::solve_stochastic(&ts)?.p().clone();
                repeat = repeat
                    .max((p[(1, 1)] - reference.up_given_up).abs())
                    .max((p[(0, 0)] - reference.down_given_down).abs());
            }
        }
    }
    checks.push(Check {
        name: "nn closed-form local characteristics",
        value: local,
        tolerance: 1e-12,
    });
    checks.push(Check {
        name: "nn closed-form repeat probabilities",
        value: repeat,
        tolerance: 1e-10,
    });

    let mut residual = 0.0f64;
    let mut rows = 0.0f64;
    let mut stationarity = 0.0f64;
    for inst in &instances {
        let lc = markov::local_characteristics(&inst.ts);
        let p = if opts.corrupt {
            corrupted(inst.chain.p())
        } else {
            inst.chain.p().clone()
        };
        residual = residual.max(markov::consistency_residual(&lc, &p).max_residual);
        for row in p.row_iter() {
            rows = rows.max((row.sum() - 1.0).abs());
        }
        let pi = inst.chain.pi();
        stationarity = stationarity.max((pi.transpose() * &p - pi.transpose()).amax());
    }
    checks.push(Check {
        name: "consistency residual",
        value: residual,
        tolerance: CONSISTENCY_TOLERANCE,
    });
    checks.push(Check {
        name: "row normalization",
        value: rows,
        tolerance: 1e-12,
    });
    checks.push(Check {
        name: "stationarity",
        value: stationarity,
        tolerance: 1e-12,
    });

    let mut quadratic = 0.0f64;
    let mut enumeration = 0.0f64;
    let mut first_block = 0.0f64;
    for inst in instances.iter().take(6) {
        let lc = markov::local_characteristics(&inst.ts);
        let solved = oracle::quadratic_system_solve(inst.h.blocks(), &lc)?;
        quadratic = quadratic.max((solved.p() - inst.chain.p()).amax());
        let ens = oracle::enumerate_gibbs(&inst.h, inst.ts.beta(), 6, Boundary::Open)?;
        let s = lc.size();
        for position in 1..5 {
            let c = oracle::conditional_from_enumeration(&ens, position)?;
            for j in 0..s {
                for i in 0..s {
                    for m in 0..s {
                        let got = c.triple(j, i, m).unwrap_or(f64::NAN);
                        enumeration = enumeration.max((got - lc.interior(j, i, m)).abs());
                    }
                }
            }
        }
        let c = oracle::conditional_from_enumeration(&ens, 0)?;
        for i in 0..s {
            for m in 0..s {
                let got = c.given_next(i, m).unwrap_or(f64::NAN);
                first_block = first_block.max((got - lc.first_block(i, m)).abs());
            }
        }
    }
    checks.push(Check {
        name: "quadratic oracle vs spectral P",
        value: quadratic,
        tolerance: 1e-8,
    });
    checks.push(Check {
        name: "enumeration vs local characteristics",
        value: enumeration,
        tolerance: 1e-12,
    });
    checks.push(Check {
        name: "enumeration vs first-block conditional",
        value: first_block,
        tolerance: 1e-12,
    });

    let mut aggregation = 0.0f64;
    let mut negative_e = 0.0f64;
    for inst in &instances {
        let a = analyze_block_chain(&inst.chain, DEFAULT_MERGE_TOLERANCE)?;
        let n = inst.h.range() as f64;
        aggregation = aggregation.max((a.metrics.h_mu - n * a.metrics.h_mu_spin).abs());
        negative_e = negative_e.max(-a.metrics.e_mu);
    }
    checks.push(Check {
        name: "entropy rate aggregation h = n h'",
        value: aggregation,
        tolerance: 1e-9,
    });
    checks.push(Check {
        name: "excess entropy negativity",
        value: negative_e,
        tolerance: 1e-12,
    });

    let mut z_score = 0.0f64;
    for (k, inst) in instances.iter().take(2).enumerate() {
        let a = analyze_block_chain(&inst.chain, DEFAULT_MERGE_TOLERANCE)?;
        let n = inst.h.range();
        let theta = inst.h.blocks().theta();
        let needed = oracle::SAMPLES_PER_CONTEXT * theta.pow(n as u32);
        let seq = oracle::sample_sequence(
            &inst.chain,
            needed.div_ceil(n),
            opts.seed.wrapping_add(k as u64),
        )?;
        let est = oracle::empirical_entropy_rate(&seq, n, theta)?;
        z_score = z_score.max((est.bits - a.metrics.h_mu_spin).abs() / est.std_error.max(1e-12));
    }
    checks.push(Check {
        name: "sampled entropy rate (standard errors)",
        value: z_score,
        tolerance: 3.0,
    });
    Ok(checks)
}

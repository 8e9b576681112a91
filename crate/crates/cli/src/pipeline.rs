//! Single-point evaluation and parameter sweeps.

use std::collections::BTreeMap;
use std::io::Write;

use ising_emachine::emachine::{self, MachineAnalysis, MachineMetrics, DEFAULT_MERGE_TOLERANCE};
use ising_emachine::markov::{self, CONSISTENCY_TOLERANCE};
use ising_emachine::models::{self, NnParams, NnnParams, PbrwParams};
use ising_emachine::{BlockChain, Hamiltonian, SpinAlphabet, TransferSystem};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{Config, ModelConfig, ModelKind, Range, Scale, SweepConfig};
use crate::error::{error_code, CliError};

pub type Params = BTreeMap<String, f64>;

fn get(params: &Params, name: &str, model: &str) -> Result<f64, CliError> {
    params
        .get(name)
        .copied()
        .ok_or_else(|| CliError::Usage(format!("parameter {name} is required for model {model}")))
}

/// Block chain and `log λ₀` for one parameter point.
pub struct Point {
    pub ts: TransferSystem,
    pub chain: BlockChain,
}

pub fn hamiltonian(model: &ModelConfig, params: &Params) -> Result<(Hamiltonian, f64), CliError> {
    let name = model.kind.name();
    let beta = |p: &Params| {
        if model.ground_state {
            Ok(ising_emachine::transfer::GROUND_STATE_BETA)
        } else {
            get(p, "beta", name)
        }
    };
    Ok(match &model.kind {
        ModelKind::Nn => {
            let nn = NnParams {
                j: get(params, "J", name)?,
                b: get(params, "B", name)?,
                beta: beta(params)?,
            };
            (models::nn_ising(&nn)?, nn.beta)
        }
        ModelKind::Nnn => {
            let nnn = NnnParams {
                j1: get(params, "J1", name)?,
                j2: get(params, "J2", name)?,
                b: get(params, "B", name)?,
                beta: beta(params)?,
            };
            (models::nnn_ising(&nnn)?, nnn.beta)
        }
        ModelKind::Pbrw => {
            let walk = PbrwParams {
                p: get(params, "p", name)?,
                r: get(params, "r", name)?,
            };
            let nn = if model.ground_state {
                models::pbrw_ground_couplings(&walk)?
            } else {
                models::pbrw_couplings(&walk)?
            };
            (models::nn_ising(&nn)?, nn.beta)
        }
        ModelKind::Custom { spins, couplings } => {
            let alphabet = SpinAlphabet::new(spins.clone())?;
            let h = Hamiltonian::new(alphabet, get(params, "B", name)?, couplings.clone())?;
            (h, beta(params)?)
        }
    })
}

pub fn build_point(model: &ModelConfig, params: &Params) -> Result<Point, CliError> {
    let (h, beta) = hamiltonian(model, params)?;
    let ts = TransferSystem::build(&h, beta)?;
    let chain = markov::solve_stochastic(&ts)?;
    Ok(Point { ts, chain })
}

/// Metrics document for `analyze`.
#[derive(Debug, Serialize)]
pub struct AnalysisDocument {
    pub config: Config,
    pub units: &'static str,
    pub log_lambda0: f64,
    pub metrics: MachineMetrics,
    pub n_classes: usize,
    pub max_residual: f64,
    pub block_classes: Vec<emachine::ClassMetrics>,
    pub spin_classes: Vec<emachine::ClassMetrics>,
}

pub fn units(nats: bool) -> &'static str {
    if nats {
        "nats"
    } else {
        "bits"
    }
}

pub fn entropy_factor(nats: bool) -> f64 {
    if nats {
        std::f64::consts::LN_2
    } else {
        1.0
    }
}

pub fn merge_tolerance(config: &Config) -> f64 {
    config
        .output
        .merge_tolerance
        .unwrap_or(DEFAULT_MERGE_TOLERANCE)
}

pub fn analyze(config: &Config) -> Result<(Point, MachineAnalysis), CliError> {
    let point = build_point(&config.model, &config.parameters)?;
    let analysis = emachine::analyze_block_chain(&point.chain, merge_tolerance(config))?;
    Ok((point, analysis))
}

pub fn analysis_document(config: &Config) -> Result<AnalysisDocument, CliError> {
    let (point, analysis) = analyze(config)?;
    let factor = entropy_factor(config.output.nats);
    let scale_class = |c: &emachine::ClassMetrics| emachine::ClassMetrics {
        c_mu: c.c_mu * factor,
        h_mu: c.h_mu * factor,
        e_mu: c.e_mu * factor,
        e_paper: c.e_paper * factor,
        ..c.clone()
    };
    Ok(AnalysisDocument {
        config: config.clone(),
        units: units(config.output.nats),
        log_lambda0: point.ts.log_lambda0(),
        metrics: analysis.metrics.scaled(factor),
        n_classes: analysis.n_classes(),
        max_residual: residual(&point.chain),
        block_classes: analysis.block_classes.iter().map(scale_class).collect(),
        spin_classes: analysis.spin_classes.iter().map(scale_class).collect(),
    })
}

fn residual(chain: &BlockChain) -> f64 {
    chain.consistency().map_or(f64::NAN, |c| c.max_residual)
}

/// One row of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRecord {
    pub index: usize,
    pub params: Vec<f64>,
    pub log_lambda0: f64,
    pub metrics: Option<MachineMetrics>,
    pub n_classes: usize,
    pub max_residual: f64,
    pub status: String,
}

impl SweepRecord {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }
}

pub fn evaluate_record(
    model: &ModelConfig,
    index: usize,
    params: &Params,
    names: &[&str],
    tol: f64,
) -> SweepRecord {
    let values: Vec<f64> = names
        .iter()
        .map(|n| match params.get(*n) {
            Some(&v) => v,
            None if *n == "beta" && model.ground_state => {
                ising_emachine::transfer::GROUND_STATE_BETA
            }
            None => f64::NAN,
        })
        .collect();
    let failed = |status: String| SweepRecord {
        index,
        params: values.clone(),
        log_lambda0: f64::NAN,
        metrics: None,
        n_classes: 0,
        max_residual: f64::NAN,
        status,
    };
    let point = match build_point(model, params) {
        Ok(p) => p,
        Err(CliError::Numerical(e)) => return failed(format!("error:{}", error_code(&e))),
        Err(e) => return failed(format!("error:{e}")),
    };
    let max_residual = residual(&point.chain);
    match emachine::analyze_block_chain(&point.chain, tol) {
        Ok(a) => SweepRecord {
            index,
            params: values,
            log_lambda0: point.ts.log_lambda0(),
            metrics: Some(a.metrics),
            n_classes: a.n_classes(),
            max_residual,
            status: if max_residual <= CONSISTENCY_TOLERANCE {
                "ok".into()
            } else {
                "residual_flagged".into()
            },
        },
        Err(e) => SweepRecord {
            log_lambda0: point.ts.log_lambda0(),
            max_residual,
            ..failed(format!("error:{}", error_code(&e)))
        },
    }
}

fn draw(rng: &mut ChaCha8Rng, range: &Range) -> f64 {
    let u: f64 = rng.random();
    match range.scale {
        Scale::Linear => range.lo + (range.hi - range.lo) * u,
        Scale::Log => (range.lo.ln() + (range.hi.ln() - range.lo.ln()) * u).exp(),
    }
}

fn check_interval(name: &str, lo: f64, hi: f64, scale: Scale) -> Result<(), CliError> {
    if !lo.is_finite() || !hi.is_finite() || lo > hi {
        return Err(CliError::Usage(format!(
            "invalid range for {name}: [{lo}, {hi}]"
        )));
    }
    if scale == Scale::Log && lo <= 0.0 {
        return Err(CliError::Usage(format!(
            "log range for {name} must be positive"
        )));
    }
    Ok(())
}

/// Parameter points of a sweep, in output order.
pub fn sweep_points(config: &Config, sweep: &SweepConfig) -> Result<Vec<Params>, CliError> {
    match sweep {
        SweepConfig::Random {
            points,
            seed,
            ranges,
        } => {
            let seed =
                seed.ok_or_else(|| CliError::Usage("--seed is required for random sweeps".into()))?;
            for r in ranges {
                check_interval(&r.name, r.lo, r.hi, r.scale)?;
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            Ok((0..*points)
                .map(|_| {
                    let mut p = config.parameters.clone();
                    for r in ranges {
                        p.insert(r.name.clone(), draw(&mut rng, r));
                    }
                    p
                })
                .collect())
        }
        SweepConfig::Grid { axes } => {
            let mut values = Vec::with_capacity(axes.len());
            for a in axes {
                check_interval(&a.name, a.lo, a.hi, a.scale)?;
                if a.count == 0 {
                    return Err(CliError::Usage(format!("axis {} needs count >= 1", a.name)));
                }
                let at = |k: usize| {
                    let t = if a.count == 1 {
                        0.0
                    } else {
                        k as f64 / (a.count - 1) as f64
                    };
                    match a.scale {
                        Scale::Linear => a.lo + (a.hi - a.lo) * t,
                        Scale::Log => (a.lo.ln() + (a.hi.ln() - a.lo.ln()) * t).exp(),
                    }
                };
                values.push((0..a.count).map(at).collect::<Vec<_>>());
            }
            let total: usize = values.iter().map(Vec::len).product();
            Ok((0..total)
                .map(|mut k| {
                    let mut p = config.parameters.clone();
                    for (a, vals) in axes.iter().zip(&values).rev() {
                        p.insert(a.name.clone(), vals[k % vals.len()]);
                        k /= vals.len();
                    }
                    p
                })
                .collect())
        }
    }
}

/// Evaluates every point in parallel; results come back in index order.
pub fn run_sweep(config: &Config, sweep: &SweepConfig) -> Result<Vec<SweepRecord>, CliError> {
    let points = sweep_points(config, sweep)?;
    let names = config.model.kind.parameter_names();
    if let Some(first) = points.first() {
        for n in names {
            if *n == "beta" && config.model.ground_state {
                continue;
            }
            get(first, n, config.model.kind.name())?;
        }
    }
    let tol = merge_tolerance(config);
    Ok(points
        .par_iter()
        .enumerate()
        .map(|(i, p)| evaluate_record(&config.model, i, p, names, tol))
        .collect())
}

pub const CSV_METRIC_COLUMNS: [&str; 14] = [
    "log_lambda0",
    "C_mu",
    "h_mu",
    "E_mu",
    "E_paper",
    "C_mu_spin",
    "h_mu_spin",
    "E_spin",
    "n_states",
    "n_classes",
    "max_residual",
    "status",
    "n_spin_states",
    "e_divergent",
];

pub fn write_csv<W: Write>(
    out: W,
    names: &[&str],
    records: &[SweepRecord],
    nats: bool,
) -> Result<(), CliError> {
    let factor = entropy_factor(nats);
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["index".to_string()];
    header.extend(names.iter().map(|s| s.to_string()));
    header.extend(CSV_METRIC_COLUMNS.iter().map(|s| s.to_string()));
    w.write_record(&header)?;
    for r in records {
        let mut row = vec![r.index.to_string()];
        row.extend(r.params.iter().map(|v| format!("{v:?}")));
        let m = r.metrics.map(|m| m.scaled(factor));
        let f = |g: fn(&MachineMetrics) -> f64| format!("{:?}", m.as_ref().map_or(f64::NAN, g));
        row.push(format!("{:?}", r.log_lambda0));
        row.push(f(|m| m.c_mu));
        row.push(f(|m| m.h_mu));
        row.push(f(|m| m.e_mu));
        row.push(f(|m| m.e_paper));
        row.push(f(|m| m.c_mu_spin));
        row.push(f(|m| m.h_mu_spin));
        row.push(f(|m| m.e_spin));
        row.push(m.map_or(0, |m| m.n_states).to_string());
        row.push(r.n_classes.to_string());
        row.push(format!("{:?}", r.max_residual));
        row.push(r.status.clone());
        row.push(m.map_or(0, |m| m.n_spin_states).to_string());
        row.push(m.is_some_and(|m| m.e_divergent).to_string());
        w.write_record(&row)?;
    }
    w.flush()?;
    Ok(())
}

//! Command-line surface and subcommand drivers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use ising_emachine::markov::{self, Stationary};
use ising_emachine::oracle;
use serde::Serialize;

use crate::config::{Config, ModelKind, SweepConfig};
use crate::error::CliError;
use crate::{dot, pipeline, validate};

#[derive(Debug, Parser)]
#[command(
    name = "ising-emachine",
    version,
    about = "Analytic epsilon-machines of finite-range spin chains"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Metrics for a single parameter point (JSON).
    Analyze(RunArgs),
    /// Metrics over a grid or random sample of points (CSV plus metadata).
    Sweep(RunArgs),
    /// Causal-state machine as Graphviz DOT.
    Machine(RunArgs),
    /// Monte Carlo spin sequence.
    Sample(SampleArgs),
    /// Oracle cross-checks with a pass/fail report.
    Validate(ValidateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum Preset {
    Nn,
    Nnn,
    Pbrw,
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// JSON configuration file.
    pub config: Option<PathBuf>,
    /// Model preset when no configuration file is given.
    #[arg(long, value_enum)]
    pub model: Option<Preset>,
    /// Parameter override, repeatable.
    #[arg(long = "param", value_name = "NAME=VALUE")]
    pub params: Vec<String>,
    /// Evaluate in the ground state.
    #[arg(long)]
    pub ground_state: bool,
    /// Seed for random sweeps.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of random sweep points.
    #[arg(long)]
    pub points: Option<usize>,
    /// Output path; stdout when absent.
    #[arg(long, short)]
    pub output: Option<PathBuf>,
    /// Report entropies in nats.
    #[arg(long)]
    pub nats: bool,
    /// Single-spin machine instead of the block machine.
    #[arg(long)]
    pub spin: bool,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub run: RunArgs,
    /// Number of spins to emit.
    #[arg(long, default_value_t = 1_000_000)]
    pub length: usize,
    /// Recurrent class to sample from when the chain is reducible.
    #[arg(long)]
    pub class: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ValidateArgs {
    /// Random instances to check.
    #[arg(long, default_value_t = 20)]
    pub points: usize,
    #[arg(long, default_value_t = 2024)]
    pub seed: u64,
    /// Perturb certified matrices to exercise the failure path.
    #[arg(long, hide = true)]
    pub corrupt: bool,
}

impl RunArgs {
    pub fn resolve(&self) -> Result<Config, CliError> {
        let mut config = match (&self.config, self.model) {
            (Some(path), _) => Config::load(path)?,
            (None, Some(preset)) => Config::for_model(match preset {
                Preset::Nn => ModelKind::Nn,
                Preset::Nnn => ModelKind::Nnn,
                Preset::Pbrw => ModelKind::Pbrw,
            }),
            (None, None) => {
                return Err(CliError::Usage(
                    "a configuration file or --model is required".into(),
                ))
            }
        };
        if self.config.is_some() {
            if let Some(preset) = self.model {
                let kind = match preset {
                    Preset::Nn => ModelKind::Nn,
                    Preset::Nnn => ModelKind::Nnn,
                    Preset::Pbrw => ModelKind::Pbrw,
                };
                config.model.kind = kind;
            }
        }
        config.set_params(&self.params)?;
        config.model.ground_state |= self.ground_state;
        config.output.nats |= self.nats;
        config.output.spin |= self.spin;
        if let Some(path) = &self.output {
            config.output.path = Some(path.clone());
        }
        Ok(config)
    }

    fn resolve_sweep(&self, config: &mut Config) -> SweepConfig {
        let mut sweep = config.sweep_or_default();
        if let SweepConfig::Random { points, seed, .. } = &mut sweep {
            if let Some(n) = self.points {
                *points = n;
            }
            if self.seed.is_some() {
                *seed = self.seed;
            }
        }
        config.sweep = Some(sweep.clone());
        sweep
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text)?,
        None => std::io::stdout().write_all(text.as_bytes())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct SweepMeta<'a> {
    config: &'a Config,
    rng: &'static str,
    points: usize,
    failed: usize,
    flagged: usize,
    units: &'static str,
    version: &'static str,
}

pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Analyze(args) => {
            let config = args.resolve()?;
            let doc = pipeline::analysis_document(&config)?;
            let text = serde_json::to_string_pretty(&doc)? + "\n";
            emit(config.output.path.as_deref(), &text)
        }
        Command::Sweep(args) => {
            let mut config = args.resolve()?;
            let sweep = args.resolve_sweep(&mut config);
            let records = pipeline::run_sweep(&config, &sweep)?;
            let names = config.model.kind.parameter_names();
            let mut buf = Vec::new();
            pipeline::write_csv(&mut buf, names, &records, config.output.nats)?;
            match &config.output.path {
                Some(path) => {
                    fs::write(path, &buf)?;
                    let meta = SweepMeta {
                        config: &config,
                        rng: oracle::RNG_NAME,
                        points: records.len(),
                        failed: records
                            .iter()
                            .filter(|r| r.status.starts_with("error"))
                            .count(),
                        flagged: records
                            .iter()
                            .filter(|r| r.status == "residual_flagged")
                            .count(),
                        units: pipeline::units(config.output.nats),
                        version: env!("CARGO_PKG_VERSION"),
                    };
                    let mut meta_path = path.clone().into_os_string();
                    meta_path.push(".meta.json");
                    fs::write(meta_path, serde_json::to_string_pretty(&meta)? + "\n")?;
                }
                None => std::io::stdout().write_all(&buf)?,
            }
            Ok(())
        }
        Command::Machine(args) => {
            let config = args.resolve()?;
            let (_, analysis) = pipeline::analyze(&config)?;
            let machine = if config.output.spin {
                &analysis.spin_machine
            } else {
                &analysis.block_machine
            };
            emit(config.output.path.as_deref(), &dot::render(machine))
        }
        Command::Sample(args) => {
            let config = args.run.resolve()?;
            let seed = args
                .run
                .seed
                .ok_or_else(|| CliError::Usage("--seed is required for sampling".into()))?;
            let point = pipeline::build_point(&config.model, &config.parameters)?;
            let range = point.chain.blocks().range();
            let blocks = args.length.div_ceil(range);
            let mut spins = match (markov::stationary(&point.chain)?, args.class) {
                (Stationary::Irreducible(_), _) => {
                    oracle::sample_sequence(&point.chain, blocks, seed)?
                }
                (Stationary::Reducible { .. }, Some(class)) => {
                    oracle::sample_sequence_in_class(&point.chain, class, blocks, seed)?
                }
                (Stationary::Reducible { classes, .. }, None) => {
                    return Err(ising_emachine::Error::Reducible {
                        classes: classes.len(),
                    }
                    .into())
                }
            };
            spins.truncate(args.length);
            let alphabet = point.chain.blocks().alphabet();
            let params: Vec<String> = config
                .parameters
                .iter()
                .map(|(k, v)| format!("{k}={v}"))
                .collect();
            let mut text = format!(
                "# model={} ground_state={} {}\n# seed={} rng={}\n# spins={} symbols={}\n",
                config.model.kind.name(),
                config.model.ground_state,
                params.join(" "),
                seed,
                oracle::RNG_NAME,
                spins.len(),
                (0..alphabet.len())
                    .map(|s| format!("{}:{}", alphabet.symbol_char(s), alphabet.value(s)))
                    .collect::<Vec<_>>()
                    .join(",")
            );
            text.extend(spins.iter().map(|&s| alphabet.symbol_char(s)));
            text.push('\n');
            emit(config.output.path.as_deref(), &text)
        }
        Command::Validate(args) => {
            let checks = validate::run(&validate::Options {
                instances: args.points.max(2),
                seed: args.seed,
                corrupt: args.corrupt,
            })?;
            for c in &checks {
                println!("{}", c.line());
            }
            let failed: Vec<&str> = checks
                .iter()
                .filter(|c| !c.passed())
                .map(|c| c.name)
                .collect();
            if failed.is_empty() {
                println!("all {} checks passed", checks.len());
                Ok(())
            } else {
                Err(CliError::Validation(failed.join(", ")))
            }
        }
    }
}

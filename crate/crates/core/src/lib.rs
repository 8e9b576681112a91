//! Analytic ε-machines for finite-range one-dimensional spin chains.
//!
//! The pipeline runs Hamiltonian → transfer matrix → local characteristics →
//! block stochastic matrix → causal states → information measures:
//!
//! ```
//! use ising_emachine::{models, transfer::TransferSystem, markov, emachine};
//!
//! let h = models::nn_ising(&models::NnParams { j: 0.5 * 3f64.ln(), b: 0.0, beta: 1.0 }).unwrap();
//! let ts = TransferSystem::build(&h, 1.0).unwrap();
//! let chain = markov::solve_stochastic(&ts).unwrap();
//! let analysis = emachine::analyze_block_chain(&chain, emachine::DEFAULT_MERGE_TOLERANCE).unwrap();
//! assert!((analysis.metrics.c_mu - 1.0).abs() < 1e-12);
//! ```

pub mod emachine;
pub mod error;
pub mod hamiltonian;
pub mod lattice;
pub mod logspace;
pub mod markov;
pub mod models;
pub mod oracle;
pub mod transfer;

pub use error::{Error, Result};
pub use hamiltonian::{Boundary, Hamiltonian};
pub use lattice::{BlockSpace, SpinAlphabet};
pub use markov::BlockChain;
pub use nalgebra;
pub use transfer::TransferSystem;

//! Fixed workloads shared by the criterion benches.

use ising_emachine::models::{self, NnParams, NnnParams};
use ising_emachine::{Hamiltonian, SpinAlphabet, TransferSystem};

pub fn nn() -> TransferSystem {
    let params = NnParams {
        j: 0.7,
        b: -0.4,
        beta: 1.3,
    };
    TransferSystem::build(&models::nn_ising(&params).unwrap(), params.beta).unwrap()
}

pub fn nnn() -> TransferSystem {
    let params = NnnParams {
        j1: -0.8,
        j2: 0.6,
        b: 0.9,
        beta: 0.7,
    };
    TransferSystem::build(&models::nnn_ising(&params).unwrap(), params.beta).unwrap()
}

/// Range 3 over binary spins: 8 blocks.
pub fn range_three() -> (Hamiltonian, TransferSystem) {
    let h = Hamiltonian::product_form(SpinAlphabet::binary(), 0.3, &[-0.9, 0.5, 0.2]).unwrap();
    let ts = TransferSystem::build(&h, 1.1).unwrap();
    (h, ts)
}

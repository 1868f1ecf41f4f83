//! Quantum algorithms for finance on an exact dense statevector simulator.
//!
//! The crate is organised bottom-up:
//!
//! - [`sv`]: statevector, gates, circuits and diagonal (Ising) observables.
//! - [`amp_est`]: Grover operator construction and QPE-based amplitude estimation.
//! - [`distributions`]: discretised normal distributions and their loader circuits.
//! - [`credit_risk`]: loss-CDF operator, value at risk by bisection, classical oracles.
//! - [`qubo`]: QUBO container, penalty folding, Ising conversion and problem builders.
//! - [`optim`] and [`variational`]: derivative-free optimizers, VQE and QAOA.
//! - [`admm`]: three-block ADMM heuristic for mixed-binary problems and auctions.
//! - [`qml`]: variational quantum classifier, QRAC encoding, datasets and baselines.

pub mod admm;
pub mod amp_est;
pub mod credit_risk;
pub mod distributions;
mod error;
pub mod optim;
pub mod qml;
pub mod qubo;
pub mod rng;
pub mod sv;
pub mod variational;

pub use error::{Error, Result};

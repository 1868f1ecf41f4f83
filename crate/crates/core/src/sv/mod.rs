//! Exact dense statevector simulation.
//!
//! Qubit 0 is the least significant bit of a basis index. Gates act in place
//! on a [`Statevector`]; a [`Circuit`] is an ordered list of [`GateOp`]s.

mod circuit;
mod gate;
mod observable;
mod state;

pub use circuit::Circuit;
pub use gate::{GateKind, GateOp};
pub use observable::IsingObservable;
pub use state::{Statevector, MAX_QUBITS};

pub use num_complex::Complex64;

/// Apply the inverse QFT to `register` of `state` (register[0] is the low bit).
pub fn inverse_qft(state: &mut Statevector, register: &[usize]) -> crate::Result<()> {
    let c = Circuit::inverse_qft(state.n_qubits(), register)?;
    state.apply_circuit(&c)
}

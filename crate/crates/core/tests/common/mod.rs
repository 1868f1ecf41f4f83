#![allow(dead_code)]

use qfin_core::sv::{Circuit, Complex64, Statevector};
use rand::Rng;

/// Column `j` is the circuit applied to basis state `|j⟩`.
pub fn dense_unitary(c: &Circuit) -> Vec<Vec<Complex64>> {
    let dim = 1 << c.n_qubits();
    let mut cols = Vec::with_capacity(dim);
    for j in 0..dim {
        let mut s = Statevector::basis(c.n_qubits(), j).unwrap();
        s.apply_circuit(c).unwrap();
        cols.push(s.amplitudes().to_vec());
    }
    cols
}

pub fn mat_vec(cols: &[Vec<Complex64>], v: &[Complex64]) -> Vec<Complex64> {
    let mut out = vec![Complex64::new(0.0, 0.0); v.len()];
    for (j, col) in cols.iter().enumerate() {
        for (i, a) in col.iter().enumerate() {
            out[i] += a * v[j];
        }
    }
    out
}

pub fn random_state(n: usize, rng: &mut impl Rng) -> Statevector {
    let amps = (0..1 << n)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    Statevector::from_amplitudes(amps).unwrap()
}

pub fn max_diff(a: &[Complex64], b: &[Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
}

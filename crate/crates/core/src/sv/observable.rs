use serde::{Deserialize, Serialize};

/// Diagonal observable `offset + Σ coeff · Π_{k∈support} Z_k`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct IsingObservable {
    pub terms: Vec<(Vec<usize>, f64)>,
    pub offset: f64,
}

impl IsingObservable {
    pub fn new(terms: Vec<(Vec<usize>, f64)>, offset: f64) -> Self {
        Self { terms, offset }
    }

    pub fn max_qubit(&self) -> Option<usize> {
        self.terms.iter().flat_map(|(s, _)| s.iter().copied()).max()
    }

    /// Smallest register that holds every support.
    pub fn n_qubits(&self) -> usize {
        self.max_qubit().map_or(0, |q| q + 1)
    }

    /// Energy of the basis state with index `z` (bit k is qubit k).
    pub fn energy_index(&self, z: usize) -> f64 {
        self.offset
            + self
                .terms
                .iter()
                .map(|(support, coeff)| {
                    let parity = support.iter().filter(|&&k| (z >> k) & 1 == 1).count() & 1;
                    if parity == 0 {
                        *coeff
                    } else {
                        -coeff
                    }
                })
                .sum::<f64>()
    }

    /// Energy of an explicit bitstring (`bits[k]` is qubit k).
    pub fn energy_bits(&self, bits: &[u8]) -> f64 {
        let z = bits.iter().enumerate().fold(0usize, |acc, (k, &b)| acc | (usize::from(b & 1) << k));
        self.energy_index(z)
    }

    /// Energies of all `2^n` basis states.
    pub fn diagonal(&self, n_qubits: usize) -> Vec<f64> {
        let masks: Vec<(usize, f64)> = self
            .terms
            .iter()
            .map(|(s, c)| (s.iter().fold(0usize, |m, &k| m | (1 << k)), *c))
            .collect();
        (0..1usize << n_qubits)
            .map(|z| {
                self.offset
                    + masks
                        .iter()
                        .map(|&(m, c)| if (z & m).count_ones() & 1 == 0 { c } else { -c })
                        .sum::<f64>()
            })
            .collect()
    }
}
